"""Scenarios: factors, the nine validity checks, predicates, JSON."""

from fractions import Fraction

import pytest

from salmagundy.board import Board
from salmagundy.harness import gen_scenario
from salmagundy.scenario import (
    FactorSet,
    MonomialFactor,
    Scenario,
    admissible_centers,
    complete_factor,
    extend_factor,
    factor_from_json,
    factor_to_json,
    is_monomial,
    is_resolved,
    is_tight,
    scenario_from_json,
    scenario_to_json,
    validate_scenario,
    zero_factor,
)
from salmagundy.values import INF


def _issues(c):
    return {v.issue for v in validate_scenario(c)}


def _remake(c, **kw):
    fields = dict(
        board=c.board, d=c.d, B=c.B, H=c.H, S=c.S, T=c.T, ord=dict(c.ord), M=c.M
    )
    fields.update(kw)
    return Scenario.make(**fields)


# ---- factors ----------------------------------------------------------------


def test_factor_of_normalizes_and_sorts():
    m = MonomialFactor.of({"b": 1, "a": Fraction(1, 2)})
    assert m.weights == (("a", Fraction(1, 2)), ("b", Fraction(1)))
    assert m.domain == frozenset({"a", "b"})
    assert m.weight("b") == 1
    with pytest.raises(KeyError):
        m.weight("c")
    assert m.as_dict() == {"a": Fraction(1, 2), "b": Fraction(1)}


def test_factor_dominates_pointwise():
    lo = MonomialFactor.of({"a": 1, "b": 0})
    hi = MonomialFactor.of({"a": 1, "b": 2})
    top = MonomialFactor.of({"a": INF, "b": 2})
    assert hi.dominates(lo) and not lo.dominates(hi)
    assert top.dominates(hi) and not hi.dominates(top)
    assert hi.dominates(hi)
    assert zero_factor(["a", "b"]) == MonomialFactor.of({"a": 0, "b": 0})


def test_factor_set_prunes_to_antichain():
    lo = MonomialFactor.of({"a": 1, "b": 0})
    hi = MonomialFactor.of({"a": 1, "b": 2})
    side = MonomialFactor.of({"a": 0, "b": 3})
    fs = FactorSet.of([lo, hi, hi, side])
    assert set(fs.generators) == {hi, side}
    assert fs.contains(lo)
    assert fs.contains(MonomialFactor.of({"a": 0, "b": 1}))
    assert not fs.contains(MonomialFactor.of({"a": 2, "b": 0}))


def test_factor_set_max_sum_over():
    fs = FactorSet.of(
        [MonomialFactor.of({"a": 1, "b": 2}), MonomialFactor.of({"a": 3, "b": 0})]
    )
    assert fs.max_sum_over([]) == 0
    assert fs.max_sum_over(["a"]) == 3
    assert fs.max_sum_over(["a", "b"]) == 3
    assert fs.max_sum_over(["b"]) == 2
    uncapped = FactorSet.of([MonomialFactor.of({"a": INF, "b": 0})])
    assert uncapped.max_sum_over(["a", "b"]) is INF


def test_extend_factor_sums_jibs_above(crossing_scenario):
    (g,) = crossing_scenario.M.generators
    assert extend_factor(crossing_scenario, g, "s") == Fraction(13, 10)
    assert extend_factor(crossing_scenario, g, "h1") == Fraction(3, 5)
    assert extend_factor(crossing_scenario, g, "w") == 0
    with pytest.raises(KeyError):
        extend_factor(crossing_scenario, g, "nope")


# ---- structural checks ------------------------------------------------------


def test_fixture_scenarios_are_valid(chain_scenario, crossing_scenario, blown_chain_response):
    assert validate_scenario(chain_scenario) == []
    assert validate_scenario(crossing_scenario) == []
    assert validate_scenario(blown_chain_response) == []


def test_structure_bad_budget(chain_scenario):
    assert _issues(_remake(chain_scenario, B=0)) == {"structure"}


def test_structure_d_out_of_range(chain_scenario):
    assert "structure" in _issues(_remake(chain_scenario, d=5))


def test_structure_unknown_nodes(chain_scenario):
    bad = _remake(chain_scenario, T=chain_scenario.T | {"ghost"})
    assert _issues(bad) == {"structure"}


def test_structure_ord_domain_mismatch(chain_scenario):
    assert _issues(_remake(chain_scenario, ord={})) == {"structure"}


def test_structure_ord_granularity(crossing_scenario):
    bad = _remake(crossing_scenario, ord={"s": Fraction(1, 3)})
    assert "structure" in _issues(bad)
    worse = _remake(crossing_scenario, ord={"s": Fraction(-1, 10)})
    assert "structure" in _issues(worse)


# ---- the nine numbered checks, one targeted mutant each ---------------------


def test_issue_1_jib_dimension(crossing_board):
    c = Scenario.make(
        crossing_board, d=2, B=1, H={"s"}, S=[], T={"w"},
        ord={}, M=[zero_factor({"s"})],
    )
    assert _issues(c) == {1}


def test_issue_2_singular_set_not_down_closed(chain_board):
    c = Scenario.make(
        chain_board, d=1, B=1, H=[], S={"a"}, T={"p", "a", "w"},
        ord={"a": INF}, M=[zero_factor([])],
    )
    assert _issues(c) == {2}


def test_issue_3_maximal_infinite_order_dim(chain_scenario):
    c = _remake(chain_scenario, ord={"p": INF})
    assert _issues(c) == {3}


def test_issue_3_jib_free_needs_transversal(chain_scenario):
    c = _remake(chain_scenario, d=0, ord={"p": INF}, T={"a", "w"})
    assert 3 in _issues(c)


def test_issue_4_dim_exceeds_d(chain_board):
    c = Scenario.make(
        chain_board, d=0, B=1, H=[], S={"p", "a"}, T={"p", "a", "w"},
        ord={"p": INF, "a": 1}, M=[zero_factor([])],
    )
    assert 4 in _issues(c)


def test_issue_4_top_dim_singular_must_be_uncapped(chain_scenario):
    c = _remake(chain_scenario, d=0, ord={"p": 1})
    assert _issues(c) == {4}


def test_issue_5_too_many_jibs_above(crossing_scenario):
    c = _remake(crossing_scenario, d=1, ord={"s": Fraction(1, 2)})
    assert 5 in _issues(c)


def test_issue_5_forced_transversality(crossing_scenario):
    c = _remake(crossing_scenario, T={"h1", "h2", "w"})
    assert _issues(c) == {5}


def test_issue_6_order_below_factor(crossing_scenario):
    c = _remake(crossing_scenario, ord={"s": Fraction(1, 2)})
    assert _issues(c) == {6}


def test_issue_7_empty_factor_set(crossing_scenario):
    c = _remake(crossing_scenario, M=FactorSet(()))
    assert _issues(c) == {7}


def test_issue_7_domain_mismatch(crossing_scenario):
    c = _remake(crossing_scenario, M=[zero_factor({"h1"})])
    assert _issues(c) == {7}


def test_issue_7_negative_weight(crossing_scenario):
    c = _remake(crossing_scenario, M=FactorSet((
        MonomialFactor.of({"h1": Fraction(-1), "h2": 0}),
    )))
    assert _issues(c) == {7}


def test_issue_7_generators_not_an_antichain(crossing_scenario):
    g1 = MonomialFactor.of({"h1": Fraction(1, 10), "h2": 0})
    g2 = zero_factor({"h1", "h2"})
    c = _remake(crossing_scenario, M=FactorSet((g1, g2)))
    assert _issues(c) == {7}


def test_issue_8_residual_order_increases(chain_board):
    good = Scenario.make(
        chain_board, d=1, B=1, H=[], S={"p", "a"}, T={"p", "a", "w"},
        ord={"p": INF, "a": INF}, M=[zero_factor([])],
    )
    assert validate_scenario(good) == []
    bad = _remake(good, ord={"p": 2, "a": INF})
    assert _issues(bad) == {8}


def test_issue_9_heavy_jib_set_without_witness(crossing_scenario):
    c = _remake(crossing_scenario, M=[MonomialFactor.of({"h1": 1, "h2": 0})])
    assert _issues(c) == {9}


# ---- predicates -------------------------------------------------------------


def test_tight_resolved_monomial(chain_scenario, crossing_scenario, blown_chain_response):
    assert not is_tight(chain_scenario)
    assert is_tight(blown_chain_response)
    assert not is_resolved(chain_scenario)
    assert is_resolved(_remake(chain_scenario, S=[], ord={}))
    assert is_monomial(crossing_scenario)
    assert complete_factor(crossing_scenario) == crossing_scenario.M.generators[0]
    assert not is_monomial(chain_scenario)


def test_complete_factor_on_resolved_scenario(crossing_scenario):
    done = _remake(crossing_scenario, S=[], ord={})
    assert complete_factor(done) == crossing_scenario.M.generators[-1]


def test_admissible_centers(chain_scenario, crossing_scenario):
    assert admissible_centers(chain_scenario) == frozenset({"p"})
    first = admissible_centers(crossing_scenario)
    assert first == frozenset({"s"})
    assert admissible_centers(crossing_scenario) is first


def test_admissible_centers_remote_nodes(crossing_board):
    # With nothing singular below them, side nodes become legal centers.
    c = Scenario.make(
        crossing_board, d=2, B=1, H={"h1", "h2"}, S=[], T={"s", "h1", "h2", "w"},
        ord={}, M=[zero_factor({"h1", "h2"})],
    )
    assert admissible_centers(c) == frozenset({"s", "h1", "h2"})


# ---- generated scenarios stay valid -----------------------------------------


def test_generated_scenarios_are_valid():
    for seed in range(40):
        c = gen_scenario(seed)
        assert validate_scenario(c) == [], f"seed {seed}"


# ---- serialization ----------------------------------------------------------


def test_factor_json_roundtrip():
    m = MonomialFactor.of({"a": Fraction(3, 7), "b": INF, "c": 0})
    assert factor_from_json(factor_to_json(m)) == m


def test_scenario_json_roundtrip():
    for seed in range(25):
        c = gen_scenario(seed)
        assert scenario_from_json(scenario_to_json(c)) == c


def test_scenario_json_board_override(crossing_scenario):
    data = scenario_to_json(crossing_scenario)
    del data["board"]
    data["board"] = None
    c = scenario_from_json(data, board=crossing_scenario.board)
    assert c == crossing_scenario


def test_scenario_json_rejects_malformed():
    with pytest.raises(ValueError):
        scenario_from_json({"d": 1})
