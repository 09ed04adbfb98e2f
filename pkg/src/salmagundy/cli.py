"""Command-line front end.

Exit codes: 0 success (valid input / game won / exploration clean),
1 violations or a lost game, 2 a cap or limit was hit, 3 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .board import Board, board_from_json, board_to_dot, board_to_json, validate_board
from .game import replay_trace
from .harness import (
    explore,
    gen_board,
    gen_scenario,
    play_game,
    scenario_to_dot,
    state_to_dot,
)
from .mephisto import CapError, NoValidBundle, Policy
from .scenario import scenario_from_json, scenario_to_json, validate_scenario

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_CAP = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    p = _Parser(prog="salmagundy", description=__doc__)
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--round-cap", type=int, default=None)
    p.add_argument(
        "--mephisto", default=None, help="canonical | random:<seed> | adversarial"
    )
    p.add_argument("--max-new-nodes", type=int, default=None)
    p.add_argument("--max-order-steps", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[], help="validate a board or scenario file")
    v.add_argument("file")

    g = sub.add_parser("gen", help="generate a board or scenario")
    g.add_argument("what", choices=["board", "scenario"])
    g.add_argument("--max-nodes", type=int, default=8)
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--board", help="board file for gen scenario")
    g.add_argument("--d", type=int, default=None)
    g.add_argument("--B", type=int, default=None)
    g.add_argument("--jib-count", type=int, default=None)
    g.add_argument("--out", help="write here instead of stdout")

    pl = sub.add_parser("play", help="play one game on a scenario")
    pl.add_argument("--scenario", help="scenario file (default: generated from --seed)")
    pl.add_argument("--trace", help="write the NDJSON trace here")

    e = sub.add_parser("explore", help="try every capped bundle against the strategy")
    e.add_argument("--scenario", help="scenario file (default: generated from --seed)")
    e.add_argument("--depth-cap", type=int, default=50)

    x = sub.add_parser("export", help="export DOT")
    x.add_argument("what", choices=["dot"])
    x.add_argument("--scenario", help="scenario file")
    x.add_argument("--board", help="board file")

    r = sub.add_parser("replay", help="re-validate a recorded trace")
    r.add_argument("file")
    return p


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    try:
        with open(args.config) as fh:
            conf = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(_usage(f"cannot read config {args.config}: {exc}"))
    for key in ("seed", "round_cap", "mephisto", "max_new_nodes", "max_order_steps"):
        if getattr(args, key, None) is None and key in conf:
            setattr(args, key, conf[key])


def _usage(message: str) -> int:
    sys.stderr.write(f"error: {message}\n")
    return EXIT_USAGE


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(_usage(f"cannot read {path}: {exc}"))


def _load_scenario(path: str):
    data = _load_json(path)
    try:
        return scenario_from_json(data)
    except ValueError as exc:
        raise SystemExit(_usage(f"bad scenario in {path}: {exc}"))


def _load_board(path: str) -> Board:
    data = _load_json(path)
    try:
        return board_from_json(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise SystemExit(_usage(f"bad board in {path}: {exc}"))


def _policy(args: argparse.Namespace) -> Policy:
    text = args.mephisto or "canonical"
    try:
        return Policy.parse(
            text,
            max_new_nodes=args.max_new_nodes,
            max_order_steps=(
                args.max_order_steps if args.max_order_steps is not None else 2
            ),
        )
    except ValueError as exc:
        raise SystemExit(_usage(str(exc)))


def _default_scenario(args: argparse.Namespace):
    seed = args.seed if args.seed is not None else 0
    return gen_scenario(seed)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_validate(args) -> int:
    data = _load_json(args.file)
    if "d" in data:
        try:
            c = scenario_from_json(data)
        except ValueError as exc:
            raise SystemExit(_usage(f"bad scenario in {args.file}: {exc}"))
        violations = validate_scenario(c)
        kind = "scenario"
    else:
        try:
            b = board_from_json(data)
        except (ValueError, KeyError, TypeError) as exc:
            raise SystemExit(_usage(f"bad board in {args.file}: {exc}"))
        violations = validate_board(b)
        kind = "board"
    if violations:
        for v in violations:
            sys.stderr.write(f"{v}\n")
        return EXIT_VIOLATIONS
    print(f"{kind} ok")
    return EXIT_OK


def _cmd_gen(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.what == "board":
        b = gen_board(seed, max_nodes=args.max_nodes, n=args.n)
        _emit(json.dumps(board_to_json(b), indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    board = _load_board(args.board) if args.board else None
    c = gen_scenario(seed, board=board, d=args.d, B=args.B, jib_count=args.jib_count)
    _emit(json.dumps(scenario_to_json(c), indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def _cmd_play(args) -> int:
    scenario = _load_scenario(args.scenario) if args.scenario else _default_scenario(args)
    policy = _policy(args)
    round_cap = args.round_cap if args.round_cap is not None else 10_000
    result = play_game(scenario, policy, round_cap=round_cap)
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("\n".join(result.trace) + "\n")
    print(
        f"{'won' if result.won else 'not won'} in {result.rounds} rounds "
        f"({result.blowups} blowups); strict={str(result.strict).lower()}"
    )
    if not result.won:
        if result.note:
            sys.stderr.write(result.note + "\n")
        return EXIT_CAP if "cap" in result.note else EXIT_VIOLATIONS
    return EXIT_OK


def _cmd_explore(args) -> int:
    scenario = _load_scenario(args.scenario) if args.scenario else _default_scenario(args)
    report = explore(
        scenario,
        max_new_nodes=args.max_new_nodes,
        max_order_steps=(
            args.max_order_steps if args.max_order_steps is not None else 2
        ),
        depth_cap=args.depth_cap,
    )
    print(
        f"all_won={str(report.all_won).lower()} branches={report.branch_count} "
        f"leaves={report.leaf_count} wins={report.win_count} "
        f"max_depth={report.max_depth}"
    )
    if report.all_won:
        return EXIT_OK
    if report.counterexample:
        sys.stderr.write("\n".join(report.counterexample) + "\n")
    return EXIT_CAP if report.max_depth >= args.depth_cap else EXIT_VIOLATIONS


def _cmd_export(args) -> int:
    if args.scenario:
        c = _load_scenario(args.scenario)
        sys.stdout.write(scenario_to_dot(c))
        return EXIT_OK
    if args.board:
        b = _load_board(args.board)
        sys.stdout.write(board_to_dot(b))
        return EXIT_OK
    raise SystemExit(_usage("export dot needs --scenario or --board"))


def _cmd_replay(args) -> int:
    try:
        with open(args.file) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise SystemExit(_usage(f"cannot read {args.file}: {exc}"))
    try:
        state = replay_trace(lines)
    except ValueError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_VIOLATIONS
    print(f"replayed {state.round_no} rounds; won={str(state.won).lower()}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    _apply_config(args)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "play":
            return _cmd_play(args)
        if args.command == "explore":
            return _cmd_explore(args)
        if args.command == "export":
            return _cmd_export(args)
        if args.command == "replay":
            return _cmd_replay(args)
        return _usage(f"unknown command {args.command!r}")
    except CapError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_CAP
    except NoValidBundle as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_VIOLATIONS


if __name__ == "__main__":
    raise SystemExit(main())
