"""Command-line entry point: solve, sweep, simulate, analyze, serve, replay.

Every run is deterministic given its flags; all randomness flows from
--seed.  A JSON config file may supply any flag (keys use underscores);
explicit flags win.  Set DISTLAB_LOG=debug|info|warning to control log
verbosity.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import analysis
from .equilibrium import (
    alpha_grid,
    render_region_chart,
    solve,
    sweep_alpha,
)
from .machine import replay_log
from .model import GameParams, builtin_network
from .policies import (
    AgentPolicy,
    always_distance,
    logit_response,
    never_distance,
    static_equilibrium,
)
from .service import ServiceConfig
from .session_log import Part, SessionLog, decisions_to_csv
from .simulation import SessionConfig, replay_session, run_session_sim

DEFAULT_POLICY_SPEC = "logit:0.5:1:0:0.3"


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def parse_policy(spec: str) -> AgentPolicy:
    """always | never | static[:index] | logit:prec[:risk[:altruism[:belief]]]"""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "always":
        return always_distance()
    if kind == "never":
        return never_distance()
    if kind == "static":
        return static_equilibrium(int(parts[1]) if len(parts) > 1 else 0)
    if kind == "logit":
        if len(parts) < 2:
            raise ValueError("logit policy needs a precision, e.g. logit:0.5")
        numbers = [float(p) if p else None for p in parts[1:5]]
        numbers += [None] * (4 - len(numbers))
        precision, risk, altruism, belief = numbers
        return logit_response(
            precision,
            risk_exponent=1.0 if risk is None else risk,
            altruism=0.0 if altruism is None else altruism,
            belief=0.0 if belief is None else belief,
        )
    raise ValueError(f"unknown policy spec {spec!r}")


def parse_policies(spec: str, seats: int) -> list[AgentPolicy]:
    entries = [s.strip() for s in spec.split(",") if s.strip()]
    if len(entries) == 1:
        entries = entries * seats
    if len(entries) != seats:
        raise ValueError(f"need 1 or {seats} policies, got {len(entries)}")
    return [parse_policy(e) for e in entries]


def _game_params(args) -> GameParams:
    return GameParams(
        b=args.b, c=args.c, gamma=args.gamma, alpha=args.alpha, fine=args.fine
    )


def _add_game_flags(parser, alpha_default=0.65, fine_default=0.0) -> None:
    parser.add_argument("--network", default="star", choices=["star", "complete"])
    parser.add_argument("--alpha", type=float, default=alpha_default)
    parser.add_argument("--fine", type=float, default=fine_default)
    parser.add_argument("--b", type=float, default=100.0)
    parser.add_argument("--c", type=float, default=35.0)
    parser.add_argument("--gamma", type=float, default=0.5)


def cmd_solve(args) -> int:
    net = builtin_network(args.network)
    report = solve(net, _game_params(args))
    doc = report.to_json_dict()
    if args.json:
        _write_text(Path(args.json), json.dumps(doc, indent=2, sort_keys=True))
    print(f"network={args.network} alpha={args.alpha:g} fine={args.fine:g}")
    print("equilibria:")
    for entry in doc["equilibria"]:
        nodes = ",".join(str(v) for v in entry["distancing_nodes"]) or "-"
        print(
            f"  {entry['pattern']:>8}  nodes=[{nodes}]"
            f"  welfare={entry['welfare']:.2f}"
        )
    if not doc["equilibria"]:
        print("  (none)")
    print("efficient:")
    for entry in doc["efficient"]:
        nodes = ",".join(str(v) for v in entry["distancing_nodes"]) or "-"
        print(
            f"  {entry['pattern']:>8}  nodes=[{nodes}]"
            f"  welfare={entry['welfare']:.2f}"
        )
    return 0


def cmd_sweep(args) -> int:
    net = builtin_network(args.network)
    grid = alpha_grid(args.step)
    table = sweep_alpha(net, _game_params(args), grid, network_name=args.network)
    if args.csv:
        _write_text(Path(args.csv), table.to_csv())
    if args.json:
        _write_text(
            Path(args.json),
            json.dumps(table.to_json_dict(), indent=2, sort_keys=True),
        )
    if not args.no_chart:
        print(render_region_chart(table))
        print()
    print("boundaries (midpoints between adjacent grid cells):")
    for boundary in table.boundaries:
        print(
            f"  {boundary.kind:>11} alpha={boundary.alpha:.4f}: "
            f"{boundary.before} -> {boundary.after}"
        )
    if not table.boundaries:
        print("  (none)")
    return 0


def cmd_simulate(args) -> int:
    out_dir = Path(args.out_dir)
    config = SessionConfig(
        network_name=args.network,
        alpha=args.alpha,
        intervention=args.intervention,
        b=args.b,
        c=args.c,
        gamma=args.gamma,
        fine=args.fine if args.fine > 0 else 15.0,
    )
    policies = parse_policies(args.policies, config.network().node_count)
    logs = []
    for k in range(args.sessions):
        seed = args.seed + k
        log = run_session_sim(config, policies, seed=seed)
        path = out_dir / f"session-{seed}.jsonl"
        out_dir.mkdir(parents=True, exist_ok=True)
        log.write_jsonl(path)
        logs.append(log)
        print(f"wrote {path}")
    csv_path = out_dir / "decisions.csv"
    _write_text(csv_path, decisions_to_csv(logs))
    print(f"wrote {csv_path}")
    return 0


def _load_logs(paths: list[str]) -> list[SessionLog]:
    files: list[Path] = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(path.glob("*.jsonl")))
        else:
            files.append(path)
    if not files:
        raise ValueError("no session logs found")
    return [SessionLog.read_jsonl(f) for f in files]


def cmd_analyze(args) -> int:
    logs = _load_logs(args.logs)
    panel = analysis.panel_from_logs(logs)
    rows = analysis.standard_battery(panel)
    report = {
        "sessions": len(logs),
        "subjects": len(panel.subjects),
        "battery": [row.to_json_dict() for row in rows],
        "breaks": {},
        "convergence": {},
    }
    print(analysis.battery_table(rows))
    print()
    by_treatment: dict[str, list] = {}
    for subject in panel.subjects:
        by_treatment.setdefault(subject.treatment.label(), []).append(subject)
    for label, subjects in sorted(by_treatment.items()):
        sub_panel = analysis.DecisionPanel(
            tuple(subjects), panel.rounds_per_part
        )
        series = analysis.per_round_mean_series(sub_panel)
        result = analysis.sup_wald_break(
            series, n_permutations=args.permutations
        )
        report["breaks"][label] = {
            "break_round": result.break_round,
            "statistic": None
            if result.statistic != result.statistic
            else float(result.statistic),
            "p_value": result.p_value,
        }
        stat = (
            "inf" if result.statistic == float("inf") else f"{result.statistic:.2f}"
        )
        print(
            f"break[{label}]: round={result.break_round}"
            f" wald={stat} p={result.p_value:.4g}"
        )
        conv = analysis.convergence_report(sub_panel)
        shares = {
            part.value: conv.share_converged_by_round(part)
            for part in (Part.BASELINE, Part.INTERVENTION)
        }
        report["convergence"][label] = {
            part: list(values) for part, values in shares.items()
        }
        print(
            f"converged by round 11 [{label}]:"
            f" baseline={shares['baseline'][10]:.0%}"
            f" intervention={shares['intervention'][10]:.0%}"
        )
    if args.json:
        _write_text(Path(args.json), json.dumps(report, indent=2, sort_keys=True))
        print(f"wrote {args.json}")
    return 0


def cmd_serve(args) -> int:
    session = SessionConfig(
        network_name=args.network,
        alpha=args.alpha,
        intervention=args.intervention,
        fine=args.fine if args.fine > 0 else 15.0,
    )
    policies = (
        parse_policies(args.bot_policy, args.bots) if args.bots else []
    )
    config = ServiceConfig(
        session=session,
        bot_policies=policies,
        seed=args.seed,
        log_dir=Path(args.log_dir) if args.log_dir else None,
    )
    from .service import serve as run_service

    run_service(args.host, args.port, config)
    return 0


def cmd_replay(args) -> int:
    text = Path(args.log).read_text()
    probe = SessionLog.from_jsonl(text)
    server_side = any(
        e.get("event") in ("timer_fired", "client_message") for e in probe.events
    )
    if server_side:
        machine = replay_log(text)
        log = machine.log
        state = machine.phase.value
    else:
        log = replay_session(probe)
        state = "finished" if log.is_complete() else "incomplete"
    print(f"replayed {args.log}: state={state}, events={len(log.events)}")
    payment = log.payment_event()
    if payment:
        for entry in payment["seats"]:
            print(
                f"  seat {entry['seat']}: total=${entry['total']:.2f}"
                f" (bonuses {entry['part_bonus']},"
                f" disqualified={entry['disqualified']})"
            )
    if args.json:
        _write_text(
            Path(args.json),
            json.dumps(
                payment if payment else {"state": state}, indent=2, sort_keys=True
            ),
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distlab",
        description="Networked social-distancing game laboratory.",
    )
    parser.add_argument(
        "--config",
        help="JSON file supplying defaults for any flag (underscored keys)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "solve",
        help="enumerate equilibria and efficient profiles",
        epilog="example: distlab solve --network star --alpha 0.65",
    )
    _add_game_flags(p)
    p.add_argument("--json", help="write the report as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser(
        "sweep",
        help="sweep the contagion rate and chart the regions",
        epilog="example: distlab sweep --network star --step 0.005",
    )
    _add_game_flags(p)
    p.add_argument("--step", type=float, default=0.005)
    p.add_argument("--csv", help="write the region table as CSV")
    p.add_argument("--json", help="write the region table as JSON")
    p.add_argument("--no-chart", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "simulate",
        help="run seeded bot sessions and export logs + decision CSV",
        epilog=(
            "example: distlab simulate --seed 7 --network star --alpha 0.65"
            " --intervention fine --out-dir runs/"
        ),
    )
    _add_game_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--intervention", default="fine", choices=["fine", "nudge"])
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--policies", default=DEFAULT_POLICY_SPEC)
    p.add_argument("--out-dir", default="runs")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser(
        "analyze",
        help="battery of tests, break detection, convergence over logs",
        epilog="example: distlab analyze runs/ --json report.json",
    )
    p.add_argument("logs", nargs="+", help="JSONL files or directories")
    p.add_argument("--json", help="write the full report as JSON")
    p.add_argument("--permutations", type=int, default=999)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser(
        "serve",
        help="run the live multiplayer session service",
        epilog=(
            "example: distlab serve --port 8765 --bots 4"
            " --network star --alpha 0.65 --intervention fine"
        ),
    )
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--network", default="star", choices=["star", "complete"])
    p.add_argument("--alpha", type=float, default=0.65)
    p.add_argument("--fine", type=float, default=15.0)
    p.add_argument("--intervention", default="fine", choices=["fine", "nudge"])
    p.add_argument("--bots", type=int, default=4)
    p.add_argument("--bot-policy", default=DEFAULT_POLICY_SPEC)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--log-dir", default="session-logs")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser(
        "replay",
        help="rebuild a session from its log and print the payments",
        epilog="example: distlab replay --log runs/session-7.jsonl",
    )
    p.add_argument("--log", required=True)
    p.add_argument("--json", help="write the payment summary as JSON")
    p.set_defaults(func=cmd_replay)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    try:
        path = argv[idx + 1]
    except IndexError:
        parser.error("--config needs a file path")
    defaults = json.loads(Path(path).read_text())
    if not isinstance(defaults, dict):
        parser.error("--config file must hold a JSON object")
    for action in parser._subparsers._group_actions[0].choices.values():
        known = {a.dest for a in action._actions}
        action.set_defaults(
            **{k: v for k, v in defaults.items() if k in known}
        )
    return argv[:idx] + argv[idx + 2 :]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    level = os.environ.get("DISTLAB_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    argv = _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
