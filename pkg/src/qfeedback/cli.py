"""Command-line entry point.

Exit status: 0 on success, 1 on usage or configuration errors, 2 on
runtime errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .cloning import monte_carlo_copy_fidelity, optimal_fidelity, MAX_CLONES
from .config import SEED_ENV, ConfigError, LoopConfig, complex_to_json, parse_state
from .control import export_trajectory, format_trajectory, run_clone_loop, run_teleport_scenario
from .core import PureState, QuantumStateError, RngStream
from .recognition import gate_signal
from .teleport import BellOutcome, ClassicalChannel, teleport

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _default_seed(flag):
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qfeedback", description="Quantum feedback-control simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_ in (("teleport-loop", "run a teleportation feedback scenario"),
                        ("clone-loop", "run a cloning feedback scenario")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if name == "clone-loop":
            p.add_argument("--open-loop", action="store_true",
                           help="disconnect the actuator (baseline run)")

    p = sub.add_parser("teleport-once", help="teleport a single qubit and print the report")
    for flag in ("--alpha-re", "--alpha-im", "--beta-re", "--beta-im"):
        p.add_argument(flag, type=float, default=0.0)
    p.add_argument("--seed", type=int)
    p.add_argument("--delay", type=int, default=0)
    p.add_argument("--outcome", choices=[o.name for o in BellOutcome],
                   help="force this Bell outcome instead of sampling")

    p = sub.add_parser("clone-fidelity", help="Monte-Carlo per-copy cloner fidelity")
    p.add_argument("--k", type=int, required=True, help="total number of copies")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("recognize", help="run the recognizer on a JSON list of states")
    p.add_argument("--states", required=True, help="JSON list of amplitude lists")
    p.add_argument("--d0", type=float, required=True)
    p.add_argument("--mode", choices=("oracle", "measured"), default="oracle")
    p.add_argument("--seed", type=int)
    return parser


def _run_loop(args) -> int:
    cfg = LoopConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    scenario = "teleport" if args.command == "teleport-loop" else "clone"
    cfg.validate(scenario=scenario)
    if scenario == "teleport":
        records = run_teleport_scenario(cfg)
    else:
        records = run_clone_loop(cfg, feedback=not args.open_loop)
    if args.out:
        export_trajectory(records, args.format, args.out)
    else:
        sys.stdout.write(format_trajectory(records, args.format))
    return EXIT_OK


def _teleport_once(args) -> int:
    amps = [complex(args.alpha_re, args.alpha_im), complex(args.beta_re, args.beta_im)]
    try:
        psi = PureState(amps)
        channel = ClassicalChannel(args.delay)
    except (QuantumStateError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    outcome = BellOutcome[args.outcome] if args.outcome else None
    report = teleport(psi, channel, RngStream(_default_seed(args.seed)), outcome=outcome)
    print(json.dumps({
        "outcome": report.outcome.name,
        "outcome_probability": round(report.outcome_probability, 12),
        "bob_state": [complex_to_json(a) for a in report.bob_state.amplitudes],
        "fidelity_to_input": report.fidelity_to_input,
        "delivered": report.delivered,
        "measured_cycle": report.measured_cycle,
        "report_cycle": report.report_cycle,
    }, indent=2))
    return EXIT_OK


def _clone_fidelity(args) -> int:
    if not 2 <= args.k <= MAX_CLONES:
        raise ConfigError(f"--k must lie in [2, {MAX_CLONES}]")
    if args.samples < 1:
        raise ConfigError("--samples must be positive")
    measured = monte_carlo_copy_fidelity(args.k, args.samples, RngStream(_default_seed(args.seed)))
    print(f"measured {measured:.6f}")
    print(f"analytic {optimal_fidelity(args.k):.6f}")
    return EXIT_OK


def _recognize(args) -> int:
    try:
        data = json.loads(Path(args.states).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.states}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {args.states}: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ConfigError("states file must hold a nonempty JSON list")
    states = [parse_state(s) for s in data]
    if args.d0 <= 0:
        raise ConfigError("--d0 must be positive")
    report = gate_signal(states, args.d0, args.mode, rng=RngStream(_default_seed(args.seed)))
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


_COMMANDS = {
    "teleport-loop": _run_loop,
    "clone-loop": _run_loop,
    "teleport-once": _teleport_once,
    "clone-fidelity": _clone_fidelity,
    "recognize": _recognize,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qfeedback: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"qfeedback: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
