"""Command-line entry point.

Exit codes: 0 success, 2 validation error, 3 cap exceeded, 4 environment
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import oracle
from .benchmark import VARIANTS, SuiteConfig, run_benchmark
from .connectivity import to_dot
from .errors import AttackPathError, SearchAborted
from .generator import GeneratorConfig, generate_scenario, small_config
from .mcts import SearchConfig, run_search, trace_to_jsonl, tree_to_dot
from .scenario import dumps_scenario, feasible_actions, scenario_from_dict, validate_scenario
from .sim_env import SimulatedEnvironment, replay
from .value_init import InitConfig, compute_values

EXIT_VALIDATION = 2
EXIT_CAP = 3
EXIT_ENV = 4

CAP_CODES = {"STATE_CAP_EXCEEDED", "ORACLE_CAP"}


def _emit(args, text: str) -> None:
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dot(args, text: str) -> None:
    if args.emit_dot:
        Path(args.emit_dot).write_text(text, encoding="utf-8")


def _load(path: str):
    """Parse and validate; raises so the caller maps it to exit code 2."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    violations = validate_scenario(doc)
    if violations:
        raise AttackPathError("INVALID_SCENARIO", "; ".join(f"{v.code}: {v.message}" for v in violations))
    return scenario_from_dict(doc)


def cmd_validate(args) -> int:
    with open(args.scenario, encoding="utf-8") as fh:
        doc = json.load(fh)
    violations = validate_scenario(doc)
    _emit(args, "".join(json.dumps(v.to_dict()) + "\n" for v in violations))
    if not violations:
        sc = scenario_from_dict(doc)
        _dot(args, to_dot(sc.connectivity, highlight=[s.host for s in sc.goal]))
        print("valid", file=sys.stderr)
        return 0
    return EXIT_VALIDATION


def _generator_config(args) -> GeneratorConfig:
    base = small_config() if args.small else GeneratorConfig()
    changes = {"seed": args.seed, "guarantee_path": args.guarantee_path, "noise": args.noise}
    for name in ("linux_servers", "windows_servers", "clients", "appliances", "compartments", "planted_path_length"):
        value = getattr(args, name)
        if value is not None:
            changes[name] = value
    if args.latency is not None:
        changes["latency"] = tuple(args.latency)
    return replace(base, **changes)


def cmd_generate(args) -> int:
    sc = generate_scenario(_generator_config(args))
    _emit(args, dumps_scenario(sc))
    _dot(args, to_dot(sc.connectivity, highlight=[s.host for s in sc.goal]))
    return 0


def cmd_init_values(args) -> int:
    sc = _load(args.scenario)
    config = InitConfig(gamma=args.gamma, horizon=args.horizon)
    table = compute_values(sc, config)
    lines = [json.dumps({"depth": d, "value": v}) for d, v in enumerate(table.root_values())]
    for action in feasible_actions(sc.initial_state, sc):
        q = table.action_value(sc.initial_state, action.exploit, config.horizon)
        lines.append(json.dumps({"exploit": action.exploit.id, "depth": config.horizon, "q": q}))
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_plan(args) -> int:
    sc = _load(args.scenario)
    config = SearchConfig(exploration_weight=args.c, gamma=args.gamma, horizon=args.horizon,
                          max_executions=args.budget, rng_seed=args.seed)
    env = SimulatedEnvironment(sc, seed=args.seed, latency_scale=args.latency_scale)
    try:
        result = run_search(sc, env, config)
    except SearchAborted as exc:
        _emit(args, trace_to_jsonl(exc.partial.trace) + json.dumps({"result": exc.partial.to_dict()}) + "\n")
        raise
    _emit(args, trace_to_jsonl(result.trace) + json.dumps({"result": result.to_dict()}, sort_keys=True) + "\n")
    _dot(args, tree_to_dot(result))
    return 0


def cmd_simulate(args) -> int:
    sc = _load(args.scenario)
    path = [p for p in args.path.split(",") if p]
    report = replay(sc, path, args.trials, seed=args.seed, latency_scale=args.latency_scale)
    _emit(args, json.dumps({"path": path, **report}) + "\n")
    return 0


def cmd_oracle(args) -> int:
    sc = _load(args.scenario)
    report = oracle.oracle_report(sc, args.gamma, args.horizon)
    _emit(args, json.dumps(report.to_dict(), indent=2) + "\n")
    return 0


def cmd_benchmark(args) -> int:
    gen = replace(_generator_config(args), latency=(0.0, 0.0)) if args.no_latency else _generator_config(args)
    suite = SuiteConfig(seeds=tuple(range(args.seed, args.seed + args.seeds)), budget=args.budget,
                        variants=tuple(args.variants.split(",")), generator=gen,
                        exploration_weight=args.c, gamma=args.gamma, horizon=args.horizon, workers=args.workers)
    report = run_benchmark(suite)
    sys.stdout.write(report.to_table())
    if args.output:
        Path(args.output).write_text(report.to_jsonl(), encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    def global_flags(defaults: bool) -> argparse.ArgumentParser:
        # subcommands repeat the global flags with suppressed defaults so they do not clobber them
        p = argparse.ArgumentParser(add_help=False)
        kw = {} if defaults else {"default": argparse.SUPPRESS}
        p.add_argument("--seed", type=int, **(kw or {"default": 0}))
        p.add_argument("--output", help="write structured output here instead of stdout", **kw)
        p.add_argument("--emit-dot", help="write a Graphviz rendering here", **kw)
        return p

    common = global_flags(False)

    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--gamma", type=float, default=0.9)
    search.add_argument("--horizon", type=int, default=4)

    gen = argparse.ArgumentParser(add_help=False)
    gen.add_argument("--small", action="store_true", help="oracle-sized instance")
    gen.add_argument("--linux-servers", type=int)
    gen.add_argument("--windows-servers", type=int)
    gen.add_argument("--clients", type=int)
    gen.add_argument("--appliances", type=int)
    gen.add_argument("--compartments", type=int)
    gen.add_argument("--planted-path-length", type=int)
    gen.add_argument("--guarantee-path", action=argparse.BooleanOptionalAction, default=True)
    gen.add_argument("--noise", default="exact", help="exact | uniform:EPS | optimistic:EPS")
    gen.add_argument("--latency", type=float, nargs=2, metavar=("MEAN", "JITTER"))

    parser = argparse.ArgumentParser(prog="attackpath", description="Attack-path planning over shell states.",
                                     parents=[global_flags(True)])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common])
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("generate", parents=[common, gen])
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("init-values", parents=[common, search])
    p.add_argument("scenario")
    p.set_defaults(func=cmd_init_values)

    p = sub.add_parser("plan", parents=[common, search])
    p.add_argument("scenario")
    p.add_argument("--budget", type=int, default=50)
    p.add_argument("--c", type=float, default=0.3, help="UCT exploration weight")
    p.add_argument("--latency-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", parents=[common])
    p.add_argument("scenario")
    p.add_argument("--path", required=True, help="comma-separated exploit ids")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--latency-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", parents=[common, search])
    p.add_argument("scenario")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("benchmark", parents=[common, search, gen])
    p.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds from --seed")
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--variants", default=",".join(VARIANTS))
    p.add_argument("--c", type=float, default=0.3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-latency", action="store_true")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SearchAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    except AttackPathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP if exc.code in CAP_CODES else EXIT_VALIDATION
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
