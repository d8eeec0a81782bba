"""Command-line front end: ``adasub {run,check,oracle,bound,bench,generate}``.

Exit codes: 0 success, 1 malformed input or configuration, 2 infeasible
quota, 3 a property check failed, 4 an exact computation exceeded its cap,
5 lazy and naive greedy built different trees.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import instances as gen
from .bounds import bound_trace, opt_upper_bound
from .errors import AdasubError, InfeasibleQuota, InstanceError, TooLarge
from .greedy import Engine, SelectionRule, StoppingRule, build_policy
from .io import METRICS_COLUMNS, Instance, load_instance, policy_to_dict, save_instance, write_csv
from .objectives import Backend
from .verify import check_adaptive_monotone, check_adaptive_submodular, oracle_cover, oracle_max

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_CHECK_FAILED, EXIT_TOO_LARGE, EXIT_MISMATCH = range(6)


class ConfigError(AdasubError):
    pass


@dataclass
class RunConfig:
    instance_path: str
    subcommand: str
    engine: Engine = Engine.LAZY
    rule: SelectionRule = SelectionRule.BENEFIT
    stop: StoppingRule | None = None
    backend: Backend = Backend()
    seed: int | None = None
    out: str | None = None
    fmt: str = "json"

    def as_dict(self) -> dict:
        return {"instance": Path(self.instance_path).name, "subcommand": self.subcommand,
                "engine": self.engine.value, "rule": self.rule.value,
                "stop": self.stop.label() if self.stop else None,
                "backend": "enumerate" if self.backend.exact else f"sample:{self.backend.samples}",
                "seed": self.seed}


def _stop_from_args(args, required: bool) -> StoppingRule | None:
    given = [(kind, v) for kind, v in (("cardinality", args.maximize), ("quota", args.cover),
                                       ("budget", args.budget), ("minsum", args.minsum))
             if v is not None]
    if len(given) > 1:
        raise ConfigError("give exactly one of --maximize, --cover, --budget, --minsum")
    if not given:
        if required:
            raise ConfigError("a stopping rule is required: --maximize K | --cover Q | --budget B | --minsum Q")
        return None
    kind, v = given[0]
    try:
        return StoppingRule(kind, int(v) if kind == "cardinality" else float(v))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def config_from_args(args) -> RunConfig:
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    try:
        backend = Backend.parse(args.backend, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    required = args.command in ("run", "bench", "oracle", "bound")
    return RunConfig(args.instance, args.command, Engine(args.engine), SelectionRule(args.rule),
                     _stop_from_args(args, required), backend, args.seed, args.out, args.format)


def _emit(cfg: RunConfig, payload: dict, rows=None, columns=None):
    if cfg.fmt == "csv" and columns is not None:
        buf = io.StringIO()
        write_csv(buf, columns, rows or [])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def _metrics_row(cfg, inst, metrics, wall_ms, engine=None):
    return {"instance": inst.name, "engine": (engine or cfg.engine).value, "rule": cfg.rule.value,
            "stop": cfg.stop.label(), "avg_value": metrics.avg_value, "avg_cost": metrics.avg_cost,
            "worst_case_cost": metrics.worst_case_cost, "min_sum": metrics.min_sum,
            "evaluations": metrics.evaluation_count, "wall_ms": round(wall_ms, 3),
            "seed": "" if cfg.seed is None else cfg.seed}


def _build(cfg: RunConfig, inst: Instance, engine=None):
    t0 = time.perf_counter()
    tree, metrics = build_policy(inst.objective, inst.prior, cfg.stop, cfg.rule,
                                 engine or cfg.engine, cfg.backend)
    return tree, metrics, 1000 * (time.perf_counter() - t0)


def cmd_run(cfg: RunConfig) -> int:
    inst = load_instance(cfg.instance_path)
    tree, metrics, wall_ms = _build(cfg, inst)
    payload = {"instance": inst.name, "config": cfg.as_dict(), "policy": policy_to_dict(tree, inst),
               "metrics": metrics.as_dict(), "timing": {"wall_ms": wall_ms}}
    _emit(cfg, payload, [_metrics_row(cfg, inst, metrics, wall_ms)], METRICS_COLUMNS)
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    inst = load_instance(cfg.instance_path)
    mono = check_adaptive_monotone(inst.objective, inst.prior)
    sub = check_adaptive_submodular(inst.objective, inst.prior)
    payload = {"instance": inst.name, "monotone": mono.as_dict(), "submodular": sub.as_dict()}
    rows = [{"instance": inst.name, "property": r.property, "passed": r.passed,
             "pairs_checked": r.pairs_checked, "witnesses": len(r.witnesses)} for r in (mono, sub)]
    _emit(cfg, payload, rows, ("instance", "property", "passed", "pairs_checked", "witnesses"))
    for r in (mono, sub):
        for w in r.witnesses[:5]:
            print(f"witness ({r.property}): {json.dumps(w)}", file=sys.stderr)
    return EXIT_OK if mono.passed and sub.passed else EXIT_CHECK_FAILED


def cmd_bench(cfg: RunConfig) -> int:
    inst = load_instance(cfg.instance_path)
    naive_tree, naive_m, naive_ms = _build(cfg, inst, Engine.NAIVE)
    lazy_tree, lazy_m, lazy_ms = _build(cfg, inst, Engine.LAZY)
    equal = naive_tree == lazy_tree
    rows = []
    for engine, m, ms in ((Engine.NAIVE, naive_m, naive_ms), (Engine.LAZY, lazy_m, lazy_ms)):
        row = _metrics_row(cfg, inst, m, ms, engine)
        row["trees_equal"] = equal
        rows.append(row)
    payload = {"instance": inst.name, "config": cfg.as_dict(), "trees_equal": equal,
               "evaluations": {"naive": naive_m.evaluation_count, "lazy": lazy_m.evaluation_count},
               "timing": {"naive_ms": naive_ms, "lazy_ms": lazy_ms}}
    _emit(cfg, payload, rows, METRICS_COLUMNS + ("trees_equal",))
    if not equal:
        print("lazy and naive greedy produced different policy trees", file=sys.stderr)
        return EXIT_MISMATCH
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    inst = load_instance(cfg.instance_path)
    stop = cfg.stop
    if stop.kind == "cardinality":
        res = oracle_max(inst.objective, inst.prior, int(stop.param))
        _, metrics, _ = _build(cfg, inst)
        greedy = metrics.avg_value
    elif stop.kind == "quota":
        res = oracle_cover(inst.objective, inst.prior, stop.param)
        _, metrics, _ = _build(cfg, inst)
        greedy = metrics.avg_cost
    else:
        raise ConfigError("oracle supports --maximize K or --cover Q")
    ratio = greedy / res.optimum if res.optimum else 1.0
    payload = {"instance": inst.name, "config": cfg.as_dict(), "optimum": res.optimum,
               "greedy": greedy, "ratio": ratio, "states_explored": res.states_explored,
               "policy": policy_to_dict(res.policy, inst)}
    row = {"instance": inst.name, "stop": stop.label(), "optimum": res.optimum, "greedy": greedy,
           "ratio": ratio, "states_explored": res.states_explored}
    _emit(cfg, payload, [row], tuple(row))
    return EXIT_OK


def cmd_bound(cfg: RunConfig) -> int:
    inst = load_instance(cfg.instance_path)
    stop = cfg.stop
    if stop.kind not in ("cardinality", "budget"):
        raise ConfigError("bound supports --maximize K or --budget B")
    budget = stop.kind == "budget"
    root = opt_upper_bound(inst.objective, [], inst.prior, stop.param, budget=budget, backend=cfg.backend)
    tree, _, _ = _build(cfg, inst)
    trace = bound_trace(tree, inst.objective, inst.prior, stop.param, budget=budget, backend=cfg.backend)
    payload = {"instance": inst.name, "config": cfg.as_dict(), "bound": root.bound,
               "current": root.current, "slack": root.slack, "formula": root.formula,
               "trace": [c.row() for c in trace]}
    _emit(cfg, payload, [c.row() for c in trace],
          ("step", "depth", "current", "slack", "bound", "k_remaining"))
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.kind == "coverage":
        inst = gen.random_coverage(args.seed, args.items, costs=args.costs)
    elif args.kind == "selfcert":
        inst, _ = gen.random_self_certifying_coverage(args.seed, args.items, costs=args.costs)
    else:
        inst = {"sc2": gen.sc2, "al3": gen.al3, "cascade_path": gen.cascade_path,
                "complementarity": gen.complementarity}[args.kind]()
    save_instance(inst, args.out)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "check": cmd_check, "bench": cmd_bench, "oracle": cmd_oracle,
            "bound": cmd_bound}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adasub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--instance", required=True, metavar="PATH")
        p.add_argument("--maximize", type=int, metavar="K")
        p.add_argument("--cover", type=float, metavar="Q")
        p.add_argument("--budget", type=float, metavar="B")
        p.add_argument("--minsum", type=float, metavar="Q")
        p.add_argument("--engine", choices=[e.value for e in Engine], default="lazy")
        p.add_argument("--rule", choices=[r.value for r in SelectionRule], default="benefit")
        p.add_argument("--backend", default="enumerate", metavar="enumerate|sample:N")
        p.add_argument("--seed", type=int, metavar="U64")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=["json", "csv"], default="json")
    g = sub.add_parser("generate", help="write a named or random instance file")
    g.add_argument("kind", choices=["sc2", "al3", "cascade_path", "complementarity", "coverage", "selfcert"])
    g.add_argument("--items", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--costs", choices=["unit", "random"], default="unit")
    g.add_argument("--out", required=True, metavar="PATH")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        if args.command == "generate":
            return cmd_generate(args)
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except (ConfigError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleQuota as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except TooLarge as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
