"""Acceptance gate: one recorded pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are also repeated in the terminal summary.
"""

import json
import math
import statistics
import subprocess
import sys
import time

import pytest

from adasub.bounds import opt_upper_bound
from adasub.greedy import Engine, StoppingRule, build_policy
from adasub.instances import (al3, cascade_path, complementarity, random_coverage,
                              random_self_certifying_coverage, random_set_function, sc2)
from adasub.io import save_instance
from adasub.model import EMPTY
from adasub.objectives import Evaluator, make_deterministic
from adasub.verify import (check_adaptive_monotone, check_adaptive_submodular, classic_greedy,
                           oracle_cover, oracle_max)

CORPUS_SEEDS = range(100)
GREEDY_FACTOR = 1 - 1 / math.e


def _corpus():
    out = [random_coverage(seed, 3 + seed % 3) for seed in CORPUS_SEEDS]
    return out + [sc2(), al3(), cascade_path()]


@pytest.fixture(scope="module")
def corpus():
    return _corpus()


def test_submodularity_corpus(corpus, criterion):
    t0 = time.perf_counter()
    failures = []
    for inst in corpus:
        mono = check_adaptive_monotone(inst.objective, inst.prior)
        sub = check_adaptive_submodular(inst.objective, inst.prior)
        if not (mono.passed and sub.passed):
            failures.append(inst.name)
    bad = complementarity()
    caught = check_adaptive_submodular(bad.objective, bad.prior)
    elapsed = time.perf_counter() - t0
    ok = not failures and not caught.passed and len(caught.witnesses) >= 1 and elapsed < 60
    criterion("1 submodularity corpus", ok,
              f"{len(corpus)} instances (seeds 0-99 + sc2, al3, cascade_path), "
              f"failures={failures}, counterexample witnesses={len(caught.witnesses)}, {elapsed:.1f}s")
    assert ok


def test_maximization_guarantee(corpus, criterion):
    t0 = time.perf_counter()
    ratios, violations = [], []
    for inst in corpus:
        for k in (1, 2, 3):
            opt = oracle_max(inst.objective, inst.prior, k).optimum
            _, m = build_policy(inst.objective, inst.prior, StoppingRule.cardinality(k), engine=Engine.NAIVE)
            if m.avg_value < GREEDY_FACTOR * opt - 1e-9:
                violations.append((inst.name, k))
            if opt > 0:
                ratios.append(m.avg_value / opt)
    elapsed = time.perf_counter() - t0
    q = statistics.quantiles(ratios, n=10)
    ok = not violations and elapsed < 300
    criterion("2 maximization guarantee", ok,
              f"{len(ratios)} ratios: min={min(ratios):.4f} p10={q[0]:.4f} median={statistics.median(ratios):.4f} "
              f"violations={violations} {elapsed:.1f}s")
    assert ok


def test_coverage_ratio(criterion):
    inst = al3()
    _, m = build_policy(inst.objective, inst.prior, StoppingRule.quota(1.0), engine=Engine.NAIVE)
    opt = oracle_cover(inst.objective, inst.prior, 1.0).optimum
    al3_exact = abs(m.avg_cost - 5 / 3) <= 1e-12 and abs(opt - 5 / 3) <= 1e-12
    cases = [(inst, 1.0, m, opt)]
    for seed in range(20):
        sc, q = random_self_certifying_coverage(seed, 4 + seed % 3)
        _, ms = build_policy(sc.objective, sc.prior, StoppingRule.quota(q), engine=Engine.NAIVE)
        cases.append((sc, q, ms, oracle_cover(sc.objective, sc.prior, q).optimum))
    worst, violations = 0.0, []
    for case, q, metrics, optimum in cases:
        eta = metrics.min_positive_gain
        limit = math.log(q / eta) + 1
        ratio = metrics.avg_cost / optimum
        worst = max(worst, ratio / limit)
        if ratio > limit + 1e-9:
            violations.append((case.name, ratio, limit))
    ok = al3_exact and not violations
    criterion("3 coverage ratio", ok,
              f"AL3 greedy={m.avg_cost!r} oracle={opt!r}; 21 instances, max ratio/limit={worst:.4f}, "
              f"violations={violations}")
    assert ok


def test_lazy_equivalence_and_speedup(criterion):
    equal, fewer, reductions = 0, 0, []
    stop = StoppingRule.cardinality(4)
    for seed in range(30):
        inst = random_coverage(1000 + seed, 20 + seed)
        naive, mn = build_policy(inst.objective, inst.prior, stop, engine=Engine.NAIVE)
        lazy, ml = build_policy(inst.objective, inst.prior, stop, engine=Engine.LAZY)
        equal += naive == lazy
        fewer += ml.evaluation_count < mn.evaluation_count
        reductions.append(1 - ml.evaluation_count / mn.evaluation_count)
    median = statistics.median(reductions)
    ok = equal == 30 and fewer >= 29
    criterion("4 lazy equivalence and speedup", ok,
              f"trees equal {equal}/30, lazy fewer {fewer}/30, median reduction {median:.1%} "
              f"(soft target 25%: {'met' if median >= 0.25 else 'missed'})")
    assert ok


def test_bound_soundness(corpus, criterion):
    violations = []
    slack_ratio = []
    for inst in corpus:
        for k in (1, 2, 3):
            opt = oracle_max(inst.objective, inst.prior, k).optimum
            bound = opt_upper_bound(inst.objective, EMPTY, inst.prior, k).bound
            if bound < opt - 1e-9:
                violations.append((inst.name, k))
            if opt > 0:
                slack_ratio.append(bound / opt)
    s = sc2()
    tight = opt_upper_bound(s.objective, EMPTY, s.prior, 2).bound
    ok = not violations and abs(tight - 1.5) <= 1e-12
    criterion("5 bound soundness", ok,
              f"violations={violations}, SC2 bound={tight!r}, median bound/opt={statistics.median(slack_ratio):.4f}")
    assert ok


def test_classic_reduction(criterion):
    mismatches = []
    for seed in range(20):
        inst, table = random_set_function(seed, 8)
        wrapped = make_deterministic(table, 8)
        k = 5
        want = classic_greedy(table, k)
        got = []
        for obj, prior in ((inst.objective, inst.prior), (wrapped, wrapped.point_mass_prior())):
            for engine in Engine:
                tree, _ = build_policy(obj, prior, StoppingRule.cardinality(k), engine=engine)
                got.append(tree.is_path() and tree.item_sequence() == want)
        got.append(classic_greedy(table, k, lazy=True) == want)
        if not all(got):
            mismatches.append(seed)
    ok = not mismatches
    criterion("6 classic reduction", ok, f"20 set functions, mismatching seeds={mismatches}")
    assert ok


def test_worked_examples(criterion):
    checks = {}
    s = sc2()
    ev = Evaluator(s.objective, s.prior)
    _, m = build_policy(s.objective, s.prior, StoppingRule.cardinality(2))
    checks["sc2 delta"] = abs(ev.marginal(0).value - 1.0) <= 1e-12 and abs(ev.marginal(1).value - 0.5) <= 1e-12
    checks["sc2 k=2 value"] = abs(m.avg_value - 1.5) <= 1e-12
    a = al3()
    ev = Evaluator(a.objective, a.prior)
    d = [ev.marginal(e).value for e in (0, 1)]
    _, m = build_policy(a.objective, a.prior, StoppingRule.quota(1.0))
    checks["al3 delta tie"] = all(abs(x - 4 / 9) <= 1e-12 for x in d) and d[0] == d[1]
    checks["al3 cost"] = abs(m.avg_cost - 5 / 3) <= 1e-12 and abs(m.worst_case_cost - 2) <= 1e-12
    c = cascade_path()
    ev = Evaluator(c.objective, c.prior)
    live = c.prior.graph.parse_state("1")
    checks["cascade delta"] = abs(ev.marginal(0).value - 1.5) <= 1e-12 and abs(ev.marginal(1).value - 1.0) <= 1e-12
    checks["cascade after activation"] = abs(ev.marginal(1, [(0, live)]).value) <= 1e-12
    ok = all(checks.values())
    criterion("7 worked examples", ok, ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
    assert ok


def _cli_run(args):
    proc = subprocess.run([sys.executable, "-m", "adasub.cli", *args], capture_output=True, check=True)
    data = json.loads(proc.stdout)
    data.pop("timing")
    return json.dumps(data, indent=2, sort_keys=True).encode()


def test_reproducibility(tmp_path, criterion):
    cases = []
    for inst, extra in ((sc2(), ["--maximize", "2"]),
                        (random_coverage(5, 30), ["--maximize", "3", "--backend", "sample:500"]),
                        (al3(), ["--cover", "1"])):
        path = tmp_path / f"{inst.name}.json"
        save_instance(inst, path)
        argv = ["run", "--instance", str(path), "--seed", "12345678901234567890", *extra]
        cases.append(_cli_run(argv) == _cli_run(argv))
    ok = all(cases)
    criterion("8 reproducibility", ok, f"{sum(cases)}/{len(cases)} runs byte-identical outside the timing field")
    assert ok
