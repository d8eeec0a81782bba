"""Exhaustive property checkers and brute-force optimal policies.

Everything here enumerates: partial realizations over the full item/state
lattice, and adaptive policies by memoized recursion over observation sets.
It is the ground truth the greedy guarantees are tested against, so it is
only meant for small instances.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from .errors import InfeasibleQuota, TooLarge
from .greedy import QUOTA_TOL, TIE_TOL, PolicyNode, PolicyTree
from .model import EMPTY, IndependentPrior, PartialRealization, Prior, as_partial
from .objectives import Evaluator, Objective, SetFunctionObjective

CHECK_TOL = 1e-12
DEFAULT_STATE_CAP = 10**6
MAX_ORACLE_ITEMS = 8
MAX_ORACLE_SUPPORT = 64


def _obs(psi: PartialRealization) -> list[list[int]]:
    return [list(o) for o in psi.observations]


@dataclass
class CheckReport:
    property: str
    passed: bool
    witnesses: list = field(default_factory=list)
    pairs_checked: int = 0

    def as_dict(self) -> dict:
        return {"property": self.property, "passed": self.passed,
                "pairs_checked": self.pairs_checked, "witnesses": self.witnesses}


@dataclass
class OracleResult:
    optimum: float
    policy: PolicyTree
    states_explored: int


def reachable_partials(obj: Objective, prior: Prior, cap: int = DEFAULT_STATE_CAP,
                       evaluator: Evaluator | None = None) -> list[PartialRealization]:
    """Every positive-probability observation set, in breadth-first order.

    Observation sets are canonical (sorted by item id), so each one appears
    once regardless of the order in which it could be collected.
    """
    ev = evaluator or Evaluator(obj, prior)
    if isinstance(prior, IndependentPrior):
        bound = math.prod(1 + sum(1 for p in f if p > 0) for f in prior.factors)
        if bound > cap:
            raise TooLarge(f"{bound} reachable observation sets exceed the cap {cap}")
    prior.support(ev.backend.cap)
    seen = {EMPTY.key()}
    order = [EMPTY]
    queue = deque([EMPTY])
    while queue:
        psi = queue.popleft()
        for e in range(prior.n_items):
            if e in psi.domain:
                continue
            for s, p in ev.state_distribution(e, psi).items():
                if p <= 0:
                    continue
                child = psi.extend(e, s).canonical()
                key = child.key()
                if key in seen:
                    continue
                seen.add(key)
                if len(seen) > cap:
                    raise TooLarge(f"more than {cap} reachable observation sets")
                order.append(child)
                queue.append(child)
    return order


def check_adaptive_monotone(obj: Objective, prior: Prior, cap: int = DEFAULT_STATE_CAP,
                            tol: float = CHECK_TOL) -> CheckReport:
    """Every conditional expected marginal benefit is at least ``-tol``."""
    ev = Evaluator(obj, prior)
    report = CheckReport("monotone", True)
    for psi in reachable_partials(obj, prior, cap, ev):
        for e in range(prior.n_items):
            if e in psi.domain:
                continue
            report.pairs_checked += 1
            d = ev.marginal(e, psi).value
            if d < -tol:
                report.witnesses.append({"psi": _obs(psi), "item": e, "delta": d})
    report.passed = not report.witnesses
    return report


def check_adaptive_submodular(obj: Objective, prior: Prior, cap: int = DEFAULT_STATE_CAP,
                              tol: float = CHECK_TOL) -> CheckReport:
    """Marginal benefits never grow as observations are added.

    Checks ``delta(e | psi') <= delta(e | psi) + tol`` for every reachable
    ``psi'``, every proper sub-observation-set ``psi`` of it and every item
    outside ``dom(psi')``. ``pairs_checked`` counts these triples.
    """
    ev = Evaluator(obj, prior)
    cache: dict[tuple, float] = {}

    def delta(e, psi):
        key = (e, psi.key())
        if key not in cache:
            cache[key] = ev.marginal(e, psi).value
        return cache[key]

    report = CheckReport("submodular", True)
    for big in reachable_partials(obj, prior, cap, ev):
        obs = big.observations
        outside = [e for e in range(prior.n_items) if e not in big.domain]
        if not outside:
            continue
        for mask in range((1 << len(obs)) - 1):
            small = PartialRealization(tuple(o for j, o in enumerate(obs) if mask >> j & 1))
            for e in outside:
                report.pairs_checked += 1
                d_small, d_big = delta(e, small), delta(e, big)
                if d_big > d_small + tol:
                    report.witnesses.append({"psi": _obs(small), "psi_prime": _obs(big), "item": e,
                                             "delta": d_small, "delta_prime": d_big})
    report.passed = not report.witnesses
    return report


def _oracle_guard(prior: Prior, psi: PartialRealization, ev: Evaluator,
                  max_items: int, max_support: int):
    if prior.n_items > max_items:
        raise TooLarge(f"oracle supports at most {max_items} items, instance has {prior.n_items}")
    size = ev.posterior(psi).support_size()
    if size > max_support:
        raise TooLarge(f"oracle supports at most {max_support} realizations, prior has {size}")


def _rebuild(psi, choices, ev, depth_key) -> PolicyNode | None:
    e = choices.get(depth_key(psi))
    if e is None:
        return None
    node = PolicyNode(e)
    for s, p in ev.state_distribution(e, psi).items():
        if p > 0:
            child = psi.extend(e, s)
            node.children[s] = _rebuild(child, choices, ev, depth_key)
    return node


def oracle_max(obj: Objective, prior: Prior, k: int, psi=EMPTY, *,
               max_items: int = MAX_ORACLE_ITEMS,
               max_support: int = MAX_ORACLE_SUPPORT) -> OracleResult:
    """Best expected value over adaptive policies adding at most ``k`` items to ``psi``."""
    psi = as_partial(psi)
    if k < 0:
        raise ValueError("k must be non-negative")
    ev = Evaluator(obj, prior)
    _oracle_guard(prior, psi, ev, max_items, max_support)
    memo: dict[tuple, tuple[float, int | None]] = {}

    def solve(cur: PartialRealization, r: int) -> float:
        key = (cur.key(), r)
        if key in memo:
            return memo[key][0]
        best, choice = ev.expected_value(cur), None
        if r > 0:
            for e in range(prior.n_items):
                if e in cur.domain:
                    continue
                v = math.fsum(p * solve(cur.extend(e, s), r - 1)
                              for s, p in ev.state_distribution(e, cur).items() if p > 0)
                if v > best + TIE_TOL:
                    best, choice = v, e
        memo[key] = (best, choice)
        return best

    optimum = solve(psi, k)
    choices = {key: c for key, (_, c) in memo.items()}
    root_len = len(psi)
    tree = PolicyTree(_rebuild(psi, choices, ev, lambda q: (q.key(), k - (len(q) - root_len))))
    return OracleResult(optimum, tree, len(memo))


def oracle_cover(obj: Objective, prior: Prior, quota: float, costs=None, psi=EMPTY, *,
                 max_items: int = MAX_ORACLE_ITEMS,
                 max_support: int = MAX_ORACLE_SUPPORT) -> OracleResult:
    """Least expected cost of an adaptive policy that certifies ``quota`` on every branch."""
    psi = as_partial(psi)
    if not quota > 0:
        raise ValueError(f"quota must be positive, got {quota}")
    costs = list(costs) if costs is not None else [it.cost for it in prior.items]
    ev = Evaluator(obj, prior)
    _oracle_guard(prior, psi, ev, max_items, max_support)
    everything = range(prior.n_items)
    for phi, _ in ev.support(psi):
        if obj.value(everything, phi) < quota - QUOTA_TOL:
            raise InfeasibleQuota(f"quota {quota} is unattainable in realization {phi}", phi)
    memo: dict[tuple, tuple[float, int | None]] = {}

    def solve(cur: PartialRealization) -> float:
        key = cur.key()
        if key in memo:
            return memo[key][0]
        if ev.certified_value(cur) >= quota - QUOTA_TOL:
            memo[key] = (0.0, None)
            return 0.0
        best, choice = math.inf, None
        for e in range(prior.n_items):
            if e in cur.domain:
                continue
            v = costs[e] + math.fsum(p * solve(cur.extend(e, s))
                                     for s, p in ev.state_distribution(e, cur).items() if p > 0)
            if v < best - TIE_TOL:
                best, choice = v, e
        memo[key] = (best, choice)
        return best

    optimum = solve(psi)
    choices = {key: c for key, (_, c) in memo.items()}
    tree = PolicyTree(_rebuild(psi, choices, ev, lambda q: q.key()))
    return OracleResult(optimum, tree, len(memo))


def _as_set_function(table, n_items):
    if isinstance(table, SetFunctionObjective):
        return table.f, table.n_items
    if isinstance(table, Mapping):
        data = {frozenset(k): float(v) for k, v in table.items()}
        if n_items is None:
            n_items = max((max(k) + 1 for k in data if k), default=0)
        return (lambda s: data[frozenset(s)]), n_items
    if n_items is None:
        raise ValueError("n_items is required for a callable set function")
    return (lambda s: float(table(frozenset(s)))), n_items


def classic_greedy(table, k: int, n_items: int | None = None, lazy: bool = False) -> list[int]:
    """Non-adaptive greedy on a set function; ties go to the lowest item id."""
    f, n = _as_set_function(table, n_items)
    chosen: list[int] = []
    current = f(frozenset())
    if not lazy:
        while len(chosen) < min(k, n):
            base = frozenset(chosen)
            gains = [(f(base | {e}) - current, e) for e in range(n) if e not in base]
            best = max(g for g, _ in gains)
            e = min(e for g, e in gains if g >= best - TIE_TOL)
            chosen.append(e)
            current = f(base | {e})
        return chosen
    heap = [(-math.inf, e) for e in range(n)]
    while len(chosen) < min(k, n):
        base = frozenset(chosen)
        fresh, aside, best = [], [], -math.inf
        while heap:
            neg, e = heap[0]
            if fresh and -neg < best - TIE_TOL:
                break
            heapq.heappop(heap)
            g = f(base | {e}) - current
            fresh.append((g, e))
            best = max(best, g)
        e = min(e for g, e in fresh if g >= best - TIE_TOL)
        for g, other in fresh:
            if other != e:
                aside.append((-g, other))
        for entry in aside:
            heapq.heappush(heap, entry)
        chosen.append(e)
        current = f(base | {e})
    return chosen
