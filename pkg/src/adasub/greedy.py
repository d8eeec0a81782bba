"""Adaptive greedy policies: construction (naive and lazy) and evaluation."""

from __future__ import annotations

import heapq
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

from .errors import Exhausted, InfeasibleQuota, MalformedPolicy, SupportTooLarge
from .model import EMPTY, PartialRealization, Prior, Realization, as_partial
from .objectives import (STREAM_ROLLOUT, Backend, Evaluator, MarginalBenefit, Objective)

# Scores within TIE_TOL of the best count as tied; ties go to the lowest item id.
TIE_TOL = 1e-12
QUOTA_TOL = 1e-12
SAMPLE_DEPTH_LIMIT = 12


class SelectionRule(str, Enum):
    BENEFIT = "benefit"
    PER_COST = "per-cost"


class Engine(str, Enum):
    NAIVE = "naive"
    LAZY = "lazy"


@dataclass(frozen=True)
class StoppingRule:
    kind: str
    param: float

    KINDS = ("cardinality", "budget", "quota", "minsum")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown stopping rule {self.kind!r}")
        if self.kind == "cardinality":
            if self.param != int(self.param) or self.param < 1:
                raise ValueError(f"cardinality k must be an integer >= 1, got {self.param}")
        elif not self.param > 0:
            raise ValueError(f"{self.kind} parameter must be positive, got {self.param}")

    @classmethod
    def cardinality(cls, k: int) -> StoppingRule:
        return cls("cardinality", k)

    @classmethod
    def budget(cls, b: float) -> StoppingRule:
        return cls("budget", b)

    @classmethod
    def quota(cls, q: float) -> StoppingRule:
        return cls("quota", q)

    @classmethod
    def minsum(cls, q: float) -> StoppingRule:
        return cls("minsum", q)

    @property
    def is_cover(self) -> bool:
        return self.kind in ("quota", "minsum")

    def label(self) -> str:
        key = {"cardinality": "k", "budget": "B", "quota": "Q", "minsum": "Q"}[self.kind]
        param = int(self.param) if self.kind == "cardinality" else self.param
        return f"{key}={param}"


@dataclass
class PolicyNode:
    item: int
    children: dict = field(default_factory=dict)


@dataclass
class PolicyTree:
    """Decision tree; a ``None`` root or child is a terminal leaf."""

    root: PolicyNode | None = None

    def walk(self) -> Iterator[tuple[PartialRealization, PolicyNode]]:
        """Internal nodes in preorder (children by ascending state id)."""
        stack = [(EMPTY, self.root)]
        while stack:
            psi, node = stack.pop()
            if node is None:
                continue
            yield psi, node
            for s in sorted(node.children, reverse=True):
                stack.append((psi.extend(node.item, s), node.children[s]))

    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def is_path(self) -> bool:
        return all(len(node.children) <= 1 for _, node in self.walk())

    def item_sequence(self) -> list[int]:
        """Items along the first branch (the whole policy when it is a path)."""
        out = []
        node = self.root
        while node is not None:
            out.append(node.item)
            node = node.children[min(node.children)] if node.children else None
        return out


@dataclass
class PolicyMetrics:
    avg_value: float = 0.0
    avg_cost: float = 0.0
    worst_case_cost: float = 0.0
    min_sum: float = 0.0
    evaluation_count: int = 0
    avg_value_se: float = 0.0
    avg_cost_se: float = 0.0
    min_sum_se: float = 0.0
    min_positive_gain: float | None = None
    truncated_rollouts: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


class LazyQueue:
    """Upper bounds on marginal benefits, ordered by (score desc, item id asc).

    Entries computed under an ancestor of the current observations are stale
    upper bounds; an entry is fresh when its stamp equals the current number
    of observations.
    """

    def __init__(self, entries: dict[int, MarginalBenefit], scores: dict[int, float]):
        self.entries = dict(entries)
        self.scores = dict(scores)
        self._heap = [(-scores[e], e) for e in entries]
        heapq.heapify(self._heap)

    @classmethod
    def initial(cls, items) -> LazyQueue:
        entries = {e: MarginalBenefit(e, math.inf, -1) for e in items}
        return cls(entries, {e: math.inf for e in items})

    def __len__(self):
        return len(self.entries)

    def heap(self) -> list[tuple[float, int]]:
        return list(self._heap)


def _score(mb: MarginalBenefit, cost: float, rule: SelectionRule) -> float:
    return mb.value / cost if rule == SelectionRule.PER_COST else mb.value


def _candidates(prior: Prior, psi: PartialRealization, budget_left: float | None = None):
    return [it.id for it in prior.items
            if it.id not in psi.domain and (budget_left is None or it.cost <= budget_left + 1e-12)]


def _pick(scored: list[tuple[float, int, MarginalBenefit]]) -> tuple[int, MarginalBenefit]:
    best = max(s for s, _, _ in scored)
    for s, e, mb in sorted(scored, key=lambda t: t[1]):
        if s >= best - TIE_TOL:
            return e, mb
    raise AssertionError("unreachable")


def greedy_step(obj: Objective, psi, prior: Prior, rule=SelectionRule.BENEFIT, *,
                candidates=None, evaluator: Evaluator | None = None) -> tuple[int, MarginalBenefit]:
    """Evaluate every candidate and return the best one (lowest id on ties)."""
    psi = as_partial(psi)
    ev = evaluator or Evaluator(obj, prior)
    rule = SelectionRule(rule)
    cands = sorted(candidates) if candidates is not None else _candidates(prior, psi)
    if not cands:
        raise Exhausted("no unselected item remains")
    scored = []
    for e in cands:
        mb = ev.marginal(e, psi)
        scored.append((_score(mb, prior.items[e].cost, rule), e, mb))
    return _pick(scored)


def lazy_greedy_step(obj: Objective, psi, queue: LazyQueue, prior: Prior,
                     rule=SelectionRule.BENEFIT, *, candidates=None,
                     evaluator: Evaluator | None = None) -> tuple[int, MarginalBenefit, LazyQueue]:
    """Lazy selection returning the same item as :func:`greedy_step`.

    Stale entries are recomputed in bound order until no remaining bound can
    reach within ``TIE_TOL`` of the best fresh score. The input queue is not
    modified; the returned queue drops the selected item.
    """
    psi = as_partial(psi)
    ev = evaluator or Evaluator(obj, prior)
    rule = SelectionRule(rule)
    cands = set(candidates) if candidates is not None else set(_candidates(prior, psi))
    heap = queue.heap()
    entries = dict(queue.entries)
    scores = dict(queue.scores)
    fresh: list[tuple[float, int, MarginalBenefit]] = []
    aside = []
    best = -math.inf
    while heap:
        neg, e = heap[0]
        if fresh and -neg < best - TIE_TOL:
            break
        heapq.heappop(heap)
        if e not in cands or e in psi.domain:
            aside.append(e)
            continue
        mb = entries[e]
        if mb.stamp != len(psi):
            mb = ev.marginal(e, psi)
            entries[e] = mb
            scores[e] = _score(mb, prior.items[e].cost, rule)
        fresh.append((scores[e], e, mb))
        best = max(best, scores[e])
    if not fresh:
        raise Exhausted("lazy queue holds no candidate")
    chosen, mb = _pick(fresh)
    del entries[chosen]
    del scores[chosen]
    return chosen, mb, LazyQueue(entries, scores)


def _check_quota(ev: Evaluator, q: float):
    try:
        support = ev.prior.support(ev.backend.cap)
    except SupportTooLarge:
        return
    everything = range(ev.prior.n_items)
    for phi, _ in support:
        if ev.objective.value(everything, phi) < q - QUOTA_TOL:
            raise InfeasibleQuota(f"quota {q} is unattainable in realization {phi}", phi)


def build_policy(obj: Objective, prior: Prior, stop: StoppingRule, rule=SelectionRule.BENEFIT,
                 engine=Engine.LAZY, backend: Backend | None = None,
                 max_depth: int | None = None) -> tuple[PolicyTree, PolicyMetrics]:
    """Expand the greedy decision tree over every positive-probability state."""
    ev = Evaluator(obj, prior, backend)
    rule = SelectionRule(rule)
    engine = Engine(engine)
    if stop.is_cover:
        _check_quota(ev, stop.param)
    if stop.kind == "budget":
        if stop.param < min(it.cost for it in prior.items):
            raise ValueError(f"budget {stop.param} is below the cheapest item cost")
    if max_depth is None and not ev.backend.exact:
        max_depth = SAMPLE_DEPTH_LIMIT

    def done(psi, spent):
        if stop.kind == "cardinality":
            return len(psi) >= stop.param
        if stop.is_cover:
            return ev.certified_value(psi) >= stop.param - QUOTA_TOL
        return False

    def expand(psi, queue, spent):
        if done(psi, spent):
            return None
        left = stop.param - spent if stop.kind == "budget" else None
        cands = _candidates(prior, psi, left)
        if not cands:
            if stop.is_cover:
                raise InfeasibleQuota(f"quota {stop.param} not certified after {psi.observations}")
            return None
        if max_depth is not None and len(psi) >= max_depth:
            return None
        if engine == Engine.LAZY:
            e, _, queue = lazy_greedy_step(obj, psi, queue, prior, rule, candidates=cands, evaluator=ev)
        else:
            e, _ = greedy_step(obj, psi, prior, rule, candidates=cands, evaluator=ev)
        node = PolicyNode(e)
        cost = prior.items[e].cost
        for s, p in ev.state_distribution(e, psi).items():
            if p > 0:
                node.children[s] = expand(psi.extend(e, s), queue, spent + cost)
        return node

    queue = LazyQueue.initial(range(prior.n_items)) if engine == Engine.LAZY else None
    tree = PolicyTree(expand(EMPTY, queue, 0.0))
    metrics = evaluate_policy(tree, obj, prior, quota=stop.param if stop.kind == "minsum" else None,
                              backend=ev.backend)
    metrics.evaluation_count = ev.evaluations
    metrics.min_positive_gain = ev.min_positive_gain
    return tree, metrics


def _shortfall(obj, ev, psi: PartialRealization, q: float) -> float:
    """Expected sum over prefixes t=1..L of ``q - min(q, f(first t items))`` given ``psi``."""
    prefixes = [psi.prefix(t) for t in range(1, len(psi) + 1)]
    observed = [obj.observed_value(p) for p in prefixes]
    if all(v is not None for v in observed):
        return math.fsum(q - min(q, v) for v in observed)
    terms = []
    for phi, p in ev.support(psi):
        terms.append(p * math.fsum(q - min(q, obj.value(pre.domain, phi)) for pre in prefixes))
    return math.fsum(terms)


def evaluate_policy(policy: PolicyTree, obj: Objective, prior: Prior, quota: float | None = None,
                    backend: Backend | None = None) -> PolicyMetrics:
    """Average value, average and worst-case cost, and min-sum cost of a policy.

    ``quota`` enables the min-sum metric. The enumerate backend walks the tree
    with exact branch probabilities; the sample backend rolls out seeded
    realizations and reports standard errors.
    """
    ev = Evaluator(obj, prior, backend)
    if not ev.backend.exact:
        return _evaluate_by_rollout(policy, obj, prior, quota, ev)
    values, costs, shortfalls = [], [], []
    worst = 0.0

    def walk(node, psi, prob, cost):
        nonlocal worst
        if node is None:
            values.append(prob * ev.expected_value(psi))
            costs.append(prob * cost)
            worst = max(worst, cost)
            if quota is not None:
                shortfalls.append(prob * _shortfall(obj, ev, psi, quota))
            return
        if node.item in psi.domain:
            raise MalformedPolicy(f"item {node.item} repeats along {psi.observations}")
        if not 0 <= node.item < prior.n_items:
            raise MalformedPolicy(f"policy references unknown item {node.item}")
        for s, p in ev.state_distribution(node.item, psi).items():
            if p <= 0:
                continue
            if s not in node.children:
                raise MalformedPolicy(f"no child for state {s} of item {node.item} after {psi.observations}")
            walk(node.children[s], psi.extend(node.item, s), prob * p,
                 cost + prior.items[node.item].cost)

    walk(policy.root, EMPTY, 1.0, 0.0)
    return PolicyMetrics(avg_value=math.fsum(values), avg_cost=math.fsum(costs),
                         worst_case_cost=worst, min_sum=math.fsum(shortfalls))


def _evaluate_by_rollout(policy, obj, prior, quota, ev) -> PolicyMetrics:
    draws = prior.sample_many(ev.backend.rng(STREAM_ROLLOUT, EMPTY), ev.backend.samples)
    vals, costs, sums = [], [], []
    worst = 0.0
    truncated = 0
    for phi in draws:
        psi, cut = _rollout(policy, phi)
        truncated += cut
        cost = math.fsum(prior.items[i].cost for i, _ in psi)
        worst = max(worst, cost)
        vals.append(obj.value(psi.domain, phi))
        costs.append(cost)
        if quota is not None:
            sums.append(math.fsum(quota - min(quota, obj.value(psi.prefix(t).domain, phi))
                                  for t in range(1, len(psi) + 1)))
    n = len(draws)

    def mean_se(xs):
        a = np.array(xs, dtype=float)
        return float(a.mean()), float(a.std(ddof=1) / math.sqrt(n))

    v, vse = mean_se(vals)
    c, cse = mean_se(costs)
    m, mse = mean_se(sums) if sums else (0.0, 0.0)
    return PolicyMetrics(avg_value=v, avg_cost=c, worst_case_cost=worst, min_sum=m,
                         avg_value_se=vse, avg_cost_se=cse, min_sum_se=mse,
                         truncated_rollouts=truncated)


def _rollout(policy: PolicyTree, phi: Realization) -> tuple[PartialRealization, int]:
    psi = EMPTY
    node = policy.root
    while node is not None:
        if node.item in psi.domain:
            raise MalformedPolicy(f"item {node.item} repeats along {psi.observations}")
        s = phi[node.item]
        psi = psi.extend(node.item, s)
        if s not in node.children:
            return psi, 1
        node = node.children[s]
    return psi, 0


def execute_policy(policy: PolicyTree, phi: Realization) -> PartialRealization:
    """Observations gathered by running ``policy`` in the world ``phi``."""
    psi, cut = _rollout(policy, phi)
    if cut:
        item, state = psi.observations[-1]
        raise MalformedPolicy(f"no child for state {state} of item {item}")
    return psi
