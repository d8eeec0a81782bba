"""Objective functions and their conditional expectations.

Every objective maps (selected item set, realization) to a real utility. The
:class:`Evaluator` turns an objective and a prior into posterior expectations:
the expected value given observations and the conditional expected marginal
benefit of one more item.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import AlreadySelected, SupportTooLarge, UnknownItem
from .model import (EMPTY, Item, PartialRealization, Prior, Realization, as_partial,
                    TabularPrior, consistent, point_mass_prior, support_cap)

DEFAULT_SAMPLES = 10_000

# Stream identifiers for seed derivation (see Backend.rng).
STREAM_MARGINAL = 0
STREAM_VALUE = 1
STREAM_ROLLOUT = 2


class Objective:
    """Utility of a selected item set under a realization.

    Subclasses set ``local_gain`` when the gain of adding an item in a given
    state depends only on the observations made so far; the evaluator then
    needs only the marginal state distribution of that item instead of the
    whole posterior support.
    """

    kind = "abstract"
    local_gain = False

    def value(self, selected: Iterable[int], phi: Realization) -> float:
        raise NotImplementedError

    def observed_value(self, psi: PartialRealization) -> float | None:
        """Value of ``dom(psi)`` when the observations alone determine it, else None."""
        return None

    def gain(self, psi: PartialRealization, item: int, state: int) -> float:
        raise NotImplementedError


class CoverageObjective(Objective):
    """Weighted union of the element sets covered by each observed (item, state)."""

    kind = "coverage"
    local_gain = True

    def __init__(self, n_items: int, covers: Mapping[tuple[int, int], Iterable],
                 ground: Sequence | None = None, weights: Mapping | None = None):
        self.n_items = n_items
        if ground is None:
            ground = sorted({x for xs in covers.values() for x in xs}, key=str)
        self.ground = tuple(ground)
        index = {x: j for j, x in enumerate(self.ground)}
        if len(index) != len(self.ground):
            raise ValueError("duplicate ground elements")
        self.covers = {}
        for (item, state), xs in covers.items():
            if not 0 <= item < n_items:
                raise UnknownItem(f"covers references unknown item {item}")
            try:
                self.covers[(int(item), int(state))] = frozenset(index[x] for x in xs)
            except KeyError as exc:
                raise ValueError(f"covers references undeclared element {exc.args[0]!r}") from None
        weights = weights or {}
        for x in weights:
            if x not in index:
                raise ValueError(f"weight for undeclared element {x!r}")
        self.weights = tuple(float(weights.get(x, 1.0)) for x in self.ground)
        if any(w <= 0 for w in self.weights):
            raise ValueError("element weights must be positive")

    def covered(self, pairs: Iterable[tuple[int, int]]) -> set[int]:
        out: set[int] = set()
        for pair in pairs:
            out |= self.covers.get(pair, frozenset())
        return out

    def _weight(self, elements) -> float:
        return math.fsum(self.weights[j] for j in sorted(elements))

    def value(self, selected, phi):
        return self._weight(self.covered((i, phi[i]) for i in selected))

    def observed_value(self, psi):
        return self._weight(self.covered(psi))

    def gain(self, psi, item, state):
        new = self.covers.get((item, state), frozenset()) - self.covered(psi)
        return self._weight(new)


class VersionSpaceObjective(Objective):
    """Generalized binary search as coverage of hypothesis mass.

    Items are queries, states are answers, and a realization is the answer
    vector of the true hypothesis. Hypotheses with identical answer vectors
    are indistinguishable and share one realization. The value is
    ``1 - p(V) + p(class(phi))`` where ``V`` holds the hypotheses still
    consistent with the answers to the selected queries, so it reaches 1
    exactly when only the true class survives.
    """

    kind = "version_space"
    local_gain = True

    def __init__(self, hypotheses: Sequence[str], masses: Sequence[float],
                 answers: Sequence[Sequence[int]]):
        if len(hypotheses) != len(masses):
            raise ValueError("one mass per hypothesis is required")
        if any(m <= 0 for m in masses):
            raise ValueError("hypothesis masses must be positive")
        if abs(math.fsum(masses) - 1.0) > 1e-12:
            raise ValueError(f"hypothesis masses sum to {math.fsum(masses)!r}")
        self.hypotheses = tuple(hypotheses)
        self.masses = tuple(float(m) for m in masses)
        self.answers = tuple(tuple(int(a) for a in row) for row in answers)
        for row in self.answers:
            if len(row) != len(self.hypotheses):
                raise ValueError("every query needs an answer for every hypothesis")
        self.n_items = len(self.answers)

    def realization_of(self, h: int) -> Realization:
        return tuple(row[h] for row in self.answers)

    def version_space(self, pairs: Iterable[tuple[int, int]]) -> list[int]:
        pairs = list(pairs)
        return [h for h in range(len(self.hypotheses))
                if all(self.answers[q][h] == a for q, a in pairs)]

    def prior(self, items: Sequence[Item]):
        support = [(self.realization_of(h), m) for h, m in enumerate(self.masses)]
        return TabularPrior(items, support)

    def value(self, selected, phi):
        selected = list(selected)
        alive = self.version_space((q, phi[q]) for q in selected)
        others = [self.masses[h] for h in alive if self.realization_of(h) != tuple(phi)]
        return 1.0 - math.fsum(others)

    def gain(self, psi, item, state):
        alive = self.version_space(psi)
        return math.fsum(self.masses[h] for h in alive if self.answers[item][h] != state)


class SetFunctionObjective(Objective):
    """A plain set function lifted to realizations (it ignores them)."""

    kind = "set_function"
    local_gain = True

    def __init__(self, n_items: int, fn: Callable[[frozenset], float]):
        self.n_items = n_items
        self._fn = fn
        self._cache: dict[frozenset, float] = {}

    def f(self, subset) -> float:
        subset = frozenset(subset)
        if subset not in self._cache:
            self._cache[subset] = float(self._fn(subset))
        return self._cache[subset]

    def value(self, selected, phi):
        return self.f(selected)

    def observed_value(self, psi):
        return self.f(psi.domain)

    def gain(self, psi, item, state):
        return self.f(psi.domain | {item}) - self.f(psi.domain)

    def items(self, costs: Sequence[float] | None = None) -> tuple[Item, ...]:
        costs = costs if costs is not None else [1.0] * self.n_items
        return tuple(Item(i, float(c), ("selected",)) for i, c in enumerate(costs))

    def point_mass_prior(self, costs: Sequence[float] | None = None):
        return point_mass_prior(self.items(costs))


def make_deterministic(table, n_items: int | None = None) -> SetFunctionObjective:
    """Wrap a set function given as ``{frozenset: value}`` or a callable.

    The result has one state per item and is meant to be paired with
    :meth:`SetFunctionObjective.point_mass_prior`.
    """
    if callable(table):
        if n_items is None:
            raise ValueError("n_items is required for a callable set function")
        fn = table
    else:
        data = {frozenset(k): float(v) for k, v in table.items()}
        if n_items is None:
            n_items = max((max(k) + 1 for k in data if k), default=0)
        if frozenset() not in data:
            raise ValueError("set function table must define the empty set")
        if n_items <= 20:
            missing = [s for s in _all_subsets(n_items) if s not in data]
            if missing:
                raise ValueError(f"set function table misses subset {sorted(missing[0])}")
        fn = data.__getitem__
    if fn(frozenset()) != 0:
        raise ValueError(f"set function must satisfy f(empty) = 0, got {fn(frozenset())}")
    return SetFunctionObjective(n_items, fn)


def _all_subsets(n):
    for mask in range(1 << n):
        yield frozenset(i for i in range(n) if mask >> i & 1)


@dataclass(frozen=True)
class MarginalBenefit:
    item: int
    value: float
    stamp: int
    stderr: float = 0.0


@dataclass(frozen=True)
class Backend:
    """Exact enumeration or seeded Monte Carlo with ``samples`` draws per query.

    Monte Carlo draws for one set of observations come from a stream keyed by
    ``(seed, purpose, sorted observations)``, so every candidate item in a
    greedy step sees the same realizations and adding a candidate never
    shifts another candidate's draws.
    """

    kind: str = "enumerate"
    samples: int = DEFAULT_SAMPLES
    seed: int | None = None
    cap: int | None = None

    def __post_init__(self):
        if self.kind not in ("enumerate", "sample"):
            raise ValueError(f"unknown backend {self.kind!r}")
        if self.kind == "sample":
            if self.seed is None:
                raise ValueError("sample backend requires a seed")
            if self.samples < 2:
                raise ValueError("sample backend needs at least 2 samples")

    @property
    def exact(self) -> bool:
        return self.kind == "enumerate"

    @classmethod
    def parse(cls, text: str, seed: int | None = None, cap: int | None = None) -> Backend:
        if text == "enumerate":
            return cls("enumerate", seed=seed, cap=cap)
        if text.startswith("sample"):
            _, _, n = text.partition(":")
            return cls("sample", int(n) if n else DEFAULT_SAMPLES, seed, cap)
        raise ValueError(f"unknown backend {text!r}")

    def rng(self, purpose: int, psi: PartialRealization) -> np.random.Generator:
        key = [purpose]
        for item, state in psi.key():
            key += [item, state]
        return np.random.default_rng(np.random.SeedSequence(self.seed or 0, spawn_key=tuple(key)))


EXACT = Backend()


class Evaluator:
    """Posterior expectations of one objective under one prior.

    Caches posteriors by the (order-free) observation set and counts calls to
    :meth:`marginal`, which is what the greedy engines report as evaluations.
    """

    def __init__(self, objective: Objective, prior: Prior, backend: Backend | None = None):
        self.objective = objective
        self.prior = prior
        self.backend = backend or EXACT
        self.evaluations = 0
        self.min_positive_gain: float | None = None
        self._posteriors: dict[tuple, Prior] = {}
        self._samples: dict[tuple, list] = {}

    @property
    def items(self) -> tuple[Item, ...]:
        return self.prior.items

    def posterior(self, psi) -> Prior:
        psi = as_partial(psi)
        key = psi.key()
        if key not in self._posteriors:
            self._posteriors[key] = self.prior.condition(psi)
        return self._posteriors[key]

    def samples(self, psi, purpose=STREAM_MARGINAL) -> list[Realization]:
        psi = as_partial(psi)
        key = (purpose, psi.key())
        if key not in self._samples:
            rng = self.backend.rng(purpose, psi)
            self._samples[key] = self.posterior(psi).sample_many(rng, self.backend.samples)
        return self._samples[key]

    def support(self, psi) -> list[tuple[Realization, float]]:
        return self.posterior(psi).support(self.backend.cap)

    def state_distribution(self, item: int, psi) -> dict[int, float]:
        post = self.posterior(psi)
        try:
            return post.state_distribution(item, self.backend.cap)
        except SupportTooLarge:
            if self.backend.exact:
                raise
        counts: dict[int, int] = {}
        draws = self.samples(psi)
        for phi in draws:
            counts[phi[item]] = counts.get(phi[item], 0) + 1
        return {s: counts[s] / len(draws) for s in sorted(counts)}

    def expected_value(self, psi) -> float:
        return self.expected_value_se(psi)[0]

    def expected_value_se(self, psi) -> tuple[float, float]:
        psi = as_partial(psi)
        post = self.posterior(psi)
        obs = self.objective.observed_value(psi)
        if obs is not None:
            return obs, 0.0
        dom = psi.domain
        if self.backend.exact:
            return math.fsum(p * self.objective.value(dom, phi) for phi, p in post.support(self.backend.cap)), 0.0
        vals = np.array([self.objective.value(dom, phi) for phi in self.samples(psi, STREAM_VALUE)])
        return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))

    def certified_value(self, psi) -> float:
        """Smallest value of ``dom(psi)`` over realizations consistent with ``psi``."""
        psi = as_partial(psi)
        self.posterior(psi)
        obs = self.objective.observed_value(psi)
        if obs is not None:
            return obs
        dom = psi.domain
        if self.backend.exact:
            return min(self.objective.value(dom, phi) for phi, _ in self.support(psi))
        return min(self.objective.value(dom, phi) for phi in self.samples(psi, STREAM_VALUE))

    def marginal(self, item: int, psi=EMPTY) -> MarginalBenefit:
        psi = as_partial(psi)
        if item in psi.domain:
            raise AlreadySelected(f"item {item} is already selected")
        if not 0 <= item < len(self.items):
            raise UnknownItem(f"item {item} is not part of this instance")
        self.evaluations += 1
        obj = self.objective
        if self.backend.exact:
            if obj.local_gain:
                dist = self.state_distribution(item, psi)
                value = math.fsum(p * obj.gain(psi, item, s) for s, p in dist.items())
            else:
                dom = psi.domain
                value = math.fsum(p * (obj.value(dom | {item}, phi) - obj.value(dom, phi))
                                  for phi, p in self.support(psi))
            return self._record(MarginalBenefit(item, value, len(psi)))
        draws = self.samples(psi)
        if obj.local_gain:
            gains = np.array([obj.gain(psi, item, phi[item]) for phi in draws])
        else:
            dom = psi.domain
            gains = np.array([obj.value(dom | {item}, phi) - obj.value(dom, phi) for phi in draws])
        return self._record(MarginalBenefit(item, float(gains.mean()), len(psi),
                                            float(gains.std(ddof=1) / math.sqrt(len(gains)))))

    def _record(self, mb: MarginalBenefit) -> MarginalBenefit:
        if mb.value > 0 and (self.min_positive_gain is None or mb.value < self.min_positive_gain):
            self.min_positive_gain = mb.value
        return mb


def value(obj: Objective, psi, phi: Realization) -> float:
    """Realized utility of the items selected in ``psi`` under ``phi``."""
    psi = as_partial(psi)
    if not consistent(phi, psi):
        raise ValueError(f"realization {phi} is inconsistent with {psi.observations}")
    return obj.value(psi.domain, phi)


def expected_value(obj: Objective, psi, prior: Prior, backend: Backend | None = None) -> float:
    return Evaluator(obj, prior, backend).expected_value(psi)


def marginal(obj: Objective, item: int, psi, prior: Prior,
             backend: Backend | None = None) -> MarginalBenefit:
    return Evaluator(obj, prior, backend).marginal(item, psi)


def f_max(obj: Objective, prior: Prior, cap: int | None = None) -> float:
    """Largest value of the full item set over the prior's support."""
    everything = range(prior.n_items)
    return max(obj.value(everything, phi) for phi, _ in prior.support(support_cap(cap)))
