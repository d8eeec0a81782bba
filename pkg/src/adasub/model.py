"""Items, realizations, partial realizations and priors.

A realization is a tuple holding one state id per item (indexed by item id).
A partial realization is the ordered list of ``(item, state)`` observations a
policy has collected. Priors are immutable; conditioning returns a new prior.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InconsistentObservation, SupportTooLarge, UnknownItem

PROB_TOL = 1e-12
DEFAULT_SUPPORT_CAP = 2**20

Realization = tuple


def support_cap(cap: int | None = None) -> int:
    """Resolve the enumeration cap (explicit value, then ``ADASUB_SUPPORT_CAP``)."""
    if cap is not None:
        return int(cap)
    env = os.environ.get("ADASUB_SUPPORT_CAP")
    return int(env) if env else DEFAULT_SUPPORT_CAP


@dataclass(frozen=True)
class Item:
    id: int
    cost: float = 1.0
    states: tuple[str, ...] = ("0",)
    label: str | None = None

    def __post_init__(self):
        if self.id < 0:
            raise ValueError(f"item id must be non-negative, got {self.id}")
        if not self.cost > 0:
            raise ValueError(f"item {self.id}: cost must be positive, got {self.cost}")

    @property
    def n_states(self) -> int | None:
        # An empty state list means the state space is open (cascade codes).
        return len(self.states) or None

    @property
    def name(self) -> str:
        return self.label if self.label is not None else str(self.id)

    def state_name(self, state: int) -> str:
        if self.states:
            return self.states[state]
        return str(state)


def make_items(n_states: Sequence[int], costs: Sequence[float] | None = None) -> tuple[Item, ...]:
    """Dense items with numeric state names."""
    costs = costs if costs is not None else [1.0] * len(n_states)
    return tuple(
        Item(i, float(c), tuple(str(s) for s in range(k)))
        for i, (k, c) in enumerate(zip(n_states, costs))
    )


def check_items(items: Sequence[Item]) -> tuple[Item, ...]:
    items = tuple(items)
    for i, item in enumerate(items):
        if item.id != i:
            raise ValueError(f"item ids must be dense 0..n-1; position {i} holds id {item.id}")
    return items


@dataclass(frozen=True)
class PartialRealization:
    """Observed ``(item, state)`` pairs in selection order."""

    observations: tuple[tuple[int, int], ...] = ()
    domain: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        obs = tuple((int(i), int(s)) for i, s in self.observations)
        object.__setattr__(self, "observations", obs)
        dom = frozenset(i for i, _ in obs)
        if len(dom) != len(obs):
            raise ValueError(f"item observed twice in {obs}")
        object.__setattr__(self, "domain", dom)

    def __len__(self):
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    def extend(self, item: int, state: int) -> PartialRealization:
        return PartialRealization(self.observations + ((item, state),))

    def prefix(self, t: int) -> PartialRealization:
        return PartialRealization(self.observations[:t])

    def state_of(self, item: int) -> int | None:
        for i, s in self.observations:
            if i == item:
                return s
        return None

    def key(self) -> tuple:
        """Order-free identity, used for memoization."""
        return tuple(sorted(self.observations))

    def canonical(self) -> PartialRealization:
        return PartialRealization(self.key())

    def issubset(self, other: PartialRealization) -> bool:
        return set(self.observations) <= set(other.observations)

    def as_dict(self) -> dict[int, int]:
        return dict(self.observations)


EMPTY = PartialRealization()


def as_partial(psi) -> PartialRealization:
    if isinstance(psi, PartialRealization):
        return psi
    if psi is None:
        return EMPTY
    return PartialRealization(tuple(psi))


def consistent(phi: Realization, psi) -> bool:
    """True iff ``phi`` agrees with every observation in ``psi``."""
    psi = as_partial(psi)
    for item, state in psi:
        if not 0 <= item < len(phi):
            raise UnknownItem(f"item {item} is not part of this instance")
        if phi[item] != state:
            return False
    return True


class Prior:
    """Distribution over realizations of a fixed item list."""

    kind = "abstract"
    items: tuple[Item, ...]

    @property
    def n_items(self) -> int:
        return len(self.items)

    def _check_observations(self, psi: PartialRealization):
        for item, state in psi:
            if not 0 <= item < self.n_items:
                raise UnknownItem(f"item {item} is not part of this instance")
            k = self.items[item].n_states
            if state < 0 or (k is not None and state >= k):
                raise UnknownItem(f"item {item} has no state {state}")

    def condition(self, psi) -> Prior:
        raise NotImplementedError

    def support_size(self) -> int:
        raise NotImplementedError

    def support(self, cap: int | None = None) -> list[tuple[Realization, float]]:
        raise NotImplementedError

    def sample_many(self, rng: np.random.Generator, n: int) -> list[Realization]:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> Realization:
        return self.sample_many(rng, 1)[0]

    def state_distribution(self, item: int, cap: int | None = None) -> dict[int, float]:
        """Marginal distribution of ``item``'s state, keyed by state id in ascending order."""
        dist: dict[int, list[float]] = {}
        for phi, p in self.support(cap):
            dist.setdefault(phi[item], []).append(p)
        return {s: math.fsum(dist[s]) for s in sorted(dist)}

    def is_point_mass(self) -> bool:
        return self.support_size() == 1


class TabularPrior(Prior):
    """Explicit list of realizations with probabilities."""

    kind = "tabular"

    def __init__(self, items: Sequence[Item], support: Iterable[tuple[Sequence[int], float]],
                 _normalized: bool = False):
        self.items = check_items(items)
        merged: dict[tuple, float] = {}
        for phi, p in support:
            phi = tuple(int(s) for s in phi)
            if len(phi) != len(self.items):
                raise ValueError(f"realization {phi} does not assign every item")
            if p < 0:
                raise ValueError(f"negative probability {p} for {phi}")
            if p == 0:
                continue
            self._check_observations(PartialRealization(tuple(enumerate(phi))))
            merged[phi] = merged[phi] + p if phi in merged else float(p)
        if not merged:
            raise ValueError("tabular prior needs a non-empty support")
        total = math.fsum(merged.values())
        if not _normalized and abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"tabular probabilities sum to {total!r}, not 1")
        self._support = tuple(merged.items())

    def condition(self, psi) -> Prior:
        psi = as_partial(psi)
        self._check_observations(psi)
        kept = [(phi, p) for phi, p in self._support if consistent(phi, psi)]
        if not kept:
            raise InconsistentObservation(f"no realization is consistent with {psi.observations}")
        if len(kept) == len(self._support):
            return self
        z = math.fsum(p for _, p in kept)
        return TabularPrior(self.items, [(phi, p / z) for phi, p in kept], _normalized=True)

    def support_size(self) -> int:
        return len(self._support)

    def support(self, cap=None):
        return list(self._support)

    def sample_many(self, rng, n):
        probs = np.array([p for _, p in self._support])
        idx = _inverse_cdf(probs, rng.random(n))
        return [self._support[i][0] for i in idx]

    def __eq__(self, other):
        return isinstance(other, TabularPrior) and self.items == other.items and \
            self._support == other._support

    def __repr__(self):
        return f"TabularPrior({len(self.items)} items, {len(self._support)} realizations)"


class IndependentPrior(Prior):
    """Product of per-item categorical distributions."""

    kind = "independent"

    def __init__(self, items: Sequence[Item], factors: Sequence[Sequence[float]]):
        self.items = check_items(items)
        if len(factors) != len(self.items):
            raise ValueError("one factor per item is required")
        fs = []
        for item, factor in zip(self.items, factors):
            factor = tuple(float(p) for p in factor)
            if item.n_states is None or len(factor) != item.n_states:
                raise ValueError(f"item {item.id}: factor length must equal its state count")
            if any(p < 0 for p in factor):
                raise ValueError(f"item {item.id}: negative probability")
            if abs(math.fsum(factor) - 1.0) > PROB_TOL:
                raise ValueError(f"item {item.id}: state probabilities sum to {math.fsum(factor)!r}")
            fs.append(factor)
        self.factors = tuple(fs)

    def condition(self, psi) -> Prior:
        psi = as_partial(psi)
        self._check_observations(psi)
        fs = list(self.factors)
        changed = False
        for item, state in psi:
            factor = fs[item]
            if factor[state] == 0:
                raise InconsistentObservation(f"item {item} cannot be in state {state}")
            if factor[state] != 1.0:
                fs[item] = tuple(1.0 if s == state else 0.0 for s in range(len(factor)))
                changed = True
        if not changed:
            return self
        return IndependentPrior(self.items, fs)

    def support_size(self) -> int:
        return math.prod(sum(1 for p in f if p > 0) for f in self.factors)

    def support(self, cap=None):
        size = self.support_size()
        if size > support_cap(cap):
            raise SupportTooLarge(f"independent prior has {size} realizations (cap {support_cap(cap)})")
        choices = [[(s, p) for s, p in enumerate(f) if p > 0] for f in self.factors]
        out = []
        for combo in itertools.product(*choices):
            p = 1.0
            for _, q in combo:
                p *= q
            out.append((tuple(s for s, _ in combo), p))
        return out

    def state_distribution(self, item, cap=None):
        return {s: p for s, p in enumerate(self.factors[item]) if p > 0}

    def sample_many(self, rng, n):
        u = rng.random((n, self.n_items))
        cols = [_inverse_cdf(np.array(f), u[:, i]) for i, f in enumerate(self.factors)]
        return [tuple(int(c[j]) for c in cols) for j in range(n)]

    def __eq__(self, other):
        return isinstance(other, IndependentPrior) and self.items == other.items and \
            self.factors == other.factors

    def __repr__(self):
        return f"IndependentPrior({len(self.items)} items)"


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, u, side="right")
    last = int(np.flatnonzero(probs > 0)[-1])
    return np.minimum(idx, last)


def point_mass_prior(items: Sequence[Item], realization: Sequence[int] | None = None) -> TabularPrior:
    realization = realization if realization is not None else [0] * len(items)
    return TabularPrior(items, [(tuple(realization), 1.0)])


def condition(prior: Prior, psi) -> Prior:
    return prior.condition(psi)


def enumerate_support(prior: Prior, cap: int | None = None) -> list[tuple[Realization, float]]:
    return prior.support(cap)


def sample(prior: Prior, rng) -> Realization:
    """One draw; ``rng`` may be a seed or a numpy Generator."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return prior.sample(rng)
