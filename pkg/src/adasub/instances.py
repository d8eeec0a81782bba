"""Small named instances and seeded random instance generators."""

from __future__ import annotations

import numpy as np

from .cascade import CascadeGraph, CascadeObjective, CascadePrior
from .io import Instance
from .model import IndependentPrior, Item, TabularPrior
from .objectives import CoverageObjective, VersionSpaceObjective, make_deterministic


def sc2(costs=(1.0, 1.0), tabular: bool = False) -> Instance:
    """Two-item stochastic set cover.

    ``item1`` (id 0) always covers ``a``; ``item2`` (id 1) covers ``b`` when
    it turns out ``good``, which happens with probability one half.
    """
    items = (Item(0, float(costs[0]), ("on",), "item1"),
             Item(1, float(costs[1]), ("good", "bad"), "item2"))
    obj = CoverageObjective(2, {(0, 0): ["a"], (1, 0): ["b"], (1, 1): []}, ground=["a", "b"])
    if tabular:
        prior = TabularPrior(items, [((0, 0), 0.5), ((0, 1), 0.5)])
    else:
        prior = IndependentPrior(items, [(1.0,), (0.5, 0.5)])
    return Instance(items, prior, obj, "sc2")


def al3() -> Instance:
    """Three equally likely hypotheses and two yes/no queries.

    ``q1`` answers yes only for ``h1``; ``q2`` answers yes for ``h1`` and ``h2``.
    """
    items = (Item(0, 1.0, ("yes", "no"), "q1"), Item(1, 1.0, ("yes", "no"), "q2"))
    third = 1.0 / 3.0
    obj = VersionSpaceObjective(["h1", "h2", "h3"], [third, third, third],
                                [[0, 1, 1], [0, 0, 1]])
    return Instance(items, obj.prior(items), obj, "al3")


def cascade_path(p: float = 0.5) -> Instance:
    """Two nodes ``A -> B`` joined by one edge live with probability ``p``."""
    graph = CascadeGraph(2, [(0, 1, p)])
    items = (Item(0, 1.0, (), "A"), Item(1, 1.0, (), "B"))
    return Instance(items, CascadePrior(items, graph), CascadeObjective(graph), "cascade_path")


def complementarity() -> Instance:
    """Two items worthless alone and worth 1 together (not submodular)."""
    table = {frozenset(): 0.0, frozenset({0}): 0.0, frozenset({1}): 0.0, frozenset({0, 1}): 1.0}
    obj = make_deterministic(table, 2)
    items = obj.items()
    return Instance(items, obj.point_mass_prior(), obj, "complementarity")


def random_coverage(seed: int, n_items: int, n_elements: int | None = None, n_states: int = 2,
                    density: float = 0.35, costs: str = "unit") -> Instance:
    """Stochastic coverage with independent item states.

    Each (item, state) pair covers every element independently with
    probability ``density``. Costs are all 1 (``"unit"``) or uniform on
    {1, 2, 3} (``"random"``).
    """
    rng = np.random.default_rng(seed)
    n_elements = n_elements if n_elements is not None else 2 * n_items
    ground = [f"x{j}" for j in range(n_elements)]
    covers = {}
    for i in range(n_items):
        for s in range(n_states):
            mask = rng.random(n_elements) < density
            covers[(i, s)] = [ground[j] for j in np.flatnonzero(mask)]
    item_costs = _costs(rng, n_items, costs)
    items = tuple(Item(i, item_costs[i], tuple(f"s{s}" for s in range(n_states))) for i in range(n_items))
    factors = [_simplex(rng, n_states) for _ in range(n_items)]
    obj = CoverageObjective(n_items, covers, ground)
    return Instance(items, IndependentPrior(items, factors), obj, f"coverage-{seed}")


def random_self_certifying_coverage(seed: int, n_items: int, n_elements: int | None = None,
                                    costs: str = "unit") -> tuple[Instance, float]:
    """Coverage where every realization covers the whole ground set.

    Every element is covered in every state by at least one designated
    item, so the quota ``Q = |ground|`` is attainable everywhere and coverage
    is observable. Returns the instance and ``Q``.
    """
    rng = np.random.default_rng(seed)
    inst = random_coverage(seed, n_items, n_elements, costs=costs)
    obj = inst.objective
    covers = {key: {obj.ground[j] for j in xs} for key, xs in obj.covers.items()}
    for x in obj.ground:
        anchor = int(rng.integers(n_items))
        for s in range(len(inst.items[anchor].states)):
            covers[(anchor, s)].add(x)
    covers = {key: sorted(xs, key=lambda x: int(x[1:])) for key, xs in covers.items()}
    new = CoverageObjective(n_items, covers, obj.ground)
    return Instance(inst.items, inst.prior, new, f"selfcert-{seed}"), float(len(obj.ground))


def random_set_function(seed: int, n_items: int, n_elements: int | None = None,
                        density: float = 0.35) -> tuple[Instance, dict]:
    """Deterministic coverage set function with a point-mass prior.

    Returns the instance (one state per item) and the explicit table
    ``{frozenset: value}`` of the same function.
    """
    rng = np.random.default_rng(seed)
    n_elements = n_elements if n_elements is not None else 2 * n_items
    sets = [frozenset(np.flatnonzero(rng.random(n_elements) < density).tolist()) for _ in range(n_items)]
    table = {}
    for mask in range(1 << n_items):
        chosen = [sets[i] for i in range(n_items) if mask >> i & 1]
        table[frozenset(i for i in range(n_items) if mask >> i & 1)] = float(len(frozenset().union(*chosen)))
    items = tuple(Item(i, 1.0, ("on",)) for i in range(n_items))
    ground = [f"x{j}" for j in range(n_elements)]
    obj = CoverageObjective(n_items, {(i, 0): [ground[j] for j in sorted(sets[i])] for i in range(n_items)},
                            ground)
    return Instance(items, TabularPrior(items, [((0,) * n_items, 1.0)]), obj, f"setfn-{seed}"), table


def _costs(rng, n, kind):
    if kind == "unit":
        return [1.0] * n
    if kind == "random":
        return [float(c) for c in rng.integers(1, 4, size=n)]
    raise ValueError(f"unknown cost scheme {kind!r}")


def _simplex(rng, k):
    w = rng.uniform(0.1, 1.0, size=k)
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return tuple(float(x) for x in w)
