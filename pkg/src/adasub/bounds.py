"""Data-dependent upper bounds on the optimal policy's value.

At any observation set, adaptive monotone submodular objectives satisfy

    OPT(continuations adding at most k items) <= E[f | psi] + max sum of
    marginal benefits over item sets a policy could afford,

because each item the optimal continuation selects contributes at most its
current conditional marginal benefit, weighted by its selection probability.
For a cardinality limit the maximum is the sum of the ``k`` largest
marginals; for a budget it is the fractional knapsack over (benefit, cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .greedy import PolicyTree
from .model import PartialRealization, Prior, as_partial
from .objectives import Backend, Evaluator, Objective

TOP_K = "top-k-marginals"
KNAPSACK = "fractional-knapsack"


@dataclass(frozen=True)
class BoundCertificate:
    psi: PartialRealization
    k: float
    current: float
    slack: float
    bound: float
    formula: str = TOP_K
    step: int = 0

    @property
    def depth(self) -> int:
        return len(self.psi)

    def row(self) -> dict:
        return {"step": self.step, "depth": self.depth, "current": self.current,
                "slack": self.slack, "bound": self.bound, "k_remaining": self.k}


def _top_k(gains: list[float], k: int) -> float:
    return math.fsum(sorted((max(g, 0.0) for g in gains), reverse=True)[:k])


def _fractional_knapsack(gains: list[tuple[float, float]], budget: float) -> float:
    total, left = [], budget
    for g, c in sorted(((g, c) for g, c in gains if g > 0), key=lambda t: (-t[0] / t[1], t[1])):
        if left <= 0:
            break
        take = min(1.0, left / c)
        total.append(take * g)
        left -= take * c
    return math.fsum(total)


def opt_upper_bound(obj: Objective, psi, prior: Prior, k: float, *, budget: bool = False,
                    backend: Backend | None = None, evaluator: Evaluator | None = None,
                    step: int = 0) -> BoundCertificate:
    """Certificate bounding the best continuation from ``psi``.

    ``k`` is a remaining item count, or a remaining cost budget when
    ``budget`` is true.
    """
    psi = as_partial(psi)
    if k < 0:
        raise ValueError("k must be non-negative")
    ev = evaluator or Evaluator(obj, prior, backend)
    current = ev.expected_value(psi)
    rest = [e for e in range(prior.n_items) if e not in psi.domain]
    if budget:
        gains = [(ev.marginal(e, psi).value, prior.items[e].cost) for e in rest] if k > 0 else []
        slack = _fractional_knapsack(gains, k)
        formula = KNAPSACK
    else:
        k = int(k)
        gains = [ev.marginal(e, psi).value for e in rest] if k > 0 else []
        slack = _top_k(gains, k)
        formula = TOP_K
    return BoundCertificate(psi, k, current, slack, current + slack, formula, step)


def bound_trace(policy: PolicyTree, obj: Objective, prior: Prior, k: float, *,
                budget: bool = False, backend: Backend | None = None) -> list[BoundCertificate]:
    """One certificate per internal policy node, in preorder.

    The remaining allowance at a node is ``k`` minus the items (or cost)
    already spent on the path to it.
    """
    ev = Evaluator(obj, prior, backend)
    out = []
    for step, (psi, _) in enumerate(policy.walk()):
        spent = math.fsum(prior.items[i].cost for i, _ in psi) if budget else len(psi)
        remaining = max(k - spent, 0)
        out.append(opt_upper_bound(obj, psi, prior, remaining, budget=budget, evaluator=ev, step=step))
    return out

