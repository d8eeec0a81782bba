"""Instance files, policy serialization and CSV output.

Instance file layout::

    {"items": [{"id": 0, "cost": 1.0, "states": ["on"], "label": "item1"}, ...],
     "prior": {"kind": "tabular", "support": [{"states": {"0": "on"}, "p": 1.0}]}
            | {"kind": "independent", "factors": {"0": {"on": 1.0}}},
     "objective": {"kind": "coverage", ...} | {"kind": "cascade", ...}
                | {"kind": "version_space", ...} | {"kind": "set_function", ...},
     "f_max": 2.0}

Items are referenced by id (as a string key) or by label; states by name.
Cascade and version-space instances imply their prior, so ``prior`` must be
omitted for them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

from .cascade import CascadeGraph, CascadeObjective, CascadePrior
from .errors import InstanceError
from .greedy import PolicyNode, PolicyTree
from .model import IndependentPrior, Item, Prior, TabularPrior, point_mass_prior
from .objectives import (CoverageObjective, Objective, SetFunctionObjective, VersionSpaceObjective,
                         make_deterministic)

CSV_HEADER = "# adasub-csv v1"
METRICS_COLUMNS = ("instance", "engine", "rule", "stop", "avg_value", "avg_cost",
                   "worst_case_cost", "min_sum", "evaluations", "wall_ms", "seed")


@dataclass
class Instance:
    items: tuple[Item, ...]
    prior: Prior
    objective: Objective
    name: str = ""
    f_max: float | None = None

    @property
    def n_items(self) -> int:
        return len(self.items)

    def state_name(self, item: int, state: int) -> str:
        if isinstance(self.objective, CascadeObjective):
            return self.objective.graph.state_name(state)
        return self.items[item].state_name(state)

    def parse_state(self, item: int, name: str) -> int:
        if isinstance(self.objective, CascadeObjective):
            return self.objective.graph.parse_state(name)
        try:
            return self.items[item].states.index(name)
        except ValueError:
            raise ValueError(f"item {item} has no state {name!r}") from None


def _require(cond, path, msg):
    if not cond:
        raise InstanceError(path, msg)


def _field(data: dict, key: str, path: str, kind=None):
    _require(isinstance(data, dict), path, "expected an object")
    _require(key in data, f"{path}.{key}", "missing field")
    value = data[key]
    if kind is not None:
        _require(isinstance(value, kind), f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def _number(value, path) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), path, "expected a number")
    return float(value)


class _Resolver:
    def __init__(self, items: Sequence[Item]):
        self.items = items
        self.by_key = {str(it.id): it.id for it in items}
        for it in items:
            if it.label is not None:
                self.by_key.setdefault(it.label, it.id)

    def item(self, key, path) -> int:
        _require(str(key) in self.by_key, path, f"unknown item {key!r}")
        return self.by_key[str(key)]

    def state(self, item: int, name, path) -> int:
        states = self.items[item].states
        _require(name in states, path, f"item {item} has no state {name!r}")
        return states.index(name)


def _parse_items(raw, path="$.items", open_states=False) -> tuple[Item, ...]:
    _require(isinstance(raw, list) and raw, path, "expected a non-empty array")
    items = []
    for i, entry in enumerate(raw):
        p = f"{path}[{i}]"
        item_id = _field(entry, "id", p, int)
        _require(item_id == i, f"{p}.id", f"ids must be dense 0..n-1 in order (expected {i})")
        cost = _number(entry.get("cost", 1.0), f"{p}.cost")
        _require(cost > 0, f"{p}.cost", "must be positive")
        label = entry.get("label")
        _require(label is None or isinstance(label, str), f"{p}.label", "expected a string")
        if open_states:
            states = ()
        else:
            states = _field(entry, "states", p, list)
            _require(states and all(isinstance(s, str) for s in states), f"{p}.states",
                     "expected a non-empty array of names")
            _require(len(set(states)) == len(states), f"{p}.states", "duplicate state names")
        items.append(Item(i, cost, tuple(states), label))
    return tuple(items)


def _parse_prior(raw, items, path="$.prior") -> Prior:
    kind = _field(raw, "kind", path, str)
    res = _Resolver(items)
    if kind == "tabular":
        support = _field(raw, "support", path, list)
        entries = []
        for j, entry in enumerate(support):
            p = f"{path}.support[{j}]"
            states = _field(entry, "states", p, dict)
            phi = [None] * len(items)
            for key, name in states.items():
                i = res.item(key, f"{p}.states")
                phi[i] = res.state(i, name, f"{p}.states.{key}")
            missing = [i for i, s in enumerate(phi) if s is None]
            _require(not missing, f"{p}.states", f"no state for items {missing}")
            prob = _number(_field(entry, "p", p), f"{p}.p")
            _require(0 <= prob <= 1, f"{p}.p", "must lie in [0, 1]")
            entries.append((tuple(phi), prob))
        try:
            return TabularPrior(items, entries)
        except ValueError as exc:
            raise InstanceError(f"{path}.support", str(exc)) from None
    if kind == "independent":
        factors_raw = _field(raw, "factors", path, dict)
        factors = [None] * len(items)
        for key, dist in factors_raw.items():
            p = f"{path}.factors.{key}"
            i = res.item(key, p)
            _require(isinstance(dist, dict), p, "expected an object of state probabilities")
            f = [0.0] * len(items[i].states)
            for name, q in dist.items():
                f[res.state(i, name, p)] = _number(q, f"{p}.{name}")
            factors[i] = f
        missing = [i for i, f in enumerate(factors) if f is None]
        _require(not missing, f"{path}.factors", f"no factor for items {missing}")
        try:
            return IndependentPrior(items, factors)
        except ValueError as exc:
            raise InstanceError(f"{path}.factors", str(exc)) from None
    raise InstanceError(f"{path}.kind", f"unknown prior kind {kind!r}")


def instance_from_dict(data: dict, name: str = "") -> Instance:
    _require(isinstance(data, dict), "$", "expected an object")
    obj_raw = _field(data, "objective", "$", dict)
    kind = _field(obj_raw, "kind", "$.objective", str)
    f_max = data.get("f_max")
    if f_max is not None:
        f_max = _number(f_max, "$.f_max")

    if kind == "cascade":
        _require("prior" not in data, "$.prior", "cascade instances imply their prior; omit it")
        nodes = _field(obj_raw, "nodes", "$.objective", list)
        _require(nodes, "$.objective.nodes", "expected a non-empty array")
        index = {str(n): v for v, n in enumerate(nodes)}
        _require(len(index) == len(nodes), "$.objective.nodes", "duplicate node names")
        edges = []
        for j, e in enumerate(_field(obj_raw, "edges", "$.objective", list)):
            p = f"$.objective.edges[{j}]"
            u, v = str(_field(e, "from", p)), str(_field(e, "to", p))
            _require(u in index, f"{p}.from", f"unknown node {u!r}")
            _require(v in index, f"{p}.to", f"unknown node {v!r}")
            q = _number(_field(e, "p", p), f"{p}.p")
            _require(0 <= q <= 1, f"{p}.p", "must lie in [0, 1]")
            edges.append((index[u], index[v], q))
        if "items" in data:
            items = _parse_items(data["items"], open_states=True)
            _require(len(items) == len(nodes), "$.items", "cascade needs one item per node")
            items = tuple(Item(it.id, it.cost, (), it.label or str(nodes[it.id])) for it in items)
        else:
            items = tuple(Item(v, 1.0, (), str(n)) for v, n in enumerate(nodes))
        graph = CascadeGraph(len(nodes), edges)
        return Instance(items, CascadePrior(items, graph), CascadeObjective(graph), name, f_max)

    items = _parse_items(_field(data, "items", "$", list))
    res = _Resolver(items)

    if kind == "version_space":
        _require("prior" not in data, "$.prior", "version-space instances imply their prior; omit it")
        hyps = _field(obj_raw, "hypotheses", "$.objective", dict)
        _require(hyps, "$.objective.hypotheses", "expected a non-empty object")
        names = list(hyps)
        masses = [_number(hyps[h], f"$.objective.hypotheses.{h}") for h in names]
        answers_raw = _field(obj_raw, "answers", "$.objective", dict)
        answers = [None] * len(items)
        for q, row in answers_raw.items():
            p = f"$.objective.answers.{q}"
            i = res.item(q, p)
            _require(isinstance(row, dict), p, "expected an object hypothesis -> answer")
            vals = []
            for h in names:
                _require(h in row, f"{p}.{h}", "missing answer")
                vals.append(res.state(i, row[h], f"{p}.{h}"))
            answers[i] = vals
        missing = [i for i, a in enumerate(answers) if a is None]
        _require(not missing, "$.objective.answers", f"no answers for queries {missing}")
        try:
            obj = VersionSpaceObjective(names, masses, answers)
        except ValueError as exc:
            raise InstanceError("$.objective.hypotheses", str(exc)) from None
        return Instance(items, obj.prior(items), obj, name, f_max)

    if kind == "coverage":
        ground = _field(obj_raw, "ground", "$.objective", list)
        covers_raw = _field(obj_raw, "covers", "$.objective", dict)
        covers = {}
        for key, elems in covers_raw.items():
            p = f"$.objective.covers.{key}"
            _require(":" in key, p, "keys must look like 'item:state'")
            item_key, state_name = key.rsplit(":", 1)
            i = res.item(item_key, p)
            s = res.state(i, state_name, p)
            _require(isinstance(elems, list), p, "expected an array of elements")
            for x in elems:
                _require(x in ground, p, f"undeclared element {x!r}")
            covers[(i, s)] = elems
        weights = obj_raw.get("weights") or {}
        _require(isinstance(weights, dict), "$.objective.weights", "expected an object")
        for x, w in weights.items():
            _require(x in ground, f"$.objective.weights.{x}", "undeclared element")
            _require(_number(w, f"$.objective.weights.{x}") > 0, f"$.objective.weights.{x}",
                     "must be positive")
        try:
            obj = CoverageObjective(len(items), covers, ground, weights)
        except ValueError as exc:
            raise InstanceError("$.objective", str(exc)) from None
    elif kind == "set_function":
        table_raw = _field(obj_raw, "table", "$.objective", dict)
        table = {}
        for key, v in table_raw.items():
            p = f"$.objective.table.{key}"
            parts = [s for s in key.split(",") if s.strip()]
            table[frozenset(res.item(s.strip(), p) for s in parts)] = _number(v, p)
        try:
            obj = make_deterministic(table, len(items))
        except ValueError as exc:
            raise InstanceError("$.objective.table", str(exc)) from None
    else:
        raise InstanceError("$.objective.kind", f"unknown objective kind {kind!r}")

    if "prior" in data:
        prior = _parse_prior(data["prior"], items)
    elif kind == "set_function":
        prior = point_mass_prior(items)
    else:
        raise InstanceError("$.prior", "missing field")
    return Instance(items, prior, obj, name, f_max)


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError("$", f"invalid JSON: {exc}") from None
    return instance_from_dict(data, name=path.stem)


def _item_key(item: Item) -> str:
    return str(item.id)


def instance_to_dict(inst: Instance) -> dict:
    """Inverse of :func:`instance_from_dict`."""
    obj = inst.objective
    items = inst.items
    out: dict[str, Any] = {}
    if isinstance(obj, CascadeObjective):
        g = obj.graph
        out["items"] = [{"id": it.id, "cost": it.cost, **({"label": it.label} if it.label else {})}
                        for it in items]
        nodes = [it.label or str(it.id) for it in items]
        out["objective"] = {"kind": "cascade", "nodes": nodes,
                            "edges": [{"from": nodes[u], "to": nodes[v], "p": p} for u, v, p in g.edges]}
    else:
        out["items"] = [{"id": it.id, "cost": it.cost, "states": list(it.states),
                         **({"label": it.label} if it.label else {})} for it in items]
        if isinstance(obj, VersionSpaceObjective):
            out["objective"] = {
                "kind": "version_space",
                "hypotheses": dict(zip(obj.hypotheses, obj.masses)),
                "answers": {_item_key(items[q]): {h: items[q].states[a] for h, a in zip(obj.hypotheses, row)}
                            for q, row in enumerate(obj.answers)},
            }
        elif isinstance(obj, CoverageObjective):
            out["objective"] = {
                "kind": "coverage",
                "ground": list(obj.ground),
                "covers": {f"{i}:{items[i].states[s]}": [obj.ground[j] for j in sorted(xs)]
                           for (i, s), xs in sorted(obj.covers.items())},
            }
            if any(w != 1.0 for w in obj.weights):
                out["objective"]["weights"] = dict(zip(obj.ground, obj.weights))
        elif isinstance(obj, SetFunctionObjective):
            n = obj.n_items
            table = {}
            for mask in range(1 << n):
                s = frozenset(i for i in range(n) if mask >> i & 1)
                table[",".join(str(i) for i in sorted(s))] = obj.f(s)
            out["objective"] = {"kind": "set_function", "table": table}
        else:
            raise TypeError(f"cannot serialize objective {type(obj).__name__}")
        prior = inst.prior
        if isinstance(prior, IndependentPrior):
            out["prior"] = {"kind": "independent",
                            "factors": {str(it.id): {it.states[s]: p for s, p in enumerate(f)}
                                        for it, f in zip(items, prior.factors)}}
        elif isinstance(prior, TabularPrior) and not isinstance(obj, VersionSpaceObjective):
            out["prior"] = {"kind": "tabular",
                            "support": [{"states": {str(i): items[i].states[s] for i, s in enumerate(phi)},
                                         "p": p} for phi, p in prior.support()]}
    if inst.f_max is not None:
        out["f_max"] = inst.f_max
    return out


def save_instance(inst: Instance, path):
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=2) + "\n")


def policy_to_dict(tree: PolicyTree, inst: Instance) -> dict:
    def enc(node):
        if node is None:
            return {"leaf": True}
        item = inst.items[node.item]
        out = {"item": node.item}
        if item.label is not None:
            out["label"] = item.label
        out["children"] = {inst.state_name(node.item, s): enc(node.children[s])
                           for s in sorted(node.children)}
        return out

    return enc(tree.root)


def policy_from_dict(data: dict, inst: Instance) -> PolicyTree:
    def dec(d):
        if d.get("leaf"):
            return None
        node = PolicyNode(int(d["item"]))
        for name, child in d.get("children", {}).items():
            node.children[inst.parse_state(node.item, name)] = dec(child)
        return node

    return PolicyTree(dec(data))


def write_csv(fh, columns: Sequence[str], rows: Iterable[dict]):
    fh.write(CSV_HEADER + "\n")
    writer = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: _fmt(row.get(c, "")) for c in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v
