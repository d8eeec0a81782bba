import pytest

from adasub.errors import InfeasibleQuota, TooLarge
from adasub.greedy import StoppingRule, build_policy, evaluate_policy
from adasub.instances import al3, cascade_path, complementarity, random_coverage, sc2
from adasub.io import Instance
from adasub.model import IndependentPrior, Item, make_items
from adasub.objectives import CoverageObjective, make_deterministic
from adasub.verify import (CheckReport, check_adaptive_monotone, check_adaptive_submodular,
                           classic_greedy, oracle_cover, oracle_max, reachable_partials)

from oracles import brute_force_optimal_max


class TestReachable:
    def test_sc2(self):
        inst = sc2()
        keys = {p.key() for p in reachable_partials(inst.objective, inst.prior)}
        # Item2 can be unobserved, good or bad; item1 is unobserved or on.
        assert len(keys) == 6

    def test_cap(self):
        inst = random_coverage(0, 5)
        with pytest.raises(TooLarge):
            reachable_partials(inst.objective, inst.prior, cap=10)


class TestMonotoneCheck:
    def test_sc2(self):
        inst = sc2()
        report = check_adaptive_monotone(inst.objective, inst.prior)
        assert report.passed and report.witnesses == []
        assert report.pairs_checked > 0

    def test_modular(self):
        obj = make_deterministic(lambda s: float(len(s)), 3)
        assert check_adaptive_monotone(obj, obj.point_mass_prior()).passed

    def test_decreasing_caught(self):
        table = {frozenset(): 0.0, frozenset({0}): 2.0, frozenset({1}): 1.0, frozenset({0, 1}): 1.0}
        obj = make_deterministic(table, 2)
        report = check_adaptive_monotone(obj, obj.point_mass_prior())
        assert not report.passed
        w = report.witnesses[0]
        assert w["psi"] == [[0, 0]] and w["item"] == 1 and w["delta"] == -1.0

    def test_too_large(self):
        n = 21
        items = make_items([2] * n)
        prior = IndependentPrior(items, [(0.5, 0.5)] * n)
        obj = CoverageObjective(n, {(i, 0): [i] for i in range(n)}, ground=list(range(n)))
        with pytest.raises(TooLarge):
            check_adaptive_monotone(obj, prior)


class TestSubmodularCheck:
    @pytest.mark.parametrize("make", [sc2, al3, cascade_path])
    def test_named_instances_pass(self, make):
        inst = make()
        assert check_adaptive_submodular(inst.objective, inst.prior).passed

    def test_complementarity_caught(self):
        inst = complementarity()
        report = check_adaptive_submodular(inst.objective, inst.prior)
        assert not report.passed
        pairs = {(tuple(map(tuple, w["psi"])), tuple(map(tuple, w["psi_prime"])), w["item"])
                 for w in report.witnesses}
        assert ((), ((1, 0),), 0) in pairs
        assert ((), ((0, 0),), 1) in pairs
        w = report.witnesses[0]
        assert (w["delta"], w["delta_prime"]) == (0.0, 1.0)

    def test_report_invariant(self):
        report = CheckReport("submodular", True)
        assert report.as_dict()["passed"] and report.as_dict()["witnesses"] == []


class TestOracleMax:
    def test_sc2(self):
        inst = sc2()
        assert oracle_max(inst.objective, inst.prior, 1).optimum == 1.0
        assert oracle_max(inst.objective, inst.prior, 2).optimum == 1.5
        assert oracle_max(inst.objective, inst.prior, 0).optimum == 0.0

    def test_policy_achieves_optimum(self):
        inst = random_coverage(3, 4)
        res = oracle_max(inst.objective, inst.prior, 2)
        m = evaluate_policy(res.policy, inst.objective, inst.prior)
        assert abs(m.avg_value - res.optimum) <= 1e-12

    @pytest.mark.parametrize("seed", range(12))
    def test_matches_plain_recursion(self, seed):
        n = 4 if seed % 2 == 0 else 3
        inst = random_coverage(seed, n, n_states=2 + seed % 2)
        support = inst.prior.support()
        for k in (1, 2, 3):
            got = oracle_max(inst.objective, inst.prior, k).optimum
            want = brute_force_optimal_max(inst.objective, support, n, k)
            assert abs(got - want) <= 1e-9

    @pytest.mark.parametrize("seed", range(6))
    def test_dominates_greedy(self, seed):
        inst = random_coverage(seed, 5)
        for k in (1, 2, 3):
            _, m = build_policy(inst.objective, inst.prior, StoppingRule.cardinality(k))
            assert oracle_max(inst.objective, inst.prior, k).optimum >= m.avg_value - 1e-12

    def test_item_cap(self):
        inst = random_coverage(0, 9)
        with pytest.raises(TooLarge):
            oracle_max(inst.objective, inst.prior, 2)

    def test_support_cap(self):
        inst = random_coverage(0, 7)
        with pytest.raises(TooLarge):
            oracle_max(inst.objective, inst.prior, 2)


class TestOracleCover:
    def test_al3(self):
        inst = al3()
        res = oracle_cover(inst.objective, inst.prior, 1.0)
        assert abs(res.optimum - 5 / 3) <= 1e-12

    def test_single_sure_item(self):
        items = (Item(0, 2.5, ("on",)),)
        obj = CoverageObjective(1, {(0, 0): ["a", "b"]}, ground=["a", "b"])
        inst = Instance(items, IndependentPrior(items, [(1.0,)]), obj)
        assert oracle_cover(inst.objective, inst.prior, 2.0).optimum == 2.5

    @pytest.mark.parametrize("q", [0.0, -1.0])
    def test_non_positive_quota(self, q):
        inst = sc2()
        with pytest.raises(ValueError):
            oracle_cover(inst.objective, inst.prior, q)

    def test_infeasible(self):
        inst = sc2()
        with pytest.raises(InfeasibleQuota):
            oracle_cover(inst.objective, inst.prior, 2.0)

    def test_custom_costs(self):
        # Asking the cheap q2 first costs 1 + (2/3) * 3; q1 first costs 3 + (2/3) * 1.
        inst = al3()
        res = oracle_cover(inst.objective, inst.prior, 1.0, costs=[3.0, 1.0])
        assert abs(res.optimum - 3.0) <= 1e-12
        assert res.policy.root.item == 1


class TestClassicGreedy:
    def test_modular(self):
        assert classic_greedy(lambda s: float(len(s)), 2, n_items=3) == [0, 1]

    def test_coverage(self):
        sets = {0: {"a", "b"}, 1: {"b"}, 2: {"c"}}
        table = {}
        for mask in range(8):
            chosen = frozenset(i for i in range(3) if mask >> i & 1)
            table[chosen] = float(len(set().union(*(sets[i] for i in chosen))))
        assert classic_greedy(table, 2) == [0, 2]
        assert classic_greedy(table, 2, lazy=True) == [0, 2]

    def test_zero(self):
        assert classic_greedy(lambda s: float(len(s)), 0, n_items=3) == []
