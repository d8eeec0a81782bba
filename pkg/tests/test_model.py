import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adasub.errors import InconsistentObservation, SupportTooLarge, UnknownItem
from adasub.instances import random_coverage, sc2
from adasub.model import (EMPTY, IndependentPrior, Item, PartialRealization, TabularPrior,
                          condition, consistent, enumerate_support, make_items, point_mass_prior,
                          sample)

PHI1 = (0, 0)  # item1 on, item2 good
PHI2 = (0, 1)  # item1 on, item2 bad


class TestItemsAndPartials:
    def test_cost_must_be_positive(self):
        with pytest.raises(ValueError):
            Item(0, 0.0)

    def test_ids_must_be_dense(self):
        with pytest.raises(ValueError):
            TabularPrior((Item(1),), [((0,), 1.0)])

    def test_no_item_twice(self):
        with pytest.raises(ValueError):
            PartialRealization(((0, 0), (0, 1)))

    def test_order_kept_but_key_is_order_free(self):
        a = PartialRealization(((1, 0), (0, 0)))
        b = PartialRealization(((0, 0), (1, 0)))
        assert a != b
        assert a.key() == b.key()
        assert a.domain == {0, 1}


class TestConsistent:
    def test_empty_is_consistent_with_everything(self):
        assert consistent(PHI1, EMPTY)
        assert consistent(PHI2, [])

    def test_sc2_mismatch(self):
        assert not consistent(PHI2, [(1, 0)])

    def test_sc2_match(self):
        assert consistent(PHI1, [(0, 0)])

    def test_unknown_item(self):
        with pytest.raises(UnknownItem):
            consistent(PHI1, [(5, 0)])


class TestCondition:
    def test_empty_is_identity(self):
        prior = sc2(tabular=True).prior
        assert condition(prior, EMPTY) is prior

    def test_sc2_filter_and_renormalize(self):
        prior = sc2(tabular=True).prior
        post = condition(prior, [(1, 1)])
        assert post.support() == [(PHI2, 1.0)]

    def test_independent_conditions_factorwise(self):
        prior = sc2().prior
        post = condition(prior, [(1, 0)])
        assert post.factors[1] == (1.0, 0.0)
        assert post.factors[0] == prior.factors[0]

    def test_zero_mass_raises(self):
        prior = sc2(tabular=True).prior
        with pytest.raises(InconsistentObservation):
            condition(condition(prior, [(1, 1)]), [(1, 0)])
        items = make_items([2])
        with pytest.raises(InconsistentObservation):
            IndependentPrior(items, [(1.0, 0.0)]).condition([(0, 1)])

    def test_invalid_state(self):
        with pytest.raises(UnknownItem):
            sc2().prior.condition([(0, 3)])


class TestSupport:
    def test_tabular_returns_itself(self):
        prior = sc2(tabular=True).prior
        assert enumerate_support(prior) == [(PHI1, 0.5), (PHI2, 0.5)]

    def test_product_measure(self):
        items = make_items([2, 2])
        sup = enumerate_support(IndependentPrior(items, [(0.5, 0.5), (0.5, 0.5)]))
        assert sorted(sup) == [((0, 0), 0.25), ((0, 1), 0.25), ((1, 0), 0.25), ((1, 1), 0.25)]

    def test_sc2_independent(self):
        assert dict(enumerate_support(sc2().prior)) == {PHI1: 0.5, PHI2: 0.5}

    def test_cap(self):
        items = make_items([2] * 30)
        prior = IndependentPrior(items, [(0.5, 0.5)] * 30)
        with pytest.raises(SupportTooLarge):
            prior.support()
        with pytest.raises(SupportTooLarge):
            prior.support(cap=8)

    def test_env_cap(self, monkeypatch):
        monkeypatch.setenv("ADASUB_SUPPORT_CAP", "3")
        with pytest.raises(SupportTooLarge):
            random_coverage(0, 3).prior.support()

    def test_zero_probability_dropped(self):
        items = make_items([2])
        assert TabularPrior(items, [((0,), 1.0), ((1,), 0.0)]).support() == [((0,), 1.0)]

    def test_tabular_must_sum_to_one(self):
        with pytest.raises(ValueError):
            TabularPrior(make_items([2]), [((0,), 0.5), ((1,), 0.4)])


class TestSample:
    def test_point_mass(self):
        prior = point_mass_prior(make_items([3, 3]), (2, 1))
        for seed in range(5):
            assert sample(prior, seed) == (2, 1)

    def test_sc2_frequency(self):
        draws = sc2().prior.sample_many(np.random.default_rng(42), 100_000)
        freq = sum(phi[1] == 0 for phi in draws) / len(draws)
        assert abs(freq - 0.5) < 0.01

    def test_certain_state(self):
        items = make_items([3])
        prior = IndependentPrior(items, [(0.0, 1.0, 0.0)])
        assert set(prior.sample_many(np.random.default_rng(1), 1000)) == {(1,)}

    def test_deterministic_by_seed_and_index(self):
        prior = random_coverage(3, 4).prior
        a = prior.sample_many(np.random.default_rng(9), 50)
        b = prior.sample_many(np.random.default_rng(9), 10)
        assert a[:10] == b


def _random_prior(seed):
    inst = random_coverage(seed, 4, n_states=3)
    return inst.prior


def _random_psi(prior, rng, size):
    phi = prior.sample(rng)
    items = rng.permutation(prior.n_items)[:size]
    return PartialRealization(tuple((int(i), phi[i]) for i in items))


class TestConditioningProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 4), st.booleans())
    def test_idempotent(self, seed, size, tabular):
        prior = _random_prior(seed)
        if tabular:
            prior = TabularPrior(prior.items, prior.support())
        psi = _random_psi(prior, np.random.default_rng(seed), size)
        once = prior.condition(psi)
        assert once.condition(psi) == once

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 4))
    def test_sequential_equals_joint(self, seed, size):
        base = _random_prior(seed)
        prior = TabularPrior(base.items, base.support())
        psi = _random_psi(prior, np.random.default_rng(seed), size)
        half = len(psi) // 2
        first, second = psi.prefix(half), PartialRealization(psi.observations[half:])
        seq = dict(prior.condition(first).condition(second).support())
        joint = dict(prior.condition(psi).support())
        assert seq.keys() == joint.keys()
        for phi in joint:
            assert abs(seq[phi] - joint[phi]) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(0, 4))
    def test_support_of_posterior_is_consistent(self, seed, size):
        prior = _random_prior(seed)
        psi = _random_psi(prior, np.random.default_rng(seed), size)
        sup = prior.condition(psi).support()
        assert all(consistent(phi, psi) for phi, _ in sup)
        assert abs(math.fsum(p for _, p in sup) - 1.0) <= 1e-9


def test_enumeration_agrees_with_monte_carlo():
    inst = random_coverage(5, 5)
    obj, prior = inst.objective, inst.prior
    everything = range(prior.n_items)
    exact = math.fsum(p * obj.value(everything, phi) for phi, p in prior.support())
    vals = np.array([obj.value(everything, phi) for phi in prior.sample_many(np.random.default_rng(0), 100_000)])
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - exact) <= 3 * se
