import math

import numpy as np
import pytest

from oracles import ei_closed_form
from swarmopt import gp
from swarmopt.acquisition import (
    AcquisitionKind,
    AcquisitionSpec,
    LieStrategy,
    expected_improvement,
    lower_confidence_bound,
    propose,
    propose_batch,
)
from swarmopt.space import Continuous, SearchSpace, citation_space, normalize, snap_unit

UNIT = SearchSpace((Continuous("x", 0.0, 1.0),))


def fitted(space, X, y):
    X = np.asarray(X, dtype=float)
    return gp.fit(X, y, gp.select_hyperparameters(X, y, len(space)) if len(y) > 1
                  else gp.KernelHyper.isotropic(1.0, 0.2, 1e-8, len(space)))


class TestExpectedImprovement:
    def test_zero_variance(self):
        assert expected_improvement(0.0, 0.0, 5.0) == 0.0

    def test_at_incumbent(self):
        assert expected_improvement(2.0, 1.0, 2.0, 0.0) == pytest.approx(0.3989422804014327, rel=1e-12)

    def test_far_above_incumbent(self):
        assert expected_improvement(10.0, 0.01, 0.0) < 1e-12

    def test_matches_closed_form(self, rng):
        for _ in range(200):
            mean, sigma, best, xi = rng.normal(), rng.uniform(0, 3), rng.normal(), rng.uniform(0, 0.5)
            assert expected_improvement(mean, sigma**2, best, xi) == pytest.approx(
                ei_closed_form(mean, sigma, best, xi), abs=1e-12)

    def test_nonnegative_and_monotone_in_sigma(self, rng):
        sigmas = np.linspace(0, 5, 200)
        for _ in range(50):
            mean, best = rng.normal(scale=3, size=2)
            ei = expected_improvement(np.full_like(sigmas, mean), sigmas**2, best)
            assert np.all(ei >= 0)
            assert np.all(np.diff(ei) >= -1e-12)

    def test_vectorized(self):
        out = expected_improvement(np.array([0.0, 1.0]), np.array([1.0, 0.0]), 0.0)
        assert out.shape == (2,) and out[1] == 0.0


class TestLowerConfidenceBound:
    def test_examples(self):
        assert lower_confidence_bound(1.0, 0.0, 1.96) == 1.0
        assert lower_confidence_bound(0.0, 1.0, 2.0) == -2.0

    def test_zero_kappa_is_mean(self, rng):
        m, v = rng.normal(size=20), rng.uniform(0, 2, 20)
        np.testing.assert_array_equal(lower_confidence_bound(m, v, 0.0), m)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            AcquisitionSpec(AcquisitionKind.LCB, kappa=0.0)
        with pytest.raises(ValueError):
            AcquisitionSpec(xi=-1.0)


class TestPropose:
    def test_moves_away_from_single_observation(self, rng):
        model = fitted(UNIT, [[0.5]], [1.0])
        p = propose(model, UNIT, AcquisitionSpec(), rng)
        assert p != (0.5,)

    def test_lcb_pulls_toward_lower_side(self):
        model = fitted(UNIT, [[0.0], [1.0]], [1.0, 0.0])
        spec = AcquisitionSpec(AcquisitionKind.LCB, kappa=1.96)
        grid = np.linspace(0, 1, 1001)[:, None]
        mean, var = model.predict_many(grid)
        brute = grid[np.argmin(mean - 1.96 * np.sqrt(var)), 0]
        assert 0.5 < brute <= 1.0
        p = propose(model, UNIT, spec, np.random.default_rng(3))
        assert 0.5 < p[0] <= 1.0

    def test_deterministic_given_seed(self, rng):
        space = SearchSpace((Continuous("a", -5, 5), Continuous("b", -5, 5)))
        X = rng.random((6, 2))
        model = fitted(space, X, np.sin(3 * X).sum(1))
        a = propose(model, space, AcquisitionSpec(), np.random.default_rng(9))
        b = propose(model, space, AcquisitionSpec(), np.random.default_rng(9))
        assert a == b and space.contains(a)

    def test_discrete_proposals_are_grid_values(self, rng):
        space = citation_space()
        X = snap_unit(space, rng.random((5, 4)))
        model = fitted(space, X, rng.normal(size=5))
        for seed in range(10):
            assert space.contains(propose(model, space, AcquisitionSpec(), np.random.default_rng(seed)))


class TestProposeBatch:
    def test_q1_equals_propose(self, rng):
        space = SearchSpace((Continuous("a", 0, 1), Continuous("b", 0, 1)))
        X = rng.random((5, 2))
        model = fitted(space, X, (X**2).sum(1))
        batch = propose_batch(model, space, AcquisitionSpec(), 1, LieStrategy.MIN, np.random.default_rng(4))
        assert batch == [propose(model, space, AcquisitionSpec(), np.random.default_rng(4))]

    def test_batches_distinct_and_model_untouched(self):
        space = SearchSpace((Continuous("a", 0, 1), Continuous("b", 0, 1)))
        for seed in range(100):
            rng = np.random.default_rng(seed)
            X = rng.random((6, 2))
            model = fitted(space, X, np.cos(4 * X).sum(1))
            before = model.fingerprint()
            batch = propose_batch(model, space, AcquisitionSpec(), 5, LieStrategy.MIN, rng)
            assert len(set(batch)) == 5
            assert all(space.contains(p) for p in batch)
            assert model.fingerprint() == before

    def test_lie_values(self):
        assert LieStrategy.MIN.lie_value([3.0, 7.0]) == 3.0
        assert LieStrategy.MAX.lie_value([3.0, 7.0]) == 7.0
        assert LieStrategy.MEAN.lie_value([3.0, 7.0]) == 5.0

    def test_constant_liar_min_feeds_best_observation(self, monkeypatch):
        seen = []
        real_fit = gp.fit

        def spy(X, y, hyper):
            seen.append(np.array(y))
            return real_fit(X, y, hyper)

        model = fitted(UNIT, [[0.1], [0.9]], [3.0, 7.0])
        monkeypatch.setattr(gp, "fit", spy)
        propose_batch(model, UNIT, AcquisitionSpec(), 4, LieStrategy.MIN, np.random.default_rng(0))
        assert len(seen) == 3
        for y in seen:
            np.testing.assert_array_equal(y[2:], 3.0)

    def test_discrete_space_exhaustion(self):
        tiny = SearchSpace((citation_space().dims[3],))  # five cells
        X = np.array([normalize(tiny, (5,)), normalize(tiny, (7,))])
        model = fitted(tiny, X, [1.0, 2.0])
        batch = propose_batch(model, tiny, AcquisitionSpec(), 3, LieStrategy.MIN, np.random.default_rng(0))
        assert sorted(batch) == [(9.0,), (11.0,), (13.0,)]
        from swarmopt.errors import BatchDegenerate
        with pytest.raises(BatchDegenerate):
            propose_batch(model, tiny, AcquisitionSpec(), 4, LieStrategy.MIN, np.random.default_rng(0))
