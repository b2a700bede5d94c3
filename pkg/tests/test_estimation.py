import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_params
from dcmm.errors import (
    AllClippedWarning,
    KTooLarge,
    NegativeUnderRoot,
    SingularVertexMatrix,
    ValidationError,
    ZeroDenominator,
)
from dcmm.estimation import (
    EstimationConfig,
    EstimationResult,
    align_permutation,
    compute_b1,
    estimate_all,
    estimate_memberships,
    estimate_p,
    estimate_theta,
    lift,
)
from dcmm.model import DcmmParams, build_h, experiment_params, sample_adjacency

SPA = EstimationConfig(vertex_hunter="spa")


class TestB1:
    def test_unit_case(self):
        np.testing.assert_allclose(compute_b1([0.8, 0.2], [[1.0], [-1.0]]), [1.0, 1.0])

    def test_negative_radicand(self):
        with pytest.raises(NegativeUnderRoot) as info:
            compute_b1([0.1, -0.2], [[0.5], [1.0]])
        assert info.value.k == 1

    def test_population_reproduces_p(self):
        params = experiment_params(300, 8)
        est = estimate_all(build_h(params), 2, SPA)
        p = estimate_p(est.b1_hat, est.q_hat, est.decomposition.lam)
        _, rep = align_permutation(
            EstimationResult(p, est.theta_hat, est.pi_hat, est.b1_hat, est.q_hat), params)
        assert rep.p_max_err < 1e-9


class TestMemberships:
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def test_vertex_row(self):
        pi = estimate_memberships(self.verts[[2]], self.verts, np.ones(3))
        np.testing.assert_allclose(pi, [[0.0, 0.0, 1.0]], atol=1e-15)

    def test_midpoint(self):
        v = np.array([[-1.0], [1.0]])
        np.testing.assert_allclose(estimate_memberships([[0.0]], v, [1.0, 1.0]), [[0.5, 0.5]])

    def test_least_squares_oracle(self, rng):
        w = rng.dirichlet(np.ones(3), size=20)
        rows = w @ self.verts
        b1 = rng.uniform(0.5, 2.0, size=3)
        aug = np.vstack([np.ones((1, 3)), self.verts.T])
        rhs = np.vstack([np.ones((1, 20)), rows.T])
        w_ls = np.linalg.lstsq(aug, rhs, rcond=None)[0].T
        star = np.maximum(w_ls / b1, 0)
        np.testing.assert_allclose(estimate_memberships(rows, self.verts, b1),
                                   star / star.sum(1, keepdims=True), atol=1e-10)

    def test_clipping_keeps_simplex(self, rng):
        rows = rng.normal(scale=3, size=(200, 2))
        pi = estimate_memberships(rows, self.verts, np.ones(3))
        assert pi.min() >= 0
        np.testing.assert_allclose(pi.sum(1), 1.0, atol=1e-12)

    def test_all_clipped_row_becomes_uniform(self):
        with pytest.warns(AllClippedWarning):
            pi, clipped = estimate_memberships([[0.3]], [[-1.0], [1.0]], [-1.0, -1.0],
                                               return_clipped=True)
        assert clipped == (0,)
        np.testing.assert_allclose(pi, [[0.5, 0.5]])

    def test_singular_vertices(self):
        with pytest.raises(SingularVertexMatrix):
            estimate_memberships([[0.0]], [[1.0], [1.0]], [1.0, 1.0])


class TestP:
    def test_zero_b1(self):
        assert not estimate_p(np.zeros(2), lift([[1.0], [-1.0]]), [0.5, 0.2]).any()

    def test_triple_loop_oracle(self, rng):
        b1 = rng.uniform(0.5, 1.5, 3)
        q = lift(rng.normal(size=(3, 2)))
        lam = rng.normal(size=3)
        expect = np.array([[sum(b1[a] * q[a, m] * lam[m] * q[b, m] * b1[b] for m in range(3))
                            for b in range(3)] for a in range(3)])
        np.testing.assert_allclose(estimate_p(b1, q, lam), expect, rtol=0, atol=1e-12)


class TestTheta:
    def test_homogeneous_in_xi1(self, rng):
        xi1, d = rng.uniform(0.1, 1, 10), rng.uniform(1, 5, 10)
        pi, b1 = rng.dirichlet(np.ones(2), 10), rng.uniform(0.5, 1.5, 2)
        np.testing.assert_allclose(estimate_theta(3 * xi1, d, pi, b1),
                                   3 * estimate_theta(xi1, d, pi, b1), rtol=1e-15)

    def test_pure_node(self):
        got = estimate_theta([0.2], [4.0], [[0.0, 1.0]], [0.5, 0.8])
        assert got[0] == pytest.approx(0.2 * 2.0 / 0.8)

    def test_zero_denominator(self):
        with pytest.raises(ZeroDenominator) as info:
            estimate_theta([0.2, 0.3], [1.0, 1.0], [[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0])
        assert info.value.index == 1


class TestEstimateAll:
    def test_population_exact(self):
        params = experiment_params(300, 2)
        for cfg in (SPA, EstimationConfig()):
            _, rep = align_permutation(estimate_all(build_h(params), 2, cfg), params)
            assert rep.p_max_err < 1e-8
            assert rep.theta_max_err < 1e-8

    def test_result_invariants(self, rng):
        params = random_params(rng, 200, 2, theta_range=(0.7, 1.0))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = estimate_all(sample_adjacency(build_h(params), 1), 2,
                               EstimationConfig(vertex_hunter="spa"))
        np.testing.assert_allclose(est.pi_hat.sum(1), 1.0, atol=1e-12)
        assert est.pi_hat.min() >= 0
        assert np.array_equal(est.q_hat[:, 0], np.ones(2))

    @pytest.mark.xfail(reason="this recipe sits near the spectral detection threshold at "
                              "n = 1000, so single-graph errors are far above 0.1", strict=False)
    def test_sampled_sanity_band(self):
        params = experiment_params(1000, 42)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = estimate_all(sample_adjacency(build_h(params), 42), 2)
        aligned, _ = align_permutation(est, params)
        assert abs(aligned.p_hat[0, 1] - 0.5) < 0.1

    def test_k_bounds(self):
        h = build_h(experiment_params(100, 0))
        with pytest.raises(ValidationError):
            estimate_all(h, 101)
        with pytest.raises(ValidationError):
            estimate_all(h, 1)

    def test_errors_carry_stage(self):
        x = np.zeros((4, 4))
        with pytest.raises(ArithmeticError) as info:
            estimate_all(x, 2)
        assert info.value.stage == "spectral"
        assert str(info.value).startswith("[spectral]")

    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), c=st.floats(0.3, 1.0))
    def test_scale_check(self, seed, c):
        params = random_params(np.random.default_rng(seed), 60, 2)
        scaled = DcmmParams(theta=c * params.theta, pi=params.pi, p=params.p)
        a = estimate_all(build_h(params), 2, SPA)
        b = estimate_all(build_h(scaled), 2, SPA)
        _, ra = align_permutation(a, params)
        _, rb = align_permutation(b, scaled)
        assert ra.p_max_err < 1e-8 and rb.p_max_err < 1e-8
        perm = list(align_permutation(b, params)[1].permutation)
        np.testing.assert_allclose(b.theta_hat, c * a.theta_hat, rtol=1e-8)
        np.testing.assert_allclose(b.p_hat[np.ix_(perm, perm)],
                                   align_permutation(a, params)[0].p_hat, atol=1e-8)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_node_relabeling_equivariance(self, seed):
        rng = np.random.default_rng(seed)
        params = random_params(rng, 50, 2, theta_range=(0.7, 1.0))
        x = sample_adjacency(build_h(params), seed).as_float()
        perm = rng.permutation(50)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                a = estimate_all(x, 2, SPA)
            except ArithmeticError:
                return               # pathological draw; nothing to compare
            b = estimate_all(x[np.ix_(perm, perm)], 2, SPA)
        # SPA breaks exact ties by index, so compare up to a community swap
        best = min(itertools.permutations(range(2)),
                   key=lambda p: np.abs(b.pi_hat[:, list(p)] - a.pi_hat[perm]).max())
        idx = list(best)
        np.testing.assert_allclose(b.pi_hat[:, idx], a.pi_hat[perm], atol=1e-7)
        np.testing.assert_allclose(b.theta_hat, a.theta_hat[perm], rtol=1e-7)
        np.testing.assert_allclose(b.p_hat[np.ix_(idx, idx)], a.p_hat, atol=1e-7)


class TestAlignment:
    def _result(self, params, perm):
        idx = list(perm)
        return EstimationResult(p_hat=params.p[np.ix_(idx, idx)], theta_hat=params.theta.copy(),
                                pi_hat=params.pi[:, idx], b1_hat=np.ones(len(idx)),
                                q_hat=np.eye(len(idx)))

    def test_swapped_columns(self, rng):
        params = random_params(rng, 20, 2)
        aligned, rep = align_permutation(self._result(params, (1, 0)), params)
        assert rep.p_max_err == 0 and rep.pi_err == 0
        np.testing.assert_array_equal(aligned.pi_hat, params.pi)

    def test_exact_k2_evaluates_both(self, rng):
        params = random_params(rng, 20, 2)
        _, rep = align_permutation(self._result(params, (0, 1)), params)
        assert set(rep.costs) == {(0, 1), (1, 0)}
        assert rep.p_max_err == 0 and rep.theta_max_err == 0

    def test_exhaustive_oracle_k3(self, rng):
        params = random_params(rng, 30, 3)
        est = self._result(params, (2, 0, 1))
        noisy = EstimationResult(p_hat=est.p_hat + rng.normal(scale=0.05, size=(3, 3)),
                                 theta_hat=est.theta_hat, pi_hat=est.pi_hat, b1_hat=est.b1_hat,
                                 q_hat=est.q_hat)
        _, rep = align_permutation(noisy, params)
        costs = {p: np.linalg.norm(noisy.p_hat[np.ix_(p, p)] - params.p)
                 + np.linalg.norm(noisy.pi_hat[:, list(p)] - params.pi)
                 for p in itertools.permutations(range(3))}
        assert rep.permutation == min(costs, key=costs.get)
        assert len(rep.costs) == 6

    def test_k_too_large(self):
        k = 9
        est = EstimationResult(np.eye(k), np.ones(k), np.eye(k), np.ones(k), np.eye(k))
        truth = DcmmParams(theta=np.ones(k), pi=np.eye(k), p=np.eye(k))
        with pytest.raises(KTooLarge):
            align_permutation(est, truth)
