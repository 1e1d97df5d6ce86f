import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import metzler_matrices
from patchgrowth import (
    CheckConfig,
    HypothesisReport,
    PatchModel,
    PiecewiseMatrixPath,
    Smooth,
    Witness,
    check_H3,
    check_H4,
    check_matrix,
    frozen_flow,
    get_entry,
    simplex_field,
    spectral_abscissa,
    tangent_jacobian,
)
from patchgrowth.simplexflow import report_summary


@settings(max_examples=60, deadline=None)
@given(metzler_matrices(), st.integers(0, 2**31))
def test_field_is_tangent(M, seed):
    theta = np.random.default_rng(seed).dirichlet(np.ones(M.shape[0]))
    assert abs(simplex_field(M, theta).sum()) < 1e-12 * (1 + np.abs(M).max())


@settings(max_examples=40, deadline=None)
@given(metzler_matrices(), st.integers(0, 2**31))
def test_jacobian_matches_finite_differences(M, seed):
    n = M.shape[0]
    theta = np.random.default_rng(seed).dirichlet(np.ones(n))
    Q, _ = np.linalg.qr(np.column_stack([np.ones(n), np.eye(n)[:, : n - 1]]))
    Q = Q[:, 1:]
    h = 1e-6
    cols = [(simplex_field(M, theta + h * q) - simplex_field(M, theta - h * q)) / (2 * h) for q in Q.T]
    fd = Q.T @ np.column_stack(cols)
    assert np.allclose(tangent_jacobian(M, theta), fd, atol=1e-6 * (1 + np.abs(M).max()) ** 2)


def test_jacobian_spectrum_at_eigenvector():
    A = np.array([[1.0, 0.5, 0.0], [0.2, -1.0, 0.3], [0.0, 0.4, -2.0]])
    sr = spectral_abscissa(A)
    jac = np.sort(np.linalg.eigvals(tangent_jacobian(A, sr.eigvec)).real)
    others = np.sort(np.linalg.eigvals(A).real)[:-1] - sr.lambda_max
    assert np.allclose(jac, others, atol=1e-10)


def test_frozen_flow_reaches_perron_vector():
    A = np.array([[0.0, 1.0, 0.5], [1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
    out = frozen_flow(A, [1.0, 0.0, 0.0], 80.0, record=True)
    assert np.allclose(out.final, spectral_abscissa(A).eigvec, atol=1e-8)
    assert np.all(out.theta >= 0) and np.allclose(out.theta.sum(axis=1), 1.0)


def test_frozen_flow_saddle_is_invariant():
    # fig1 season: the saddle (1/2, 1/2, 0) attracts the face theta_3 = 0
    A = np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, 0.0], [0.0, 0.0, 1.0]])
    out = frozen_flow(A, [1.0, 0.0, 0.0], 50.0)
    assert np.allclose(out.final, [0.5, 0.5, 0.0], atol=1e-8)


def test_report_invariants():
    with pytest.raises(ValueError):
        HypothesisReport("H3", "violated", [], {})
    with pytest.raises(ValueError):
        HypothesisReport("H3", "maybe", [], {})
    rep = HypothesisReport("H3", "violated", [Witness(0.0, "x")], {})
    assert report_summary(rep) == {"violated": 1, "inconclusive": 0}


class TestProtocol:
    def test_irreducible_constant_matrix_verified(self):
        A = np.array([[0.5, 1.0], [1.0, -1.0]])
        rep = check_matrix(A)
        assert rep.verdict == "verified-sampled"
        assert rep.sampling["flows"] == 16 + 1  # perturbations plus the wrap-around handoff
        assert rep.sampling["seed"] == 0

    def test_saddle_matrix_still_verified_with_stable_perron(self):
        # the Perron vector is stable; perturbations stay in its basin
        A = np.array([[-2.0, 1.0, 0.0], [1.0, -2.0, 0.0], [0.0, 0.0, 1.0]])
        assert check_matrix(A).verdict == "verified-sampled"

    def test_h4_non_simple_kernel(self):
        L = np.array([[-1.0, 1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 0.0, 0.0]])
        rep = check_matrix(L, "H4")
        assert rep.verdict == "violated"
        assert rep.witnesses[0].reason == "0 is not a simple eigenvalue of L"

    def test_fig1_handoff_witnesses(self):
        rep = check_H3(get_entry("three-patch-fig1").build(), 1.0)
        assert rep.verdict == "violated"
        handoffs = [w for w in rep.witnesses if "basin" in w.reason]
        assert [w.tau for w in handoffs] == pytest.approx([0.0, 1 / 3, 2 / 3])
        for w in handoffs:
            assert np.allclose(w.data["captured_by"], w.data["endpoint"], atol=1e-6)

    def test_deterministic_and_configurable(self):
        model = get_entry("two-patch-epsilon").build()
        r1 = check_H3(model, 1.0, seed=7)
        r2 = check_H3(model, 1.0, CheckConfig(seed=7))
        assert r1.to_dict() == r2.to_dict()
        r3 = check_H3(model, 1.0, perturbations=3)
        assert r3.sampling["perturbations"] == 3
        assert r3.sampling["flows"] < r1.sampling["flows"]

    def test_thread_pool_gives_same_report(self):
        model = get_entry("three-patch-fig1").build()
        assert check_H3(model, 1.0, n_jobs=4).to_dict() == check_H3(model, 1.0).to_dict()

    def test_smooth_segment_sampled_at_lobatto_points(self):
        L = np.array([[-1.0, 1.0], [1.0, -1.0]])
        growth = PiecewiseMatrixPath([0], [Smooth(lambda t: np.diag([np.cos(2 * np.pi * t), 0.0]))])
        model = PatchModel(growth, PiecewiseMatrixPath([0], [L]))
        rep = check_H3(model, 1.0, samples=9, perturbations=2)
        assert rep.verdict == "verified-sampled"
        assert rep.sampling["tau_samples"] == 9

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CheckConfig(samples=1)
        with pytest.raises(ValueError):
            CheckConfig(radius=2.0)
        cfg = CheckConfig()
        assert cfg.horizon(1e-9) == cfg.horizon_max
        assert cfg.horizon(1e3) == cfg.horizon_min
        assert cfg.horizon(1.0) == 50.0

    def test_h4_verified_for_irreducible_migration(self):
        assert check_H4(get_entry("two-patch-epsilon").build()).verified
