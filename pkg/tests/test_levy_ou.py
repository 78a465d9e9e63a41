import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nmdrisk.levy_ou import (OuParams, Var1Params, expm_lower_triangular,
                             gaussian_step_covariance, logm_lower_triangular_3x3,
                             ou_to_var1, solve_lower_triangular,
                             stationarity_check, var1_to_ou)
from conftest import rng

DT = 1.0 / 12.0


def random_stationary(r):
    k = np.tril(r.normal(0.0, 2.0, (3, 3)))
    np.fill_diagonal(k, r.uniform(0.05, 4.0, 3))
    sig = np.tril(r.normal(0.0, 1.0, (3, 3)))
    np.fill_diagonal(sig, 1.0)
    theta = r.normal(0.0, 5.0, 3)
    return OuParams(K=k, theta=theta, Sigma=sig)


class TestTypes:
    def test_ou_params_validation(self):
        eye = np.eye(3)
        with pytest.raises(ValueError):
            OuParams(K=np.diag([0.1, -0.2, 0.3]), theta=np.zeros(3), Sigma=eye)
        with pytest.raises(ValueError):
            OuParams(K=np.full((3, 3), 1.0), theta=np.zeros(3), Sigma=eye)
        bad_sigma = eye.copy()
        bad_sigma[0, 0] = 2.0
        with pytest.raises(ValueError):
            OuParams(K=np.diag([1.0, 1, 1]), theta=np.zeros(3), Sigma=bad_sigma)

    def test_var1_params_validation(self):
        eye = np.eye(3)
        ok = Var1Params(a=np.zeros(3), B=0.9 * eye, S=eye, sigma=np.ones(3))
        assert ok.noise_family == "gaussian"
        with pytest.raises(ValueError):
            Var1Params(a=np.zeros(3), B=-0.5 * eye, S=eye, sigma=np.ones(3))
        with pytest.raises(ValueError):
            Var1Params(a=np.zeros(3), B=0.9 * eye, S=eye, sigma=np.array([1.0, 0.0, 1.0]))
        with pytest.raises(ValueError):
            Var1Params(a=np.zeros(3), B=0.9 * eye, S=eye, sigma=np.ones(3),
                       noise_family="nig", nig=None)

    def test_var1_nig_moment_consistency_enforced(self):
        from nmdrisk.nig import NigParams
        eye = np.eye(3)
        # a quadruple with mean far from zero must be rejected
        bad = NigParams(alpha=2.0, beta=1.0, delta=1.0, mu=5.0)
        with pytest.raises(ValueError):
            Var1Params(a=np.zeros(3), B=0.9 * eye, S=eye, sigma=np.ones(3),
                       noise_family="nig", nig=(bad, bad, bad))

    def test_from_nig_free(self):
        eye = np.eye(3)
        p = Var1Params.from_nig_free(np.zeros(3), 0.9 * eye, eye,
                                     np.array([0.1, 0.2, 0.3]),
                                     log_gamma=[1.0, 2.0, 3.0],
                                     beta=[0.5, -0.5, 0.0])
        assert p.noise_family == "nig"
        assert len(p.nig) == 3


class TestDriftConversion:
    def test_market_rate_anchor_gaussian(self):
        p = OuParams(K=np.diag([0.136515, 1.0, 1.0]), theta=np.zeros(3), Sigma=np.eye(3))
        _, b = ou_to_var1(p, DT)
        assert b[0, 0] == pytest.approx(0.988688, abs=5e-6)

    def test_market_rate_anchor_heavy_tail_fit(self):
        p = OuParams(K=np.diag([0.044145, 1.0, 1.0]), theta=np.zeros(3), Sigma=np.eye(3))
        _, b = ou_to_var1(p, DT)
        assert b[0, 0] == pytest.approx(0.996328, abs=5e-6)

    def test_zero_reversion_limit(self):
        # K -> 0 means B -> I, a -> 0 (tested through expm directly because
        # OuParams requires strictly positive reversion)
        assert np.array_equal(expm_lower_triangular(np.zeros((3, 3))), np.eye(3))
        p = OuParams(K=np.diag([1e-12, 1e-12, 1e-12]), theta=np.ones(3), Sigma=np.eye(3))
        a, b = ou_to_var1(p, DT)
        assert np.allclose(b, np.eye(3), atol=1e-12)
        assert np.allclose(a, 0.0, atol=1e-12)

    def test_speed_from_one_step_matrix(self):
        k, theta = var1_to_ou(np.array([-0.000039, 0.0, 0.0]),
                              np.diag([0.988688, 0.5, 0.5]), DT)
        assert k[0, 0] == pytest.approx(0.136515, abs=5e-5)
        assert theta[0] == pytest.approx(-0.003478, abs=5e-5)
        k, _ = var1_to_ou(np.zeros(3), np.diag([0.996328, 0.5, 0.5]), DT)
        assert k[0, 0] == pytest.approx(0.044145, abs=5e-5)

    def test_zero_intercept_gives_zero_level(self):
        _, theta = var1_to_ou(np.zeros(3), np.diag([0.9, 0.8, 0.7]), DT)
        assert np.array_equal(theta, np.zeros(3))

    def test_round_trip_many_instances(self):
        r = rng(2718)
        for _ in range(1000):
            p = random_stationary(r)
            a, b = ou_to_var1(p, DT)
            k2, th2 = var1_to_ou(a, b, DT)
            assert np.abs(k2 - p.K).max() < 1e-10 * max(1.0, np.abs(p.K).max())
            assert np.abs(th2 - p.theta).max() < 1e-9

    def test_non_stationary_rejected(self):
        with pytest.raises(ValueError):
            var1_to_ou(np.zeros(3), np.diag([1.0, 0.5, 0.5]), DT)
        with pytest.raises(ValueError):
            var1_to_ou(np.zeros(3), np.diag([0.5, 1.2, 0.5]), DT)
        with pytest.raises(ValueError):
            var1_to_ou(np.zeros(3), np.diag([0.5, 0.5, -0.1]), DT)

    def test_triangularity_preserved_exactly(self):
        r = rng(13)
        for _ in range(200):
            p = random_stationary(r)
            _, b = ou_to_var1(p, DT)
            assert np.all(np.triu(b, 1) == 0.0)
            k2, _ = var1_to_ou(np.zeros(3), b, DT)
            assert np.all(np.triu(k2, 1) == 0.0)

    @given(d1=st.floats(0.05, 4.0), d2=st.floats(0.05, 4.0), d3=st.floats(0.05, 4.0),
           o1=st.floats(-3.0, 3.0), o2=st.floats(-3.0, 3.0), o3=st.floats(-3.0, 3.0))
    @settings(max_examples=150, deadline=None)
    def test_log_inverts_exp(self, d1, d2, d3, o1, o2, o3):
        a = -np.array([[d1, 0, 0], [o1, d2, 0], [o2, o3, d3]]) * DT
        e = expm_lower_triangular(a)
        back = logm_lower_triangular_3x3(e)
        assert np.abs(back - a).max() < 1e-12


class TestStepCovariance:
    def test_scalar_closed_form(self):
        k = 0.7
        p = OuParams(K=np.diag([k, k, k]), theta=np.zeros(3), Sigma=np.eye(3))
        c = gaussian_step_covariance(p, 0.5)
        expected = (1.0 - math.exp(-2.0 * k * 0.5)) / (2.0 * k)
        assert np.allclose(c, expected * np.eye(3), rtol=1e-13)

    def test_stationary_limit_solves_lyapunov(self):
        r = rng(31)
        for _ in range(20):
            p = random_stationary(r)
            c = gaussian_step_covariance(p, math.inf)
            resid = p.K @ c + c @ p.K.T - p.Sigma @ p.Sigma.T
            assert np.abs(resid).max() < 1e-8

    def test_positive_semidefinite(self):
        r = rng(32)
        for _ in range(50):
            p = random_stationary(r)
            c = gaussian_step_covariance(p, DT)
            assert np.allclose(c, c.T)
            assert np.linalg.eigvalsh(c).min() >= -1e-12

    def test_matches_euler_simulation(self):
        # one instance here; the acceptance suite runs twenty
        r = rng(404)
        p = random_stationary(r)
        c = gaussian_step_covariance(p, DT)
        n_paths, n_sub = 200_000, 256
        h = DT / n_sub
        x = np.zeros((n_paths, 3))
        for _ in range(n_sub):
            dw = r.normal(0.0, math.sqrt(h), (n_paths, 3))
            x = x - (x @ p.K.T) * h + dw @ p.Sigma.T
        emp = np.cov(x, rowvar=False)
        scale = np.sqrt(np.outer(np.diag(c), np.diag(c)))
        assert np.abs(emp - c).max() / scale.max() < 0.01
        assert np.all(np.abs(emp - c) <= 0.015 * scale)


class TestStationarity:
    def test_fitted_diagonals_pass(self):
        res = stationarity_check(np.diag([0.996328, 0.992096, 0.995876]), "B")
        assert res
        assert res.eigenvalues == (0.996328, 0.992096, 0.995876)

    def test_unit_root_fails(self):
        assert not stationarity_check(np.diag([1.0, 0.5, 0.5]), "B")

    def test_negative_speed_fails(self):
        assert not stationarity_check(np.diag([0.1, -0.2, 0.3]), "K")

    def test_positive_speeds_pass(self):
        assert stationarity_check(np.diag([0.1, 0.2, 0.3]), "K")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            stationarity_check(np.eye(3), "Q")


class TestSolver:
    def test_forward_substitution(self):
        r = rng(8)
        for _ in range(100):
            l = np.tril(r.normal(0, 1, (3, 3)))
            np.fill_diagonal(l, r.uniform(0.5, 2.0, 3))
            b = r.normal(0, 1, 3)
            x = solve_lower_triangular(l, b)
            assert np.allclose(l @ x, b, atol=1e-12)

    def test_singular_raises(self):
        l = np.tril(np.ones((3, 3)))
        l[1, 1] = 0.0
        with pytest.raises(ValueError):
            solve_lower_triangular(l, np.ones(3))
