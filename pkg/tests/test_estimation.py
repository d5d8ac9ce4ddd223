import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdscdc import estimation as est
from fdscdc.channel import ChannelParams, draw_initial, jakes_rho

L_K = 1e-11
P_K = 10.0
SIGMA = 1e-10


class TestTraining:
    def test_small(self):
        S = est.make_training(2, 4, 1.0).S_K
        np.testing.assert_allclose(S @ S.conj().T, 4 * np.eye(2), atol=1e-12)

    def test_operating_point(self):
        S = est.make_training(4, 400, 10.0).S_K
        np.testing.assert_allclose(S @ S.conj().T, 4000 * np.eye(4),
                                   rtol=1e-10, atol=1e-10 * 4000)

    def test_single_user(self):
        S = est.make_training(1, 7, 3.0).S_K
        assert np.sum(np.abs(S) ** 2) == pytest.approx(21.0)

    def test_too_short(self):
        with pytest.raises(est.InfeasiblePilotError):
            est.make_training(4, 3, 1.0)

    def test_tdma(self):
        tr = est.make_tdma_training(3, 5, 2.0)
        S = tr.S_K
        np.testing.assert_allclose(S @ S.conj().T, 10 * np.eye(3))
        assert tr.symbols_per_ue == 5 and tr.length == 15
        with pytest.raises(est.InfeasiblePilotError):
            est.make_tdma_training(3, 0, 1.0)


def _channel(seed=0):
    return draw_initial(ChannelParams(), np.random.default_rng(seed)).H


class TestReceive:
    def test_noiseless(self):
        H = _channel()
        tr = est.make_training(4, 400, P_K)
        Y = est.receive_training(H, tr, np.random.default_rng(0))
        np.testing.assert_allclose(Y, H.T @ tr.S_K)

    def test_interference_only_power(self):
        tr = est.make_training(4, 400, P_K)
        tr0 = est.TrainingBlock(np.zeros_like(tr.S_K), P_K, 400, 400)
        rng = np.random.default_rng(1)
        R = 1e-7 * (rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
        V = np.linalg.qr(rng.standard_normal((8, 4)))[0] / 2.0  # ||V||_F = 1
        P_b = 1e4
        sig_r = est.residual_si_power(R, V, P_b)
        Y = np.concatenate([est.receive_training(
            np.zeros((4, 8)), tr0, rng, residual_si=R, V_prev=V, P_b=P_b,
            sigma_b_sq=SIGMA) for _ in range(50)], axis=1)
        assert np.mean(np.abs(Y) ** 2) == pytest.approx(sig_r + SIGMA,
                                                        rel=0.03)

    def test_reproducible(self):
        H = _channel()
        tr = est.make_training(4, 400, P_K)
        kw = dict(rho=0.97, l_K=L_K, sigma_b_sq=SIGMA)
        a = est.receive_training(H, tr, np.random.default_rng(3), **kw)
        b = est.receive_training(H, tr, np.random.default_rng(3), **kw)
        assert np.array_equal(a, b)


class TestMmse:
    def test_rho_zero(self):
        tr = est.make_training(4, 400, P_K)
        Y = np.ones((8, 400))
        assert not np.any(est.mmse_estimate(Y, tr, 0.0, SIGMA, 0.0,
                                            P_K * L_K))

    def test_scalar_gain(self):
        rho = 0.97533
        tr = est.make_training(1, 400, P_K)
        Y = tr.S_K.copy()  # a single antenna, y = s: Y S^H = T P_k
        got = est.mmse_estimate(Y, tr, rho, SIGMA, 0.0, 1e-10)[0, 0]
        gain = rho * 1e-11 / (1e-10 + (1 - rho ** 2) * 1e-10
                              + rho ** 2 * 400 * 1e-10)
        assert got.real == pytest.approx(gain * 400 * P_K, rel=1e-12)
        assert abs(got.imag) < 1e-12 * abs(got)

    def test_degenerate(self):
        tr = est.make_training(1, 4, P_K)
        with pytest.raises(est.DegenerateConfigError):
            est.mmse_estimate(np.zeros((1, 4)), tr, 1.0, 0.0, 0.0, 0.0)


class TestMse:
    def test_no_correlation(self):
        assert est.compute_mse(0.0, SIGMA, 0.0, 1e-10, 400) == 1.0

    def test_operating_point(self):
        assert est.compute_mse(1.0, 1e-10, 0.0, 1e-10, 400) == pytest.approx(
            1 / 401, rel=1e-12)

    def test_long_training_limit(self):
        assert est.compute_mse(1.0, 1e-10, 0.0, 1e-10, 10 ** 12) < 1e-11

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(1e-12, 1e-8),
           st.floats(0, 1e-8), st.integers(1, 1000))
    def test_monotone(self, r1, r2, s, sr, T):
        lo, hi = sorted((r1, r2))
        P = 1e-10
        assert est.compute_mse(hi, s, sr, P, T) <= \
            est.compute_mse(lo, s, sr, P, T) + 1e-15
        assert est.compute_mse(hi, s, sr, P, T + 1) <= \
            est.compute_mse(hi, s, sr, P, T) + 1e-15
        assert est.compute_mse(hi, 2 * s, sr, P, T) >= \
            est.compute_mse(hi, s, sr, P, T) - 1e-15
        assert est.compute_mse(hi, s, 2 * sr + 1e-12, P, T) >= \
            est.compute_mse(hi, s, sr, P, T) - 1e-15

    def test_degenerate(self):
        with pytest.raises(est.DegenerateConfigError):
            est.compute_mse(1.0, 0.0, 0.0, 0.0, 4)


class TestResidualSiPower:
    def test_zero(self):
        assert est.residual_si_power(np.zeros((8, 8)), np.eye(8, 1), 1e4) == 0

    def test_identity(self):
        V = np.full((8, 4), 1 / math.sqrt(32))
        assert est.residual_si_power(np.eye(8), V, 1e4, 8) == pytest.approx(
            1250.0)


def _mmse_trials(n, rho, seed=0):
    """Empirical normalized MSE and estimate/error correlation."""
    rng = np.random.default_rng(seed)
    p = ChannelParams()
    tr = est.make_training(4, 400, P_K)
    errs, hats = [], []
    tau = None
    for _ in range(n):
        H = draw_initial(p, rng).H
        rep = est.acquire_csi(H, tr, rng, rho=rho, l_K=L_K, sigma_b_sq=SIGMA)
        tau = rep.tau_dl_sq
        errs.append((H - rep.H_hat).ravel())
        hats.append(rep.H_hat.ravel())
    return np.concatenate(errs), np.concatenate(hats), tau


def test_estimator_statistic_consistency():
    e, _, tau = _mmse_trials(2000, jakes_rho(50.0, 1e-3))
    assert np.mean(np.abs(e) ** 2) / L_K == pytest.approx(tau, rel=0.05)


def test_orthogonality():
    e, h, _ = _mmse_trials(2000, jakes_rho(50.0, 1e-3), seed=1)
    c = np.mean(h * e.conj()) / math.sqrt(np.mean(np.abs(h) ** 2)
                                          * np.mean(np.abs(e) ** 2))
    assert abs(c) < 0.03


def test_normalized_estimate():
    rep = est.EstimateReport(np.ones((2, 2)), 0.75, 0.0, 1.0)
    np.testing.assert_allclose(rep.H_norm, 2 * np.ones((2, 2)))
    assert not np.any(est.EstimateReport(np.ones((1, 1)), 1.0, 0, 0).H_norm)
