"""Uplink pilot training, MMSE estimation of the DL channel and its error
statistics.

Channel estimation error is tracked in normalized form: ``tau_dl_sq`` is the
MSE of the estimate divided by the channel variance ``l_K``, so it lies in
[0, 1] with 1 meaning no usable CSI.
"""
import math
from dataclasses import dataclass

import numpy as np

from .channel import complex_gaussian

__all__ = ['InfeasiblePilotError', 'DegenerateConfigError', 'TrainingBlock',
           'EstimateReport', 'make_training', 'make_tdma_training',
           'receive_training', 'mmse_estimate', 'compute_mse',
           'residual_si_power', 'acquire_csi']


class InfeasiblePilotError(ValueError):
    """Too few pilot symbols for orthogonal training of every UE."""


class DegenerateConfigError(ValueError):
    """Every noise and signal power is zero."""


@dataclass(frozen=True)
class TrainingBlock:
    """Pilot matrix ``S_K`` (K x length) with ``S_K S_K^H = E * P_k * I``,
    where ``E = symbols_per_ue`` is the pilot energy of one UE in symbols."""
    S_K: np.ndarray
    per_ue_power: float
    length: int
    symbols_per_ue: int


@dataclass(frozen=True)
class EstimateReport:
    """MMSE DL estimate ``H_hat`` (K x N_b) and its quality.

    ``H_hat`` has per-entry variance ``(1 - tau_dl_sq) l_K``;
    :attr:`H_norm` rescales it to the Gauss-Markov form
    ``H = sqrt(1 - tau^2) H_norm + tau E``.
    """
    H_hat: np.ndarray
    tau_dl_sq: float
    sigma_r_sq: float
    rho: float

    @property
    def H_norm(self):
        if self.tau_dl_sq >= 1.0:
            return np.zeros_like(self.H_hat)
        return self.H_hat / math.sqrt(1.0 - self.tau_dl_sq)


def make_training(K, T, P_k):
    """K orthogonal pilot rows of length T taken from the DFT basis, each
    symbol of power `P_k`."""
    if T < K:
        raise InfeasiblePilotError(f"T={T} < K={K}: cannot train every UE "
                                   "orthogonally")
    t = np.arange(T)
    k = np.arange(K)[:, None]
    S = math.sqrt(P_k) * np.exp(-2j * np.pi * k * t / T)
    return TrainingBlock(S_K=S, per_ue_power=P_k, length=T, symbols_per_ue=T)


def make_tdma_training(K, L, P_k):
    """TDMA pilots: UE k transmits alone during symbols ``[kL, (k+1)L)``."""
    if L < 1:
        raise InfeasiblePilotError("each UE needs at least one pilot symbol")
    S = np.zeros((K, K * L), dtype=complex)
    for k in range(K):
        S[k, k * L:(k + 1) * L] = math.sqrt(P_k)
    return TrainingBlock(S_K=S, per_ue_power=P_k, length=K * L,
                         symbols_per_ue=L)


def receive_training(H, training, rng, *, rho=1.0, l_K=0.0, residual_si=None,
                     V_prev=None, P_b=0.0, sigma_b_sq=0.0):
    """
    Pilot block received at the BS after A/D cancellation.

    ``Y = rho H^T S_K + sqrt((1 - rho^2) P_k) E_UL + H_res V_prev S_b + N``

    `H` is the channel being estimated (the slot the precoder will serve).
    The delay error ``E_UL`` is drawn white, IID CN(0, l_K) per entry and
    symbol; ``S_b`` is Gaussian DL data with unit power per stream scaled by
    ``sqrt(P_b)``; ``N`` is IID CN(0, sigma_b_sq).

    Returns
    -------
    Y : ndarray, shape (N_b, length)
    """
    S = training.S_K
    n_b = H.shape[1]
    T = S.shape[1]
    Y = rho * (H.T @ S)
    w = 1.0 - rho * rho
    if w > 0 and l_K > 0:
        Y = Y + math.sqrt(w * training.per_ue_power) * complex_gaussian(
            rng, (n_b, T), l_K)
    if residual_si is not None and V_prev is not None and P_b > 0:
        V_prev = np.asarray(V_prev).reshape(n_b, -1)
        S_b = math.sqrt(P_b) * complex_gaussian(rng, (V_prev.shape[1], T))
        Y = Y + residual_si @ (V_prev @ S_b)
    if sigma_b_sq > 0:
        Y = Y + complex_gaussian(rng, (n_b, T), sigma_b_sq)
    return Y


def _effective_noise(rho, sigma_b_sq, sigma_r_sq, P_rx):
    return sigma_b_sq + sigma_r_sq + (1.0 - rho * rho) * P_rx


def mmse_estimate(Y, training, rho, sigma_b_sq, sigma_r_sq, P_K_l_K, T=None):
    """
    MMSE estimate of the UL channel ``H^T`` from a received pilot block.

    ``H_hat^T = rho l_K Y S^H / (sigma_b^2 + sigma_r^2 + (1 - rho^2) P_K l_K
    + rho^2 T P_K l_K)``

    The factor ``l_K = P_K_l_K / P_k`` maps the pilot correlation back to
    channel units. `T` defaults to the pilot energy per UE of `training`.

    Returns
    -------
    H_hat_ul : ndarray, shape (N_b, K)
    """
    if min(sigma_b_sq, sigma_r_sq, P_K_l_K) < 0:
        raise ValueError("powers must be nonnegative")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    if T is None:
        T = training.symbols_per_ue
    denom = (_effective_noise(rho, sigma_b_sq, sigma_r_sq, P_K_l_K)
             + rho * rho * T * P_K_l_K)
    if denom <= 0:
        raise DegenerateConfigError("all powers are zero")
    l_K = P_K_l_K / training.per_ue_power
    return (rho * l_K / denom) * (Y @ training.S_K.conj().T)


def compute_mse(rho, sigma_b_sq, sigma_r_sq, P_rx, T):
    """Normalized DL estimation MSE ``tau_DL^2``.

    ``(s + (1-rho^2) P_rx) / (s + (1-rho^2) P_rx + rho^2 T P_rx)`` with
    ``s = sigma_b^2 + sigma_r^2``.
    """
    if min(sigma_b_sq, sigma_r_sq, P_rx) < 0 or T < 0:
        raise ValueError("powers and T must be nonnegative")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    num = _effective_noise(rho, sigma_b_sq, sigma_r_sq, P_rx)
    den = num + rho * rho * T * P_rx
    if den <= 0:
        raise DegenerateConfigError("all powers are zero")
    return num / den


def residual_si_power(residual_si, V_prev, P_b, N_b=None):
    """Per-chain residual SI power ``P_b ||H_res V||_F^2 / N_b`` (mW)."""
    residual_si = np.asarray(residual_si)
    if N_b is None:
        N_b = residual_si.shape[0]
    V_prev = np.asarray(V_prev).reshape(residual_si.shape[1], -1)
    return P_b * float(np.sum(np.abs(residual_si @ V_prev) ** 2)) / N_b


def acquire_csi(H, training, rng, *, rho, l_K, sigma_b_sq, residual_si=None,
                V_prev=None, P_b=0.0):
    """Receive one pilot block and return the MMSE estimate with its
    statistics as an :class:`EstimateReport`."""
    sigma_r_sq = 0.0
    if residual_si is not None and V_prev is not None:
        sigma_r_sq = residual_si_power(residual_si, V_prev, P_b)
    Y = receive_training(H, training, rng, rho=rho, l_K=l_K,
                         residual_si=residual_si, V_prev=V_prev, P_b=P_b,
                         sigma_b_sq=sigma_b_sq)
    P_rx = training.per_ue_power * l_K
    H_ul = mmse_estimate(Y, training, rho, sigma_b_sq, sigma_r_sq, P_rx)
    tau = compute_mse(rho, sigma_b_sq, sigma_r_sq, P_rx,
                      training.symbols_per_ue)
    return EstimateReport(H_hat=H_ul.T, tau_dl_sq=tau, sigma_r_sq=sigma_r_sq,
                          rho=rho)
