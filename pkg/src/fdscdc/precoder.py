"""Joint design of the BS precoder and the A/D self-interference cancellers.

For a given analog tap realization the precoder is ``V_b = F_b G_b``: ``F_b``
spans the weakest right-singular directions of the post-analog residual
``H_bb_hat + C_b`` and ``G_b`` zero-forces the effective channel
``H_hat F_b``. The subspace dimension ``alpha`` is lowered from ``N_b`` until
every RX chain of the BS stays below its saturation threshold.
"""
from dataclasses import dataclass, field

import numpy as np

from . import cancellation as canc
from .numerics import (NearSingularError, hermitian_solve, log_det_hermitian,
                       right_singular_basis)

__all__ = ['PrecoderDesign', 'zf_precoder', 'sort_rows_desc', 'design',
           'design_for_taps', 'satisfies_constraints']


@dataclass(frozen=True)
class PrecoderDesign:
    """Outcome of the joint design.

    V_b : (N_b, m) precoder with unit Frobenius norm, or None if infeasible.
    alpha : dimension of the retained singular subspace (0 if infeasible).
    permutation : row order produced by the sort step (output row -> user).
    served : users receiving a stream, in stream order.
    """
    V_b: np.ndarray = None
    alpha: int = 0
    permutation: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    served: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    feasible: bool = False
    objective: float = 0.0


def zf_precoder(Z):
    """
    Power-normalized zero-forcing precoder for an (m x alpha) channel.

    ``G = beta Z^H (Z Z^H)^{-1}`` with ``beta = 1 / sqrt(tr((Z Z^H)^{-1}))``,
    so ``Z G = beta I`` and ``tr(G G^H) = 1``.

    Raises
    ------
    NearSingularError
        If ``Z Z^H`` is rank deficient or too ill-conditioned.
    """
    Z = np.asarray(Z)
    m, alpha = Z.shape
    if m > alpha:
        raise ValueError(f"cannot zero-force {m} streams in {alpha} dims")
    A = Z @ Z.conj().T
    A_inv = hermitian_solve(A, np.eye(m))
    beta = 1.0 / np.sqrt(np.trace(A_inv).real)
    return beta * (Z.conj().T @ A_inv)


def sort_rows_desc(M):
    """Reorder rows by nonincreasing Euclidean norm (ties keep input order).

    Returns
    -------
    sorted : ndarray
    perm : ndarray of int
        ``sorted[i] == M[perm[i]]``.
    """
    M = np.asarray(M)
    perm = np.argsort(-np.linalg.norm(M, axis=1), kind='stable')
    return M[perm], perm


def satisfies_constraints(R, V, P_b, lambda_b, ue_powers, lambda_k):
    """Both saturation families: per BS RX chain and per UE."""
    bs = canc.per_chain_residual_powers(R, V, P_b)
    return bool(np.all(bs <= lambda_b) and np.all(ue_powers <= lambda_k))


def _objective(H_hat, V, served, tau_dl_sq, P_b, Sigma_k):
    Hs = H_hat[served]
    S = Sigma_k[np.ix_(served, served)]
    A = (1.0 - tau_dl_sq) * P_b * (Hs @ V) @ (Hs @ V).conj().T
    return log_det_hermitian(S + A) - log_det_hermitian(S)


def design_for_taps(H_hat, R, P_b, lambda_b, ue_ok, m_b):
    """Subspace search for one fixed analog residual ``R = H_bb_hat + C_b``.

    Returns ``(V_b, alpha, perm, served)`` or None when even the
    single-direction fallback saturates a receiver.
    """
    if not ue_ok:
        return None
    n_b = R.shape[0]
    Q = right_singular_basis(R)
    for alpha in range(n_b, 1, -1):
        m = min(m_b, alpha)
        F = Q[:, n_b - alpha:]
        W, perm = sort_rows_desc(H_hat @ F)
        try:
            G = zf_precoder(W[:m])
        except NearSingularError:
            continue
        V = F @ G
        if np.all(canc.per_chain_residual_powers(R, V, P_b) <= lambda_b):
            return V, alpha, perm, perm[:m]
    V = Q[:, -1:]
    if np.all(canc.per_chain_residual_powers(R, V, P_b) <= lambda_b):
        # a single stream carries data to the user it reaches best
        _, perm = sort_rows_desc(H_hat @ V)
        return V, 1, perm, perm[:1]
    return None


def design(H_hat, H_bb_hat, H_KK_hat, N, P_b, P_K, lambda_b, lambda_k,
           m_b=None, q=None, *, placement='search', tau_dl_sq=0.0,
           Sigma_k=None):
    """
    Joint precoder / canceller design maximizing the estimated DL rate.

    Every tap realization from :func:`cancellation.candidate_tap_sets` is
    run through the subspace search; among the feasible ones the design with
    the largest estimated DL rate is kept (first wins on ties).

    Parameters
    ----------
    H_hat : (K, N_b) DL channel estimate in Gauss-Markov normalized form.
    H_bb_hat, H_KK_hat : SI channel estimates at the BS and the UEs.
    N : analog tap budget of the BS.
    P_b, P_K : BS total and per-UE transmit powers (mW).
    lambda_b, lambda_k : RX saturation thresholds (mW).
    m_b : number of streams, defaults to K.
    q : QuantizerSpec for the analog taps, None for ideal taps.
    tau_dl_sq, Sigma_k : CSI quality and interference-plus-noise covariance
        used only to rank tap realizations; ``Sigma_k`` defaults to I.

    Returns
    -------
    PrecoderDesign, CancellerState
        The canceller state is returned for infeasible outcomes too (from
        the first realization) so callers can inspect it.
    """
    H_hat = np.asarray(H_hat)
    K, n_b = H_hat.shape
    if m_b is None:
        m_b = K
    if not 1 <= m_b <= min(K, n_b):
        raise ValueError(f"m_b={m_b} must lie in [1, min(K, N_b)]")
    if not (P_b > 0 and P_K > 0 and lambda_b > 0 and lambda_k > 0):
        raise ValueError("powers and thresholds must be positive")
    if Sigma_k is None:
        Sigma_k = np.eye(K)

    C_K, D_K = canc.build_ue_cancellers(H_KK_hat, q)
    ue_ok = bool(np.all(canc.ue_residual_powers(H_KK_hat, C_K, P_K)
                        <= lambda_k))

    best = None
    first_state = None
    for taps in canc.candidate_tap_sets(H_bb_hat, N, placement):
        C_b, taps = canc.build_analog_canceller(H_bb_hat, N, q, taps=taps)
        D_b = canc.build_digital_canceller_bs(H_bb_hat, C_b)
        state = canc.CancellerState(C_b=C_b, tap_positions=taps, C_K=C_K,
                                    D_b=D_b, D_K=D_K)
        if first_state is None:
            first_state = state
        found = design_for_taps(H_hat, H_bb_hat + C_b, P_b, lambda_b, ue_ok,
                                m_b)
        if found is None:
            continue
        V, alpha, perm, served = found
        obj = _objective(H_hat, V, served, tau_dl_sq, P_b, Sigma_k)
        if best is None or obj > best[0].objective:
            best = (PrecoderDesign(V_b=V, alpha=alpha, permutation=perm,
                                   served=served, feasible=True,
                                   objective=obj), state)
    if best is None:
        return PrecoderDesign(), first_state
    return best
