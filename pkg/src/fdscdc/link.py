"""Per-slot simulation of the compared transmission schemes.

Every trial covers two slots, ``i-1`` and ``i``. Pilots received during slot
``i-1`` give the CSI used to precode slot ``i``; the reported figure of merit
is the estimated achievable DL rate of slot ``i`` in bits per channel use.

Schemes
-------
SCDC
    Full duplex: DL data in every symbol while all UEs send orthogonal pilots
    for the whole slot. Limited analog cancellation at the BS.
SBFD
    Sequential beamforming: UEs train one after another (TDMA) and the BS
    starts serving each UE as soon as its CSI is available. Perfect SI
    cancellation.
HD
    Half duplex: a training phase with orthogonal pilots, then DL data.
IDEAL
    SCDC with perfect CSI and perfect SI cancellation.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import cancellation as canc
from .channel import complex_gaussian, draw_initial, evolve, jakes_rho
from .estimation import acquire_csi, make_tdma_training, make_training
from .numerics import NearSingularError, log_det_hermitian
from .precoder import design, sort_rows_desc, zf_precoder

__all__ = ['Scheme', 'SchemeParams', 'SlotOutcome', 'TrialChannels',
           'interference_covariance', 'downlink_rate', 'draw_trial',
           'run_scdc_trial', 'run_hd_trial', 'run_sbfd_trial',
           'run_ideal_trial', 'run_trial']


class Scheme(enum.Enum):
    SCDC = 'scdc'
    SBFD = 'sbfd'
    HD = 'hd'
    IDEAL = 'ideal'


@dataclass(frozen=True)
class SchemeParams:
    """Protocol and power parameters shared by all schemes (powers in mW)."""
    P_b: float = 1e4
    P_k: float = 10.0
    sigma_b_sq: float = 1e-10
    sigma_K_sq: float = 1e-10
    lambda_b: float = 1e-5
    lambda_k: float = 1e-5
    N: int = 64
    T: int = 400
    training_fraction: float = 0.1
    m_b: int = None
    quantizer: canc.QuantizerSpec = canc.QuantizerSpec()
    placement: str = 'search'
    tau_si: float = 0.0

    def __post_init__(self):
        for name in ('P_b', 'P_k', 'sigma_b_sq', 'sigma_K_sq', 'lambda_b',
                     'lambda_k'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.T < 1 or self.N < 0:
            raise ValueError("T must be >= 1 and N >= 0")
        if not 0.0 < self.training_fraction < 1.0:
            raise ValueError("training_fraction must lie in (0, 1)")
        if not 0.0 <= self.tau_si <= 1.0:
            raise ValueError("tau_si must lie in [0, 1]")

    @property
    def training_symbols(self):
        return int(math.floor(self.training_fraction * self.T + 1e-9))


@dataclass(frozen=True)
class SlotOutcome:
    rate_bits_per_use: float
    tau_dl_sq: float
    feasible: bool
    scheme: Scheme
    alpha: int = 0
    streams: int = 0


@dataclass(frozen=True)
class TrialChannels:
    """Channel draws shared by every scheme of one Monte Carlo trial."""
    prev: object
    next: object
    H_bb_hat: np.ndarray
    H_KK_hat: np.ndarray
    H_warm: np.ndarray


def interference_covariance(residual_ue_si, H_IN, s_K_cov_scale, tau_dl_sq,
                            P_b, l_K, V_b, sigma_K_sq):
    """
    Interference-plus-noise covariance at the UEs (K x K).

    ``sigma_K^2 I + Ht R_s Ht^H + H_IN R_s H_IN^H + tau^2 P_b l_K tr(V V^H) I``
    with ``R_s = s_K_cov_scale I`` the pilot covariance and ``Ht`` the
    residual UE self-interference. ``V_b=None`` stands for a unit-norm
    precoder.
    """
    K = H_IN.shape[0]
    R = np.asarray(residual_ue_si)
    trace = 1.0 if V_b is None else float(np.sum(np.abs(V_b) ** 2))
    Sigma = (sigma_K_sq + tau_dl_sq * P_b * l_K * trace) * np.eye(K,
                                                                 dtype=complex)
    if s_K_cov_scale:
        Sigma = Sigma + s_K_cov_scale * (R @ R.conj().T
                                         + H_IN @ H_IN.conj().T)
    return 0.5 * (Sigma + Sigma.conj().T)


def downlink_rate(H_hat, V_b, tau_dl_sq, P_b, Sigma_k):
    """
    Estimated achievable DL rate in bits per channel use.

    ``log2 det(I + (1 - tau^2) P_b H V V^H H^H Sigma^{-1})``, evaluated as
    ``log2 det(Sigma + A) - log2 det(Sigma)`` so both factorizations act on
    Hermitian positive definite matrices.
    """
    if tau_dl_sq >= 1.0:
        return 0.0
    HV = H_hat @ V_b
    A = (1.0 - tau_dl_sq) * P_b * (HV @ HV.conj().T)
    return max(0.0, log_det_hermitian(Sigma_k + A)
               - log_det_hermitian(Sigma_k))


def draw_trial(chan, sp, rng):
    """Draw slot ``i-1`` channels, evolve them to slot ``i`` and draw the SI
    channel estimates and the warm-up channel. The number of draws does not
    depend on parameter values, so trials stay matched across sweeps."""
    prev = draw_initial(chan, rng)
    nxt = evolve(prev, jakes_rho(chan.f_d, chan.T_c), chan, rng)
    e_bb = complex_gaussian(rng, prev.H_bb.shape, chan.l_bb)
    e_kk = np.diag(complex_gaussian(rng, chan.k_users, chan.l_kk))
    H_warm = complex_gaussian(rng, prev.H.shape, chan.l_K)
    t = sp.tau_si
    w = math.sqrt(1.0 - t * t)
    return TrialChannels(prev=prev, next=nxt,
                         H_bb_hat=w * prev.H_bb + t * e_bb,
                         H_KK_hat=w * prev.H_KK + t * e_kk,
                         H_warm=H_warm)


def _full_space_zf(H_hat, m_b):
    W, perm = sort_rows_desc(H_hat)
    try:
        G = zf_precoder(W[:m_b])
    except NearSingularError:
        return None, perm[:0]
    return G, perm[:m_b]


def _rate_on(H_hat, V, served, tau, P_b, Sigma):
    if V is None or len(served) == 0:
        return 0.0
    return downlink_rate(H_hat[served], V, tau, P_b,
                         Sigma[np.ix_(served, served)])


def _m_b(sp, K, n_b):
    return min(K, n_b) if sp.m_b is None else min(sp.m_b, K, n_b)


def run_scdc_trial(sp, chan, channels_prev, channels_next, canceller_state,
                   V_prev, rng, *, H_bb_hat=None, H_KK_hat=None):
    """
    One slot of the proposed scheme.

    1. Receive the slot ``i-1`` pilots under the residual SI left by
       `canceller_state` and `V_prev`.
    2. MMSE-estimate the slot ``i`` DL channel (delay through ``rho``).
    3. Jointly design precoder and cancellers, then evaluate the rate with
       the slot ``i`` interference covariance. No training overhead.
    """
    K, n_b = channels_next.H.shape
    if H_bb_hat is None:
        H_bb_hat = channels_prev.H_bb
    if H_KK_hat is None:
        H_KK_hat = channels_prev.H_KK
    rho = jakes_rho(chan.f_d, chan.T_c)
    residual = None
    if canceller_state is not None and V_prev is not None:
        residual = (channels_prev.H_bb + canceller_state.C_b
                    + canceller_state.D_b)
    training = make_training(K, sp.T, sp.P_k)
    est = acquire_csi(channels_next.H, training, rng, rho=rho, l_K=chan.l_K,
                      sigma_b_sq=sp.sigma_b_sq, residual_si=residual,
                      V_prev=V_prev, P_b=sp.P_b)
    tau = est.tau_dl_sq
    H_n = est.H_norm

    C_K, D_K = canc.build_ue_cancellers(H_KK_hat, sp.quantizer)
    residual_ue = channels_next.H_KK + C_K + D_K
    Sigma = interference_covariance(residual_ue, channels_next.H_IN, sp.P_k,
                                    tau, sp.P_b, chan.l_K, None,
                                    sp.sigma_K_sq)
    pd, _ = design(H_n, H_bb_hat, H_KK_hat, sp.N, sp.P_b, sp.P_k,
                   sp.lambda_b, sp.lambda_k, _m_b(sp, K, n_b), sp.quantizer,
                   placement=sp.placement, tau_dl_sq=tau, Sigma_k=Sigma)
    if not pd.feasible or tau >= 1.0:
        return SlotOutcome(0.0, tau, False, Scheme.SCDC)
    rate = _rate_on(H_n, pd.V_b, pd.served, tau, sp.P_b, Sigma)
    return SlotOutcome(rate, tau, True, Scheme.SCDC, pd.alpha,
                       len(pd.served))


def run_hd_trial(sp, chan, channels, rng):
    """Half duplex: ``T_tr = floor(f T)`` orthogonal pilot symbols in the
    same slot, no self- or inter-node interference, data in the remaining
    ``1 - T_tr / T`` of the slot."""
    K, n_b = channels.H.shape
    T_tr = sp.training_symbols
    training = make_training(K, T_tr, sp.P_k)
    est = acquire_csi(channels.H, training, rng, rho=1.0, l_K=chan.l_K,
                      sigma_b_sq=sp.sigma_b_sq)
    tau = est.tau_dl_sq
    H_n = est.H_norm
    V, served = _full_space_zf(H_n, _m_b(sp, K, n_b))
    Sigma = interference_covariance(np.zeros((K, K)), np.zeros((K, K)), 0.0,
                                    tau, sp.P_b, chan.l_K, V, sp.sigma_K_sq)
    rate = (1.0 - T_tr / sp.T) * _rate_on(H_n, V, served, tau, sp.P_b, Sigma)
    return SlotOutcome(rate, tau, V is not None, Scheme.HD, n_b, len(served))


def run_sbfd_trial(sp, chan, channels_prev, channels_next, rng):
    """
    Sequential beamforming with full-duplex training at the BS.

    UE ``j`` sends ``L = floor(f T / K)`` pilot symbols in its own TDMA
    window. While UE ``j`` trains, the BS zero-forces towards the UEs
    trained before it, which also hear UE ``j``'s pilot through the
    inter-node channel. After the last window all UEs are served without
    inter-node interference. SI cancellation is perfect and CSI is always
    from the current slot, so the rate does not depend on the Doppler
    frequency.
    """
    K, n_b = channels_next.H.shape
    L = sp.training_symbols // K
    training = make_tdma_training(K, L, sp.P_k)
    est = acquire_csi(channels_next.H, training, rng, rho=1.0, l_K=chan.l_K,
                      sigma_b_sq=sp.sigma_b_sq)
    tau = est.tau_dl_sq
    H_n = est.H_norm
    m_b = _m_b(sp, K, n_b)
    base = (sp.sigma_K_sq + tau * sp.P_b * chan.l_K) * np.eye(K)

    V, served = _full_space_zf(H_n, m_b)
    rate = (1.0 - K * L / sp.T) * _rate_on(H_n, V, served, tau, sp.P_b, base)
    H_IN = channels_next.H_IN
    for j in range(1, K):
        trained = np.arange(j)
        V_j, sel = _full_space_zf(H_n[trained], min(m_b, j))
        h = H_IN[:, j:j + 1]
        Sigma_j = base + sp.P_k * (h @ h.conj().T)
        rate += (L / sp.T) * _rate_on(H_n, V_j, trained[sel], tau, sp.P_b,
                                      Sigma_j)
    return SlotOutcome(rate, tau, V is not None, Scheme.SBFD, n_b,
                       len(served))


def run_ideal_trial(sp, chan, channels_next):
    """Perfect CSI and perfect SI cancellation; inter-node interference from
    the UL pilots remains."""
    K, n_b = channels_next.H.shape
    H = channels_next.H
    V, served = _full_space_zf(H, _m_b(sp, K, n_b))
    Sigma = interference_covariance(np.zeros((K, K)), channels_next.H_IN,
                                    sp.P_k, 0.0, sp.P_b, chan.l_K, V,
                                    sp.sigma_K_sq)
    rate = _rate_on(H, V, served, 0.0, sp.P_b, Sigma)
    return SlotOutcome(rate, 0.0, V is not None, Scheme.IDEAL, n_b,
                       len(served))


def warm_up(sp, chan, trial):
    """Canceller state and precoder in force during slot ``i-1``, designed
    by the same algorithm on an independent DL channel draw."""
    residual = trial.prev.H_bb - trial.H_bb_hat
    if not np.any(residual):
        # the digital canceller removes all SI: slot i-1 precoder is moot
        return None, None
    K, n_b = trial.H_warm.shape
    pd, state = design(trial.H_warm, trial.H_bb_hat, trial.H_KK_hat, sp.N,
                       sp.P_b, sp.P_k, sp.lambda_b, sp.lambda_k,
                       _m_b(sp, K, n_b), sp.quantizer,
                       placement=sp.placement)
    if not pd.feasible:
        return None, None
    return state, pd.V_b


def run_trial(scheme, sp, chan, trial, rng):
    """Dispatch one scheme on the channels of `trial`."""
    scheme = Scheme(scheme)
    if scheme is Scheme.SCDC:
        state, V_prev = warm_up(sp, chan, trial)
        return run_scdc_trial(sp, chan, trial.prev, trial.next, state,
                              V_prev, rng, H_bb_hat=trial.H_bb_hat,
                              H_KK_hat=trial.H_KK_hat)
    if scheme is Scheme.SBFD:
        return run_sbfd_trial(sp, chan, trial.prev, trial.next, rng)
    if scheme is Scheme.HD:
        return run_hd_trial(sp, chan, trial.next, rng)
    return run_ideal_trial(sp, chan, trial.next)
