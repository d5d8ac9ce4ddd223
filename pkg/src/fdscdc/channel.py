"""Channel realizations for the FD multi-user MIMO link and their slot-to-slot
evolution.

The uplink channel is never drawn separately: it is always ``H.T`` of the
downlink channel held in :class:`ChannelSet`.
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from .numerics import bessel_j0

__all__ = ['ChannelParams', 'ChannelSet', 'complex_gaussian', 'draw_rician',
           'draw_initial', 'jakes_rho', 'evolve', 'los_phase_grid']


@dataclass(frozen=True)
class ChannelParams:
    """Large-scale channel parameters. Pathlosses and `kappa` are linear
    power gains; `f_d` in Hz, `T_c` in seconds."""
    n_b: int = 8
    k_users: int = 4
    l_K: float = 1e-11
    l_bb: float = 1e-4
    l_kk: float = 1e-4
    l_IN: float = 1e-11
    kappa: float = 1e3
    f_d: float = 50.0
    T_c: float = 1e-3

    def __post_init__(self):
        if self.n_b < 1 or self.k_users < 1:
            raise ValueError("n_b and k_users must be >= 1")
        for name in ('l_K', 'l_bb', 'l_kk', 'l_IN', 'kappa', 'T_c'):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if not self.f_d >= 0:
            raise ValueError("f_d must be >= 0")


@dataclass(frozen=True)
class ChannelSet:
    """All channel matrices of one time slot.

    H : (K, N_b) downlink channel; the uplink is ``H.T``.
    H_bb : (N_b, N_b) BS self-interference channel.
    H_KK : (K, K) diagonal UE self-interference channel.
    H_IN : (K, K) inter-node channel with zero diagonal.
    """
    H: np.ndarray
    H_bb: np.ndarray
    H_KK: np.ndarray
    H_IN: np.ndarray

    @property
    def H_ul(self):
        return self.H.T


def complex_gaussian(rng, shape, variance=1.0):
    """IID CN(0, variance) samples from two independent real normals."""
    scale = math.sqrt(variance / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def los_phase_grid(rows, cols):
    """Fixed line-of-sight phases ``pi (m + n) / max(rows, cols)``."""
    m, n = np.meshgrid(np.arange(rows), np.arange(cols), indexing='ij')
    return np.pi * (m + n) / max(rows, cols)


def draw_rician(rows, cols, kappa, pathloss, rng):
    """
    Rician-faded matrix with a deterministic LOS component.

    Each entry is ``sqrt(pathloss) * (sqrt(kappa/(kappa+1)) e^{j theta}
    + sqrt(1/(kappa+1)) g)`` with ``g ~ CN(0, 1)``.
    """
    if not (kappa > 0 and pathloss > 0):
        raise ValueError("kappa and pathloss must be > 0")
    los = np.exp(1j * los_phase_grid(rows, cols))
    nlos = complex_gaussian(rng, (rows, cols))
    return math.sqrt(pathloss) * (math.sqrt(kappa / (kappa + 1.0)) * los
                                  + math.sqrt(1.0 / (kappa + 1.0)) * nlos)


def _inter_node(k, variance, rng):
    H_IN = complex_gaussian(rng, (k, k), variance)
    np.fill_diagonal(H_IN, 0.0)
    return H_IN


def draw_initial(params, rng):
    """Draw an independent :class:`ChannelSet`.

    Draw order is fixed (H, H_IN, H_bb, H_KK) so that a given stream always
    yields the same set.
    """
    k, n_b = params.k_users, params.n_b
    H = complex_gaussian(rng, (k, n_b), params.l_K)
    H_IN = _inter_node(k, params.l_IN, rng)
    H_bb = draw_rician(n_b, n_b, params.kappa, params.l_bb, rng)
    h_kk = draw_rician(k, 1, params.kappa, params.l_kk, rng).ravel()
    return ChannelSet(H=H, H_bb=H_bb, H_KK=np.diag(h_kk), H_IN=H_IN)


def jakes_rho(f_d, T_c):
    """Slot-to-slot correlation ``J0(2 pi f_d T_c)``."""
    if f_d < 0 or T_c <= 0:
        raise ValueError("need f_d >= 0 and T_c > 0")
    return bessel_j0(2.0 * math.pi * f_d * T_c)


def evolve(prev, rho, params, rng):
    """
    Advance a channel set by one slot with a first-order Gauss-Markov step.

    ``H_next = rho H_prev + sqrt(1 - rho^2) E`` with ``E`` IID CN(0, l_K),
    and the same recursion (variance ``l_IN``) on the off-diagonal of
    ``H_IN``. Self-interference channels are carried over unchanged.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    k = prev.H.shape[0]
    w = math.sqrt(max(0.0, 1.0 - rho * rho))
    E = complex_gaussian(rng, prev.H.shape, params.l_K)
    E_IN = _inter_node(k, params.l_IN, rng)
    return replace(prev, H=rho * prev.H + w * E,
                   H_IN=rho * prev.H_IN + w * E_IN)
