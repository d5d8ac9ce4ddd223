"""Analog and digital self-interference cancellers at the BS and the UEs.

The BS analog canceller has a budget of `N` taps, each one an attenuator
plus phase shifter between one TX output and one RX input, i.e. one nonzero
entry of ``C_b``. Tap values are quantized; digital cancellers are not.
"""
import math
from dataclasses import dataclass

import numpy as np

__all__ = ['QuantizerSpec', 'CancellerState', 'select_taps',
           'select_column_taps', 'candidate_tap_sets', 'quantize_tap',
           'quantize', 'build_analog_canceller', 'build_ue_cancellers',
           'build_digital_canceller_bs', 'per_chain_residual_powers',
           'ue_residual_powers']


@dataclass(frozen=True)
class QuantizerSpec:
    """Analog tap resolution: attenuation step in dB, phase step in degrees."""
    attenuation_step: float = 0.02
    phase_step: float = 0.13

    def __post_init__(self):
        if not (self.attenuation_step > 0 and self.phase_step > 0):
            raise ValueError("quantizer steps must be strictly positive")


@dataclass(frozen=True)
class CancellerState:
    C_b: np.ndarray
    tap_positions: frozenset
    C_K: np.ndarray
    D_b: np.ndarray
    D_K: np.ndarray

    @property
    def n_taps(self):
        return len(self.tap_positions)


def select_taps(H_bb_hat, N):
    """
    Positions of the `N` largest-magnitude entries of `H_bb_hat`.

    Ties are broken in (row, col) lexicographic order.

    Returns
    -------
    frozenset of (row, col) tuples
    """
    rows, cols = H_bb_hat.shape
    if not 0 <= N <= rows * cols:
        raise ValueError(f"tap budget {N} outside [0, {rows * cols}]")
    mag = np.abs(H_bb_hat).ravel()
    # stable sort on the row-major flattening gives lexicographic tie-break
    order = np.argsort(-mag, kind='stable')[:N]
    return frozenset((int(i // cols), int(i % cols)) for i in order)


def select_column_taps(H_bb_hat, N):
    """Column-aligned placement: whole TX columns first, strongest column
    energy first, remainder on the largest entries of the next column.

    Covering a TX antenna completely removes it from the analog residual, so
    the residual has an exact null space of dimension ``N // N_b``.
    """
    rows, cols = H_bb_hat.shape
    if not 0 <= N <= rows * cols:
        raise ValueError(f"tap budget {N} outside [0, {rows * cols}]")
    energy = np.sum(np.abs(H_bb_hat) ** 2, axis=0)
    col_order = np.argsort(-energy, kind='stable')
    full, rem = divmod(N, rows)
    taps = {(r, int(c)) for c in col_order[:full] for r in range(rows)}
    if rem:
        c = int(col_order[full])
        r_order = np.argsort(-np.abs(H_bb_hat[:, c]), kind='stable')[:rem]
        taps.update((int(r), c) for r in r_order)
    return frozenset(taps)


def candidate_tap_sets(H_bb_hat, N, placement='search'):
    """Tap realizations tried by the joint design.

    ``'greedy'`` yields only the magnitude-ranked placement; ``'search'``
    adds the column-aligned one (duplicates removed, order preserved).
    """
    if placement == 'greedy':
        return [select_taps(H_bb_hat, N)]
    if placement != 'search':
        raise ValueError(f"unknown tap placement {placement!r}")
    out = []
    for taps in (select_taps(H_bb_hat, N), select_column_taps(H_bb_hat, N)):
        if taps not in out:
            out.append(taps)
    return out


def quantize_tap(v, q):
    """Round a tap value onto the attenuation/phase grid of `q`.

    Magnitude is rounded in dB to a multiple of ``q.attenuation_step`` and the
    phase to a multiple of ``q.phase_step`` degrees. ``q=None`` disables
    quantization; zero passes through.
    """
    if q is None or v == 0:
        return complex(v)
    mag_db = 20.0 * math.log10(abs(v))
    mag_db = round(mag_db / q.attenuation_step) * q.attenuation_step
    ph = math.degrees(math.atan2(v.imag, v.real))
    ph = round(ph / q.phase_step) * q.phase_step
    return 10.0 ** (mag_db / 20.0) * complex(math.cos(math.radians(ph)),
                                            math.sin(math.radians(ph)))


def quantize(M, q):
    """Vectorized :func:`quantize_tap` over an array."""
    M = np.asarray(M, dtype=complex)
    if q is None:
        return M.copy()
    mag = np.abs(M)
    nz = mag > 0
    mag_db = 20.0 * np.log10(np.where(nz, mag, 1.0))
    mag_db = np.round(mag_db / q.attenuation_step) * q.attenuation_step
    ph = np.degrees(np.angle(M))
    ph = np.round(ph / q.phase_step) * q.phase_step
    out = 10.0 ** (mag_db / 20.0) * np.exp(1j * np.radians(ph))
    return np.where(nz, out, 0.0)


def build_analog_canceller(H_bb_hat, N, q=None, taps=None):
    """
    N-tap BS analog canceller.

    ``C_b[p] = -quantize(H_bb_hat[p])`` on the tap positions, zero elsewhere.
    `taps` overrides the default magnitude-ranked placement.

    Returns
    -------
    C_b : ndarray
    tap_positions : frozenset
    """
    if taps is None:
        taps = select_taps(H_bb_hat, N)
    elif len(taps) > N:
        raise ValueError(f"{len(taps)} taps exceed budget {N}")
    C_b = np.zeros_like(H_bb_hat, dtype=complex)
    if taps:
        r, c = map(np.array, zip(*sorted(taps)))
        C_b[r, c] = -quantize(H_bb_hat[r, c], q)
    return C_b, frozenset(taps)


def build_ue_cancellers(H_KK_hat, q=None):
    """Single-tap analog plus digital canceller at every UE.

    ``C_K = -quantize(H_KK_hat)`` and ``D_K = -(H_KK_hat + C_K)``.
    """
    H_KK_hat = np.asarray(H_KK_hat)
    d = np.diag(H_KK_hat)
    if np.any(H_KK_hat - np.diag(d)):
        raise ValueError("UE self-interference estimate must be diagonal")
    C_K = np.diag(-quantize(d, q))
    D_K = np.diag(-(d + np.diag(C_K)))
    return C_K, D_K


def build_digital_canceller_bs(H_bb_hat, C_b):
    """``D_b = -(H_bb_hat + C_b)``."""
    if H_bb_hat.shape != C_b.shape:
        raise ValueError("shape mismatch")
    return -(H_bb_hat + C_b)


def per_chain_residual_powers(H_res, V, P):
    """Residual SI power at each RX chain, ``P * ||[H_res V]_(j,:)||^2``."""
    H_res = np.asarray(H_res)
    V = np.asarray(V)
    if V.ndim == 1:
        V = V[:, None]
    if H_res.shape[1] != V.shape[0]:
        raise ValueError(f"shape mismatch: {H_res.shape} x {V.shape}")
    return P * np.sum(np.abs(H_res @ V) ** 2, axis=1)


def ue_residual_powers(H_KK_hat, C_K, P_k):
    """Post-analog SI power at each UE, ``P_k ||[H_KK_hat + C_K]_(j,:)||^2``."""
    return P_k * np.sum(np.abs(H_KK_hat + C_K) ** 2, axis=1)
