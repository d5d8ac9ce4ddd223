"""Dense complex linear algebra, Bessel J0 and unit conversions.

All powers inside the simulator are linear milliwatts; the dB helpers here
are only used at configuration and reporting boundaries.
"""
import math

import numpy as np
from scipy import linalg as sla

__all__ = ['NumericalError', 'NearSingularError', 'DomainError',
           'svd', 'right_singular_basis', 'hermitian_solve', 'log_det_hermitian', 'bessel_j0',
           'dbm_to_mw', 'mw_to_dbm', 'db_to_linear', 'linear_to_db',
           'COND_LIMIT']

# Condition number above which a Hermitian system is treated as singular.
COND_LIMIT = 1e12


class NumericalError(ArithmeticError):
    """A factorization failed to converge."""


class NearSingularError(NumericalError):
    """A Hermitian system is too ill-conditioned to be solved reliably."""


class DomainError(ValueError):
    """Input lies outside the mathematical domain of the operation."""


def _as_finite(M, name='M'):
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got ndim={M.ndim}")
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} contains NaN or Inf entries")
    return M


def svd(M):
    """
    Thin singular value decomposition ``M = U @ diag(s) @ Vh``.

    Singular values come back in descending order.

    Parameters
    ----------
    M : array_like, shape (m, n)

    Returns
    -------
    U : ndarray, shape (m, k)
    s : ndarray, shape (k,)
    Vh : ndarray, shape (k, n)
        ``k = min(m, n)``; see :func:`right_singular_basis` for the full
        square right basis.
    """
    M = _as_finite(M)
    try:
        return np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc


def right_singular_basis(M):
    """Full unitary right-singular basis of `M`, columns ordered by
    descending singular value (zero singular values last)."""
    M = _as_finite(M)
    try:
        _, _, Vh = np.linalg.svd(M, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return Vh.conj().T


def hermitian_solve(A, B):
    """
    Solve ``A X = B`` for Hermitian positive definite `A`.

    Raises
    ------
    NearSingularError
        If the eigenvalue condition number of `A` exceeds ``COND_LIMIT`` or
        `A` is not positive definite.
    """
    A = _as_finite(A, 'A')
    B = np.asarray(B)
    vector = B.ndim == 1
    B = _as_finite(B.reshape(-1, 1) if vector else B, 'B')
    if A.shape[0] != A.shape[1] or A.shape[0] != B.shape[0]:
        raise ValueError(f"shape mismatch: A {A.shape}, B {B.shape}")
    Ah = 0.5 * (A + A.conj().T)
    w = np.linalg.eigvalsh(Ah)
    if w[0] <= 0 or w[-1] > COND_LIMIT * w[0]:
        cond = np.inf if w[0] <= 0 else w[-1] / w[0]
        raise NearSingularError(f"condition estimate {cond:.3g} exceeds "
                                f"{COND_LIMIT:.0e}")
    c = sla.cho_factor(Ah, lower=True, check_finite=False)
    X = sla.cho_solve(c, B, check_finite=False)
    return X.ravel() if vector else X


def log_det_hermitian(A):
    """Return ``log2 det(A)`` for Hermitian positive definite `A`, via a
    Cholesky factor."""
    A = _as_finite(A, 'A')
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    try:
        L = np.linalg.cholesky(0.5 * (A + A.conj().T))
    except np.linalg.LinAlgError as exc:
        raise DomainError("matrix is not positive definite") from exc
    return 2.0 * float(np.sum(np.log2(np.diag(L).real)))


# Below this argument the Maclaurin series is summed directly; the largest
# term at x = 12 is ~4e3, so cancellation costs < 1e-12 absolute.
_J0_SERIES_LIMIT = 12.0


def _j0_series(x):
    q = -(x * x) / 4.0
    term = 1.0
    terms = [term]
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        terms.append(term)
        if abs(term) < 1e-18 and k > 2:
            break
    return math.fsum(terms)


def _j0_asymptotic(x):
    # Hankel expansion J0 = sqrt(2/(pi x)) (P cos(chi) - Q sin(chi)),
    # chi = x - pi/4; t_k = a_k / x^k with a_k the order-zero coefficients.
    # Summation stops at the smallest term (optimal truncation).
    z = 8.0 * x
    p, q = 1.0, 0.0
    t = 1.0
    k = 0
    while True:
        k += 1
        t_next = t * -((2 * k - 1) ** 2) / (k * z)
        if abs(t_next) >= abs(t) or abs(t_next) < 1e-18:
            break
        t = t_next
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2:
            q += sign * t
        else:
            p += sign * t
    chi = x - math.pi / 4.0
    return math.sqrt(2.0 / (math.pi * x)) * (p * math.cos(chi) - q * math.sin(chi))


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind, ``J0(x)``.

    Power series for ``|x| < 12``, Hankel asymptotic expansion beyond.
    Absolute error stays below 1e-8 for ``|x| <= 50``.
    """
    x = abs(float(x))
    if x < _J0_SERIES_LIMIT:
        return _j0_series(x)
    return _j0_asymptotic(x)


def dbm_to_mw(p_dbm):
    """Convert dBm to milliwatts."""
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw):
    return 10.0 * math.log10(p_mw)


def db_to_linear(g_db):
    """Convert a power ratio in dB to linear scale."""
    return 10.0 ** (g_db / 10.0)


def linear_to_db(g):
    return 10.0 * math.log10(g)
