"""Special functions and small dense complex linear algebra.

Everything in this module is generic numerics: the series kernel
``kummer_minus_exp`` used by all delay-series solutions, a
scaling-and-squaring matrix exponential for the small (3x3 / 4x4)
generators, window convolutions of two matrix exponentials, linear
solves with a condition guard, and the null eigenvector used for
steady states.  All functions are pure.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "SingularMatrixError",
    "DegenerateKernelError",
    "cexpm1",
    "kummer_minus_exp",
    "matrix_exponential",
    "expm_convolution",
    "solve_linear",
    "null_eigenvector",
]


class SingularMatrixError(np.linalg.LinAlgError):
    """Linear solve rejected because the matrix is numerically singular."""


class DegenerateKernelError(np.linalg.LinAlgError):
    """Null-eigenvector extraction rejected: smallest eigenvalue not isolated."""


# ---------------------------------------------------------------------------
# series kernel
# ---------------------------------------------------------------------------

def cexpm1(s):
    """expm1 for complex arguments, stable near s = 0."""
    s = np.asarray(s, dtype=complex)
    x, y = s.real, s.imag
    # e^s - 1 = expm1(x)*cos(y) - 2*sin^2(y/2) + i*e^x*sin(y)
    return np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2 + 1j * np.exp(x) * np.sin(y)


def poisson_weight(n: int, x: float) -> float:
    """x^n / n! for x >= 0, evaluated through logs to dodge overflow.

    The round-trip series all carry this weight; x^n alone can overflow
    double precision long before the weight itself leaves range.
    """
    if x < 0.0:
        raise ValueError("poisson_weight needs x >= 0")
    if n == 0:
        return 1.0
    if x == 0.0:
        return 0.0
    log_w = n * math.log(x) - math.lgamma(n + 1)
    if log_w > 700.0:
        raise OverflowError(f"series weight overflows (n={n}, x={x:.3g})")
    return math.exp(log_w)


def kummer_minus_exp(n: int, s):
    """Kummer function gap ``1F1(n, n+1; s) - exp(s)``.

    This combination is the frequency-domain kernel of every delay-series
    solution in the package.  It equals ``(-s)^(-n) * lower_gamma(n+1, -s)``,
    which is how it is evaluated:

    * ``|s| <= n + 1``: tail series ``exp(s) * sum_{k>=1} (-s)^k n!/(n+k)!``
      whose terms decay monotonically from the start,
    * ``|s| > n + 1``: finite form ``(-s)^(-n) n! (1 - exp(s) e_n(-s))`` with
      ``e_n`` the degree-n exponential partial sum.

    Both branches avoid the catastrophic cancellation of the raw
    hypergeometric series for arguments with a large modulus.

    Parameters
    ----------
    n : int
        Series order, >= 0.
    s : complex or ndarray of complex
        Argument(s); must be finite.

    Returns
    -------
    complex or ndarray
        Finite for every finite ``s``; scalar in, scalar out.
    """
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a non-negative integer, got {n}")
    n = int(n)
    s_arr = np.asarray(s, dtype=complex)
    if not np.all(np.isfinite(s_arr)):
        raise ValueError("non-finite argument to kummer_minus_exp")
    scalar = s_arr.ndim == 0
    s_arr = np.atleast_1d(s_arr)

    if n == 0:
        out = -cexpm1(s_arr)
        return out[0] if scalar else out

    z = -s_arr
    out = np.empty_like(z)
    small = np.abs(z) <= n + 1.0

    if np.any(small):
        zs = z[small]
        total = np.zeros_like(zs)
        term = np.ones_like(zs)
        k = 1
        # term ratio is |z|/(n+k+1) <= (n+1)/(n+2) in this branch
        while True:
            term = term * zs / (n + k)
            total += term
            if k >= 3 and np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
                break
            k += 1
            if k > 100_000:  # unreachable for |z| <= n+1; defensive
                break
        out[small] = np.exp(s_arr[small]) * total

    if np.any(~small):
        zl = z[~small]
        # e_n(z) by Horner-free accumulation; max term stays in double range
        # for the supported domain (n <= few hundred, |z| <= few hundred).
        en = np.ones_like(zl)
        term = np.ones_like(zl)
        pref = np.ones_like(zl)
        for k in range(1, n + 1):
            term = term * zl / k
            en += term
            pref = pref * (k / zl)
        out[~small] = pref * (1.0 - np.exp(-zl) * en)

    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# matrix exponential
# ---------------------------------------------------------------------------

# degree-13 Pade coefficients of exp
_PADE13 = (
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0, 670442572800.0,
    33522128640.0, 1323241920.0, 40840800.0, 960960.0, 16380.0, 182.0, 1.0,
)
_THETA13 = 5.371920351148152


def matrix_exponential(a: np.ndarray, t: float = 1.0) -> np.ndarray:
    """exp(a*t) for a small dense complex matrix.

    Scaling-and-squaring with a fixed degree-13 Pade approximant; built for
    robustness on the <= 8x8 generators used here rather than for speed on
    large problems.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or not math.isfinite(t):
        raise ValueError("non-finite input to matrix_exponential")
    m = a * t
    dim = m.shape[0]
    norm = np.linalg.norm(m, 1)
    squarings = max(0, int(math.ceil(math.log2(norm / _THETA13))) if norm > _THETA13 else 0)
    m = m / (2.0 ** squarings)

    b = _PADE13
    ident = np.eye(dim, dtype=complex)
    m2 = m @ m
    m4 = m2 @ m2
    m6 = m4 @ m2
    u = m @ (m6 @ (b[13] * m6 + b[11] * m4 + b[9] * m2)
             + b[7] * m6 + b[5] * m4 + b[3] * m2 + b[1] * ident)
    v = (m6 @ (b[12] * m6 + b[10] * m4 + b[8] * m2)
         + b[6] * m6 + b[4] * m4 + b[2] * m2 + b[0] * ident)
    out = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        out = out @ out
    return out


def expm_convolution(a: np.ndarray, b: np.ndarray, c: np.ndarray, t: float) -> np.ndarray:
    """Window convolution ``int_0^t exp(a*(t-u)) @ b @ exp(c*u) du``.

    Evaluated exactly through the exponential of the block matrix
    ``[[a, b], [0, c]]`` (the upper-right block of its exponential is the
    integral).  ``a`` is na x na, ``c`` is nc x nc, ``b`` is na x nc.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = np.asarray(c, dtype=complex)
    na, nc = a.shape[0], c.shape[0]
    blk = np.zeros((na + nc, na + nc), dtype=complex)
    blk[:na, :na] = a
    blk[:na, na:] = b
    blk[na:, na:] = c
    return matrix_exponential(blk, t)[:na, na:]


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def solve_linear(m: np.ndarray, rhs: np.ndarray, cond_limit: float = 1e12) -> np.ndarray:
    """Solve ``m @ x = rhs`` with a condition-number guard.

    Raises
    ------
    SingularMatrixError
        If the 2-norm condition estimate exceeds ``cond_limit``.
    """
    m = np.asarray(m, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex)
    sv = np.linalg.svd(m, compute_uv=False)
    cond = math.inf if sv[-1] == 0.0 else float(sv[0] / sv[-1])
    if not math.isfinite(cond) or cond > cond_limit:
        raise SingularMatrixError(
            f"matrix numerically singular (condition estimate {cond:.3e} "
            f"exceeds {cond_limit:.1e})")
    return np.linalg.solve(m, rhs)


def null_eigenvector(m: np.ndarray, separation: float = 10.0) -> np.ndarray:
    """Eigenvector of the eigenvalue of smallest modulus (the near-kernel).

    The eigenvalue of smallest modulus must be isolated: the next one has to
    be at least ``separation`` times larger in modulus.  The returned vector
    is the right singular vector of the smallest singular value, which
    minimises ``||m @ v||``; normalisation is left to the caller.

    Raises
    ------
    DegenerateKernelError
        If the separation requirement fails.
    """
    m = np.asarray(m, dtype=complex)
    eigvals = np.linalg.eigvals(m)
    order = np.argsort(np.abs(eigvals))
    lam0, lam1 = eigvals[order[0]], eigvals[order[1]]
    scale = np.linalg.norm(m, 2)
    if abs(lam1) < separation * max(abs(lam0), 1e-14 * scale):
        raise DegenerateKernelError(
            f"smallest eigenvalue not isolated: |lam0|={abs(lam0):.3e}, "
            f"|lam1|={abs(lam1):.3e}, required ratio {separation}")
    _, _, vh = np.linalg.svd(m)
    return vh[-1].conj()
