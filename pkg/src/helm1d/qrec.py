"""The Q recursion and the closed forms built on it.

``sigma`` arguments are the phase factors sigma_1..sigma_n (length n) and
``q`` the relative jumps q_1..q_n. Functions that need the half-phase
roots (the Green's-function columns) take ``sqrt_sigma`` instead, because
the root carries a sign that sigma alone does not determine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import tolerances


@dataclass(frozen=True)
class QSequence:
    """Q_0..Q_n and Q'_j = sigma_j Q_j (Q'_0 = 0)."""

    Q: np.ndarray
    Qprime: np.ndarray
    sigma: np.ndarray
    q: np.ndarray
    # 1 - |Q_j|^2 carried through the recursion without cancellation
    gaps: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.Q)

    def gap(self) -> np.ndarray:
        """1 - |Q_j|^2 for j = 0..n."""
        if self.gaps is not None:
            return self.gaps
        return np.maximum(1.0 - np.abs(self.Q) ** 2, 0.0)

    def resonant(self) -> bool:
        return bool(np.any(self.gap() < tolerances.get().resonance_gap))


def _check_inputs(sigma, q, unit_tol=None):
    sigma = np.asarray(sigma, dtype=complex).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if sigma.size != q.size:
        raise ValueError(f"sigma and q must have equal length ({sigma.size} != {q.size})")
    if np.any(np.abs(q) >= 1.0):
        bad = int(np.argmax(np.abs(q) >= 1.0)) + 1
        raise ValueError(f"|q_{bad}| >= 1")
    tol = tolerances.get().unit_modulus if unit_tol is None else unit_tol
    if np.any(np.abs(np.abs(sigma) - 1.0) > tol):
        raise ValueError("phase factors must have unit modulus")
    return sigma, q


def q_sequence(sigma: Sequence[complex], q: Sequence[float]) -> QSequence:
    """Evaluate Q_1 = q_1/sigma_1, Q_j = (q_j + Q_{j-1}) / (sigma_j (1 + q_j Q_{j-1}))."""
    sigma, q = _check_inputs(sigma, q)
    n = q.size
    Q = np.zeros(n + 1, dtype=complex)
    Qp = np.zeros(n + 1, dtype=complex)
    gaps = np.ones(n + 1)
    prev = 0j
    prev_gap = 1.0
    for j in range(n):
        qj = float(q[j])
        den = 1.0 + qj * prev
        val = (qj + prev) / den
        # 1 - |M(z)|^2 = (1 - q^2)(1 - |z|^2) / |1 + q z|^2 keeps the distance to
        # the unit circle to full relative precision even when |Q| ~ 1
        gap = (1.0 - qj * qj) * prev_gap / abs(den) ** 2
        mag = abs(val)
        if gap < 0.5 and mag > 0.0:
            # near the circle the gap is the accurate quantity; near the
            # centre the direct quotient is
            val *= math.sqrt(1.0 - gap) / mag
        else:
            gap = max(gap, 0.0)
        Qp[j + 1] = val
        prev = val / complex(sigma[j])
        prev_gap = gap
        Q[j + 1] = prev
        gaps[j + 1] = gap
    return QSequence(Q=Q, Qprime=Qp, sigma=sigma, q=q, gaps=gaps)


def p_tilde(sigma, q) -> complex:
    """prod_{j=1}^{n-1} (1 + q_{j+1} Q_j)."""
    seq = q_sequence(sigma, q)
    qa = seq.q
    if qa.size < 2:
        return 1.0 + 0j
    return complex(np.prod(1.0 + qa[1:] * seq.Q[1:-1]))


def det_M(sigma, q, reduced: bool = False) -> complex:
    """Determinant of the 2n x 2n symmetric system, or of its leading (2n-1) block."""
    if len(q) < 2:
        raise ValueError("det_M needs n >= 2")
    seq = q_sequence(sigma, q)
    n = seq.n
    full = (-1) ** n * p_tilde(sigma, q)
    if not reduced:
        return full
    return -seq.sigma[-1] * seq.Q[-1] * full


# --- Green's-function columns -------------------------------------------------


@dataclass(frozen=True)
class GreenColumn:
    entries: np.ndarray
    which: str


def _last_column(sqrt_sigma, q, method: str) -> np.ndarray:
    sqrt_sigma = np.asarray(sqrt_sigma, dtype=complex).ravel()
    q = np.asarray(q, dtype=float).ravel()
    n = q.size
    seq = q_sequence(sqrt_sigma * sqrt_sigma, q)
    Q, Qp = seq.Q, seq.Qprime
    # factor_ell for ell = 1..n (index ell-1); sqrt(sigma_0) cancels against
    # the odd-row multiplier, so the ell = 1 factor omits it
    root_prev = np.concatenate([[1.0 + 0j], sqrt_sigma[: n - 1]])
    den = 1.0 + q * Q[:n]
    mag_num = np.sqrt(1.0 - q * q)
    if method == "auto":
        method = "log" if n > tolerances.get().log_product_n else "plain"
    if method == "plain":
        factors = mag_num / (den * root_prev)
        tail = np.cumprod(factors[::-1])[::-1]  # tail[m] = prod_{ell=m+1}^{n}
    elif method == "log":
        logmag = 0.5 * np.log1p(-q * q) - np.log(np.abs(den))
        phase = -np.angle(den) - np.angle(root_prev)
        tail = np.exp(np.cumsum(logmag[::-1])[::-1]) * np.exp(1j * np.cumsum(phase[::-1])[::-1])
    else:
        raise ValueError(f"unknown product method {method!r}")
    col = np.empty(2 * n, dtype=complex)
    for i in range(1, 2 * n + 1):
        start = (i + 2) // 2  # first ell in the product
        prod = tail[start - 1] if start <= n else 1.0
        if i % 2 == 0:
            mult = Qp[i // 2]
        else:
            # for i = 1 the sqrt(sigma_0) multiplier was cancelled above
            mult = sqrt_sigma[(i - 1) // 2 - 1] if i > 1 else 1.0
        col[i - 1] = (-1) ** (i + 1) * prod * mult
    return col


def green_column(
    sqrt_sigma: Sequence[complex],
    q: Sequence[float],
    which: Literal["first", "last"] = "last",
    method: str = "auto",
) -> GreenColumn:
    """First or last column of the inverse of the 2n x 2n block-tridiagonal matrix.

    ``sqrt_sigma`` holds the roots used in the off-diagonal blocks, entries
    1..n-1 (a length-n array is accepted; its last entry is unused).
    The first column is the last column of the index-reversed medium,
    whose jumps are ``-q[::-1]`` and whose roots are ``sqrt_sigma[n-2::-1]``.
    """
    q = np.asarray(q, dtype=float).ravel()
    n = q.size
    if n < 1:
        raise ValueError("green_column needs n >= 1")
    roots = np.asarray(sqrt_sigma, dtype=complex).ravel()
    if roots.size == n - 1:
        roots = np.concatenate([roots, [1.0]])
    if roots.size != n:
        raise ValueError("sqrt_sigma must have length n-1 or n")
    if which == "last":
        return GreenColumn(_last_column(roots, q, method), "last")
    if which == "first":
        rev_roots = np.concatenate([roots[: n - 1][::-1], [1.0]])
        col = _last_column(rev_roots, -q[::-1], method)
        return GreenColumn(col[::-1].copy(), "first")
    raise ValueError(f"which must be 'first' or 'last', got {which!r}")


def g_factor(sigma, q, m: int) -> float:
    """G_{n,m} = |prod_{ell=n-m+1}^{n} sqrt(1-q_ell^2) / (1 + q_ell Q_{ell-1})|."""
    seq = q_sequence(sigma, q)
    n = seq.n
    if not 1 <= m <= n:
        raise ValueError(f"m must be in 1..{n}")
    ell = np.arange(n - m + 1, n + 1)
    qa = seq.q[ell - 1]
    return float(np.prod(np.sqrt(1.0 - qa * qa) / np.abs(1.0 + qa * seq.Q[ell - 1])))


# --- maximizer machinery ------------------------------------------------------


def sigma_hat(q: Sequence[float], sigma_last: complex = 1.0) -> np.ndarray:
    """Unit phases maximizing |Q_j|: sign(q_i q_{i+1}) for i < j, then ``sigma_last``."""
    q = np.asarray(q, dtype=float).ravel()
    if np.any(q == 0.0):
        raise ValueError("sigma_hat is undefined when some q_i = 0")
    if np.any(np.abs(q) >= 1.0):
        raise ValueError("|q_i| must be < 1")
    out = np.empty(q.size, dtype=complex)
    out[:-1] = np.sign(q[:-1] * q[1:])
    out[-1] = sigma_last
    return out


def max_modulus_closed_form(q: float, j: int) -> float:
    """((1+q)^j - (1-q)^j) / ((1+q)^j + (1-q)^j), evaluated as tanh(j atanh q)."""
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    if j < 0:
        raise ValueError("j must be non-negative")
    return math.tanh(j * math.atanh(q))


def max_modulus_gap(q: float, j: int) -> float:
    """1 - max_modulus_closed_form(q, j), without cancellation."""
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    t = 2.0 * j * math.atanh(q)
    # 1 - tanh(t/2) = 2 / (1 + e^t)
    return 2.0 * math.exp(-t) / (1.0 + math.exp(-t)) if t > 0 else 1.0


def growth_majorant(q_tilde: float, q: float, m: int) -> float:
    """r_{q~,m}(q): modulus after seeding with q~ and m-1 further worst-case jumps of size q."""
    if not 0.0 <= q_tilde < 1.0:
        raise ValueError("q_tilde must lie in [0, 1)")
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    if m < 1:
        raise ValueError("m must be >= 1")
    return math.tanh(math.atanh(q_tilde) + (m - 1) * math.atanh(q))


def mobius_step(rho: float, q: float) -> float:
    """Worst-case modulus after one jump of size q from modulus rho."""
    return (q + rho) / (1.0 + q * rho)


def inverse_gap_sqrt(modulus: float) -> float:
    """1 / sqrt(1 - modulus^2), clamped at the resonance threshold."""
    gap = max(1.0 - modulus * modulus, tolerances.get().resonance_gap)
    return 1.0 / math.sqrt(gap)
