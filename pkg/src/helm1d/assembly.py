"""Linear systems for the layered Helmholtz problem.

The structured system couples the unknowns
``x = (B_1, A_2, B_2, ..., A_n, B_n, A_{n+1})`` through a symmetric
block-tridiagonal matrix with 2x2 reflection blocks on the diagonal.
The raw transmission system couples all ``(A_j, B_j)`` directly and is
only used as an independent reference.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .medium import DerivedParams, ProblemInstance, boundary_coefficients, check_instance


@dataclass(frozen=True)
class BlockTridiagonalSystem:
    """Diagonal blocks W^(j) (j = 1..n) and upper blocks N^(j) (j = 1..n-1)."""

    n: int
    diag_blocks: np.ndarray  # (n, 2, 2)
    off_blocks: np.ndarray  # (n-1, 2, 2)

    def tridiagonal(self) -> tuple[np.ndarray, np.ndarray]:
        """Scalar diagonal (length 2n) and off-diagonal (length 2n-1)."""
        d = self.diag_blocks
        diag = np.empty(2 * self.n, dtype=complex)
        diag[0::2] = d[:, 0, 0]
        diag[1::2] = d[:, 1, 1]
        off = np.empty(2 * self.n - 1, dtype=complex)
        off[0::2] = d[:, 0, 1]
        off[1::2] = self.off_blocks[:, 1, 0]
        return diag, off

    def to_dense(self) -> np.ndarray:
        diag, off = self.tridiagonal()
        return np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)


def reflection_block(qj: float) -> np.ndarray:
    s = np.sqrt(1.0 - qj * qj)
    return np.array([[qj, s], [s, -qj]], dtype=complex)


def build_system(params: DerivedParams) -> BlockTridiagonalSystem:
    n = params.n
    if n < 1:
        raise ValueError("no interior jumps; use the closed-form single-layer solution")
    diag = np.stack([reflection_block(float(qj)) for qj in params.q])
    off = np.zeros((n - 1, 2, 2), dtype=complex)
    # N^(j) carries -1/sqrt(sigma_j), j = 1..n-1
    off[:, 1, 0] = -1.0 / params.sqrt_sigma[1:n]
    return BlockTridiagonalSystem(n, diag, off)


def system_from_arrays(sqrt_sigma: Sequence[complex], q: Sequence[float]) -> BlockTridiagonalSystem:
    """Assemble directly from roots sqrt(sigma_1..sigma_{n-1}) and jumps q_1..q_n."""
    q = np.asarray(q, dtype=float)
    roots = np.asarray(sqrt_sigma, dtype=complex)[: q.size - 1]
    n = q.size
    diag = np.stack([reflection_block(float(qj)) for qj in q])
    off = np.zeros((max(n - 1, 0), 2, 2), dtype=complex)
    off[:, 1, 0] = -1.0 / roots
    return BlockTridiagonalSystem(n, diag, off)


@dataclass(frozen=True)
class DiagonalScaling:
    entries: np.ndarray

    def to_dense(self) -> np.ndarray:
        return np.diag(self.entries)


def build_scaling(params: DerivedParams) -> DiagonalScaling:
    """[alpha_{1,1} sqrt(c_1), sqrt(c_2)/alpha_{2,1}, alpha_{2,2} sqrt(c_2), ...]."""
    n = params.n
    rc = np.sqrt(params.c)
    d = np.empty(2 * n, dtype=complex)
    d[0::2] = params.alpha_self * rc[:n]
    d[1::2] = rc[1:] / params.alpha_next
    return DiagonalScaling(d)


@dataclass(frozen=True)
class RhsVector:
    r: np.ndarray
    A1: complex
    B_last: complex


def build_rhs(instance: ProblemInstance, params: DerivedParams) -> RhsVector:
    n = params.n
    A1, Bn = boundary_coefficients(instance)
    r = np.zeros(2 * n, dtype=complex)
    if n:
        w = instance.omega
        c = params.c
        r[0] = 1j / (2 * w) * np.exp(1j * w / c[0]) * instance.g1
        r[-1] = 1j / (2 * w) * np.exp(1j * w / c[-1]) * instance.g2
    return RhsVector(r, A1, Bn)


@dataclass(frozen=True)
class RawTransmissionSystem:
    """Dense system for ``(A_1, B_1, ..., A_{n+1}, B_{n+1})``.

    Row 0 is the impedance condition at -1, rows ``2i-1`` and ``2i`` are
    continuity of ``u`` and of the flux ``a u'`` (divided by ``i omega``) at
    x_i, and the last row is the impedance condition at +1.
    """

    matrix: np.ndarray
    rhs: np.ndarray


def wavenumbers(instance: ProblemInstance) -> np.ndarray:
    med = instance.medium
    return instance.omega / (med.c * np.sqrt(med.a_or_ones()))


def build_raw_system(instance: ProblemInstance, params: DerivedParams | None = None) -> RawTransmissionSystem:
    """Dense transmission system; handles piecewise-constant diffusion ``a`` too."""
    check_instance(instance)
    med = instance.medium
    n = med.n
    w = instance.omega
    x = med.mesh
    c = med.c
    a = med.a_or_ones()
    k = wavenumbers(instance)
    flux = np.sqrt(a) / c  # a * k / w
    M = np.zeros((2 * n + 2, 2 * n + 2), dtype=complex)
    rhs = np.zeros(2 * n + 2, dtype=complex)
    M[0, 0] = -2j * np.sqrt(a[0]) * w / c[0] * np.exp(-1j * k[0])
    rhs[0] = instance.g1
    for i in range(1, n + 1):
        left, right = i - 1, i
        al = np.exp(1j * k[left] * x[i])
        ar = np.exp(1j * k[right] * x[i])
        row_u, row_f = 2 * i - 1, 2 * i
        M[row_u, 2 * left] = al
        M[row_u, 2 * left + 1] = 1.0 / al
        M[row_u, 2 * right] = -ar
        M[row_u, 2 * right + 1] = -1.0 / ar
        M[row_f, 2 * left] = flux[left] * al
        M[row_f, 2 * left + 1] = -flux[left] / al
        M[row_f, 2 * right] = -flux[right] * ar
        M[row_f, 2 * right + 1] = flux[right] / ar
    M[-1, -1] = -2j * np.sqrt(a[-1]) * w / c[-1] * np.exp(-1j * k[-1])
    rhs[-1] = instance.g2
    return RawTransmissionSystem(M, rhs)


def build_symmetric_coefficient_matrix(params: DerivedParams) -> np.ndarray:
    """Dense symmetric tridiagonal matrix acting on ``x`` before diagonal scaling.

    Its inverse factors as ``D M_Green D``; used by the tests that replay
    the row eliminations of the transmission system.
    """
    n = params.n
    c = params.c
    a_s, a_n = params.alpha_self, params.alpha_next
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    for i in range(n):
        ci, cn = c[i], c[i + 1]
        qi = (cn - ci) / (cn + ci)
        out[2 * i, 2 * i] = qi / (ci * a_s[i] ** 2)
        out[2 * i, 2 * i + 1] = out[2 * i + 1, 2 * i] = 2.0 / (ci + cn) * a_n[i] / a_s[i]
        out[2 * i + 1, 2 * i + 1] = -qi * a_n[i] ** 2 / cn
        if i < n - 1:
            out[2 * i + 1, 2 * i + 2] = out[2 * i + 2, 2 * i + 1] = -1.0 / cn
    return out


# --- determinant utilities ----------------------------------------------------


def det_tridiag(diag: Sequence[complex], off: Sequence[complex]) -> complex:
    """Determinant of a symmetric tridiagonal matrix by the three-term recursion."""
    diag = np.asarray(diag, dtype=complex)
    off = np.asarray(off, dtype=complex)
    if off.size != max(diag.size - 1, 0):
        raise ValueError("off-diagonal must have one entry fewer than the diagonal")
    return complex(leading_minors(diag, off)[-1])


def leading_minors(diag, off) -> np.ndarray:
    """det W_0 = 1, det W_1, ..., det W_m for the leading principal blocks."""
    diag = np.asarray(diag, dtype=complex)
    off = np.asarray(off, dtype=complex)
    m = diag.size
    out = np.empty(m + 1, dtype=complex)
    out[0] = 1.0
    if m:
        out[1] = diag[0]
    for k in range(2, m + 1):
        out[k] = diag[k - 1] * out[k - 1] - off[k - 2] ** 2 * out[k - 2]
    return out


def cofactor_last_col(system, i: int, off=None) -> complex:
    """det of the matrix with row ``i`` (1-based) and the last column removed.

    ``system`` is a :class:`BlockTridiagonalSystem` or a diagonal array, in
    which case ``off`` must be given. Computed as
    ``(prod_{l >= i} beta_l) * det W_{i-1}`` from the leading minors.
    """
    if isinstance(system, BlockTridiagonalSystem):
        diag, off = system.tridiagonal()
    else:
        if off is None:
            raise ValueError("off-diagonal required when passing a diagonal array")
        diag = system
    diag = np.asarray(diag, dtype=complex)
    off = np.asarray(off, dtype=complex)
    m = diag.size
    if not 1 <= i <= m:
        raise IndexError(f"row index {i} outside 1..{m}")
    minors = leading_minors(diag[: i - 1], off[: max(i - 2, 0)])
    return complex(np.prod(off[i - 1 : m - 1]) * minors[-1])


# --- debug dump ---------------------------------------------------------------


def dump_system(matrix: np.ndarray, path: str | Path) -> None:
    """Write nonzero entries as ``row col re im`` lines (1-based, %.17g).

    The first line is ``# rows cols``.
    """
    matrix = np.asarray(matrix)
    lines = [f"# {matrix.shape[0]} {matrix.shape[1]}"]
    rows, cols = np.nonzero(matrix)
    for r, c in zip(rows, cols):
        v = complex(matrix[r, c])
        lines.append(f"{r + 1} {c + 1} {v.real:.17g} {v.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_system_dump(path: str | Path) -> np.ndarray:
    text = Path(path).read_text(encoding="ascii").splitlines()
    rows, cols = (int(t) for t in text[0].lstrip("#").split())
    out = np.zeros((rows, cols), dtype=complex)
    for line in text[1:]:
        if not line.strip():
            continue
        r, c, re, im = line.split()
        out[int(r) - 1, int(c) - 1] = complex(float(re), float(im))
    return out
