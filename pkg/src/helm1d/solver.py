"""Exact piecewise solutions of the layered Helmholtz problem.

Three independent paths produce the coefficients (A_j, B_j):

* :func:`solve_direct` eliminates the symmetric block-tridiagonal system
  with 2x2 partial pivoting (O(n));
* :func:`solve_green` combines the closed-form first and last columns of
  the inverse, which is all that is needed since the right-hand side has
  only two nonzero entries;
* :func:`solve_oracle` solves the dense transmission system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import qrec, tolerances
from .assembly import build_raw_system, build_rhs, build_scaling, build_system, wavenumbers
from .medium import (
    InvalidMediumError,
    ProblemInstance,
    boundary_coefficients,
    check_instance,
    derive_params,
    eta_map,
    reduce_variable_a,
)


class OracleSizeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WaveSolution:
    """u = A_j e^{i kappa_j x} + B_j e^{-i kappa_j x} on interval j.

    ``kappa_j = omega / (c_j sqrt(a_j))``. ``resonant`` is set when the
    computation hit the near-singularity threshold; ``min_pivot`` is the
    smallest relative pivot (direct path) or smallest 1 - |Q|^2 (Green path).
    """

    instance: ProblemInstance
    A: np.ndarray
    B: np.ndarray
    method: str
    resonant: bool = False
    min_pivot: float = float("nan")
    kappa: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kappa", wavenumbers(self.instance))

    @property
    def n(self) -> int:
        return self.instance.n

    @property
    def scale(self) -> float:
        return float(max(np.max(np.abs(self.A)), np.max(np.abs(self.B))))


def _unpack(instance: ProblemInstance, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = instance.n
    A1, Bn = boundary_coefficients(instance)
    A = np.empty(n + 1, dtype=complex)
    B = np.empty(n + 1, dtype=complex)
    A[0] = A1
    B[-1] = Bn
    B[:n] = x[0::2]
    A[1:] = x[1::2]
    return A, B


def _trivial(instance: ProblemInstance, method: str) -> WaveSolution:
    A1, B1 = boundary_coefficients(instance)
    return WaveSolution(instance, np.array([A1]), np.array([B1]), method, False, 1.0)


def _lift(original: ProblemInstance, reduced: WaveSolution) -> WaveSolution:
    """Map coefficients of the a == 1 problem back through the flattening map."""
    med = original.medium
    eta, total = eta_map(med)
    slope = 2.0 / (total * med.a)
    k_red = reduced.kappa
    shift = k_red * (eta[:-1] - slope * med.mesh[:-1])
    A = reduced.A * np.exp(1j * shift)
    B = reduced.B * np.exp(-1j * shift)
    return WaveSolution(original, A, B, reduced.method, reduced.resonant, reduced.min_pivot)


def _via_reduction(instance: ProblemInstance, solve) -> WaveSolution | None:
    if instance.medium.a is None:
        return None
    return _lift(instance, solve(reduce_variable_a(instance)))


# --- 2x2 helpers --------------------------------------------------------------


def _lu2(m00, m01, m10, m11):
    """Partially pivoted LU of a 2x2 matrix: (swap, l, u00, u01, u11)."""
    swap = abs(m10) > abs(m00)
    if swap:
        m00, m01, m10, m11 = m10, m11, m00, m01
    if m00 == 0:
        raise ZeroDivisionError("singular 2x2 block")
    l = m10 / m00
    return swap, l, m00, m01, m11 - l * m01


def _lu2_solve(f, b0, b1):
    swap, l, u00, u01, u11 = f
    if swap:
        b0, b1 = b1, b0
    b1 = b1 - l * b0
    y1 = b1 / u11
    y0 = (b0 - u01 * y1) / u00
    return y0, y1


def block_thomas(diag_blocks, off_blocks, rhs) -> tuple[np.ndarray, float]:
    """Solve the symmetric block-tridiagonal system with 2x2 blocks.

    The coupling blocks have a single nonzero entry beta_j at (2,1) for the
    upper and (1,2) for the lower block, which keeps each Schur update to
    one scalar. Returns the solution and the smallest relative pivot.
    """
    n = len(diag_blocks)
    betas = [complex(b[1, 0]) for b in off_blocks]
    rhs = np.asarray(rhs, dtype=complex)
    facs = []
    z = []
    min_piv = np.inf
    prev_inv22 = 0j
    prev_sol = (0j, 0j)
    for j in range(n):
        w = diag_blocks[j]
        s00, s01, s10, s11 = complex(w[0, 0]), complex(w[0, 1]), complex(w[1, 0]), complex(w[1, 1])
        b0, b1 = complex(rhs[2 * j]), complex(rhs[2 * j + 1])
        if j:
            beta = betas[j - 1]
            s00 -= beta * beta * prev_inv22
            b0 -= beta * prev_sol[1]
        scale = max(abs(s00), abs(s01), abs(s10), abs(s11), 1e-300)
        f = _lu2(s00, s01, s10, s11)
        min_piv = min(min_piv, abs(f[2]) / scale, abs(f[4]) / scale)
        facs.append(f)
        z.append((b0, b1))
        prev_inv22 = _lu2_solve(f, 0j, 1.0 + 0j)[1]
        prev_sol = _lu2_solve(f, b0, b1)
    y = np.empty(2 * n, dtype=complex)
    nxt = 0j
    for j in range(n - 1, -1, -1):
        b0, b1 = z[j]
        if j < n - 1:
            b1 -= betas[j] * nxt
        y0, y1 = _lu2_solve(facs[j], b0, b1)
        y[2 * j], y[2 * j + 1] = y0, y1
        nxt = y0
    return y, float(min_piv)


# --- public solvers -----------------------------------------------------------


def solve_direct(instance: ProblemInstance) -> WaveSolution:
    check_instance(instance)
    lifted = _via_reduction(instance, solve_direct)
    if lifted is not None:
        return lifted
    if instance.n == 0:
        return _trivial(instance, "direct")
    p = derive_params(instance)
    system = build_system(p)
    d = build_scaling(p).entries
    r = build_rhs(instance, p).r
    try:
        y, min_piv = block_thomas(system.diag_blocks, system.off_blocks, d * r)
    except ZeroDivisionError:
        nan = np.full(instance.n + 1, np.nan + 0j)
        return WaveSolution(instance, nan, nan.copy(), "direct", True, 0.0)
    A, B = _unpack(instance, d * y)
    resonant = min_piv < tolerances.get().pivot
    return WaveSolution(instance, A, B, "direct", resonant, min_piv)


def solve_green(instance: ProblemInstance) -> WaveSolution:
    check_instance(instance)
    lifted = _via_reduction(instance, solve_green)
    if lifted is not None:
        return lifted
    n = instance.n
    if n == 0:
        return _trivial(instance, "green")
    p = derive_params(instance)
    roots = p.sqrt_sigma[1:n]
    last = qrec.green_column(roots, p.q, "last").entries
    first = qrec.green_column(roots, p.q, "first").entries
    d = build_scaling(p).entries
    r = build_rhs(instance, p).r
    x = d * (first * (d[0] * r[0]) + last * (d[-1] * r[-1]))
    A, B = _unpack(instance, x)
    fwd = qrec.q_sequence(p.sigma[1:], p.q)
    rev = qrec.q_sequence(p.sigma[n - 1 :: -1] if n > 1 else p.sigma[:1], -p.q[::-1])
    gap = float(min(fwd.gap().min(), rev.gap().min()))
    resonant = gap < tolerances.get().resonance_gap or not np.all(np.isfinite(x))
    return WaveSolution(instance, A, B, "green", resonant, gap)


def solve_oracle(instance: ProblemInstance) -> WaveSolution:
    """Dense partial-pivoted solve of the full transmission system."""
    check_instance(instance)
    limit = tolerances.get().oracle_max_n
    if instance.n > limit:
        raise OracleSizeError(f"dense oracle limited to n <= {limit} (got {instance.n})")
    raw = build_raw_system(instance)
    try:
        sol = np.linalg.solve(raw.matrix, raw.rhs)
        resonant = not np.all(np.isfinite(sol))
    except np.linalg.LinAlgError:
        sol = np.full(raw.rhs.size, np.nan + 0j)
        resonant = True
    return WaveSolution(instance, sol[0::2].copy(), sol[1::2].copy(), "oracle", resonant)


SOLVERS = {"direct": solve_direct, "green": solve_green, "oracle": solve_oracle}


# --- evaluation and norms -----------------------------------------------------


def interval_index(mesh: np.ndarray, points) -> np.ndarray:
    """0-based owning interval; mesh points belong to the interval on their left."""
    pts = np.asarray(points, dtype=float)
    if np.any(pts < mesh[0]) or np.any(pts > mesh[-1]) or not np.all(np.isfinite(pts)):
        raise ValueError("evaluation points must lie in [-1, 1]")
    idx = np.searchsorted(mesh, pts, side="left") - 1
    return np.clip(idx, 0, mesh.size - 2)


def evaluate(solution: WaveSolution, points, k: int = 0) -> np.ndarray:
    """k-th derivative of u at ``points`` (k in 0, 1, 2)."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    pts = np.asarray(points, dtype=float)
    j = interval_index(solution.instance.medium.mesh, pts)
    kap = solution.kappa[j]
    ep = np.exp(1j * kap * pts)
    fa = (1j * kap) ** k
    fb = (-1j * kap) ** k
    return fa * solution.A[j] * ep + fb * solution.B[j] / ep


def interval_norms_sq(solution: WaveSolution, k: int = 0) -> np.ndarray:
    """||u^(k)||^2 on each interval from the exact quadratic form."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    med = solution.instance.medium
    h = med.h
    x0 = med.mesh[:-1]
    kap = solution.kappa
    A, B = solution.A, solution.B
    cross = A * np.conj(B) * np.exp(1j * kap * (2 * x0 + h))
    sinc = np.sinc(kap * h / np.pi)
    val = kap ** (2 * k) * h * (np.abs(A) ** 2 + np.abs(B) ** 2 + 2 * (-1) ** k * cross.real * sinc)
    return np.maximum(val, 0.0)


def energy_norm(solution: WaveSolution, k: int = 0) -> float:
    """L2 norm of the k-th derivative over (-1, 1)."""
    return float(np.sqrt(np.sum(interval_norms_sq(solution, k))))


def energy_space_norm(solution: WaveSolution) -> float:
    """(||sqrt(a) u'||^2 + ||(omega/c) u||^2)^(1/2)."""
    inst = solution.instance
    a = inst.medium.a_or_ones()
    w_over_c = inst.omega / inst.medium.c
    total = np.sum(a * interval_norms_sq(solution, 1) + w_over_c**2 * interval_norms_sq(solution, 0))
    return float(np.sqrt(total))


@dataclass(frozen=True)
class Residuals:
    continuity: float
    flux: float
    left_bc: float
    right_bc: float
    solution_scale: float
    data_scale: float

    def max_relative(self) -> float:
        t = max(self.continuity, self.flux) / max(1.0, self.solution_scale)
        b = max(self.left_bc, self.right_bc) / max(self.data_scale, 1e-300)
        return float(max(t, b if self.data_scale > 0 else max(self.left_bc, self.right_bc)))


def residuals(solution: WaveSolution) -> Residuals:
    """Jumps of u and of the flux a u' at interior points, and boundary residuals."""
    inst = solution.instance
    med = inst.medium
    a = med.a_or_ones()
    kap = solution.kappa
    A, B = solution.A, solution.B

    def local(j, x, k):
        e = np.exp(1j * kap[j] * x)
        return (1j * kap[j]) ** k * A[j] * e + (-1j * kap[j]) ** k * B[j] / e

    cont = flux = 0.0
    for i in range(1, med.n + 1):
        x = med.mesh[i]
        cont = max(cont, abs(local(i - 1, x, 0) - local(i, x, 0)))
        flux = max(flux, abs(a[i - 1] * local(i - 1, x, 1) - a[i] * local(i, x, 1)))
    w, c = inst.omega, med.c
    imp_l = np.sqrt(a[0]) * w / c[0]
    imp_r = np.sqrt(a[-1]) * w / c[-1]
    left = abs(-a[0] * local(0, -1.0, 1) - 1j * imp_l * local(0, -1.0, 0) - inst.g1)
    right = abs(a[-1] * local(med.n, 1.0, 1) - 1j * imp_r * local(med.n, 1.0, 0) - inst.g2)
    sup = solution.scale * 2.0
    data = max(abs(inst.g1), abs(inst.g2))
    return Residuals(float(cont), float(flux), float(left), float(right), float(sup), float(data))


def relative_difference(s1: WaveSolution, s2: WaveSolution) -> float:
    """max |coef1 - coef2| / max |coef2| over all A_j, B_j."""
    c1 = np.concatenate([s1.A, s1.B])
    c2 = np.concatenate([s2.A, s2.B])
    scale = np.max(np.abs(c2))
    diff = np.max(np.abs(c1 - c2))
    if scale == 0:
        return float(diff)
    return float(diff / scale)


__all__ = [
    "WaveSolution",
    "OracleSizeError",
    "InvalidMediumError",
    "block_thomas",
    "solve_direct",
    "solve_green",
    "solve_oracle",
    "SOLVERS",
    "evaluate",
    "interval_index",
    "interval_norms_sq",
    "energy_norm",
    "energy_space_norm",
    "residuals",
    "Residuals",
    "relative_difference",
]
