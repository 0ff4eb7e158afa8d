"""Layered media, problem instances and their derived parameters.

Indexing
--------
Arrays are 0-based internally; the mathematical objects are 1-based.
For a medium with ``n`` interior jump points:

=================  ==========================  ===========================
quantity           math index                  array index
=================  ==========================  ===========================
mesh point x_j     j = 0 .. n+1                ``mesh[j]``
wave speed c_j     j = 1 .. n+1 (interval j)   ``c[j-1]``
width h_j          j = 1 .. n+1                ``h[j-1]``
phase sigma_j      j = 0 .. n                  ``sigma[j]``
jump q_j           j = 1 .. n                  ``q[j-1]``
=================  ==========================  ===========================

All user-facing messages use the mathematical (1-based) indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import tolerances


class InvalidMediumError(ValueError):
    """Raised when a medium or instance violates its invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LayeredMedium:
    """Mesh points ``x_0 = -1 < ... < x_{n+1} = 1`` and per-interval coefficients.

    Endpoints within the snapping tolerance of -1 and 1 are replaced by the
    exact values. No other checking happens here; see :func:`validate`.
    """

    mesh: np.ndarray
    c: np.ndarray
    a: np.ndarray | None = None

    def __post_init__(self):
        tol = tolerances.get().mesh_snap
        mesh = np.array(self.mesh, dtype=float).ravel()
        if mesh.size:
            if abs(mesh[0] + 1.0) <= tol:
                mesh[0] = -1.0
            if abs(mesh[-1] - 1.0) <= tol:
                mesh[-1] = 1.0
        object.__setattr__(self, "mesh", _frozen(mesh))
        object.__setattr__(self, "c", _frozen(np.ravel(self.c)))
        if self.a is not None:
            object.__setattr__(self, "a", _frozen(np.ravel(self.a)))

    @property
    def n(self) -> int:
        """Number of interior jump points."""
        return len(self.mesh) - 2

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.mesh)

    @property
    def has_variable_a(self) -> bool:
        return self.a is not None and not np.all(self.a == 1.0)

    def a_or_ones(self) -> np.ndarray:
        return np.ones_like(self.c) if self.a is None else self.a

    def __eq__(self, other):
        if not isinstance(other, LayeredMedium):
            return NotImplemented
        same_a = (self.a is None and other.a is None) or (
            self.a is not None and other.a is not None and np.array_equal(self.a, other.a)
        )
        return np.array_equal(self.mesh, other.mesh) and np.array_equal(self.c, other.c) and same_a


@dataclass(frozen=True)
class ProblemInstance:
    """Medium, frequency and impedance data ``g1`` (at -1) and ``g2`` (at +1)."""

    medium: LayeredMedium
    omega: float
    g1: complex = 0.0
    g2: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "g1", complex(self.g1))
        object.__setattr__(self, "g2", complex(self.g2))

    @property
    def n(self) -> int:
        return self.medium.n

    def with_data(self, g1: complex, g2: complex) -> "ProblemInstance":
        return ProblemInstance(self.medium, self.omega, g1, g2)


def validate(medium: LayeredMedium) -> list[str]:
    """Return every invariant violation of ``medium`` (empty list means valid)."""
    tol = tolerances.get()
    out: list[str] = []
    mesh, c = medium.mesh, medium.c
    if mesh.size < 2:
        return ["mesh needs at least the two endpoints"]
    if not np.all(np.isfinite(mesh)):
        out.append("mesh contains non-finite values")
    if mesh[0] != -1.0:
        out.append(f"mesh must start at -1 (got {mesh[0]!r})")
    if mesh[-1] != 1.0:
        out.append(f"mesh must end at 1 (got {mesh[-1]!r})")
    for j in range(1, mesh.size):
        if not mesh[j] > mesh[j - 1]:
            out.append(f"mesh not increasing at index {j}")
    if c.size != mesh.size - 1:
        out.append(f"expected {mesh.size - 1} wave speeds, got {c.size}")
    for j, cj in enumerate(c, start=1):
        if not (np.isfinite(cj) and cj > 0):
            out.append(f"nonpositive wave speed at {j}")
    if medium.a is not None:
        if medium.a.size != c.size:
            out.append(f"expected {c.size} diffusion values, got {medium.a.size}")
        for j, aj in enumerate(medium.a, start=1):
            if not (np.isfinite(aj) and aj > 0):
                out.append(f"nonpositive diffusion at {j}")
    if not out and abs(np.sum(medium.h) - 2.0) > tol.width_sum:
        out.append("interval widths do not sum to 2")
    return out


def check_instance(instance: ProblemInstance) -> None:
    """Raise :class:`InvalidMediumError` unless ``instance`` is valid."""
    violations = validate(instance.medium)
    floor = tolerances.get().omega_floor
    if not (np.isfinite(instance.omega) and instance.omega >= floor):
        violations.append(f"omega must be >= {floor:g}")
    if not (np.isfinite(instance.g1) and np.isfinite(instance.g2)):
        violations.append("boundary data must be finite")
    if violations:
        raise InvalidMediumError(violations)


@dataclass(frozen=True, eq=False)
class DerivedParams:
    """Phase factors, relative jumps and interface phases of an instance.

    ``sigma[j]`` is sigma_j for j = 0..n and ``sqrt_sigma[j]`` its
    half-phase root exp(-i h_{j+1} omega / c_{j+1}). ``q[j-1]`` is q_j.
    ``alpha_self[j-1] = alpha_{j,j}`` and ``alpha_next[j-1] = alpha_{j+1,j}``
    for the interior points j = 1..n.
    """

    omega: float
    mesh: np.ndarray
    c: np.ndarray
    h: np.ndarray
    sigma: np.ndarray
    sqrt_sigma: np.ndarray
    q: np.ndarray
    alpha_self: np.ndarray
    alpha_next: np.ndarray
    kappa: float
    n: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n", len(self.q))

    def alpha(self, ell: int, j: int) -> complex:
        """alpha_{ell,j} = exp(i omega x_j / c_ell), 1-based ``ell``."""
        return complex(np.exp(1j * self.omega * self.mesh[j] / self.c[ell - 1]))


def derive_params(instance: ProblemInstance) -> DerivedParams:
    check_instance(instance)
    med, w = instance.medium, instance.omega
    if med.has_variable_a:
        raise InvalidMediumError(["derived parameters need a == 1; call reduce_variable_a first"])
    c, h, x = med.c, med.h, med.mesh
    half_phase = h * w / c
    sqrt_sigma = np.exp(-1j * half_phase)
    sigma = sqrt_sigma * sqrt_sigma
    q = (c[1:] - c[:-1]) / (c[1:] + c[:-1])
    inner = x[1:-1]
    alpha_self = np.exp(1j * w * inner / c[:-1])
    alpha_next = np.exp(1j * w * inner / c[1:])
    kappa = condition_number(c)
    return DerivedParams(
        omega=w,
        mesh=x,
        c=c,
        h=_frozen(h),
        sigma=_frozen(sigma, complex),
        sqrt_sigma=_frozen(sqrt_sigma, complex),
        q=_frozen(q),
        alpha_self=_frozen(alpha_self, complex),
        alpha_next=_frozen(alpha_next, complex),
        kappa=kappa,
    )


def wave_speeds_from_jumps(c1: float, q: Sequence[float]) -> np.ndarray:
    """Rebuild c_1..c_{n+1} from c_1 and the relative jumps."""
    q = np.asarray(q, dtype=float)
    return c1 * np.concatenate([[1.0], np.cumprod((1.0 + q) / (1.0 - q))])


def eta_map(medium: LayeredMedium) -> tuple[np.ndarray, float]:
    """Images of the mesh points under the diffusion-flattening map.

    Returns ``(eta_mesh, A)`` with ``A`` the integral of 1/a over (-1, 1).
    The map is affine on each interval, so the image mesh is exact.
    """
    a = medium.a_or_ones()
    seg = medium.h / a
    total = float(np.sum(seg))
    eta = -1.0 + (2.0 / total) * np.concatenate([[0.0], np.cumsum(seg)])
    eta[-1] = 1.0
    return eta, total


def reduce_variable_a(instance: ProblemInstance) -> ProblemInstance:
    """Transform ``-(a u')' - (w/c)^2 u = 0`` into an equivalent problem with a == 1.

    With ``u = v o eta`` the new unknown ``v`` solves the plain Helmholtz
    equation on the image mesh with wave speeds ``(2/A) c_j / sqrt(a_j)``.
    The impedance rows ``a du/dn - i sqrt(a) (w/c) u = g`` map to the same
    form for ``v`` with data ``(A/2) g``.
    """
    check_instance(instance)
    med = instance.medium
    if med.a is None:
        return instance
    eta, total = eta_map(med)
    c_new = (2.0 / total) * med.c / np.sqrt(med.a)
    scale = total / 2.0
    return ProblemInstance(
        LayeredMedium(eta, c_new), instance.omega, scale * instance.g1, scale * instance.g2
    )


def phases(instance: ProblemInstance) -> np.ndarray:
    """Full phases 2 w h_j / c_j of every interval (length n+1)."""
    med = instance.medium
    return 2.0 * instance.omega * med.h / med.c


def is_alternating(c: np.ndarray, rtol: float = 1e-12) -> bool:
    """True if ``c`` takes value c_1 on odd and c_2 on even intervals."""
    if c.size <= 2:
        return True
    return bool(
        np.allclose(c[0::2], c[0], rtol=rtol, atol=0) and np.allclose(c[1::2], c[1], rtol=rtol, atol=0)
    )


def boundary_coefficients(instance: ProblemInstance) -> tuple[complex, complex]:
    """A_1 and B_{n+1} fixed directly by the impedance conditions."""
    c = instance.medium.c
    w = instance.omega
    A1 = 1j * c[0] / (2 * w) * np.exp(1j * w / c[0]) * instance.g1
    Bn = 1j * c[-1] / (2 * w) * np.exp(1j * w / c[-1]) * instance.g2
    return complex(A1), complex(Bn)


def condition_number(c: np.ndarray) -> float:
    # >= 1 mathematically; the product can round one ulp below
    return max(1.0, float(np.max(c) * np.max(1.0 / np.asarray(c))))


__all__ = [
    "InvalidMediumError",
    "LayeredMedium",
    "ProblemInstance",
    "DerivedParams",
    "validate",
    "check_instance",
    "derive_params",
    "wave_speeds_from_jumps",
    "eta_map",
    "reduce_variable_a",
    "phases",
    "is_alternating",
    "boundary_coefficients",
    "condition_number",
]
