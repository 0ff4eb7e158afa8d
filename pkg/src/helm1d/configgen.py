"""Generators for layered media.

* ``well-behaved``: alternating speeds c(1-q), c(1+q) with every layer an
  integer number of half wavelengths thick, so all phase factors equal 1
  and the stability constant stays bounded as omega grows.
* ``critical``: the same alternating speeds with quarter-wave layers except
  for one half-wave layer in the middle. The reflection recursion then
  climbs to |Q_k| = tanh(k atanh q) and the solution grows exponentially.
* ``random``: seeded sampler used by the property and oracle tests.

Random instances use numpy's ``default_rng`` (PCG64) seeded with the given
integer. Draw order: n, omega (only if a range is configured), n interior
points, n+1 log-speeds, then g1 and g2 (only if ``random_data``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .medium import LayeredMedium, ProblemInstance

KINDS = ("well-behaved", "critical", "random")


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    omega: float = 1.0
    q: float = 0.0
    n: int | None = None
    k: int | None = None
    seed: int | None = None
    n_range: tuple[int, int] = (0, 40)
    c_band: tuple[float, float] = (0.5, 2.0)
    omega_range: tuple[float, float] | None = None
    random_data: bool = False
    m: tuple[int, ...] | None = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GeneratorError(f"unknown generator kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not self.omega > 0:
            raise GeneratorError("omega must be positive")


def n_for_omega(omega: float) -> int:
    """Odd jump count n with n + 1 = 2 ceil(omega/4), so that c stays near 4/pi."""
    return 2 * max(1, math.ceil(omega / 4.0)) - 1


def k_for_omega(omega: float) -> int:
    """Even k closest to omega (at least 2)."""
    return max(2, 2 * int(round(omega / 2.0)))


def _alternating(base: float, q: float, count: int) -> np.ndarray:
    j = np.arange(1, count + 1)
    return np.where(j % 2 == 1, base * (1.0 - q), base * (1.0 + q))


def _mesh_from_widths(h: np.ndarray) -> np.ndarray:
    mesh = -1.0 + np.concatenate([[0.0], np.cumsum(h)])
    mesh[-1] = 1.0
    return mesh


def gen_well_behaved(omega: float, n: int | None = None, q: float = 0.5) -> ProblemInstance:
    """Alternating medium with sigma_j = 1 for every j."""
    if n is None:
        n = n_for_omega(omega)
    if n < 1 or n % 2 == 0:
        raise GeneratorError(f"well-behaved media need an odd number of jumps n (got {n})")
    if not 0.0 <= q < 1.0:
        raise GeneratorError("q must lie in [0, 1)")
    if not omega > 0:
        raise GeneratorError("omega must be positive")
    base = 2.0 * omega / ((n + 1) * math.pi)
    c = _alternating(base, q, n + 1)
    j = np.arange(1, n + 2)
    mesh = np.empty(n + 2)
    mesh[0] = -1.0
    mesh[1:] = np.where(j % 2 == 1, -1.0 + 2.0 * (j - q) / (n + 1), -1.0 + 2.0 * j / (n + 1))
    mesh[-1] = 1.0
    return ProblemInstance(LayeredMedium(mesh, c), omega)


def critical_weights(k: int, m: Sequence[int] | None = None) -> np.ndarray:
    """Half-period counts mu_j per interval: m_j for j = k+1, m_j + 1/2 otherwise."""
    count = 2 * k + 1
    if m is None:
        m = np.zeros(count, dtype=int)
        m[k] = 1
    m = np.asarray(m, dtype=int)
    if m.size != count:
        raise GeneratorError(f"m needs {count} entries (got {m.size})")
    if np.any(m < 0):
        raise GeneratorError("m entries must be non-negative")
    mu = m + 0.5
    mu[k] = m[k]
    if mu[k] <= 0:
        raise GeneratorError("the middle layer needs m_{k+1} >= 1")
    return mu


def gen_critical(omega: float, k: int | None = None, q: float = 0.5, m: Sequence[int] | None = None) -> ProblemInstance:
    """Resonant alternating medium with n = 2k jumps.

    ``m`` overrides the default half-period counts (1 for the middle layer,
    0 elsewhere); the base speed is rescaled to keep the widths summing to 2.
    """
    if k is None:
        k = k_for_omega(omega)
    if k < 2 or k % 2:
        raise GeneratorError(f"critical media need an even k >= 2 (got {k})")
    if not 0.0 < q < 1.0:
        raise GeneratorError("q must lie in (0, 1)")
    if not omega > 0:
        raise GeneratorError("omega must be positive")
    mu = critical_weights(k, m)
    unit = _alternating(1.0, q, 2 * k + 1)
    base = 2.0 * omega / (math.pi * float(np.sum(unit * mu)))
    c = base * unit
    h = math.pi / omega * c * mu
    return ProblemInstance(LayeredMedium(_mesh_from_widths(h), c), omega)


def gen_random(spec: GeneratorSpec) -> ProblemInstance:
    if spec.seed is None:
        raise GeneratorError("random generation needs a seed")
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.n_range
    n = int(rng.integers(lo, hi + 1)) if spec.n is None else int(spec.n)
    omega = spec.omega if spec.omega_range is None else float(rng.uniform(*spec.omega_range))
    while True:
        inner = np.sort(rng.uniform(-1.0, 1.0, n))
        mesh = np.concatenate([[-1.0], inner, [1.0]])
        if np.all(np.diff(mesh) > 1e-9):
            break
    clo, chi = spec.c_band
    c = np.exp(rng.uniform(math.log(clo), math.log(chi), n + 1))
    g1, g2 = 0j, 1 + 0j
    if spec.random_data:
        g1, g2 = (complex(*rng.normal(size=2)) for _ in range(2))
    return ProblemInstance(LayeredMedium(mesh, c), omega, g1, g2)


def generate(spec: GeneratorSpec) -> ProblemInstance:
    if spec.kind == "well-behaved":
        return gen_well_behaved(spec.omega, spec.n, spec.q)
    if spec.kind == "critical":
        return gen_critical(spec.omega, spec.k, spec.q, spec.m)
    return gen_random(spec)


def provenance(spec: GeneratorSpec) -> dict:
    out = {"kind": spec.kind, "omega": spec.omega, "q": spec.q}
    for key in ("n", "k", "seed"):
        val = getattr(spec, key)
        if val is not None:
            out[key] = val
    if spec.m is not None:
        out["m"] = list(spec.m)
    return out
