"""Stability bounds for layered media.

Every reported bound carries a short ``basis`` (which argument produced
it) and the assumptions it relies on, so JSON consumers can tell
certified values from values that rest on a configurable constant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import qrec, tolerances
from .medium import (
    InvalidMediumError,
    ProblemInstance,
    check_instance,
    condition_number,
    derive_params,
    is_alternating,
    phases,
)
from .solver import WaveSolution

INF = float("inf")


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Bound:
    value: float
    basis: str
    assumptions: tuple[str, ...] = ()
    # upper end of the interval; inf when the value is only a lower end
    upper: float | None = None

    def as_dict(self) -> dict:
        out = {"value": _json_num(self.value), "basis": self.basis, "assumptions": list(self.assumptions)}
        if self.upper is not None:
            out["interval"] = [_json_num(self.value), _json_num(self.upper)]
        return out


def _json_num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


@dataclass
class StabilityReport:
    q_profile: list[float]
    c_stab_main: Bound
    resonant: bool
    upper_bounds: dict[int, Bound]
    lower_bounds: dict[int, Bound] = field(default_factory=dict)
    measured: dict[str, float] = field(default_factory=dict)
    regime: str | None = None
    majorant_bound: Bound | None = None
    q_cap: float | None = None
    C_q: float | None = None
    alpha_q: float | None = None
    provenance: str | None = None

    def to_dict(self) -> dict:
        out = {
            "q_profile": [float(v) for v in self.q_profile],
            "resonant": self.resonant,
            "c_stab_main": self.c_stab_main.as_dict(),
            "upper_bounds": {str(k): b.as_dict() for k, b in sorted(self.upper_bounds.items())},
            "lower_bounds": {str(k): b.as_dict() for k, b in sorted(self.lower_bounds.items())},
            "measured": {k: _json_num(v) for k, v in self.measured.items()},
        }
        if self.regime is not None:
            out["regime"] = self.regime
            out["majorant_bound"] = self.majorant_bound.as_dict() if self.majorant_bound else None
            out["q_cap"] = _json_num(self.q_cap)
            out["C_q"] = _json_num(self.C_q)
            out["alpha_q"] = _json_num(self.alpha_q)
            out["provenance"] = self.provenance
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _require_plain(instance: ProblemInstance):
    if instance.medium.has_variable_a:
        raise InvalidMediumError(["stability bounds are stated for a == 1; reduce the problem first"])


def _inv_gap_root_max(gaps: np.ndarray) -> tuple[float, bool]:
    """max 1/sqrt(gap) with clamping at the resonance threshold."""
    floor = tolerances.get().resonance_gap
    if gaps.size == 0:
        return 1.0, False
    g = float(np.min(gaps))
    resonant = g < floor
    return 1.0 / math.sqrt(max(g, floor)), resonant


def q_profile(instance: ProblemInstance) -> qrec.QSequence:
    p = derive_params(instance)
    return qrec.q_sequence(p.sigma[1:], p.q)


# --- main upper bound ----------------------------------------------------------------

MAIN_BASIS = "Green-column representation with |entry| <= 1/sqrt(1-|Q_j|^2)"


def stability_upper(instance: ProblemInstance) -> StabilityReport:
    """C_stab and the bounds on ||u^(k)||, k = 0, 1, 2, from the Q profile."""
    check_instance(instance)
    _require_plain(instance)
    seq = q_profile(instance)
    inv_gap, resonant = _inv_gap_root_max(seq.gap()[1:])
    c = instance.medium.c
    cmax, cmin = float(np.max(c)), float(np.min(c))
    w = instance.omega
    g = max(abs(instance.g1), abs(instance.g2))
    assumptions: tuple[str, ...] = ()
    upper = None
    if resonant:
        assumptions = ("1-|Q_j|^2 clamped at resonance threshold; value is a lower end only",)
        upper = INF
    c_stab = Bound(4.0 * cmax / cmin * inv_gap, MAIN_BASIS, assumptions, upper)
    bounds = {
        k: Bound(4.0 * cmax / cmin**k * w ** (k - 1) * g * inv_gap, MAIN_BASIS, assumptions, upper)
        for k in (0, 1, 2)
    }
    return StabilityReport(
        q_profile=[float(v) for v in seq.modulus],
        c_stab_main=c_stab,
        resonant=resonant,
        upper_bounds=bounds,
    )


LOWER_BASIS = "smallest eigenvalue of the per-interval quadratic form"


def stability_lower(solution: WaveSolution, k: int = 0) -> float:
    """max_j sqrt(2 h_j / 15) kappa_j^k t_j/(1+t_j) max(|A_j|, |B_j|), t_j = kappa_j h_j."""
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    h = solution.instance.medium.h
    kap = solution.kappa
    t = kap * h
    coef = np.maximum(np.abs(solution.A), np.abs(solution.B))
    vals = np.sqrt(2.0 * h / 15.0) * kap**k * t / (1.0 + t) * coef
    return float(np.max(vals)) if vals.size else 0.0


# --- regime caps -----------------------------------------------------------------


@dataclass(frozen=True)
class RegimeCap:
    """A certified bound on max_j |Q_j| and the induced bound on C_stab."""

    q_cap: float
    gap: float  # 1 - q_cap^2, computed without cancellation
    c_stab_cap: float
    basis: str
    assumptions: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)


def _log_gap_from_atanh(t: float) -> float:
    """log(1 - tanh(t)^2) = -2 log cosh t, stable for large t."""
    t = abs(t)
    return -2.0 * (t + math.log1p(math.exp(-2.0 * t)) - math.log(2.0))


def _gap_from_atanh(t: float) -> float:
    return math.exp(_log_gap_from_atanh(t))


def _c_stab_from_log_gap(kappa: float, log_gap: float) -> float:
    expo = -0.5 * log_gap
    return INF if expo > 700 else 4.0 * kappa * math.exp(expo)


def _max_jump(instance: ProblemInstance) -> float:
    c = instance.medium.c
    if c.size < 2:
        return 0.0
    return float(np.max(np.abs((c[1:] - c[:-1]) / (c[1:] + c[:-1]))))


def bound_above_resonance(instance: ProblemInstance, epsilon: float) -> RegimeCap:
    """Cap for media whose layers are all thicker than ``epsilon`` in phase.

    With omega h_j / c_j > epsilon for every j there are at most
    N = 2 omega / (epsilon c_min) - 1 jumps, and each jump can raise
    atanh |Q| by at most atanh(max |q_j|). ``q_cap`` is r~_N; the
    actual jump count gives the (never larger) ``details['q_cap_jumps']``.
    """
    check_instance(instance)
    _require_plain(instance)
    if not epsilon > 0:
        raise PreconditionError("epsilon must be positive")
    med = instance.medium
    scaled = instance.omega * med.h / med.c
    bad = np.nonzero(scaled <= epsilon)[0]
    if bad.size:
        j = int(bad[0]) + 1
        raise PreconditionError(
            f"interval {j} has omega*h/c = {scaled[j - 1]:.6g} <= epsilon = {epsilon:.6g}"
        )
    cmin, cmax = float(np.min(med.c)), float(np.max(med.c))
    N_real = 2.0 * instance.omega / (epsilon * cmin) - 1.0
    N = max(int(math.floor(N_real + 1e-9)), 0)
    q = _max_jump(instance)
    a = math.atanh(q)
    q_cap = math.tanh(N * a)
    gap = _gap_from_atanh(N * a)
    n = instance.n
    jump_cap = math.tanh(n * a)
    kappa = cmax / cmin
    c_cap = _c_stab_from_log_gap(kappa, _log_gap_from_atanh(N * a))
    return RegimeCap(
        q_cap=q_cap,
        gap=gap,
        c_stab_cap=c_cap,
        basis="worst-case growth over at most N jumps of size max|q_j|",
        details={
            "N": N,
            "N_real": N_real,
            "epsilon": epsilon,
            "q_max": q,
            "q_cap_jumps": jump_cap,
            "gap_jumps": _gap_from_atanh(n * a),
            "log_gap": _log_gap_from_atanh(N * a),
            "log_gap_jumps": _log_gap_from_atanh(n * a),
        },
    )


def small_step_log_alpha(q: float, s: float, phi: float) -> tuple[float, float, float]:
    """log of (alpha, interior branch, boundary branch) of the small-step argument.

    interior: (1/2)^(2 a s), boundary: (1 - a phi)^(s/phi + 1), a = 2q/(1-q^2).
    The certified alpha is the smaller one.
    """
    if q == 0.0:
        return 0.0, 0.0, 0.0
    a = 2.0 * q / (1.0 - q * q)
    interior = -2.0 * a * s * math.log(2.0)
    boundary = (s / phi + 1.0) * math.log1p(-a * phi)
    return min(interior, boundary), interior, boundary


def small_step_alpha(q: float, s: float, phi: float) -> tuple[float, float, float]:
    return tuple(math.exp(v) for v in small_step_log_alpha(q, s, phi))


def small_step_gate(q: float) -> float:
    tol = tolerances.get()
    gate = min(1.0 / (4.0 * tol.small_step_K), tol.small_step_phi_cap)
    if q > 0:
        gate = min(gate, (1.0 - q * q) / (4.0 * q))
    return gate


def _alternating_jump(instance: ProblemInstance) -> float:
    c = instance.medium.c
    if not is_alternating(c):
        raise PreconditionError("wave speed must alternate between two values")
    if c.size < 2:
        return 0.0
    return abs(float((c[1] - c[0]) / (c[1] + c[0])))


def _small_step_assumptions() -> tuple[str, ...]:
    tol = tolerances.get()
    return (
        f"Taylor remainder constant K <= {tol.small_step_K:g} (not quantified by the underlying argument)",
        f"phases capped at {tol.small_step_phi_cap:g}",
    )


def bound_small_step(instance: ProblemInstance, phi_max: float) -> RegimeCap:
    """Cap |Q_j|^2 <= 1 - (1-|Q_1|^2) alpha for alternating media with thin layers."""
    check_instance(instance)
    _require_plain(instance)
    q = _alternating_jump(instance)
    if not phi_max > 0:
        raise PreconditionError("phi_max must be positive")
    gate = small_step_gate(q)
    if phi_max > gate:
        raise PreconditionError(f"phi_max = {phi_max:.6g} exceeds the admissible gate {gate:.6g}")
    ph = phases(instance)
    if np.any(ph > phi_max):
        j = int(np.argmax(ph > phi_max)) + 1
        raise PreconditionError(f"interval {j} has phase 2*omega*h/c = {ph[j - 1]:.6g} > phi_max")
    cmin, cmax = float(np.min(instance.medium.c)), float(np.max(instance.medium.c))
    s = 4.0 * instance.omega / cmin
    log_alpha, interior, boundary = small_step_log_alpha(q, s, phi_max)
    alpha = math.exp(log_alpha)
    gap = (1.0 - q * q) * alpha
    q_cap = math.sqrt(max(1.0 - gap, 0.0))
    return RegimeCap(
        q_cap=q_cap,
        gap=gap,
        c_stab_cap=_c_stab_from_log_gap(cmax / cmin, math.log1p(-q * q) + log_alpha),
        basis="monotone majorant of the two-step reflection recursion, both maximizer branches",
        assumptions=_small_step_assumptions(),
        details={
            "s": s,
            "phi": phi_max,
            "alpha": alpha,
            "log_alpha": log_alpha,
            "log_gap": math.log1p(-q * q) + log_alpha,
            "log_alpha_interior": interior,
            "log_alpha_boundary": boundary,
            "q": q,
        },
    )


def phase_threshold(q: float) -> float:
    """Full phase separating thin (small-step) from thick layers."""
    cap = tolerances.get().small_step_phi_cap
    return (min(cap, (1.0 - q * q) / (4.0 * q)) if q > 0 else cap) / 2.0


def _log_gap_after_jump(log_gap: float, a_q: float) -> float:
    """log(1 - |Q'|^2) after one worst-case jump, from log(1 - |Q|^2)."""
    gap = math.exp(log_gap)
    rho = math.sqrt(max(1.0 - gap, 0.0))
    t = math.log1p(rho) - 0.5 * log_gap + a_q  # atanh(rho) + atanh(q)
    return _log_gap_from_atanh(t)


def _sequential_cap(instance: ProblemInstance, q: float, thresh: float) -> tuple[float, float]:
    """Compose worst-case jumps and small-step runs along the medium.

    |Q_{j+1}| depends on the phase of sigma_j (interval j+1). A thick
    interval allows one worst-case jump. A run of thin intervals
    j+1..m bounds Q_{j+2}, Q_{j+4}, ... through the two-step small-phase
    majorant seeded with the cap on Q_j; the interleaved values get one
    extra worst-case jump on top. Returns (q_cap, log_gap).
    """
    n = instance.n
    if n == 0:
        return 0.0, 0.0
    ph = phases(instance)
    a_q = math.atanh(q)
    log_gap = math.log1p(-q * q)  # |Q_1| = |q_1| whatever sigma_1 is
    worst = log_gap
    j = 1
    while j < n:
        if ph[j] > thresh:
            log_gap = _log_gap_after_jump(log_gap, a_q)
            j += 1
        else:
            m = j
            while m < n and ph[m] <= thresh:
                m += 1
            run = ph[j:m]
            phi = float(np.max(run))
            paired = log_gap + small_step_log_alpha(q, max(float(np.sum(run)), phi), phi)[0]
            log_gap = _log_gap_after_jump(paired, a_q)
            j = m
        worst = min(worst, log_gap)
    return math.sqrt(max(-math.expm1(worst), 0.0)), worst


def combined_bound(instance: ProblemInstance) -> StabilityReport:
    """Regime-aware majorant of C_stab for alternating media.

    Returns the report of :func:`stability_upper` extended with the regime,
    the certified cap and the explicit constants of
    ``C_stab <= C_q * alpha_q^(-omega/c_min)``.
    """
    rep = stability_upper(instance)
    q = _alternating_jump(instance)
    c = instance.medium.c
    cmin, cmax = float(np.min(c)), float(np.max(c))
    kappa = cmax / cmin
    w = instance.omega
    ph = phases(instance)
    thresh = phase_threshold(q)
    n = instance.n
    a = 2.0 * q / (1.0 - q * q)
    t_jumps = n * math.atanh(q)
    jumps_log_gap = _log_gap_from_atanh(t_jumps)
    if n == 0 or np.all(ph > thresh):
        eps = float(np.min(w * instance.medium.h / c)) * (1.0 - 1e-12)
        cap = bound_above_resonance(instance, eps)
        log_gap = cap.details["log_gap"]
        regime = "above-resonance"
        basis = cap.basis + "; capped by the actual jump count"
        assumptions: tuple[str, ...] = ()
        C_q = 4.0 * kappa
        alpha_q = kappa ** (-1.0 / eps)
    elif np.all(ph <= thresh):
        cap = bound_small_step(instance, float(np.max(ph)))
        log_gap = cap.details["log_gap"]
        regime = "small-step"
        basis = cap.basis
        assumptions = cap.assumptions
        # both branches are >= 2^(-2 a s) / 2 once a * phi <= 1/2
        C_q = 4.0 * kappa * math.sqrt(2.0 / (1.0 - q * q))
        alpha_q = 2.0 ** (-4.0 * a)
    else:
        _, log_gap = _sequential_cap(instance, q, thresh)
        regime = "mixed"
        basis = "sequential composition: worst-case jump on thick layers, small-step cap on thin runs"
        assumptions = _small_step_assumptions()
        eps = thresh / 2.0
        # a thick step shrinks the gap by at most 1/kappa, a thin run by at most 2^(-2 a s_run) / 2,
        # and there are at most 2 omega / (eps c_min) thick steps
        C_q = 4.0 * kappa * math.sqrt(2.0 / (1.0 - q * q))
        alpha_q = (2.0 * kappa) ** (-1.0 / eps) * 2.0 ** (-4.0 * a)
    # the jump-count cap holds for every phase pattern
    log_gap = max(log_gap, jumps_log_gap)
    q_cap = math.sqrt(max(-math.expm1(log_gap), 0.0))
    c_cap = _c_stab_from_log_gap(kappa, log_gap)
    rep.regime = regime
    rep.majorant_bound = Bound(c_cap, basis, assumptions)
    rep.q_cap = q_cap
    rep.C_q = C_q
    rep.alpha_q = alpha_q
    rep.provenance = regime
    return rep


def closed_form_majorant(report: StabilityReport, instance: ProblemInstance) -> float:
    """C_q * alpha_q^(-omega/c_min) from a combined report."""
    if report.C_q is None:
        raise ValueError("report has no regime constants; use combined_bound")
    cmin = float(np.min(instance.medium.c))
    expo = -instance.omega / cmin * math.log(report.alpha_q)
    if expo > 700:
        return INF
    return report.C_q * math.exp(expo)


def full_report(instance: ProblemInstance, solution: WaveSolution | None = None) -> StabilityReport:
    """Upper bounds, lower bounds, measured norms and (if applicable) the regime majorant."""
    from .solver import energy_norm, energy_space_norm, solve_direct

    if is_alternating(instance.medium.c):
        rep = combined_bound(instance)
    else:
        rep = stability_upper(instance)
    sol = solution if solution is not None else solve_direct(instance)
    for k in (0, 1, 2):
        rep.lower_bounds[k] = Bound(stability_lower(sol, k), LOWER_BASIS)
        rep.measured[f"norm_{k}"] = energy_norm(sol, k)
    rep.measured["energy_norm"] = energy_space_norm(sol)
    g = max(abs(instance.g1), abs(instance.g2))
    rep.measured["energy_ratio"] = rep.measured["energy_norm"] / g if g > 0 else 0.0
    rep.measured["kappa"] = condition_number(instance.medium.c)
    return rep
