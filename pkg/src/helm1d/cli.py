"""Command-line front end.

Exit codes: 0 success, 1 oracle mismatch (``verify``), 2 invalid input,
3 effectively resonant instance (output still written, flagged).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds, configgen, qrec, tolerances
from .assembly import build_system
from .io import ConfigError, dumps_config, load_config, solution_csv, write_csv
from .medium import (
    InvalidMediumError,
    LayeredMedium,
    ProblemInstance,
    derive_params,
    reduce_variable_a,
)
from .solver import (
    OracleSizeError,
    energy_norm,
    energy_space_norm,
    relative_difference,
    residuals,
    solve_direct,
    solve_green,
    solve_oracle,
)

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_RESONANT = 0, 1, 2, 3


class UsageError(ValueError):
    pass


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _need_config(args) -> tuple[ProblemInstance, dict | None]:
    if not args.config:
        raise UsageError("--config is required")
    return load_config(args.config)


# --- solve ---------------------------------------------------------------------


def cmd_solve(args) -> int:
    inst, _ = _need_config(args)
    if args.samples < 0:
        raise UsageError("--samples must be non-negative")
    sol = solve_direct(inst)
    res = residuals(sol)
    _emit(solution_csv(sol, args.samples, args.derivative), args.out)
    summary = {
        "n": inst.n,
        "omega": inst.omega,
        "resonant": sol.resonant,
        "min_pivot": sol.min_pivot,
        "norm_0": energy_norm(sol, 0),
        "norm_1": energy_norm(sol, 1),
        "norm_2": energy_norm(sol, 2),
        "energy_norm": energy_space_norm(sol),
        "max_abs_u": float(np.max(np.abs(np.concatenate([sol.A, sol.B])))) if inst.n >= 0 else 0.0,
        "residuals": {
            "continuity": res.continuity,
            "flux": res.flux,
            "left_bc": res.left_bc,
            "right_bc": res.right_bc,
            "max_relative": res.max_relative(),
        },
    }
    # the CSV owns stdout when no --out is given
    stream = sys.stdout if args.out else sys.stderr
    stream.write(json.dumps(_jsonable(summary), indent=2) + "\n")
    return EXIT_RESONANT if sol.resonant else EXIT_OK


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (float, np.floating)):
        return bounds._json_num(obj)
    return obj


# --- bounds --------------------------------------------------------------------


def cmd_bounds(args) -> int:
    inst, _ = _need_config(args)
    if inst.medium.has_variable_a:
        raise InvalidMediumError(["bounds are reported for a == 1 only; the config sets a"])
    rep = bounds.full_report(inst)
    _emit(rep.to_json(indent=2) + "\n", args.out)
    return EXIT_RESONANT if rep.resonant else EXIT_OK


# --- generate ------------------------------------------------------------------


def _spec_from_args(args, omega: float | None = None) -> configgen.GeneratorSpec:
    if not args.kind:
        raise UsageError("--kind is required")
    w = args.omega if omega is None else omega
    if w is None:
        w = 1.0 if args.kind == "random" else None
    if w is None:
        raise UsageError("--omega is required")
    q = args.q if args.q is not None else (0.0 if args.kind == "random" else 0.5)
    return configgen.GeneratorSpec(kind=args.kind, omega=w, q=q, n=args.n, k=args.k, seed=args.seed)


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    inst = configgen.generate(spec)
    _emit(dumps_config(inst, configgen.provenance(spec)), args.out)
    return EXIT_OK


# --- verify --------------------------------------------------------------------


@dataclass
class CheckRow:
    name: str
    value: float
    tol: float

    @property
    def ok(self) -> bool:
        return math.isfinite(self.value) and self.value <= self.tol


def _rel(a: complex, b: complex) -> float:
    scale = max(abs(b), 1e-300)
    return abs(a - b) / scale


def _conditioning(inst: ProblemInstance) -> float:
    """max_j 1/sqrt(1 - |Q_j|^2) over both sweep directions."""
    plain = reduce_variable_a(inst)
    if plain.n == 0:
        return 1.0
    p = derive_params(plain)
    n = plain.n
    fwd = qrec.q_sequence(p.sigma[1:], p.q)
    rev = qrec.q_sequence(p.sigma[n - 1 :: -1] if n > 1 else p.sigma[:1], -p.q[::-1])
    m = float(max(fwd.modulus.max(), rev.modulus.max()))
    return qrec.inverse_gap_sqrt(m)


def _verify_one(inst: ProblemInstance) -> tuple[list[CheckRow], float]:
    tol = tolerances.get()
    cond = _conditioning(inst)
    coef_tol = tol.verify_rel * cond
    rows: list[CheckRow] = []
    direct = solve_direct(inst)
    green = solve_green(inst)
    try:
        oracle = solve_oracle(inst)
    except OracleSizeError:
        oracle = None
    if oracle is not None:
        rows.append(CheckRow("direct vs oracle", relative_difference(direct, oracle), coef_tol))
        rows.append(CheckRow("green vs oracle", relative_difference(green, oracle), coef_tol))
    rows.append(CheckRow("direct vs green", relative_difference(direct, green), coef_tol))
    rows.append(CheckRow("residual (direct)", residuals(direct).max_relative(), tol.residual_rel * cond))
    plain = reduce_variable_a(inst)
    if plain.n >= 2 and plain.n <= 200:
        p = derive_params(plain)
        dense = build_system(p).to_dense()
        sign, logdet = np.linalg.slogdet(dense)
        full = sign * np.exp(logdet)
        signr, logr = np.linalg.slogdet(dense[:-1, :-1])
        red = signr * np.exp(logr)
        rows.append(CheckRow("det M (full)", _rel(qrec.det_M(p.sigma[1:], p.q), full), tol.verify_rel * cond))
        # the reduced determinant is -sigma_n Q_n det M with |Q_n| <= 1; Q_n can be a tiny
        # cancellation residue near resonance, so measure the error on the scale of det M
        err = abs(qrec.det_M(p.sigma[1:], p.q, reduced=True) - red) / max(abs(full), 1e-300)
        rows.append(CheckRow("det M (reduced)", err, tol.verify_rel * cond))
    return rows, cond


def _perturb(inst: ProblemInstance, rng: np.random.Generator) -> ProblemInstance:
    med = inst.medium
    mesh = med.mesh.copy()
    h = med.h
    if med.n:
        shift = 0.1 * np.minimum(h[:-1], h[1:])
        mesh[1:-1] += rng.uniform(-1.0, 1.0, med.n) * shift
    c = med.c * (1.0 + 1e-3 * rng.uniform(-1.0, 1.0, med.c.size))
    a = None if med.a is None else med.a * (1.0 + 1e-3 * rng.uniform(-1.0, 1.0, med.a.size))
    return ProblemInstance(LayeredMedium(mesh, c, a), inst.omega, inst.g1, inst.g2)


def cmd_verify(args) -> int:
    inst, _ = _need_config(args)
    trials = args.trials or 0
    if trials < 0:
        raise UsageError("--trials must be non-negative")
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    cases = [("config", inst)] + [(f"trial {t + 1}", _perturb(inst, rng)) for t in range(trials)]
    lines = [f"{'case':<10} {'check':<20} {'max_rel':>12} {'tolerance':>12}  result"]
    all_ok = True
    for label, case in cases:
        rows, cond = _verify_one(case)
        for row in rows:
            all_ok &= row.ok
            lines.append(
                f"{label:<10} {row.name:<20} {row.value:>12.3e} {row.tol:>12.3e}  {'PASS' if row.ok else 'FAIL'}"
            )
        lines.append(f"{label:<10} {'conditioning':<20} {cond:>12.3e}")
    lines.append("ALL PASS" if all_ok else "MISMATCH")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if all_ok else EXIT_MISMATCH


# --- sweep ---------------------------------------------------------------------

SWEEP_COLUMNS = ["omega", "n", "energy_norm", "norm_0", "c_stab_bound", "max_abs_Q", "lower_bound_0", "resonant"]


@dataclass(frozen=True)
class SweepSpec:
    start: float
    step: float
    stop: float
    template: configgen.GeneratorSpec
    outputs: tuple[str, ...] = tuple(SWEEP_COLUMNS)

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.step) and math.isfinite(self.stop)):
            raise UsageError("omega range must be finite")
        if self.start <= 0 or self.step <= 0:
            raise UsageError("omega range needs start > 0 and step > 0")

    def values(self) -> list[float]:
        # stop < start gives an empty sweep
        if self.stop < self.start:
            return []
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(count)]


def parse_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--omega-range must look like start:step:stop")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise UsageError(f"--omega-range: {exc}") from exc


def _sweep_row(spec: SweepSpec, omega: float) -> list:
    t = spec.template
    inst = configgen.generate(
        configgen.GeneratorSpec(kind=t.kind, omega=omega, q=t.q, n=t.n, k=t.k, seed=t.seed)
    )
    sol = solve_direct(inst)
    rep = bounds.stability_upper(inst)
    return [
        float(omega),
        inst.n,
        energy_space_norm(sol),
        energy_norm(sol, 0),
        float(rep.c_stab_main.value),
        float(max(rep.q_profile[1:], default=0.0)),
        bounds.stability_lower(sol, 0),
        int(sol.resonant or rep.resonant),
    ]


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[list]:
    omegas = spec.values()
    if jobs > 1 and len(omegas) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            # map keeps the input order
            return list(pool.map(lambda w: _sweep_row(spec, w), omegas))
    return [_sweep_row(spec, w) for w in omegas]


def cmd_sweep(args) -> int:
    if not args.omega_range:
        raise UsageError("--omega-range is required")
    start, step, stop = parse_range(args.omega_range)
    template = _spec_from_args(args, omega=start if start > 0 else 1.0)
    spec = SweepSpec(start, step, stop, template)
    rows = run_sweep(spec, args.jobs)
    _emit(write_csv(rows, SWEEP_COLUMNS), args.out)
    return EXIT_RESONANT if any(r[-1] for r in rows) else EXIT_OK


# --- entry point ---------------------------------------------------------------

COMMANDS = {
    "solve": cmd_solve,
    "bounds": cmd_bounds,
    "generate": cmd_generate,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helm1d", description="Layered 1D Helmholtz solver and stability bounds.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--out")
        p.add_argument("--samples", type=int, default=2048)
        p.add_argument("--derivative", action="store_true", help="also write u'")
        p.add_argument("--kind", choices=configgen.KINDS)
        p.add_argument("--omega", type=float)
        p.add_argument("--q", type=float)
        p.add_argument("--k", type=int)
        p.add_argument("--n", type=int)
        p.add_argument("--trials", type=int, default=0)
        p.add_argument("--omega-range")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweep")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidMediumError) as exc:
        violations = getattr(exc, "violations", [str(exc)])
        sys.stderr.write("invalid configuration:\n" + "".join(f"  - {v}\n" for v in violations))
        return EXIT_INPUT
    except (configgen.GeneratorError, UsageError, bounds.PreconditionError, tolerances.ToleranceError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
