"""JSON configuration files and CSV export.

Configuration schema (unknown keys are rejected)::

    {
      "omega": 64.0,
      "mesh": [-1.0, ..., 1.0],
      "c": [...],                 # len(mesh) - 1 values
      "a": [...],                 # optional, same length as c
      "g1": [re, im],             # optional, default [0, 0]
      "g2": [re, im],             # optional, default [1, 0]
      "provenance": {...}         # optional, ignored by the solver
    }

A complex datum may also be given as a plain real number.
"""

from __future__ import annotations

import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .medium import LayeredMedium, ProblemInstance, check_instance
from .solver import WaveSolution, evaluate

ALLOWED_KEYS = ("omega", "mesh", "c", "a", "g1", "g2", "provenance")
REQUIRED_KEYS = ("omega", "mesh", "c")


class ConfigError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


def _number(value, name, errors):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        errors.append(f"{name} must be a finite number")
        return None
    return float(value)


def _complex(value, name, errors):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        re = _number(value, name, errors)
        return None if re is None else complex(re, 0.0)
    if isinstance(value, list) and len(value) == 2:
        re = _number(value[0], f"{name}[0]", errors)
        im = _number(value[1], f"{name}[1]", errors)
        return None if re is None or im is None else complex(re, im)
    errors.append(f"{name} must be [re, im] or a number")
    return None


def _numbers(value, name, errors):
    if not isinstance(value, list) or not value:
        errors.append(f"{name} must be a non-empty list of numbers")
        return None
    out = [_number(v, f"{name}[{i}]", errors) for i, v in enumerate(value)]
    return None if any(v is None for v in out) else out


def parse_config(data: Any) -> tuple[ProblemInstance, dict | None]:
    """Validate a decoded config object; raises :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError(["config must be a JSON object"])
    errors: list[str] = []
    unknown = sorted(set(data) - set(ALLOWED_KEYS))
    if unknown:
        errors.append(f"unknown keys: {', '.join(unknown)}")
    for key in REQUIRED_KEYS:
        if key not in data:
            errors.append(f"missing key: {key}")
    if errors:
        raise ConfigError(errors)
    omega = _number(data["omega"], "omega", errors)
    mesh = _numbers(data["mesh"], "mesh", errors)
    c = _numbers(data["c"], "c", errors)
    a = _numbers(data["a"], "a", errors) if data.get("a") is not None else None
    g1 = _complex(data.get("g1", 0.0), "g1", errors)
    g2 = _complex(data.get("g2", 1.0), "g2", errors)
    prov = data.get("provenance")
    if prov is not None and not isinstance(prov, dict):
        errors.append("provenance must be an object")
    if mesh is not None and c is not None and len(c) != len(mesh) - 1:
        errors.append(f"len(c) = {len(c)} but len(mesh) - 1 = {len(mesh) - 1}")
    if a is not None and c is not None and len(a) != len(c):
        errors.append(f"len(a) = {len(a)} but len(c) = {len(c)}")
    if errors:
        raise ConfigError(errors)
    inst = ProblemInstance(LayeredMedium(mesh, c, a), omega, g1, g2)
    check_instance(inst)
    return inst, prov


def load_config(path: str | Path) -> tuple[ProblemInstance, dict | None]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror or exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"invalid JSON in {path}: {exc.msg} (line {exc.lineno})"]) from exc
    return parse_config(data)


def instance_to_config(instance: ProblemInstance, provenance: dict | None = None) -> dict:
    med = instance.medium
    out = {
        "omega": instance.omega,
        "mesh": [float(x) for x in med.mesh],
        "c": [float(x) for x in med.c],
    }
    if med.a is not None:
        out["a"] = [float(x) for x in med.a]
    out["g1"] = [instance.g1.real, instance.g1.imag]
    out["g2"] = [instance.g2.real, instance.g2.imag]
    if provenance is not None:
        out["provenance"] = provenance
    return out


def dumps_config(instance: ProblemInstance, provenance: dict | None = None) -> str:
    # repr-based float output round-trips exactly
    return json.dumps(instance_to_config(instance, provenance), indent=2) + "\n"


def save_config(instance: ProblemInstance, path: str | Path, provenance: dict | None = None) -> None:
    Path(path).write_text(dumps_config(instance, provenance), encoding="utf-8")


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def solution_csv(solution: WaveSolution, samples: int, derivative: bool = False) -> str:
    """CSV of u (and u') on ``samples`` equispaced points of [-1, 1]."""
    if samples < 0:
        raise ValueError("samples must be non-negative")
    header = ["x", "re_u", "im_u", "abs_u"]
    if derivative:
        header += ["re_du", "im_du"]
    x = np.linspace(-1.0, 1.0, samples) if samples != 1 else np.array([-1.0])
    u = evaluate(solution, x, 0) if samples else np.zeros(0, complex)
    du = evaluate(solution, x, 1) if derivative and samples else None
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for i in range(samples):
        row = [fmt(x[i]), fmt(u[i].real), fmt(u[i].imag), fmt(abs(u[i]))]
        if du is not None:
            row += [fmt(du[i].real), fmt(du[i].imag)]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_csv(rows: list[list], header: list[str], path: str | Path | None = None) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
