"""Central numerical tolerances.

Defaults can be overridden by a JSON file whose path is given in the
``HELM1D_TOL_FILE`` environment variable, e.g.::

    {"resonance_gap": 1e-13, "small_step_K": 2.0}

Unknown keys in the file are rejected.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

ENV_VAR = "HELM1D_TOL_FILE"


@dataclass(frozen=True)
class Tolerances:
    # lower floor for the frequency
    omega_floor: float = 1e-8
    # endpoint snapping distance for mesh inputs
    mesh_snap: float = 1e-12
    # |sum h_j - 2| allowed after snapping
    width_sum: float = 1e-12
    # |sigma_j| = 1 check in the Q recursion
    unit_modulus: float = 1e-12
    # 1 - |Q_j|^2 below this is "effectively resonant"
    resonance_gap: float = 1e-14
    # 2x2 pivot magnitude relative to block scale
    pivot: float = 1e-14
    # products switch to log-magnitude accumulation above this n
    log_product_n: int = 64
    # Taylor-remainder constant assumed in the small-step cap
    small_step_K: float = 1.0
    # absolute cap on the small-step phase bound
    small_step_phi_cap: float = 0.125
    # dense oracle size guard (number of jumps)
    oracle_max_n: int = 2000
    # relative agreement required by `verify`
    verify_rel: float = 1e-9
    # residual tolerance relative to solution scale
    residual_rel: float = 1e-10


DEFAULT = Tolerances()


class ToleranceError(ValueError):
    pass


def load(path: str | os.PathLike | None = None) -> Tolerances:
    """Return tolerances, overridden from ``path`` or ``$HELM1D_TOL_FILE``."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if not path:
        return DEFAULT
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ToleranceError(f"cannot load tolerance file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ToleranceError("tolerance file must hold a JSON object")
    known = {f.name: f.type for f in fields(Tolerances)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ToleranceError(f"unknown tolerance keys: {', '.join(unknown)}")
    cast = {k: (int(v) if isinstance(getattr(DEFAULT, k), int) else float(v)) for k, v in data.items()}
    return replace(DEFAULT, **cast)


_current: Tolerances | None = None


def get() -> Tolerances:
    """Process-wide tolerances (loaded lazily once)."""
    global _current
    if _current is None:
        _current = load()
    return _current
