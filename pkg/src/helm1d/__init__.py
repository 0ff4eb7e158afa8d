"""Exact solver and stability bounds for the 1D Helmholtz equation in layered media."""

from .bounds import StabilityReport, combined_bound, full_report, stability_lower, stability_upper
from .configgen import GeneratorSpec, gen_critical, gen_random, gen_well_behaved, generate
from .medium import InvalidMediumError, LayeredMedium, ProblemInstance, derive_params, reduce_variable_a
from .solver import (
    WaveSolution,
    energy_norm,
    energy_space_norm,
    evaluate,
    residuals,
    solve_direct,
    solve_green,
    solve_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "LayeredMedium",
    "ProblemInstance",
    "InvalidMediumError",
    "derive_params",
    "reduce_variable_a",
    "WaveSolution",
    "solve_direct",
    "solve_green",
    "solve_oracle",
    "evaluate",
    "energy_norm",
    "energy_space_norm",
    "residuals",
    "StabilityReport",
    "stability_upper",
    "stability_lower",
    "combined_bound",
    "full_report",
    "GeneratorSpec",
    "gen_well_behaved",
    "gen_critical",
    "gen_random",
    "generate",
]
