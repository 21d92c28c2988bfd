"""Small-noise exit-point analysis for overdamped Langevin dynamics.

The package computes where a diffusion with generator

    L = -(h/2) Laplacian + grad(f) . grad

leaves a bounded domain as the temperature h goes to zero, and checks the
asymptotic prediction against direct simulation, grid PDE solves, and exact
one-dimensional formulas.

Subpackages / modules:

- ``landscape``  potentials, domain geometry, finite-difference grids
- ``morse``      critical points, barriers, wells, saddles, assumption checks
- ``exitlaw``    theoretical exit weights and 1D closed-form oracles
- ``sde``        Euler--Maruyama exit sampling and exit statistics
- ``pde``        weighted Laplacian solves, principal eigenpairs, QSD exit law
- ``action``     discrete path functional and its minimisation
- ``harness``    experiment configs, runners, theory-vs-simulation comparison
"""

__version__ = "0.1.0"

from . import errors
from .exitlaw import (
    ExitLaw,
    Oracle1D,
    exact_exit_probability_1d,
    predicted_concentration_set,
    theoretical_weights,
)
from .morse import LandscapeReport, analyze
from .pde import (
    Eigenpair,
    HarmonicSolution,
    WeightedOperator,
    assemble,
    leveling_oscillation,
    principal_eigenpair,
    qsd_exit_law,
    solve_harmonic,
)
from .sde import (
    ExitHistogram,
    ExitSample,
    SimConfig,
    decay_rate_fit,
    estimate_observable,
    histogram,
    simulate_exit,
)

__all__ = [
    "errors",
    "__version__",
    "ExitLaw",
    "Oracle1D",
    "LandscapeReport",
    "analyze",
    "exact_exit_probability_1d",
    "predicted_concentration_set",
    "theoretical_weights",
    "ExitHistogram",
    "ExitSample",
    "SimConfig",
    "decay_rate_fit",
    "estimate_observable",
    "histogram",
    "simulate_exit",
    "Eigenpair",
    "HarmonicSolution",
    "WeightedOperator",
    "assemble",
    "leveling_oscillation",
    "principal_eigenpair",
    "qsd_exit_law",
    "solve_harmonic",
]
