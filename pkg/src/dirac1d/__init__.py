"""Massless 1+1D quantized Dirac field driven by a classical potential.

Free-field observables are computed exactly from a small Fock-space state;
the interacting field is obtained from the free one through a diagonal phase
matrix whose phases solve two transport equations. The headline experiment
drives the field with a potential proportional to the free current gradient
and shows the free-field energy falling without bound as the coupling grows.
"""

from .spectral_basis import Mode, SimulationDomain, eigenfunction, evolved_eigenfunction, inner_product, momentum_of
from .fock import FockState, BilinearMatrices, bilinear_matrices, two_electron_superposition, vacuum
from .observables import (
    CurrentProfile,
    EnergyReport,
    closed_form_current,
    component_densities,
    current_density,
    current_gradient,
    free_energy,
)
from .potential_dynamics import (
    AnalyticPotential,
    FeedbackPotential,
    PhaseFields,
    TabulatedPotential,
    build_W,
    feedback_potential,
    pde_residual,
    solve_phases,
)
from .extraction import (
    ExperimentConfig,
    ExtractionResult,
    delta_energy_closed_form,
    delta_energy_quadrature,
    final_energy_direct,
    run_extraction,
    sweep_f,
)

__version__ = "0.1.0"
