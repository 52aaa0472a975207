"""Degeneracy amplification for Ising models and spectral checks of its effect."""

from .gadgets import (
    GadgetParams,
    TransformReport,
    Transformed,
    apply_construction,
    ferro_pair_preprocess,
    transform,
    two_local_gadget,
    unitize,
    zero_cost_extension,
)
from .hamiltonian import SparseHamiltonian, build
from .ising import (
    BruteForceSummary,
    IsingModel,
    SpinConfiguration,
    Term,
    brute_force,
    count_satisfied,
    evaluate_energy,
    flip_cost,
    single_flip_degenerate_qubits,
)
from .perturbation import profile, second_order_bound, slope_divergence_check
from .spectrum import SpectrumSweep, SweepSchedule, lowest_eigenpairs, min_gap, sweep

__version__ = "0.1.0"
