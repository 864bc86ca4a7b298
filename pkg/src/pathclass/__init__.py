"""Restricted path amplitudes: classifying Feynman paths by the value of a functional."""

from .absorber import OpticalRun, absorbed_amplitude, optical_evolve, wall_overlap
from .distribution import AmplitudeDistribution, Spectrum
from .firstcross import (
    CrossingDecomposition,
    completeness_residual,
    first_crossing_distribution,
    first_crossing_kernel,
    norm_leak_rate,
    wall_kernel,
)
from .lattice import GaussianPacketSpec, SpatialGrid, WaveFunction, free_propagate, gaussian_packet, wall_propagate
from .meter import MeterFilter, MixedState, apply_filter, post_measurement_state, total_norm, zeno_sweep
from .pathsum import DiscreteSystem, PathRecord, enumerate_restricted_amplitude, finite_dim_zeno, meter_evolve
from .scattering import StepAmplitudes, StepSolver, crank_nicolson, step_evolve, step_evolve_exact, step_T
from .traversal import sum_rule_residual, traversal_distribution, two_class_split

__version__ = "0.1.0"
