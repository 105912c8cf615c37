"""Hamming-weight-constrained QAOA simulation and benchmarking."""
__version__ = "0.1.0"

from .graphs import (Graph, ProblemInstance, ProblemKind, all_four_vertex_graphs,
                     generate_erdos_renyi, objective)
from .operators import MixerKind, apply_mixer, apply_phase_separator, build_mixer, get_mixer
from .qaoa import (VARIANTS, AngleSchedule, RunResult, Separator, Simulator, Variant,
                   expectation_and_ratio, grover_th_schedule, run_qaoa)
from .subspace import CapacityError, build_cost_vector, build_index, dicke_state
from .tuner import TunedRound, TunerConfig

__all__ = [
    "Graph", "ProblemInstance", "ProblemKind", "all_four_vertex_graphs", "generate_erdos_renyi",
    "objective", "MixerKind", "apply_mixer", "apply_phase_separator", "build_mixer", "get_mixer",
    "VARIANTS", "AngleSchedule", "RunResult", "Separator", "Simulator", "Variant",
    "expectation_and_ratio", "grover_th_schedule", "run_qaoa", "CapacityError",
    "build_cost_vector", "build_index", "dicke_state", "TunedRound", "TunerConfig",
]
