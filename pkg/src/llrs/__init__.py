"""Hardware-free simulation of a low-latency atom reconfiguration loop.

Modules: ``core`` (trap arrays, moves, executor), ``camera`` (EMCCD
rendering and timing), ``imaging`` (intensity extraction, thresholds),
``solver`` (exact 1D and red-rec), ``waveform`` (tone synthesis and the
lookup table), ``awg`` (segment streaming simulator), ``pipeline``
(closed-loop cycles), ``bench`` (sweeps and fits) and ``cli``.
"""

from .core import (Axis, IllegalMoveError, InvalidInstanceError, Kind, LLRSError, Move,
                   ProblemInstance, TrapArray, execute_moves, execute_solution, make_rng,
                   reached_target, sample_instance, target_center_compact)
from .solver import Solution, batch_ops, solve, solve_chain_exact, solve_grid_redrec

__version__ = "0.1.0"

__all__ = [
    "Axis", "IllegalMoveError", "InvalidInstanceError", "Kind", "LLRSError", "Move",
    "ProblemInstance", "Solution", "TrapArray", "batch_ops", "execute_moves", "execute_solution",
    "make_rng", "reached_target", "sample_instance", "solve", "solve_chain_exact",
    "solve_grid_redrec", "target_center_compact",
]
