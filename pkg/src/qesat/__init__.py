"""Quantum-evolution SAT solver: continuous relaxation, flux and quantization."""

from .formula import (
    Clause,
    CnfFormula,
    DimacsError,
    DimacsWarning,
    Literal,
    count_satisfied,
    eval_boolean,
    parse_dimacs,
    read_dimacs,
    write_dimacs,
)
from .oracle import InstanceSpec, brute_force_solve, generate_random_ksat, planted_assignment
from .relaxation import FluxParams, QuantizationGrid, eval_fitness, flux, quantize, to_binary
from .solver import (
    Phase,
    SolveOutcome,
    SolverConfig,
    SolverState,
    Status,
    TraceRecord,
    solve,
    solve_population,
)

__version__ = "0.1.0"
