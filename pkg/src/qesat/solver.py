"""Quantum-evolution local search for SAT.

One search cycle is:

1. gradual phase: random flux of the current solution, kept only on a
   strict fitness gain; every rejected flux divides the step ``delta``
   by ``mu``;
2. quantization phase: round the solution to the grid of step
   ``delta * mu``; while that improves the fitness and ``delta`` is below
   its maximum, adopt it, multiply ``delta`` by ``mu`` and quantize again
   on the coarser grid;
3. admissibility check: round to the nearest corner and test it.

The solver is incomplete. It reports SATISFIABLE with a verified model
or UNKNOWN when the budget runs out, never UNSATISFIABLE.
"""

from __future__ import annotations

import csv
import enum
import io
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .formula import CnfFormula, count_satisfied, eval_boolean
from .relaxation import (
    DEFAULT_STAY_PROBABILITY,
    FluxParams,
    eval_fitness,
    flux,
    quantize,
    to_binary,
)

DEFAULT_SEED = 20090301
TRACE_COLUMNS = ("cycle", "phase", "delta", "eta_before", "eta_after", "jump_distance")


class Status(str, enum.Enum):
    SATISFIABLE = "SATISFIABLE"
    UNKNOWN = "UNKNOWN"


class Phase(str, enum.Enum):
    FLUX_ACCEPT = "FLUX_ACCEPT"
    FLUX_REJECT = "FLUX_REJECT"
    QUANTIZE = "QUANTIZE"
    ADMISSIBILITY_CHECK = "ADMISSIBILITY_CHECK"
    POPULATION_SYNC = "POPULATION_SYNC"


@dataclass(frozen=True)
class TraceRecord:
    """One solver event.

    ``delta`` is the step in effect when the event started; for QUANTIZE
    the grid step was ``delta * mu``. ``jump_distance`` is the L-infinity
    length of an adopted quantization move and 0 otherwise.
    """

    cycle: int
    phase: Phase
    delta: float
    eta_before: float
    eta_after: float
    jump_distance: float = 0.0


@dataclass
class SolverConfig:
    mu: float = 2.0
    delta_init: Optional[float] = None  # None -> delta_max
    delta_min: Optional[float] = None  # None -> mu ** -3
    stay_probability: float = DEFAULT_STAY_PROBABILITY
    max_cycles: int = 100_000
    time_limit: Optional[float] = None  # seconds
    population_size: int = 1
    seed: int = DEFAULT_SEED
    # adopt the first quantized solution even when it is worse
    force_quantize: bool = False
    # what the first quantized candidate of a phase must beat:
    # "current" solution, or the "last_quantized" result of the previous phase
    quantize_reference: str = "current"
    init: str = "binary"
    record_trace: bool = False

    def __post_init__(self):
        if not self.mu > 1:
            raise ValueError("mu must be > 1")
        if self.delta_min is None:
            self.delta_min = float(self.mu) ** -3
        if self.delta_init is None:
            self.delta_init = self.delta_max
        if not 0 < self.delta_min <= self.delta_init <= self.delta_max:
            raise ValueError(
                f"need 0 < delta_min <= delta_init <= delta_max = {self.delta_max}, got "
                f"delta_min={self.delta_min}, delta_init={self.delta_init}"
            )
        if not 0.0 <= self.stay_probability <= 1.0:
            raise ValueError("stay_probability must lie in [0, 1]")
        if self.max_cycles < 0:
            raise ValueError("max_cycles must be >= 0")
        if self.time_limit is not None and self.time_limit < 0:
            raise ValueError("time_limit must be >= 0")
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.init not in ("binary", "uniform"):
            raise ValueError("init must be 'binary' or 'uniform'")
        if self.quantize_reference not in ("current", "last_quantized"):
            raise ValueError("quantize_reference must be 'current' or 'last_quantized'")

    @property
    def delta_max(self) -> float:
        # delta_max * mu == 1: the coarsest quantization is the binary grid
        return 1.0 / self.mu


@dataclass
class SolverState:
    current: np.ndarray
    delta: float
    eta: float
    cycle: int = 0
    best_binary: Optional[np.ndarray] = None
    best_satisfied: int = -1
    last_quantized_eta: float = 0.0

    def copy(self) -> "SolverState":
        return SolverState(
            current=self.current.copy(),
            delta=self.delta,
            eta=self.eta,
            cycle=self.cycle,
            best_binary=None if self.best_binary is None else self.best_binary.copy(),
            best_satisfied=self.best_satisfied,
            last_quantized_eta=self.last_quantized_eta,
        )


@dataclass
class SolveOutcome:
    status: Status
    assignment: Optional[np.ndarray]
    cycles_used: int
    wall_time: float
    best_satisfied: int
    final_eta: float
    trace: Optional[list[TraceRecord]] = field(default=None, repr=False)

    @property
    def satisfiable(self) -> bool:
        return self.status is Status.SATISFIABLE


Emit = Callable[[TraceRecord, SolverState], None]


def member_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for population member ``index``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def init_state(formula: CnfFormula, config: SolverConfig, rng: np.random.Generator) -> SolverState:
    n = formula.num_variables
    if config.init == "binary":
        current = rng.integers(0, 2, size=n).astype(np.float64)
    else:
        current = rng.random(n)
    eta = eval_fitness(formula, current)
    return SolverState(current=current, delta=config.delta_init, eta=eta, last_quantized_eta=eta)


def gradual_step(
    state: SolverState,
    formula: CnfFormula,
    config: SolverConfig,
    rng: np.random.Generator,
    emit: Optional[Emit] = None,
) -> bool:
    """One flux attempt. Returns whether the candidate was accepted."""
    delta = state.delta
    candidate = flux(state.current, FluxParams(delta, config.stay_probability), rng)
    eta_new = eval_fitness(formula, candidate)
    eta_old = state.eta
    if eta_new > eta_old:
        state.current = candidate
        state.eta = eta_new
        if emit:
            emit(TraceRecord(state.cycle, Phase.FLUX_ACCEPT, delta, eta_old, eta_new), state)
        return True
    state.delta = max(delta / config.mu, config.delta_min)
    if emit:
        emit(TraceRecord(state.cycle, Phase.FLUX_REJECT, delta, eta_old, eta_old), state)
    return False


def gradual_phase(
    state: SolverState,
    formula: CnfFormula,
    config: SolverConfig,
    rng: np.random.Generator,
    emit: Optional[Emit] = None,
) -> bool:
    """Flux until one acceptance.

    A rejection while ``delta`` already sits at ``delta_min`` also ends
    the phase, since no finer step is left to try.
    """
    if state.eta >= 1.0:
        return False
    while True:
        at_floor = state.delta <= config.delta_min
        if gradual_step(state, formula, config, rng, emit):
            return True
        if at_floor:
            return False


def quantization_phase(
    state: SolverState,
    formula: CnfFormula,
    config: SolverConfig,
    emit: Optional[Emit] = None,
) -> SolverState:
    reference = state.eta
    if config.quantize_reference == "last_quantized":
        reference = state.last_quantized_eta
    first = True
    while True:
        delta = state.delta
        grid = min(delta * config.mu, 1.0)
        q = quantize(state.current, grid)
        eta_q = eval_fitness(formula, q)
        state.last_quantized_eta = eta_q
        improved = eta_q > reference
        eta_old = state.eta
        if improved or (first and config.force_quantize):
            jump = float(np.max(np.abs(q - state.current), initial=0.0))
            state.current = q
            state.eta = eta_q
            record = TraceRecord(state.cycle, Phase.QUANTIZE, delta, eta_old, eta_q, jump)
        else:
            record = TraceRecord(state.cycle, Phase.QUANTIZE, delta, eta_old, eta_old)
        if emit:
            emit(record, state)
        first = False
        if improved and delta < config.delta_max:
            state.delta = min(delta * config.mu, config.delta_max)
            reference = eta_q
            continue
        return state


def admissibility_check(
    state: SolverState,
    formula: CnfFormula,
    emit: Optional[Emit] = None,
) -> Optional[np.ndarray]:
    """Round to a corner; return it if it satisfies ``formula``."""
    binary = to_binary(state.current)
    satisfied = count_satisfied(formula, binary)
    if satisfied > state.best_satisfied:
        state.best_satisfied = satisfied
        state.best_binary = binary
    if emit:
        emit(
            TraceRecord(state.cycle, Phase.ADMISSIBILITY_CHECK, state.delta, state.eta, state.eta),
            state,
        )
    if satisfied == formula.num_clauses:
        return binary
    return None


def solve(
    formula: CnfFormula,
    config: Optional[SolverConfig] = None,
    on_event: Optional[Emit] = None,
) -> SolveOutcome:
    """Run the search with ``config.population_size`` members (default 1)."""
    config = config or SolverConfig()
    return _search(formula, config, config.population_size, on_event)


def solve_population(
    formula: CnfFormula,
    config: SolverConfig,
    on_event: Optional[Emit] = None,
) -> SolveOutcome:
    """Population search; after every cycle the fittest member is copied to all.

    A population of one degenerates to :func:`solve`.
    """
    return _search(formula, config, config.population_size, on_event)


def _search(formula: CnfFormula, config: SolverConfig, size: int, on_event: Optional[Emit]) -> SolveOutcome:
    start = time.perf_counter()
    deadline = None if config.time_limit is None else start + config.time_limit
    trace: Optional[list[TraceRecord]] = [] if config.record_trace else None

    emit: Optional[Emit] = None
    if trace is not None or on_event is not None:
        def emit(record: TraceRecord, state: SolverState) -> None:
            if trace is not None:
                trace.append(record)
            if on_event is not None:
                on_event(record, state)

    rngs = [member_rng(config.seed, i) for i in range(size)]
    members = [init_state(formula, config, rng) for rng in rngs]
    if emit is None:
        return _search_compiled(formula, config, members, rngs, start, deadline)
    best_satisfied = -1
    checks = 0

    def expired() -> bool:
        return deadline is not None and time.perf_counter() >= deadline

    def finish(status, assignment):
        if status is Status.SATISFIABLE and not eval_boolean(formula, assignment):
            raise AssertionError("solver produced an assignment that does not verify")
        best = max(members, key=lambda s: s.eta)
        return SolveOutcome(
            status=status,
            assignment=assignment,
            cycles_used=checks,
            wall_time=time.perf_counter() - start,
            best_satisfied=max(best_satisfied, 0),
            final_eta=best.eta,
            trace=trace,
        )

    while checks < config.max_cycles and not expired():
        cycle = checks + 1
        found = None
        timed_out = False
        for state, rng in zip(members, rngs):
            state.cycle = cycle
            gradual_phase(state, formula, config, rng, emit)
            if expired():
                timed_out = True
                break
            quantization_phase(state, formula, config, emit)
            if expired():
                timed_out = True
                break
            binary = admissibility_check(state, formula, emit)
            best_satisfied = max(best_satisfied, state.best_satisfied)
            if binary is not None and found is None:
                found = binary
        if timed_out:
            break
        checks = cycle
        if found is not None:
            return finish(Status.SATISFIABLE, found)
        if size > 1:
            _sync(members, cycle, emit)
    return finish(Status.UNKNOWN, None)


# cycles per compiled call between deadline checks
_CHUNK = 256


def _search_compiled(formula, config, members, rngs, start, deadline) -> SolveOutcome:
    """Same search as the traced loop, with each run of cycles compiled."""
    xs = np.array([s.current for s in members]).reshape(len(members), formula.num_variables)
    deltas = np.array([s.delta for s in members], dtype=np.float64)
    etas = np.array([s.eta for s in members], dtype=np.float64)
    last_q = np.array([s.last_quantized_eta for s in members], dtype=np.float64)
    best_sat = np.full(len(members), -1, dtype=np.int64)
    index, offset, sign = formula.false_probability_terms
    _, negated = formula.padded
    checks = 0
    winner = -1
    while checks < config.max_cycles and winner < 0:
        if deadline is not None and time.perf_counter() >= deadline:
            break
        chunk = config.max_cycles - checks
        if deadline is not None:
            chunk = min(chunk, _CHUNK)
        done, winner = _kernels.run_cycles(
            xs, deltas, etas, last_q, best_sat, tuple(rngs),
            index, offset, sign, negated,
            float(config.mu), float(config.delta_min), float(config.delta_max),
            float(config.stay_probability), bool(config.force_quantize),
            config.quantize_reference == "last_quantized", chunk,
        )
        checks += done
    assignment = None
    status = Status.UNKNOWN
    if winner >= 0:
        assignment = to_binary(xs[winner])
        if not eval_boolean(formula, assignment):
            raise AssertionError("solver produced an assignment that does not verify")
        status = Status.SATISFIABLE
    return SolveOutcome(
        status=status,
        assignment=assignment,
        cycles_used=checks,
        wall_time=time.perf_counter() - start,
        best_satisfied=max(int(best_sat.max()), 0),
        final_eta=float(etas.max()),
        trace=None,
    )


def _sync(members: list[SolverState], cycle: int, emit: Optional[Emit]) -> None:
    etas = [s.eta for s in members]
    leader = members[int(np.argmax(etas))]  # first index wins ties
    for state in members:
        if state is not leader:
            state.current = leader.current.copy()
            state.delta = leader.delta
            state.eta = leader.eta
            state.last_quantized_eta = leader.last_quantized_eta
    if emit:
        emit(TraceRecord(cycle, Phase.POPULATION_SYNC, leader.delta, min(etas), leader.eta), leader)


def format_trace_csv(records) -> str:
    buf = io.StringIO()
    write_trace_csv(records, buf)
    return buf.getvalue()


def write_trace_csv(records, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in records:
        writer.writerow(
            [r.cycle, r.phase.value, repr(r.delta), repr(r.eta_before), repr(r.eta_after), repr(r.jump_distance)]
        )


def read_trace_csv(stream) -> list[TraceRecord]:
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header {reader.fieldnames}")
    return [
        TraceRecord(
            cycle=int(row["cycle"]),
            phase=Phase(row["phase"]),
            delta=float(row["delta"]),
            eta_before=float(row["eta_before"]),
            eta_after=float(row["eta_after"]),
            jump_distance=float(row["jump_distance"]),
        )
        for row in reader
    ]
