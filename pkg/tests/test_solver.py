import io

import numpy as np
import pytest

from qesat.formula import CnfFormula, count_satisfied, eval_boolean
from qesat.oracle import InstanceSpec, generate_random_ksat
from qesat.relaxation import QuantizationGrid, eval_fitness
from qesat.solver import (
    TRACE_COLUMNS,
    Phase,
    SolverConfig,
    SolverState,
    Status,
    TraceRecord,
    admissibility_check,
    format_trace_csv,
    gradual_phase,
    gradual_step,
    init_state,
    member_rng,
    quantization_phase,
    read_trace_csv,
    solve,
    solve_population,
)

from conftest import ScriptedRng
from oracles import clause_probability_by_enumeration


def make_state(formula, current, delta):
    current = np.array(current, dtype=float)
    return SolverState(current=current, delta=delta, eta=eval_fitness(formula, current))


def collect():
    records = []
    return records, lambda r, s: records.append(r)


# -- config ------------------------------------------------------------------


def test_config_defaults():
    c = SolverConfig()
    assert c.mu == 2.0
    assert c.delta_max == 0.5
    assert c.delta_init == 0.5
    assert c.delta_max * c.mu == 1.0
    assert c.delta_min <= c.delta_init


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(mu=1.0),
        dict(delta_init=0.75),
        dict(delta_min=0.6),
        dict(delta_min=0.0),
        dict(population_size=0),
        dict(seed=-1),
        dict(seed=2**64),
        dict(max_cycles=-1),
        dict(init="gaussian"),
        dict(quantize_reference="best"),
        dict(stay_probability=1.2),
    ],
)
def test_config_rejects(kwargs):
    with pytest.raises(ValueError):
        SolverConfig(**kwargs)


def test_config_other_mu():
    c = SolverConfig(mu=3.0)
    assert c.delta_init == pytest.approx(1 / 3)
    assert c.delta_min == pytest.approx(3.0**-3)


# -- init --------------------------------------------------------------------


def test_init_state_deterministic_and_binary():
    f = CnfFormula.from_ints(3, [[1, 2, 3]])
    config = SolverConfig(seed=5)
    a = init_state(f, config, member_rng(5, 0))
    b = init_state(f, config, member_rng(5, 0))
    assert a.current.tobytes() == b.current.tobytes()
    assert set(a.current.tolist()) <= {0.0, 1.0}
    assert a.delta == config.delta_init
    assert a.eta == eval_fitness(f, a.current)


def test_init_state_empty_formula():
    state = init_state(CnfFormula(2, ()), SolverConfig(), member_rng(1, 0))
    assert state.eta == 1.0


def test_init_uniform():
    f = CnfFormula.from_ints(50, [[1]])
    state = init_state(f, SolverConfig(init="uniform"), member_rng(1, 0))
    assert np.all((state.current >= 0) & (state.current <= 1))
    assert len(set(state.current.tolist())) > 2


def test_member_streams_differ():
    assert member_rng(1, 0).random() != member_rng(1, 1).random()
    assert member_rng(1, 3).random() == member_rng(1, 3).random()


# -- gradual step ------------------------------------------------------------


def test_gradual_step_accepts_improvement():
    f = CnfFormula.from_ints(1, [[1]])
    state = make_state(f, [0.5], 0.25)
    records, emit = collect()
    accepted = gradual_step(state, f, SolverConfig(), ScriptedRng([0.5]), emit)
    assert accepted
    assert state.current.tolist() == [0.75]
    assert state.eta == 0.75
    assert state.delta == 0.25
    assert records == [TraceRecord(0, Phase.FLUX_ACCEPT, 0.25, 0.5, 0.75)]


def test_gradual_step_rejects_tie():
    f = CnfFormula.from_ints(2, [[2]])
    state = make_state(f, [0.5, 0.5], 0.25)
    # x1 moves up, x2 stays: fitness unchanged
    accepted = gradual_step(state, f, SolverConfig(), ScriptedRng([0.5, 0.1]))
    assert not accepted
    assert state.current.tolist() == [0.5, 0.5]
    assert state.delta == 0.125


def test_gradual_step_rejects_worse_and_floors_delta():
    f = CnfFormula.from_ints(1, [[1]])
    config = SolverConfig(delta_min=0.125)
    state = make_state(f, [0.5], 0.125)
    records, emit = collect()
    assert not gradual_step(state, f, config, ScriptedRng([0.9]), emit)
    assert state.delta == 0.125
    assert records[0].phase is Phase.FLUX_REJECT
    assert records[0].eta_after == records[0].eta_before == 0.5


def test_gradual_phase_stops_after_rejection_at_floor():
    f = CnfFormula.from_ints(1, [[1], [-1]])
    config = SolverConfig(delta_min=2.0**-4)
    state = make_state(f, [0.5], 0.5)  # global maximum of x(1-x)
    records, emit = collect()
    assert not gradual_phase(state, f, config, member_rng(0, 0), emit)
    # 0.5 -> 0.25 -> 0.125 -> 0.0625; the attempt made at the floor ends it
    assert [r.delta for r in records] == [0.5, 0.25, 0.125, 0.0625]
    assert all(r.phase is Phase.FLUX_REJECT for r in records)
    assert state.delta == 0.0625


def test_gradual_phase_skips_when_satisfied():
    f = CnfFormula.from_ints(1, [[1]])
    state = make_state(f, [1.0], 0.5)
    records, emit = collect()
    assert not gradual_phase(state, f, SolverConfig(), member_rng(0, 0), emit)
    assert records == []


# -- quantization ------------------------------------------------------------


def test_quantization_on_grid_exits_immediately():
    f = CnfFormula.from_ints(2, [[1, 2]])
    state = make_state(f, [0.5, 0.0], 0.25)
    records, emit = collect()
    quantization_phase(state, f, SolverConfig(), emit)
    assert state.current.tolist() == [0.5, 0.0]
    assert state.delta == 0.25
    assert len(records) == 1
    assert records[0].jump_distance == 0.0


def test_quantization_at_cap_adopts_once():
    f = CnfFormula.from_ints(1, [[1]])
    state = make_state(f, [0.75], 0.5)
    records, emit = collect()
    quantization_phase(state, f, SolverConfig(), emit)
    assert state.current.tolist() == [1.0]
    assert state.eta == 1.0
    assert state.delta == 0.5
    assert records == [TraceRecord(0, Phase.QUANTIZE, 0.5, 0.75, 1.0, 0.25)]


def test_quantization_worse_candidate_is_rejected():
    # {-x1} at 0.4: fitness 0.6; rounding to the 0.5-grid gives 0.5 with fitness 0.5
    f = CnfFormula.from_ints(1, [[-1]])
    assert clause_probability_by_enumeration([-1], [0.4]) == pytest.approx(0.6, abs=1e-12)
    assert clause_probability_by_enumeration([-1], [0.5]) == pytest.approx(0.5, abs=1e-12)
    state = make_state(f, [0.4], 0.25)
    assert state.eta == pytest.approx(0.6, abs=1e-12)
    quantization_phase(state, f, SolverConfig())
    assert state.current.tolist() == [0.4]
    assert state.delta == 0.25


def test_quantization_escalates_to_binary_grid():
    f = CnfFormula.from_ints(1, [[1]])
    state = make_state(f, [0.625], 0.125)
    records, emit = collect()
    quantization_phase(state, f, SolverConfig(), emit)
    assert state.current.tolist() == [1.0]
    assert state.delta == 0.5
    assert [(r.delta, r.eta_after, r.jump_distance) for r in records] == [
        (0.125, 0.75, 0.125),
        (0.25, 1.0, 0.25),
        (0.5, 1.0, 0.0),
    ]


def test_quantization_iteration_bound():
    f = CnfFormula.from_ints(1, [[1]])
    config = SolverConfig(delta_min=2.0**-20)
    # every coarser rounding goes up, so the loop climbs all the way to delta_max
    state = make_state(f, [0.5 + 3 * 2.0**-21], 2.0**-20)
    records, emit = collect()
    quantization_phase(state, f, config, emit)
    assert len(records) <= 20 + 1
    assert state.delta == config.delta_max
    assert state.current.tolist() == [1.0]


def test_force_quantize_adopts_worse():
    f = CnfFormula.from_ints(1, [[-1]])
    state = make_state(f, [0.4], 0.25)
    quantization_phase(state, f, SolverConfig(force_quantize=True))
    assert state.current.tolist() == [0.5]
    assert state.eta == 0.5


def test_last_quantized_reference():
    f = CnfFormula.from_ints(1, [[-1]])
    state = make_state(f, [0.4], 0.25)
    state.last_quantized_eta = 0.25
    quantization_phase(state, f, SolverConfig(quantize_reference="last_quantized"))
    # 0.5 beats the stored 0.25 although it is worse than the current 0.6
    assert state.current.tolist() == [0.5]
    # the follow-up rounding to the binary grid (fitness 0) is remembered
    assert state.delta == 0.5
    assert state.last_quantized_eta == 0.0


# -- admissibility -----------------------------------------------------------


def test_admissibility_returns_corner():
    f = CnfFormula.from_ints(2, [[1, 2], [-1, 2]])
    state = make_state(f, [0.0, 1.0], 0.5)
    assert admissibility_check(state, f).tolist() == [False, True]
    assert state.best_satisfied == 2


def test_admissibility_rejects_and_tracks_best():
    f = CnfFormula.from_ints(1, [[1], [-1]])
    state = make_state(f, [0.5], 0.5)
    assert admissibility_check(state, f) is None
    assert state.best_satisfied == 1
    state.best_satisfied = 5
    admissibility_check(state, f)
    assert state.best_satisfied == 5


# -- solve -------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_solve_single_unit_clause(seed):
    out = solve(CnfFormula.from_ints(1, [[1]]), SolverConfig(seed=seed))
    assert out.status is Status.SATISFIABLE
    assert out.assignment.tolist() == [True]
    # up to three flux attempts per cycle, each moving up with probability 1/3
    assert out.cycles_used <= 10


def test_solve_unsat_is_unknown():
    out = solve(CnfFormula.from_ints(1, [[1], [-1]]), SolverConfig(max_cycles=1000))
    assert out.status is Status.UNKNOWN
    assert out.assignment is None
    assert out.cycles_used == 1000
    assert out.best_satisfied == 1


def test_solve_zero_budget():
    out = solve(CnfFormula.from_ints(1, [[1]]), SolverConfig(max_cycles=0))
    assert out.status is Status.UNKNOWN
    assert out.cycles_used == 0


def test_solve_time_limit():
    f = CnfFormula.from_ints(1, [[1], [-1]])
    out = solve(f, SolverConfig(max_cycles=10**9, time_limit=0.05))
    assert out.status is Status.UNKNOWN
    assert out.wall_time < 5


def test_solve_empty_formula():
    out = solve(CnfFormula(3, ()), SolverConfig())
    assert out.status is Status.SATISFIABLE
    assert out.cycles_used == 1


def test_solve_random_instances_verify():
    for i in range(10):
        f = generate_random_ksat(InstanceSpec(10, 30, 3, seed=i))
        out = solve(f, SolverConfig(seed=i, max_cycles=2000))
        if out.satisfiable:
            assert eval_boolean(f, out.assignment)
            assert count_satisfied(f, out.assignment) == f.num_clauses


def test_solve_deterministic_trace():
    f = generate_random_ksat(InstanceSpec(12, 40, 3, seed=3))
    config = SolverConfig(seed=9, max_cycles=300, record_trace=True)
    a, b = solve(f, config), solve(f, config)
    assert a.status == b.status and a.cycles_used == b.cycles_used
    assert format_trace_csv(a.trace) == format_trace_csv(b.trace)


def test_solve_invariants_on_trace():
    f = generate_random_ksat(InstanceSpec(15, 50, 3, seed=4))
    config = SolverConfig(seed=2, max_cycles=500, record_trace=True)
    grid_ok = []

    def check(record, state):
        if record.phase is Phase.QUANTIZE and record.jump_distance > 0:
            grid_ok.append(QuantizationGrid(record.delta * config.mu).contains(state.current))

    out = solve(f, config, on_event=check)
    assert all(grid_ok)
    for r in out.trace:
        assert config.delta_min <= r.delta <= config.delta_max
        if r.phase in (Phase.FLUX_ACCEPT, Phase.QUANTIZE):
            assert r.eta_after >= r.eta_before


# -- population --------------------------------------------------------------


def test_population_of_one_matches_solve():
    f = generate_random_ksat(InstanceSpec(15, 55, 3, seed=8))
    config = SolverConfig(seed=4, max_cycles=400, record_trace=True)
    a, b = solve(f, config), solve_population(f, config)
    assert (a.status, a.cycles_used) == (b.status, b.cycles_used)
    assert format_trace_csv(a.trace) == format_trace_csv(b.trace)


def test_population_members_identical_after_sync(monkeypatch):
    from qesat import solver as solver_mod

    captured = []
    original = solver_mod._sync

    def spy(members, cycle, emit):
        original(members, cycle, emit)
        captured.append([(m.current.tobytes(), m.delta, m.eta) for m in members])

    monkeypatch.setattr(solver_mod, "_sync", spy)
    f = generate_random_ksat(InstanceSpec(12, 50, 3, seed=2))
    config = SolverConfig(seed=3, max_cycles=50, population_size=5)
    solve_population(f, config, on_event=lambda record, state: None)
    assert captured
    for members in captured:
        assert all(m == members[0] for m in members)


def test_population_deterministic():
    f = generate_random_ksat(InstanceSpec(15, 60, 3, seed=6))
    config = SolverConfig(seed=7, max_cycles=300, population_size=4, record_trace=True)
    a, b = solve_population(f, config), solve_population(f, config)
    assert a.status == b.status and a.cycles_used == b.cycles_used
    if a.satisfiable:
        assert a.assignment.tolist() == b.assignment.tolist()
    assert format_trace_csv(a.trace) == format_trace_csv(b.trace)


def test_population_sync_record():
    f = CnfFormula.from_ints(1, [[1], [-1]])
    out = solve_population(f, SolverConfig(seed=1, max_cycles=3, population_size=3, record_trace=True))
    syncs = [r for r in out.trace if r.phase is Phase.POPULATION_SYNC]
    assert [r.cycle for r in syncs] == [1, 2, 3]
    assert all(r.eta_before <= r.eta_after for r in syncs)


# -- compiled path -----------------------------------------------------------


def ignore(record, state):
    pass


@pytest.mark.parametrize(
    "overrides",
    [
        dict(),
        dict(population_size=4),
        dict(delta_min=2.0**-12),
        dict(stay_probability=0.6, init="uniform"),
        dict(mu=3.0),
        dict(force_quantize=True, max_cycles=200),
        dict(quantize_reference="last_quantized", population_size=3),
    ],
)
def test_compiled_path_matches_traced(overrides):
    # an event callback forces the step-by-step path
    for seed in range(6):
        f = generate_random_ksat(InstanceSpec(14, 60, 3, seed=100 + seed))
        config = SolverConfig(**{"seed": seed, "max_cycles": 1500, **overrides})
        fast, slow = solve(f, config), solve(f, config, on_event=ignore)
        assert (fast.status, fast.cycles_used) == (slow.status, slow.cycles_used)
        assert fast.final_eta == slow.final_eta
        assert fast.best_satisfied == slow.best_satisfied
        if fast.satisfiable:
            assert fast.assignment.tolist() == slow.assignment.tolist()


def test_compiled_path_time_limit():
    f = CnfFormula.from_ints(1, [[1], [-1]])
    out = solve(f, SolverConfig(max_cycles=10**9, time_limit=0.2))
    assert out.status is Status.UNKNOWN
    assert 0 < out.cycles_used < 10**9
    assert out.wall_time < 2.0


# -- trace format ------------------------------------------------------------


def test_trace_csv_round_trip():
    records = [
        TraceRecord(1, Phase.FLUX_ACCEPT, 0.5, 0.0, 0.125),
        TraceRecord(1, Phase.QUANTIZE, 0.25, 0.125, 0.3, 0.25),
        TraceRecord(1, Phase.ADMISSIBILITY_CHECK, 0.5, 0.3, 0.3),
    ]
    text = format_trace_csv(records)
    assert text.splitlines()[0] == ",".join(TRACE_COLUMNS)
    assert text.splitlines()[2] == "1,QUANTIZE,0.25,0.125,0.3,0.25"
    assert read_trace_csv(io.StringIO(text)) == records


def test_trace_csv_bad_header():
    with pytest.raises(ValueError):
        read_trace_csv(io.StringIO("a,b\n1,2\n"))
