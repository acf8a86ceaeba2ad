import json

import numpy as np
import pytest

from conftest import dense_run
from qiter.algorithms import grover_program, naive_iteration_program, random_program, undersampling_program
from qiter.machine import (
    Dense,
    Permutation,
    Query,
    QueryProgram,
    SectionSwap,
    apply_round,
    query_count,
    run,
    success_probability,
)
from qiter.oracle import LengthPreservingFn, iterate, random_full_cycle, random_function
from qiter.state import HADAMARD, BitWord, RegisterLayout, state_distance


def test_single_query_program():
    lay = RegisterLayout(1, 2)
    prog = QueryProgram(lay, (Query(),))
    f = random_full_cycle(2, 0)
    trace = run(prog, f, 2)
    assert trace.final.to_bitstrings() == {lay.key_to_bits(lay.compose(0, 2, f(2))): 1}
    assert trace.states[0].to_bitstrings() == {lay.key_to_bits(lay.compose(0, 2, 0)): 1}
    assert trace.t == 1 and len(trace.pre_query) == 1


def test_runs_are_deterministic(rng):
    lay = RegisterLayout(1, 2)
    prog = random_program(lay, 3, rng)
    f = random_function(2, rng)
    a, b = run(prog, f, 1), run(prog, f, 1)
    assert [dict(s.amplitudes) for s in a.states] == [dict(s.amplitudes) for s in b.states]


def test_naive_program_computes_fourth_iterate():
    f = random_full_cycle(2, 6)
    trace = run(naive_iteration_program(2, 4), f, 0)
    assert iterate(f, 4, 0) == 0
    assert success_probability(trace, iterate(f, 4, 0)) == 1.0


def test_success_probability_examples():
    f = random_full_cycle(3, 1)
    trace = run(naive_iteration_program(3, 2), f, 0)
    assert success_probability(trace, iterate(f, 2, 0)) == 1.0
    lay = RegisterLayout(0, 3)
    prog = QueryProgram(lay, tuple(Dense((q,), HADAMARD) for q in lay.query_range) + (Query(),))
    trace = run(prog, f, 0)
    assert all(abs(success_probability(trace, w) - 1 / 8) < 1e-12 for w in range(8))
    with pytest.raises(ValueError):
        success_probability(trace, BitWord(2, 0))


def test_undersampling_program_misses_the_target():
    f = random_full_cycle(4, 2)
    trace = run(undersampling_program(4, 16, 1), f, 0)
    assert success_probability(trace, iterate(f, 16, 0)) == 0.0
    assert success_probability(trace, 0) < 2 / 3


def test_query_count():
    assert query_count(QueryProgram(RegisterLayout(0, 1), (Query(),))) == 1
    assert query_count(naive_iteration_program(3, 7)) == 7
    assert query_count(grover_program(3, 4)) == 4


def test_program_validation():
    lay = RegisterLayout(0, 2)
    with pytest.raises(ValueError):
        QueryProgram(lay, (Dense((5,), HADAMARD),))
    with pytest.raises(ValueError):
        QueryProgram(lay, (Permutation(SectionSwap(6, 0, 2, 2)),))
    with pytest.raises(ValueError):
        QueryProgram(lay, (Query(),), output_section=(2, 9))
    with pytest.raises(ValueError):
        run(QueryProgram(lay, (Query(),)), random_full_cycle(3, 0))


def test_programs_carry_no_oracle_data(rng):
    prog = random_program(RegisterLayout(1, 2), 3, rng)
    for step in prog.steps:
        assert isinstance(step, (Query, Dense, Permutation))
        assert not any(isinstance(v, LengthPreservingFn) for v in vars(step).values())
    f = random_function(2, rng)
    g = LengthPreservingFn(2, tuple(f.table))
    a, b = run(prog, f, 0), run(prog, g, 0)
    assert all(state_distance(x, y) == 0 for x, y in zip(a.states, b.states))


def test_runs_match_dense_reference(rng):
    for _ in range(30):
        lay = RegisterLayout(int(rng.integers(0, 3)), int(rng.integers(1, 3)))
        prog = random_program(lay, int(rng.integers(1, 5)), rng)
        f = random_function(lay.n, rng)
        x = int(rng.integers(0, f.size))
        got = run(prog, f, x).final.to_dense()
        assert np.allclose(got, dense_run(prog, f.table, x), atol=1e-10)


def test_whole_run_is_unitary(rng):
    for _ in range(50):
        lay = RegisterLayout(int(rng.integers(0, 3)), int(rng.integers(1, 4)))
        trace = run(random_program(lay, int(rng.integers(1, 5)), rng), random_function(lay.n, rng))
        assert all(abs(s.norm() - 1) <= 1e-9 for s in trace.states)


def test_trace_suffix_reproduces_next_state(rng):
    lay = RegisterLayout(1, 2)
    prog = random_program(lay, 4, rng)
    f = random_function(2, rng)
    trace = run(prog, f, 3)
    for i in range(trace.t):
        again = apply_round(prog, i, trace.states[i], f)
        assert state_distance(again, trace.states[i + 1]) <= 1e-12


def test_program_json_round_trip(rng):
    prog = random_program(RegisterLayout(2, 2), 3, rng)
    data = json.loads(json.dumps(prog.to_dict()))
    again = QueryProgram.from_dict(data)
    assert again == prog or [type(s) for s in again.steps] == [type(s) for s in prog.steps]
    f = random_function(2, rng)
    assert state_distance(run(prog, f).final, run(again, f).final) <= 1e-12
    names = {s["name"] for s in data["steps"] if s["kind"] == "permutation"}
    assert names <= {"section-swap", "section-xor", "conditional-increment"}
