import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_query
from qiter.algorithms import naive_iteration_program, random_program
from qiter.machine import Dense, Query, QueryProgram
from qiter.metrics import (
    check_lemma1,
    check_lemma2,
    oracle_distance,
    query_mass,
    query_mass_distribution,
)
from qiter.oracle import LengthPreservingFn, iterate, mutate, random_full_cycle, random_function
from qiter.state import HADAMARD, BitWord, RegisterLayout, basis_state, from_amplitudes, random_state

CYCLE = LengthPreservingFn(2, (1, 2, 3, 0))


def _uniform_query_state(n, working=0):
    lay = RegisterLayout(working, n)
    amp = 2 ** (-n / 2)
    return from_amplitudes(lay, {lay.compose(query=a): amp for a in range(1 << n)})


def test_query_mass_examples():
    lay = RegisterLayout(1, 2)
    state = basis_state(lay, lay.compose(1, 2, 3))
    assert query_mass(state, 2) == 1
    assert query_mass(state, 1) == 0
    uniform = _uniform_query_state(2)
    assert all(query_mass(uniform, a) == pytest.approx(0.25, abs=1e-15) for a in range(4))
    with pytest.raises(ValueError):
        query_mass(state, BitWord(3, 0))


def test_query_mass_distribution_examples(rng):
    lay = RegisterLayout(0, 2)
    assert query_mass_distribution(basis_state(lay, "1000")) == {2: 1.0}
    assert query_mass_distribution(_uniform_query_state(2)) == pytest.approx({a: 0.25 for a in range(4)})
    state = random_state(RegisterLayout(2, 2), rng)
    dist = query_mass_distribution(state)
    assert all(abs(dist.get(a, 0) - query_mass(state, a)) <= 1e-12 for a in range(4))


def test_oracle_distance_examples(rng):
    state = random_state(RegisterLayout(1, 2), rng)
    assert oracle_distance(state, CYCLE, CYCLE) == 0
    opposite = LengthPreservingFn(2, tuple(v ^ 3 for v in CYCLE.table))
    assert oracle_distance(state, CYCLE, opposite) == pytest.approx(1, abs=1e-12)
    one_word = mutate(CYCLE, 2, 0)
    assert oracle_distance(_uniform_query_state(2), CYCLE, one_word) == pytest.approx(0.5, abs=1e-15)


def test_lemma1_examples():
    lay = RegisterLayout(0, 2)
    rep = check_lemma1(basis_state(lay, 0), CYCLE, CYCLE)
    assert rep.lhs == 0 and rep.rhs == 0 and rep.holds
    g = mutate(CYCLE, 1, 0)
    rep = check_lemma1(basis_state(lay, lay.compose(query=1)), CYCLE, g)
    assert rep.lhs == pytest.approx(math.sqrt(2), abs=1e-15)
    assert rep.rhs == pytest.approx(2, abs=1e-15)


def test_lemma1_uniform_anchor_against_dense():
    state = _uniform_query_state(2)
    g = mutate(CYCLE, 3, 2)
    want = np.linalg.norm(dense_query(state.to_dense(), 0, 2, CYCLE.table)
                          - dense_query(state.to_dense(), 0, 2, g.table))
    rep = check_lemma1(state, CYCLE, g)
    assert rep.lhs == pytest.approx(want, abs=1e-12)
    assert rep.lhs == pytest.approx(math.sqrt(2) / 2, abs=1e-9)
    assert rep.rhs == pytest.approx(1.0, abs=1e-9)
    assert rep.slack == pytest.approx(1 - math.sqrt(2) / 2)


def test_lemma2_examples(rng):
    f = random_full_cycle(2, 3)
    prog = naive_iteration_program(2, 4)
    rep = check_lemma2(prog, f, 1, f(1))
    assert rep.lhs == 0 and rep.holds
    # program that only ever queries word 0
    lay = RegisterLayout(0, 2)
    only_zero = QueryProgram(lay, (Query(), Query()))
    rep = check_lemma2(only_zero, f, 3, f(3) ^ 1)
    assert rep.lhs == 0 and rep.rhs == 0
    a = f(0)
    to = next(y for y in rng.permutation(4).tolist() if y != f(a))
    rep = check_lemma2(prog, f, a, to)
    assert sum(1 for d in rep.context["sqrt_masses"] if d == 1.0) == 1
    assert rep.rhs == pytest.approx(2.0, abs=1e-12)
    assert rep.lhs == pytest.approx(math.sqrt(2), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_query_masses_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout(int(rng.integers(0, 3)), int(rng.integers(1, 4)))
    state = random_state(lay, rng, support=int(rng.integers(1, 40)))
    assert abs(math.fsum(query_mass_distribution(state).values()) - 1) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_distance_is_a_pseudometric(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout(int(rng.integers(0, 2)), int(rng.integers(1, 4)))
    state = random_state(lay, rng)
    f, g, h = (random_function(lay.n, rng) for _ in range(3))
    assert oracle_distance(state, f, f) == 0
    assert oracle_distance(state, f, g) == oracle_distance(state, g, f)
    assert oracle_distance(state, f, h) <= oracle_distance(state, f, g) + oracle_distance(state, g, h) + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_distance_grows_with_disagreement(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    state = random_state(RegisterLayout(1, n), rng)
    f = random_function(n, rng)
    g, last = f, 0.0
    for a in rng.permutation(1 << n).tolist():
        g = mutate(g, a, f(a) ^ 1)
        d = oracle_distance(state, f, g)
        assert d >= last - 1e-12
        last = d


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lemma1_holds_on_random_instances(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout(int(rng.integers(0, 3)), int(rng.integers(1, 4)))
    state = random_state(lay, rng, support=None if rng.random() < 0.5 else int(rng.integers(1, 10)))
    f = random_function(lay.n, rng)
    g = random_function(lay.n, rng)
    assert check_lemma1(state, f, g).slack >= -1e-8


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lemma2_holds_on_random_programs(seed):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout(int(rng.integers(0, 3)), int(rng.integers(1, 4)))
    prog = random_program(lay, int(rng.integers(1, 5)), rng)
    f = random_function(lay.n, rng)
    rep = check_lemma2(prog, f, int(rng.integers(0, f.size)), int(rng.integers(0, f.size)),
                       int(rng.integers(0, f.size)))
    assert rep.holds


def test_lemma2_tight_for_grover_style_superposition():
    lay = RegisterLayout(0, 2)
    prog = QueryProgram(lay, (Dense((0,), HADAMARD), Dense((1,), HADAMARD), Query()))
    f = random_full_cycle(2, 0)
    rep = check_lemma2(prog, f, 2, f(2) ^ 3)
    # one query on a word of mass 1/4: distance sqrt(2)/2, bound 2 * 1/2
    assert rep.lhs == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    assert rep.rhs == pytest.approx(1.0, abs=1e-12)
    assert iterate(f, 0, 2) == 2
