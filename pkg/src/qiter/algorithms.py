"""Reference query programs: honest iteration, truncated iteration, Grover search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from scipy.stats import unitary_group

from qiter.machine import (
    ConditionalIncrement,
    Dense,
    Permutation,
    Query,
    QueryProgram,
    SectionSwap,
    SectionXor,
    query_count,
)
from qiter.oracle import LengthPreservingFn
from qiter.state import HADAMARD, PAULI_X, DenseUnitary, RegisterLayout, word_value


def _iteration_steps(layout: RegisterLayout, queries: int) -> list:
    """Compute f^{queries}(input) into the query section.

    Working qubits form ``queries - 1`` history slots of n qubits. Before the
    next query the previous query word is parked in a free slot and the answer
    moves into the query section. A final rotation leaves slot k holding the
    k-th iterate, the answer section holding the input and the query section
    holding the result.
    """
    n, m = layout.n, layout.total
    q, a = layout.query_range.start, layout.answer_range.start

    def swap(x, y):
        return Permutation(SectionSwap(m, x, y, n))

    def slot(k):
        return (k - 1) * n

    steps = []
    for i in range(1, queries + 1):
        steps.append(Query())
        if i < queries:
            steps += [swap(q, slot(i)), swap(q, a)]
    steps.append(swap(q, a))
    for k in range(queries - 1, 0, -1):
        steps.append(swap(a, slot(k)))
    return steps


def naive_iteration_program(n: int, T: int) -> QueryProgram:
    if T < 1:
        raise ValueError(f"iteration count must be >= 1, got {T}")
    layout = RegisterLayout(n * (T - 1), n)
    return QueryProgram(layout, tuple(_iteration_steps(layout, T)))


def undersampling_program(n: int, T: int, t: int) -> QueryProgram:
    """Iterate only t < T times and report f^{t}(input) as the answer for f^{T}."""
    if not 1 <= t < T:
        raise ValueError(f"undersampling needs 1 <= t < T, got t={t}, T={T}")
    layout = RegisterLayout(n * (t - 1), n)
    return QueryProgram(layout, tuple(_iteration_steps(layout, t)))


def diffusion(n: int) -> DenseUnitary:
    """Inversion about the mean, 2|s><s| - I, on n qubits."""
    dim = 1 << n
    return DenseUnitary(np.full((dim, dim), 2.0 / dim) - np.eye(dim))


def grover_program(n: int, k: int) -> QueryProgram:
    """Grover search with k iterations on an XOR oracle (see ``marked_oracle``).

    The last answer qubit is prepared in |-> so each query kicks a phase of
    -1 onto the marked word.
    """
    if n < 2:
        raise ValueError(f"Grover search needs n >= 2, got {n}")
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    layout = RegisterLayout(0, n)
    query = list(layout.query_range)
    minus = DenseUnitary(HADAMARD.matrix @ PAULI_X.matrix)
    steps = [Dense((q,), HADAMARD) for q in query]
    steps.append(Dense((layout.answer_range[-1],), minus))
    reflect = diffusion(n)
    for _ in range(k):
        steps += [Query(), Dense(tuple(query), reflect)]
    return QueryProgram(layout, tuple(steps))


def marked_oracle(n: int, marked) -> LengthPreservingFn:
    """f(x) = 0^{n-1}1 on the marked word, 0^n elsewhere."""
    target = word_value(marked, n)
    return LengthPreservingFn(n, tuple(1 if x == target else 0 for x in range(1 << n)))


def grover_closed_form(n: int, k: int) -> float:
    theta = math.asin(2 ** (-n / 2))
    return math.sin((2 * k + 1) * theta) ** 2


def _random_working_step(layout: RegisterLayout, rng: np.random.Generator, max_arity: int):
    m = layout.total
    kind = rng.integers(0, 4)
    if kind < 2 or m < 2:
        g = int(rng.integers(1, min(max_arity, m) + 1))
        targets = tuple(int(q) for q in rng.choice(m, size=g, replace=False))
        return Dense(targets, DenseUnitary(unitary_group.rvs(1 << g, random_state=rng)))
    if kind == 2:
        length = int(rng.integers(1, m // 2 + 1))
        a = int(rng.integers(0, m - 2 * length + 1))
        b = int(rng.integers(a + length, m - length + 1))
        if rng.integers(0, 2):
            a, b = b, a
        cls = SectionSwap if rng.integers(0, 2) else SectionXor
        return Permutation(cls(m, a, b, length))
    control = int(rng.integers(0, m))
    others = [q for q in range(m) if q != control]
    start = others[int(rng.integers(0, len(others)))]
    length = 1
    while start + length < m and start + length != control and rng.integers(0, 2):
        length += 1
    return Permutation(ConditionalIncrement(m, control, start, length))


def random_program(layout: RegisterLayout, t: int, rng: np.random.Generator,
                   max_steps: int = 3, max_arity: int = 3) -> QueryProgram:
    """Random oracle-independent program with t queries, mixing dense and
    permutation steps before and between the queries."""
    steps = []
    for i in range(t + 1):
        if i:
            steps.append(Query())
        for _ in range(int(rng.integers(0, max_steps + 1))):
            steps.append(_random_working_step(layout, rng, max_arity))
    return QueryProgram(layout, tuple(steps))


@dataclass(frozen=True)
class ProgramSpec:
    family: str
    params: dict = field(hash=False)
    program: QueryProgram = field(repr=False)
    declared_queries: int

    def __post_init__(self):
        if query_count(self.program) != self.declared_queries:
            raise ValueError(f"{self.family} program makes {query_count(self.program)} "
                             f"queries, declared {self.declared_queries}")


def build_program(family: str, n: int, T: int | None = None, t: int | None = None,
                  k: int | None = None) -> ProgramSpec:
    """Resolve a program family by name, as used by the command line."""
    if family == "naive":
        return ProgramSpec(family, {"n": n, "T": T}, naive_iteration_program(n, T), T)
    if family == "undersample":
        return ProgramSpec(family, {"n": n, "T": T, "t": t}, undersampling_program(n, T, t), t)
    if family == "grover":
        k = k if k is not None else (t if t is not None else 1)
        return ProgramSpec(family, {"n": n, "k": k}, grover_program(n, k), k)
    raise ValueError(f"unknown program family {family!r}; choose from {sorted(FAMILIES)}")


FAMILIES = ("naive", "undersample", "grover")
