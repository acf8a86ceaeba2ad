"""Oracle-independent query programs and their execution.

A program is a flat list of steps. Grouped around its queries it has the
normal form

    prefix, Qu_f, U_0, Qu_f, U_1, ..., Qu_f, U_{t-1}

where each ``U_i`` is the (possibly empty) run of non-query steps after the
i-th query. ``chi_0`` is the state after the prefix and
``chi_{i+1} = U_i(Qu_f(chi_i))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from qiter.oracle import LengthPreservingFn, apply_query
from qiter.state import (
    BitWord,
    DenseUnitary,
    QuantumState,
    RegisterLayout,
    apply_basis_permutation,
    apply_working,
    basis_state,
    measure_marginal,
    section_value,
    word_value,
)


# Basis permutation catalog. Sections are qubit ranges [start, start + length)
# of a register of ``width`` qubits.

def _put_section(key: int, width: int, start: int, length: int, value: int) -> int:
    shift = width - start - length
    mask = ((1 << length) - 1) << shift
    return (key & ~mask) | (value << shift)


def _check_section(width: int, start: int, length: int):
    if length < 1 or start < 0 or start + length > width:
        raise ValueError(f"section [{start}, {start + length}) outside a {width}-qubit register")


def _check_disjoint(a: int, b: int, length: int):
    if a < b + length and b < a + length:
        raise ValueError(f"sections at {a} and {b} of length {length} overlap")


@dataclass(frozen=True)
class SectionSwap:
    """Exchange the contents of two equal-length qubit sections."""

    width: int
    a: int
    b: int
    length: int
    name = "section-swap"
    bijective_by_construction = True

    def __post_init__(self):
        _check_section(self.width, self.a, self.length)
        _check_section(self.width, self.b, self.length)
        _check_disjoint(self.a, self.b, self.length)

    def __call__(self, key: int) -> int:
        va = section_value(key, self.width, self.a, self.length)
        vb = section_value(key, self.width, self.b, self.length)
        key = _put_section(key, self.width, self.a, self.length, vb)
        return _put_section(key, self.width, self.b, self.length, va)

    def inverse(self, key: int) -> int:
        return self(key)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b, "length": self.length}


@dataclass(frozen=True)
class SectionXor:
    """XOR the source section into the destination section."""

    width: int
    src: int
    dst: int
    length: int
    name = "section-xor"
    bijective_by_construction = True

    def __post_init__(self):
        _check_section(self.width, self.src, self.length)
        _check_section(self.width, self.dst, self.length)
        _check_disjoint(self.src, self.dst, self.length)

    def __call__(self, key: int) -> int:
        v = section_value(key, self.width, self.src, self.length)
        return key ^ (v << (self.width - self.dst - self.length))

    def inverse(self, key: int) -> int:
        return self(key)

    def params(self) -> dict:
        return {"src": self.src, "dst": self.dst, "length": self.length}


@dataclass(frozen=True)
class ConditionalIncrement:
    """Add 1 (mod 2^length) to the target section when the control qubit is 1."""

    width: int
    control: int
    target: int
    length: int
    name = "conditional-increment"
    bijective_by_construction = True

    def __post_init__(self):
        _check_section(self.width, self.target, self.length)
        _check_section(self.width, self.control, 1)
        if self.target <= self.control < self.target + self.length:
            raise ValueError(f"control qubit {self.control} lies inside the target section")

    def _shift(self, key: int, delta: int) -> int:
        if not (key >> (self.width - 1 - self.control)) & 1:
            return key
        v = section_value(key, self.width, self.target, self.length)
        return _put_section(key, self.width, self.target, self.length,
                            (v + delta) % (1 << self.length))

    def __call__(self, key: int) -> int:
        return self._shift(key, 1)

    def inverse(self, key: int) -> int:
        return self._shift(key, -1)

    def params(self) -> dict:
        return {"control": self.control, "target": self.target, "length": self.length}


PERMUTATIONS = {cls.name: cls for cls in (SectionSwap, SectionXor, ConditionalIncrement)}
CatalogPermutation = Union[SectionSwap, SectionXor, ConditionalIncrement]


@dataclass(frozen=True)
class Query:
    pass


@dataclass(frozen=True)
class Dense:
    targets: tuple[int, ...]
    unitary: DenseUnitary

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if len(self.targets) != self.unitary.arity:
            raise ValueError(f"{len(self.targets)} targets for arity {self.unitary.arity}")


@dataclass(frozen=True)
class Permutation:
    perm: CatalogPermutation


ProgramStep = Union[Query, Dense, Permutation]


@dataclass(frozen=True)
class QueryProgram:
    layout: RegisterLayout
    steps: tuple[ProgramStep, ...]
    output_section: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.output_section is None:
            q = self.layout.query_range
            object.__setattr__(self, "output_section", (q.start, q.stop))
        else:
            object.__setattr__(self, "output_section", tuple(self.output_section))
        m = self.layout.total
        start, stop = self.output_section
        if not 0 <= start < stop <= m:
            raise ValueError(f"output section {self.output_section} outside {m} qubits")
        for step in self.steps:
            if isinstance(step, Dense):
                for q in step.targets:
                    if not 0 <= q < m:
                        raise ValueError(f"dense step targets qubit {q} outside {m} qubits")
            elif isinstance(step, Permutation):
                if step.perm.width != m:
                    raise ValueError(f"permutation built for {step.perm.width} qubits, register has {m}")
            elif not isinstance(step, Query):
                raise TypeError(f"unknown program step {step!r}")

    @property
    def output_qubits(self) -> range:
        return range(*self.output_section)

    def rounds(self) -> tuple[tuple[ProgramStep, ...], list[tuple[ProgramStep, ...]]]:
        """Split into (prefix, [U_0, ..., U_{t-1}])."""
        groups: list[list[ProgramStep]] = [[]]
        for step in self.steps:
            if isinstance(step, Query):
                groups.append([])
            else:
                groups[-1].append(step)
        return tuple(groups[0]), [tuple(g) for g in groups[1:]]

    def to_dict(self) -> dict:
        return {
            "layout": self.layout.to_dict(),
            "output_section": list(self.output_section),
            "steps": [_step_to_dict(s) for s in self.steps],
        }

    @classmethod
    def from_dict(cls, data: dict) -> QueryProgram:
        layout = RegisterLayout(int(data["layout"]["working"]), int(data["layout"]["n"]))
        steps = [_step_from_dict(s, layout.total) for s in data["steps"]]
        out = data.get("output_section")
        return cls(layout, tuple(steps), tuple(out) if out is not None else None)


def _step_to_dict(step: ProgramStep) -> dict:
    if isinstance(step, Query):
        return {"kind": "query"}
    if isinstance(step, Dense):
        mat = step.unitary.matrix
        return {
            "kind": "dense",
            "targets": list(step.targets),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in mat],
        }
    return {"kind": "permutation", "name": step.perm.name, "params": step.perm.params()}


def _step_from_dict(data: dict, width: int) -> ProgramStep:
    kind = data["kind"]
    if kind == "query":
        return Query()
    if kind == "dense":
        mat = np.array([[complex(re, im) for re, im in row] for row in data["matrix"]])
        return Dense(tuple(data["targets"]), DenseUnitary(mat))
    if kind == "permutation":
        cls = PERMUTATIONS.get(data["name"])
        if cls is None:
            raise ValueError(f"unknown permutation {data['name']!r}")
        return Permutation(cls(width=width, **data["params"]))
    raise ValueError(f"unknown step kind {kind!r}")


def query_count(program: QueryProgram) -> int:
    return sum(isinstance(s, Query) for s in program.steps)


def apply_step(state: QuantumState, step: ProgramStep, f: LengthPreservingFn) -> QuantumState:
    if isinstance(step, Query):
        return apply_query(state, f)
    if isinstance(step, Dense):
        return apply_working(state, step.targets, step.unitary)
    return apply_basis_permutation(state, step.perm)


def _apply_steps(state: QuantumState, steps) -> QuantumState:
    for step in steps:
        state = apply_step(state, step, None)
    return state


def initial_state(program: QueryProgram, input_word: BitWord | int) -> QuantumState:
    """chi_0: the input loaded into the query section, then the pre-query steps."""
    layout = program.layout
    start = basis_state(layout, layout.compose(query=word_value(input_word, layout.n)))
    prefix, _ = program.rounds()
    return _apply_steps(start, prefix)


def apply_round(program: QueryProgram, i: int, state: QuantumState,
                f: LengthPreservingFn) -> QuantumState:
    """V_{i,f}: the i-th query followed by the working steps up to the next query."""
    _, rounds = program.rounds()
    return _apply_steps(apply_query(state, f), rounds[i])


@dataclass(frozen=True)
class Trace:
    """Run record: ``states[i]`` for i < t is the state read by query i+1;
    ``states[t]`` is the final state."""

    program: QueryProgram
    oracle: LengthPreservingFn
    input_word: int
    states: tuple[QuantumState, ...] = field(repr=False)

    @property
    def t(self) -> int:
        return len(self.states) - 1

    @property
    def pre_query(self) -> tuple[QuantumState, ...]:
        return self.states[:-1]

    @property
    def final(self) -> QuantumState:
        return self.states[-1]


def _check_widths(program: QueryProgram, f: LengthPreservingFn):
    if f.n != program.layout.n:
        raise ValueError(f"oracle width {f.n} != program query width {program.layout.n}")


def run(program: QueryProgram, f: LengthPreservingFn, input_word: BitWord | int = 0) -> Trace:
    _check_widths(program, f)
    state = initial_state(program, input_word)
    states = [state]
    for i in range(query_count(program)):
        state = apply_round(program, i, state, f)
        states.append(state)
    return Trace(program, f, word_value(input_word, program.layout.n), tuple(states))


def output_distribution(trace: Trace) -> dict[str, float]:
    return measure_marginal(trace.final, trace.program.output_qubits)


def success_probability(trace: Trace, target: BitWord | int) -> float:
    width = len(trace.program.output_qubits)
    value = word_value(target, width)
    return output_distribution(trace).get(format(value, f"0{width}b"), 0.0)
