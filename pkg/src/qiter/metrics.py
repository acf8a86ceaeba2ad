"""Query mass, oracle distance, and checks of the two hybrid-argument inequalities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from qiter.machine import QueryProgram, run
from qiter.oracle import LengthPreservingFn, apply_query, mutate
from qiter.state import BOUND_SLACK, BitWord, QuantumState, state_distance, word_value


def query_mass(state: QuantumState, a: BitWord | int) -> float:
    """delta_a: probability that the state queries the oracle on word ``a``."""
    layout = state.layout
    a = word_value(a, layout.n)
    n, mask = layout.n, layout.word_mask
    return math.fsum(abs(amp) ** 2 for key, amp in state.amplitudes.items()
                     if (key >> n) & mask == a)


def query_mass_distribution(state: QuantumState) -> dict[int, float]:
    layout = state.layout
    n, mask = layout.n, layout.word_mask
    parts: dict[int, list[float]] = {}
    for key, amp in state.amplitudes.items():
        parts.setdefault((key >> n) & mask, []).append(abs(amp) ** 2)
    return {a: math.fsum(ps) for a, ps in sorted(parts.items())}


def query_amplitude(state: QuantumState, a: BitWord | int) -> float:
    """d_a = sqrt(delta_a)."""
    return math.sqrt(query_mass(state, a))


def oracle_distance(state: QuantumState, f: LengthPreservingFn, g: LengthPreservingFn) -> float:
    """sqrt of the query mass that falls on words where f and g disagree."""
    if not f.n == g.n == state.layout.n:
        raise ValueError(f"widths differ: f={f.n}, g={g.n}, query={state.layout.n}")
    dist = query_mass_distribution(state)
    return math.sqrt(math.fsum(mass for a, mass in dist.items() if f.table[a] != g.table[a]))


@dataclass
class LemmaReport:
    lhs: float
    rhs: float
    context: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + BOUND_SLACK

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "holds": self.holds, **self.context}


def check_lemma1(state: QuantumState, f: LengthPreservingFn, g: LengthPreservingFn) -> LemmaReport:
    """|Qu_f(xi) - Qu_g(xi)| <= 2 d_xi(f, g)."""
    lhs = state_distance(apply_query(state, f), apply_query(state, g))
    rhs = 2 * oracle_distance(state, f, g)
    return LemmaReport(lhs, rhs, {
        "f": f.digest(), "g": g.digest(), "disagreements": len(f.disagreement(g)),
        "support": len(state),
    })


def check_lemma2(program: QueryProgram, f: LengthPreservingFn, a: BitWord | int,
                 to: BitWord | int, input_word: BitWord | int = 0) -> LemmaReport:
    """Final-state distance under f and under f mutated at ``a`` is at most
    2 * sum of d_a over the pre-query states of the f-run."""
    g = mutate(f, a, to)
    trace_f = run(program, f, input_word)
    trace_g = run(program, g, input_word)
    lhs = state_distance(trace_f.final, trace_g.final)
    terms = [query_amplitude(chi, a) for chi in trace_f.pre_query]
    rhs = 2 * math.fsum(terms)
    return LemmaReport(lhs, rhs, {
        "f": f.digest(), "g": g.digest(), "a": word_value(a, f.n), "to": word_value(to, f.n),
        "input": word_value(input_word, f.n), "t": len(terms), "sqrt_masses": terms,
    })
