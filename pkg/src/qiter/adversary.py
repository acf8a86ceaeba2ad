"""Adversary constructions against programs that iterate a black box.

Both constructions run a program on a full-cycle oracle f, find words on the
orbit of 0^n that the program barely queries, and change the oracle there so
that the T-th iterate of 0^n changes. The hybrid-argument bounds then limit
how far apart the two final states can be.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from qiter.machine import (
    QueryProgram,
    Trace,
    apply_round,
    initial_state,
    output_distribution,
    query_count,
    run,
)
from qiter.metrics import query_amplitude, query_mass, query_mass_distribution
from qiter.oracle import LengthPreservingFn, iterate, mutate
from qiter.state import BOUND_SLACK, NORM_TOL, QuantumState, state_distance, word_value


@dataclass(frozen=True)
class QueryMatrix:
    """entries[i, j] = query mass of pre-query state i on orbit word f^j(0^n), j = 0..T."""

    entries: np.ndarray
    orbit_words: tuple[int, ...]

    @property
    def t(self) -> int:
        return self.entries.shape[0]

    @property
    def T(self) -> int:
        return self.entries.shape[1] - 1

    def row_sums(self, distinct_only: bool = True) -> list[float]:
        """Row sums over columns 0..T-1 (distinct words), or over all T+1 columns."""
        cols = self.T if distinct_only else self.T + 1
        return [math.fsum(row[:cols]) for row in self.entries.tolist()]

    def column_sums(self) -> list[float]:
        return [math.fsum(col) for col in self.entries.T.tolist()]

    def to_list(self) -> list[list[float]]:
        return self.entries.tolist()


def build_query_matrix(trace: Trace, f: LengthPreservingFn, T: int) -> QueryMatrix:
    words = tuple(iterate(f, j, 0) for j in range(T + 1))
    pre = trace.pre_query
    entries = np.zeros((len(pre), T + 1))
    for i, chi in enumerate(pre):
        dist = query_mass_distribution(chi)
        for j, w in enumerate(words):
            entries[i, j] = dist.get(w, 0.0)
    entries.setflags(write=False)
    return QueryMatrix(entries, words)


def select_tau(matrix: QueryMatrix) -> tuple[int, float]:
    """Least-queried orbit position among 0..T-1, smallest index on ties.

    Position T is excluded: changing f at f^T(0^n) cannot change f^T(0^n).
    """
    if matrix.T < 1:
        raise ValueError("need T >= 1 to choose a mutation position")
    sums = matrix.column_sums()[: matrix.T]
    tau = min(range(matrix.T), key=lambda j: (sums[j], j))
    return tau, sums[tau]


@dataclass(frozen=True)
class HybridChainReport:
    deltas: tuple[float, ...]
    partials: tuple[float, ...]
    states: tuple[QuantumState, ...] = field(repr=False)
    reference_states: tuple[QuantumState, ...] = field(repr=False)

    @property
    def lemma3(self) -> list[bool]:
        return [p <= math.fsum(self.deltas[:i]) + BOUND_SLACK for i, p in enumerate(self.partials)]

    @property
    def holds(self) -> bool:
        return all(self.lemma3)


def verify_hybrid_chain(program: QueryProgram, oracles: list[LengthPreservingFn],
                        input_word=0) -> HybridChainReport:
    """Compare the hybrid run (query i answered by oracles[i]) with the run that
    uses the last oracle throughout.

    deltas[i] = |V_{i,f_i}(xi_i) - V_{i,f_t}(xi_i)| and
    partials[i] = |xi_i - xi'_i| for i = 0..t.
    """
    t = query_count(program)
    if len(oracles) != t + 1:
        raise ValueError(f"need {t + 1} oracles for a program with {t} queries, got {len(oracles)}")
    for i in range(t):
        diff = oracles[i].disagreement(oracles[i + 1])
        if len(diff) > 1:
            raise ValueError(f"oracles {i} and {i + 1} differ on {len(diff)} words")
    last = oracles[t]
    xi = ref = initial_state(program, input_word)
    states, refs, deltas, partials = [xi], [ref], [], [0.0]
    for i in range(t):
        nxt = apply_round(program, i, xi, oracles[i])
        deltas.append(state_distance(nxt, apply_round(program, i, xi, last)))
        ref = apply_round(program, i, ref, last)
        partials.append(state_distance(nxt, ref))
        xi = nxt
        states.append(xi)
        refs.append(ref)
    return HybridChainReport(tuple(deltas), tuple(partials), tuple(states), tuple(refs))


@dataclass
class AdversaryReport:
    mode: str
    original: LengthPreservingFn
    f: LengthPreservingFn
    g: LengthPreservingFn | None
    T: int
    t: int
    seed: int | None
    feasible: bool = True
    failing_step: str | None = None
    mutation_word: int | None = None
    mutation_value: int | None = None
    tau: int | None = None
    column_sum: float | None = None
    matrix: QueryMatrix | None = None
    theta: float | None = None
    lhs: float = float("nan")
    rhs: float = float("nan")
    bounds: dict = field(default_factory=dict)
    target_f: int | None = None
    target_g: int | None = None
    success_f: float = float("nan")
    success_g: float = float("nan")
    gap: float = float("nan")
    deltas: tuple[float, ...] = ()
    partials: tuple[float, ...] = ()
    oracle_chain: tuple[LengthPreservingFn, ...] = ()
    chain_words: tuple[int, ...] = ()
    checks: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.feasible and all(self.checks.values())

    @property
    def bound_non_contradictory(self) -> bool:
        """The Lemma-2 bound allows final states at distance >= 1."""
        return self.rhs >= 1.0

    @property
    def both_succeed(self) -> bool:
        return self.success_f >= 2 / 3 and self.success_g >= 2 / 3

    def to_dict(self) -> dict:
        out = {
            "mode": self.mode, "T": self.T, "t": self.t, "seed": self.seed,
            "feasible": self.feasible, "failing_step": self.failing_step,
            "original": self.original.to_dict(), "original_hash": self.original.digest(),
            "f": self.f.to_dict(), "f_hash": self.f.digest(),
            "g": self.g.to_dict() if self.g else None,
            "g_hash": self.g.digest() if self.g else None,
            "mutation_word": self.mutation_word, "mutation_value": self.mutation_value,
            "tau": self.tau, "column_sum": self.column_sum, "theta": self.theta,
            "matrix": self.matrix.to_list() if self.matrix is not None else None,
            "lhs": self.lhs, "rhs": self.rhs, "slack": self.rhs - self.lhs,
            "bounds": self.bounds,
            "target_f": self.target_f, "target_g": self.target_g,
            "success_f": self.success_f, "success_g": self.success_g, "gap": self.gap,
            "both_succeed": self.both_succeed,
            "bound_non_contradictory": self.bound_non_contradictory,
            "deltas": list(self.deltas), "partials": list(self.partials),
            "oracle_chain": [o.to_dict() for o in self.oracle_chain],
            "chain_words": list(self.chain_words),
            "checks": self.checks, "holds": self.holds,
        }
        return out


def _require_full_cycle(f: LengthPreservingFn, T: int):
    if not f.is_full_cycle():
        raise ValueError("adversary constructions need a full-cycle oracle")
    if not 1 <= T <= f.size:
        raise ValueError(f"need 1 <= T <= 2^n = {f.size} so orbit words 0..T-1 are distinct, got T={T}")


def _flip_value(base: LengthPreservingFn, at: int, T: int, seed) -> tuple[LengthPreservingFn, int] | None:
    """First y in a seeded order with base mutated at ``at`` to y changing the T-th iterate of 0."""
    target = iterate(base, T, 0)
    order = np.random.default_rng(seed).permutation(base.size).tolist()
    for y in order:
        if y == base.table[at]:
            continue
        g = mutate(base, at, y)
        if iterate(g, T, 0) != target:
            return g, y
    return None


def _compare_outputs(report: AdversaryReport, program: QueryProgram, trace_f: Trace, trace_g: Trace):
    width = len(program.output_qubits)
    report.target_f = iterate(report.f, report.T, 0)
    report.target_g = iterate(report.g, report.T, 0)
    pf, pg = output_distribution(trace_f), output_distribution(trace_g)
    kf, kg = format(report.target_f, f"0{width}b"), format(report.target_g, f"0{width}b")
    report.success_f = pf.get(kf, 0.0)
    report.success_g = pg.get(kg, 0.0)
    report.gap = max(abs(pf.get(k, 0.0) - pg.get(k, 0.0)) for k in (kf, kg))
    report.lhs = state_distance(trace_f.final, trace_g.final)
    report.checks["outputs_diverge"] = report.target_f != report.target_g
    report.checks["gap_within_twice_distance"] = report.gap <= 2 * report.lhs + BOUND_SLACK


def construct_adversary_t2(program: QueryProgram, f: LengthPreservingFn, T: int,
                           seed=0) -> AdversaryReport:
    """Flip f at the least-queried orbit word f^tau(0^n)."""
    _require_full_cycle(f, T)
    if len(program.output_qubits) != f.n:
        raise ValueError("program output section must be one n-bit word")
    t = query_count(program)
    trace_f = run(program, f, 0)
    matrix = build_query_matrix(trace_f, f, T)
    tau, col = select_tau(matrix)
    at = matrix.orbit_words[tau]
    found = _flip_value(f, at, T, seed)
    if found is None:
        raise AssertionError(f"no mutation at f^{tau}(0) changes the {T}-th iterate")
    g, y = found
    trace_g = run(program, g, 0)

    report = AdversaryReport("theorem2", f, f, g, T, t, seed, mutation_word=at,
                             mutation_value=y, tau=tau, column_sum=col, matrix=matrix)
    column = matrix.entries[:, tau].tolist()
    report.rhs = 2 * math.fsum(math.sqrt(a) for a in column)
    report.bounds = {
        "cauchy_schwarz": 2 * math.sqrt(t * col),
        "pigeonhole": 2 * t / math.sqrt(T),
        "column_sum_limit": t / T,
    }
    _compare_outputs(report, program, trace_f, trace_g)
    report.checks.update({
        "lemma2": report.lhs <= report.rhs + BOUND_SLACK,
        "cauchy_schwarz": report.rhs <= report.bounds["cauchy_schwarz"] + BOUND_SLACK,
        "pigeonhole": col <= t / T + NORM_TOL,
        "distance_within_2t_over_sqrtT": report.lhs <= report.bounds["pigeonhole"] + BOUND_SLACK,
    })
    return report


def construct_adversary_t1(program: QueryProgram, f: LengthPreservingFn, T: int,
                           theta: float, seed=0) -> AdversaryReport:
    """Inductive construction with a mass threshold ``theta``.

    Query i is answered by f_i. After it, words whose mass in the new state
    exceeds ``theta`` are retired from the admissible set. The next chain word
    x_{i+1} = f_{i+1}(x_i) is the first candidate (no change first, then the
    orbit of 0^n under f in order) whose next T iterates under f_{i+1} stay
    admissible. Words queried with mass above ``theta`` by chi_0 are never
    admissible, and x_0 = 0^n is only rewired if chi_0 barely queries it.
    Returns a report with ``feasible=False`` when no candidate exists.
    """
    if not 0 < theta <= 1:
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    _require_full_cycle(f, T)
    if len(program.output_qubits) != f.n:
        raise ValueError("program output section must be one n-bit word")
    t = query_count(program)
    report = AdversaryReport("theorem1", f, f, None, T, t, seed, theta=theta)

    xi = initial_state(program, 0)
    first_mass = query_mass_distribution(xi)
    eligible = {a for a in range(f.size) if first_mass.get(a, 0.0) <= theta}
    orbit_order = [iterate(f, j, 0) for j in range(f.size)]
    oracles, words = [f], [0]
    for i in range(t):
        xi = apply_round(program, i, xi, oracles[i])
        mass = query_mass_distribution(xi)
        eligible = {a for a in eligible if mass.get(a, 0.0) <= theta}
        current, x = oracles[i], words[i]
        chosen = None
        for y in [current.table[x]] + orbit_order:
            if y in words:
                continue
            if y != current.table[x] and first_mass.get(x, 0.0) > theta:
                continue
            g = current if y == current.table[x] else mutate(current, x, y)
            walk, ok = y, True
            for _ in range(T):
                if walk not in eligible:
                    ok = False
                    break
                walk = g.table[walk]
            if ok:
                chosen = (g, y)
                break
        if chosen is None:
            report.feasible = False
            report.failing_step = f"chain step {i + 1}"
            report.oracle_chain, report.chain_words = tuple(oracles), tuple(words)
            return report
        oracles.append(chosen[0])
        words.append(chosen[1])

    base, x_t = oracles[t], words[t]
    report.f, report.oracle_chain, report.chain_words = base, tuple(oracles), tuple(words)
    found = _flip_value(base, x_t, T, seed)
    if found is None:
        report.feasible = False
        report.failing_step = "final flip"
        return report
    phi, y = found
    report.g, report.mutation_word, report.mutation_value = phi, x_t, y

    chain = verify_hybrid_chain(program, list(oracles), 0)
    report.deltas, report.partials = chain.deltas, chain.partials
    trace_base = run(program, base, 0)
    trace_phi = run(program, phi, 0)
    amps = [query_amplitude(s, x_t) for s in trace_base.states]
    report.rhs = 2 * math.fsum(amps[:t])

    root = math.sqrt(theta)
    step_bound = 2 * math.sqrt(t * theta)
    report.bounds = {
        "delta": step_bound,
        "partials": [2 * i * math.sqrt(t) * root for i in range(t + 1)],
        "reference_amplitude": 3 * t ** 1.5 * root,
        "final": 6 * t ** 2.5 * root,
    }
    _compare_outputs(report, program, trace_base, trace_phi)
    report.checks.update({
        "lemma3": chain.holds,
        "delta_bound": all(d <= step_bound + BOUND_SLACK for d in chain.deltas),
        "partial_bound": all(p <= b + BOUND_SLACK
                             for p, b in zip(chain.partials, report.bounds["partials"])),
        "flip_word_rarely_queried": all(query_mass(s, x_t) <= theta + NORM_TOL
                                        for s in chain.states),
        "reference_amplitude": all(a <= report.bounds["reference_amplitude"] + BOUND_SLACK
                                   for a in amps),
        "lemma2": report.lhs <= report.rhs + BOUND_SLACK,
        "final_chain": report.rhs <= report.bounds["final"] + BOUND_SLACK,
    })
    return report
