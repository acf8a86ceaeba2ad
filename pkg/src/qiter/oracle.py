"""Length-preserving functions on n-bit words and the XOR query transform."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from qiter.state import BitWord, QuantumState, word_value


@dataclass(frozen=True)
class LengthPreservingFn:
    """Explicit table of a function {0,1}^n -> {0,1}^n; ``table[a]`` is f(a)."""

    n: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"width must be >= 1, got {self.n}")
        table = tuple(int(v) for v in self.table)
        if len(table) != 1 << self.n:
            raise ValueError(f"table has {len(table)} entries, expected {1 << self.n}")
        if any(not 0 <= v < (1 << self.n) for v in table):
            raise ValueError(f"table entries must be {self.n}-bit words")
        object.__setattr__(self, "table", table)

    def __call__(self, a: BitWord | int) -> int:
        return self.table[word_value(a, self.n)]

    @property
    def size(self) -> int:
        return 1 << self.n

    def is_bijection(self) -> bool:
        return len(set(self.table)) == self.size

    def is_full_cycle(self) -> bool:
        """True when the orbit of 0^n runs through every word before closing."""
        x, seen = 0, 0
        for _ in range(self.size):
            x = self.table[x]
            seen += 1
            if x == 0:
                break
        return x == 0 and seen == self.size

    def disagreement(self, other: LengthPreservingFn) -> list[int]:
        _check_width(self, other)
        return [a for a in range(self.size) if self.table[a] != other.table[a]]

    def to_dict(self) -> dict:
        return {"n": self.n, "table": list(self.table)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> LengthPreservingFn:
        return cls(int(data["n"]), tuple(data["table"]))

    @classmethod
    def from_json(cls, text: str) -> LengthPreservingFn:
        return cls.from_dict(json.loads(text))

    def digest(self) -> str:
        """Short content hash used as oracle provenance in reports."""
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


def _check_width(f: LengthPreservingFn, g: LengthPreservingFn):
    if f.n != g.n:
        raise ValueError(f"oracle widths differ: {f.n} vs {g.n}")


def random_full_cycle(n: int, seed) -> LengthPreservingFn:
    """Uniformly random single-cycle permutation of all n-bit words."""
    if n < 1:
        raise ValueError(f"width must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    size = 1 << n
    order = [0] + (rng.permutation(size - 1) + 1).tolist()
    table = [0] * size
    for i, word in enumerate(order):
        table[word] = order[(i + 1) % size]
    return LengthPreservingFn(n, tuple(table))


def random_function(n: int, rng: np.random.Generator) -> LengthPreservingFn:
    return LengthPreservingFn(n, tuple(rng.integers(0, 1 << n, size=1 << n).tolist()))


def iterate(f: LengthPreservingFn, k: int, x: BitWord | int) -> int:
    """k-fold application of f to x; k = 0 is the identity."""
    if k < 0:
        raise ValueError(f"iteration count must be >= 0, got {k}")
    value = word_value(x, f.n)
    table = f.table
    for _ in range(k):
        value = table[value]
    return value


def mutate(f: LengthPreservingFn, at: BitWord | int, to: BitWord | int) -> LengthPreservingFn:
    """Copy of f with the single entry ``at`` replaced by ``to``."""
    table = list(f.table)
    table[word_value(at, f.n)] = word_value(to, f.n)
    return LengthPreservingFn(f.n, tuple(table))


@dataclass(frozen=True)
class OrbitCertificate:
    f: LengthPreservingFn
    start: int
    orbit: tuple[int, ...]

    @property
    def closes(self) -> bool:
        """Whether the next iterate returns to an already visited word."""
        return self.f.table[self.orbit[-1]] in self.orbit

    @property
    def is_full_cycle(self) -> bool:
        return len(self.orbit) == self.f.size and self.f.table[self.orbit[-1]] == self.start


def orbit(f: LengthPreservingFn, start: BitWord | int, max_len: int | None = None) -> OrbitCertificate:
    """Iterates of ``start`` until the first repetition or ``max_len`` words."""
    x = word_value(start, f.n)
    limit = f.size if max_len is None else max_len
    words, seen = [], set()
    while len(words) < limit and x not in seen:
        words.append(x)
        seen.add(x)
        x = f.table[x]
    return OrbitCertificate(f, word_value(start, f.n), tuple(words))


def apply_query(state: QuantumState, f: LengthPreservingFn) -> QuantumState:
    """Qu_f: |w, a, b> -> |w, a, f(a) xor b>. Only keys move, amplitudes are untouched."""
    layout = state.layout
    if f.n != layout.n:
        raise ValueError(f"oracle width {f.n} != query width {layout.n}")
    n, mask, table = layout.n, layout.word_mask, f.table
    return QuantumState(layout, {key ^ table[(key >> n) & mask]: amp
                                 for key, amp in state.amplitudes.items()})
