"""Sparse state vectors over a partitioned qubit register.

Basis states are stored as integer keys of width ``m``. Qubit 0 is the
leftmost symbol of the bit-string encoding, i.e. the most significant bit
of the key. The register is split into three consecutive sections::

    [ working (w) | query word (n) | answer (n) ]

so the answer word occupies the ``n`` least significant bits of a key.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType

import numpy as np

NORM_TOL = 1e-9
PRUNE_TOL = 1e-12
BOUND_SLACK = 1e-8
MAX_DENSE_ARITY = 10
MAX_REGISTER_WIDTH = 128

# Exhaustive bijection checks are run up to this register width.
EXHAUSTIVE_CHECK_WIDTH = 20
SPOT_CHECK_SAMPLES = 4096


@dataclass(frozen=True)
class BitWord:
    width: int
    value: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"word width must be >= 1, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value {self.value} does not fit in {self.width} bits")

    @classmethod
    def from_bits(cls, bits: str) -> BitWord:
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"not a bit-string: {bits!r}")
        return cls(len(bits), int(bits, 2))

    @property
    def bits(self) -> str:
        return format(self.value, f"0{self.width}b")

    def __str__(self):
        return self.bits


def word_value(word: BitWord | int | str, width: int) -> int:
    """Return the integer value of ``word``, checking it has ``width`` bits."""
    if isinstance(word, str):
        word = BitWord.from_bits(word)
    if isinstance(word, BitWord):
        if word.width != width:
            raise ValueError(f"word width {word.width} != expected {width}")
        return word.value
    value = int(word)
    if not 0 <= value < (1 << width):
        raise ValueError(f"value {value} does not fit in {width} bits")
    return value


@dataclass(frozen=True)
class RegisterLayout:
    """Register of ``working`` work qubits followed by a 2n-qubit query tape."""

    working: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"query width must be >= 1, got {self.n}")
        if self.working < 0:
            raise ValueError(f"working count must be >= 0, got {self.working}")
        if self.total > MAX_REGISTER_WIDTH:
            raise ValueError(f"register of {self.total} qubits exceeds {MAX_REGISTER_WIDTH}")

    @property
    def total(self) -> int:
        return self.working + 2 * self.n

    @property
    def working_range(self) -> range:
        return range(0, self.working)

    @property
    def query_range(self) -> range:
        return range(self.working, self.working + self.n)

    @property
    def answer_range(self) -> range:
        return range(self.working + self.n, self.total)

    @property
    def word_mask(self) -> int:
        return (1 << self.n) - 1

    def query_word(self, key: int) -> int:
        return (key >> self.n) & self.word_mask

    def answer_word(self, key: int) -> int:
        return key & self.word_mask

    def working_bits(self, key: int) -> int:
        return key >> (2 * self.n)

    def compose(self, working: int = 0, query: int = 0, answer: int = 0) -> int:
        return (working << (2 * self.n)) | (query << self.n) | answer

    def key_to_bits(self, key: int) -> str:
        return format(key, f"0{self.total}b")

    def to_dict(self) -> dict:
        return {"working": self.working, "n": self.n}


def section_value(key: int, width: int, start: int, length: int) -> int:
    """Value of qubits ``[start, start + length)`` of a ``width``-qubit key."""
    return (key >> (width - start - length)) & ((1 << length) - 1)


@dataclass(frozen=True)
class QuantumState:
    """Immutable sparse amplitude map. Build through the module functions."""

    layout: RegisterLayout
    amplitudes: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        pruned = {k: complex(a) for k, a in self.amplitudes.items() if abs(a) >= PRUNE_TOL}
        object.__setattr__(self, "amplitudes", MappingProxyType(pruned))

    def norm(self) -> float:
        return math.sqrt(math.fsum(abs(a) ** 2 for a in self.amplitudes.values()))

    def amplitude(self, key: int | str) -> complex:
        if isinstance(key, str):
            key = int(key, 2)
        return self.amplitudes.get(key, 0j)

    def support(self) -> list[int]:
        return sorted(self.amplitudes)

    def to_bitstrings(self) -> dict[str, complex]:
        return {self.layout.key_to_bits(k): a for k, a in sorted(self.amplitudes.items())}

    def to_dense(self) -> np.ndarray:
        m = self.layout.total
        if m > 24:
            raise ValueError(f"refusing to densify a {m}-qubit register")
        vec = np.zeros(1 << m, dtype=complex)
        for k, a in self.amplitudes.items():
            vec[k] = a
        return vec

    def __len__(self):
        return len(self.amplitudes)


def from_amplitudes(layout: RegisterLayout, amplitudes: Mapping[int | str, complex],
                    normalize: bool = False) -> QuantumState:
    m = layout.total
    amps: dict[int, complex] = {}
    for key, amp in amplitudes.items():
        if isinstance(key, str):
            if len(key) != m:
                raise ValueError(f"basis string {key!r} has length != {m}")
            key = int(key, 2)
        if not 0 <= key < (1 << m):
            raise ValueError(f"basis key {key} outside a {m}-qubit register")
        amps[key] = amps.get(key, 0j) + complex(amp)
    state = QuantumState(layout, amps)
    norm = state.norm()
    if normalize:
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState(layout, {k: a / norm for k, a in state.amplitudes.items()})
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"state norm {norm!r} is not 1")
    return state


def basis_state(layout: RegisterLayout, word: str | BitWord | int) -> QuantumState:
    """State with amplitude 1 on ``word``; a string must cover the whole register."""
    m = layout.total
    if isinstance(word, str) and len(word) != m:
        raise ValueError(f"basis word has length {len(word)}, register has {m} qubits")
    key = word_value(word, m)
    return QuantumState(layout, {key: 1.0 + 0j})


def random_state(layout: RegisterLayout, rng: np.random.Generator,
                 support: int | None = None) -> QuantumState:
    """Random unit state on ``support`` basis keys (all keys if None).

    Keys are drawn uniformly; for registers wider than 62 qubits they are
    assembled from 62-bit chunks.
    """
    m = layout.total
    size = 1 << m
    if support is None or support >= size:
        keys = list(range(size)) if m <= 16 else None
        if keys is None:
            raise ValueError("full-support random states need <= 16 qubits")
    else:
        chosen: set[int] = set()
        while len(chosen) < support:
            chosen.add(_random_key(rng, m))
        keys = sorted(chosen)
    amps = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    amps /= np.linalg.norm(amps)
    return QuantumState(layout, dict(zip(keys, amps.tolist())))


def _random_key(rng: np.random.Generator, m: int) -> int:
    key = 0
    remaining = m
    while remaining > 0:
        chunk = min(62, remaining)
        key = (key << chunk) | int(rng.integers(0, 1 << chunk))
        remaining -= chunk
    return key


def _check_same_layout(a: QuantumState, b: QuantumState):
    if a.layout != b.layout:
        raise ValueError(f"layout mismatch: {a.layout} vs {b.layout}")


def state_distance(a: QuantumState, b: QuantumState) -> float:
    """Euclidean norm of the amplitude-wise difference."""
    _check_same_layout(a, b)
    keys = a.amplitudes.keys() | b.amplitudes.keys()
    return math.sqrt(math.fsum(abs(a.amplitude(k) - b.amplitude(k)) ** 2 for k in keys))


@dataclass(frozen=True, eq=False)
class DenseUnitary:
    matrix: np.ndarray
    max_arity: int = MAX_DENSE_ARITY

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"unitary must be square, got shape {mat.shape}")
        dim = mat.shape[0]
        arity = dim.bit_length() - 1
        if dim < 2 or (1 << arity) != dim:
            raise ValueError(f"dimension {dim} is not a power of two >= 2")
        if arity > self.max_arity:
            raise ValueError(f"arity {arity} exceeds the dense cap {self.max_arity}")
        err = np.max(np.abs(mat @ mat.conj().T - np.eye(dim)))
        if err > NORM_TOL:
            raise ValueError(f"matrix is not unitary (max deviation {err:.3g})")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def arity(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def __eq__(self, other):
        return isinstance(other, DenseUnitary) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


HADAMARD = DenseUnitary(np.array([[1, 1], [1, -1]]) / math.sqrt(2))
PAULI_X = DenseUnitary(np.array([[0, 1], [1, 0]]))


def _check_targets(targets: Sequence[int], m: int):
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits in {list(targets)}")
    for q in targets:
        if not 0 <= q < m:
            raise ValueError(f"qubit {q} outside a {m}-qubit register")


def apply_working(state: QuantumState, targets: Sequence[int], u: DenseUnitary) -> QuantumState:
    """Apply ``u`` to the ordered qubits ``targets``, identity elsewhere.

    ``targets[0]`` is the most significant bit of the local index of ``u``.
    """
    targets = list(targets)
    m = state.layout.total
    if len(targets) != u.arity:
        raise ValueError(f"{len(targets)} targets for a unitary of arity {u.arity}")
    _check_targets(targets, m)
    if not state.amplitudes:
        return state
    g = len(targets)
    dim = 1 << g
    shifts = [m - 1 - q for q in targets]
    clear = ~sum(1 << s for s in shifts)
    offsets = [sum(((j >> (g - 1 - i)) & 1) << shifts[i] for i in range(g)) for j in range(dim)]

    rows: dict[int, int] = {}
    rests: list[int] = []
    idx_row, idx_col, vals = [], [], []
    for key, amp in state.amplitudes.items():
        rest = key & clear
        row = rows.get(rest)
        if row is None:
            row = rows[rest] = len(rests)
            rests.append(rest)
        col = 0
        for s in shifts:
            col = (col << 1) | ((key >> s) & 1)
        idx_row.append(row)
        idx_col.append(col)
        vals.append(amp)
    block = np.zeros((len(rests), dim), dtype=complex)
    block[idx_row, idx_col] = vals
    out = block @ u.matrix.T

    r_idx, c_idx = np.nonzero(np.abs(out) >= PRUNE_TOL)
    new = {rests[r] | offsets[c]: complex(out[r, c]) for r, c in zip(r_idx.tolist(), c_idx.tolist())}
    return QuantumState(state.layout, new)


@lru_cache(maxsize=256)
def _verify_bijection_cached(p, m: int) -> None:
    verify_bijection(p, m)


def verify_bijection(p: Callable[[int], int], m: int, rng: np.random.Generator | None = None):
    """Check that ``p`` permutes the ``m``-qubit basis.

    Exhaustive up to 20 qubits; above that a seeded spot check of images,
    and of ``p.inverse`` round trips when the permutation provides one.
    """
    size = 1 << m
    if m <= EXHAUSTIVE_CHECK_WIDTH:
        seen = bytearray(size)
        for x in range(size):
            y = p(x)
            if not 0 <= y < size or seen[y]:
                raise ValueError(f"permutation is not a bijection (image {y} of {x})")
            seen[y] = 1
        return
    rng = rng or np.random.default_rng(0)
    samples = [_random_key(rng, m) for _ in range(SPOT_CHECK_SAMPLES)]
    images: dict[int, int] = {}
    inverse = getattr(p, "inverse", None)
    for x in samples:
        y = p(x)
        if not 0 <= y < size:
            raise ValueError(f"image {y} of {x} outside the register")
        if images.setdefault(y, x) != x:
            raise ValueError(f"permutation maps {images[y]} and {x} to {y}")
        if inverse is not None and inverse(y) != x:
            raise ValueError(f"inverse round trip fails at {x}")


def apply_basis_permutation(state: QuantumState, p: Callable[[int], int]) -> QuantumState:
    """Move the amplitude of each basis key ``x`` to ``p(x)``."""
    m = state.layout.total
    if not getattr(p, "bijective_by_construction", False):
        try:
            _verify_bijection_cached(p, m)
        except TypeError:  # unhashable callable
            verify_bijection(p, m)
    new: dict[int, complex] = {}
    for key, amp in state.amplitudes.items():
        image = p(key)
        if image in new:
            raise ValueError(f"permutation is not injective on the state support (image {image})")
        new[image] = amp
    return QuantumState(state.layout, new)


def permutation_matrix(p: Callable[[int], int], m: int) -> DenseUnitary:
    size = 1 << m
    mat = np.zeros((size, size))
    for x in range(size):
        mat[p(x), x] = 1.0
    return DenseUnitary(mat)


def measure_marginal(state: QuantumState, qubits: Iterable[int]) -> dict[str, float]:
    """Outcome distribution of measuring ``qubits`` (keys are bit-strings in that order)."""
    qubits = list(qubits)
    m = state.layout.total
    _check_targets(qubits, m)
    shifts = [m - 1 - q for q in qubits]
    probs: dict[int, list[float]] = {}
    for key, amp in state.amplitudes.items():
        outcome = 0
        for s in shifts:
            outcome = (outcome << 1) | ((key >> s) & 1)
        probs.setdefault(outcome, []).append(abs(amp) ** 2)
    width = len(qubits)
    return {
        format(o, f"0{width}b") if width else "": math.fsum(ps)
        for o, ps in sorted(probs.items())
    }
