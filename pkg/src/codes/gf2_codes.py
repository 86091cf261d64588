# src/codes/gf2_codes.py
"""
Binary linear codes over GF(2).

Words are numpy uint8 vectors; syndromes are computed on words packed into
ints, one AND and popcount per check. Positions are 0-based throughout this
module; the protocol layer converts them to 1-based node ids.
"""
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.utils.errors import AmbiguousErasure, ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)

CORRECTED = "corrected"
UNCORRECTABLE = "detected-uncorrectable"
UNCORRECTABLE_LEVEL1 = "uncorrectable-level1"
UNCORRECTABLE_LEVEL2 = "uncorrectable-level2"

# Above this length syndrome tables are not precomputed.
SYNDROME_TABLE_MAX_N = 15
BRUTE_FORCE_MAX_K = 16


def as_bits(word: Iterable[int]) -> np.ndarray:
    """Coerce a 0/1 sequence (or '0101' string) to a uint8 vector."""
    if isinstance(word, str):
        return np.array([int(ch) for ch in word.strip()], dtype=np.uint8)
    return np.asarray(word, dtype=np.int64).astype(np.uint8) & 1


def as_matrix(rows, n: Optional[int] = None) -> np.ndarray:
    m = np.asarray(rows, dtype=np.int64).astype(np.uint8) & 1
    if m.size == 0:
        return np.zeros((0, n if n is not None else 0), dtype=np.uint8)
    return np.atleast_2d(m)


def pack(bits: np.ndarray) -> int:
    """Pack a bit vector into an int key (bit 0 first)."""
    key = 0
    for i in np.flatnonzero(bits):
        key |= 1 << int(i)
    return key


def parity(word: int) -> int:
    return bin(word).count("1") & 1


def gf2_rref(matrix: np.ndarray) -> Tuple[np.ndarray, list]:
    """Reduced row echelon form over GF(2). Returns (rref, pivot columns)."""
    m = as_matrix(matrix).copy()
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hits = np.flatnonzero(m[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.flatnonzero(m[:, c])
        others = others[others != r]
        m[others] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def gf2_rank(matrix: np.ndarray) -> int:
    if np.asarray(matrix).size == 0:
        return 0
    return len(gf2_rref(matrix)[1])


def gf2_nullspace(matrix: np.ndarray, n: Optional[int] = None) -> np.ndarray:
    """Basis (as rows) of {x : matrix · x = 0}."""
    m = as_matrix(matrix, n)
    cols = m.shape[1] if m.size else (n or 0)
    if m.shape[0] == 0:
        return np.eye(cols, dtype=np.uint8)
    rref, pivots = gf2_rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.uint8)
        v[f] = 1
        for row, p in enumerate(pivots):
            v[p] = rref[row, f]
        basis.append(v)
    if not basis:
        return np.zeros((0, cols), dtype=np.uint8)
    return np.array(basis, dtype=np.uint8)


def gf2_solve(a: np.ndarray, b: np.ndarray) -> Tuple[Optional[np.ndarray], np.ndarray]:
    """
    Solves a · x = b over GF(2).

    Returns:
        (particular solution or None, nullspace basis of a)
    """
    a = as_matrix(a)
    b = as_bits(b)
    cols = a.shape[1]
    aug = np.concatenate([a, b.reshape(-1, 1)], axis=1)
    rref, pivots = gf2_rref(aug)
    if cols in pivots:
        return None, gf2_nullspace(a, cols)
    x = np.zeros(cols, dtype=np.uint8)
    for row, p in enumerate(pivots):
        x[p] = rref[row, cols]
    return x, gf2_nullspace(a, cols)


def row_space_contains(outer: np.ndarray, inner: np.ndarray) -> bool:
    """True iff every row of `inner` lies in the row space of `outer`."""
    inner = as_matrix(inner)
    if inner.shape[0] == 0:
        return True
    outer = as_matrix(outer, inner.shape[1])
    return gf2_rank(np.concatenate([outer, inner])) == gf2_rank(outer)


def span(rows: np.ndarray) -> np.ndarray:
    """All 2^k combinations of the given rows."""
    rows = as_matrix(rows)
    k, n = rows.shape
    if k > BRUTE_FORCE_MAX_K + 4:
        raise ConfigError(f"refusing to enumerate a span of dimension {k}")
    coeffs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8).reshape(-1, k)
    return (coeffs.astype(np.int64) @ rows.astype(np.int64) % 2).astype(np.uint8)


class DecodeResult(NamedTuple):
    codeword: np.ndarray
    errors: Tuple[int, ...]
    status: str

    @property
    def corrected(self) -> bool:
        return self.status == CORRECTED


class DoubleDecodeResult(NamedTuple):
    value: Optional[int]
    block_errors: Dict[int, Tuple[int, ...]]
    first_level_errors: Tuple[int, ...]
    status: str
    uncorrectable_blocks: Tuple[int, ...] = ()

    @property
    def corrected(self) -> bool:
        return self.status == CORRECTED


@dataclass(frozen=True, eq=False)
class BinaryCode:
    """
    A binary linear [n, k, dist] code given by generator and parity-check matrices.

    Construction validates G·Hᵀ = 0, the ranks of both matrices, and (for
    n ≤ 16) a declared distance against the minimum nonzero codeword weight.
    """
    generator: np.ndarray
    parity_check: np.ndarray
    dist: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        g = as_matrix(self.generator)
        n = g.shape[1] if g.size else as_matrix(self.parity_check).shape[1]
        h = as_matrix(self.parity_check, n)
        object.__setattr__(self, "generator", g if g.size else np.zeros((0, n), dtype=np.uint8))
        object.__setattr__(self, "parity_check", h)
        g = self.generator
        if h.shape[1] != n:
            raise ConfigError(f"{self.name or 'code'}: G has {n} columns but H has {h.shape[1]}")
        if g.shape[0] and h.shape[0] and np.any(g.astype(np.int64) @ h.T.astype(np.int64) % 2):
            raise ConfigError(f"{self.name or 'code'}: G·Hᵀ != 0 over GF(2)")
        if gf2_rank(g) != g.shape[0]:
            raise ConfigError(f"{self.name or 'code'}: generator rows are dependent")
        if gf2_rank(h) != n - g.shape[0]:
            raise ConfigError(f"{self.name or 'code'}: rank(H) != n - k")
        if self.dist is not None and n <= 16:
            measured = self.min_weight
            if measured != self.dist:
                raise ConfigError(f"{self.name or 'code'}: declared distance {self.dist}, measured {measured}")

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @cached_property
    def codewords(self) -> np.ndarray:
        return span(self.generator) if self.k else np.zeros((1, self.n), dtype=np.uint8)

    @cached_property
    def min_weight(self) -> Optional[int]:
        weights = self.codewords.sum(axis=1)
        nonzero = weights[weights > 0]
        return int(nonzero.min()) if nonzero.size else None

    @property
    def distance(self) -> Optional[int]:
        return self.dist if self.dist is not None else self.min_weight

    @property
    def t(self) -> int:
        d = self.distance
        return (d - 1) // 2 if d else 0

    @cached_property
    def packed_checks(self) -> Tuple[int, ...]:
        return tuple(pack(row) for row in self.parity_check)

    def syndrome_key(self, word) -> int:
        """The syndrome of `word`, packed like `pack`."""
        w = pack(as_bits(word))
        return sum(parity(row & w) << i for i, row in enumerate(self.packed_checks))

    def syndrome(self, word) -> np.ndarray:
        w = pack(as_bits(word))
        return np.array([parity(row & w) for row in self.packed_checks], dtype=np.uint8)

    def contains(self, word) -> bool:
        return not self.syndrome(word).any()

    @cached_property
    def syndrome_table(self) -> Dict[int, np.ndarray]:
        """Maps packed syndromes to the unique error of weight ≤ t producing them."""
        table: Dict[int, np.ndarray] = {}
        for weight in range(1, self.t + 1):
            for support in itertools.combinations(range(self.n), weight):
                e = np.zeros(self.n, dtype=np.uint8)
                e[list(support)] = 1
                table.setdefault(self.syndrome_key(e), e)
        return table

    def __repr__(self) -> str:
        return f"BinaryCode({self.name or 'unnamed'} [{self.n},{self.k},{self.distance}])"


def from_generator(generator, dist: Optional[int] = None, name: str = "") -> BinaryCode:
    g = as_matrix(generator)
    return BinaryCode(generator=g, parity_check=gf2_nullspace(g), dist=dist, name=name)


def from_parity_check(parity_check, n: Optional[int] = None, dist: Optional[int] = None, name: str = "") -> BinaryCode:
    h = as_matrix(parity_check, n)
    return BinaryCode(generator=gf2_nullspace(h, h.shape[1]), parity_check=h, dist=dist, name=name)


def hamming_code(r: int = 3) -> BinaryCode:
    """Hamming [2^r−1, 2^r−1−r, 3]; column i of H is i written in binary (MSB in row 0)."""
    n = 2 ** r - 1
    h = np.array([[(col >> (r - 1 - row)) & 1 for col in range(1, n + 1)] for row in range(r)], dtype=np.uint8)
    return from_parity_check(h, dist=3, name=f"hamming[{n},{n - r}]")


def repetition_code(n: int) -> BinaryCode:
    return from_generator(np.ones((1, n), dtype=np.uint8), dist=n, name=f"repetition[{n},1]")


def even_weight_code(n: int) -> BinaryCode:
    return from_parity_check(np.ones((1, n), dtype=np.uint8), dist=2 if n > 1 else None, name=f"even-weight[{n},{n - 1}]")


def full_space_code(n: int) -> BinaryCode:
    return BinaryCode(generator=np.eye(n, dtype=np.uint8), parity_check=np.zeros((0, n), dtype=np.uint8),
                      dist=1, name=f"full[{n},{n}]")


def dual(code: BinaryCode) -> BinaryCode:
    """The dual code: generator = H of the input, parity check = G of the input."""
    return BinaryCode(generator=code.parity_check, parity_check=code.generator, name=f"dual({code.name})")


def syndrome_decode(code: BinaryCode, word) -> DecodeResult:
    """
    Bounded-distance decoding: corrects up to t flips, otherwise reports the
    word as detected-uncorrectable without guessing.
    """
    w = as_bits(word)
    if w.shape[0] != code.n:
        raise ValueError(f"word of length {w.shape[0]} for a code of length {code.n}")
    s = code.syndrome(w)
    if not s.any():
        return DecodeResult(w, (), CORRECTED)
    e = error_from_syndrome(code, s)
    if e is None:
        return DecodeResult(w, (), UNCORRECTABLE)
    return DecodeResult(w ^ e, tuple(int(i) for i in np.flatnonzero(e)), CORRECTED)


def error_from_syndrome(code: BinaryCode, s) -> Optional[np.ndarray]:
    """The unique error of weight ≤ t with syndrome `s`, or None."""
    s = as_bits(s)
    if not s.any():
        return np.zeros(code.n, dtype=np.uint8)
    if code.n <= SYNDROME_TABLE_MAX_N:
        return code.syndrome_table.get(pack(s))
    return _search_error(code, s)


def _search_error(code: BinaryCode, s: np.ndarray) -> Optional[np.ndarray]:
    h = code.parity_check
    for weight in range(1, code.t + 1):
        for support in itertools.combinations(range(code.n), weight):
            if np.array_equal(h[:, list(support)].sum(axis=1) % 2, s):
                e = np.zeros(code.n, dtype=np.uint8)
                e[list(support)] = 1
                return e
    return None


def erasure_decode(code: BinaryCode, word: Sequence, erased: Optional[Iterable[int]] = None) -> DecodeResult:
    """
    Recovers the codeword agreeing with every unerased position.

    Erased positions are given explicitly or marked by negative entries (or
    None) in `word`.

    Raises:
        AmbiguousErasure: if more than one codeword matches.
    """
    raw = [(-1 if v is None else int(v)) for v in word]
    marks = {i for i, v in enumerate(raw) if v < 0}
    erased_set = sorted(marks | set(erased or ()))
    w = np.array([max(v, 0) for v in raw], dtype=np.uint8)
    if not erased_set:
        status = CORRECTED if code.contains(w) else UNCORRECTABLE
        return DecodeResult(w, (), status)
    kept = [i for i in range(code.n) if i not in erased_set]
    h = code.parity_check
    rhs = (h[:, kept].astype(np.int64) @ w[kept].astype(np.int64) % 2).astype(np.uint8)
    x, null = gf2_solve(h[:, erased_set], rhs)
    if x is None:
        return DecodeResult(w, (), UNCORRECTABLE)
    if null.shape[0] > 0:
        raise AmbiguousErasure(
            f"{len(erased_set)} erasures at {erased_set} leave {2 ** null.shape[0]} consistent codewords")
    out = w.copy()
    out[erased_set] = x
    return DecodeResult(out, (), CORRECTED)


def readout_bit(word: np.ndarray, readout: np.ndarray) -> int:
    return int(np.dot(word.astype(np.int64), readout.astype(np.int64)) % 2)


def double_decode(code: BinaryCode, words, readout=None) -> DoubleDecodeResult:
    """
    Two-level classical decode of n blocks of n bits.

    Each block is decoded and read out to a bit through the `readout`
    functional (all-ones by default, which is the parity read-out of the
    Hamming family); the n bits are then decoded as one outer word.
    """
    blocks = as_matrix(words)
    if blocks.shape != (code.n, code.n):
        raise ValueError(f"expected {code.n} blocks of {code.n} bits, got shape {blocks.shape}")
    r = as_bits(readout) if readout is not None else np.ones(code.n, dtype=np.uint8)
    bits = np.zeros(code.n, dtype=np.uint8)
    block_errors: Dict[int, Tuple[int, ...]] = {}
    bad_blocks = []
    for j in range(code.n):
        inner = syndrome_decode(code, blocks[j])
        if inner.corrected:
            if inner.errors:
                block_errors[j] = inner.errors
            bits[j] = readout_bit(inner.codeword, r)
        else:
            bad_blocks.append(j)
            bits[j] = readout_bit(blocks[j], r)
    outer = syndrome_decode(code, bits)
    if not outer.corrected:
        return DoubleDecodeResult(None, block_errors, (), UNCORRECTABLE_LEVEL1, tuple(bad_blocks))
    status = UNCORRECTABLE_LEVEL2 if bad_blocks else CORRECTED
    return DoubleDecodeResult(readout_bit(outer.codeword, r), block_errors, outer.errors, status, tuple(bad_blocks))


def encode_twice(code: BinaryCode, bit: int, rng: Optional[np.random.Generator] = None, readout=None) -> np.ndarray:
    """A two-level classical encoding of `bit`: an outer codeword whose entries are re-encoded per block."""
    r = as_bits(readout) if readout is not None else np.ones(code.n, dtype=np.uint8)
    by_bit = {b: code.codewords[(code.codewords.astype(np.int64) @ r.astype(np.int64)) % 2 == b] for b in (0, 1)}

    def pick(b: int) -> np.ndarray:
        pool = by_bit[b]
        return pool[0] if rng is None else pool[rng.integers(len(pool))]

    outer = pick(bit)
    return np.array([pick(int(b)) for b in outer], dtype=np.uint8)


def parse_code_text(text: str, name: str = "file-code") -> BinaryCode:
    """
    Reads the text format: a line `n k d` followed by k generator rows of 0/1 characters.
    Blank lines and '#' comments are ignored.
    """
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ConfigError("empty code description")
    try:
        n, k, d = (int(tok) for tok in lines[0].split())
    except ValueError as e:
        raise ConfigError(f"bad code header {lines[0]!r}: expected 'n k d'") from e
    rows = lines[1:]
    if len(rows) != k or any(len(row) != n or set(row) - {"0", "1"} for row in rows):
        raise ConfigError(f"expected {k} generator rows of {n} bits")
    return from_generator([as_bits(row) for row in rows], dist=d, name=name)


def load_code_file(path: str) -> BinaryCode:
    with open(path, "r") as f:
        code = parse_code_text(f.read(), name=path)
    logger.info(f"Loaded classical code {code!r} from {path}")
    return code
