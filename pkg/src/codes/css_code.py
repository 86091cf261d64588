# src/codes/css_code.py
"""
CSS quantum codes built from two classical codes V and W with V* ⊆ W.

Conventions used across the simulator:
- Z-type stabilizers are the rows of H_V (they span V*); standard-basis
  measurement of a code state yields a codeword of V.
- X-type stabilizers are the rows of H_W (they span W*); Fourier-basis
  measurement yields a codeword of W.
- Logical X̄ has support x̄ ∈ V \\ W*, logical Z̄ has support z̄ ∈ W \\ V*,
  with x̄·z̄ = 1. A standard-basis word c ∈ V reads out to z̄·c and a
  Fourier-basis word reads out to x̄·c.
"""
import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from src.codes.gf2_codes import (
    BinaryCode,
    CORRECTED,
    as_bits,
    as_matrix,
    erasure_decode,
    gf2_rank,
    gf2_rref,
    gf2_solve,
    hamming_code,
    row_space_contains,
    span,
    syndrome_decode,
)
from src.utils.errors import AmbiguousErasure, ConfigError, DualContainmentViolated, TooManyErrors
from src.utils.logger import get_logger

logger = get_logger(__name__)

CLIFFORD_GATES = ("H", "P", "PDG", "X", "Z", "CNOT", "XPDG")
MEASUREMENTS = ("MeasZ", "MeasX")
NON_TRANSVERSAL = ("T", "C-G")


def _in_dual(code: BinaryCode, word: np.ndarray) -> bool:
    """word ∈ code* ⟺ G·word = 0."""
    if code.k == 0:
        return True
    return not np.any(code.generator.astype(np.int64) @ word.astype(np.int64) % 2)


def _extend_basis(base: np.ndarray, candidates: np.ndarray) -> List[np.ndarray]:
    """Rows of `candidates` that extend the row space of `base`, greedily."""
    picked: List[np.ndarray] = []
    current = base
    for row in candidates:
        trial = np.concatenate([current, row.reshape(1, -1)]) if current.size else row.reshape(1, -1)
        if gf2_rank(trial) > (gf2_rank(current) if current.size else 0):
            picked.append(row.copy())
            current = trial
    return picked


def _gf2_inverse(m: np.ndarray) -> np.ndarray:
    k = m.shape[0]
    cols = []
    for i in range(k):
        e = np.zeros(k, dtype=np.uint8)
        e[i] = 1
        x, _ = gf2_solve(m, e)
        if x is None:
            raise ConfigError("logical pairing matrix is singular")
        cols.append(x)
    return np.array(cols, dtype=np.uint8).T


@dataclass(frozen=True, eq=False)
class CssCode:
    """
    The CSS code CSS(V, W). Construction fails with DualContainmentViolated
    unless V* ⊆ W; every other invariant is derived and checked here.
    """
    v: BinaryCode
    w: BinaryCode
    name: str = ""

    def __post_init__(self):
        if self.v.n != self.w.n:
            raise ConfigError(f"V has length {self.v.n} but W has length {self.w.n}")
        if not row_space_contains(self.w.generator, self.v.parity_check):
            raise DualContainmentViolated(f"{self.name or 'css'}: V* is not contained in W")
        if self.k < 1:
            raise ConfigError(f"{self.name or 'css'}: code encodes no logical qubit")
        overlap = self.x_stabilizers.astype(np.int64) @ self.z_stabilizers.T.astype(np.int64) % 2
        if overlap.size and overlap.any():
            raise DualContainmentViolated(f"{self.name or 'css'}: X and Z stabilizers do not commute")

    @property
    def n(self) -> int:
        return self.v.n

    @property
    def k(self) -> int:
        return self.v.k + self.w.k - self.n

    @property
    def x_stabilizers(self) -> np.ndarray:
        return self.w.parity_check

    @property
    def z_stabilizers(self) -> np.ndarray:
        return self.v.parity_check

    @cached_property
    def _logical_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        xs = _extend_basis(self.w.parity_check, self.v.generator)
        zs = _extend_basis(self.v.parity_check, self.w.generator)
        x = np.array(xs, dtype=np.uint8)
        z = np.array(zs, dtype=np.uint8)
        pairing = x.astype(np.int64) @ z.T.astype(np.int64) % 2
        z = (_gf2_inverse(pairing.astype(np.uint8)).T.astype(np.int64) @ z.astype(np.int64) % 2).astype(np.uint8)
        x = np.array([self._min_weight_rep(row, self.w.parity_check) for row in x], dtype=np.uint8)
        z = np.array([self._min_weight_rep(row, self.v.parity_check) for row in z], dtype=np.uint8)
        return x, z

    @staticmethod
    def _min_weight_rep(rep: np.ndarray, stabilizers: np.ndarray) -> np.ndarray:
        coset = span(stabilizers) ^ rep if stabilizers.size else rep.reshape(1, -1)
        weights = coset.sum(axis=1)
        return coset[int(np.argmin(weights))]

    @property
    def logical_x(self) -> np.ndarray:
        return self._logical_pairs[0]

    @property
    def logical_z(self) -> np.ndarray:
        return self._logical_pairs[1]

    @property
    def x_bar(self) -> np.ndarray:
        return self.logical_x[0]

    @property
    def z_bar(self) -> np.ndarray:
        return self.logical_z[0]

    @cached_property
    def d(self) -> int:
        candidates = []
        for word in self.v.codewords:
            if word.any() and not _in_dual(self.w, word):
                candidates.append(int(word.sum()))
        for word in self.w.codewords:
            if word.any() and not _in_dual(self.v, word):
                candidates.append(int(word.sum()))
        return min(candidates)

    @property
    def t(self) -> int:
        return (self.d - 1) // 2

    @cached_property
    def transversal_clifford(self) -> bool:
        return check_transversal_cliffords(self).ok

    @property
    def phase_sign(self) -> int:
        """+1 if transversal P realizes logical P, −1 if it realizes logical P†."""
        return 1 if int(self.x_bar.sum()) % 4 == 1 else -1

    def physical_phase_gate(self, logical: str, depth: int) -> str:
        """The per-qubit gate whose transversal application at encoding depth `depth` realizes `logical` (P or PDG)."""
        flip = self.phase_sign ** depth == -1
        if logical == "P":
            return "PDG" if flip else "P"
        if logical == "PDG":
            return "P" if flip else "PDG"
        raise ValueError(f"{logical} is not a phase gate")

    @cached_property
    def z_words(self) -> Tuple[np.ndarray, np.ndarray]:
        """Standard-basis outcomes of |0̄⟩ and |1̄⟩: the V codewords split by z̄ read-out."""
        return _split_by_readout(self.v.codewords, self.z_bar)

    @cached_property
    def x_words(self) -> Tuple[np.ndarray, np.ndarray]:
        """Fourier-basis outcomes of |+̄⟩ and |−̄⟩: the W codewords split by x̄ read-out."""
        return _split_by_readout(self.w.codewords, self.x_bar)

    @cached_property
    def encoding(self) -> "EncodingCircuit":
        return encoding_circuit(self)

    def __repr__(self) -> str:
        return f"CssCode({self.name or 'unnamed'} [[{self.n},{self.k},{self.d}]])"


def _split_by_readout(words: np.ndarray, readout: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    bits = words.astype(np.int64) @ readout.astype(np.int64) % 2
    return words[bits == 0], words[bits == 1]


def build_css(v: BinaryCode, w: BinaryCode, name: str = "") -> CssCode:
    code = CssCode(v=v, w=w, name=name or f"css({v.name},{w.name})")
    logger.info(f"Built {code!r}, t={code.t}, transversal_clifford={code.transversal_clifford}")
    return code


def steane_code() -> CssCode:
    hamming = hamming_code(3)
    return build_css(hamming, hamming, name="steane")


class TransversalityReport(NamedTuple):
    ok: bool
    reasons: List[str]
    stabilizer_weights: List[int]
    logical_x_weight: int
    logical_z_weight: int
    logical_x_weights_mod4: List[int]
    logical_z_weights_mod4: List[int]


def check_transversal_cliffords(code: CssCode) -> TransversalityReport:
    """
    Checks that V = W and that stabilizer generators have weight ≡ 0 mod 4
    while the minimum-weight logical representatives have weight ≡ 1 or 3
    mod 4. The weight classes of every representative are reported too.
    """
    reasons: List[str] = []
    same = row_space_contains(code.v.generator, code.w.generator) and code.v.k == code.w.k
    if not same:
        reasons.append("property 1: V != W")
    if code.k != 1:
        reasons.append(f"encodes {code.k} logical qubits, not one")
    stabilizers = np.concatenate([code.x_stabilizers, code.z_stabilizers]) if code.x_stabilizers.size else code.z_stabilizers
    weights = [int(row.sum()) for row in stabilizers]
    for weight in sorted(set(weights)):
        if weight % 4 != 0:
            reasons.append(f"stabilizer weight {weight} ≢ 0 mod 4")
    x_weight, z_weight = int(code.x_bar.sum()), int(code.z_bar.sum())
    if x_weight % 4 not in (1, 3):
        reasons.append(f"logical X weight {x_weight} ≢ 1, 3 mod 4")
    if z_weight % 4 not in (1, 3):
        reasons.append(f"logical Z weight {z_weight} ≢ 1, 3 mod 4")
    x_classes = sorted({int(r.sum()) % 4 for r in (span(code.w.parity_check) ^ code.x_bar)}) if code.w.parity_check.size else [x_weight % 4]
    z_classes = sorted({int(r.sum()) % 4 for r in (span(code.v.parity_check) ^ code.z_bar)}) if code.v.parity_check.size else [z_weight % 4]
    return TransversalityReport(not reasons, reasons, weights, x_weight, z_weight, x_classes, z_classes)


class LogicalGate(NamedTuple):
    name: str
    transversal: bool
    realization: Tuple[str, ...]


def logical_gate(code: CssCode, name: str, depth: int = 1) -> LogicalGate:
    """
    Describes how a logical gate is realized on an encoding of the given
    depth: a tuple of per-qubit gates for transversal gates, or the name of
    the subprotocol for the rest.
    """
    if name in ("P", "PDG"):
        return LogicalGate(name, True, (code.physical_phase_gate(name, depth),))
    if name == "XPDG":
        return LogicalGate(name, True, ("X", code.physical_phase_gate("PDG", depth)))
    if name in ("H", "X", "Z", "CNOT"):
        return LogicalGate(name, True, (name,))
    if name == "MeasZ":
        return LogicalGate(name, True, ("MZ",))
    if name == "MeasX":
        return LogicalGate(name, True, ("H", "MZ"))
    if name == "T":
        return LogicalGate(name, False, ("gate-teleport",))
    if name == "C-G":
        return LogicalGate(name, False, ("ideal-logical",))
    raise ValueError(f"unknown logical gate {name}")


class EncodingCircuit(NamedTuple):
    n: int
    input_index: int
    gates: Tuple[Tuple, ...]

    def inverse(self) -> Tuple[Tuple, ...]:
        return tuple(reversed(self.gates))


def encoding_circuit(code: CssCode) -> EncodingCircuit:
    """
    Clifford encoder mapping |ψ⟩ on `input_index` plus |0⟩ on the other
    n−1 wires to the logical |ψ̄⟩.

    The X-stabilizer generators are brought to reduced row echelon form;
    x̄ is reduced against them so it vanishes on the pivots, the input is
    fanned out over x̄, and each pivot is put in |+⟩ and fanned out over its
    generator.
    """

    if code.k != 1:
        raise ConfigError(f"encoding circuits are synthesized for one logical qubit, code has k={code.k}")
    stabilizers = code.x_stabilizers
    if stabilizers.size:
        rref, pivots = gf2_rref(stabilizers)
        rref = rref[: len(pivots)]
    else:
        rref, pivots = np.zeros((0, code.n), dtype=np.uint8), []
    x = code.x_bar.copy()
    for row, p in zip(rref, pivots):
        if x[p]:
            x ^= row
    support = [int(i) for i in np.flatnonzero(x)]
    q = support[0]
    gates: List[Tuple] = [("CNOT", q, u) for u in support if u != q]
    for row, p in zip(rref, pivots):
        gates.append(("H", p))
        gates.extend(("CNOT", p, int(u)) for u in np.flatnonzero(row) if u != p)
    return EncodingCircuit(code.n, q, tuple(gates))


class ErrorReport(NamedTuple):
    x_errors: Tuple[int, ...]
    z_errors: Tuple[int, ...]
    logical_x: int
    logical_z: int
    status: str

    @property
    def positions(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.x_errors) | set(self.z_errors)))


def decode_pauli_frame(code: CssCode, x_bits, z_bits) -> ErrorReport:
    """
    Syndrome-decodes a known Pauli frame. X errors are seen by the Z
    stabilizers (classical code V), Z errors by the X stabilizers (W). The
    residual after correction is a codeword; its read-out is the logical
    error left behind.

    Raises:
        TooManyErrors: if either part is beyond bounded-distance decoding.
    """
    fx, fz = as_bits(x_bits), as_bits(z_bits)
    dx = syndrome_decode(code.v, fx)
    dz = syndrome_decode(code.w, fz)
    if not (dx.corrected and dz.corrected):
        raise TooManyErrors("block carries more errors than the code corrects",
                            positions=set(np.flatnonzero(fx)) | set(np.flatnonzero(fz)))
    residual_x = _residual(fx, dx.errors)
    residual_z = _residual(fz, dz.errors)
    return ErrorReport(dx.errors, dz.errors,
                       int(residual_x @ code.z_bar.astype(np.int64) % 2),
                       int(residual_z @ code.x_bar.astype(np.int64) % 2),
                       CORRECTED)


def _residual(frame: np.ndarray, corrected: Tuple[int, ...]) -> np.ndarray:
    out = frame.astype(np.int64).copy()
    for i in corrected:
        out[i] ^= 1
    return out


def erasure_pauli_frame(code: CssCode, x_bits, z_bits, erased) -> ErrorReport:
    """
    Recovery from the unerased positions of a known Pauli frame: the
    residual is the unique codeword agreeing with the frame off the erasure.

    Raises:
        AmbiguousErasure: too many erasures for a unique completion.
        TooManyErrors: the unerased frame is not extendable to a codeword.
    """
    erased = sorted(set(int(i) for i in erased))
    fx, fz = as_bits(x_bits), as_bits(z_bits)
    parts = []
    for classical, frame, readout in ((code.v, fx, code.z_bar), (code.w, fz, code.x_bar)):
        marked = [(-1 if i in erased else int(b)) for i, b in enumerate(frame)]
        result = erasure_decode(classical, marked)
        if not result.corrected:
            raise TooManyErrors("surviving shares are inconsistent with any codeword",
                                positions=[i for i in range(code.n) if i not in erased and frame[i]])
        residual = result.codeword.astype(np.int64)
        flips = tuple(i for i in range(code.n) if i not in erased and frame[i])
        parts.append((flips, int(residual @ readout.astype(np.int64) % 2)))
    (x_err, lx), (z_err, lz) = parts
    return ErrorReport(x_err, z_err, lx, lz, CORRECTED)


def correct_and_decode(code: CssCode, block, mode: str = "syndrome", erased=None):
    """
    Corrects and decodes one encoded block held by a backend engine.

    `block` is a (engine, wire) pair or an object with those attributes; the
    engine performs syndrome (or erasure) recovery on the wire's outer level
    and returns (single-qubit density matrix, ErrorReport).

    Raises:
        TooManyErrors: more errors than the code corrects.
        AmbiguousErasure: more erasures than the distance allows.
    """
    engine, wire = block if isinstance(block, tuple) else (block.engine, block.wire)
    if engine.code is not code:
        raise ConfigError("block was encoded with a different code")
    if mode == "syndrome":
        return engine.recover_outer(wire, erased=())
    if mode == "erasure":
        return engine.recover_outer(wire, erased=tuple(erased or ()))
    raise ValueError(f"unknown decode mode {mode}")


def erasure_recover(code: CssCode, block, kept) -> Tuple[np.ndarray, ErrorReport]:
    """Recovers the logical qubit from the shares at positions `kept`; the rest are treated as erased."""
    kept = set(int(i) for i in kept)
    erased = [i for i in range(code.n) if i not in kept]
    if len(erased) > code.d - 1:
        raise AmbiguousErasure(f"{len(erased)} erasures exceed d−1 = {code.d - 1}")
    return correct_and_decode(code, block, mode="erasure", erased=erased)
