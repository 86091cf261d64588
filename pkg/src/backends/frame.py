# src/backends/frame.py
"""
Logical-state plus Pauli-frame engine.

The physical state of a wire is always F·Enc(ψ): a perfect encoding of the
logical register ψ with a Pauli F on top. Only ψ (one qubit per wire, on a
StatevectorRegister) and the X/Z bits of F are stored, which keeps two-level
runs cheap. Phases of F are dropped; protocol decisions only read
measurement bits and decode reports.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.backends.engines import Address, ShareEngine, pauli_bits
from src.backends.statevector import StatevectorRegister
from src.codes.css_code import CssCode, ErrorReport, decode_pauli_frame, erasure_pauli_frame
from src.utils.errors import ConfigError, UnsupportedFramePropagation, UnsupportedGate
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class _FrameWire:
    logical: int
    x: np.ndarray
    z: np.ndarray
    outer_x: np.ndarray
    outer_z: np.ndarray
    encoded: set
    decoded: set


class FrameEngine(ShareEngine):
    """
    Measurement at one level samples each physical bit in index order from
    its exact conditional distribution, one uniform draw per qubit, so runs
    match the statevector engine bit for bit under a shared seed. At two
    levels the logical outcome is drawn first and the codewords below it are
    then picked uniformly.
    """
    kind = "frame"

    def __init__(self, code: CssCode, levels: int, rng: Optional[np.random.Generator] = None):
        super().__init__(code, levels, rng)
        self.register = StatevectorRegister(self.rng, capacity=max(code.n, 22))
        self._wires: Dict[int, _FrameWire] = {}

    def _zeros(self, shape) -> np.ndarray:
        return np.zeros(shape, dtype=np.uint8)

    def new_joint_wires(self, state: np.ndarray) -> List[int]:
        ids = []
        for q in self.register.allocate_joint(state):
            w = self._wire_id()
            self._wires[w] = _FrameWire(q, self._zeros((self.blocks, self.n)), self._zeros((self.blocks, self.n)),
                                        self._zeros(self.n), self._zeros(self.n), set(), set())
            ids.append(w)
        return ids

    def wire(self, wire: int) -> _FrameWire:
        return self._wires[wire]

    def encode_outer(self, wire: int) -> None:
        pass

    def encode_block(self, wire: int, block: int) -> None:
        w = self._wires[wire]
        if w.outer_x[block]:
            w.x[block] ^= self.code.x_bar
        if w.outer_z[block]:
            w.z[block] ^= self.code.z_bar
        w.outer_x[block] = w.outer_z[block] = 0
        w.encoded.add(block)

    def inject(self, wire: int, address: Address, pauli: str) -> None:
        bx, bz = pauli_bits(pauli)
        w = self._wires[wire]
        if self.levels == 2 and address.level == 1:
            if address.position in w.encoded:
                if bx:
                    w.x[address.position] ^= self.code.x_bar
                if bz:
                    w.z[address.position] ^= self.code.z_bar
            else:
                w.outer_x[address.position] ^= bx
                w.outer_z[address.position] ^= bz
            return
        row = address.block if self.levels == 2 else 0
        w.x[row, address.position] ^= bx
        w.z[row, address.position] ^= bz

    def apply_logical(self, gate: str, wires: Sequence[int]) -> None:
        ws = [self._wires[x] for x in wires]
        if gate in ("X", "Z"):
            self.register.apply(gate, [ws[0].logical])
        elif gate == "H":
            self.register.apply("H", [ws[0].logical])
            ws[0].x, ws[0].z = ws[0].z, ws[0].x
        elif gate in ("P", "PDG", "XPDG"):
            self.register.apply(gate, [ws[0].logical])
            ws[0].z ^= ws[0].x
        elif gate == "CNOT":
            c, t = ws
            self.register.apply("CNOT", [c.logical, t.logical])
            t.x ^= c.x
            c.z ^= t.z
        elif gate == "C-G":
            c, t = ws
            if c.x.any() or t.x.any():
                raise UnsupportedFramePropagation(
                    f"C-G with X-type frame on {int(c.x.sum())} control and {int(t.x.sum())} target shares "
                    "leaves the Pauli group")
            self.register.apply("C-G", [c.logical, t.logical])
            c.z ^= t.z
        else:
            raise UnsupportedGate(f"{gate} has no transversal realization")

    def _words(self, basis: str) -> Tuple[np.ndarray, np.ndarray]:
        if basis == "Z":
            return self.code.z_words
        if basis == "X":
            return self.code.x_words
        raise ValueError(f"unknown basis {basis}")

    def measure_wire(self, wire: int, basis: str = "Z") -> np.ndarray:
        w = self._wires.pop(wire)
        frame = w.x if basis == "Z" else w.z
        if basis == "X":
            self.register.apply("H", [w.logical])
        words = self._words(basis)
        if self.levels == 1:
            bits, b = self._sample_sequential(w.logical, words, frame[0])
            bits = bits.reshape(1, -1)
        else:
            bits, b = self._sample_two_level(w.logical, words, frame)
        self.register.project(w.logical, b)
        self.register.release(w.logical)
        return bits

    def _sample_sequential(self, q: int, words, frame: np.ndarray) -> Tuple[np.ndarray, int]:
        p1 = self.register.prob_one(q)
        zeros, ones = words
        candidates = np.concatenate([zeros, ones]) ^ frame
        labels = np.concatenate([np.zeros(len(zeros), dtype=np.uint8), np.ones(len(ones), dtype=np.uint8)])
        weights = np.concatenate([np.full(len(zeros), (1.0 - p1) / len(zeros)), np.full(len(ones), p1 / len(ones))])
        alive = weights > 0
        bits = np.zeros(self.n, dtype=np.uint8)
        for i in range(self.n):
            u = float(self.rng.random())
            total = weights[alive].sum()
            p_one = weights[alive & (candidates[:, i] == 1)].sum() / total
            bits[i] = 1 if u < p_one else 0
            alive &= candidates[:, i] == bits[i]
        return bits, int(labels[np.flatnonzero(alive)[0]])

    def _sample_two_level(self, q: int, words, frame: np.ndarray) -> Tuple[np.ndarray, int]:
        u = float(self.rng.random())
        b = 1 if u < self.register.prob_one(q) else 0
        pool = words[b]
        outer = pool[self.rng.integers(len(pool))]
        inner = np.array([words[int(o)][self.rng.integers(len(words[int(o)]))] for o in outer], dtype=np.uint8)
        return inner ^ frame, b

    def reset_wire(self, wire: int) -> None:
        w = self._wires[wire]
        self.register.reset(w.logical)
        for arr in (w.x, w.z, w.outer_x, w.outer_z):
            arr[...] = 0

    def decode_block(self, wire: int, block: int) -> ErrorReport:
        w = self._wires[wire]
        report = decode_pauli_frame(self.code, w.x[block], w.z[block])
        w.outer_x[block] ^= report.logical_x
        w.outer_z[block] ^= report.logical_z
        w.x[block] = w.z[block] = 0
        w.decoded.add(block)
        return report

    def discard_block(self, wire: int, block: int) -> None:
        w = self._wires[wire]
        w.x[block] = w.z[block] = 0
        w.outer_x[block] = w.outer_z[block] = 0
        w.decoded.add(block)

    def recover_outer(self, wire: int, erased: Sequence[int] = ()) -> Tuple[np.ndarray, ErrorReport]:
        erased = sorted(set(int(e) for e in erased))
        self._check_erasures(erased)
        w = self._wires[wire]
        if self.levels == 2:
            pending = set(range(self.n)) - w.decoded
            if pending:
                raise ConfigError(f"blocks {sorted(pending)} must be decoded or discarded first")
            fx, fz = w.outer_x, w.outer_z
        else:
            fx, fz = w.x[0], w.z[0]
        if erased:
            report = erasure_pauli_frame(self.code, fx, fz, erased)
        else:
            report = decode_pauli_frame(self.code, fx, fz)
        if report.logical_x:
            self.register.apply("X", [w.logical])
        if report.logical_z:
            self.register.apply("Z", [w.logical])
        for arr in (w.x, w.z, w.outer_x, w.outer_z):
            arr[...] = 0
        return self.register.reduced_density([w.logical]), report

    def output_density(self, wire: int) -> np.ndarray:
        return self.register.reduced_density([self._wires[wire].logical])

    def logical_density(self, wires: Sequence[int]) -> np.ndarray:
        return self.register.reduced_density([self._wires[w].logical for w in wires])

    def release_wire(self, wire: int) -> None:
        w = self._wires.pop(wire, None)
        if w is not None:
            self.register.measure_z(w.logical, u=0.0)
            self.register.release(w.logical)
