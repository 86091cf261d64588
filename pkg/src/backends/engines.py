# src/backends/engines.py
"""
Share engines: the quantum side of a protocol run.

A wire is one logical qubit. It starts raw, gets a first-level encoding
(`encode_outer`), and at two levels each first-level share j is re-encoded
into block j (`encode_block`). Physical qubits are addressed by
Address(block, position); position ℓ is held by node ℓ+1.

Engines:
- PhysicalEngine runs every physical qubit on a StatevectorRegister or a
  Tableau.
- FrameEngine (src/backends/frame.py) keeps a logical statevector plus a
  Pauli frame per physical qubit.
- NullEngine does nothing and backs resource-only runs.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.backends.gates import KET_0, NAMED_STATES, STABILIZER_STATES, density, fidelity, ghz_state
from src.backends.statevector import StatevectorRegister
from src.backends.tableau import Tableau
from src.codes.css_code import CssCode, ErrorReport
from src.codes.gf2_codes import CORRECTED, error_from_syndrome, gf2_solve
from src.utils.errors import AmbiguousErasure, ConfigError, TooManyErrors, UnsupportedGate
from src.utils.logger import get_logger

logger = get_logger(__name__)

TRANSVERSAL_GATES = ("H", "P", "PDG", "X", "Z", "XPDG", "CNOT")
PAULIS = ("I", "X", "Y", "Z")
BASES = ("Z", "X")


class Address(NamedTuple):
    block: int
    position: int
    level: int = 2

    @property
    def holder(self) -> int:
        """1-based id of the node holding this qubit."""
        return self.position + 1


def first_level(position: int) -> Address:
    return Address(0, position, 1)


def pauli_bits(pauli: str) -> Tuple[int, int]:
    if pauli not in PAULIS:
        raise ValueError(f"unknown Pauli {pauli}")
    return int(pauli in ("X", "Y")), int(pauli in ("Z", "Y"))


def empty_report() -> ErrorReport:
    return ErrorReport((), (), 0, 0, CORRECTED)


class ShareEngine(ABC):
    """Common interface for the quantum side of a run."""
    kind = ""

    def __init__(self, code: CssCode, levels: int, rng: Optional[np.random.Generator] = None):
        if levels not in (1, 2):
            raise ConfigError(f"encoding depth must be 1 or 2, got {levels}")
        if code.k != 1:
            raise ConfigError(f"protocol runs need a code with one logical qubit, {code!r} has k={code.k}")
        self.code = code
        self.levels = levels
        self.n = code.n
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self._next_wire = 0

    @property
    def blocks(self) -> int:
        return self.n if self.levels == 2 else 1

    def addresses(self) -> List[Address]:
        level = self.levels
        return [Address(j, l, level) for j in range(self.blocks) for l in range(self.n)]

    def _wire_id(self) -> int:
        w = self._next_wire
        self._next_wire += 1
        return w

    def new_wire(self, state=None) -> int:
        """A raw (unencoded) wire holding a single-qubit state, |0⟩ by default."""
        return self.new_joint_wires(KET_0 if state is None else state)[0]

    @abstractmethod
    def new_joint_wires(self, state: np.ndarray) -> List[int]:
        """Raw wires jointly prepared in a 2^k-dimensional state (first wire most significant)."""

    @abstractmethod
    def encode_outer(self, wire: int) -> None: ...

    @abstractmethod
    def encode_block(self, wire: int, block: int) -> None: ...

    @abstractmethod
    def inject(self, wire: int, address: Address, pauli: str) -> None: ...

    @abstractmethod
    def apply_logical(self, gate: str, wires: Sequence[int]) -> None:
        """Transversal realization of a logical gate on fully encoded wires."""

    @abstractmethod
    def measure_wire(self, wire: int, basis: str = "Z") -> np.ndarray:
        """Measures every physical qubit of the wire; returns bits of shape (blocks, n) and drops the wire."""

    @abstractmethod
    def reset_wire(self, wire: int) -> None:
        """Replaces every share of the wire with |0⟩."""

    @abstractmethod
    def decode_block(self, wire: int, block: int) -> ErrorReport:
        """Corrects second-level block `block` and collapses it to its first-level share."""

    @abstractmethod
    def discard_block(self, wire: int, block: int) -> None:
        """Drops a block that will be treated as erased at the first level."""

    @abstractmethod
    def recover_outer(self, wire: int, erased: Sequence[int] = ()) -> Tuple[np.ndarray, ErrorReport]:
        """First-level correction (or erasure recovery); returns the decoded qubit's density matrix."""

    @abstractmethod
    def release_wire(self, wire: int) -> None: ...

    def physical_density(self, qubits: Sequence[Tuple[int, Address]]) -> np.ndarray:
        raise UnsupportedGate(f"the {self.kind} engine has no physical reduced states")

    def _check_erasures(self, erased: Sequence[int]) -> None:
        if len(set(erased)) > self.code.d - 1:
            raise AmbiguousErasure(f"{len(set(erased))} erasures exceed d−1 = {self.code.d - 1}")


@dataclass
class _PhysicalWire:
    raw: Optional[int]
    outer: List[Optional[int]] = field(default_factory=list)
    blocks: Dict[int, List[int]] = field(default_factory=dict)


def _stabilizer_prep(state: np.ndarray) -> List[str]:
    """Gates taking |0⟩ to a named single-qubit stabilizer state (up to phase)."""
    recipes = {"0": [], "1": ["X"], "+": ["H"], "-": ["X", "H"], "+i": ["H", "P"], "-i": ["H", "PDG"]}
    for label in STABILIZER_STATES:
        if 1.0 - fidelity(NAMED_STATES[label], state) < 1e-9:
            return recipes[label]
    raise UnsupportedGate("the tableau holds stabilizer states only")


class PhysicalEngine(ShareEngine):
    """
    Every physical qubit is simulated on `register` (a StatevectorRegister or
    a Tableau). C-G runs in one of two modes: "ideal" decodes both blocks,
    applies C-G to the decoded qubits and re-encodes (one level only);
    "qubitwise" applies C-G to each pair of shares.
    """

    def __init__(self, register, code: CssCode, levels: int, cg_mode: str = "ideal"):
        super().__init__(code, levels, register.rng)
        if cg_mode not in ("ideal", "qubitwise"):
            raise ConfigError(f"unknown C-G mode {cg_mode}")
        self.register = register
        self.kind = register.kind
        self.cg_mode = cg_mode
        self._wires: Dict[int, _PhysicalWire] = {}

    def new_joint_wires(self, state: np.ndarray) -> List[int]:
        vec = np.asarray(state, dtype=complex).ravel()
        k = int(np.log2(vec.size))
        if isinstance(self.register, Tableau):
            qubits = self._tableau_prepare(vec, k)
        else:
            qubits = self.register.allocate_joint(vec)
        ids = []
        for q in qubits:
            w = self._wire_id()
            self._wires[w] = _PhysicalWire(raw=q)
            ids.append(w)
        return ids

    def _tableau_prepare(self, vec: np.ndarray, k: int) -> List[int]:
        qubits = [self.register.allocate() for _ in range(k)]
        if k == 1:
            for gate in _stabilizer_prep(vec):
                self.register.apply(gate, qubits)
            return qubits
        if 1.0 - fidelity(ghz_state(k), vec) > 1e-9:
            raise UnsupportedGate("the tableau prepares joint GHZ-type inputs only")
        self.register.apply("H", [qubits[0]])
        for q in qubits[1:]:
            self.register.apply("CNOT", [qubits[0], q])
        return qubits

    def _run(self, gates, qubits: List[int]) -> None:
        for gate in gates:
            self.register.apply(gate[0], [qubits[i] for i in gate[1:]])

    def _encode(self, seed_qubit: int) -> List[int]:
        enc = self.code.encoding
        qubits = [seed_qubit if i == enc.input_index else self.register.allocate() for i in range(self.n)]
        self._run(enc.gates, qubits)
        return qubits

    def _unencode(self, qubits: List[int]) -> int:
        """Inverse encoding; measures and drops the n−1 ancilla qubits, returns the decoded qubit."""
        enc = self.code.encoding
        self._run(enc.inverse(), qubits)
        for i, q in enumerate(qubits):
            if i != enc.input_index:
                self.register.measure_z(q)
                self.register.release(q)
        return qubits[enc.input_index]

    def encode_outer(self, wire: int) -> None:
        w = self._wires[wire]
        w.outer = self._encode(w.raw)
        w.raw = None

    def encode_block(self, wire: int, block: int) -> None:
        w = self._wires[wire]
        w.blocks[block] = self._encode(w.outer[block])
        w.outer[block] = None

    def _qubit(self, w: _PhysicalWire, address: Address) -> int:
        if self.levels == 1 or address.level == 1:
            return w.outer[address.position]
        return w.blocks[address.block][address.position]

    def _physical(self, w: _PhysicalWire) -> List[Tuple[Address, int]]:
        if self.levels == 1:
            return [(Address(0, l, 1), q) for l, q in enumerate(w.outer)]
        return [(Address(j, l, 2), w.blocks[j][l]) for j in range(self.n) for l in range(self.n)]

    def _logical_support(self, pattern: np.ndarray) -> List[Tuple[int, int]]:
        support = [int(i) for i in np.flatnonzero(pattern)]
        if self.levels == 1:
            return [(0, l) for l in support]
        return [(j, l) for j in support for l in support]

    def inject(self, wire: int, address: Address, pauli: str) -> None:
        if pauli == "I":
            return
        w = self._wires[wire]
        if address.level == 1 and self.levels == 2 and address.position in w.blocks:
            bx, bz = pauli_bits(pauli)
            block = w.blocks[address.position]
            if bx:
                for l in np.flatnonzero(self.code.x_bar):
                    self.register.apply("X", [block[int(l)]])
            if bz:
                for l in np.flatnonzero(self.code.z_bar):
                    self.register.apply("Z", [block[int(l)]])
            return
        self.register.apply(pauli, [self._qubit(w, address)])

    def apply_logical(self, gate: str, wires: Sequence[int]) -> None:
        ws = [self._wires[x] for x in wires]
        if gate in ("X", "Z"):
            pattern = self.code.x_bar if gate == "X" else self.code.z_bar
            for j, l in self._logical_support(pattern):
                self.register.apply(gate, [self._qubit(ws[0], Address(j, l, self.levels))])
        elif gate in ("H", "P", "PDG"):
            physical = gate if gate == "H" else self.code.physical_phase_gate(gate, self.levels)
            for _, q in self._physical(ws[0]):
                self.register.apply(physical, [q])
        elif gate == "XPDG":
            self.apply_logical("PDG", wires)
            self.apply_logical("X", wires)
        elif gate == "CNOT":
            for (_, qc), (_, qt) in zip(self._physical(ws[0]), self._physical(ws[1])):
                self.register.apply("CNOT", [qc, qt])
        elif gate == "C-G":
            self._controlled_g(ws[0], ws[1])
        else:
            raise UnsupportedGate(f"{gate} has no transversal realization")

    def _controlled_g(self, control: _PhysicalWire, target: _PhysicalWire) -> None:
        if isinstance(self.register, Tableau):
            raise UnsupportedGate("the tableau backend cannot apply C-G")
        if self.cg_mode == "qubitwise":
            for (_, qc), (_, qt) in zip(self._physical(control), self._physical(target)):
                self.register.apply("C-G", [qc, qt])
            return
        if self.levels != 1:
            raise UnsupportedGate("ideal-logical C-G is available at one encoding level only")
        enc = self.code.encoding
        self._run(enc.inverse(), control.outer)
        self._run(enc.inverse(), target.outer)
        self.register.apply("C-G", [control.outer[enc.input_index], target.outer[enc.input_index]])
        self._run(enc.gates, control.outer)
        self._run(enc.gates, target.outer)

    def measure_wire(self, wire: int, basis: str = "Z") -> np.ndarray:
        w = self._wires.pop(wire)
        bits = np.zeros((self.blocks, self.n), dtype=np.uint8)
        physical = self._physical(w)
        if basis == "X":
            for _, q in physical:
                self.register.apply("H", [q])
        for address, q in physical:
            row = address.block if self.levels == 2 else 0
            bits[row, address.position] = self.register.measure_z(q)
            self.register.release(q)
        return bits

    def reset_wire(self, wire: int) -> None:
        for _, q in self._physical(self._wires[wire]):
            self.register.reset(q)

    def _syndromes(self, qubits: List[int]) -> Tuple[np.ndarray, np.ndarray]:
        reg = self.register
        sz, sx = [], []
        for row in self.code.z_stabilizers:
            a = reg.allocate()
            for i in np.flatnonzero(row):
                reg.apply("CNOT", [qubits[int(i)], a])
            sz.append(reg.measure_z(a))
            reg.release(a)
        for row in self.code.x_stabilizers:
            a = reg.allocate()
            reg.apply("H", [a])
            for i in np.flatnonzero(row):
                reg.apply("CNOT", [a, qubits[int(i)]])
            reg.apply("H", [a])
            sx.append(reg.measure_z(a))
            reg.release(a)
        return np.array(sz, dtype=np.uint8), np.array(sx, dtype=np.uint8)

    def _correct(self, qubits: List[int], ex: np.ndarray, ez: np.ndarray) -> ErrorReport:
        for i in np.flatnonzero(ex):
            self.register.apply("X", [qubits[int(i)]])
        for i in np.flatnonzero(ez):
            self.register.apply("Z", [qubits[int(i)]])
        return ErrorReport(tuple(int(i) for i in np.flatnonzero(ex)),
                           tuple(int(i) for i in np.flatnonzero(ez)), 0, 0, CORRECTED)

    def decode_block(self, wire: int, block: int) -> ErrorReport:
        w = self._wires[wire]
        qubits = w.blocks[block]
        sz, sx = self._syndromes(qubits)
        ex = error_from_syndrome(self.code.v, sz)
        ez = error_from_syndrome(self.code.w, sx)
        if ex is None or ez is None:
            raise TooManyErrors(f"block {block} carries more errors than the code corrects")
        report = self._correct(qubits, ex, ez)
        w.outer[block] = self._unencode(qubits)
        del w.blocks[block]
        return report

    def discard_block(self, wire: int, block: int) -> None:
        w = self._wires[wire]
        for q in w.blocks.pop(block, []):
            self.register.measure_z(q)
            self.register.release(q)
        w.outer[block] = None

    def recover_outer(self, wire: int, erased: Sequence[int] = ()) -> Tuple[np.ndarray, ErrorReport]:
        erased = sorted(set(int(e) for e in erased))
        self._check_erasures(erased)
        w = self._wires[wire]
        if self.levels == 2 and w.blocks:
            raise ConfigError(f"blocks {sorted(w.blocks)} must be decoded or discarded first")
        qubits = w.outer
        for pos in erased:
            if qubits[pos] is None:
                qubits[pos] = self.register.allocate()
            else:
                self.register.reset(qubits[pos])
        sz, sx = self._syndromes(qubits)
        if erased:
            ex = self._erasure_error(self.code.z_stabilizers, sz, erased)
            ez = self._erasure_error(self.code.x_stabilizers, sx, erased)
        else:
            ex = error_from_syndrome(self.code.v, sz)
            ez = error_from_syndrome(self.code.w, sx)
        if ex is None or ez is None:
            raise TooManyErrors("surviving shares are inconsistent with the code")
        report = self._correct(qubits, ex, ez)
        w.raw = self._unencode(qubits)
        w.outer = []
        return self.register.reduced_density([w.raw]), report

    def _erasure_error(self, checks: np.ndarray, syndrome: np.ndarray, erased: List[int]) -> Optional[np.ndarray]:
        if checks.shape[0] == 0:
            return np.zeros(self.n, dtype=np.uint8)
        part, _ = gf2_solve(checks[:, erased], syndrome)
        if part is None:
            return None
        e = np.zeros(self.n, dtype=np.uint8)
        e[erased] = part
        return e

    def release_wire(self, wire: int) -> None:
        w = self._wires.pop(wire, None)
        if w is None:
            return
        qubits = ([w.raw] if w.raw is not None else []) + [q for q in w.outer if q is not None]
        qubits += [q for block in w.blocks.values() for q in block]
        for q in qubits:
            self.register.measure_z(q)
            self.register.release(q)

    def output_density(self, wire: int) -> np.ndarray:
        return self.register.reduced_density([self._wires[wire].raw])

    def physical_density(self, qubits: Sequence[Tuple[int, Address]]) -> np.ndarray:
        ids = [self._qubit(self._wires[wire], address) for wire, address in qubits]
        return self.register.reduced_density(ids)


class NullEngine(ShareEngine):
    """Runs the protocol motions with no quantum state; measurements read as the zero codeword."""
    kind = "null"

    def new_joint_wires(self, state: np.ndarray) -> List[int]:
        k = int(np.log2(np.asarray(state).size))
        return [self._wire_id() for _ in range(k)]

    def encode_outer(self, wire: int) -> None:
        pass

    def encode_block(self, wire: int, block: int) -> None:
        pass

    def inject(self, wire: int, address: Address, pauli: str) -> None:
        pass

    def apply_logical(self, gate: str, wires: Sequence[int]) -> None:
        pass

    def measure_wire(self, wire: int, basis: str = "Z") -> np.ndarray:
        return np.zeros((self.blocks, self.n), dtype=np.uint8)

    def reset_wire(self, wire: int) -> None:
        pass

    def decode_block(self, wire: int, block: int) -> ErrorReport:
        return empty_report()

    def discard_block(self, wire: int, block: int) -> None:
        pass

    def recover_outer(self, wire: int, erased: Sequence[int] = ()) -> Tuple[np.ndarray, ErrorReport]:
        return density(KET_0), empty_report()

    def release_wire(self, wire: int) -> None:
        pass


ENGINE_KINDS = ("sv", "tableau", "frame", "null")


def make_engine(kind: str, code: CssCode, levels: int, rng: Optional[np.random.Generator] = None,
                cg_mode: str = "ideal") -> ShareEngine:
    """
    Builds the engine for a backend kind.

    Raises:
        ConfigError: for unknown kinds.
    """
    from src.backends.frame import FrameEngine

    if kind == "frame":
        return FrameEngine(code, levels, rng)
    if kind == "sv":
        return PhysicalEngine(StatevectorRegister(rng), code, levels, cg_mode=cg_mode)
    if kind == "tableau":
        return PhysicalEngine(Tableau(rng), code, levels, cg_mode=cg_mode)
    if kind == "null":
        return NullEngine(code, levels, rng)
    raise ConfigError(f"unknown backend {kind!r}; expected one of {ENGINE_KINDS}")
