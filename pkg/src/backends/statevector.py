# src/backends/statevector.py
"""
Dense statevector register.

Qubits that have never interacted live in separate components, so the
capacity limit applies to the largest entangled group rather than to the
whole register. A component keeps its amplitudes as a tensor with one axis
of size 2 per qubit.
"""
from dataclasses import dataclass
from itertools import count
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.backends.gates import gate_matrix
from src.config.config import NORM_TOLERANCE, STATEVECTOR_CAPACITY
from src.utils.errors import BackendMismatch, CapacityExceeded
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class _Component:
    qubits: List[int]
    tensor: np.ndarray


def _apply_to_axes(tensor: np.ndarray, matrix: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    k = len(axes)
    m = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


class StatevectorRegister:
    """
    A growable register of qubits with exact unitary evolution and Born-rule
    measurement.

    Measurement takes a uniform draw `u` (from the register's stream unless
    supplied) and reports 1 iff u < P(1). Every measurement consumes exactly
    one draw, whether or not the outcome is deterministic.
    """
    kind = "sv"

    def __init__(self, rng: Optional[np.random.Generator] = None, capacity: int = STATEVECTOR_CAPACITY):
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.capacity = capacity
        self._components: Dict[int, _Component] = {}
        self._owner: Dict[int, int] = {}
        self._qubit_ids = count()
        self._component_ids = count()

    @property
    def num_qubits(self) -> int:
        return len(self._owner)

    @property
    def qubits(self) -> List[int]:
        return sorted(self._owner)

    def largest_component(self) -> int:
        return max((len(c.qubits) for c in self._components.values()), default=0)

    def allocate(self, state: Optional[np.ndarray] = None) -> int:
        """Adds one qubit in `state` (default |0⟩) and returns its id."""
        return self.allocate_joint(np.array([1, 0], dtype=complex) if state is None else state)[0]

    def allocate_joint(self, state: np.ndarray) -> List[int]:
        """Adds len(state).bit_length()-1 qubits jointly prepared in `state` (big-endian)."""
        vec = np.asarray(state, dtype=complex).ravel()
        k = int(np.log2(vec.size))
        if 2 ** k != vec.size:
            raise BackendMismatch(f"state of length {vec.size} is not a qubit register")
        if k > self.capacity:
            raise CapacityExceeded(f"{k} qubits exceed statevector capacity {self.capacity}")
        ids = [next(self._qubit_ids) for _ in range(k)]
        cid = next(self._component_ids)
        self._components[cid] = _Component(list(ids), vec.reshape((2,) * k).copy())
        for q in ids:
            self._owner[q] = cid
        return ids

    def _component_of(self, q: int) -> _Component:
        if q not in self._owner:
            raise BackendMismatch(f"qubit {q} is not allocated")
        return self._components[self._owner[q]]

    def _merge(self, qubits: Sequence[int]) -> _Component:
        cids = []
        for q in qubits:
            cid = self._owner.get(q)
            if cid is None:
                raise BackendMismatch(f"qubit {q} is not allocated")
            if cid not in cids:
                cids.append(cid)
        if len(cids) == 1:
            return self._components[cids[0]]
        size = sum(len(self._components[c].qubits) for c in cids)
        if size > self.capacity:
            raise CapacityExceeded(f"entangling {size} qubits exceeds statevector capacity {self.capacity}")
        base = self._components.pop(cids[0])
        for cid in cids[1:]:
            other = self._components.pop(cid)
            base = _Component(base.qubits + other.qubits, np.tensordot(base.tensor, other.tensor, axes=0))
        self._components[cids[0]] = base
        for q in base.qubits:
            self._owner[q] = cids[0]
        return base

    def apply(self, gate, qubits: Sequence[int]) -> None:
        """Applies a named gate or an explicit unitary to `qubits` (first listed = most significant)."""
        matrix = gate_matrix(gate) if isinstance(gate, str) else np.asarray(gate, dtype=complex)
        qubits = list(qubits)
        if matrix.shape != (2 ** len(qubits), 2 ** len(qubits)):
            raise BackendMismatch(f"gate of shape {matrix.shape} applied to {len(qubits)} qubits")
        comp = self._merge(qubits)
        axes = [comp.qubits.index(q) for q in qubits]
        comp.tensor = _apply_to_axes(comp.tensor, matrix, axes)

    def prob_one(self, q: int) -> float:
        comp = self._component_of(q)
        axis = comp.qubits.index(q)
        ones = np.take(comp.tensor, 1, axis=axis)
        return float(np.sum(np.abs(ones) ** 2) / np.sum(np.abs(comp.tensor) ** 2))

    def measure_z(self, q: int, u: Optional[float] = None) -> int:
        """Samples and collapses qubit q; it stays allocated as a product |b⟩."""
        if u is None:
            u = float(self.rng.random())
        p1 = self.prob_one(q)
        bit = 1 if u < p1 else 0
        self._collapse(q, bit, p1 if bit else 1.0 - p1)
        return bit

    def project(self, q: int, bit: int) -> None:
        """Postselects qubit q on `bit` (the outcome must have nonzero probability)."""
        p1 = self.prob_one(q)
        p = p1 if bit else 1.0 - p1
        if p <= NORM_TOLERANCE:
            raise BackendMismatch(f"cannot project qubit {q} onto an outcome of probability {p:.3g}")
        self._collapse(q, bit, p)

    def _collapse(self, q: int, bit: int, p: float) -> None:
        cid = self._owner[q]
        comp = self._components[cid]
        axis = comp.qubits.index(q)
        rest = np.take(comp.tensor, bit, axis=axis) / np.sqrt(p)
        remaining = [x for x in comp.qubits if x != q]
        if remaining:
            comp.qubits, comp.tensor = remaining, rest
        else:
            del self._components[cid]
        new = next(self._component_ids)
        ket = np.zeros(2, dtype=complex)
        ket[bit] = 1.0
        self._components[new] = _Component([q], ket)
        self._owner[q] = new

    def reset(self, q: int) -> int:
        """Measures q and flips it back to |0⟩; returns the discarded outcome."""
        bit = self.measure_z(q)
        if bit:
            self.apply("X", [q])
        return bit

    def release(self, q: int) -> None:
        """Drops a qubit that is no longer entangled (measured or reset)."""
        comp = self._component_of(q)
        if len(comp.qubits) != 1:
            raise BackendMismatch(f"qubit {q} is still entangled with {len(comp.qubits) - 1} others")
        del self._components[self._owner.pop(q)]

    def reduced_density(self, qubits: Sequence[int]) -> np.ndarray:
        """Density matrix of `qubits` (first listed = most significant), tracing out everything else."""
        qubits = list(qubits)
        cids = []
        for q in qubits:
            cid = self._owner.get(q)
            if cid is None:
                raise BackendMismatch(f"qubit {q} is not allocated")
            if cid not in cids:
                cids.append(cid)
        order: List[int] = []
        tensor = np.ones((), dtype=complex)
        for cid in cids:
            comp = self._components[cid]
            order += comp.qubits
            tensor = np.tensordot(tensor, comp.tensor, axes=0)
        axes = [order.index(q) for q in qubits]
        tensor = np.moveaxis(tensor, axes, list(range(len(axes))))
        mat = tensor.reshape(2 ** len(qubits), -1)
        rho = mat @ mat.conj().T
        return rho / np.real(np.trace(rho))

    def statevector(self, qubits: Sequence[int]) -> np.ndarray:
        """Joint pure state of `qubits`, which must make up whole components."""
        qubits = list(qubits)
        comp = self._merge(qubits)
        if sorted(comp.qubits) != sorted(qubits):
            raise BackendMismatch("requested qubits are entangled with others; use reduced_density")
        axes = [comp.qubits.index(q) for q in qubits]
        return np.moveaxis(comp.tensor, axes, list(range(len(axes)))).reshape(-1).copy()

    def norm(self) -> float:
        """Product of component norms; 1 within tolerance after every operation."""
        return float(np.prod([np.linalg.norm(c.tensor) for c in self._components.values()]))
