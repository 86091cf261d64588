# src/backends/tableau.py
"""
Stabilizer tableau simulator with destabilizers (the CHP layout).

Rows 0..N-1 are destabilizers and rows N..2N-1 stabilizers; x and z are
boolean arrays of shape (2N, N) and r holds the sign bits. The tableau
grows one qubit at a time; released qubits are reset to |0⟩ and reused, so
the size tracks the peak number of live qubits.
"""
from typing import List, Optional, Sequence

import numpy as np

from src.backends.gates import bloch_density
from src.utils.errors import BackendMismatch, UnsupportedGate
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _phase_exponent(x1, z1, x2, z2) -> np.ndarray:
    """Sum over columns of g(x1, z1, x2, z2), the exponent of i picked up when multiplying Paulis."""
    x1, z1, x2, z2 = (a.astype(np.int64) for a in (x1, z1, x2, z2))
    g = np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
                 np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)))
    return g.sum(axis=-1)


class Tableau:
    """Clifford + Z-measurement simulator sharing the register interface of the statevector."""
    kind = "tableau"

    def __init__(self, rng: Optional[np.random.Generator] = None):
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.size = 0
        self.x = np.zeros((0, 0), dtype=bool)
        self.z = np.zeros((0, 0), dtype=bool)
        self.r = np.zeros(0, dtype=bool)
        self._live: List[int] = []
        self._free: List[int] = []

    @property
    def num_qubits(self) -> int:
        return len(self._live)

    @property
    def qubits(self) -> List[int]:
        return sorted(self._live)

    def _grow(self) -> int:
        n = self.size
        x = np.zeros((2 * n + 2, n + 1), dtype=bool)
        z = np.zeros((2 * n + 2, n + 1), dtype=bool)
        r = np.zeros(2 * n + 2, dtype=bool)
        x[:n, :n], z[:n, :n], r[:n] = self.x[:n], self.z[:n], self.r[:n]
        x[n + 1:2 * n + 1, :n], z[n + 1:2 * n + 1, :n], r[n + 1:2 * n + 1] = self.x[n:], self.z[n:], self.r[n:]
        x[n, n] = True
        z[2 * n + 1, n] = True
        self.x, self.z, self.r = x, z, r
        self.size = n + 1
        return n

    def allocate(self, state=None) -> int:
        """Adds a qubit in |0⟩. Stabilizer inputs other than |0⟩ are prepared by the caller with gates."""
        if state is not None and not (np.allclose(state, [1, 0])):
            raise UnsupportedGate("the tableau allocates |0⟩ only; prepare other stabilizer states with gates")
        q = self._free.pop() if self._free else self._grow()
        self._live.append(q)
        return q

    def release(self, q: int) -> None:
        """Resets q to |0⟩ and returns it to the pool."""
        self._check(q)
        if self.is_deterministic(q):
            if self._deterministic_sign(q):
                self.apply("X", [q])
        else:
            self.reset(q)
        self._live.remove(q)
        self._free.append(q)

    def _check(self, *qubits: int) -> None:
        for q in qubits:
            if q not in self._live:
                raise BackendMismatch(f"qubit {q} is not allocated")

    def apply(self, gate, qubits: Sequence[int]) -> None:
        if not isinstance(gate, str):
            raise UnsupportedGate("the tableau applies named Clifford gates only")
        self._check(*qubits)
        x, z, r = self.x, self.z, self.r
        if gate == "H":
            a = qubits[0]
            r ^= x[:, a] & z[:, a]
            x[:, a], z[:, a] = z[:, a].copy(), x[:, a].copy()
        elif gate == "P":
            a = qubits[0]
            r ^= x[:, a] & z[:, a]
            z[:, a] ^= x[:, a]
        elif gate == "PDG":
            a = qubits[0]
            r ^= x[:, a] & ~z[:, a]
            z[:, a] ^= x[:, a]
        elif gate == "X":
            r ^= z[:, qubits[0]]
        elif gate == "Z":
            r ^= x[:, qubits[0]]
        elif gate == "Y":
            r ^= x[:, qubits[0]] ^ z[:, qubits[0]]
        elif gate == "XPDG":
            self.apply("PDG", qubits)
            self.apply("X", qubits)
        elif gate == "I":
            pass
        elif gate == "CNOT":
            a, b = qubits
            r ^= x[:, a] & z[:, b] & ~(x[:, b] ^ z[:, a])
            x[:, b] ^= x[:, a]
            z[:, a] ^= z[:, b]
        elif gate == "CZ":
            self.apply("H", [qubits[1]])
            self.apply("CNOT", qubits)
            self.apply("H", [qubits[1]])
        else:
            raise UnsupportedGate(f"the tableau backend cannot apply {gate}")

    def _rowsum_many(self, targets: np.ndarray, source: int) -> None:
        """Left-multiplies rows `targets` by row `source`, tracking signs."""
        if targets.size == 0:
            return
        x, z, r = self.x, self.z, self.r
        exponent = (2 * r[targets].astype(np.int64) + 2 * int(r[source])
                    + _phase_exponent(np.broadcast_to(x[source], x[targets].shape),
                                      np.broadcast_to(z[source], z[targets].shape),
                                      x[targets], z[targets]))
        r[targets] = (exponent % 4) == 2
        x[targets] ^= x[source]
        z[targets] ^= z[source]

    def _deterministic_sign(self, a: int) -> int:
        """Sign of ±Z_a in the stabilizer group, assuming no stabilizer anticommutes with Z_a."""
        n = self.size
        sx = np.zeros(n, dtype=bool)
        sz = np.zeros(n, dtype=bool)
        sr = 0
        for i in np.flatnonzero(self.x[:n, a]):
            row = n + int(i)
            exponent = 2 * sr + 2 * int(self.r[row]) + int(_phase_exponent(self.x[row], self.z[row], sx, sz))
            sr = 1 if exponent % 4 == 2 else 0
            sx ^= self.x[row]
            sz ^= self.z[row]
        return sr

    def is_deterministic(self, a: int) -> bool:
        n = self.size
        return not self.x[n:, a].any()

    def prob_one(self, a: int) -> float:
        self._check(a)
        if not self.is_deterministic(a):
            return 0.5
        return float(self._deterministic_sign(a))

    def measure_z(self, a: int, u: Optional[float] = None) -> int:
        self._check(a)
        if u is None:
            u = float(self.rng.random())
        n = self.size
        hits = np.flatnonzero(self.x[n:, a])
        if hits.size == 0:
            return self._deterministic_sign(a)
        p = n + int(hits[0])
        others = np.flatnonzero(self.x[:, a])
        others = others[others != p]
        self._rowsum_many(others, p)
        self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p].copy(), self.z[p].copy(), self.r[p]
        self.x[p] = False
        self.z[p] = False
        self.z[p, a] = True
        bit = 1 if u < 0.5 else 0
        self.r[p] = bool(bit)
        return bit

    def reset(self, a: int) -> int:
        bit = self.measure_z(a)
        if bit:
            self.apply("X", [a])
        return bit

    def pauli_expectation(self, a: int, pauli: str) -> float:
        """⟨P_a⟩ for P ∈ {X, Y, Z}: ±1 if ±P_a is a stabilizer, otherwise 0."""
        self._check(a)
        scratch = self.copy()
        if pauli == "X":
            scratch.apply("H", [a])
        elif pauli == "Y":
            scratch.apply("PDG", [a])
            scratch.apply("H", [a])
        elif pauli != "Z":
            raise ValueError(f"unknown Pauli {pauli}")
        if not scratch.is_deterministic(a):
            return 0.0
        return 1.0 - 2.0 * scratch._deterministic_sign(a)

    def reduced_density(self, qubits: Sequence[int]) -> np.ndarray:
        if len(qubits) != 1:
            raise UnsupportedGate("the tableau reports single-qubit reduced states only")
        a = qubits[0]
        return bloch_density(*(self.pauli_expectation(a, p) for p in ("X", "Y", "Z")))

    def copy(self) -> "Tableau":
        other = Tableau(self.rng)
        other.size = self.size
        other.x, other.z, other.r = self.x.copy(), self.z.copy(), self.r.copy()
        other._live, other._free = list(self._live), list(self._free)
        return other

    def is_valid(self) -> bool:
        """Symplectic check: destabilizer i anticommutes with stabilizer i only, stabilizers commute."""
        n = self.size
        xi, zi = self.x.astype(np.int64), self.z.astype(np.int64)
        form = (xi @ zi.T + zi @ xi.T) % 2
        eye = np.eye(n, dtype=np.int64)
        return (not form[:n, :n].any() and not form[n:, n:].any()
                and np.array_equal(form[:n, n:], eye))
