# src/backends/cross_validate.py
"""
Runs the same seeded workload on two backends and compares the records.
"""
from typing import Iterable, List, NamedTuple, Sequence, Tuple

import numpy as np

from src.backends.statevector import StatevectorRegister
from src.backends.tableau import Tableau
from src.utils.logger import get_logger

logger = get_logger(__name__)

CLIFFORD_OPS = ("H", "P", "PDG", "X", "Z", "CNOT", "MZ")

Op = Tuple


class CrossValidationReport(NamedTuple):
    runs: int
    divergent_seeds: List[int]
    max_divergence: int

    @property
    def identical(self) -> bool:
        return self.max_divergence == 0


def random_clifford_circuit(num_qubits: int, num_gates: int, rng: np.random.Generator) -> List[Op]:
    """Random gates from H, P, P†, X, Z, CNOT and Z-measurements."""
    ops: List[Op] = []
    for _ in range(num_gates):
        name = CLIFFORD_OPS[int(rng.integers(len(CLIFFORD_OPS)))]
        if name == "CNOT" and num_qubits > 1:
            a, b = rng.choice(num_qubits, size=2, replace=False)
            ops.append(("CNOT", int(a), int(b)))
        elif name == "CNOT":
            ops.append(("H", 0))
        else:
            ops.append((name, int(rng.integers(num_qubits))))
    return ops


def run_ops(register, num_qubits: int, ops: Sequence[Op]) -> List[int]:
    """Applies `ops` to fresh |0…0⟩ qubits; returns the measurement record."""
    qubits = [register.allocate() for _ in range(num_qubits)]
    record = []
    for op in ops:
        if op[0] == "MZ":
            record.append(register.measure_z(qubits[op[1]]))
        else:
            register.apply(op[0], [qubits[i] for i in op[1:]])
    return record


def _divergence(a: Sequence[int], b: Sequence[int]) -> int:
    if len(a) != len(b):
        return max(len(a), len(b))
    return int(sum(x != y for x, y in zip(a, b)))


def cross_validate(ops: Sequence[Op], num_qubits: int, seeds: Iterable[int]) -> CrossValidationReport:
    """Statevector vs tableau on one Clifford + MZ circuit across seeds."""
    divergent, worst, runs = [], 0, 0
    for seed in seeds:
        sv = run_ops(StatevectorRegister(np.random.default_rng(seed)), num_qubits, ops)
        tab = run_ops(Tableau(np.random.default_rng(seed)), num_qubits, ops)
        d = _divergence(sv, tab)
        runs += 1
        if d:
            divergent.append(int(seed))
            logger.warning(f"Seed {seed}: statevector and tableau records differ in {d} outcomes")
        worst = max(worst, d)
    return CrossValidationReport(runs, divergent, worst)


def cross_validate_random_cliffords(num_circuits: int, max_qubits: int, num_gates: int, seed: int = 0) -> CrossValidationReport:
    """Random Clifford circuits on up to `max_qubits` qubits, each run with its own seed on both backends."""
    rng = np.random.default_rng(seed)
    divergent, worst = [], 0
    for index in range(num_circuits):
        k = int(rng.integers(1, max_qubits + 1))
        ops = random_clifford_circuit(k, num_gates, rng)
        report = cross_validate(ops, k, [seed + index])
        divergent += report.divergent_seeds
        worst = max(worst, report.max_divergence)
    logger.info(f"Cross-validated {num_circuits} random Clifford circuits, max divergence {worst}")
    return CrossValidationReport(num_circuits, divergent, worst)


def cross_validate_vqss(seeds: Iterable[int], s: int = 1, adversary: str = "honest",
                        corrupt: Sequence[int] = ()) -> CrossValidationReport:
    """
    One-level sharing plus verification on the frame and statevector
    engines with shared seeds; compares every broadcast word and the
    resulting apparent-cheater sets.
    """
    from src.services.vqss_service import standalone_vqss_transcript

    divergent, worst, runs = [], 0, 0
    for seed in seeds:
        frame = standalone_vqss_transcript("frame", seed, s, adversary, corrupt)
        sv = standalone_vqss_transcript("sv", seed, s, adversary, corrupt)
        d = _divergence(frame, sv)
        runs += 1
        if d:
            divergent.append(int(seed))
            logger.warning(f"Seed {seed}: frame and statevector verification transcripts differ in {d} entries")
        worst = max(worst, d)
    return CrossValidationReport(runs, divergent, worst)
