# src/services/oracle_service.py
"""
Ideal functionality: the circuit applied directly to unencoded inputs on a
dense tensor. Nothing here goes through the share engines.
"""
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from src.circuit.circuit_ir import Circuit
from src.models.models import IdealOracleResult
from src.utils.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_S2 = np.sqrt(0.5)
_MATRICES = {
    "H": np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    "P": np.array([[1, 0], [0, 1j]], dtype=complex),
    "PDG": np.array([[1, 0], [0, -1j]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex).reshape(2, 2, 2, 2),
}
_PAULIS = (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]]))


def bloch_vector(rho: np.ndarray) -> List[float]:
    return [float(np.real(np.trace(rho @ p))) for p in _PAULIS]


def _vector(state) -> np.ndarray:
    vec = np.asarray(state, dtype=complex).ravel()
    if vec.size != 2:
        raise ConfigError("oracle inputs are resolved single-qubit vectors")
    return vec


def ideal_densities(circuit: Circuit, inputs: Sequence, joint_inputs: Iterable[Tuple[Sequence[int], np.ndarray]] = ()) -> Dict[int, np.ndarray]:
    """
    Runs the circuit on a bare register.

    Args:
        inputs: resolved single-qubit vectors, one per input wire.
        joint_inputs: (wires, vector) pairs overriding the listed wires.

    Returns:
        Reduced density matrix per OUT wire.
    """
    psi = np.ones(1, dtype=complex)
    order: List[int] = []
    for wires, vec in joint_inputs:
        psi = np.kron(psi, np.asarray(vec, dtype=complex).ravel())
        order += [int(w) for w in wires]
    for w in range(1, circuit.num_inputs + 1):
        if w not in order:
            psi = np.kron(psi, _vector(inputs[w - 1]))
            order.append(w)
    for w in circuit.ancillas:
        psi = np.kron(psi, np.array([1, 0], dtype=complex))
        order.append(w)
    axis = {w: i for i, w in enumerate(order)}
    tensor = psi.reshape((2,) * len(order))
    for st in circuit.gates:
        u = _MATRICES[st.op]
        if len(st.wires) == 1:
            a = axis[st.wires[0]]
            tensor = np.moveaxis(np.tensordot(u, tensor, axes=([1], [a])), 0, a)
        else:
            a, b = axis[st.wires[0]], axis[st.wires[1]]
            tensor = np.moveaxis(np.tensordot(u, tensor, axes=([2, 3], [a, b])), [0, 1], [a, b])
    out = {}
    for w in circuit.outputs:
        m = np.moveaxis(tensor, axis[w], 0).reshape(2, -1)
        out[w] = m @ m.conj().T
    return out


def ideal_oracle(circuit: Circuit, inputs: Sequence, joint_inputs=()) -> IdealOracleResult:
    densities = ideal_densities(circuit, inputs, joint_inputs)
    return IdealOracleResult(outputs={w: bloch_vector(rho) for w, rho in densities.items()},
                             nodes=dict(circuit.outputs))
