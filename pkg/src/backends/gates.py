# src/backends/gates.py
"""
Gate matrices, named input states and state-comparison helpers.

Multi-qubit matrices use big-endian ordering: the first listed qubit is the
most significant index.
"""
from typing import Dict, Sequence, Union

import numpy as np

from src.config.config import NORM_TOLERANCE
from src.utils.errors import BackendMismatch, ConfigError

SQRT2 = np.sqrt(2.0)
OMEGA = np.exp(1j * np.pi / 4)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
P = np.diag([1, 1j]).astype(complex)
PDG = P.conj().T
T = np.diag([1, OMEGA]).astype(complex)
TDG = T.conj().T
# Correction applied after a gate-teleport outcome of 1: P† first, then X.
XPDG = X @ PDG


def cxp_dagger_phase_convention() -> np.ndarray:
    """
    G = e^{iπ/4}·X·P†, the phase-fixed gate whose +1 eigenstate is |m⟩.

    The bare X·P† has eigenvalue e^{−iπ/4} on |m⟩; the global phase makes
    it exactly +1, which the controlled version needs.
    """
    return OMEGA * (X @ PDG)


G = cxp_dagger_phase_convention()


def controlled(u: np.ndarray) -> np.ndarray:
    """|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ u, control first."""
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


CNOT = controlled(X)
CZ = controlled(Z)
CG = controlled(G)

SINGLE_QUBIT: Dict[str, np.ndarray] = {
    "I": I2, "X": X, "Y": Y, "Z": Z, "H": H, "P": P, "PDG": PDG,
    "T": T, "TDG": TDG, "G": G, "XPDG": XPDG,
}
TWO_QUBIT: Dict[str, np.ndarray] = {"CNOT": CNOT, "CZ": CZ, "C-G": CG}
CLIFFORD = frozenset({"I", "X", "Y", "Z", "H", "P", "PDG", "XPDG", "CNOT", "CZ"})


def gate_matrix(name: str) -> np.ndarray:
    if name in SINGLE_QUBIT:
        return SINGLE_QUBIT[name]
    if name in TWO_QUBIT:
        return TWO_QUBIT[name]
    raise ConfigError(f"unknown gate {name}")


def gate_arity(name: str) -> int:
    return 2 if name in TWO_QUBIT else 1


KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / SQRT2
KET_MINUS = np.array([1, -1], dtype=complex) / SQRT2
KET_PLUS_I = np.array([1, 1j], dtype=complex) / SQRT2
KET_MINUS_I = np.array([1, -1j], dtype=complex) / SQRT2
KET_MAGIC = np.array([1, OMEGA], dtype=complex) / SQRT2

NAMED_STATES: Dict[str, np.ndarray] = {
    "0": KET_0, "1": KET_1, "+": KET_PLUS, "-": KET_MINUS,
    "+i": KET_PLUS_I, "-i": KET_MINUS_I, "m": KET_MAGIC,
}
STABILIZER_STATES = ("0", "1", "+", "-", "+i", "-i")


def haar_state(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def resolve_state(state: Union[str, Sequence[complex], np.ndarray], rng=None) -> np.ndarray:
    """A named state, 'haar' (needs rng), or an explicit normalized vector."""
    if isinstance(state, str):
        if state == "haar":
            if rng is None:
                raise ConfigError("a haar input needs a random stream")
            return haar_state(rng)
        if state not in NAMED_STATES:
            raise ConfigError(f"unknown input state {state!r}; known: {sorted(NAMED_STATES)} or 'haar'")
        return NAMED_STATES[state].copy()
    vec = np.asarray(state, dtype=complex).ravel()
    norm = np.linalg.norm(vec)
    if vec.size < 2 or abs(norm - 1.0) > 1e-9:
        raise ConfigError("explicit input states must be normalized vectors")
    return vec / norm


def bell_state() -> np.ndarray:
    return np.array([1, 0, 0, 1], dtype=complex) / SQRT2


def ghz_state(k: int) -> np.ndarray:
    v = np.zeros(2 ** k, dtype=complex)
    v[0] = v[-1] = 1 / SQRT2
    return v


def density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 2:
        return state
    return np.outer(state, state.conj())


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """
    |⟨a|b⟩|² for two pure states; Uhlmann fidelity (tr√(√ρ σ √ρ))² when
    either argument is a density matrix.

    Raises:
        BackendMismatch: if the operands have different dimensions.
    """
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape[0] != b.shape[0]:
        raise BackendMismatch(f"cannot compare states of dimension {a.shape[0]} and {b.shape[0]}")
    if a.ndim == 1 and b.ndim == 1:
        return float(min(1.0, abs(np.vdot(a, b)) ** 2))
    if a.ndim == 1 or b.ndim == 1:
        pure, other = (a, b) if a.ndim == 1 else (b, a)
        return float(min(1.0, max(0.0, np.real(pure.conj() @ other @ pure))))
    root = _sqrtm_psd(a)
    inner = _sqrtm_psd(root @ b @ root)
    return float(min(1.0, max(0.0, np.real(np.trace(inner)) ** 2)))


def _sqrtm_psd(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    rho, sigma = density(rho), density(sigma)
    if rho.shape != sigma.shape:
        raise BackendMismatch(f"cannot compare density matrices of shape {rho.shape} and {sigma.shape}")
    diff = (rho - sigma + (rho - sigma).conj().T) / 2
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = NORM_TOLERANCE) -> bool:
    return 1.0 - fidelity(a, b) <= tol


def bloch_density(ex: float, ey: float, ez: float) -> np.ndarray:
    return (I2 + ex * X + ey * Y + ez * Z) / 2
