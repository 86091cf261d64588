# src/services/magic_service.py
"""
Verification of Clifford-stabilized states: a state |g⟩ with G|g⟩ = |g⟩
is checked against a verified |0⟩ grid with H, controlled-G, H and a
standard-basis readout that must decode to 0.
"""
from typing import Dict, NamedTuple, Optional

import numpy as np

from src.backends.gates import CG, H, I2, KET_0, KET_MAGIC, KET_PLUS, KET_PLUS_I, X, Y, Z, controlled, gate_matrix
from src.services.share_grid import MagicPair, RunContext, attribute, broadcast_columns, decode_words, release_grid
from src.services.vqss_service import VqssService
from src.utils.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class StabilizedState(NamedTuple):
    name: str
    vector: np.ndarray
    gate: str


STABILIZED_STATES: Dict[str, StabilizedState] = {
    "magic": StabilizedState("magic", KET_MAGIC, "G"),
    "plus": StabilizedState("plus", KET_PLUS, "X"),
    "plus_i": StabilizedState("plus_i", KET_PLUS_I, "Y"),
    "zero": StabilizedState("zero", KET_0, "Z"),
}

_GATES = {"G": gate_matrix("G"), "X": X, "Y": Y, "Z": Z}


def _controlled(ctx: RunContext, gate: str, control: int, target: int) -> None:
    """Transversal controlled-G built from the engine's CNOT and C-G."""
    engine = ctx.engine
    if gate == "G":
        engine.apply_logical("C-G", [control, target])
    elif gate == "X":
        engine.apply_logical("CNOT", [control, target])
    elif gate == "Z":
        engine.apply_logical("H", [target])
        engine.apply_logical("CNOT", [control, target])
        engine.apply_logical("H", [target])
    elif gate == "Y":
        engine.apply_logical("PDG", [target])
        engine.apply_logical("CNOT", [control, target])
        engine.apply_logical("P", [target])
    else:
        raise ConfigError(f"no controlled form for {gate}")


def verify_stabilized_state(ctx: RunContext, dealer: int, state: str = "magic", key: Optional[str] = None) -> MagicPair:
    """Shares the named state and a |0⟩ grid, then checks one against the other; a readout of 1 blames everybody."""
    try:
        spec = STABILIZED_STATES[state]
    except KeyError:
        raise ConfigError(f"unknown stabilized state {state!r}; expected one of {sorted(STABILIZED_STATES)}")
    key = key or f"vmagic:{dealer}:{len(ctx.transcript.of_kind('vmagic'))}"
    vqss = VqssService(ctx)
    engine = ctx.engine
    with ctx.ledger.window("vmagic"):
        magic, res_g = vqss.share_and_verify(dealer, spec.vector, role="magic", key=f"{key}:state")
        zero, res_0 = vqss.share_and_verify(dealer, KET_0, role="zero", zero=True, key=f"{key}:zero")
        engine.apply_logical("H", [zero.wire])
        _controlled(ctx, spec.gate, zero.wire, magic.wire)
        engine.apply_logical("H", [zero.wire])
        bits = engine.measure_wire(zero.wire, "Z")
        release_grid(ctx, zero)
    words = broadcast_columns(ctx, bits, dealer, key)
    result = decode_words(ctx, words, "Z")
    blamed = attribute(ctx, key, result)
    value = 0 if result.value is None else result.value
    if result.value is None or value == 1:
        logger.info(f"Stabilizer check {key} by node {dealer} read {result.value}; blaming every node")
        blamed = set(range(1, ctx.n + 1))
    ctx.cheaters.add(key, blamed)
    ctx.transcript.record("vmagic", key=key, dealer=dealer, state=state, value=result.value)
    ctx.transcript.decoded.append(value)
    contributions = set(res_g.apparent) | set(res_0.apparent) | blamed
    return MagicPair(dealer, magic, None, contributions, value)


def vmagic(ctx: RunContext, dealer: int, key: Optional[str] = None) -> MagicPair:
    """Magic-state instance of verify_stabilized_state."""
    return verify_stabilized_state(ctx, dealer, "magic", key)


class DetectionEstimate(NamedTuple):
    exact: float
    measured: float
    trials: int


def stabilizer_check_statevector(target: np.ndarray, gate: str = "G") -> np.ndarray:
    """Two-qubit state after H, controlled-G and H on |0⟩ ⊗ target (control first)."""
    u = _GATES[gate] if isinstance(gate, str) else np.asarray(gate)
    cu = CG if gate == "G" else controlled(u)
    h1 = np.kron(H, I2)
    return h1 @ cu @ h1 @ np.kron(KET_0, np.asarray(target, dtype=complex))


def physical_detection_probability(target, gate: str = "G", trials: int = 10_000,
                                   rng: Optional[np.random.Generator] = None) -> DetectionEstimate:
    """
    Probability that one unencoded stabilizer check reads 1, exactly and as
    a sampled frequency. The exact value is (1 − Re⟨g|G|g⟩)/2.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    psi = stabilizer_check_statevector(target, gate)
    p_one = float(np.sum(np.abs(psi[2:]) ** 2))
    hits = int(np.count_nonzero(rng.random(trials) < p_one))
    return DetectionEstimate(p_one, hits / trials if trials else 0.0, trials)
