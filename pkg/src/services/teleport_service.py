# src/services/teleport_service.py
from typing import NamedTuple

import numpy as np

from src.backends.gates import KET_MAGIC, T, XPDG, equal_up_to_phase
from src.services.share_grid import MagicPair, RunContext, ShareGrid, attribute, broadcast_columns, decode_words, release_grid
from src.utils.logger import get_logger

logger = get_logger(__name__)


def gate_teleport(ctx: RunContext, data: ShareGrid, pair: MagicPair, key: str) -> ShareGrid:
    """Teleports T onto the shared data; the magic grid carries the result."""
    engine = ctx.engine
    engine.apply_logical("CNOT", [pair.magic.wire, data.wire])
    bits = engine.measure_wire(data.wire, "Z")
    release_grid(ctx, data)
    words = broadcast_columns(ctx, bits, data.dealer, key)
    result = decode_words(ctx, words, "Z")
    blamed = attribute(ctx, key, result)
    if result.value is None:
        logger.info(f"Teleport readout {key} is uncorrectable; blaming every node")
        blamed = set(range(1, ctx.n + 1))
    ctx.cheaters.add(key, blamed)
    a = 0 if (ctx.doomed or result.value is None) else result.value
    if a == 1:
        engine.apply_logical("XPDG", [pair.magic.wire])
    ctx.transcript.record("gtele", key=key, value=result.value)
    ctx.transcript.decoded.append(a)
    logger.debug(f"Teleported T via {key}: a={a}")
    out = pair.magic
    out.role = "data"
    return out


class TeleportBranch(NamedTuple):
    outcome: int
    probability: float
    output: np.ndarray


def physical_teleport(psi) -> list:
    """
    Unencoded two-qubit run of the T teleport: |m⟩ as control, ψ as
    target, Z readout of ψ, XP† on outcome 1. Returns both branches with
    the normalized output of the magic qubit.
    """
    psi = np.asarray(psi, dtype=complex)
    state = np.kron(KET_MAGIC, psi)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    state = (cnot @ state).reshape(2, 2)
    branches = []
    for outcome in (0, 1):
        out = state[:, outcome].copy()
        prob = float(np.vdot(out, out).real)
        if prob < 1e-15:
            continue
        out /= np.sqrt(prob)
        if outcome == 1:
            out = XPDG @ out
        branches.append(TeleportBranch(outcome, prob, out))
    return branches


def teleport_matches_t(psi, tol: float = 1e-12) -> bool:
    return all(equal_up_to_phase(b.output, T @ np.asarray(psi, dtype=complex), tol) for b in physical_teleport(psi))
