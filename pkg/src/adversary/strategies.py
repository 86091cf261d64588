# src/adversary/strategies.py
"""
Non-adaptive adversary strategies.

A strategy fixes its corrupted set before the run and reacts only to the
HookContext it is handed at each touchpoint. Quantum deviations are Pauli
injections on the corrupted node's own shares; classical deviations are
substituted broadcast bits (one value for everybody).
"""
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.backends.engines import Address, first_level
from src.utils.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)

PASS_CORRECTED = "pass-corrected"
DEALER_CAUGHT = "dealer-caught"
ABORT = "abort"


@dataclass(frozen=True)
class HookContext:
    """Everything a strategy may look at. Nothing else is passed in."""
    phase: str
    event: str
    node: int
    dealer: Optional[int] = None
    role: str = "data"
    target_role: Optional[str] = None
    wire: Optional[int] = None
    address: Optional[Address] = None
    round: Optional[int] = None
    peer: Optional[int] = None
    levels: int = 2

    @property
    def is_share(self) -> bool:
        """True for a share of the final encoding (second level, or first in one-level runs)."""
        return self.address is not None and self.address.level == self.levels


class Injection(NamedTuple):
    address: Address
    pauli: str


class AdversaryStrategy:
    """Honest behaviour: every hook is a no-op."""
    name = "honest"
    expected_verdict = PASS_CORRECTED
    default_corrupt: Tuple[int, ...] = ()

    def __init__(self, corrupted: Sequence[int] = (), rng: Optional[np.random.Generator] = None):
        self.corrupted: FrozenSet[int] = frozenset(int(c) for c in corrupted)
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def controls(self, node: int) -> bool:
        return node in self.corrupted

    def on_dealer_encode(self, ctx: HookContext) -> List[Injection]:
        return []

    def on_send_qubit(self, ctx: HookContext) -> List[Injection]:
        return []

    def on_receive_qubit(self, ctx: HookContext) -> List[Injection]:
        return []

    def on_broadcast(self, ctx: HookContext, bits: np.ndarray) -> np.ndarray:
        return bits

    def on_reconstruct_return(self, ctx: HookContext) -> List[Injection]:
        return []

    def __repr__(self) -> str:
        return f"{type(self).__name__}(corrupted={sorted(self.corrupted)})"


class SingleXOnShare(AdversaryStrategy):
    """X on the first share of each data grid a cheater receives."""
    name = "single-x-on-share"
    default_corrupt = (2,)

    def __init__(self, corrupted=(), rng=None):
        super().__init__(corrupted, rng)
        self._hit = set()

    def on_receive_qubit(self, ctx):
        key = (ctx.node, ctx.wire)
        if ctx.phase != "sharing" or ctx.role != "data" or not ctx.is_share or key in self._hit:
            return []
        self._hit.add(key)
        return [Injection(ctx.address, "X")]


class ZSpray(AdversaryStrategy):
    """
    Z on every data share received, on ancillas checking data grids and on
    every share returned at reconstruction. Zero and magic grids are left
    alone: the H inside magic verification would turn Z into X ahead of C-G.
    """
    name = "z-spray"
    default_corrupt = (2,)

    def on_receive_qubit(self, ctx):
        if not ctx.is_share:
            return []
        if ctx.role == "data" or (ctx.role == "ancilla" and ctx.target_role == "data"):
            return [Injection(ctx.address, "Z")]
        return []

    def on_reconstruct_return(self, ctx):
        return [Injection(ctx.address, "Z")]


class BadDealerWeight2(AdversaryStrategy):
    """
    A corrupted dealer puts X on one first-level share and Z on another
    right after encoding its data. Two mixed errors exceed t = 1 at the
    first level, which verification must catch.
    """
    name = "bad-dealer-weight-2"
    expected_verdict = DEALER_CAUGHT
    default_corrupt = (1,)

    def __init__(self, corrupted=(), rng=None, positions: Tuple[int, int] = (0, 1)):
        super().__init__(corrupted, rng)
        self.positions = positions

    def on_dealer_encode(self, ctx):
        if ctx.role != "data":
            return []
        p, q = self.positions
        return [Injection(first_level(p), "X"), Injection(first_level(q), "Z")]


class LieOnBroadcast(AdversaryStrategy):
    """Flips the reported bit of one randomly chosen block of the cheater's own column each round."""
    name = "lie-on-broadcast"
    default_corrupt = (2,)

    def on_broadcast(self, ctx, bits):
        bits = np.array(bits, dtype=np.uint8, copy=True)
        if bits.size:
            bits[int(self.rng.integers(bits.size))] ^= 1
        return bits


class CorruptBeforeReconstruct(AdversaryStrategy):
    """X on every share a cheater hands back at reconstruction."""
    name = "corrupt-before-reconstruct"
    default_corrupt = (2,)

    def on_reconstruct_return(self, ctx):
        return [Injection(ctx.address, "X")]


class TwoCheaterCollusion(AdversaryStrategy):
    """
    The first cheater puts X and the second Z on its own first-level share
    of every data grid before re-encoding. Together they exceed t.
    """
    name = "two-cheater-collusion"
    expected_verdict = ABORT
    default_corrupt = (2, 3)

    def _pauli_for(self, node: int) -> str:
        ordered = sorted(self.corrupted)
        return "X" if node == ordered[0] else "Z"

    def on_receive_qubit(self, ctx):
        if ctx.role != "data" or ctx.address is None or ctx.address.level != 1:
            return []
        return [Injection(ctx.address, self._pauli_for(ctx.node))]

    def on_dealer_encode(self, ctx):
        if ctx.role != "data":
            return []
        return [Injection(first_level(ctx.node - 1), self._pauli_for(ctx.node))]


class XOnEveryAncilla(AdversaryStrategy):
    """X on each share of every ancilla checking a data grid."""
    name = "x-on-every-ancilla"
    default_corrupt = (2,)

    def on_receive_qubit(self, ctx):
        if ctx.is_share and ctx.role == "ancilla" and ctx.target_role == "data":
            return [Injection(ctx.address, "X")]
        return []


STRATEGIES: Dict[str, Callable[..., AdversaryStrategy]] = {
    cls.name: cls for cls in (AdversaryStrategy, SingleXOnShare, ZSpray, BadDealerWeight2, LieOnBroadcast,
                              CorruptBeforeReconstruct, TwoCheaterCollusion, XOnEveryAncilla)
}

# Entries the acceptance sweeps iterate over.
CORPUS = ("honest", "single-x-on-share", "z-spray", "bad-dealer-weight-2", "lie-on-broadcast",
          "corrupt-before-reconstruct", "two-cheater-collusion")


def expected_verdict(name: str) -> str:
    return _strategy_class(name).expected_verdict


def _strategy_class(name: str):
    try:
        return STRATEGIES[name]
    except KeyError:
        raise ConfigError(f"unknown adversary strategy {name!r}; expected one of {sorted(STRATEGIES)}")


def make_strategy(name: str, corrupted: Optional[Sequence[int]] = None, adv_seed: int = 0,
                  n: Optional[int] = None) -> AdversaryStrategy:
    """
    Fresh strategy instance for one run.

    Args:
        name: corpus entry.
        corrupted: node ids; the entry's default set when omitted.
        adv_seed: seed of the strategy's private stream.
        n: node count, used to validate the corrupted ids.
    """
    cls = _strategy_class(name)
    corrupted = tuple(cls.default_corrupt if corrupted is None else corrupted)
    if n is not None and any(not 1 <= c <= n for c in corrupted):
        raise ConfigError(f"corrupted ids {corrupted} out of range for n={n}")
    if cls is TwoCheaterCollusion and len(set(corrupted)) < 2:
        raise ConfigError("two-cheater-collusion needs two corrupted nodes")
    return cls(corrupted, np.random.default_rng(adv_seed))


def apply_hook(strategy: Optional[AdversaryStrategy], ctx: HookContext, engine, transcript=None) -> List[Injection]:
    """
    Fires the hook named by `ctx.event` for a corrupted node, applies the
    returned injections to `engine` and logs them as ground truth.
    """
    if strategy is None or not strategy.controls(ctx.node):
        return []
    hook = getattr(strategy, ctx.event)
    injections = hook(ctx) or []
    for injection in injections:
        engine.inject(ctx.wire, injection.address, injection.pauli)
        if transcript is not None:
            transcript.record("injection", node=ctx.node, wire=ctx.wire, event=ctx.event, role=ctx.role,
                              dealer=ctx.dealer, block=injection.address.block,
                              position=injection.address.position, level=injection.address.level,
                              target_node=injection.address.holder, pauli=injection.pauli, hidden=True)
        logger.debug(f"{strategy.name}: node {ctx.node} injected {injection.pauli} at {injection.address} ({ctx.event})")
    return injections


def apply_broadcast_hook(strategy: Optional[AdversaryStrategy], ctx: HookContext, bits: np.ndarray,
                         transcript=None) -> np.ndarray:
    """Lets a corrupted broadcaster pick its bits; records the flipped positions as ground truth."""
    if strategy is None or not strategy.controls(ctx.node):
        return bits
    sent = np.asarray(strategy.on_broadcast(ctx, bits), dtype=np.uint8)
    flipped = np.flatnonzero(sent != bits)
    if flipped.size and transcript is not None:
        transcript.record("lie", node=ctx.node, round=ctx.round, dealer=ctx.dealer,
                          flipped=[int(i) for i in flipped], hidden=True)
    return sent
