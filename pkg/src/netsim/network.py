# src/netsim/network.py
"""
Simulated n-node network.

Qubits live in the run's share engine; the network only tracks which node
holds which slot, charges the ledger and gives corrupted nodes their hook
points. Channels are ideal: all deviation comes from the adversary.
"""
import itertools
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from src.adversary.strategies import AdversaryStrategy, HookContext, apply_broadcast_hook, apply_hook
from src.backends.engines import Address, ShareEngine
from src.netsim.beacon import Beacon
from src.netsim.ledger import ResourceLedger
from src.utils.errors import ConfigError
from src.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class Slot:
    """One physical qubit position in a node's workspace."""
    id: int
    owner: int
    role: str
    wire: Optional[int] = None
    address: Optional[Address] = None
    dealer: Optional[int] = None
    target_role: Optional[str] = None
    filled: bool = True


class Network:
    """
    Args:
        n: node count.
        engine: quantum state of the run.
        ledger: resource counters.
        beacon: public randomness.
        transcript: event sink with a `record(kind, **payload)` method.
        adversary: strategy driving the corrupted nodes, if any.
    """

    def __init__(self, n: int, engine: ShareEngine, ledger: ResourceLedger, beacon: Beacon,
                 transcript, adversary: Optional[AdversaryStrategy] = None):
        self.n = n
        self.engine = engine
        self.ledger = ledger
        self.beacon = beacon
        self.transcript = transcript
        self.adversary = adversary
        self.phase = ledger.phase
        self.round: Optional[int] = None
        self.slots: Dict[int, Slot] = {}
        self._ids = itertools.count()

    @property
    def corrupted(self):
        return self.adversary.corrupted if self.adversary is not None else frozenset()

    @contextmanager
    def in_phase(self, name: str):
        previous = self.phase
        self.phase = name
        self.ledger.set_phase(name)
        self.transcript.record("phase", name=name)
        logger.info(f"Entering {name} phase")
        try:
            yield
        finally:
            self.phase = previous
            self.ledger.phase = previous

    def _check_node(self, node: int) -> None:
        if not 1 <= node <= self.n:
            raise ConfigError(f"node {node} outside [1, {self.n}]")

    def allocate(self, node: int, role: str, wire: Optional[int] = None, address: Optional[Address] = None,
                 dealer: Optional[int] = None, target_role: Optional[str] = None, filled: bool = True) -> Slot:
        """Claims one workspace slot at `node`."""
        self._check_node(node)
        self.ledger.allocate(node, role)
        slot = Slot(next(self._ids), node, role, wire, address, dealer, target_role, filled)
        self.slots[slot.id] = slot
        return slot

    def reserve(self, node: int, role: str, **tags) -> Slot:
        """An empty slot that a later transfer fills."""
        return self.allocate(node, role, filled=False, **tags)

    def release(self, slot: Slot) -> None:
        if self.slots.pop(slot.id, None) is not None:
            self.ledger.free(slot.owner, slot.role)

    def release_all(self, slots) -> None:
        for slot in list(slots):
            self.release(slot)

    def live_slots(self, node: int) -> List[Slot]:
        return [s for s in self.slots.values() if s.owner == node]

    def _context(self, slot: Slot, event: str, node: int, peer: Optional[int]) -> HookContext:
        return HookContext(phase=self.phase, event=event, node=node, dealer=slot.dealer, role=slot.role,
                           target_role=slot.target_role, wire=slot.wire, address=slot.address,
                           round=self.round, peer=peer, levels=self.engine.levels)

    def send_qubit(self, src: int, slot: Slot, dst: int, into: Slot) -> Slot:
        """
        Moves the payload of `slot` (held by `src`) into the reserved slot
        `into` at `dst` and frees the sender's slot.

        Returns:
            The receiving slot, now filled.
        """
        if slot.owner != src or slot.id not in self.slots:
            raise ConfigError(f"node {src} does not hold slot {slot.id}")
        if into.owner != dst or into.filled:
            raise ConfigError(f"slot {into.id} is not an empty reservation at node {dst}")
        send_event = "on_reconstruct_return" if self.phase == "reconstruction" else "on_send_qubit"
        apply_hook(self.adversary, self._context(slot, send_event, src, dst), self.engine, self.transcript)
        self.ledger.record_send(src, dst)
        self._fill(into, slot)
        self.release(slot)
        apply_hook(self.adversary, self._context(into, "on_receive_qubit", dst, src), self.engine, self.transcript)
        return into

    def move_local(self, slot: Slot, into: Slot) -> Slot:
        """Same-node transfer: no channel use, no hooks."""
        if slot.owner != into.owner:
            raise ConfigError("local moves stay on one node")
        self._fill(into, slot)
        self.release(slot)
        return into

    def _fill(self, into: Slot, source: Slot) -> None:
        into.wire, into.address, into.filled = source.wire, source.address, True
        into.dealer = source.dealer if into.dealer is None else into.dealer
        into.target_role = source.target_role if into.target_role is None else into.target_role

    def dealer_encoded(self, dealer: int, wire: int, role: str, target_role: Optional[str] = None) -> None:
        """Hook point right after a dealer's first-level encoding."""
        ctx = HookContext(phase=self.phase, event="on_dealer_encode", node=dealer, dealer=dealer, role=role,
                          target_role=target_role, wire=wire, round=self.round, levels=self.engine.levels)
        apply_hook(self.adversary, ctx, self.engine, self.transcript)

    def broadcast(self, node: int, bits, dealer: Optional[int] = None, label: str = "") -> np.ndarray:
        """
        Authenticated broadcast. A corrupted sender may choose its bits, but
        every node receives the same word.
        """
        bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
        ctx = HookContext(phase=self.phase, event="on_broadcast", node=node, dealer=dealer, round=self.round,
                          levels=self.engine.levels)
        sent = apply_broadcast_hook(self.adversary, ctx, bits.copy(), self.transcript)
        self.ledger.record_broadcast(int(sent.size))
        self.transcript.record("broadcast", node=node, label=label, bits=[int(b) for b in sent])
        return sent

    def draw_bit(self, purpose: str) -> int:
        bit = self.beacon.draw_bit(purpose)
        self.transcript.record("beacon", purpose=purpose, value=bit)
        return bit

    def draw_node(self, exclude=(), purpose: str = "") -> int:
        node = self.beacon.draw_node(self.n, exclude, purpose)
        self.transcript.record("beacon", purpose=purpose, value=node)
        return node

    def draw_subset(self, population, size: int, purpose: str = "") -> List[int]:
        subset = self.beacon.draw_subset(population, size, purpose)
        self.transcript.record("beacon", purpose=purpose, value=list(subset))
        return subset
