# src/services/share_grid.py
"""
Shared protocol state: transcripts, apparent-cheater sets, share grids and
the run context every protocol service works against.
"""
import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

import numpy as np

from src.adversary.strategies import AdversaryStrategy
from src.backends.engines import Address, ShareEngine, first_level, make_engine
from src.codes.css_code import CssCode
from src.codes.gf2_codes import CORRECTED, UNCORRECTABLE_LEVEL1, DoubleDecodeResult, double_decode, syndrome_decode
from src.netsim.beacon import Beacon, run_streams
from src.netsim.ledger import ResourceLedger
from src.netsim.network import Network, Slot
from src.utils.logger import get_logger

logger = get_logger(__name__)

Key = Union[int, str]


class Transcript:
    """
    Ordered event log of one run. Events flagged `hidden` are ground truth
    for the audit and never feed protocol decisions.
    """

    def __init__(self):
        self.events: List[dict] = []
        self.aborted = False
        self.verdicts: Dict[str, str] = {}
        self.decoded: List[int] = []

    def record(self, kind: str, **payload) -> dict:
        event = {"index": len(self.events), "kind": kind, **payload}
        self.events.append(event)
        return event

    def of_kind(self, kind: str) -> List[dict]:
        return [e for e in self.events if e["kind"] == kind]

    @property
    def public_events(self) -> List[dict]:
        return [e for e in self.events if not e.get("hidden")]

    @property
    def injections(self) -> List[dict]:
        return self.of_kind("injection")

    def b_history(self) -> List[List[int]]:
        return [e["b"] for e in self.of_kind("b_update")]

    def digest(self) -> str:
        """sha256 over the public events; identical runs give identical digests."""
        blob = json.dumps(self.public_events, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()


class CheaterSets:
    """
    Apparent-cheater bookkeeping.

    `contributions` holds one set per source (a dealer id for input
    verification, a tag such as "gtele:3" otherwise); B is their union, so
    it only ever grows. `block_sets[key][ℓ]` collects error positions seen
    in node ℓ's second-level block, and `recon_sets[i][j]` the positions
    found while node i reconstructs block j.
    """

    def __init__(self, n: int, t: int, transcript: Optional[Transcript] = None):
        self.n = n
        self.t = t
        self.transcript = transcript
        self.contributions: Dict[Key, Set[int]] = {}
        self.block_sets: Dict[Key, Dict[int, Set[int]]] = defaultdict(lambda: defaultdict(set))
        self.recon_sets: Dict[int, Dict[int, Set[int]]] = defaultdict(lambda: defaultdict(set))

    @property
    def B(self) -> Set[int]:
        out: Set[int] = set()
        for nodes in self.contributions.values():
            out |= nodes
        return out

    def dealer_set(self, key: Key) -> Set[int]:
        return set(self.contributions.get(key, set()))

    def add(self, key: Key, nodes) -> None:
        nodes = {int(x) for x in nodes}
        current = self.contributions.setdefault(key, set())
        if nodes - current:
            current |= nodes
            logger.debug(f"Apparent cheaters from {key}: {sorted(current)}")
            if self.transcript is not None:
                self.transcript.record("b_update", key=str(key), added=sorted(nodes), b=sorted(self.B))

    def set_all(self, key: Key) -> None:
        self.add(key, range(1, self.n + 1))

    def add_block(self, key: Key, block_holder: int, nodes) -> None:
        self.block_sets[key][block_holder] |= {int(x) for x in nodes}

    def exceeds(self) -> bool:
        return len(self.B) > self.t


@dataclass
class ShareGrid:
    """
    Slots of one dealt wire. Key (j, ℓ) is the qubit of node j+1's
    second-level block held by node ℓ+1; one-level grids use j = 0.
    """
    dealer: int
    wire: int
    role: str
    levels: int
    slots: Dict[Tuple[int, int], Slot] = field(default_factory=dict)

    def column(self, position: int) -> List[Slot]:
        return [slot for (j, l), slot in sorted(self.slots.items()) if l == position]

    def block(self, j: int) -> List[Slot]:
        return [slot for (b, l), slot in sorted(self.slots.items()) if b == j]


@dataclass
class MagicPair:
    """A verified stabilized-state grid together with the zero grid used to check it."""
    dealer: int
    magic: ShareGrid
    zero: Optional[ShareGrid]
    contributions: Set[int] = field(default_factory=set)
    value: int = 0


@dataclass
class RunContext:
    """Everything one protocol run touches."""
    code: CssCode
    s: int
    engine: ShareEngine
    network: Network
    cheaters: CheaterSets
    transcript: Transcript
    doomed: bool = False

    @property
    def n(self) -> int:
        return self.code.n

    @property
    def t(self) -> int:
        return self.code.t

    @property
    def levels(self) -> int:
        return self.engine.levels

    @property
    def ledger(self) -> ResourceLedger:
        return self.network.ledger

    @property
    def rounds(self) -> int:
        return self.s * self.s + 2 * self.s


def build_context(code: CssCode, s: int, backend: str = "frame", levels: int = 2, seed: int = 0,
                  strategy: Optional[AdversaryStrategy] = None, adv_seed: Optional[int] = None,
                  workspace_bound: Optional[int] = None, cg_mode: str = "ideal") -> RunContext:
    """
    Wires up engine, ledger, beacon and network for one seeded run.

    Args:
        workspace_bound: per-node live-qubit limit to enforce, or None to only measure.
    """
    streams = run_streams(seed, adv_seed)
    transcript = Transcript()
    engine = make_engine(backend, code, levels, streams.measurement, cg_mode=cg_mode)
    ledger = ResourceLedger(code.n, bound=workspace_bound)
    network = Network(code.n, engine, ledger, Beacon(streams.beacon), transcript, strategy)
    cheaters = CheaterSets(code.n, code.t, transcript)
    return RunContext(code, s, engine, network, cheaters, transcript)


def deal(ctx: RunContext, dealer: int, wire: int, role: str, target_role: Optional[str] = None) -> ShareGrid:
    """
    Distributes a raw wire held by `dealer` as a full share grid.

    The dealer encodes into n first-level qubits and sends n − 1 of them
    out. At two levels each node then stages its share plus n − 1 fresh
    qubits, re-encodes, and the columns are assembled: every node reserves
    its n slots first, then receives n − 1 shares and moves its own.
    """
    n, net, engine = ctx.n, ctx.network, ctx.engine
    tags = dict(wire=wire, dealer=dealer, target_role=target_role)
    first = [net.allocate(dealer, role, address=first_level(p), **tags) for p in range(n)]
    engine.encode_outer(wire)
    net.dealer_encoded(dealer, wire, role, target_role)

    held: Dict[int, Slot] = {}
    for p in range(n):
        if p + 1 == dealer:
            held[p] = first[p]
            continue
        into = net.reserve(p + 1, role, dealer=dealer, target_role=target_role)
        held[p] = net.send_qubit(dealer, first[p], p + 1, into)
    if ctx.levels == 1:
        return ShareGrid(dealer, wire, role, 1, {(0, p): held[p] for p in range(n)})

    staging: Dict[int, Dict[int, Slot]] = {}
    for j in range(n):
        fresh = [net.allocate(j + 1, role, **tags) for _ in range(n - 1)]
        engine.encode_block(wire, j)
        order = [j] + [l for l in range(n) if l != j]
        block = [held[j]] + fresh
        for slot, l in zip(block, order):
            slot.address = Address(j, l, 2)
        staging[j] = {slot.address.position: slot for slot in block}

    columns = {l: {j: net.reserve(l + 1, role, dealer=dealer, target_role=target_role) for j in range(n)}
               for l in range(n)}
    slots: Dict[Tuple[int, int], Slot] = {}
    for j in range(n):
        for l in range(n):
            if l == j:
                slots[(j, l)] = net.move_local(staging[j][l], columns[l][j])
            else:
                slots[(j, l)] = net.send_qubit(j + 1, staging[j][l], l + 1, columns[l][j])
    logger.debug(f"Node {dealer} dealt wire {wire} as a {role} grid")
    return ShareGrid(dealer, wire, role, 2, slots)


def release_grid(ctx: RunContext, grid: ShareGrid) -> None:
    ctx.network.release_all(grid.slots.values())
    grid.slots.clear()


def broadcast_columns(ctx: RunContext, bits: np.ndarray, dealer: Optional[int], label: str) -> np.ndarray:
    """Each node broadcasts its column of measured bits; returns the public word matrix."""
    words = np.zeros_like(bits)
    for l in range(ctx.n):
        words[:, l] = ctx.network.broadcast(l + 1, bits[:, l], dealer=dealer, label=label)
    return words


def decode_words(ctx: RunContext, words: np.ndarray, basis: str) -> DoubleDecodeResult:
    """
    Decodes a public word matrix: Z-basis outcomes against V read out by z̄,
    X-basis outcomes against W read out by x̄.
    """
    classical = ctx.code.v if basis == "Z" else ctx.code.w
    readout = ctx.code.z_bar if basis == "Z" else ctx.code.x_bar
    if ctx.levels == 2:
        return double_decode(classical, words, readout)
    single = syndrome_decode(classical, words[0])
    if not single.corrected:
        return DoubleDecodeResult(None, {}, (), UNCORRECTABLE_LEVEL1)
    value = int(single.codeword.astype(np.int64) @ readout.astype(np.int64) % 2)
    return DoubleDecodeResult(value, {}, single.errors, CORRECTED)


def attribute(ctx: RunContext, key: Key, result: DoubleDecodeResult) -> Set[int]:
    """
    Turns one decode into apparent cheaters for `key`: block errors feed the
    per-block sets, first-level errors and unreadable blocks go straight
    in, and any block set above t blames its block's node. An unreadable
    outer word blames everybody.
    """
    if result.status == UNCORRECTABLE_LEVEL1:
        return set(range(1, ctx.n + 1))
    blamed = {e + 1 for e in result.first_level_errors} | {j + 1 for j in result.uncorrectable_blocks}
    for j, positions in result.block_errors.items():
        ctx.cheaters.add_block(key, j + 1, (p + 1 for p in positions))
    blamed |= {holder for holder, nodes in ctx.cheaters.block_sets[key].items() if len(nodes) > ctx.t}
    return blamed


def doom(ctx: RunContext, grids) -> None:
    """Too many apparent cheaters: every share goes back to |0⟩ and the run keeps going through the motions."""
    if not ctx.doomed:
        logger.info(f"|B| = {len(ctx.cheaters.B)} exceeds t = {ctx.t}; resetting all shares")
        ctx.transcript.record("doomed", b=sorted(ctx.cheaters.B))
    ctx.doomed = True
    for grid in grids:
        ctx.engine.reset_wire(grid.wire)
