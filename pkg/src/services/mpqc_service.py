# src/services/mpqc_service.py
"""
The full computation: verified sharing of every input, transversal
Cliffords, teleported T gates, verified ancillas, the abort decision and
reconstruction of each output at its receiving node.
"""
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.backends.gates import KET_0, resolve_state
from src.circuit.circuit_ir import Circuit
from src.services.magic_service import vmagic
from src.services.share_grid import RunContext, ShareGrid, doom, release_grid
from src.services.teleport_service import gate_teleport
from src.services.vqss_service import VqssService
from src.utils.errors import AmbiguousErasure, ConfigError, TooManyErrors
from src.utils.logger import get_logger

logger = get_logger(__name__)


class WireResult(NamedTuple):
    wire: int
    node: int
    density: Optional[np.ndarray]
    rejected: bool = False

    @property
    def bottom(self) -> bool:
        """True when the node learns ⊥ instead of a state."""
        return self.density is None


class MpqcOutcome(NamedTuple):
    aborted: bool
    outputs: Dict[int, WireResult]
    apparent: FrozenSet[int]
    verdicts: Dict[str, str]
    corrupted_view: Optional[np.ndarray] = None


class MpqcService:
    """
    Runs one circuit on one RunContext.

    Args:
        ctx: a fresh context from build_context.
    """

    def __init__(self, ctx: RunContext):
        self.ctx = ctx
        self.vqss = VqssService(ctx)
        self.grids: Dict[int, ShareGrid] = {}
        self.dealers: Dict[int, int] = {}

    def _prepare_inputs(self, circuit: Circuit, inputs: Sequence, joint_inputs: Iterable[Tuple[Sequence[int], np.ndarray]]) -> Dict[int, int]:
        engine = self.ctx.engine
        raw: Dict[int, int] = {}
        for wires, vector in joint_inputs:
            for w, wire_id in zip(wires, engine.new_joint_wires(vector)):
                raw[int(w)] = wire_id
        for w in range(1, circuit.num_inputs + 1):
            if w in raw:
                continue
            if w > len(inputs):
                raise ConfigError(f"no input state for wire {w}")
            raw[w] = engine.new_wire(resolve_state(inputs[w - 1]))
        return raw

    def run(self, circuit: Circuit, inputs: Sequence, joint_inputs: Iterable = (),
            observe_corrupted: bool = False) -> MpqcOutcome:
        """
        Args:
            circuit: parsed circuit; input wire w is dealt by node w.
            inputs: per-wire states (names or vectors).
            joint_inputs: (wires, vector) pairs for entangled inputs.
            observe_corrupted: record the corrupted nodes' reduced state before reconstruction.

        Returns:
            MpqcOutcome. When aborted, every output is ⊥.
        """
        ctx, net, engine, cheaters = self.ctx, self.ctx.network, self.ctx.engine, self.ctx.cheaters
        if not ctx.code.transversal_clifford:
            raise ConfigError(f"{ctx.code!r} does not support transversal Cliffords")
        if circuit.num_inputs > ctx.n:
            raise ConfigError(f"{circuit.num_inputs} inputs need as many nodes, have {ctx.n}")
        raw = self._prepare_inputs(circuit, inputs, joint_inputs)

        with net.in_phase("sharing"):
            for w in range(1, circuit.num_inputs + 1):
                grid, _ = self.vqss.share_and_verify(w, wire=raw[w], role="data", key=w)
                self.grids[w], self.dealers[w] = grid, w
            if cheaters.exceeds():
                doom(ctx, self.grids.values())

        t_count = 0
        with net.in_phase("computation"):
            for st in circuit.statements:
                if st.op == "OUT":
                    continue
                if st.op == "ANC":
                    w = st.wires[0]
                    dealer = net.draw_node(exclude=sorted(cheaters.B), purpose=f"ancilla dealer for wire {w}")
                    grid, _ = self.vqss.share_and_verify(dealer, KET_0, role="data", zero=True, key=f"anc:w{w}")
                    self.grids[w], self.dealers[w] = grid, dealer
                elif st.op == "T":
                    w = st.wires[0]
                    t_count += 1
                    pair = vmagic(ctx, self.dealers[w], key=f"vmagic:w{w}:{t_count}")
                    self.grids[w] = gate_teleport(ctx, self.grids[w], pair, key=f"gtele:w{w}:{t_count}")
                else:
                    engine.apply_logical(st.op, [self.grids[x].wire for x in st.wires])
                if cheaters.exceeds() and not ctx.doomed:
                    doom(ctx, self.grids.values())

        aborted = cheaters.exceeds()
        ctx.transcript.aborted = aborted
        ctx.transcript.record("abort_check", aborted=aborted, b=sorted(cheaters.B))
        outputs: Dict[int, WireResult] = {}
        view = None
        if aborted:
            logger.info(f"Aborting: {len(cheaters.B)} apparent cheaters {sorted(cheaters.B)} exceed t = {ctx.t}")
            outputs = {w: WireResult(w, node, None) for w, node in circuit.outputs.items()}
        else:
            if observe_corrupted:
                view = corrupted_view(ctx, self.grids.values(), net.corrupted)
            with net.in_phase("reconstruction"):
                for w, node in circuit.outputs.items():
                    outputs[w] = self.reconstruct(self.grids[w], node, w)
        self._release()
        return MpqcOutcome(aborted, outputs, frozenset(cheaters.B), dict(ctx.transcript.verdicts), view)

    def _release(self) -> None:
        for grid in self.grids.values():
            release_grid(self.ctx, grid)
            self.ctx.engine.release_wire(grid.wire)

    def _collect(self, grid: ShareGrid, keys, node: int) -> None:
        net = self.ctx.network
        for key in keys:
            slot = grid.slots[key]
            if slot.owner == node:
                continue
            into = net.reserve(node, slot.role, dealer=slot.dealer, target_role=slot.target_role)
            grid.slots[key] = net.send_qubit(slot.owner, slot, node, into)

    def reconstruct(self, grid: ShareGrid, node: int, wire_label: int = 0) -> WireResult:
        """
        Every share of `grid` travels to `node`, one second-level block at a
        time. Blocks outside B are corrected and decoded; blocks with more
        than t errors join B. At one level the shares outside B stand in for
        decoded blocks. The beacon then picks n − 2t of them and the rest are
        erased before recovery.
        """
        ctx, net, cheaters = self.ctx, self.ctx.network, self.ctx.cheaters
        n, t = ctx.n, ctx.t
        if ctx.levels == 1:
            self._collect(grid, sorted(grid.slots), node)
            decoded = [j for j in range(n) if j + 1 not in cheaters.B]
        else:
            decoded = self._decode_blocks(grid, node)
        if len(decoded) < n - 2 * t:
            logger.info(f"Node {node} has only {len(decoded)} usable shares for wire {wire_label}")
            return self._reject(grid, node, wire_label)
        kept = [p - 1 for p in net.draw_subset([j + 1 for j in decoded], n - 2 * t, f"kept shares for wire {wire_label}")]
        erased = [j for j in range(n) if j not in kept]
        return self._recover(grid, node, wire_label, erased)

    def _decode_blocks(self, grid: ShareGrid, node: int) -> List[int]:
        """Corrects and decodes each second-level block in turn; returns the decoded block indices."""
        ctx, net, engine, cheaters = self.ctx, self.ctx.network, self.ctx.engine, self.ctx.cheaters
        n, t = ctx.n, ctx.t
        tracked = cheaters.recon_sets[node]
        for holder, nodes in cheaters.block_sets.get(node, {}).items():
            tracked[holder] |= nodes
        key = f"recon:{node}"
        decoded: List[int] = []
        for j in range(n):
            keys = [(j, l) for l in range(n)]
            self._collect(grid, keys, node)
            if j + 1 in cheaters.B:
                engine.discard_block(grid.wire, j)
            else:
                try:
                    report = engine.decode_block(grid.wire, j)
                    tracked[j + 1] |= {p + 1 for p in report.positions}
                except TooManyErrors as e:
                    engine.discard_block(grid.wire, j)
                    tracked[j + 1] |= {p + 1 for p in e.positions}
                    cheaters.add(key, {j + 1})
                if len(tracked[j + 1]) > t:
                    cheaters.add(key, {j + 1})
                elif j + 1 not in cheaters.B:
                    decoded.append(j)
            for k in keys:
                net.release(grid.slots.pop(k))
            grid.slots[(j, -1)] = net.allocate(node, "output", wire=grid.wire, dealer=grid.dealer)
        return decoded

    def _recover(self, grid: ShareGrid, node: int, wire_label: int, erased: List[int]) -> WireResult:
        try:
            rho, report = self.ctx.engine.recover_outer(grid.wire, erased)
        except (TooManyErrors, AmbiguousErasure) as e:
            logger.info(f"Node {node} rejects wire {wire_label}: {e}")
            return self._reject(grid, node, wire_label)
        self.ctx.transcript.record("reconstructed", wire=wire_label, node=node, erased=list(erased))
        release_grid(self.ctx, grid)
        return WireResult(wire_label, node, rho)

    def _reject(self, grid: ShareGrid, node: int, wire_label: int) -> WireResult:
        self.ctx.transcript.record("rejected", wire=wire_label, node=node)
        release_grid(self.ctx, grid)
        return WireResult(wire_label, node, None, rejected=True)


def mpqc_run(ctx: RunContext, circuit: Circuit, inputs: Sequence, joint_inputs: Iterable = (),
             observe_corrupted: bool = False) -> MpqcOutcome:
    return MpqcService(ctx).run(circuit, inputs, joint_inputs, observe_corrupted)


def corrupted_view(ctx: RunContext, grids: Iterable[ShareGrid], nodes) -> Optional[np.ndarray]:
    """Reduced state of every share the given nodes hold; needs a physical engine."""
    nodes = set(nodes)
    qubits = [(g.wire, slot.address) for g in grids for _, slot in sorted(g.slots.items()) if slot.owner in nodes]
    if not qubits:
        return None
    return ctx.engine.physical_density(qubits)
