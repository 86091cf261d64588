# src/services/vqss_service.py
from typing import Dict, List, NamedTuple, Optional, Sequence, Set

from src.adversary.strategies import make_strategy
from src.backends.gates import KET_0, KET_PLUS, resolve_state
from src.codes.css_code import steane_code
from src.services.share_grid import (Key, RunContext, ShareGrid, attribute, broadcast_columns, build_context, deal,
                                     decode_words, release_grid)
from src.utils.logger import get_logger

logger = get_logger(__name__)

PASS = "pass"
FAIL = "fail"


class VerificationResult(NamedTuple):
    dealer: int
    key: str
    passed: bool
    apparent: frozenset
    block_sets: Dict[int, frozenset]
    rounds: int
    values: List[Optional[int]]

    @property
    def verdict(self) -> str:
        return PASS if self.passed else FAIL


class VqssService:
    """
    Verifiable sharing of one qubit.

    Args:
        ctx: the run's protocol context.
    """

    def __init__(self, ctx: RunContext):
        self.ctx = ctx

    def share(self, dealer: int, state=None, wire: Optional[int] = None, role: str = "data") -> ShareGrid:
        """Encodes `state` (or an existing raw wire) at `dealer` and deals it out."""
        if wire is None:
            wire = self.ctx.engine.new_wire(resolve_state(state if state is not None else KET_0))
        return deal(self.ctx, dealer, wire, role)

    def verify(self, grid: ShareGrid, zero: bool = False, key: Optional[Key] = None) -> VerificationResult:
        """
        Runs s² + 2s check rounds against `grid`.

        Even rounds check bit flips: an encoded |+⟩ ancilla (|0⟩ when
        `zero`), a CNOT from the data when the beacon says so, a
        standard-basis readout decoded against V. Odd rounds check phases:
        an encoded |0⟩ ancilla, a CNOT into the data when the beacon says
        so, a Fourier-basis readout decoded against W.

        Returns:
            VerificationResult; the dealer passes iff at most t nodes are blamed.
        """
        ctx, engine, net = self.ctx, self.ctx.engine, self.ctx.network
        key = grid.dealer if key is None else key
        blamed: Set[int] = set()
        values: List[Optional[int]] = []
        for r in range(ctx.rounds):
            net.round = r
            bit_flip = r % 2 == 0
            ancilla_state = KET_0 if (zero or not bit_flip) else KET_PLUS
            ancilla = deal(ctx, grid.dealer, engine.new_wire(ancilla_state), "ancilla", target_role=grid.role)
            if net.draw_bit(f"check {key}:{r}"):
                pair = [grid.wire, ancilla.wire] if bit_flip else [ancilla.wire, grid.wire]
                engine.apply_logical("CNOT", pair)
            basis = "Z" if bit_flip else "X"
            bits = engine.measure_wire(ancilla.wire, basis)
            release_grid(ctx, ancilla)
            words = broadcast_columns(ctx, bits, grid.dealer, f"check {key}:{r}")
            result = decode_words(ctx, words, basis)
            values.append(result.value)
            blamed |= attribute(ctx, key, result)
            if zero and bit_flip and result.value != 0:
                logger.info(f"Zero check on {key} decoded {result.value} in round {r}")
                blamed |= set(range(1, ctx.n + 1))
            logger.debug(f"Round {r} on {key}: value={result.value}, blamed={sorted(blamed)}")
        net.round = None
        ctx.cheaters.add(key, blamed)
        passed = len(blamed) <= ctx.t
        verdict = PASS if passed else FAIL
        ctx.transcript.verdicts[f"vqss:{key}"] = verdict
        ctx.transcript.record("verdict", key=str(key), dealer=grid.dealer, verdict=verdict, apparent=sorted(blamed))
        logger.info(f"Dealer {grid.dealer} ({key}) {verdict}s verification, apparent cheaters {sorted(blamed)}")
        block_sets = {h: frozenset(s) for h, s in ctx.cheaters.block_sets[key].items()}
        return VerificationResult(grid.dealer, str(key), passed, frozenset(blamed), block_sets, ctx.rounds, values)

    def zero_verify(self, grid: ShareGrid, key: Optional[Key] = None) -> VerificationResult:
        """Verification plus the requirement that the shared value decodes to 0."""
        return self.verify(grid, zero=True, key=key)

    def share_and_verify(self, dealer: int, state=None, wire: Optional[int] = None, role: str = "data",
                         zero: bool = False, key: Optional[Key] = None):
        with self.ctx.ledger.window("vqss"):
            grid = self.share(dealer, state, wire, role)
            result = self.verify(grid, zero=zero, key=key)
        return grid, result


def standalone_vqss_transcript(kind: str, seed: int, s: int = 1, adversary: str = "honest",
                               corrupt: Sequence[int] = (), state: str = "+") -> List[int]:
    """
    One-level sharing and verification by node 1 on a given engine. Returns
    every broadcast bit followed by the sorted apparent cheaters, so two
    engines can be compared entry by entry.
    """
    code = steane_code()
    strategy = make_strategy(adversary, corrupt or None, adv_seed=seed, n=code.n)
    ctx = build_context(code, s, backend=kind, levels=1, seed=seed, strategy=strategy)
    service = VqssService(ctx)
    grid, result = service.share_and_verify(1, state)
    record = [b for event in ctx.transcript.of_kind("broadcast") for b in event["bits"]]
    return record + [-1] + sorted(result.apparent)
