import numpy as np
import pytest

from src.adversary.audit import ground_truth_audit
from src.adversary.strategies import (ABORT, CORPUS, DEALER_CAUGHT, PASS_CORRECTED, STRATEGIES, HookContext,
                                      Injection, apply_broadcast_hook, apply_hook, expected_verdict, make_strategy)
from src.backends.engines import Address, first_level
from src.services.share_grid import CheaterSets, Transcript
from src.utils.errors import ConfigError


class RecordingEngine:
    def __init__(self):
        self.injected = []

    def inject(self, wire, address, pauli):
        self.injected.append((wire, address, pauli))


def _ctx(event, node, **kwargs):
    return HookContext(phase=kwargs.pop("phase", "sharing"), event=event, node=node, **kwargs)


class TestStrategies:
    def test_corpus_is_registered(self):
        assert set(CORPUS) <= set(STRATEGIES)
        assert "x-on-every-ancilla" in STRATEGIES

    @pytest.mark.parametrize("name, verdict", [
        ("honest", PASS_CORRECTED),
        ("single-x-on-share", PASS_CORRECTED),
        ("bad-dealer-weight-2", DEALER_CAUGHT),
        ("two-cheater-collusion", ABORT),
    ])
    def test_expected_verdicts(self, name, verdict):
        assert expected_verdict(name) == verdict

    def test_construction_errors(self):
        with pytest.raises(ConfigError):
            make_strategy("sleeper-agent")
        with pytest.raises(ConfigError):
            make_strategy("two-cheater-collusion", corrupted=[2])
        with pytest.raises(ConfigError):
            make_strategy("z-spray", corrupted=[9], n=7)

    def test_default_corrupted_sets(self):
        assert make_strategy("bad-dealer-weight-2").corrupted == {1}
        assert make_strategy("two-cheater-collusion").corrupted == {2, 3}
        assert make_strategy("honest").corrupted == frozenset()

    def test_hooks_fire_only_for_corrupted_nodes(self):
        engine, transcript = RecordingEngine(), Transcript()
        strategy = make_strategy("corrupt-before-reconstruct")
        address = Address(4, 1, 2)
        honest = _ctx("on_reconstruct_return", 3, address=address, wire=0, phase="reconstruction")
        assert apply_hook(strategy, honest, engine, transcript) == []
        cheat = _ctx("on_reconstruct_return", 2, address=address, wire=0, phase="reconstruction")
        assert apply_hook(strategy, cheat, engine, transcript) == [Injection(address, "X")]
        assert engine.injected == [(0, address, "X")]
        event = transcript.injections[0]
        assert (event["target_node"], event["block"], event["level"], event["hidden"]) == (2, 4, 2, True)

    def test_bad_dealer_mixes_x_and_z(self):
        strategy = make_strategy("bad-dealer-weight-2")
        injections = strategy.on_dealer_encode(_ctx("on_dealer_encode", 1, dealer=1, role="data"))
        assert injections == [Injection(first_level(0), "X"), Injection(first_level(1), "Z")]
        assert strategy.on_dealer_encode(_ctx("on_dealer_encode", 1, dealer=1, role="zero")) == []

    def test_single_x_fires_once_per_wire(self):
        strategy = make_strategy("single-x-on-share")
        ctx = _ctx("on_receive_qubit", 2, wire=5, address=Address(0, 1, 2), role="data")
        assert len(strategy.on_receive_qubit(ctx)) == 1
        assert strategy.on_receive_qubit(ctx) == []
        first = _ctx("on_receive_qubit", 2, wire=6, address=first_level(1), role="data")
        assert strategy.on_receive_qubit(first) == []

    def test_z_spray_skips_magic_grids(self):
        strategy = make_strategy("z-spray")
        share = Address(1, 1, 2)
        assert strategy.on_receive_qubit(_ctx("on_receive_qubit", 2, address=share, role="data"))
        assert strategy.on_receive_qubit(_ctx("on_receive_qubit", 2, address=share, role="ancilla",
                                              target_role="data"))
        assert not strategy.on_receive_qubit(_ctx("on_receive_qubit", 2, address=share, role="magic"))
        assert not strategy.on_receive_qubit(_ctx("on_receive_qubit", 2, address=share, role="ancilla",
                                                  target_role="magic"))

    def test_collusion_splits_paulis(self):
        strategy = make_strategy("two-cheater-collusion")
        ctx2 = _ctx("on_receive_qubit", 2, address=first_level(1), role="data")
        ctx3 = _ctx("on_receive_qubit", 3, address=first_level(2), role="data")
        assert strategy.on_receive_qubit(ctx2)[0].pauli == "X"
        assert strategy.on_receive_qubit(ctx3)[0].pauli == "Z"

    def test_broadcast_lie_is_recorded(self):
        transcript = Transcript()
        strategy = make_strategy("lie-on-broadcast", adv_seed=1)
        bits = np.zeros(7, dtype=np.uint8)
        sent = apply_broadcast_hook(strategy, _ctx("on_broadcast", 2, round=0), bits, transcript)
        assert int(sent.sum()) == 1 and not bits.any()
        assert transcript.of_kind("lie")[0]["flipped"] == [int(np.flatnonzero(sent)[0])]
        assert apply_broadcast_hook(strategy, _ctx("on_broadcast", 1), bits, transcript) is bits


class TestAudit:
    def _transcript(self):
        transcript = Transcript()
        transcript.record("injection", node=2, wire=0, event="on_receive_qubit", role="data", dealer=1,
                          block=2, position=3, level=2, target_node=4, pauli="X", hidden=True)
        return transcript

    def test_nodes_touched_by_injections_are_explained(self):
        transcript = self._transcript()
        cheaters = CheaterSets(7, 1, transcript)
        cheaters.add(1, [3, 4])
        cheaters.add("recon:5", [6])
        audit = ground_truth_audit(transcript, [2], cheaters)
        assert audit.apparent == [3, 4, 6]
        assert audit.explainable == [3, 4]
        assert audit.unexplained == [6]
        assert audit.honest_in_b == [3, 4, 6]
        assert audit.injections == 1
        assert not audit.clean

    def test_wholesale_blame_is_explained_when_tampering_happened(self):
        transcript = self._transcript()
        cheaters = CheaterSets(7, 1, transcript)
        cheaters.set_all("anc:w0")
        assert ground_truth_audit(transcript, [2], cheaters).clean

    def test_falls_back_to_transcript_history(self):
        transcript = Transcript()
        cheaters = CheaterSets(7, 1, transcript)
        cheaters.add("gtele:w0:0", [5])
        audit = ground_truth_audit(transcript, [])
        assert audit.apparent == [5] and audit.unexplained == [5]

    def test_honest_run_is_clean(self):
        audit = ground_truth_audit(Transcript(), [])
        assert audit.clean and audit.apparent == []
