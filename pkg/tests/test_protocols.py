import numpy as np
import pytest

from src.adversary.strategies import make_strategy
from src.backends.cross_validate import cross_validate_vqss
from src.backends.engines import Address
from src.backends.gates import (CG, KET_0, KET_1, KET_MAGIC, KET_PLUS, T, bell_state, density, fidelity,
                                haar_state, trace_distance)
from src.circuit.circuit_ir import parse
from src.codes.css_code import steane_code
from src.netsim.ledger import ledger_report
from src.services.magic_service import (physical_detection_probability, stabilizer_check_statevector,
                                        verify_stabilized_state, vmagic)
from src.services.mpqc_service import MpqcService, mpqc_run
from src.services.oracle_service import bloch_vector, ideal_densities, ideal_oracle
from src.services.share_grid import build_context
from src.services.teleport_service import gate_teleport, physical_teleport, teleport_matches_t
from src.services.vqss_service import PASS, VqssService
from src.utils.errors import ConfigError

CNOT_CIRCUIT = parse("WIRES 2\nCNOT 1 2\nOUT 1 1\nOUT 2 2\n")
T_CIRCUIT = parse("WIRES 1\nT 1\nOUT 1 1\n")
ANCILLA_CIRCUIT = parse("WIRES 1\nANC 2\nCNOT 1 2\nOUT 2 1\n")
IDENTITY_CIRCUIT = parse("WIRES 1\nOUT 1 1\n")


@pytest.fixture(scope="module")
def steane():
    return steane_code()


def _ctx(code, levels=2, s=1, seed=0, adversary=None, corrupt=None):
    strategy = make_strategy(adversary, corrupt, adv_seed=seed) if adversary else None
    return build_context(code, s, backend="frame", levels=levels, seed=seed, strategy=strategy)


class TestVqss:
    def test_honest_dealer_passes(self, steane):
        ctx = _ctx(steane, s=2)
        grid, result = VqssService(ctx).share_and_verify(1, KET_PLUS)
        assert result.passed and result.verdict == PASS
        assert result.apparent == frozenset()
        assert result.rounds == 8 and len(result.values) == 8
        assert ctx.transcript.verdicts["vqss:1"] == PASS
        assert len(grid.slots) == 49

    def test_workspace_of_one_verification(self, steane):
        ctx = _ctx(steane)
        VqssService(ctx).share_and_verify(1, KET_0)
        assert ledger_report(ctx.ledger, 1).measured["vqss_workspace"] == 3 * 7

    @pytest.mark.parametrize("levels", [1, 2])
    def test_single_x_never_blames_more_than_the_cheater(self, steane, levels):
        for seed in range(4):
            ctx = _ctx(steane, levels=levels, seed=seed, adversary="single-x-on-share")
            _, result = VqssService(ctx).share_and_verify(1, KET_PLUS)
            assert result.passed
            assert result.apparent <= {2}

    def test_zero_verify_of_zero_reads_zero(self, steane):
        ctx = _ctx(steane)
        service = VqssService(ctx)
        grid = service.share(3, KET_0, role="zero")
        result = service.zero_verify(grid, key="z")
        assert result.passed
        assert all(v == 0 for v in result.values[::2])

    def test_frame_and_statevector_transcripts_agree(self):
        assert cross_validate_vqss(range(3)).identical
        assert cross_validate_vqss(range(3), adversary="single-x-on-share", corrupt=[2]).identical


class TestMagic:
    def test_controlled_g_leaves_plus_magic_alone(self):
        state = np.kron(KET_PLUS, KET_MAGIC)
        assert np.allclose(CG @ state, state)

    @pytest.mark.parametrize("target, exact", [
        (KET_0, 0.5),
        (KET_1, 0.5),
        (KET_PLUS, (1 - np.sqrt(0.5)) / 2),
        (KET_MAGIC, 0.0),
    ])
    def test_physical_detection(self, target, exact):
        estimate = physical_detection_probability(target, trials=10_000, rng=np.random.default_rng(1))
        assert estimate.exact == pytest.approx(exact, abs=1e-12)
        assert abs(estimate.measured - exact) < 0.03

    def test_magic_check_leaves_control_at_zero(self):
        psi = stabilizer_check_statevector(KET_MAGIC)
        assert np.allclose(psi[2:], 0)

    def test_honest_vmagic(self, steane):
        ctx = _ctx(steane)
        pair = vmagic(ctx, 2, key="vmagic:w1:1")
        assert pair.value == 0 and pair.contributions == set()
        assert fidelity(KET_MAGIC, ctx.engine.output_density(pair.magic.wire)) == pytest.approx(1.0)
        assert ledger_report(ctx.ledger, 1).measured["vmagic_workspace"] == 4 * 7
        assert ctx.transcript.of_kind("vmagic")[0]["value"] == 0

    def test_other_stabilized_states(self, steane):
        ctx = _ctx(steane)
        assert verify_stabilized_state(ctx, 1, "plus").value == 0
        with pytest.raises(ConfigError):
            verify_stabilized_state(ctx, 1, "bogus")


class TestTeleport:
    def test_physical_teleport_applies_t(self):
        rng = np.random.default_rng(3)
        states = [KET_0, KET_1, KET_PLUS] + [haar_state(rng) for _ in range(10)]
        assert all(teleport_matches_t(psi) for psi in states)

    def test_branches_are_equally_likely(self):
        branches = physical_teleport(haar_state(np.random.default_rng(0)))
        assert [b.outcome for b in branches] == [0, 1]
        assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])

    @pytest.mark.parametrize("pauli", ["X", "Y", "Z"])
    def test_one_error_on_the_data_survives_the_teleport(self, steane, pauli):
        psi = haar_state(np.random.default_rng(8))
        for address in [None] + [Address(j, l, 2) for j in range(7) for l in range(7)]:
            ctx = _ctx(steane)
            grid, _ = VqssService(ctx).share_and_verify(1, psi)
            if address:
                ctx.engine.inject(grid.wire, address, pauli)
            pair = vmagic(ctx, 1, key="vmagic:w1:1")
            out = gate_teleport(ctx, grid, pair, key="gtele:w1:1")
            result = MpqcService(ctx).reconstruct(out, 1, 1)
            assert not ctx.cheaters.exceeds(), address
            assert fidelity(T @ psi, result.density) == pytest.approx(1.0), address


class TestMpqc:
    def test_cnot_makes_a_bell_pair(self, steane):
        ctx = _ctx(steane)
        outcome = mpqc_run(ctx, CNOT_CIRCUIT, ["+", "0"])
        assert not outcome.aborted and outcome.apparent == frozenset()
        for w in (1, 2):
            assert outcome.outputs[w].node == w
            assert trace_distance(outcome.outputs[w].density, np.eye(2) / 2) < 1e-12

    def test_t_gate_output(self, steane):
        outcome = mpqc_run(_ctx(steane, seed=2), T_CIRCUIT, ["+"])
        assert fidelity(KET_MAGIC, outcome.outputs[1].density) == pytest.approx(1.0)
        assert fidelity(T @ KET_PLUS, outcome.outputs[1].density) == pytest.approx(1.0)

    def test_ancilla_wire(self, steane):
        outcome = mpqc_run(_ctx(steane, levels=1), ANCILLA_CIRCUIT, ["1"])
        assert fidelity(KET_1, outcome.outputs[2].density) == pytest.approx(1.0)

    def test_joint_inputs(self, steane):
        outcome = mpqc_run(_ctx(steane, levels=1), CNOT_CIRCUIT, [], joint_inputs=[((1, 2), bell_state())])
        assert fidelity(KET_0, outcome.outputs[2].density) == pytest.approx(1.0)

    @pytest.mark.parametrize("adversary", ["corrupt-before-reconstruct", "z-spray", "single-x-on-share"])
    def test_one_cheater_cannot_change_the_output(self, steane, adversary):
        outcome = mpqc_run(_ctx(steane, adversary=adversary), IDENTITY_CIRCUIT, ["+"])
        assert not outcome.aborted
        assert fidelity(KET_PLUS, outcome.outputs[1].density) == pytest.approx(1.0)
        assert outcome.apparent <= {2}

    def test_too_many_apparent_cheaters_abort(self, steane):
        ctx = _ctx(steane)
        ctx.cheaters.add("setup", [2, 3])
        outcome = MpqcService(ctx).run(CNOT_CIRCUIT, ["0", "0"])
        assert outcome.aborted
        assert all(result.bottom for result in outcome.outputs.values())
        assert ctx.doomed and ctx.transcript.of_kind("doomed")

    def test_bad_inputs(self, steane):
        with pytest.raises(ConfigError):
            mpqc_run(_ctx(steane), parse("WIRES 8\n"), ["0"] * 8)
        with pytest.raises(ConfigError):
            mpqc_run(_ctx(steane), CNOT_CIRCUIT, ["0"])

    @pytest.mark.parametrize("state", ["0", "1", "+"])
    def test_one_share_reveals_nothing(self, steane, state):
        ctx = build_context(steane, 1, backend="sv", levels=1, seed=0, strategy=make_strategy("honest", [2]))
        outcome = mpqc_run(ctx, IDENTITY_CIRCUIT, [state], observe_corrupted=True)
        assert outcome.corrupted_view.shape == (2, 2)
        assert trace_distance(outcome.corrupted_view, np.eye(2) / 2) < 1e-9

    @pytest.mark.parametrize("levels", [1, 2])
    def test_beacon_picks_the_kept_shares(self, steane, levels):
        ctx = _ctx(steane, levels=levels, seed=3)
        outcome = mpqc_run(ctx, IDENTITY_CIRCUIT, ["+"])
        kept = [d.value for d in ctx.network.beacon.log if d.purpose == "kept shares for wire 1"]
        assert len(kept) == 1 and len(kept[0]) == 7 - 2
        erased = ctx.transcript.of_kind("reconstructed")[0]["erased"]
        assert sorted(erased + [p - 1 for p in kept[0]]) == list(range(7))
        assert fidelity(KET_PLUS, outcome.outputs[1].density) == pytest.approx(1.0)

    def test_one_level_never_keeps_an_apparent_cheater(self, steane):
        ctx = _ctx(steane, levels=1, seed=1)
        ctx.cheaters.add("setup", [4])
        outcome = mpqc_run(ctx, IDENTITY_CIRCUIT, ["1"])
        kept = [d.value for d in ctx.network.beacon.log if d.purpose == "kept shares for wire 1"]
        assert not outcome.aborted and 4 not in kept[0]
        assert fidelity(KET_1, outcome.outputs[1].density) == pytest.approx(1.0)


class TestOracle:
    def test_cnot_oracle(self):
        out = ideal_densities(CNOT_CIRCUIT, [KET_PLUS, KET_0])
        assert np.allclose(out[1], np.eye(2) / 2) and np.allclose(out[2], np.eye(2) / 2)

    def test_t_oracle_bloch_vector(self):
        result = ideal_oracle(T_CIRCUIT, [KET_PLUS])
        assert result.outputs[1] == pytest.approx([np.sqrt(0.5), np.sqrt(0.5), 0.0])
        assert result.nodes == {1: 1}

    def test_joint_and_ancilla_inputs(self):
        out = ideal_densities(CNOT_CIRCUIT, [], joint_inputs=[((1, 2), bell_state())])
        assert np.allclose(out[2], density(KET_0))
        assert np.allclose(ideal_densities(ANCILLA_CIRCUIT, [KET_1])[2], density(KET_1))

    def test_rejects_unresolved_inputs(self):
        with pytest.raises(ConfigError):
            ideal_densities(IDENTITY_CIRCUIT, [bell_state()])

    def test_bloch_vector_of_zero(self):
        assert bloch_vector(density(KET_0)) == pytest.approx([0.0, 0.0, 1.0])
