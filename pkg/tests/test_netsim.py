import numpy as np
import pytest

from src.adversary.strategies import make_strategy
from src.backends.engines import first_level, make_engine
from src.backends.gates import KET_0
from src.circuit.circuit_ir import parse
from src.codes.css_code import steane_code
from src.netsim.beacon import Beacon, run_streams
from src.netsim.ledger import ResourceLedger, ledger_report
from src.netsim.network import Network
from src.services.mpqc_service import MpqcService
from src.services.share_grid import Transcript, build_context, deal
from src.utils.errors import ConfigError, WorkspaceExceeded


@pytest.fixture(scope="module")
def steane():
    return steane_code()


def _network(steane, strategy=None, n=7):
    transcript = Transcript()
    engine = make_engine("null", steane, 1)
    net = Network(n, engine, ResourceLedger(n), Beacon(np.random.default_rng(0)), transcript, strategy)
    return net, transcript


class TestBeacon:
    def test_draws_are_logged_in_order(self):
        beacon = Beacon(np.random.default_rng(5))
        bit = beacon.draw_bit("check")
        node = beacon.draw_node(7, exclude=[1, 2], purpose="pick")
        subset = beacon.draw_subset(range(1, 8), 3, "sample")
        assert [d.kind for d in beacon.log] == ["bit", "node", "subset"]
        assert [d.index for d in beacon.log] == [0, 1, 2]
        assert bit in (0, 1) and 3 <= node <= 7
        assert subset == sorted(subset) and len(set(subset)) == 3

    def test_same_seed_same_draws(self):
        a, b = Beacon(np.random.default_rng(9)), Beacon(np.random.default_rng(9))
        assert [a.draw_node(7) for _ in range(20)] == [b.draw_node(7) for _ in range(20)]

    def test_excluding_everyone_falls_back_to_all_nodes(self):
        beacon = Beacon(np.random.default_rng(0))
        assert 1 <= beacon.draw_node(3, exclude=[1, 2, 3]) <= 3

    def test_oversized_subset(self):
        with pytest.raises(ValueError):
            Beacon(np.random.default_rng(0)).draw_subset([1, 2], 3)

    def test_adversary_seed_leaves_honest_streams_alone(self):
        a, b = run_streams(4, adv_seed=0), run_streams(4, adv_seed=1)
        assert a.measurement.random() == b.measurement.random()
        assert a.beacon.integers(1000) == b.beacon.integers(1000)
        assert a.adversary.random() != b.adversary.random()

    def test_node_draws_are_uniform_over_the_rest(self):
        draws = [Beacon(run_streams(seed).beacon).draw_node(7, exclude=[3]) for seed in range(10_000)]
        counts = np.bincount(draws, minlength=8)[1:]
        assert counts[2] == 0
        observed = np.delete(counts, 2)
        expected = len(draws) / 6
        chi2 = float(((observed - expected) ** 2 / expected).sum())
        # 5 degrees of freedom at p = 0.001
        assert chi2 < 20.515


class TestLedger:
    def test_high_water_marks(self):
        ledger = ResourceLedger(3)
        for _ in range(4):
            ledger.allocate(2, "data")
        ledger.free(2, "data")
        ledger.allocate(2, "ancilla")
        assert ledger.live.tolist() == [0, 4, 0]
        assert ledger.hwm.tolist() == [0, 4, 0]
        assert ledger.role_hwm["data"][1] == 4
        assert ledger.role_hwm["ancilla"][1] == 1

    def test_enforced_bound(self):
        ledger = ResourceLedger(2, bound=2)
        ledger.allocate(1, "data")
        ledger.allocate(1, "data")
        with pytest.raises(WorkspaceExceeded) as caught:
            ledger.allocate(1, "data")
        assert (caught.value.node, caught.value.live, caught.value.bound) == (1, 3, 2)

    def test_window_peak_is_relative_to_entry(self):
        ledger = ResourceLedger(2)
        ledger.allocate(1, "data")
        with ledger.window("vqss"):
            ledger.allocate(1, "zero")
            ledger.allocate(1, "zero")
            ledger.free(1, "zero")
        with ledger.window("vqss"):
            ledger.allocate(2, "zero")
        assert ledger.window_peak["vqss"].tolist() == [2, 1]

    def test_phases_and_report(self):
        ledger = ResourceLedger(7)
        ledger.record_send(1, 2)
        ledger.set_phase("reconstruction")
        ledger.record_send(1, 3)
        ledger.record_broadcast(7)
        with pytest.raises(ValueError):
            ledger.set_phase("teardown")
        report = ledger_report(ledger, s=2)
        assert report.formulas["workspace"] == 77
        assert report.formulas["sharing_workspace"] == 63
        assert report.formulas["sharing_sent"] == 224
        assert report.formulas["vmagic_workspace"] == 28
        assert report.sent_per_node["sharing"][0] == 1
        assert report.sent_per_node["reconstruction"][0] == 1
        assert report.total_sent_max == 2
        assert report.broadcast_bits["reconstruction"] == 7
        assert all(report.within_bounds.values())


class TestNetwork:
    def test_node_ids_are_checked(self, steane):
        net, _ = _network(steane)
        with pytest.raises(ConfigError):
            net.allocate(0, "data")
        with pytest.raises(ConfigError):
            net.allocate(8, "data")

    def test_send_moves_the_slot(self, steane):
        net, _ = _network(steane)
        slot = net.allocate(1, "data", wire=0, address=first_level(1))
        into = net.reserve(2, "data")
        received = net.send_qubit(1, slot, 2, into)
        assert received.filled and received.address == first_level(1)
        assert net.live_slots(1) == [] and net.live_slots(2) == [received]
        assert net.ledger.sent["sharing"].tolist()[:2] == [1, 0]
        with pytest.raises(ConfigError):
            net.send_qubit(1, slot, 2, net.reserve(2, "data"))

    def test_send_needs_an_empty_reservation(self, steane):
        net, _ = _network(steane)
        slot = net.allocate(1, "data")
        with pytest.raises(ConfigError):
            net.send_qubit(1, slot, 2, net.allocate(2, "data"))
        with pytest.raises(ConfigError):
            net.move_local(slot, net.reserve(3, "data"))

    def test_phase_context_restores_previous_phase(self, steane):
        net, transcript = _network(steane)
        with net.in_phase("reconstruction"):
            assert net.ledger.phase == "reconstruction"
        assert net.phase == "sharing" and net.ledger.phase == "sharing"
        assert transcript.of_kind("phase")[0]["name"] == "reconstruction"

    def test_lying_broadcaster_is_seen_identically_by_all(self, steane):
        net, transcript = _network(steane, make_strategy("lie-on-broadcast", adv_seed=3))
        honest = net.broadcast(1, [0, 0, 0])
        lied = net.broadcast(2, [0, 0, 0])
        assert honest.tolist() == [0, 0, 0]
        assert int(lied.sum()) == 1
        lie = transcript.of_kind("lie")
        assert len(lie) == 1 and lie[0]["node"] == 2 and lie[0]["hidden"]
        assert all(not e.get("hidden") for e in transcript.public_events)
        assert net.ledger.broadcast_bits["sharing"] == 6


class TestDeal:
    def test_two_level_grid_shape_and_traffic(self, steane):
        ctx = build_context(steane, s=1, backend="frame", levels=2)
        wire = ctx.engine.new_wire(KET_0)
        grid = deal(ctx, 1, wire, "data")
        assert len(grid.slots) == 49
        assert len(grid.column(3)) == 7 and len(grid.block(3)) == 7
        assert ctx.ledger.live.tolist() == [7] * 7
        assert ctx.ledger.sent["sharing"].tolist() == [12] + [6] * 6
        assert int(ctx.ledger.hwm.max()) == 14

    def test_one_level_grid(self, steane):
        ctx = build_context(steane, s=1, backend="frame", levels=1)
        grid = deal(ctx, 3, ctx.engine.new_wire(KET_0), "data")
        assert sorted(grid.slots) == [(0, p) for p in range(7)]
        assert ctx.ledger.sent["sharing"].tolist() == [0, 0, 6, 0, 0, 0, 0]

    def test_single_x_hits_one_received_share(self, steane):
        strategy = make_strategy("single-x-on-share")
        ctx = build_context(steane, s=1, backend="frame", levels=2, strategy=strategy)
        deal(ctx, 1, ctx.engine.new_wire(KET_0), "data")
        injections = ctx.transcript.injections
        assert len(injections) == 1
        assert injections[0]["target_node"] == 2 and injections[0]["level"] == 2

    def test_public_transcript_is_reproducible(self, steane):
        digests = []
        for _ in range(2):
            ctx = build_context(steane, s=1, backend="frame", levels=1, seed=11)
            deal(ctx, 2, ctx.engine.new_wire(KET_0), "data")
            ctx.network.draw_node(purpose="check")
            digests.append(ctx.transcript.digest())
        assert digests[0] == digests[1]


class TestSharingTraffic:
    @pytest.mark.parametrize("s", [1, 2, 3, 4])
    def test_every_node_deals_an_input(self, steane, s):
        ctx = build_context(steane, s, backend="null", levels=2)
        MpqcService(ctx).run(parse("WIRES 7\n"), ["0"] * 7)
        report = ledger_report(ctx.ledger, s)
        # n − 1 per grid for every input plus n − 1 per grid of its own
        assert report.sent_per_node["sharing"] == [6 * 8 * (s + 1) ** 2] * 7
        assert report.formulas["sharing_sent_rounds"] == 8 * 7 * (s + 1) ** 2
        assert report.within_bounds["sharing_sent_rounds"]

    @pytest.mark.parametrize("s, bound", [(1, 56), (2, 224), (3, 504), (4, 896)])
    def test_one_input_within_the_closed_form(self, steane, s, bound):
        ctx = build_context(steane, s, backend="null", levels=2)
        MpqcService(ctx).run(parse("WIRES 1\nOUT 1 1\n"), ["0"])
        report = ledger_report(ctx.ledger, s)
        assert report.formulas["sharing_sent"] == bound
        assert report.measured["sharing_sent"] == 12 * (s + 1) ** 2
        assert report.within_bounds["sharing_sent"] and report.within_bounds["sharing_sent_rounds"]
