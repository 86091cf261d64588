import numpy as np
import pytest

from src.backends.cross_validate import cross_validate, cross_validate_random_cliffords, random_clifford_circuit
from src.backends.engines import Address, first_level, make_engine, pauli_bits
from src.backends.frame import FrameEngine
from src.backends.gates import (G, KET_0, KET_1, KET_MAGIC, KET_MINUS, KET_PLUS, KET_PLUS_I, T, bell_state,
                                density, fidelity, gate_matrix, ghz_state, haar_state, resolve_state, trace_distance)
from src.backends.statevector import StatevectorRegister
from src.backends.tableau import Tableau
from src.codes.css_code import steane_code
from src.utils.errors import (BackendMismatch, CapacityExceeded, ConfigError, UnsupportedFramePropagation,
                              UnsupportedGate)


@pytest.fixture(scope="module")
def steane():
    return steane_code()


def test_g_fixes_the_magic_state():
    assert np.allclose(G @ KET_MAGIC, KET_MAGIC)
    assert fidelity(T @ KET_PLUS, KET_MAGIC) == pytest.approx(1.0)


def test_state_comparisons():
    assert trace_distance(KET_0, KET_1) == pytest.approx(1.0)
    assert trace_distance(KET_PLUS, density(KET_PLUS)) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(KET_0, np.eye(2) / 2) == pytest.approx(0.5)
    with pytest.raises(BackendMismatch):
        fidelity(KET_0, bell_state())


def test_resolve_state_errors():
    assert np.allclose(resolve_state("-"), KET_MINUS)
    with pytest.raises(ConfigError):
        resolve_state("haar")
    with pytest.raises(ConfigError):
        resolve_state("bogus")
    with pytest.raises(ConfigError):
        resolve_state([1, 1])
    with pytest.raises(ConfigError):
        gate_matrix("SWAP")


def test_pauli_bits():
    assert [pauli_bits(p) for p in "IXYZ"] == [(0, 0), (1, 0), (1, 1), (0, 1)]
    assert first_level(3) == Address(0, 3, 1)
    assert Address(2, 3).holder == 4


class TestStatevectorRegister:
    def test_bell_pair(self):
        reg = StatevectorRegister(np.random.default_rng(0))
        a, b = reg.allocate(), reg.allocate()
        reg.apply("H", [a])
        reg.apply("CNOT", [a, b])
        assert np.allclose(reg.statevector([a, b]), bell_state())
        assert np.allclose(reg.reduced_density([b]), np.eye(2) / 2)
        assert reg.norm() == pytest.approx(1.0)

    def test_measurement_collapses_the_partner(self):
        reg = StatevectorRegister(np.random.default_rng(0))
        a, b = reg.allocate_joint(bell_state())
        assert reg.measure_z(a, u=0.0) == 1
        assert reg.prob_one(b) == pytest.approx(1.0)
        assert reg.measure_z(b, u=0.999) == 1

    def test_release_requires_a_product_qubit(self):
        reg = StatevectorRegister()
        a, b = reg.allocate_joint(bell_state())
        with pytest.raises(BackendMismatch):
            reg.release(a)
        reg.reset(a)
        reg.release(a)
        assert reg.num_qubits == 1

    def test_projection_onto_impossible_outcome(self):
        reg = StatevectorRegister()
        q = reg.allocate(KET_0)
        with pytest.raises(BackendMismatch):
            reg.project(q, 1)

    def test_capacity_is_per_component(self):
        reg = StatevectorRegister(capacity=2)
        with pytest.raises(CapacityExceeded):
            reg.allocate_joint(ghz_state(3))
        a, b, c = reg.allocate(), reg.allocate(), reg.allocate()
        reg.apply("CNOT", [a, b])
        assert reg.largest_component() == 2
        with pytest.raises(CapacityExceeded):
            reg.apply("CNOT", [b, c])


class TestTableau:
    def test_phase_gate_maps_plus_to_plus_i(self):
        tab = Tableau()
        q = tab.allocate()
        tab.apply("H", [q])
        tab.apply("P", [q])
        assert tab.pauli_expectation(q, "Y") == pytest.approx(1.0)
        assert np.allclose(tab.reduced_density([q]), density(KET_PLUS_I))
        tab.apply("PDG", [q])
        assert tab.pauli_expectation(q, "X") == pytest.approx(1.0)

    def test_bell_outcomes_agree(self):
        for seed in range(5):
            tab = Tableau(np.random.default_rng(seed))
            a, b = tab.allocate(), tab.allocate()
            tab.apply("H", [a])
            tab.apply("CNOT", [a, b])
            assert tab.pauli_expectation(a, "Z") == 0.0
            assert tab.measure_z(a) == tab.measure_z(b)
            assert tab.is_valid()

    def test_non_clifford_is_rejected(self):
        tab = Tableau()
        q = tab.allocate()
        with pytest.raises(UnsupportedGate):
            tab.apply("T", [q])
        with pytest.raises(UnsupportedGate):
            tab.allocate(KET_MAGIC)

    def test_released_qubits_are_reused_clean(self):
        tab = Tableau(np.random.default_rng(2))
        q = tab.allocate()
        tab.apply("H", [q])
        tab.release(q)
        again = tab.allocate()
        assert again == q
        assert tab.pauli_expectation(again, "Z") == pytest.approx(1.0)


def test_random_cliffords_agree_across_backends():
    report = cross_validate_random_cliffords(num_circuits=20, max_qubits=4, num_gates=30, seed=1)
    assert report.runs == 20
    assert report.identical, report.divergent_seeds


def test_ghz_measurements_agree_across_backends():
    ops = [("H", 0), ("CNOT", 0, 1), ("CNOT", 1, 2), ("MZ", 0), ("MZ", 1), ("MZ", 2)]
    report = cross_validate(ops, 3, range(10))
    assert report.identical


def test_random_circuit_uses_known_ops():
    ops = random_clifford_circuit(1, 50, np.random.default_rng(0))
    assert all(op[0] != "CNOT" for op in ops)


class TestEngines:
    def test_unknown_backend(self, steane):
        with pytest.raises(ConfigError):
            make_engine("gpu", steane, 1)
        with pytest.raises(ConfigError):
            make_engine("frame", steane, 3)

    @pytest.mark.parametrize("kind", ["sv", "tableau", "frame"])
    def test_measuring_encoded_basis_states_gives_codewords(self, steane, kind):
        zeros, ones = steane.z_words
        for bit, state in ((0, KET_0), (1, KET_1)):
            engine = make_engine(kind, steane, 1, np.random.default_rng(bit))
            wire = engine.new_wire(state)
            engine.encode_outer(wire)
            word = engine.measure_wire(wire)[0]
            pool = ones if bit else zeros
            assert any(np.array_equal(word, c) for c in pool)

    def test_tableau_engine_recovers_after_a_share_error(self, steane):
        engine = make_engine("tableau", steane, 1, np.random.default_rng(4))
        wire = engine.new_wire(KET_MINUS)
        engine.encode_outer(wire)
        engine.inject(wire, first_level(5), "Y")
        rho, report = engine.recover_outer(wire)
        assert fidelity(KET_MINUS, rho) == pytest.approx(1.0)
        assert report.positions == (5,)

    def test_null_engine_reads_zero(self, steane):
        engine = make_engine("null", steane, 2)
        wire = engine.new_wire(KET_1)
        assert not engine.measure_wire(wire).any()
        assert engine.measure_wire(wire).shape == (7, 7)


class TestFrameEngine:
    def test_cnot_propagates_x_forward_and_z_backward(self, steane):
        engine = FrameEngine(steane, 1)
        c, t = engine.new_wire(KET_PLUS), engine.new_wire(KET_0)
        engine.inject(c, first_level(2), "X")
        engine.inject(t, first_level(4), "Z")
        engine.apply_logical("CNOT", [c, t])
        assert engine.wire(t).x[0, 2] == 1
        assert engine.wire(c).z[0, 4] == 1

    def test_hadamard_swaps_frames(self, steane):
        engine = FrameEngine(steane, 1)
        w = engine.new_wire()
        engine.inject(w, first_level(0), "X")
        engine.apply_logical("H", [w])
        assert engine.wire(w).z[0, 0] == 1 and not engine.wire(w).x.any()

    def test_controlled_g_needs_x_free_frames(self, steane):
        engine = FrameEngine(steane, 1)
        c, t = engine.new_wire(KET_PLUS), engine.new_wire(KET_MAGIC)
        engine.inject(t, first_level(1), "Z")
        engine.apply_logical("C-G", [c, t])
        assert engine.wire(c).z[0, 1] == 1
        engine.inject(c, first_level(3), "X")
        with pytest.raises(UnsupportedFramePropagation):
            engine.apply_logical("C-G", [c, t])
        with pytest.raises(UnsupportedGate):
            engine.apply_logical("T", [c])

    def test_two_level_recovery(self, steane):
        engine = FrameEngine(steane, 2, np.random.default_rng(0))
        w = engine.new_wire(KET_PLUS)
        engine.encode_outer(w)
        for block in range(7):
            engine.encode_block(w, block)
        engine.inject(w, Address(3, 2, 2), "Z")
        with pytest.raises(ConfigError):
            engine.recover_outer(w)
        reports = [engine.decode_block(w, block) for block in range(7)]
        assert reports[3].positions == (2,)
        rho, report = engine.recover_outer(w)
        assert report.positions == ()
        assert fidelity(KET_PLUS, rho) == pytest.approx(1.0)

    def test_outer_error_before_block_encoding_lands_on_the_block(self, steane):
        engine = FrameEngine(steane, 2)
        w = engine.new_wire(KET_0)
        engine.inject(w, first_level(6), "X")
        engine.encode_block(w, 6)
        assert np.array_equal(engine.wire(w).x[6], steane.x_bar)
        assert engine.wire(w).outer_x[6] == 0


SINGLE_ERRORS = [None] + [(Address(j, l, 2), p) for j in range(7) for l in range(7) for p in "XYZ"]


def _two_level_wire(engine, state):
    w = engine.new_wire(state)
    engine.encode_outer(w)
    for block in range(7):
        engine.encode_block(w, block)
    return w


def _decode(engine, w):
    for block in range(7):
        engine.decode_block(w, block)
    return engine.recover_outer(w)[0]


class TestSingleErrorsAtTwoLevels:
    @pytest.mark.parametrize("gate", ["H", "P"])
    def test_single_qubit_gates(self, steane, gate):
        psi = haar_state(np.random.default_rng(5))
        expected = gate_matrix(gate) @ psi
        for error in SINGLE_ERRORS:
            engine = FrameEngine(steane, 2, np.random.default_rng(0))
            w = _two_level_wire(engine, psi)
            if error:
                engine.inject(w, *error)
            engine.apply_logical(gate, [w])
            assert fidelity(expected, _decode(engine, w)) == pytest.approx(1.0), error

    @pytest.mark.parametrize("hit", [0, 1])
    def test_cnot(self, steane, hit):
        rng = np.random.default_rng(6)
        psi, phi = haar_state(rng), haar_state(rng)
        expected = gate_matrix("CNOT") @ np.kron(psi, phi)
        for error in SINGLE_ERRORS:
            engine = FrameEngine(steane, 2, np.random.default_rng(0))
            wires = [_two_level_wire(engine, psi), _two_level_wire(engine, phi)]
            if error:
                engine.inject(wires[hit], *error)
            engine.apply_logical("CNOT", wires)
            for w in wires:
                _decode(engine, w)
            assert trace_distance(expected, engine.logical_density(wires)) < 1e-9, error
