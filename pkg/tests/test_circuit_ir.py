import pytest

from src.circuit.circuit_ir import circuit_depth, load_circuit, parse, validate_and_stats
from src.utils.errors import CircuitSyntaxError, ConfigError, UnknownGate, UseBeforeDeclare, WireOutOfRange

TOFFOLI_LIKE = """\
# two inputs, one ancilla
WIRES 2
ANC 3
H 3
CNOT 2 3
T 3   # magic
CNOT 1 3
T 1
OUT 3 1
OUT 1 2
"""


def test_parse_collects_gates_ancillas_and_outputs():
    circuit = parse(TOFFOLI_LIKE)
    assert circuit.num_inputs == 2
    assert circuit.ancillas == [3]
    assert circuit.num_wires == 3
    assert [g.op for g in circuit.gates] == ["H", "CNOT", "T", "CNOT", "T"]
    assert circuit.outputs == {3: 1, 1: 2}
    assert circuit.gates[2].line == 6


def test_canonical_text_reparses_to_the_same_statements():
    circuit = parse(TOFFOLI_LIKE)
    again = parse(circuit.to_text())
    assert [(s.op, s.wires, s.node) for s in again.statements] == \
           [(s.op, s.wires, s.node) for s in circuit.statements]


def test_lowercase_ops_are_accepted():
    assert parse("wires 1\nh 1\npdg 1\n").gates[1].op == "PDG"


def test_depth():
    assert circuit_depth(parse(TOFFOLI_LIKE)) == 5
    assert circuit_depth(parse("WIRES 3\nH 1\nH 2\nH 3\n")) == 1
    assert circuit_depth(parse("WIRES 1\n")) == 0


@pytest.mark.parametrize("text, error, line, column", [
    ("H 1\n", CircuitSyntaxError, 1, 1),
    ("", CircuitSyntaxError, 1, 1),
    ("WIRES 0\n", CircuitSyntaxError, 1, 7),
    ("WIRES 1\nWIRES 2\n", CircuitSyntaxError, 2, 1),
    ("WIRES 1\nTOFFOLI 1\n", UnknownGate, 2, 1),
    ("WIRES 1\nH 4\n", WireOutOfRange, 2, 3),
    ("WIRES 1\nCNOT 1 2\nANC 2\n", UseBeforeDeclare, 2, 8),
    ("WIRES 2\nCNOT 1 1\n", CircuitSyntaxError, 2, 8),
    ("WIRES 1\nANC 1\n", CircuitSyntaxError, 2, 5),
    ("WIRES 1\nH x\n", CircuitSyntaxError, 2, 3),
    ("WIRES 1\nOUT 1\n", CircuitSyntaxError, 2, 1),
])
def test_parse_errors_carry_positions(text, error, line, column):
    with pytest.raises(error) as caught:
        parse(text)
    assert (caught.value.line, caught.value.column) == (line, column)


def test_stats_and_kappa():
    stats = validate_and_stats(parse(TOFFOLI_LIKE), n=7)
    assert (stats.num_t, stats.num_ancillas, stats.num_gates) == (2, 1, 5)
    assert stats.kappa == 10
    assert stats.communication is None


def test_stats_reject_impossible_circuits():
    with pytest.raises(ConfigError):
        validate_and_stats(parse("WIRES 8\n"), n=7)
    with pytest.raises(ConfigError):
        validate_and_stats(parse("WIRES 1\nOUT 1 9\n"), n=7)


def test_load_circuit(tmp_path):
    path = tmp_path / "bell.circ"
    path.write_text("WIRES 2\nH 1\nCNOT 1 2\n")
    assert len(load_circuit(str(path)).gates) == 2
