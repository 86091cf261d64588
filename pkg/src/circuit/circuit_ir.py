# src/circuit/circuit_ir.py
"""
Line format for Clifford+T circuits:

    WIRES k          input wires 1..k, wire w dealt by node w
    ANC w            fresh |0⟩ wire
    H|P|PDG|X|Z|T w  single-qubit gate
    CNOT c t         controlled NOT
    OUT w node       deliver wire w to node

`#` starts a comment. Wires are 1-based.
"""
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple

from src.utils.errors import CircuitSyntaxError, ConfigError, UnknownGate, UseBeforeDeclare, WireOutOfRange
from src.utils.logger import get_logger

logger = get_logger(__name__)

SINGLE_QUBIT_GATES = ("H", "P", "PDG", "X", "Z", "T")
TWO_QUBIT_GATES = ("CNOT",)
GATES = SINGLE_QUBIT_GATES + TWO_QUBIT_GATES
KEYWORDS = ("WIRES", "ANC", "OUT")


class Statement(NamedTuple):
    op: str
    wires: Tuple[int, ...]
    node: Optional[int] = None
    line: int = 0


@dataclass(frozen=True)
class Circuit:
    num_inputs: int
    statements: Tuple[Statement, ...]

    @property
    def gates(self) -> List[Statement]:
        return [s for s in self.statements if s.op in GATES]

    @property
    def ancillas(self) -> List[int]:
        return [s.wires[0] for s in self.statements if s.op == "ANC"]

    @property
    def outputs(self) -> Dict[int, int]:
        return {s.wires[0]: s.node for s in self.statements if s.op == "OUT"}

    @property
    def num_wires(self) -> int:
        return self.num_inputs + len(self.ancillas)

    def to_text(self) -> str:
        """Canonical text; parse(to_text()) reproduces the statement list."""
        lines = [f"WIRES {self.num_inputs}"]
        for s in self.statements:
            if s.op == "OUT":
                lines.append(f"OUT {s.wires[0]} {s.node}")
            else:
                lines.append(" ".join([s.op] + [str(w) for w in s.wires]))
        return "\n".join(lines) + "\n"


class CircuitStats(NamedTuple):
    num_t: int
    num_ancillas: int
    depth: int
    kappa: int
    num_gates: int
    communication: Optional[Dict[str, float]] = None


def _int(token: str, line: int, column: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise CircuitSyntaxError(f"expected {what}, got {token!r}", line, column)


def _tokens(raw: str) -> List[Tuple[str, int]]:
    """Tokens with their 1-based columns."""
    out, col, cur = [], None, ""
    for i, ch in enumerate(raw + " "):
        if ch.isspace():
            if cur:
                out.append((cur, col))
                cur = ""
        else:
            if not cur:
                col = i + 1
            cur += ch
    return out


def parse(text: str) -> Circuit:
    """
    Parses circuit text.

    Raises:
        CircuitSyntaxError: malformed statement or missing WIRES header.
        UnknownGate: an operation outside the Clifford+T set.
        WireOutOfRange: a wire that is never declared.
        UseBeforeDeclare: a wire used before its ANC line.
    """
    lines = [(no, raw.split("#", 1)[0]) for no, raw in enumerate(text.splitlines(), start=1)]
    declared_later: Dict[int, int] = {}
    for no, body in lines:
        toks = _tokens(body)
        if toks and toks[0][0].upper() == "ANC" and len(toks) == 2:
            try:
                declared_later.setdefault(int(toks[1][0]), no)
            except ValueError:
                pass

    num_inputs: Optional[int] = None
    live: set = set()
    statements: List[Statement] = []
    for no, body in lines:
        toks = _tokens(body)
        if not toks:
            continue
        op, op_col = toks[0][0].upper(), toks[0][1]
        args = toks[1:]
        if num_inputs is None:
            if op != "WIRES":
                raise CircuitSyntaxError("circuit must start with WIRES k", no, op_col)
            if len(args) != 1:
                raise CircuitSyntaxError("WIRES takes one count", no, op_col)
            num_inputs = _int(args[0][0], no, args[0][1], "a wire count")
            if num_inputs < 1:
                raise CircuitSyntaxError("WIRES needs at least one wire", no, args[0][1])
            live = set(range(1, num_inputs + 1))
            continue
        if op == "WIRES":
            raise CircuitSyntaxError("WIRES may appear once", no, op_col)

        def wire(tok):
            w = _int(tok[0], no, tok[1], "a wire index")
            if w not in live:
                if declared_later.get(w, 0) > no:
                    raise UseBeforeDeclare(f"wire {w} is used before its ANC line", no, tok[1])
                raise WireOutOfRange(f"wire {w} is not declared", no, tok[1])
            return w

        if op == "ANC":
            if len(args) != 1:
                raise CircuitSyntaxError("ANC takes one wire", no, op_col)
            w = _int(args[0][0], no, args[0][1], "a wire index")
            if w in live or w < 1:
                raise CircuitSyntaxError(f"wire {w} is already declared", no, args[0][1])
            live.add(w)
            statements.append(Statement("ANC", (w,), None, no))
        elif op == "OUT":
            if len(args) != 2:
                raise CircuitSyntaxError("OUT takes a wire and a node", no, op_col)
            w = wire(args[0])
            node = _int(args[1][0], no, args[1][1], "a node id")
            statements.append(Statement("OUT", (w,), node, no))
        elif op in SINGLE_QUBIT_GATES:
            if len(args) != 1:
                raise CircuitSyntaxError(f"{op} takes one wire", no, op_col)
            statements.append(Statement(op, (wire(args[0]),), None, no))
        elif op in TWO_QUBIT_GATES:
            if len(args) != 2:
                raise CircuitSyntaxError(f"{op} takes two wires", no, op_col)
            c, t = wire(args[0]), wire(args[1])
            if c == t:
                raise CircuitSyntaxError(f"{op} needs two distinct wires", no, args[1][1])
            statements.append(Statement(op, (c, t), None, no))
        else:
            raise UnknownGate(f"unknown operation {toks[0][0]!r}", no, op_col)
    if num_inputs is None:
        raise CircuitSyntaxError("empty circuit", 1, 1)
    return Circuit(num_inputs, tuple(statements))


def load_circuit(path: str) -> Circuit:
    with open(path, "r") as f:
        return parse(f.read())


def circuit_depth(circuit: Circuit) -> int:
    level: Dict[int, int] = {}
    for s in circuit.gates:
        layer = 1 + max(level.get(w, 0) for w in s.wires)
        for w in s.wires:
            level[w] = layer
    return max(level.values(), default=0)


def validate_and_stats(circuit: Circuit, n: int, s: Optional[int] = None, code=None) -> CircuitStats:
    """
    Counts T gates and ancillas and computes κ = n + #T + #ancillas.

    With `s` given, a dry run on the null engine measures qubits sent per
    node and reports the constant in front of (n + #anc + #T)·n·s².

    Raises:
        ConfigError: more input wires than nodes, or an output node outside [n].
    """
    if circuit.num_inputs > n:
        raise ConfigError(f"{circuit.num_inputs} input wires need at least as many nodes, have {n}")
    for w, node in circuit.outputs.items():
        if not 1 <= node <= n:
            raise ConfigError(f"OUT {w} {node}: node outside [1, {n}]")
    num_t = sum(1 for g in circuit.gates if g.op == "T")
    num_anc = len(circuit.ancillas)
    communication = None
    if s is not None:
        communication = dry_run_communication(circuit, s, code)
    return CircuitStats(num_t, num_anc, circuit_depth(circuit), n + num_t + num_anc, len(circuit.gates), communication)


def dry_run_communication(circuit: Circuit, s: int, code=None) -> Dict[str, float]:
    """Measured max qubits sent per node against (n + #anc + #T)·n·s²."""
    from src.codes.css_code import steane_code
    from src.services.mpqc_service import MpqcService
    from src.services.share_grid import build_context

    code = code or steane_code()
    ctx = build_context(code, s, backend="null", levels=2, seed=0)
    MpqcService(ctx).run(circuit, ["0"] * circuit.num_inputs)
    n = code.n
    units = (n + len(circuit.ancillas) + sum(1 for g in circuit.gates if g.op == "T")) * n * s * s
    sent = float(ctx.ledger.total_sent().max())
    logger.debug(f"Dry run: {sent} qubits sent per node against {units} formula units")
    return {"sent_per_node": sent, "formula_units": float(units), "constant": sent / units}
