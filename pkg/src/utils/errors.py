# src/utils/errors.py


class MpqcError(Exception):
    """Base class for every error raised by the simulator."""


class ConfigError(MpqcError):
    """A run or experiment configuration could not be resolved."""


class AmbiguousErasure(MpqcError):
    """More than one codeword agrees with the unerased positions."""


class DualContainmentViolated(MpqcError):
    """The CSS precondition V* ⊆ W does not hold."""


class TooManyErrors(MpqcError):
    """A block carries more errors than the code corrects."""

    def __init__(self, message: str, positions=None):
        super().__init__(message)
        self.positions = sorted(positions or [])


class UncorrectableDecode(MpqcError):
    """A two-level decode could not produce a logical value."""


class UnsupportedGate(MpqcError):
    """The backend cannot apply the requested gate."""


class UnsupportedFramePropagation(UnsupportedGate):
    """A Pauli frame would leave the Pauli group under the requested gate."""


class BackendMismatch(MpqcError):
    """Operands live on incompatible backends or register sizes."""


class CapacityExceeded(MpqcError):
    """A statevector would grow beyond the configured qubit capacity."""


class WorkspaceExceeded(MpqcError):
    """A node would hold more live qubits than the enforced workspace bound."""

    def __init__(self, node: int, live: int, bound: int):
        super().__init__(f"node {node} would hold {live} qubits, bound is {bound}")
        self.node = node
        self.live = live
        self.bound = bound


class CircuitParseError(MpqcError):
    """Base class for circuit text errors; carries the source position."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class CircuitSyntaxError(CircuitParseError):
    pass


class UnknownGate(CircuitParseError):
    pass


class WireOutOfRange(CircuitParseError):
    pass


class UseBeforeDeclare(CircuitParseError):
    pass
