# src/models/models.py
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError

from src.config.config import DEFAULT_BACKEND, DEFAULT_LEVELS, DEFAULT_N, DEFAULT_S, DEFAULT_SEED, REPORT_SCHEMA_VERSION
from src.utils.errors import ConfigError

Backend = Literal["sv", "tableau", "frame", "null"]
Comparison = Literal["vs-ideal-oracle", "vs-statevector", "resource-only"]


class NetworkConfig(BaseModel):
    """
    Run-level configuration of the simulated network.
    """
    n: int = Field(DEFAULT_N, ge=4, description="Number of nodes; equals the code length.")
    s: int = Field(DEFAULT_S, ge=1, description="Security parameter; verification runs s² + 2s rounds.")
    code: str = Field("steane", description="'steane' or a path to a code file.")
    seed: int = Field(DEFAULT_SEED, ge=0, description="Run seed for measurement, beacon and protocol streams.")
    backend: Backend = Field(DEFAULT_BACKEND, description="Share engine kind.")
    levels: Literal[1, 2] = Field(DEFAULT_LEVELS, description="Encoding depth of every share.")
    enforce_workspace: bool = Field(False, description="Fail the run when a node exceeds n² + 4n live qubits.")
    cg_mode: Literal["ideal", "qubitwise"] = Field("ideal", description="How physical engines apply C-G.")


class AdversarySpec(BaseModel):
    """
    Which strategy drives which nodes.
    """
    name: str = Field("honest", description="Corpus entry name.")
    corrupt: Optional[List[int]] = Field(None, description="Corrupted node ids; the strategy default when omitted.")
    adv_seed: int = Field(0, ge=0, description="Seed of the adversary's private stream.")


class JointInput(BaseModel):
    """
    Inputs prepared entangled across wires.
    """
    kind: Literal["bell", "ghz"] = Field(..., description="Joint state family.")
    wires: List[int] = Field(..., min_length=2, description="1-based circuit wires holding the joint state.")


class AcceptanceCriteria(BaseModel):
    """
    Predicates an experiment must meet; unset fields are not checked.
    """
    max_discrepancy: Optional[float] = Field(None, description="Largest tolerated trace distance to the ideal outputs.")
    expect_abort: Optional[bool] = Field(None, description="Whether every run should (or should not) abort.")
    min_abort_rate: Optional[float] = Field(None, ge=0.0, le=1.0, description="Minimum fraction of aborted seeds at the largest s swept.")
    workspace_hwm_equals: Optional[int] = Field(None, description="Exact per-node workspace high-water mark.")
    within_workspace_bounds: bool = Field(False, description="Measured workspace and sharing-phase traffic "
                                                             "within the closed-form bounds.")
    min_r_squared: Optional[float] = Field(None, description="Fit quality of sent qubits against s.")
    no_honest_in_b: bool = Field(False, description="No honest node ever becomes an apparent cheater.")
    detection_tolerance: Optional[float] = Field(None, description="Allowed gap between measured and exact detection rates.")


class ExperimentSpec(BaseModel):
    """
    A named, fully resolved experiment.
    """
    scenario: str = Field(..., description="Scenario name.")
    description: str = Field("", description="One-line summary for reports.")
    kind: Literal["mpqc", "detection"] = Field("mpqc", description="Full protocol runs, or unencoded detection sampling.")
    network: NetworkConfig = Field(default_factory=NetworkConfig)
    circuit_text: Optional[str] = Field(None, description="Inline circuit in the line format.")
    circuit_path: Optional[str] = Field(None, description="Path to a circuit file.")
    inputs: List[str] = Field(default_factory=list, description="Per-wire input state names ('0', '+', 'm', 'haar', ...).")
    joint_inputs: List[JointInput] = Field(default_factory=list)
    adversary: AdversarySpec = Field(default_factory=AdversarySpec)
    seeds: List[int] = Field(default_factory=lambda: [0])
    comparison: Comparison = Field("vs-ideal-oracle")
    sweep_s: Optional[List[int]] = Field(None, description="Security parameters to sweep, when the scenario is a sweep.")
    sweep_adversaries: Optional[List[str]] = Field(None, description="Strategies to sweep, when the scenario is a sweep.")
    acceptance: AcceptanceCriteria = Field(default_factory=AcceptanceCriteria)


class ResourceSummary(BaseModel):
    """
    Measured counts next to their closed-form bounds.
    """
    n: int
    s: int
    measured: Dict[str, int] = Field(..., description="Measured value per bound name.")
    formulas: Dict[str, int] = Field(..., description="Closed-form bound per name.")
    within_bounds: Dict[str, bool]
    sent_per_node: Dict[str, List[int]] = Field(..., description="Qubits sent per node, per phase.")
    workspace_hwm_per_node: List[int]
    phase_hwm: Dict[str, int]
    broadcast_bits: Dict[str, int]
    total_sent_max: int


class WireOutput(BaseModel):
    """
    One reconstructed output wire.
    """
    wire: int
    node: int
    bloch: Optional[List[float]] = Field(None, description="Bloch vector of the output; None for ⊥ or a rejected share.")
    rejected: bool = False
    trace_distance: Optional[float] = Field(None, description="Distance to the ideal output when compared.")


class AuditSummary(BaseModel):
    apparent: List[int]
    corrupted: List[int]
    explainable: List[int]
    unexplained: List[int]
    honest_in_b: List[int]
    injections: int
    clean: bool


class RunReport(BaseModel):
    """
    Everything one seeded run produced.
    """
    schema_version: str = REPORT_SCHEMA_VERSION
    scenario: str
    seed: int
    digest: str = Field(..., description="sha256 of configuration plus seed.")
    config: NetworkConfig
    adversary: AdversarySpec
    backend_used: str
    rerouted: bool = False
    aborted: bool = False
    apparent_cheaters: List[int] = Field(default_factory=list)
    b_history: List[List[int]] = Field(default_factory=list)
    verdicts: Dict[str, str] = Field(default_factory=dict)
    decoded_values: List[int] = Field(default_factory=list)
    outputs: List[WireOutput] = Field(default_factory=list)
    resources: Optional[ResourceSummary] = None
    transcript_digest: str = ""
    discrepancy: Optional[float] = None
    audit: Optional[AuditSummary] = None
    error: Optional[str] = None
    passed: bool = True


class IdealOracleResult(BaseModel):
    """
    Outputs of the circuit run directly on unencoded inputs.
    """
    outputs: Dict[int, List[float]] = Field(..., description="Bloch vector per output wire.")
    nodes: Dict[int, int] = Field(..., description="Receiving node per output wire.")


class DistanceReport(BaseModel):
    """
    Real-versus-ideal comparison over seeds.
    """
    scenario: str
    mode: Literal["outputs", "abort-consistency"]
    seeds: List[int]
    per_seed: List[Optional[float]]
    max_discrepancy: Optional[float]
    abort_consistent: Optional[bool] = None
    passed: bool


class SecurityBudget(BaseModel):
    """
    κ with the failure bound it multiplies, plus measured detection rates.
    """
    n: int
    s: int
    num_t: int
    num_ancillas: int
    kappa: int
    rounds: int
    bound: str
    detection: Dict[str, float] = Field(default_factory=dict, description="Single-round detection probability per target state.")
    curves: Dict[str, Dict[int, float]] = Field(default_factory=dict, description="Caught fraction per s, per strategy.")


class ExperimentReport(BaseModel):
    scenario: str
    digest: str
    runs: List[RunReport]
    regression: Optional[Dict[str, float]] = None
    detection: Dict[str, float] = Field(default_factory=dict, description="Exact and sampled detection rates, for detection experiments.")
    abort_rates: Dict[int, float] = Field(default_factory=dict, description="Fraction of aborted runs per s.")
    failures: List[str] = Field(default_factory=list)
    passed: bool


def validated(model, **data):
    """Builds a pydantic model, turning validation failures into ConfigError."""
    try:
        return model(**data)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__}: {e}") from e
