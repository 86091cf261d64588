# src/harness.py
"""
Experiment harness: the scenario catalog, seeded runs with reports, the
real-versus-ideal comparator and the security budget.
"""
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.adversary.audit import ground_truth_audit
from src.adversary.strategies import ABORT, expected_verdict, make_strategy
from src.backends.gates import KET_0, KET_1, KET_MINUS, KET_PLUS, bell_state, ghz_state, resolve_state, trace_distance
from src.cache.report_store import ReportStore
from src.circuit.circuit_ir import Circuit, load_circuit, parse, validate_and_stats
from src.codes.css_code import CssCode, build_css, steane_code
from src.codes.gf2_codes import load_code_file
from src.config.config import STATEVECTOR_CAPACITY, SWEEP_WORKERS
from src.models.models import (AdversarySpec, DistanceReport, ExperimentReport, ExperimentSpec, NetworkConfig,
                               RunReport, SecurityBudget, WireOutput, validated)
from src.netsim.ledger import ledger_report
from src.services.magic_service import physical_detection_probability
from src.services.mpqc_service import MpqcService
from src.services.oracle_service import bloch_vector, ideal_densities
from src.services.share_grid import build_context
from src.services.vqss_service import VqssService
from src.utils.errors import ConfigError, UnsupportedFramePropagation
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Offset of the per-seed stream that draws haar inputs, kept apart from the run streams.
INPUT_STREAM = 7919

CNOT_CIRCUIT = "WIRES 2\nCNOT 1 2\nOUT 1 1\nOUT 2 2\n"
T_CIRCUIT = "WIRES 1\nT 1\nOUT 1 1\n"
IDENTITY_CIRCUIT = "WIRES 1\nOUT 1 1\n"

RESOURCE_BOUNDS = ("workspace", "sharing_workspace", "vqss_workspace", "vmagic_workspace", "ancilla_workspace",
                   "sharing_sent", "sharing_sent_rounds")

SCENARIOS: Dict[str, dict] = {
    "steane-cnot": dict(
        description="Seven-node Steane network, CNOT between two dealt inputs, honest.",
        circuit_text=CNOT_CIRCUIT, inputs=["+", "0"], seeds=list(range(5)),
        network=dict(s=2, backend="frame", levels=2, enforce_workspace=True),
        acceptance=dict(max_discrepancy=1e-12, expect_abort=False, workspace_hwm_equals=28,
                        within_workspace_bounds=True),
    ),
    "steane-cnot-sv": dict(
        description="The CNOT run at one encoding level on the statevector engine with haar inputs.",
        circuit_text=CNOT_CIRCUIT, inputs=["haar", "haar"], seeds=list(range(50)),
        network=dict(s=1, backend="sv", levels=1),
        acceptance=dict(max_discrepancy=1e-9, expect_abort=False),
    ),
    "steane-t": dict(
        description="One teleported T gate on a dealt |+⟩.",
        circuit_text=T_CIRCUIT, inputs=["+"], seeds=list(range(3)),
        network=dict(s=2, backend="frame", levels=2, enforce_workspace=True),
        acceptance=dict(max_discrepancy=1e-9, expect_abort=False, within_workspace_bounds=True),
    ),
    "steane-identity": dict(
        description="Share, verify and reconstruct a single |1⟩.",
        circuit_text=IDENTITY_CIRCUIT, inputs=["1"], seeds=list(range(3)),
        network=dict(s=1, backend="frame", levels=2),
        acceptance=dict(max_discrepancy=1e-12, expect_abort=False),
    ),
    "abort-two-cheaters": dict(
        description="Two colluding nodes tamper with their shares; honest outputs must be ⊥.",
        circuit_text=IDENTITY_CIRCUIT, inputs=["0"], seeds=list(range(100)),
        network=dict(backend="frame", levels=2),
        adversary=dict(name="two-cheater-collusion"),
        comparison="resource-only", sweep_s=[1, 2, 4, 8],
        acceptance=dict(min_abort_rate=0.99),
    ),
    "bad-dealer": dict(
        description="Dealer 1 encodes with a weight-2 error; it must fail verification.",
        circuit_text=IDENTITY_CIRCUIT, inputs=["0"], seeds=list(range(100)),
        network=dict(backend="frame", levels=2),
        adversary=dict(name="bad-dealer-weight-2"),
        comparison="resource-only", sweep_s=[1, 2, 4, 8],
        acceptance=dict(min_abort_rate=0.9),
    ),
    "adversary-sweep": dict(
        description="Every single-cheater strategy against the CNOT run.",
        circuit_text=CNOT_CIRCUIT, inputs=["+", "0"], seeds=list(range(100)),
        network=dict(s=1, backend="frame", levels=2),
        sweep_adversaries=["honest", "single-x-on-share", "z-spray", "lie-on-broadcast",
                           "corrupt-before-reconstruct", "x-on-every-ancilla"],
        acceptance=dict(max_discrepancy=1e-12, expect_abort=False, no_honest_in_b=True),
    ),
    "resource-sweep": dict(
        description="Qubits sent and workspace for a one-T circuit as s grows.",
        circuit_text=T_CIRCUIT, inputs=["0"], seeds=[0],
        network=dict(backend="null", levels=2),
        comparison="resource-only", sweep_s=[1, 2, 3, 4],
        acceptance=dict(min_r_squared=0.999, within_workspace_bounds=True),
    ),
    "vmagic-detection": dict(
        description="Single-round detection rates of the magic-state check on unencoded targets.",
        kind="detection", seeds=[0], comparison="resource-only",
        acceptance=dict(detection_tolerance=0.03),
    ),
}


def scenario_names() -> List[str]:
    return sorted(SCENARIOS)


def load_scenario(name: str, **overrides) -> ExperimentSpec:
    """
    Resolves a catalog entry into a validated ExperimentSpec.

    Raises:
        ConfigError: unknown name or invalid override.
    """
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; known: {scenario_names()}")
    data = json.loads(json.dumps(SCENARIOS[name]))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return validated(ExperimentSpec, scenario=name, **data)


def resolve_code(name: str) -> CssCode:
    """'steane', or a code file whose classical code serves as both V and W."""
    if name == "steane":
        return steane_code()
    try:
        v = load_code_file(name)
    except OSError as e:
        raise ConfigError(f"cannot read code file {name}: {e}") from e
    return build_css(v, v, name=name)


def resolve_circuit(spec: ExperimentSpec) -> Circuit:
    if spec.circuit_text:
        return parse(spec.circuit_text)
    if spec.circuit_path:
        try:
            return load_circuit(spec.circuit_path)
        except OSError as e:
            raise ConfigError(f"cannot read circuit {spec.circuit_path}: {e}") from e
    raise ConfigError(f"scenario {spec.scenario} names no circuit")


def run_digest(spec: ExperimentSpec, config: NetworkConfig, adversary: AdversarySpec) -> str:
    """sha256 of everything that determines a run."""
    blob = json.dumps({
        "scenario": spec.scenario,
        "circuit": spec.circuit_text or spec.circuit_path,
        "inputs": spec.inputs,
        "joint_inputs": [j.model_dump() for j in spec.joint_inputs],
        "config": config.model_dump(),
        "adversary": adversary.model_dump(),
    }, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def fits_statevector(circuit: Circuit, n: int) -> bool:
    """Whether a one-level statevector rerun is expected to stay within capacity."""
    return n * (circuit.num_wires + 1) <= STATEVECTOR_CAPACITY


def quadratic_fit(s_values: Sequence[int], sent: Sequence[float]) -> Dict[str, float]:
    """
    Fits sent qubits to a quadratic in s and, separately, to a line in the
    number of check rounds plus one.
    """
    s = np.asarray(s_values, dtype=float)
    y = np.asarray(sent, dtype=float)
    out: Dict[str, float] = {}
    if s.size < 3:
        return out
    coeffs = np.polyfit(s, y, 2)
    residual = y - np.polyval(coeffs, s)
    total = float(np.sum((y - y.mean()) ** 2))
    out["c"] = float(coeffs[0])
    out["r_squared"] = 1.0 - float(np.sum(residual ** 2)) / total if total > 0 else 1.0
    rounds = s * s + 2 * s + 1
    slope, intercept = np.polyfit(rounds, y, 1)
    lin_res = y - (slope * rounds + intercept)
    out["per_round"] = float(slope)
    out["r_squared_rounds"] = 1.0 - float(np.sum(lin_res ** 2)) / total if total > 0 else 1.0
    return out


class ExperimentRunner:
    """
    Runs one ExperimentSpec seed by seed.

    Args:
        spec: the resolved experiment.
        store: where reports go; nothing is written without one.
    """

    def __init__(self, spec: ExperimentSpec, store: Optional[ReportStore] = None):
        self.spec = spec
        self.store = store
        self.code = resolve_code(spec.network.code)
        self.circuit = resolve_circuit(spec) if spec.kind == "mpqc" else None
        if self.circuit is not None:
            self.stats = validate_and_stats(self.circuit, self.code.n)
            if spec.network.n != self.code.n:
                logger.info(f"Using n = {self.code.n} from {self.code!r} instead of {spec.network.n}")

    def _inputs(self, seed: int) -> Tuple[List[np.ndarray], List[Tuple[List[int], np.ndarray]]]:
        rng = np.random.default_rng(np.random.SeedSequence([seed, INPUT_STREAM]))
        names = list(self.spec.inputs) or ["0"] * self.circuit.num_inputs
        if len(names) < self.circuit.num_inputs:
            raise ConfigError(f"{self.circuit.num_inputs} input wires but {len(names)} input states")
        inputs = [resolve_state(name, rng) for name in names]
        joint = []
        for j in self.spec.joint_inputs:
            if j.kind == "bell" and len(j.wires) != 2:
                raise ConfigError("a bell input spans exactly two wires")
            joint.append((list(j.wires), bell_state() if j.kind == "bell" else ghz_state(len(j.wires))))
        return inputs, joint

    def _execute(self, config: NetworkConfig, adversary: AdversarySpec, inputs, joint):
        strategy = make_strategy(adversary.name, adversary.corrupt, adversary.adv_seed, n=self.code.n)
        n = self.code.n
        bound = n * n + 4 * n if config.enforce_workspace else None
        ctx = build_context(self.code, config.s, backend=config.backend, levels=config.levels, seed=config.seed,
                            strategy=strategy, adv_seed=adversary.adv_seed, workspace_bound=bound,
                            cg_mode=config.cg_mode)
        outcome = MpqcService(ctx).run(self.circuit, inputs, joint)
        return ctx, strategy, outcome

    def _reference(self, config: NetworkConfig, inputs, joint) -> Dict[int, np.ndarray]:
        if self.spec.comparison == "vs-statevector":
            ctx = build_context(self.code, config.s, backend="sv", levels=1, seed=config.seed)
            outcome = MpqcService(ctx).run(self.circuit, inputs, joint)
            return {w: r.density for w, r in outcome.outputs.items() if r.density is not None}
        return ideal_densities(self.circuit, inputs, joint)

    def run_seed(self, seed: int, s: Optional[int] = None, adversary: Optional[AdversarySpec] = None) -> RunReport:
        """
        One seeded run: protocol, resources, audit, and the per-run acceptance checks.
        """
        spec = self.spec
        update = {"seed": seed, "n": self.code.n}
        if s is not None:
            update["s"] = s
        config = spec.network.model_copy(update=update)
        adversary = adversary or spec.adversary
        digest = run_digest(spec, config, adversary)
        inputs, joint = self._inputs(seed)

        rerouted = False
        try:
            ctx, strategy, outcome = self._execute(config, adversary, inputs, joint)
        except UnsupportedFramePropagation as e:
            if not fits_statevector(self.circuit, self.code.n):
                raise
            logger.warning(f"{spec.scenario} seed {seed}: {e}; rerunning on the one-level statevector engine")
            config = config.model_copy(update={"backend": "sv", "levels": 1})
            ctx, strategy, outcome = self._execute(config, adversary, inputs, joint)
            rerouted = True

        reference = {}
        if spec.comparison != "resource-only" and not outcome.aborted:
            reference = self._reference(config, inputs, joint)
        outputs, distances = [], []
        for w, result in sorted(outcome.outputs.items()):
            distance = None
            if result.density is not None and w in reference:
                distance = trace_distance(result.density, reference[w])
                distances.append(distance)
            outputs.append(WireOutput(wire=w, node=result.node,
                                      bloch=bloch_vector(result.density) if result.density is not None else None,
                                      rejected=result.rejected, trace_distance=distance))

        report = RunReport(
            scenario=spec.scenario,
            seed=seed,
            digest=digest,
            config=config,
            adversary=adversary,
            backend_used=config.backend,
            rerouted=rerouted,
            aborted=outcome.aborted,
            apparent_cheaters=sorted(outcome.apparent),
            b_history=ctx.transcript.b_history(),
            verdicts=outcome.verdicts,
            decoded_values=list(ctx.transcript.decoded),
            outputs=outputs,
            resources=ledger_report(ctx.ledger, config.s),
            transcript_digest=ctx.transcript.digest(),
            discrepancy=max(distances) if distances else None,
            audit=ground_truth_audit(ctx.transcript, strategy.corrupted, ctx.cheaters),
        )
        failures = run_failures(report, spec, self.code.t)
        report.passed = not failures
        if failures:
            report.error = "; ".join(failures)
        logger.info(f"{spec.scenario} seed {seed}: aborted={report.aborted}, B={report.apparent_cheaters}, "
                    f"discrepancy={report.discrepancy}, passed={report.passed}")
        return report

    def _jobs(self) -> List[Tuple[int, Optional[int], Optional[AdversarySpec]]]:
        spec = self.spec
        s_values = spec.sweep_s or [None]
        adversaries = [AdversarySpec(name=name, adv_seed=spec.adversary.adv_seed)
                       for name in spec.sweep_adversaries] if spec.sweep_adversaries else [None]
        return [(seed, s, adv) for adv in adversaries for s in s_values for seed in spec.seeds]

    def _guarded(self, job) -> RunReport:
        seed, s, adversary = job
        try:
            return self.run_seed(seed, s, adversary)
        except ConfigError:
            raise
        except Exception as e:
            logger.error(f"{self.spec.scenario} seed {seed} failed: {e}", exc_info=True)
            config = self.spec.network.model_copy(update={"seed": seed, **({"s": s} if s else {})})
            adversary = adversary or self.spec.adversary
            return RunReport(scenario=self.spec.scenario, seed=seed, digest=run_digest(self.spec, config, adversary),
                             config=config, adversary=adversary, backend_used=config.backend,
                             error=f"{type(e).__name__}: {e}", passed=False)

    def run_experiment(self) -> ExperimentReport:
        """
        Runs every (adversary, s, seed) job on a thread pool, merges the
        reports in job order, applies the experiment-level checks and
        writes the files when a store is attached.
        """
        spec = self.spec
        if spec.kind == "detection":
            report = self._detection_experiment()
        else:
            jobs = self._jobs()
            runs: List[Optional[RunReport]] = [None] * len(jobs)
            with ThreadPoolExecutor(max_workers=SWEEP_WORKERS) as executor:
                futures = {executor.submit(self._guarded, job): i for i, job in enumerate(jobs)}
                for future, i in futures.items():
                    runs[i] = future.result()
            regression = None
            if spec.sweep_s:
                by_s: Dict[int, List[int]] = {}
                for run in runs:
                    if run.resources is not None:
                        by_s.setdefault(run.config.s, []).append(run.resources.total_sent_max)
                s_values = sorted(by_s)
                regression = quadratic_fit(s_values, [float(np.mean(by_s[s])) for s in s_values])
            failures = experiment_failures(runs, spec, regression)
            failures += [f"seed {r.seed} ({r.adversary.name}): {r.error}" for r in runs if not r.passed]
            report = ExperimentReport(scenario=spec.scenario, digest=run_digest(spec, spec.network, spec.adversary),
                                      runs=runs, regression=regression, abort_rates=abort_rates(runs),
                                      failures=failures, passed=not failures)
        if self.store is not None:
            self.store.save_experiment(report)
        logger.info(f"Experiment {spec.scenario}: {'passed' if report.passed else 'FAILED'} "
                    f"({len(report.failures)} failed checks)")
        return report

    def _detection_experiment(self) -> ExperimentReport:
        tolerance = self.spec.acceptance.detection_tolerance
        detection: Dict[str, float] = {}
        failures: List[str] = []
        targets = {"zero": KET_0, "one": KET_1, "plus": KET_PLUS, "minus": KET_MINUS}
        for seed in self.spec.seeds:
            rng = np.random.default_rng(seed)
            for name, target in targets.items():
                estimate = physical_detection_probability(target, "G", trials=10_000, rng=rng)
                detection[f"exact:{name}"] = estimate.exact
                detection[f"seed{seed}:{name}"] = estimate.measured
                if tolerance is not None and abs(estimate.measured - estimate.exact) > tolerance:
                    failures.append(f"seed {seed}: {name} detected at {estimate.measured:.4f}, "
                                    f"expected {estimate.exact:.4f} ± {tolerance}")
        return ExperimentReport(scenario=self.spec.scenario,
                                digest=run_digest(self.spec, self.spec.network, self.spec.adversary),
                                runs=[], detection=detection, failures=failures, passed=not failures)


def run_failures(report: RunReport, spec: ExperimentSpec, t: int) -> List[str]:
    """Per-run acceptance predicates that do not hold."""
    acc, failures = spec.acceptance, []
    if acc.expect_abort is not None and report.aborted != acc.expect_abort:
        failures.append(f"aborted={report.aborted}, expected {acc.expect_abort}")
    if acc.max_discrepancy is not None and report.discrepancy is not None and report.discrepancy > acc.max_discrepancy:
        failures.append(f"discrepancy {report.discrepancy:.3g} above {acc.max_discrepancy}")
    if acc.max_discrepancy is not None and not report.aborted and any(o.rejected for o in report.outputs):
        failures.append("an honest output was rejected")
    res = report.resources
    if res is not None and acc.workspace_hwm_equals is not None and res.measured["workspace"] != acc.workspace_hwm_equals:
        failures.append(f"workspace {res.measured['workspace']}, expected {acc.workspace_hwm_equals}")
    if res is not None and acc.within_workspace_bounds:
        over = [k for k in RESOURCE_BOUNDS if not res.within_bounds[k]]
        if over:
            failures.append(f"resource bounds exceeded: {over}")
    audit = report.audit
    if acc.no_honest_in_b and audit is not None and len(audit.corrupted) <= t and audit.honest_in_b:
        failures.append(f"honest nodes {audit.honest_in_b} became apparent cheaters")
    return failures


def abort_rates(runs: Sequence[RunReport]) -> Dict[int, float]:
    by_s: Dict[int, List[bool]] = {}
    for run in runs:
        by_s.setdefault(run.config.s, []).append(run.aborted)
    return {s: sum(flags) / len(flags) for s, flags in sorted(by_s.items())}


def experiment_failures(runs: Sequence[RunReport], spec: ExperimentSpec, regression: Optional[Dict[str, float]]) -> List[str]:
    """Experiment-level checks. The abort-rate floor applies at the largest s swept."""
    acc, failures = spec.acceptance, []
    if acc.min_abort_rate is not None and runs:
        rates = abort_rates(runs)
        top = max(rates)
        if rates[top] < acc.min_abort_rate:
            failures.append(f"abort rate {rates[top]:.3f} at s={top} below {acc.min_abort_rate}")
    if acc.min_r_squared is not None:
        r2 = (regression or {}).get("r_squared")
        if r2 is None or r2 < acc.min_r_squared:
            failures.append(f"fit R² {r2} below {acc.min_r_squared}")
    return failures


def run_experiment(spec: ExperimentSpec, out_dir: Optional[str] = None) -> ExperimentReport:
    return ExperimentRunner(spec, ReportStore(out_dir) if out_dir else None).run_experiment()


def compare_real_vs_ideal(spec: ExperimentSpec) -> DistanceReport:
    """
    Runs every seed against the ideal oracle. With more corrupted nodes
    than the code tolerates, checks instead that each run either aborts
    with ⊥ everywhere or still matches the oracle.
    """
    if spec.comparison == "resource-only":
        spec = spec.model_copy(update={"comparison": "vs-ideal-oracle"})
    runner = ExperimentRunner(spec)
    t = runner.code.t
    corrupted = spec.adversary.corrupt
    if corrupted is None:
        corrupted = make_strategy(spec.adversary.name).corrupted
    over_t = len(set(corrupted)) > t or expected_verdict(spec.adversary.name) == ABORT
    tolerance = spec.acceptance.max_discrepancy if spec.acceptance.max_discrepancy is not None else 1e-9

    per_seed: List[Optional[float]] = []
    consistent = True
    for seed in spec.seeds:
        run = runner.run_seed(seed)
        per_seed.append(run.discrepancy)
        if over_t:
            bottom = all(o.bloch is None for o in run.outputs)
            matches = run.discrepancy is not None and run.discrepancy <= tolerance
            consistent &= (run.aborted and bottom) or (not run.aborted and matches)
    measured = [d for d in per_seed if d is not None]
    worst = max(measured) if measured else None
    if over_t:
        return DistanceReport(scenario=spec.scenario, mode="abort-consistency", seeds=list(spec.seeds),
                              per_seed=per_seed, max_discrepancy=worst, abort_consistent=consistent,
                              passed=consistent)
    passed = len(measured) == len(per_seed) and (worst is None or worst <= tolerance)
    return DistanceReport(scenario=spec.scenario, mode="outputs", seeds=list(spec.seeds), per_seed=per_seed,
                          max_discrepancy=worst, passed=passed)


def detection_curve(strategy: str, s_values: Iterable[int], seeds: Iterable[int], code: Optional[CssCode] = None,
                    dealer: int = 1, levels: int = 2) -> Dict[int, float]:
    """
    Fraction of seeds in which verifying `dealer`'s sharing blames more
    than t nodes, per s, with the strategy's default corrupted set.
    """
    code = code or steane_code()
    seeds = list(seeds)
    curve: Dict[int, float] = {}
    for s in s_values:
        caught = 0
        for seed in seeds:
            adversary = make_strategy(strategy, adv_seed=seed, n=code.n)
            ctx = build_context(code, s, backend="frame", levels=levels, seed=seed, strategy=adversary)
            _, result = VqssService(ctx).share_and_verify(dealer, KET_0)
            caught += not result.passed
        curve[int(s)] = caught / len(seeds) if seeds else 0.0
        logger.info(f"{strategy} caught in {curve[int(s)]:.2%} of {len(seeds)} seeds at s={s}")
    return curve


def security_budget(n: int, s: int, circuit: Circuit, curve_strategies: Sequence[str] = (),
                    curve_s: Sequence[int] = (), curve_seeds: Sequence[int] = (),
                    trials: int = 10_000) -> SecurityBudget:
    """
    κ = n + #T + #ancillas next to the failure bound κ·2^(−Ω(s)). The
    constant in the exponent is left symbolic; the report carries measured
    single-round detection probabilities of the magic-state check and,
    when asked, caught-dealer curves against s.
    """
    stats = validate_and_stats(circuit, n)
    rng = np.random.default_rng(0)
    detection = {}
    for name, target in (("0", KET_0), ("1", KET_1), ("+", KET_PLUS), ("-", KET_MINUS)):
        detection[name] = physical_detection_probability(target, "G", trials=trials, rng=rng).measured
    curves = {name: detection_curve(name, curve_s, curve_seeds) for name in curve_strategies}
    return SecurityBudget(n=n, s=s, num_t=stats.num_t, num_ancillas=stats.num_ancillas, kappa=stats.kappa,
                          rounds=s * s + 2 * s, bound=f"{stats.kappa}·2^(-Ω({s}))", detection=detection,
                          curves=curves)
