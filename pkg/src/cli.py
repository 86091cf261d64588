# src/cli.py
import argparse
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

load_dotenv()  # before src.config reads MPQC_* at import

from src.adversary.strategies import STRATEGIES  # noqa: E402
from src.circuit.circuit_ir import load_circuit  # noqa: E402
from src.config.config import DEFAULT_SEED, REPORT_DIR  # noqa: E402
from src.harness import SCENARIOS, ExperimentRunner, load_scenario, scenario_names, security_budget  # noqa: E402
from src.cache.report_store import ReportStore  # noqa: E402
from src.models.models import ExperimentSpec, validated  # noqa: E402
from src.utils.errors import CircuitParseError, MpqcError  # noqa: E402
from src.utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)


def _ids(text: str) -> List[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpqc", description="Secure multi-party quantum computation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario or a circuit file.")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--scenario", choices=scenario_names())
    source.add_argument("--circuit", help="Path to a circuit in the line format.")
    run.add_argument("--n", type=int)
    run.add_argument("--s", type=int)
    run.add_argument("--seed", type=int, help="Run a single seed instead of the scenario's list.")
    run.add_argument("--seeds", type=int, help="Run seeds 0..N-1.")
    run.add_argument("--backend", choices=("sv", "tableau", "frame", "null"))
    run.add_argument("--levels", type=int, choices=(1, 2))
    run.add_argument("--code", help="'steane' or a code file in the 'n k d' format.")
    run.add_argument("--inputs", help="Comma-separated input states, e.g. '+,0' or 'haar,haar'.")
    run.add_argument("--adversary", choices=sorted(STRATEGIES))
    run.add_argument("--adv-seed", type=int, default=0)
    run.add_argument("--corrupt", type=_ids)
    run.add_argument("--enforce-workspace", action="store_true")
    run.add_argument("--out", default=REPORT_DIR, help="Report directory.")

    budget = sub.add_parser("budget", help="Print κ and the failure bound for a circuit.")
    budget.add_argument("--circuit", required=True)
    budget.add_argument("--n", type=int, default=7)
    budget.add_argument("--s", type=int, default=2)
    budget.add_argument("--curves", action="store_true", help="Also measure caught-dealer rates for s = 1..s.")
    budget.add_argument("--curve-seeds", type=int, default=20)

    sub.add_parser("scenarios", help="List the built-in scenarios.")
    return parser


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    """Scenario defaults, overridden by whatever was given on the command line."""
    network = {k: v for k, v in (("n", args.n), ("s", args.s), ("backend", args.backend),
                                 ("levels", args.levels), ("code", args.code)) if v is not None}
    if args.enforce_workspace:
        network["enforce_workspace"] = True
    if args.scenario:
        base = load_scenario(args.scenario)
    else:
        base = validated(ExperimentSpec, scenario=os.path.splitext(os.path.basename(args.circuit))[0],
                         circuit_path=args.circuit)
    data = base.model_dump()
    data["network"].update(network)
    if args.inputs:
        data["inputs"] = [tok.strip() for tok in args.inputs.split(",")]
    if args.adversary:
        data["adversary"] = {"name": args.adversary, "corrupt": args.corrupt, "adv_seed": args.adv_seed}
        data["sweep_adversaries"] = None
    elif args.corrupt:
        data["adversary"]["corrupt"] = args.corrupt
    if args.seed is not None:
        data["seeds"] = [args.seed]
    elif args.seeds is not None:
        data["seeds"] = list(range(args.seeds))
    elif not args.scenario:
        data["seeds"] = [DEFAULT_SEED]
    return validated(ExperimentSpec, **data)


def cmd_run(args: argparse.Namespace) -> int:
    spec = spec_from_args(args)
    store = ReportStore(args.out)
    report = ExperimentRunner(spec, store).run_experiment()
    print(store.render_table(report))
    return 0 if report.passed else 1


def cmd_budget(args: argparse.Namespace) -> int:
    circuit = load_circuit(args.circuit)
    strategies = ("bad-dealer-weight-2", "two-cheater-collusion") if args.curves else ()
    budget = security_budget(args.n, args.s, circuit, curve_strategies=strategies,
                             curve_s=range(1, args.s + 1), curve_seeds=range(args.curve_seeds))
    print(f"kappa = {budget.kappa} (n={budget.n}, #T={budget.num_t}, #ancillas={budget.num_ancillas})")
    print(f"failure bound: {budget.bound}, {budget.rounds} check rounds per verification")
    for target, rate in budget.detection.items():
        print(f"  magic check on |{target}⟩ reads 1 with frequency {rate:.4f}")
    for name, curve in budget.curves.items():
        print(f"  {name}: " + ", ".join(f"s={s}: {rate:.2%}" for s, rate in curve.items()))
    return 0


def cmd_scenarios(args: argparse.Namespace) -> int:
    for name in scenario_names():
        print(f"{name:22s} {SCENARIOS[name].get('description', '')}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "budget": cmd_budget, "scenarios": cmd_scenarios}
    try:
        return handlers[args.command](args)
    except CircuitParseError as e:
        logger.error(f"Circuit error: {e}")
        return 2
    except MpqcError as e:
        logger.error(f"{type(e).__name__}: {e}", exc_info=True)
        return 2
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
