# src/cache/report_store.py
import csv
import json
import os
from datetime import datetime
from typing import List, Optional

from jinja2 import Environment, FileSystemLoader
from pydantic import ValidationError

from src.config.config import REPORT_DIR, REPORT_SCHEMA_VERSION, get_report_file, get_template_dir
from src.models.models import ExperimentReport, RunReport
from src.netsim.ledger import PHASES
from src.utils.logger import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ("scenario", "seed", "n", "s", "phase", "node", "qubits_sent", "workspace_hwm", "formula_value")


class ReportStore:
    """
    Writes run reports, CSV summaries and the text table under one directory.
    """

    def __init__(self, out_dir: Optional[str] = None):
        self.out_dir = out_dir or REPORT_DIR
        self.env = Environment(loader=FileSystemLoader(get_template_dir()), trim_blocks=True, lstrip_blocks=True)

    def _path(self, scenario: str, digest: str, suffix: str) -> str:
        if self.out_dir == REPORT_DIR:
            return get_report_file(scenario, digest, suffix)
        report_dir = os.path.join(self.out_dir, scenario)
        os.makedirs(report_dir, exist_ok=True)
        return os.path.join(report_dir, f"{digest[:16]}.{suffix}")

    def save_report(self, report: RunReport) -> str:
        """
        Saves one run report inside a `last_updated` envelope.

        Returns:
            str: The path written.
        """
        path = self._path(report.scenario, report.digest, "json")
        try:
            with open(path, "w") as f:
                json.dump({
                    "last_updated": datetime.now().isoformat(),
                    "report": report.model_dump(),
                }, f, indent=2, default=str)
            logger.info(f"Run report saved: {path}")
        except IOError as e:
            logger.error(f"Error saving run report to {path}: {e}", exc_info=True)
        return path

    def load_report(self, path: str) -> Optional[RunReport]:
        """
        Loads a saved run report.

        Returns:
            RunReport | None: The report, or None when missing, unreadable or of another schema.
        """
        if not os.path.exists(path):
            logger.info(f"No run report at {path}.")
            return None
        try:
            with open(path, "r") as f:
                data = json.load(f)
            payload = data.get("report", {})
            if payload.get("schema_version") != REPORT_SCHEMA_VERSION:
                logger.warning(f"Run report {path} has schema {payload.get('schema_version')}, "
                               f"expected {REPORT_SCHEMA_VERSION}; ignoring it.")
                return None
            return RunReport.model_validate(payload)
        except ValidationError as e:
            logger.warning(f"Run report {path} does not match the current schema: {e}", exc_info=True)
        except Exception as e:
            logger.error(f"Failed to load run report from {path}: {e}", exc_info=True)
        return None

    def save_experiment(self, report: ExperimentReport) -> List[str]:
        """Writes every run report, the CSV summary and the rendered table; returns the paths."""
        paths = [self.save_report(run) for run in report.runs]
        paths.append(self.write_csv(report))
        table_path = self._path(report.scenario, report.digest, "txt")
        try:
            with open(table_path, "w") as f:
                f.write(self.render_table(report))
            logger.info(f"Summary table saved: {table_path}")
            paths.append(table_path)
        except IOError as e:
            logger.error(f"Error writing summary table {table_path}: {e}", exc_info=True)
        return paths

    def write_csv(self, report: ExperimentReport) -> str:
        """
        One row per (run, phase, node). `formula_value` is the sharing-phase
        sent bound (n + 1)ns² on sharing rows and the workspace bound n² + 4n
        elsewhere.
        """
        path = self._path(report.scenario, report.digest, "csv")
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_COLUMNS)
            for row in csv_rows(report):
                writer.writerow(row)
        logger.info(f"CSV summary saved: {path}")
        return path

    def render_table(self, report: ExperimentReport) -> str:
        template = self.env.get_template("report_table.txt.j2")
        return template.render(report=report, runs=report.runs)


def csv_rows(report: ExperimentReport) -> List[tuple]:
    rows = []
    for run in report.runs:
        res = run.resources
        if res is None:
            continue
        for phase in PHASES:
            formula = res.formulas["sharing_sent"] if phase == "sharing" else res.formulas["workspace"]
            for node, sent in enumerate(res.sent_per_node[phase], start=1):
                rows.append((run.scenario, run.seed, res.n, res.s, phase, node, sent,
                             res.workspace_hwm_per_node[node - 1], formula))
    return rows
