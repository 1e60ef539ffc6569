"""Experiment reports and their byte-stable CSV/JSON serialization.

Emitted files are a pure function of (config, master seed): no timestamps
or timings are written, so identical runs produce identical bytes.  Wall
clock lives on the in-memory report only and goes to the log.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

from ..stats import Assertion

SCHEMA_VERSION = 1


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    columns: list
    rows: list                 # list of dicts keyed by ``columns``
    agg_columns: list
    aggregates: list           # list of dicts keyed by ``agg_columns``
    assertions: list           # list of stats.Assertion
    passed: bool
    wall_clock_s: float = 0.0  # not serialized
    schema_version: int = SCHEMA_VERSION

    def summary_lines(self) -> list:
        lines = [a.describe() for a in self.assertions]
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict} {self.kind}: {len(self.rows)} rows, "
                     f"{len(self.assertions)} assertions, {self.wall_clock_s:.2f}s")
        return lines


def _cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _assertion_dict(a: Assertion) -> dict:
    return {
        "name": a.name,
        "observed": a.observed,
        "bound": a.bound,
        "slack_rule": a.slack_rule,
        "passed": a.passed,
    }


def render_csv(report: ExperimentReport) -> str:
    """One file, three sections (rows, aggregates, assertions), comment-framed."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")

    def comment(text):
        buf.write(text + "\n")

    def table(columns, rows):
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c, "")) for c in columns])

    comment(f"# drloss report schema={report.schema_version} kind={report.kind}")
    comment("# config: " + json.dumps(report.config, sort_keys=True))
    comment("# sections follow: per-trial rows, then aggregates, then assertions")
    table(report.columns, report.rows)
    comment("# aggregates")
    table(report.agg_columns, report.aggregates)
    comment("# assertions")
    acols = ["name", "observed", "bound", "slack_rule", "passed"]
    table(acols, [_assertion_dict(a) for a in report.assertions])
    comment(f"# passed={1 if report.passed else 0}")
    return buf.getvalue()


def render_json(report: ExperimentReport) -> str:
    payload = {
        "schema_version": report.schema_version,
        "kind": report.kind,
        "config": report.config,
        "columns": report.columns,
        "rows": report.rows,
        "agg_columns": report.agg_columns,
        "aggregates": report.aggregates,
        "assertions": [_assertion_dict(a) for a in report.assertions],
        "passed": report.passed,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def emit_report(report: ExperimentReport, fmt: str, path) -> None:
    """Write the report; identical reports yield byte-identical files."""
    if fmt == "csv":
        text = render_csv(report)
    elif fmt == "json":
        text = render_json(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    Path(path).write_text(text)


def read_csv_sections(path) -> dict:
    """Re-parse an emitted CSV into its three sections (for round-trip checks)."""
    lines = Path(path).read_text().splitlines()
    sections: dict = {"rows": [], "aggregates": [], "assertions": []}
    current = "rows"
    header: list | None = None
    for line in lines:
        if line.startswith("#"):
            if line == "# aggregates":
                current, header = "aggregates", None
            elif line == "# assertions":
                current, header = "assertions", None
            continue
        (cells,) = csv.reader([line])
        if header is None:
            header = cells
            sections[current + "_columns"] = header
            continue
        sections[current].append(dict(zip(header, cells)))
    return sections
