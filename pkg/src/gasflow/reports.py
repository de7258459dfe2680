"""CSV and JSON rendering of run results."""

from __future__ import annotations

import io
import json
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .models import FORMAT_VERSION, Classification, Feasibility, InstanceReport, OutputFormat, SolutionDocument

CSV_HEADER = f"# gasflow-report v{FORMAT_VERSION}"

REPORT_COLUMNS = [
    "instance_id",
    "seed",
    "classification",
    "feasibility",
    "certificate",
    "iterations",
    "residual_final",
    "wall_time_s",
    "diagnostic",
    "converged",
    "feasible",
]
SUMMARY_COLUMNS = ["mean_iterations", "max_iterations", "mean_wall_time_s"]
SUMMARY_ID = "summary"

SOLUTION_COLUMNS = ["row", "element_id", "edge_kind", "pressure_pa", "injection_kg_s", "density_kg_m3", "mass_flow_kg_s"]


def certificate_text(report: InstanceReport) -> str:
    return ";".join(f"{c.element_id}:{c.reason.value}" for c in report.certificate)


def report_row(report: InstanceReport, seed: Optional[int] = None) -> Dict[str, Any]:
    return {
        "instance_id": report.instance_id,
        "seed": seed,
        "classification": report.classification.value,
        "feasibility": report.feasibility.value,
        "certificate": certificate_text(report),
        "iterations": report.iterations,
        "residual_final": report.residual_final,
        "wall_time_s": report.wall_time_s,
        "diagnostic": report.diagnostic or "",
        "converged": int(report.classification is not Classification.E3_FAILED),
        "feasible": int(report.feasibility is Feasibility.FEASIBLE),
    }


def batch_frame(reports: Sequence[InstanceReport], seeds: Sequence[Optional[int]]) -> pd.DataFrame:
    """One row per instance followed by a summary row."""
    rows = [report_row(r, s) for r, s in zip(reports, seeds)]
    iterations = [r.iterations for r in reports]
    times = [r.wall_time_s for r in reports]
    rows.append(
        {
            "instance_id": SUMMARY_ID,
            "converged": sum(row["converged"] for row in rows),
            "feasible": sum(row["feasible"] for row in rows),
            "mean_iterations": sum(iterations) / len(iterations) if iterations else 0.0,
            "max_iterations": max(iterations, default=0),
            "mean_wall_time_s": sum(times) / len(times) if times else 0.0,
        }
    )
    return pd.DataFrame(rows, columns=REPORT_COLUMNS + SUMMARY_COLUMNS)


def to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    buffer.write(CSV_HEADER + "\n")
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def read_csv(text: str) -> pd.DataFrame:
    # instance ids contain "#", so only the leading header line is skipped
    skip = 1 if text.startswith(CSV_HEADER) else 0
    return pd.read_csv(io.StringIO(text), skiprows=skip, keep_default_na=False, na_values=[""])


def _jsonable(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    return json.loads(frame.to_json(orient="records"))


def render_table(frame: pd.DataFrame, fmt: OutputFormat) -> str:
    if fmt is OutputFormat.CSV:
        return to_csv(frame)
    return json.dumps({"format_version": FORMAT_VERSION, "rows": _jsonable(frame)}, indent=2) + "\n"


def solve_frame(report: InstanceReport, solution: Optional[SolutionDocument]) -> pd.DataFrame:
    """Report row followed by one row per node and per edge of the SI solution."""
    rows: List[Dict[str, Any]] = [{"row": "report", **report_row(report)}]
    if solution is not None:
        rows += [
            {
                "row": "node",
                "element_id": n.id,
                "pressure_pa": n.pressure_pa,
                "injection_kg_s": n.injection_kg_s,
                "density_kg_m3": n.density_kg_m3,
            }
            for n in solution.nodes
        ]
        rows += [
            {"row": "edge", "element_id": e.id, "edge_kind": e.kind.value, "mass_flow_kg_s": e.mass_flow_kg_s}
            for e in solution.edges
        ]
    columns = SOLUTION_COLUMNS[:1] + REPORT_COLUMNS + SOLUTION_COLUMNS[1:]
    return pd.DataFrame(rows, columns=columns)


def render_solve(report: InstanceReport, solution: Optional[SolutionDocument], fmt: OutputFormat) -> str:
    if fmt is OutputFormat.CSV:
        return to_csv(solve_frame(report, solution))
    payload = {
        "format_version": FORMAT_VERSION,
        "report": report.model_dump(mode="json"),
        "solution": solution.model_dump(mode="json") if solution is not None else None,
    }
    return json.dumps(payload, indent=2) + "\n"


def render_comparison(report: InstanceReport, series: pd.DataFrame, fmt: OutputFormat) -> str:
    if fmt is OutputFormat.CSV:
        if report.max_rel_pressure_dev is not None:
            summary = {
                "series": SUMMARY_ID,
                "rel_pressure_dev": report.max_rel_pressure_dev,
                "rel_density_dev": report.max_rel_density_dev,
            }
            series = pd.DataFrame([*series.to_dict("records"), summary], columns=list(series.columns))
        return to_csv(series)
    payload = {
        "format_version": FORMAT_VERSION,
        "report": report.model_dump(mode="json"),
        "series": _jsonable(series),
    }
    return json.dumps(payload, indent=2) + "\n"
