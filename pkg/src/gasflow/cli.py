"""Command-line front end: solve, batch, compare-eos and compare-scaling."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import load_settings
from .eos import density
from .errors import GasFlowError
from .models import (
    Classification,
    EdgeKind,
    EosKind,
    Feasibility,
    InstanceReport,
    OutputFormat,
    RunMode,
    SolutionDocument,
)
from .network import Interval, Network, parse_instance, perturb_instance, promote_largest_injector, with_slacks
from .oracle import SinglePipeCase, pipe_profile
from .pipeline import (
    EXIT_CODES,
    NominalOverrides,
    RunResult,
    SolveOptions,
    exit_code,
    instance_report,
    prepare,
    solution_document,
    solve_network,
)
from .reports import SUMMARY_ID, batch_frame, render_comparison, render_solve, render_table

logger = logging.getLogger(__name__)

DEFAULT_WITHDRAWAL_RANGE: Interval = (0.9, 1.1)
DEFAULT_RATIO_RANGE: Interval = (1.1, 1.4)
DEFAULT_PROFILE_SAMPLES = 51

COMPARISON_COLUMNS = [
    "series",
    "element_id",
    "fraction",
    "pressure_ideal_pa",
    "density_ideal_kg_m3",
    "pressure_cnga_pa",
    "density_cnga_kg_m3",
    "rel_pressure_dev",
    "rel_density_dev",
]


@dataclass(frozen=True)
class RunSpec:
    instance_path: Path
    mode: RunMode = RunMode.SOLVE
    eos_override: Optional[EosKind] = None
    batch_count: int = 500
    seed: int = 0
    withdrawal_range: Optional[Interval] = None
    ratio_range: Optional[Interval] = None
    nominal_overrides: NominalOverrides = field(default_factory=NominalOverrides)
    output_path: Optional[Path] = None
    format: OutputFormat = OutputFormat.JSON
    tolerance: float = 1e-8
    max_iterations: int = 2000
    dimensional: bool = False
    threads: int = 1
    promote_slack_pa: Optional[float] = None
    extra_slacks: Dict[str, float] = field(default_factory=dict)
    profile_samples: int = DEFAULT_PROFILE_SAMPLES

    def __post_init__(self) -> None:
        if self.batch_count < 1:
            raise ValueError("batch count must be at least 1")
        for name in ("withdrawal_range", "ratio_range"):
            interval = getattr(self, name)
            if interval is not None and not (0 < interval[0] <= interval[1]):
                raise ValueError(f"{name} must satisfy 0 < lo <= hi")
        if self.profile_samples < 2:
            raise ValueError("profile needs at least two samples")

    @property
    def instance_id(self) -> str:
        return self.instance_path.stem

    def options(self, seed: Optional[int] = None, **changes) -> SolveOptions:
        base = SolveOptions(
            eos=self.eos_override,
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
            seed=self.seed if seed is None else seed,
            dimensional=self.dimensional,
            nominals=self.nominal_overrides,
        )
        return replace(base, **changes)


def load_network(spec: RunSpec) -> Network:
    net = parse_instance(spec.instance_path.read_bytes())
    if spec.promote_slack_pa is not None:
        net = promote_largest_injector(net, spec.promote_slack_pa)
    if spec.extra_slacks:
        net = with_slacks(net, spec.extra_slacks)
    return net


def _instance(base: Network, spec: RunSpec, index: int) -> Tuple[str, int, Network]:
    seed = spec.seed + index
    net = base
    if spec.withdrawal_range is not None or spec.ratio_range is not None:
        net = perturb_instance(base, seed, spec.withdrawal_range, spec.ratio_range)
    return f"{spec.instance_id}#{index}", seed, net


def _failed_report(instance_id: str, exc: GasFlowError) -> InstanceReport:
    return InstanceReport(
        instance_id=instance_id,
        classification=Classification.E3_FAILED,
        feasibility=Feasibility.INDETERMINATE,
        iterations=0,
        wall_time_s=0.0,
        diagnostic=f"{type(exc).__name__}: {exc}",
    )


def _map_instances(spec: RunSpec, work) -> list:
    indices = range(spec.batch_count)
    if spec.threads <= 1:
        return [work(i) for i in indices]
    with ThreadPoolExecutor(max_workers=spec.threads) as executor:
        return list(executor.map(work, indices))


# ---------------------------------------------------------------------------
# run modes


def run_solve(spec: RunSpec) -> Tuple[InstanceReport, Optional[SolutionDocument]]:
    result = solve_network(load_network(spec), spec.options(), spec.instance_id)
    return instance_report(result), solution_document(result)


def run_batch(spec: RunSpec) -> Tuple[List[InstanceReport], pd.DataFrame]:
    base = load_network(spec)
    prepare(base, spec.options())

    def work(index: int) -> Tuple[InstanceReport, int]:
        instance_id, seed, net = _instance(base, spec, index)
        try:
            report = instance_report(solve_network(net, spec.options(seed), instance_id))
        except GasFlowError as exc:
            logger.warning("Instance %s failed before solving: %s", instance_id, exc)
            report = _failed_report(instance_id, exc)
        if (index + 1) % 50 == 0:
            logger.info("Batch progress: %d/%d", index + 1, spec.batch_count)
        return report, seed

    results = _map_instances(spec, work)
    reports = [report for report, _ in results]
    return reports, batch_frame(reports, [seed for _, seed in results])


def _relative(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b) / np.abs(b)


def _single_pipe_profile(ideal: RunResult, cnga: RunResult, samples: int) -> pd.DataFrame:
    fractions = np.linspace(0.0, 1.0, samples)
    columns: Dict[str, np.ndarray] = {}
    for label, run in (("ideal", ideal), ("cnga", cnga)):
        snet = run.scaled
        pipe = snet.edges[0]
        f_bar = float(run.outcome.solution.f[0])
        slack = snet.network.slack_ids[0]
        outward = f_bar if pipe.from_id == slack else -f_bar
        case = SinglePipeCase(p1=float(snet.slack_p_bar[0]), f=outward, beta=float(snet.beta[0]), coeffs=snet.coeffs)
        p_bar = pipe_profile(case, fractions)
        columns[f"pressure_{label}_pa"] = p_bar * snet.nominals.p0
        columns[f"density_{label}_kg_m3"] = density(p_bar, snet.coeffs) * snet.nominals.rho0
    frame = pd.DataFrame({"series": "profile", "element_id": "", "fraction": fractions, **columns})
    return frame


def _node_series(ideal: RunResult, cnga: RunResult) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "series": "node",
            "element_id": list(cnga.solution.junction_ids),
            "fraction": np.nan,
            "pressure_ideal_pa": ideal.solution.p,
            "density_ideal_kg_m3": ideal.solution.rho,
            "pressure_cnga_pa": cnga.solution.p,
            "density_cnga_kg_m3": cnga.solution.rho,
        }
    )


def _is_single_pipe(net: Network) -> bool:
    return len(net.junctions) == 2 and len(net.edges) == 1 and net.edges[0].kind is EdgeKind.PIPE


def run_compare_eos(spec: RunSpec) -> Tuple[InstanceReport, pd.DataFrame]:
    """Solve with both equations of state and report their relative deviation."""
    base = load_network(spec)
    ideal = solve_network(base, spec.options(eos=EosKind.IDEAL), f"{spec.instance_id}:ideal")
    cnga = solve_network(base, spec.options(eos=EosKind.CNGA), f"{spec.instance_id}:cnga")

    both_converged = all(
        r.outcome.classification is Classification.E1_CONVERGED_IN_DOMAIN for r in (ideal, cnga)
    )
    feasibilities = [ideal.outcome.feasibility, cnga.outcome.feasibility]
    worst = max(feasibilities, key=lambda f: EXIT_CODES[f])
    classification = cnga.outcome.classification if both_converged else next(
        r.outcome.classification
        for r in (ideal, cnga)
        if r.outcome.classification is not Classification.E1_CONVERGED_IN_DOMAIN
    )
    report = InstanceReport(
        instance_id=spec.instance_id,
        classification=classification,
        feasibility=worst if both_converged else Feasibility.INDETERMINATE,
        certificate=instance_report(cnga).certificate + instance_report(ideal).certificate,
        iterations=ideal.outcome.iterations + cnga.outcome.iterations,
        residual_final=max(
            (r for r in (instance_report(ideal).residual_final, instance_report(cnga).residual_final) if r is not None),
            default=None,
        ),
        wall_time_s=ideal.outcome.wall_time_s + cnga.outcome.wall_time_s,
        diagnostic=ideal.outcome.diagnostic or cnga.outcome.diagnostic,
    )
    if not both_converged:
        logger.warning("EoS comparison indeterminate for %s", spec.instance_id)
        return report, pd.DataFrame(columns=COMPARISON_COLUMNS)

    series = _node_series(ideal, cnga)
    if _is_single_pipe(cnga.network) and worst is Feasibility.FEASIBLE:
        series = pd.concat([_single_pipe_profile(ideal, cnga, spec.profile_samples), series], ignore_index=True)
    series["rel_pressure_dev"] = _relative(series["pressure_ideal_pa"], series["pressure_cnga_pa"])
    series["rel_density_dev"] = _relative(series["density_ideal_kg_m3"], series["density_cnga_kg_m3"])
    series = series[COMPARISON_COLUMNS]

    nodes = series[series["series"] == "node"]
    report = report.model_copy(
        update={
            "max_rel_pressure_dev": float(nodes["rel_pressure_dev"].max()),
            "max_rel_density_dev": float(nodes["rel_density_dev"].max()),
        }
    )
    return report, series


SCALING_COLUMNS = [
    "instance_id",
    "seed",
    "nondim_classification",
    "nondim_iterations",
    "nondim_converged",
    "dim_classification",
    "dim_iterations",
    "dim_converged",
    "max_rel_solution_diff",
]


def _max_relative_difference(a: RunResult, b: RunResult) -> float:
    values = [
        _relative(a.solution.p, b.solution.p),
        np.abs(a.solution.f - b.solution.f) / np.maximum(np.abs(b.solution.f), 1.0),
    ]
    return float(max(np.max(v, initial=0.0) for v in values))


def run_compare_scaling(spec: RunSpec) -> Tuple[List[InstanceReport], pd.DataFrame]:
    """Solve every generated instance in non-dimensional and dimensional mode."""
    base = load_network(spec)
    prepare(base, spec.options())

    def attempt(net: Network, options: SolveOptions, instance_id: str) -> Tuple[Optional[RunResult], InstanceReport]:
        try:
            result = solve_network(net, options, instance_id)
        except GasFlowError as exc:
            return None, _failed_report(instance_id, exc)
        return result, instance_report(result)

    def work(index: int):
        instance_id, seed, net = _instance(base, spec, index)
        nondim, nondim_report = attempt(net, spec.options(seed, dimensional=False), instance_id)
        dim, dim_report = attempt(net, spec.options(seed, dimensional=True), instance_id)
        diff = None
        if nondim_report.classification is not Classification.E3_FAILED and (
            dim_report.classification is not Classification.E3_FAILED
        ):
            diff = _max_relative_difference(dim, nondim)
        row = {
            "instance_id": instance_id,
            "seed": seed,
            "nondim_classification": nondim_report.classification.value,
            "nondim_iterations": nondim_report.iterations,
            "nondim_converged": int(nondim_report.classification is not Classification.E3_FAILED),
            "dim_classification": dim_report.classification.value,
            "dim_iterations": dim_report.iterations,
            "dim_converged": int(dim_report.classification is not Classification.E3_FAILED),
            "max_rel_solution_diff": diff,
        }
        return nondim_report, row

    results = _map_instances(spec, work)
    rows = [row for _, row in results]
    rows.append(
        {
            "instance_id": SUMMARY_ID,
            "nondim_converged": sum(r["nondim_converged"] for r in rows),
            "dim_converged": sum(r["dim_converged"] for r in rows),
        }
    )
    return [report for report, _ in results], pd.DataFrame(rows, columns=SCALING_COLUMNS)


# ---------------------------------------------------------------------------
# argument parsing


def _interval(lo: Optional[float], hi: Optional[float], default: Interval) -> Optional[Interval]:
    if lo is None and hi is None:
        return None
    return (default[0] if lo is None else lo, default[1] if hi is None else hi)


def _slack_pair(text: str) -> Tuple[str, float]:
    ident, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected ID=PRESSURE_PA, got {text!r}")
    try:
        return ident, float(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid pressure in {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    settings = load_settings()
    parser = argparse.ArgumentParser(prog="gasflow", description="Steady-state gas network flow solver")
    parser.add_argument("mode", choices=[m.value for m in RunMode])
    parser.add_argument("instance", type=Path, help="instance JSON file")
    parser.add_argument("--eos", choices=[k.value for k in EosKind], default=None)
    parser.add_argument("--n", type=int, default=500, help="number of generated instances")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--withdraw-lo", type=float, default=None)
    parser.add_argument("--withdraw-hi", type=float, default=None)
    parser.add_argument("--ratio-lo", type=float, default=None)
    parser.add_argument("--ratio-hi", type=float, default=None)
    parser.add_argument("--nominal-l0", type=float, default=None)
    parser.add_argument("--nominal-p0", type=float, default=None)
    parser.add_argument("--nominal-v0", type=float, default=None)
    parser.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
    parser.add_argument("--tol", type=float, default=settings.solver.tolerance)
    parser.add_argument("--max-iter", type=int, default=settings.solver.max_iterations)
    parser.add_argument("--dimensional", action="store_true", help="solve in SI units without scaling")
    parser.add_argument("--threads", type=int, default=settings.threads, help="worker threads, capped by GASFLOW_THREADS")
    parser.add_argument("--promote-slack", type=float, default=None, metavar="PRESSURE_PA")
    parser.add_argument("--slack", type=_slack_pair, action="append", default=[], metavar="ID=PRESSURE_PA")
    parser.add_argument("--profile-samples", type=int, default=DEFAULT_PROFILE_SAMPLES)
    parser.add_argument("--log-level", default=settings.log_level)
    return parser


def spec_from_args(args: argparse.Namespace) -> RunSpec:
    mode = RunMode(args.mode)
    fmt = args.format or (OutputFormat.JSON.value if mode is RunMode.SOLVE else OutputFormat.CSV.value)
    return RunSpec(
        instance_path=args.instance,
        mode=mode,
        eos_override=EosKind(args.eos) if args.eos else None,
        batch_count=args.n,
        seed=args.seed,
        withdrawal_range=_interval(args.withdraw_lo, args.withdraw_hi, DEFAULT_WITHDRAWAL_RANGE),
        ratio_range=_interval(args.ratio_lo, args.ratio_hi, DEFAULT_RATIO_RANGE),
        nominal_overrides=NominalOverrides(l0=args.nominal_l0, p0=args.nominal_p0, v0=args.nominal_v0),
        output_path=args.out,
        format=OutputFormat(fmt),
        tolerance=args.tol,
        max_iterations=args.max_iter,
        dimensional=args.dimensional,
        threads=max(1, min(args.threads, load_settings().threads)),
        promote_slack_pa=args.promote_slack,
        extra_slacks=dict(args.slack),
        profile_samples=args.profile_samples,
    )


def execute(spec: RunSpec) -> Tuple[str, int]:
    """Run one mode and return the rendered output with its exit code."""
    if spec.mode is RunMode.SOLVE:
        report, solution = run_solve(spec)
        return render_solve(report, solution, spec.format), EXIT_CODES[report.feasibility]
    if spec.mode is RunMode.BATCH:
        reports, frame = run_batch(spec)
        return render_table(frame, spec.format), exit_code([r.feasibility for r in reports])
    if spec.mode is RunMode.COMPARE_EOS:
        report, series = run_compare_eos(spec)
        return render_comparison(report, series, spec.format), EXIT_CODES[report.feasibility]
    reports, frame = run_compare_scaling(spec)
    return render_table(frame, spec.format), exit_code([r.feasibility for r in reports])


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        spec = spec_from_args(args)
        text, code = execute(spec)
        if spec.output_path is not None:
            spec.output_path.write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    except (GasFlowError, OSError, ValueError) as exc:
        print(f"gasflow: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
