"""End-to-end solve: validate, scale, iterate, correct and convert back to SI."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

from .errors import AssumptionViolation
from .models import (
    CertificateDocument,
    Classification,
    EdgeResult,
    EosKind,
    Feasibility,
    InstanceReport,
    NodeResult,
    SolutionDocument,
)
from .network import Network, validate
from .scaling import NominalValues, ScaledNetwork, choose_nominals, nondimensionalize, redimensionalize
from .solver import Outcome, Solution, SolverConfig, pressure_correction_rerun, solve

logger = logging.getLogger(__name__)

BLOCKING_ASSUMPTIONS = ("A1", "A2")

EXIT_CODES = {
    Feasibility.FEASIBLE: 0,
    Feasibility.INFEASIBLE: 2,
    Feasibility.INDETERMINATE: 3,
}


@dataclass(frozen=True)
class NominalOverrides:
    l0: Optional[float] = None
    p0: Optional[float] = None
    v0: Optional[float] = None


@dataclass(frozen=True)
class SolveOptions:
    eos: Optional[EosKind] = None
    tolerance: float = 1e-8
    max_iterations: int = 2000
    seed: int = 0
    dimensional: bool = False
    nominals: NominalOverrides = field(default_factory=NominalOverrides)

    def config(self) -> SolverConfig:
        return SolverConfig(tolerance=self.tolerance, max_iterations=self.max_iterations, seed=self.seed)


@dataclass(frozen=True)
class RunResult:
    instance_id: str
    scaled: ScaledNetwork
    outcome: Outcome
    solution: Optional[Solution]

    @property
    def network(self) -> Network:
        return self.scaled.network

    @property
    def nominals(self) -> NominalValues:
        return self.scaled.nominals


def prepare(net: Network, options: SolveOptions) -> ScaledNetwork:
    """Validate and scale; A1/A2 failures stop here, the rest reach the solver."""
    if options.eos is not None:
        net = net.with_eos_kind(options.eos)
    report = validate(net)
    failures = report.failures()
    blocking = [name for name in BLOCKING_ASSUMPTIONS if name in failures]
    if blocking:
        detail = "; ".join(f"{name}: {', '.join(failures[name]) or 'network'}" for name in blocking)
        raise AssumptionViolation(f"instance violates {detail}", report)
    for name, offenders in failures.items():
        logger.warning("Assumption %s fails for %s; solving anyway", name, ", ".join(offenders))

    if options.dimensional:
        nv = NominalValues.dimensional()
    else:
        overrides = options.nominals
        nv = choose_nominals(net, l0=overrides.l0, p0=overrides.p0, v0=overrides.v0)
    return nondimensionalize(net, nv)


def solve_network(net: Network, options: SolveOptions, instance_id: str = "instance") -> RunResult:
    snet = prepare(net, options)
    cfg = options.config()
    outcome = solve(snet, cfg)
    if outcome.classification is Classification.E2_CONVERGED_OUT_OF_DOMAIN:
        outcome = pressure_correction_rerun(snet, cfg, outcome)
    solution = redimensionalize(outcome.solution, snet.nominals) if outcome.solution is not None else None
    logger.info("Instance %s: %s (%s)", instance_id, outcome.classification.value, outcome.feasibility.value)
    return RunResult(instance_id=instance_id, scaled=snet, outcome=outcome, solution=solution)


def instance_report(
    result: RunResult,
    *,
    max_rel_pressure_dev: Optional[float] = None,
    max_rel_density_dev: Optional[float] = None,
) -> InstanceReport:
    outcome = result.outcome
    return InstanceReport(
        instance_id=result.instance_id,
        classification=outcome.classification,
        feasibility=outcome.feasibility,
        certificate=[CertificateDocument(element_id=c.element_id, reason=c.reason) for c in outcome.certificate],
        iterations=outcome.iterations,
        residual_final=outcome.residual_final if math.isfinite(outcome.residual_final) else None,
        wall_time_s=outcome.wall_time_s,
        max_rel_pressure_dev=max_rel_pressure_dev,
        max_rel_density_dev=max_rel_density_dev,
        diagnostic=outcome.diagnostic,
    )


def solution_document(result: RunResult) -> Optional[SolutionDocument]:
    sol = result.solution
    if sol is None:
        return None
    nodes = [
        NodeResult(
            id=junction_id,
            pressure_pa=float(sol.p[i]),
            injection_kg_s=float(sol.q_full[i]),
            density_kg_m3=float(sol.rho[i]),
        )
        for i, junction_id in enumerate(sol.junction_ids)
    ]
    edges = [
        EdgeResult(id=edge_id, kind=kind, mass_flow_kg_s=float(sol.f[k]))
        for k, (edge_id, kind) in enumerate(zip(sol.edge_ids, sol.edge_kinds))
    ]
    return SolutionDocument(
        eos=result.network.eos.kind,
        classification=result.outcome.classification,
        feasibility=result.outcome.feasibility,
        nodes=nodes,
        edges=edges,
    )


def exit_code(feasibilities: List[Feasibility]) -> int:
    """Worst verdict over a run: 0 all feasible, 2 some infeasible, 3 some indeterminate."""
    return max((EXIT_CODES[f] for f in feasibilities), default=0)
