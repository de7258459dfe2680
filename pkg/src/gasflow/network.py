"""Pipeline network data model, instance parsing, validation and incidence."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import ValidationError
from scipy import sparse

from .eos import EosParams
from .errors import InconsistentBoundary, MalformedInput, SchemaViolation
from .models import (
    CheckDocument,
    EdgeKind,
    EosDocument,
    EosKind,
    InstanceDocument,
    JunctionKind,
    PassThroughKind,
    ValidationReportDocument,
)

logger = logging.getLogger(__name__)

Interval = Tuple[float, float]


@dataclass(frozen=True)
class Junction:
    id: str
    kind: JunctionKind
    slack_pressure: Optional[float] = None
    injection: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind is JunctionKind.SLACK:
            if self.slack_pressure is None or self.injection is not None:
                raise ValueError(f"slack junction {self.id} needs a pressure and no injection")
            if not self.slack_pressure > 0:
                raise ValueError(f"slack pressure at {self.id} must be positive")
        elif self.injection is None or self.slack_pressure is not None:
            raise ValueError(f"non-slack junction {self.id} needs an injection and no pressure")

    @property
    def is_slack(self) -> bool:
        return self.kind is JunctionKind.SLACK


@dataclass(frozen=True)
class Pipe:
    id: str
    from_id: str
    to_id: str
    length: float
    diameter: float
    friction_factor: float

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.diameter > 0 and self.friction_factor > 0):
            raise ValueError(f"pipe {self.id} needs positive length, diameter and friction factor")
        if self.from_id == self.to_id:
            raise ValueError(f"pipe {self.id} is a self-loop")

    @property
    def area(self) -> float:
        return math.pi * self.diameter**2 / 4.0


@dataclass(frozen=True)
class Compressor:
    id: str
    from_id: str
    to_id: str
    ratio: Optional[float]

    def __post_init__(self) -> None:
        if self.ratio is not None and not self.ratio >= 1:
            raise ValueError(f"compressor {self.id} ratio must be >= 1")
        if self.from_id == self.to_id:
            raise ValueError(f"compressor {self.id} is a self-loop")


@dataclass(frozen=True)
class PassThrough:
    id: str
    from_id: str
    to_id: str
    kind: PassThroughKind
    ratio: float = 1.0
    open: bool = True

    def __post_init__(self) -> None:
        if not self.ratio > 0:
            raise ValueError(f"pass-through {self.id} ratio must be positive")
        if self.from_id == self.to_id:
            raise ValueError(f"pass-through {self.id} is a self-loop")


@dataclass(frozen=True)
class Edge:
    """Active edge view in incidence column order."""

    id: str
    kind: EdgeKind
    from_id: str
    to_id: str
    ratio: Optional[float] = None


@dataclass(frozen=True)
class Network:
    junctions: Tuple[Junction, ...]
    pipes: Tuple[Pipe, ...] = ()
    compressors: Tuple[Compressor, ...] = ()
    pass_throughs: Tuple[PassThrough, ...] = ()
    eos: EosParams = field(default_factory=EosParams)

    @cached_property
    def junction_index(self) -> Dict[str, int]:
        return {j.id: i for i, j in enumerate(self.junctions)}

    @property
    def slack_ids(self) -> List[str]:
        return [j.id for j in self.junctions if j.is_slack]

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        """Pipes, then compressors, then open pass-throughs; closed valves are gone."""
        active: List[Edge] = [Edge(p.id, EdgeKind.PIPE, p.from_id, p.to_id) for p in self.pipes]
        active += [Edge(c.id, EdgeKind.COMPRESSOR, c.from_id, c.to_id, c.ratio) for c in self.compressors]
        active += [
            Edge(t.id, EdgeKind.PASS_THROUGH, t.from_id, t.to_id, t.ratio) for t in self.pass_throughs if t.open
        ]
        return tuple(active)

    @property
    def non_pipe_edges(self) -> Tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.kind is not EdgeKind.PIPE)

    def with_eos_kind(self, kind: EosKind) -> "Network":
        return replace(self, eos=replace(self.eos, kind=kind))


# ---------------------------------------------------------------------------
# parsing


def _check_unique(ids: Sequence[str], what: str) -> None:
    seen: set[str] = set()
    for ident in ids:
        if ident in seen:
            raise SchemaViolation(f"duplicate {what} id {ident!r}")
        seen.add(ident)


def network_from_document(doc: InstanceDocument) -> Network:
    if not doc.nodes:
        raise SchemaViolation("instance has no junctions")
    _check_unique([n.id for n in doc.nodes], "junction")
    _check_unique(
        [e.id for e in doc.pipes] + [e.id for e in doc.compressors] + [e.id for e in doc.pass_throughs],
        "edge",
    )

    junctions: List[Junction] = []
    for node in doc.nodes:
        has_pressure = node.slack_pressure_pa is not None
        has_injection = node.injection_kg_s is not None
        if has_pressure and has_injection:
            raise InconsistentBoundary(f"junction {node.id!r} has both slack pressure and injection")
        if not (has_pressure or has_injection):
            raise SchemaViolation(f"junction {node.id!r} has neither slack pressure nor injection")
        if has_pressure:
            junctions.append(Junction(node.id, JunctionKind.SLACK, slack_pressure=node.slack_pressure_pa))
        else:
            junctions.append(Junction(node.id, JunctionKind.NON_SLACK, injection=node.injection_kg_s))

    known = {j.id for j in junctions}
    for edge in [*doc.pipes, *doc.compressors, *doc.pass_throughs]:
        for end in (edge.from_, edge.to):
            if end not in known:
                raise SchemaViolation(f"edge {edge.id!r} references unknown junction {end!r}")
        if edge.from_ == edge.to:
            raise SchemaViolation(f"edge {edge.id!r} connects junction {edge.from_!r} to itself")

    pipes = tuple(
        Pipe(p.id, p.from_, p.to, p.length_m, p.diameter_m, p.friction_factor) for p in doc.pipes
    )
    compressors = tuple(Compressor(c.id, c.from_, c.to, c.ratio) for c in doc.compressors)
    pass_throughs = tuple(
        PassThrough(
            t.id,
            t.from_,
            t.to,
            t.kind,
            ratio=t.ratio,
            open=t.open if t.open is not None else t.kind is not PassThroughKind.VALVE,
        )
        for t in doc.pass_throughs
    )
    return Network(
        junctions=tuple(junctions),
        pipes=pipes,
        compressors=compressors,
        pass_throughs=pass_throughs,
        eos=_eos_from_document(doc.eos),
    )


def _eos_from_document(doc: EosDocument) -> EosParams:
    return EosParams(
        kind=doc.kind,
        temperature=doc.temperature_k,
        specific_gravity=doc.specific_gravity,
        gas_constant=doc.gas_constant_j_per_kg_k,
        atmospheric_pressure=doc.atmospheric_pressure_pa,
    )


def parse_instance(data: Union[bytes, str]) -> Network:
    try:
        text = data.decode("utf-8") if isinstance(data, bytes) else data
        raw = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"instance is not valid JSON: {exc}") from exc
    try:
        doc = InstanceDocument.model_validate(raw)
    except ValidationError as exc:
        raise SchemaViolation(f"instance does not match schema: {exc}") from exc
    net = network_from_document(doc)
    logger.info(
        "Parsed instance: %d junctions, %d pipes, %d compressors, %d pass-throughs",
        len(net.junctions),
        len(net.pipes),
        len(net.compressors),
        len(net.pass_throughs),
    )
    return net


# ---------------------------------------------------------------------------
# validation

ASSUMPTIONS = ("A1", "A2", "A3", "A4", "connectivity")


@dataclass(frozen=True)
class AssumptionCheck:
    passed: bool
    offenders: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    checks: Mapping[str, AssumptionCheck]

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def failures(self) -> Dict[str, Tuple[str, ...]]:
        return {name: check.offenders for name, check in self.checks.items() if not check.passed}

    def to_document(self) -> ValidationReportDocument:
        return ValidationReportDocument(
            ok=self.ok,
            checks={
                name: CheckDocument(passed=check.passed, offenders=list(check.offenders))
                for name, check in self.checks.items()
            },
        )


def non_pipe_graph(net: Network) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(j.id for j in net.junctions)
    for edge in net.non_pipe_edges:
        graph.add_edge(edge.from_id, edge.to_id, key=edge.id)
    return graph


def active_graph(net: Network) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(j.id for j in net.junctions)
    for edge in net.edges:
        graph.add_edge(edge.from_id, edge.to_id, key=edge.id)
    return graph


def non_pipe_cycle_components(net: Network) -> List[Tuple[str, ...]]:
    """Edge ids of each non-pipe component that contains a cycle."""
    graph = non_pipe_graph(net)
    cyclic: List[Tuple[str, ...]] = []
    for nodes in nx.connected_components(graph):
        sub = graph.subgraph(nodes)
        if sub.number_of_edges() >= sub.number_of_nodes():
            cyclic.append(tuple(sorted(key for _, _, key in sub.edges(keys=True))))
    return cyclic


def slack_groups(net: Network) -> List[Tuple[str, ...]]:
    """Slack ids sharing a non-pipe component, for components with two or more slacks."""
    graph = non_pipe_graph(net)
    groups: List[Tuple[str, ...]] = []
    for nodes in nx.connected_components(graph):
        members = tuple(j for j in net.slack_ids if j in nodes)
        if len(members) >= 2:
            groups.append(members)
    return groups


def validate(net: Network) -> ValidationReport:
    slacks = net.slack_ids
    checks: Dict[str, AssumptionCheck] = {"A1": AssumptionCheck(bool(slacks))}

    missing = tuple(c.id for c in net.compressors if c.ratio is None)
    checks["A2"] = AssumptionCheck(not missing, missing)

    joined = tuple(j for group in slack_groups(net) for j in group)
    checks["A3"] = AssumptionCheck(not joined, joined)

    cyclic = tuple(e for component in non_pipe_cycle_components(net) for e in component)
    checks["A4"] = AssumptionCheck(not cyclic, cyclic)

    graph = active_graph(net)
    orphaned: List[str] = []
    for nodes in nx.connected_components(graph):
        if not any(j in nodes for j in slacks):
            orphaned.extend(j.id for j in net.junctions if j.id in nodes)
    checks["connectivity"] = AssumptionCheck(not orphaned, tuple(orphaned))

    report = ValidationReport(checks)
    for name, offenders in report.failures().items():
        logger.info("Assumption %s fails for %s", name, ", ".join(offenders) or "<network>")
    return report


# ---------------------------------------------------------------------------
# incidence


@dataclass(frozen=True)
class IncidenceMatrices:
    full: sparse.csr_matrix
    reduced: sparse.csr_matrix
    row_order: Tuple[str, ...]
    reduced_row_order: Tuple[str, ...]
    column_order: Tuple[str, ...]


def incidence(net: Network) -> IncidenceMatrices:
    index = net.junction_index
    rows: List[int] = []
    cols: List[int] = []
    vals: List[float] = []
    for k, edge in enumerate(net.edges):
        rows += [index[edge.from_id], index[edge.to_id]]
        cols += [k, k]
        vals += [-1.0, 1.0]
    shape = (len(net.junctions), len(net.edges))
    full = sparse.csr_matrix((vals, (rows, cols)), shape=shape)
    keep = [i for i, j in enumerate(net.junctions) if not j.is_slack]
    reduced = full[keep, :].tocsr()
    return IncidenceMatrices(
        full=full,
        reduced=reduced,
        row_order=tuple(j.id for j in net.junctions),
        reduced_row_order=tuple(net.junctions[i].id for i in keep),
        column_order=tuple(e.id for e in net.edges),
    )


# ---------------------------------------------------------------------------
# instance generation


def _element_rng(seed: int, element: str) -> np.random.Generator:
    key = int.from_bytes(hashlib.sha256(element.encode("utf-8")).digest()[:8], "little")
    stream = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, key])
    return np.random.Generator(np.random.PCG64(stream))


def _check_interval(interval: Interval, name: str) -> None:
    lo, hi = interval
    if not (0 < lo <= hi):
        raise ValueError(f"{name} must satisfy 0 < lo <= hi, got {interval}")


def perturb_instance(
    net: Network,
    seed: int,
    withdrawal_range: Optional[Interval] = (0.9, 1.1),
    ratio_range: Optional[Interval] = (1.1, 1.4),
) -> Network:
    """Scale non-slack injections and redraw compressor ratios.

    Every element draws from its own PCG64 stream keyed by (seed, element id),
    so the result does not depend on element order.
    """
    junctions = net.junctions
    if withdrawal_range is not None:
        _check_interval(withdrawal_range, "withdrawal_range")
        lo, hi = withdrawal_range
        junctions = tuple(
            j
            if j.is_slack
            else replace(j, injection=float(j.injection * _element_rng(seed, f"junction:{j.id}").uniform(lo, hi)))
            for j in net.junctions
        )
    compressors = net.compressors
    if ratio_range is not None:
        _check_interval(ratio_range, "ratio_range")
        lo, hi = ratio_range
        compressors = tuple(
            replace(c, ratio=float(_element_rng(seed, f"compressor:{c.id}").uniform(lo, hi)))
            for c in net.compressors
        )
    return replace(net, junctions=junctions, compressors=compressors)


def with_slacks(net: Network, pressures: Mapping[str, float]) -> Network:
    unknown = set(pressures) - set(net.junction_index)
    if unknown:
        raise ValueError(f"unknown junctions {sorted(unknown)}")
    junctions = tuple(
        Junction(j.id, JunctionKind.SLACK, slack_pressure=pressures[j.id]) if j.id in pressures else j
        for j in net.junctions
    )
    return replace(net, junctions=junctions)


def promote_largest_injector(net: Network, pressure_pa: float = 5e6) -> Network:
    candidates = [j for j in net.junctions if not j.is_slack]
    if not candidates:
        raise ValueError("no non-slack junction to promote")
    largest = max(candidates, key=lambda j: j.injection)
    return with_slacks(net, {largest.id: pressure_pa})
