"""Newton-Raphson solver for the dimensionless steady-state network equations.

Unknowns are ordered ``[p (one per junction), f (one per active edge)]``.
Equation rows are ordered pipes, non-pipe edges, non-slack junction balances
and finally one identity row per slack.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .eos import density, in_generalized_domain, in_physical_domain, potential, potential_derivative, potential_inverse
from .errors import SingularJacobian
from .models import CertificateReason, Classification, EdgeKind, Feasibility, Units
from .network import active_graph, non_pipe_graph
from .scaling import ScaledNetwork

logger = logging.getLogger(__name__)

INITIAL_LOW = 0.5
INITIAL_HIGH = 1.5


class InitialPolicy(str, Enum):
    RANDOM_POSITIVE = "random_positive"
    WARM_START = "warm_start"


@dataclass(frozen=True)
class SolverState:
    p_bar: np.ndarray
    f_bar: np.ndarray
    iteration: int = 0


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 2000
    seed: int = 0
    initial_policy: InitialPolicy = InitialPolicy.RANDOM_POSITIVE
    warm_start: Optional[SolverState] = None

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.initial_policy is InitialPolicy.WARM_START and self.warm_start is None:
            raise ValueError("warm start policy needs a state")

    def warm(self, state: SolverState) -> "SolverConfig":
        return replace(self, initial_policy=InitialPolicy.WARM_START, warm_start=state)


@dataclass(frozen=True)
class Residuals:
    pipe: np.ndarray
    comp: np.ndarray
    node: np.ndarray

    @property
    def norm_inf(self) -> float:
        vector = self.as_vector()
        return float(np.max(np.abs(vector))) if vector.size else 0.0

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.pipe, self.comp, self.node])


@dataclass(frozen=True)
class Solution:
    junction_ids: Tuple[str, ...]
    edge_ids: Tuple[str, ...]
    edge_kinds: Tuple[EdgeKind, ...]
    p: np.ndarray
    f: np.ndarray
    q_full: np.ndarray
    rho: np.ndarray
    units: Units = Units.DIMENSIONLESS

    def pressure(self, junction_id: str) -> float:
        return float(self.p[self.junction_ids.index(junction_id)])

    def flow(self, edge_id: str) -> float:
        return float(self.f[self.edge_ids.index(edge_id)])

    def injection(self, junction_id: str) -> float:
        return float(self.q_full[self.junction_ids.index(junction_id)])


@dataclass(frozen=True)
class CertificateEntry:
    element_id: str
    reason: CertificateReason


@dataclass(frozen=True)
class Outcome:
    classification: Classification
    feasibility: Feasibility
    solution: Optional[Solution] = None
    certificate: Tuple[CertificateEntry, ...] = ()
    iterations: int = 0
    residual_history: Tuple[float, ...] = field(default_factory=tuple)
    wall_time_s: float = 0.0
    diagnostic: Optional[str] = None
    state: Optional[SolverState] = None

    @property
    def converged(self) -> bool:
        return self.classification is not Classification.E3_FAILED

    @property
    def residual_final(self) -> float:
        return self.residual_history[-1] if self.residual_history else float("nan")


# ---------------------------------------------------------------------------
# equations


def initial_guess(snet: ScaledNetwork, cfg: SolverConfig) -> SolverState:
    if cfg.initial_policy is InitialPolicy.WARM_START:
        warm = cfg.warm_start
        if warm.p_bar.shape != (snet.n_junctions,) or warm.f_bar.shape != (snet.n_edges,):
            raise ValueError("warm start state does not match the network dimensions")
        p = np.array(warm.p_bar, dtype=float)
        f = np.array(warm.f_bar, dtype=float)
    else:
        rng = np.random.default_rng(cfg.seed)
        p = rng.uniform(INITIAL_LOW, INITIAL_HIGH, snet.n_junctions)
        f = rng.uniform(INITIAL_LOW, INITIAL_HIGH, snet.n_edges)
    p[snet.slack_index] = snet.slack_p_bar
    return SolverState(p, f, 0)


def residuals(snet: ScaledNetwork, state: SolverState) -> Residuals:
    p, f = state.p_bar, state.f_bar
    pi = potential(p, snet.coeffs)
    f_pipe = f[: snet.n_pipes]
    pipe = pi[snet.pipe_tail] - pi[snet.pipe_head] - snet.beta * f_pipe * np.abs(f_pipe)
    comp = p[snet.np_head] - snet.alpha * p[snet.np_tail]
    node = snet.incidence.reduced @ f + snet.q_bar
    return Residuals(pipe=pipe, comp=comp, node=np.asarray(node, dtype=float))


def jacobian(snet: ScaledNetwork, state: SolverState) -> sparse.coo_matrix:
    p, f = state.p_bar, state.f_bar
    n_p = snet.n_pipes
    n_j = snet.n_junctions
    n_e = snet.n_edges
    n_np = n_e - n_p
    dpi = potential_derivative(p, snet.coeffs)

    pipe_rows = np.arange(n_p)
    np_rows = n_p + np.arange(n_np)
    rows = [pipe_rows, pipe_rows, pipe_rows, np_rows, np_rows]
    cols = [snet.pipe_tail, snet.pipe_head, n_j + pipe_rows, snet.np_head, snet.np_tail]
    vals = [
        dpi[snet.pipe_tail],
        -dpi[snet.pipe_head],
        -2.0 * snet.beta * np.abs(f[:n_p]),
        np.ones(n_np),
        -snet.alpha,
    ]

    reduced = snet.incidence.reduced.tocoo()
    rows.append(n_e + reduced.row)
    cols.append(n_j + reduced.col)
    vals.append(reduced.data)

    n_slack = len(snet.slack_index)
    rows.append(n_e + len(snet.nonslack_index) + np.arange(n_slack))
    cols.append(snet.slack_index)
    vals.append(np.ones(n_slack))

    size = snet.size
    return sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )


def _solve_linear(matrix: sparse.csc_matrix, rhs: np.ndarray) -> np.ndarray:
    size = matrix.shape[0]
    try:
        lu = splu(matrix)
    except RuntimeError as exc:
        raise SingularJacobian(f"sparse LU factorization failed: {exc}") from exc
    pivots = np.abs(lu.U.diagonal())
    threshold = max(float(pivots.max(initial=0.0)), 1.0) * size * np.finfo(float).eps
    deficit = int(np.count_nonzero(~(pivots > threshold)))
    if deficit:
        raise SingularJacobian("Jacobian is numerically singular", rank=size - deficit, size=size)
    delta = lu.solve(rhs)
    if not np.all(np.isfinite(delta)):
        raise SingularJacobian("Newton increment is not finite")
    return delta


def newton_step(snet: ScaledNetwork, state: SolverState) -> Tuple[SolverState, float]:
    """One full, undamped Newton update; returns the new state and its residual norm."""
    r = residuals(snet, state).as_vector()
    rhs = np.concatenate([-r, np.zeros(len(snet.slack_index))])
    delta = _solve_linear(jacobian(snet, state).tocsc(), rhs)

    n_j = snet.n_junctions
    p = state.p_bar + delta[:n_j]
    f = state.f_bar + delta[n_j:]
    p[snet.slack_index] = snet.slack_p_bar
    new_state = SolverState(p, f, state.iteration + 1)
    return new_state, residuals(snet, new_state).norm_inf


# ---------------------------------------------------------------------------
# structural checks


def structural_deficit(snet: ScaledNetwork) -> Tuple[int, List[str]]:
    """Rank deficit forced by the topology alone, with a reason per contribution."""
    net = snet.network
    deficit = 0
    reasons: List[str] = []

    graph = non_pipe_graph(net)
    slacks = set(net.slack_ids)
    for nodes in nx.connected_components(graph):
        sub = graph.subgraph(nodes)
        cycles = sub.number_of_edges() - sub.number_of_nodes() + 1
        if cycles > 0:
            deficit += cycles
            edges = sorted(key for _, _, key in sub.edges(keys=True))
            reasons.append(f"cycle of non-pipe edges {', '.join(edges)}")
        joined = sorted(nodes & slacks)
        if len(joined) > 1:
            deficit += len(joined) - 1
            reasons.append(f"slacks {', '.join(joined)} joined without pipes")

    for nodes in nx.connected_components(active_graph(net)):
        if not nodes & slacks:
            deficit += 1
            reasons.append(f"component without slack containing {sorted(nodes)[0]}")
    return deficit, reasons


# ---------------------------------------------------------------------------
# iteration and classification


def _failed(
    diagnostic: str,
    state: Optional[SolverState],
    history: List[float],
    elapsed: float,
) -> Outcome:
    logger.warning("Newton iteration failed: %s", diagnostic)
    return Outcome(
        classification=Classification.E3_FAILED,
        feasibility=Feasibility.INDETERMINATE,
        iterations=state.iteration if state is not None else 0,
        residual_history=tuple(history),
        wall_time_s=elapsed,
        diagnostic=diagnostic,
        state=state,
    )


def solve(snet: ScaledNetwork, cfg: SolverConfig) -> Outcome:
    deficit, reasons = structural_deficit(snet)
    if deficit:
        error = SingularJacobian("; ".join(reasons), rank=max(snet.size - deficit, 0), size=snet.size)
        return _failed(f"SingularJacobian: {error}", None, [], 0.0)

    state = initial_guess(snet, cfg)
    history: List[float] = []
    diagnostic: Optional[str] = None
    start = time.perf_counter()
    with np.errstate(all="ignore"):
        norm = residuals(snet, state).norm_inf
        history.append(norm)
        while not norm <= cfg.tolerance:
            if not np.isfinite(norm):
                diagnostic = f"iterates diverged at iteration {state.iteration}"
                break
            if state.iteration >= cfg.max_iterations:
                diagnostic = f"iteration cap of {cfg.max_iterations} reached"
                break
            try:
                state, norm = newton_step(snet, state)
            except SingularJacobian as exc:
                diagnostic = f"SingularJacobian: {exc}"
                break
            history.append(norm)
            logger.debug("Residual at iteration %d: %.3e", state.iteration, norm)
    elapsed = time.perf_counter() - start

    if diagnostic is not None:
        return _failed(diagnostic, state, history, elapsed)
    outcome = _classify(snet, cfg, state, history, elapsed)
    logger.info(
        "Converged in %d iterations: %s, %s",
        outcome.iterations,
        outcome.classification.value,
        outcome.feasibility.value,
    )
    return outcome


def _recovered_pressures(p: np.ndarray, snet: ScaledNetwork) -> np.ndarray:
    recovered = p.copy()
    for i, value in enumerate(p):
        if value <= 0:
            pi = float(potential(value, snet.coeffs))
            if pi > 0:
                recovered[i] = potential_inverse(pi, snet.coeffs)
    return recovered


def build_solution(snet: ScaledNetwork, state: SolverState) -> Solution:
    net = snet.network
    q_full = -(snet.incidence.full @ state.f_bar)
    return Solution(
        junction_ids=tuple(j.id for j in net.junctions),
        edge_ids=tuple(e.id for e in net.edges),
        edge_kinds=tuple(e.kind for e in net.edges),
        p=np.array(state.p_bar, dtype=float),
        f=np.array(state.f_bar, dtype=float),
        q_full=np.asarray(q_full, dtype=float),
        rho=np.asarray(density(state.p_bar, snet.coeffs), dtype=float),
        units=Units.DIMENSIONLESS,
    )


def _classify(
    snet: ScaledNetwork,
    cfg: SolverConfig,
    state: SolverState,
    history: List[float],
    elapsed: float,
) -> Outcome:
    net = snet.network
    c = snet.coeffs
    p = state.p_bar
    solution = build_solution(snet, state)

    in_domain = all(in_generalized_domain(float(value), c) for value in p)
    recovered = _recovered_pressures(p, snet)
    mismatch = np.abs(recovered[snet.np_head] - snet.alpha * recovered[snet.np_tail])
    compatible = bool(np.all(mismatch <= cfg.tolerance))

    common = dict(
        solution=solution,
        iterations=state.iteration,
        residual_history=tuple(history),
        wall_time_s=elapsed,
        state=state,
    )
    if not (in_domain and compatible):
        return Outcome(
            classification=Classification.E2_CONVERGED_OUT_OF_DOMAIN,
            feasibility=Feasibility.INDETERMINATE,
            **common,
        )

    certificate: List[CertificateEntry] = [
        CertificateEntry(j.id, CertificateReason.NEGATIVE_POTENTIAL)
        for j, value in zip(net.junctions, p)
        if not in_physical_domain(float(value), c)
    ]
    certificate += [
        CertificateEntry(e.id, CertificateReason.NEGATIVE_COMPRESSOR_FLOW)
        for e, flow in zip(net.edges, state.f_bar)
        if e.kind is EdgeKind.COMPRESSOR and flow < -cfg.tolerance
    ]
    return Outcome(
        classification=Classification.E1_CONVERGED_IN_DOMAIN,
        feasibility=Feasibility.INFEASIBLE if certificate else Feasibility.FEASIBLE,
        certificate=tuple(certificate),
        **common,
    )


# ---------------------------------------------------------------------------
# pressure correction


def corrected_state(snet: ScaledNetwork, state: SolverState) -> SolverState:
    p = np.abs(state.p_bar)
    p[snet.slack_index] = snet.slack_p_bar
    return SolverState(p, np.array(state.f_bar, dtype=float), 0)


def pressure_correction_rerun(snet: ScaledNetwork, cfg: SolverConfig, outcome: Outcome) -> Outcome:
    """Warm-started re-solve from the converged state with negative pressures flipped."""
    if not outcome.converged or outcome.state is None or not np.any(outcome.state.p_bar < 0):
        return outcome

    flipped = int(np.count_nonzero(outcome.state.p_bar < 0))
    logger.info("Re-solving with %d negative pressures flipped", flipped)
    rerun = solve(snet, cfg.warm(corrected_state(snet, outcome.state)))
    if rerun.converged and rerun.solution is not None and np.all(rerun.solution.p > 0):
        return replace(
            rerun,
            iterations=outcome.iterations + rerun.iterations,
            residual_history=outcome.residual_history + rerun.residual_history,
            wall_time_s=outcome.wall_time_s + rerun.wall_time_s,
        )
    logger.warning("Pressure-correction rerun not adopted (%s)", rerun.classification.value)
    return outcome
