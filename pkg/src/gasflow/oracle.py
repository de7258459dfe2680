"""Reference solutions used to check the Newton solver.

All quantities are dimensionless. The single-pipe formulas come straight from
the integrated pipe equation; ``tree_solve`` inverts the balance equations on a
tree by accumulation and then propagates pressures outward from the slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Union

import networkx as nx
import numpy as np

from .eos import PotentialCoeffs, density, potential, potential_inverse
from .errors import MultipleSlacks, NotATree
from .models import EdgeKind, Units
from .network import active_graph
from .scaling import ScaledNetwork
from .solver import Solution


@dataclass(frozen=True)
class SinglePipeCase:
    p1: float
    f: float
    beta: float
    coeffs: PotentialCoeffs

    def __post_init__(self) -> None:
        if not self.p1 > 0:
            raise ValueError("slack-end pressure must be positive")
        if not self.beta > 0:
            raise ValueError("pipe resistance must be positive")

    @property
    def potential_drop(self) -> float:
        return self.beta * self.f * abs(self.f)


@dataclass(frozen=True)
class Infeasible:
    reason: str
    element_id: Optional[str] = None


def single_pipe_ideal(case: SinglePipeCase) -> Union[float, Infeasible]:
    if not case.coeffs.is_ideal:
        raise ValueError("closed form needs ideal-gas coefficients")
    radicand = case.p1**2 - 2.0 * case.potential_drop / case.coeffs.b1_bar
    if not radicand > 0:
        return Infeasible(f"squared outlet pressure {radicand:.6g} is not positive")
    return float(np.sqrt(radicand))


def single_pipe_cnga(case: SinglePipeCase) -> Union[float, Infeasible]:
    if not case.coeffs.b2_bar > 0:
        raise ValueError("CNGA oracle needs b2 > 0")
    remaining = float(potential(case.p1, case.coeffs)) - case.potential_drop
    if not remaining > 0:
        return Infeasible(f"outlet potential {remaining:.6g} is not positive")
    return potential_inverse(remaining, case.coeffs)


def pipe_profile(case: SinglePipeCase, fractions: Iterable[float]) -> np.ndarray:
    """Pressure at fractional distances from the slack end of a single pipe."""
    start = float(potential(case.p1, case.coeffs))
    return np.array(
        [potential_inverse(start - x * case.potential_drop, case.coeffs) for x in fractions],
        dtype=float,
    )


def tree_solve(snet: ScaledNetwork) -> Union[Solution, Infeasible]:
    net = snet.network
    slacks = net.slack_ids
    if len(slacks) != 1:
        raise MultipleSlacks(f"tree substitution needs exactly one slack, found {len(slacks)}")
    graph = active_graph(net)
    if not nx.is_tree(graph):
        raise NotATree("active edges do not form a spanning tree")

    root = slacks[0]
    index = net.junction_index
    edge_index = {e.id: k for k, e in enumerate(net.edges)}
    order = list(nx.dfs_preorder_nodes(graph, root))
    parent: Dict[str, str] = nx.dfs_predecessors(graph, root)
    parent_edge: Dict[str, str] = {}
    for u, v, key in graph.edges(keys=True):
        child = v if parent.get(v) == u else u
        parent_edge[child] = key

    q = np.zeros(snet.n_junctions)
    q[snet.nonslack_index] = snet.q_bar
    subtree = q.copy()
    for node in reversed(order[1:]):
        subtree[index[parent[node]]] += subtree[index[node]]

    f = np.zeros(snet.n_edges)
    for node in order[1:]:
        edge = net.edges[edge_index[parent_edge[node]]]
        carried = subtree[index[node]]
        f[edge_index[edge.id]] = -carried if edge.from_id == parent[node] else carried

    p = np.zeros(snet.n_junctions)
    p[index[root]] = snet.slack_p_bar[0]
    for node in order[1:]:
        k = edge_index[parent_edge[node]]
        edge = net.edges[k]
        upstream = p[index[parent[node]]]
        outward = edge.from_id == parent[node]
        if edge.kind is EdgeKind.PIPE:
            drop = snet.beta[k] * f[k] * abs(f[k])
            pi = float(potential(upstream, snet.coeffs)) + (-drop if outward else drop)
            if not pi > 0:
                return Infeasible(f"potential {pi:.6g} is not positive", node)
            p[index[node]] = potential_inverse(pi, snet.coeffs)
        else:
            alpha = snet.alpha[k - snet.n_pipes]
            p[index[node]] = upstream * alpha if outward else upstream / alpha

    return Solution(
        junction_ids=tuple(j.id for j in net.junctions),
        edge_ids=tuple(e.id for e in net.edges),
        edge_kinds=tuple(e.kind for e in net.edges),
        p=p,
        f=f,
        q_full=np.asarray(-(snet.incidence.full @ f), dtype=float),
        rho=np.asarray(density(p, snet.coeffs), dtype=float),
        units=Units.DIMENSIONLESS,
    )


def balance_check(sol: Solution) -> float:
    q = np.asarray(sol.q_full, dtype=float)
    scale = max(1.0, float(np.max(np.abs(q)))) if q.size else 1.0
    return float(abs(q.sum())) / scale
