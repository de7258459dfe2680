"""Nominal values, dimensionless groups and the scaled network."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Optional, Tuple

import numpy as np

from .eos import PotentialCoeffs, dimensionless_coeffs
from .errors import AssumptionViolation, NoPipes
from .models import Units
from .network import Edge, IncidenceMatrices, Network, incidence, validate

if TYPE_CHECKING:  # pragma: no cover
    from .solver import Solution

logger = logging.getLogger(__name__)

L0_MIN = 1000.0
L0_MAX = 10000.0
_V0_BASE_EXPONENT = -10
_V0_MAX_STEPS = 60


@dataclass(frozen=True)
class NominalValues:
    l0: float
    p0: float
    v0: float
    rho0: float
    phi0: float
    f0: float
    A0: float = 1.0

    def __post_init__(self) -> None:
        for name in ("l0", "p0", "v0", "rho0", "phi0", "f0", "A0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"nominal {name} must be positive, got {value}")

    @classmethod
    def derive(cls, l0: float, p0: float, v0: float, sound_speed: float) -> "NominalValues":
        rho0 = p0 / sound_speed**2
        phi0 = rho0 * v0
        return cls(l0=l0, p0=p0, v0=v0, rho0=rho0, phi0=phi0, f0=phi0 * 1.0)

    @classmethod
    def dimensional(cls) -> "NominalValues":
        """All nominals equal to one: the equations stay in SI units."""
        return cls(l0=1.0, p0=1.0, v0=1.0, rho0=1.0, phi0=1.0, f0=1.0)


@dataclass(frozen=True)
class DimensionlessGroups:
    mach: float
    euler: float

    def __post_init__(self) -> None:
        if not (self.mach > 0 and self.euler > 0):
            raise ValueError("Mach and Euler groups must be positive")

    @classmethod
    def from_nominals(cls, nv: NominalValues, sound_speed: float) -> "DimensionlessGroups":
        euler = nv.p0 / (nv.rho0 * sound_speed**2)
        if abs(euler - 1.0) <= 1e-12:
            euler = 1.0
        return cls(mach=nv.v0 / sound_speed, euler=euler)

    @property
    def resistance_prefactor(self) -> float:
        return self.mach**2 / self.euler


def choose_nominals(
    net: Network,
    *,
    l0: Optional[float] = None,
    p0: Optional[float] = None,
    v0: Optional[float] = None,
) -> NominalValues:
    """Nominal values from network data; keyword arguments override single choices."""
    slacks = [j for j in net.junctions if j.is_slack]
    if not slacks:
        raise ValueError("nominal pressure needs a slack junction")
    a = net.eos.sound_speed

    if l0 is None:
        if not net.pipes:
            raise NoPipes("nominal length needs at least one pipe or an explicit l0")
        lengths = np.array([p.length for p in net.pipes])
        l0 = float(np.clip(np.exp(np.mean(np.log(lengths))), L0_MIN, L0_MAX))
    if p0 is None:
        p0 = float(slacks[0].slack_pressure)
    if v0 is None:
        injections = [abs(j.injection) for j in net.junctions if not j.is_slack]
        target = float(np.median(injections)) if injections else 0.0
        rho0 = p0 / a**2
        step = 0
        while rho0 * a * 2.0 ** (_V0_BASE_EXPONENT + step) < target and step < _V0_MAX_STEPS:
            step += 1
        v0 = a * 2.0 ** (_V0_BASE_EXPONENT + step)

    nv = NominalValues.derive(l0, p0, v0, a)
    logger.info("Nominal values: l0=%.6g m, p0=%.6g Pa, v0=%.6g m/s, f0=%.6g kg/s", nv.l0, nv.p0, nv.v0, nv.f0)
    return nv


@dataclass(frozen=True)
class ScaledNetwork:
    """Dimensionless problem data. Arrays are read-only."""

    network: Network
    incidence: IncidenceMatrices
    nominals: NominalValues
    groups: DimensionlessGroups
    coeffs: PotentialCoeffs
    beta: np.ndarray
    alpha: np.ndarray
    q_bar: np.ndarray
    slack_p_bar: np.ndarray
    pipe_tail: np.ndarray
    pipe_head: np.ndarray
    np_tail: np.ndarray
    np_head: np.ndarray
    slack_index: np.ndarray
    nonslack_index: np.ndarray

    @property
    def edges(self) -> Tuple[Edge, ...]:
        return self.network.edges

    @property
    def n_junctions(self) -> int:
        return len(self.network.junctions)

    @property
    def n_edges(self) -> int:
        return len(self.network.edges)

    @property
    def n_pipes(self) -> int:
        return len(self.beta)

    @property
    def size(self) -> int:
        return self.n_junctions + self.n_edges


def _frozen(values, dtype=float) -> np.ndarray:
    array = np.asarray(values, dtype=dtype)
    array.setflags(write=False)
    return array


def nondimensionalize(net: Network, nv: NominalValues) -> ScaledNetwork:
    missing = [c.id for c in net.compressors if c.ratio is None]
    if missing:
        raise AssumptionViolation(f"compressors without ratio: {', '.join(missing)}", validate(net))

    a = net.eos.sound_speed
    groups = DimensionlessGroups.from_nominals(nv, a)
    coeffs = dimensionless_coeffs(net.eos, groups, nv.p0)
    index = net.junction_index

    prefactor = groups.resistance_prefactor
    beta = []
    for pipe in net.pipes:
        length = pipe.length / nv.l0
        diameter = pipe.diameter / nv.l0
        area = pipe.area / nv.A0
        beta.append(prefactor * pipe.friction_factor * length / (2.0 * diameter * area**2))

    non_pipe = net.non_pipe_edges
    slack_index = [i for i, j in enumerate(net.junctions) if j.is_slack]
    nonslack_index = [i for i, j in enumerate(net.junctions) if not j.is_slack]

    return ScaledNetwork(
        network=net,
        incidence=incidence(net),
        nominals=nv,
        groups=groups,
        coeffs=coeffs,
        beta=_frozen(beta),
        alpha=_frozen([e.ratio for e in non_pipe]),
        q_bar=_frozen([net.junctions[i].injection / nv.f0 for i in nonslack_index]),
        slack_p_bar=_frozen([net.junctions[i].slack_pressure / nv.p0 for i in slack_index]),
        pipe_tail=_frozen([index[p.from_id] for p in net.pipes], int),
        pipe_head=_frozen([index[p.to_id] for p in net.pipes], int),
        np_tail=_frozen([index[e.from_id] for e in non_pipe], int),
        np_head=_frozen([index[e.to_id] for e in non_pipe], int),
        slack_index=_frozen(slack_index, int),
        nonslack_index=_frozen(nonslack_index, int),
    )


def redimensionalize(sol: "Solution", nv: NominalValues) -> "Solution":
    if sol.units is Units.PHYSICAL:
        return sol
    return replace(
        sol,
        p=sol.p * nv.p0,
        f=sol.f * nv.f0,
        q_full=sol.q_full * nv.f0,
        rho=sol.rho * nv.rho0,
        units=Units.PHYSICAL,
    )
