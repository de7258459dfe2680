"""Equations of state and the potential function.

Pressures, densities and potentials here are dimensionless unless a function
says otherwise. The potential is referenced so that potential(0) == 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from .errors import NonPositivePotential, OverflowingCoefficient
from .models import EosKind

if TYPE_CHECKING:  # pragma: no cover
    from .scaling import DimensionlessGroups

ArrayLike = Union[float, np.ndarray]

PSI_PA = 6894.75729
CNGA_A1 = 344400.0
CNGA_A2 = 1.785
CNGA_A3 = 3.825

_INVERSE_RTOL = 1e-12


@dataclass(frozen=True)
class EosParams:
    kind: EosKind = EosKind.IDEAL
    temperature: float = 288.706
    specific_gravity: float = 0.6
    gas_constant: float = 518.28
    atmospheric_pressure: float = 101350.0

    def __post_init__(self) -> None:
        for name in ("temperature", "specific_gravity", "gas_constant", "atmospheric_pressure"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def sound_speed(self) -> float:
        """a = sqrt(R_g T) in m/s."""
        return math.sqrt(self.gas_constant * self.temperature)


@dataclass(frozen=True)
class PotentialCoeffs:
    b1_bar: float
    b2_bar: float

    @classmethod
    def ideal(cls) -> "PotentialCoeffs":
        return cls(1.0, 0.0)

    @property
    def is_ideal(self) -> bool:
        return self.b2_bar == 0.0


def cnga_b_coefficients(params: EosParams) -> Tuple[float, float]:
    """Dimensional CNGA constants (b1 [-], b2 [1/Pa])."""
    if params.kind is not EosKind.CNGA:
        raise ValueError(f"CNGA coefficients requested for a {params.kind.value} gas")
    try:
        numerator = CNGA_A1 * math.pow(10.0, CNGA_A2 * params.specific_gravity)
        factor = numerator / math.pow(1.8 * params.temperature, CNGA_A3)
    except OverflowError as exc:
        raise OverflowingCoefficient(
            f"CNGA coefficient overflows for specific gravity {params.specific_gravity}"
        ) from exc
    b1 = 1.0 + (params.atmospheric_pressure / PSI_PA) * factor
    b2 = factor / PSI_PA
    if not (math.isfinite(b1) and math.isfinite(b2)) or b2 <= 0:
        raise OverflowingCoefficient(f"CNGA coefficients not representable: b1={b1}, b2={b2}")
    return b1, b2


def dimensionless_coeffs(params: EosParams, groups: "DimensionlessGroups", p0: float) -> PotentialCoeffs:
    if groups.euler <= 0 or p0 <= 0:
        raise ValueError("Euler group and nominal pressure must be positive")
    if params.kind is EosKind.IDEAL:
        # (1, 0) whenever C == 1, which every derived nominal choice gives
        return PotentialCoeffs(groups.euler * 1.0, 0.0)
    b1, b2 = cnga_b_coefficients(params)
    return PotentialCoeffs(groups.euler * b1, groups.euler * p0 * b2)


def density(p_bar: ArrayLike, c: PotentialCoeffs) -> ArrayLike:
    return c.b1_bar * p_bar + c.b2_bar * p_bar * p_bar


def density_derivative(p_bar: ArrayLike, c: PotentialCoeffs) -> ArrayLike:
    return c.b1_bar + 2.0 * c.b2_bar * p_bar


def potential(p_bar: ArrayLike, c: PotentialCoeffs) -> ArrayLike:
    return c.b1_bar * p_bar * p_bar / 2.0 + c.b2_bar * p_bar * p_bar * p_bar / 3.0


def potential_derivative(p_bar: ArrayLike, c: PotentialCoeffs) -> ArrayLike:
    return density(p_bar, c)


def potential_inverse(pi_bar: float, c: PotentialCoeffs) -> float:
    """Unique positive pressure with potential(p) == pi_bar."""
    if not pi_bar > 0:
        raise NonPositivePotential(f"potential {pi_bar} has no positive pre-image")
    if c.is_ideal:
        return math.sqrt(2.0 * pi_bar / c.b1_bar)
    # ideal root is an upper bound for the cubic, the loop only guards rounding
    hi = math.sqrt(2.0 * pi_bar / c.b1_bar)
    while potential(hi, c) < pi_bar:
        hi *= 2.0
    return brentq(lambda p: potential(p, c) - pi_bar, 0.0, hi, xtol=1e-300, rtol=_INVERSE_RTOL, maxiter=500)


def in_generalized_domain(p_bar: float, c: PotentialCoeffs) -> bool:
    if p_bar > 0:
        return True
    if c.is_ideal:
        return False
    return p_bar <= -1.5 * c.b1_bar / c.b2_bar


def in_physical_domain(p_bar: float, c: PotentialCoeffs) -> bool:
    return bool(density(p_bar, c) > 0 and density_derivative(p_bar, c) > 0)
