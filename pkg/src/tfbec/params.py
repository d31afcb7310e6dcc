"""Physical parameters, validation and regime classification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

BOUNDARY_RTOL = 1e-12


class ParameterError(ValueError):
    pass


class NonPositiveCoupling(ParameterError):
    pass


class CoexistenceViolated(ParameterError):
    pass


class OrderingViolated(ParameterError):
    pass


class BoundaryCase(ParameterError):
    pass


class RegimeMismatch(ValueError):
    pass


class Regime(enum.Enum):
    TWO_DISKS = "two-disks"
    DISK_ANNULUS = "disk-annulus"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class GammaConstants:
    gamma1: float
    gamma2: float
    gamma: float


@dataclass(frozen=True)
class PhysParams:
    """Couplings g1 <= g2, interspecies g, length scale eps and rotation omega."""

    g1: float
    g2: float
    g: float
    eps: float
    omega: float = 0.0

    @property
    def gammas(self) -> GammaConstants:
        return gammas(self.g1, self.g2, self.g)

    def with_eps(self, eps: float) -> "PhysParams":
        return validate(self.g1, self.g2, self.g, eps, self.omega)

    def with_omega(self, omega: float) -> "PhysParams":
        return validate(self.g1, self.g2, self.g, self.eps, omega)


def gammas(g1: float, g2: float, g: float) -> GammaConstants:
    return GammaConstants(1.0 - g / g1, 1.0 - g / g2, 1.0 - g * g / (g1 * g2))


def validate(g1, g2, g, eps, omega=0.0) -> PhysParams:
    vals = dict(g1=g1, g2=g2, g=g, eps=eps, omega=omega)
    for name, v in vals.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")
    for name in ("g1", "g2", "g", "eps"):
        if vals[name] <= 0:
            raise NonPositiveCoupling(f"{name} must be positive, got {vals[name]}")
    if omega < 0:
        raise NonPositiveCoupling(f"omega must be non-negative, got {omega}")
    if g1 > g2:
        raise OrderingViolated(f"expected g1 <= g2, got g1={g1}, g2={g2}")
    if g * g >= g1 * g2:
        raise CoexistenceViolated(f"g^2 = {g * g} must be below g1*g2 = {g1 * g2}")
    return PhysParams(float(g1), float(g2), float(g), float(eps), float(omega))


def regime_threshold(g1: float, g2: float) -> float:
    """Interspecies coupling at which the outer component's support loses its centre."""
    return (g1 + math.sqrt(g1 * g1 + 8.0 * g1 * g2)) / 4.0


def classify(p: PhysParams) -> Regime:
    if p.g1 == p.g2:
        return Regime.SYMMETRIC
    t = regime_threshold(p.g1, p.g2)
    if abs(p.g - t) <= BOUNDARY_RTOL * t:
        raise BoundaryCase(f"g = {p.g} sits on the regime threshold {t}")
    return Regime.TWO_DISKS if p.g < t else Regime.DISK_ANNULUS
