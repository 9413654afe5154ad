"""Dimensionless characterization of the flow channel.

Flow regime (Reynolds number), relevance of diffusion (dispersion factor),
relevance of gravity, and the parameter values at which each regime changes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

from .errors import ConfigError
from .params import (
    ML_PER_MIN,
    TestbedConfig,
    effective_velocity,
    max_velocity,
)

G = 9.81  # m/s^2
RE_CRITICAL = 2100.0
DISPERSION_CRITICAL = 1.0
# Characteristic length over which the flow speed varies, as a fraction of a.
CHARACTERISTIC_FRACTION = 0.1


class FlowRegime(str, enum.Enum):
    LAMINAR = "laminar"
    TURBULENT = "turbulent"


class TransportRegime(str, enum.Enum):
    FLOW_DOMINATED = "flow_dominated"
    DIFFUSION_DOMINATED = "diffusion_dominated"


def reynolds(cfg: TestbedConfig) -> float:
    return cfg.a * max_velocity(cfg) / cfg.nu


def stokes_friction(cfg: TestbedConfig) -> float:
    """Stokes drag coefficient 6 pi eta Rp.

    Not used downstream: the config carries an explicit ``zeta`` which is
    what :func:`diffusion_coefficient` and :func:`gravity_report` read.
    """
    return 6.0 * math.pi * cfg.eta * cfg.Rp


def diffusion_coefficient(cfg: TestbedConfig) -> float:
    if cfg.zeta == 0:
        raise ConfigError("friction coefficient zeta is zero")
    return cfg.kT / cfg.zeta


def _dispersion(d: float, D: float, a: float, u: float) -> float:
    return d * D / ((CHARACTERISTIC_FRACTION * a) ** 2 * u)


def dispersion_factor(cfg: TestbedConfig, d: float | None = None) -> float:
    d = cfg.d if d is None else d
    if d <= 0:
        raise ConfigError(f"distance must be positive, got {d}")
    u = effective_velocity(cfg)
    if u == 0:
        return math.inf
    return _dispersion(d, diffusion_coefficient(cfg), cfg.a, u)


@dataclass(frozen=True)
class GravityReport:
    force: float  # N
    drift: float  # m/s
    onset: float  # s until the drift covers the critical displacement
    critical_mass: float  # kg for which the onset equals the critical time


def gravity_report(
    cfg: TestbedConfig,
    critical_displacement: float | None = None,
    critical_time: float = 60.0,
) -> GravityReport:
    if critical_displacement is None:
        critical_displacement = CHARACTERISTIC_FRACTION * cfg.a
    if critical_displacement <= 0 or critical_time <= 0:
        raise ConfigError("critical displacement and time must be positive")
    force = cfg.m_p * G
    drift = force / cfg.zeta
    onset = critical_displacement / drift if drift > 0 else math.inf
    critical_mass = (critical_displacement / critical_time) * cfg.zeta / G
    return GravityReport(force, drift, onset, critical_mass)


@dataclass(frozen=True)
class RegimeReport:
    reynolds: float
    flow_regime: FlowRegime
    dispersion_factor: float
    transport_regime: TransportRegime
    diffusion_coeff: float
    gravity_force: float
    gravity_drift: float
    gravity_onset_time: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["flow_regime"] = self.flow_regime.value
        out["transport_regime"] = self.transport_regime.value
        return out


def regime_report(cfg: TestbedConfig, d: float | None = None) -> RegimeReport:
    re = reynolds(cfg)
    ad = dispersion_factor(cfg, d)
    grav = gravity_report(cfg)
    return RegimeReport(
        reynolds=re,
        flow_regime=FlowRegime.LAMINAR if re < RE_CRITICAL else FlowRegime.TURBULENT,
        dispersion_factor=ad,
        transport_regime=(
            TransportRegime.FLOW_DOMINATED
            if ad < DISPERSION_CRITICAL
            else TransportRegime.DIFFUSION_DOMINATED
        ),
        diffusion_coeff=diffusion_coefficient(cfg),
        gravity_force=grav.force,
        gravity_drift=grav.drift,
        gravity_onset_time=grav.onset,
    )


@dataclass(frozen=True)
class RegimeThresholds:
    """Single-parameter values at which a regime boundary is reached.

    Each value moves one quantity while the rest of the config stays fixed.
    Radius thresholds hold the mean flow speed fixed rather than Qb.
    """

    turbulent_Qb: float  # m^3/s
    turbulent_u_eff: float  # m/s
    turbulent_a: float  # m
    diffusive_u_eff: float  # m/s
    diffusive_Qb: float  # m^3/s
    diffusive_a: float  # m
    diffusive_d: float  # m
    diffusive_D: float  # m^2/s

    def to_dict(self) -> dict:
        return asdict(self)

    def to_display(self) -> dict[str, tuple[float, str]]:
        return {
            "turbulent_Qb": (self.turbulent_Qb / ML_PER_MIN, "mL/min"),
            "turbulent_u_eff": (self.turbulent_u_eff * 1e3, "mm/s"),
            "turbulent_a": (self.turbulent_a * 1e3, "mm"),
            "diffusive_u_eff": (self.diffusive_u_eff * 1e3, "mm/s"),
            "diffusive_Qb": (self.diffusive_Qb / ML_PER_MIN, "mL/min"),
            "diffusive_a": (self.diffusive_a * 1e3, "mm"),
            "diffusive_d": (self.diffusive_d, "m"),
            "diffusive_D": (self.diffusive_D, "m^2/s"),
        }


def regime_thresholds(cfg: TestbedConfig, d: float | None = None) -> RegimeThresholds:
    d = cfg.d if d is None else d
    re = reynolds(cfg)
    ad = dispersion_factor(cfg, d)
    if re == 0 or not math.isfinite(ad) or ad == 0:
        raise ConfigError("thresholds undefined for zero flow or zero diffusion")
    u = effective_velocity(cfg)
    # Re ~ Qb / a at fixed a, and ~ a at fixed u_eff.
    k_re = RE_CRITICAL / re
    # alpha_D ~ d D / (a^2 u): linear in d and D, inverse in u and a^2.
    k_ad = DISPERSION_CRITICAL / ad
    return RegimeThresholds(
        turbulent_Qb=cfg.Qb * k_re,
        turbulent_u_eff=u * k_re,
        turbulent_a=cfg.a * k_re,
        diffusive_u_eff=u / k_ad,
        diffusive_Qb=cfg.Qb / k_ad,
        diffusive_a=cfg.a / math.sqrt(k_ad),
        diffusive_d=d * k_ad,
        diffusive_D=diffusion_coefficient(cfg) * k_ad,
    )
