"""Load, supply, and energy balance models for one frame.

Sign conventions: loads heat the zone and are positive when they do;
supplies remove heat and are positive when they do. The balance says
load minus supply equals thermal mass times the step temperature change.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import Frame, HvacMode, StationConstants, Theta
from .errors import MissingDelta


@dataclass(frozen=True)
class SupplyBreakdown:
    """Cooling supplied in one step, split by path."""

    new_air_part: float
    refrigerator_part: float

    @property
    def total(self) -> float:
        return self.new_air_part + self.refrigerator_part


def fan_airflow(e_v: float, beta_v: float) -> float:
    """Airflow moved by the ventilator from its energy draw.

    Affinity law for a fan: flow scales with the cube root of power, so
    airflow = beta_v * e_v ** (1/3). Units follow beta_v.
    """
    if e_v < 0:
        raise ValueError(f"e_v must be nonnegative, got {e_v}")
    return beta_v * float(np.cbrt(e_v))


def load(frame: Frame, theta: Theta, constants: StationConstants) -> tuple[float, float, float]:
    """Thermal load on the zone for one frame.

    Returns (l_total, l_passenger, l_environment) where the passenger
    part is c_p * n * (t_p - t_in) and the environment part collects
    every outdoor-coupled path into alpha * (t_out - t_in).
    """
    l_pil = theta.c_p * frame.n * (constants.t_p - frame.t_in)
    l_eil = theta.alpha * (frame.t_out - frame.t_in)
    return l_pil + l_eil, l_pil, l_eil


def supply(frame: Frame, theta: Theta, constants: StationConstants) -> SupplyBreakdown:
    """Cooling supplied by the plant for one frame, per its mode.

    New air removes heat by moving outdoor air through the zone:
    c * fan_airflow(e_v) * (t_in - t_out). Negative when the intake is
    warmer than the zone; emitted as-is with a diagnostic warning since
    clamping would hide an inconsistent mode label.
    The refrigerator part is (t_water_in - t_water_out) * v_cool_w *
    beta_ac, positive when the return water is warmer than the supply.
    """
    new_air = 0.0
    refrigerator = 0.0
    if frame.mode in (HvacMode.NEW_AIR, HvacMode.MIXED):
        airflow = fan_airflow(frame.e_v, constants.beta_v)
        new_air = constants.c * airflow * (frame.t_in - frame.t_out)
        if new_air < 0:
            warnings.warn(
                "new air supply is negative: intake warmer than the zone "
                "while the ventilation path is active",
                RuntimeWarning,
                stacklevel=2,
            )
    if frame.mode in (HvacMode.REFRIGERATOR, HvacMode.MIXED):
        refrigerator = (frame.t_water_in - frame.t_water_out) * frame.v_cool_w * theta.beta_ac
    return SupplyBreakdown(new_air_part=new_air, refrigerator_part=refrigerator)


def balance_target(frame: Frame, constants: StationConstants) -> float:
    """Right-hand side of the step energy balance: c * m_z * delta."""
    if frame.delta is None:
        raise MissingDelta()
    return constants.thermal_mass * frame.delta
