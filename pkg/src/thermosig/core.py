"""Core value types shared by every stage of the pipeline.

All types here are immutable: frames and constants get passed between
ingestion, model evaluation, and fitting code without defensive copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Optional, Sequence


class HvacMode(Enum):
    """Operating regime of the station cooling plant for one step."""

    NEW_AIR = "new_air"
    REFRIGERATOR = "refrigerator"
    MIXED = "mixed"
    OFF = "off"


@dataclass(frozen=True)
class StationConstants:
    """Physical constants of one station.

    c is the volumetric heat capacity of air, in energy units per cubic
    metre per kelvin. The energy unit is a convention shared by the whole
    dataset; loads, supplies, and e_v must all use the same one.
    m_z is the conditioned air volume, t_p the passenger body temperature,
    beta_v the fan affinity coefficient mapping e_v**(1/3) to airflow,
    and step the sample interval in seconds.
    """

    c: float = 1210.0
    m_z: float = 10000.0
    t_p: float = 37.0
    beta_v: float = 30.0
    step: float = 60.0

    def __post_init__(self):
        if not (self.c > 0 and self.m_z > 0 and self.step > 0):
            raise ValueError("c, m_z, and step must be positive")
        if self.beta_v < 0:
            raise ValueError("beta_v must be nonnegative")
        if not (30.0 <= self.t_p <= 40.0):
            raise ValueError(f"t_p={self.t_p} outside plausible body temperature range")

    @property
    def thermal_mass(self) -> float:
        """Energy needed to raise the whole zone by one kelvin (c * m_z)."""
        return self.c * self.m_z


@dataclass(frozen=True)
class SensorRecord:
    """One raw sample row as parsed from a dataset file.

    Temperature channels hold None where the cell was empty. passengers
    is populated only on rows that sit on an hour boundary and carries the
    count for the hour ending at this timestamp.
    """

    timestamp: datetime
    indoor: tuple[Optional[float], ...]
    outdoor: tuple[Optional[float], ...]
    t_water_in: Optional[float]
    t_water_out: Optional[float]
    v_cool_w: Optional[float]
    e_v: Optional[float]
    passengers: Optional[float] = None


@dataclass(frozen=True)
class Frame:
    """One fully resolved step on the regular time grid.

    delta is the indoor temperature change to the next frame and is None
    only on the final frame of a series.
    """

    t_in: float
    t_out: float
    n: float
    t_water_in: float
    t_water_out: float
    v_cool_w: float
    e_v: float
    mode: HvacMode
    delta: Optional[float] = None

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"passenger count must be nonnegative, got {self.n}")
        if self.v_cool_w < 0 or self.e_v < 0:
            raise ValueError("v_cool_w and e_v must be nonnegative")
        if self.delta is not None and not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite where present, got {self.delta}")


@dataclass(frozen=True)
class Theta:
    """Identified coefficient triple.

    beta_ac is stored positive; formulas that need the negative sign on
    the water column apply it explicitly.
    """

    c_p: float
    alpha: float
    beta_ac: float


def theta_is_feasible(theta: Theta) -> bool:
    """Constraint set of the fit: c_p > 0, alpha > 0, beta_ac >= 0."""
    return theta.c_p > 0 and theta.alpha > 0 and theta.beta_ac >= 0


@dataclass(frozen=True)
class LoadSignature:
    """Per-frame load decomposition for the frames that have a delta.

    All series share one length. residual is the closure of the energy
    balance: l_total - supply - thermal_mass * delta per frame.
    """

    l_total: tuple[float, ...]
    l_passenger: tuple[float, ...]
    l_environment: tuple[float, ...]
    supply: tuple[float, ...]
    residual: tuple[float, ...]
    relative_error: Optional[float] = None

    def __post_init__(self):
        lengths = {
            len(self.l_total),
            len(self.l_passenger),
            len(self.l_environment),
            len(self.supply),
            len(self.residual),
        }
        if len(lengths) != 1:
            raise ValueError("signature series must all share one length")
        for tot, pil, eil in zip(self.l_total, self.l_passenger, self.l_environment):
            if not math.isclose(tot, pil + eil, rel_tol=1e-12, abs_tol=1e-9):
                raise ValueError("l_total must equal l_passenger + l_environment")
