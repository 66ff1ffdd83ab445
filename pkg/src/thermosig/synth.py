"""Synthetic station generator with known ground truth.

The simulator integrates the zone energy balance forward with a chosen
coefficient triple, a diurnal outdoor profile, commuter passenger flows,
and a staged thermostat controller, then emits the same CSV layout the
ingestion code reads. The controller deliberately tracks the load
imperfectly (hysteresis, discrete chiller stages, actuator caps), since
a perfectly tracking plant would leave the coefficients identifiable
only up to scale.

Sensor noise touches only the emitted temperature channels; the latent
state, actuator channels, and passenger counts stay exact. Per-step
passenger counts are spread from the hourly anchors with the same
interpolation the ingestion side uses, so a round trip through the CSV
reproduces the regression system bit for bit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass
from datetime import datetime, timedelta, timezone
from typing import Optional

import numpy as np

from .core import Frame, HvacMode, SensorRecord, StationConstants, Theta
from .errors import DivergedState
from .ingest import (
    CsvSchema,
    FrameSeries,
    ModeRule,
    classify_mode,
    interpolate_passengers,
    write_records_csv,
)
from .models import fan_airflow

T_IN_FLOOR = -20.0
T_IN_CEILING = 60.0
CORRELATION_LIMIT = 0.99


class IdentifiabilityWarning(UserWarning):
    """The generated regressor columns are close to collinear."""


@dataclass(frozen=True)
class OutdoorProfile:
    """Sinusoidal outdoor temperature with a daily period."""

    mean: float = 31.0
    amplitude: float = 6.0
    peak_hour: float = 15.0

    def temperature(self, hour_of_day: float) -> float:
        return self.mean + self.amplitude * math.cos(
            2.0 * math.pi * (hour_of_day - self.peak_hour) / 24.0
        )


@dataclass(frozen=True)
class PassengerProfile:
    """Daily passenger flow shape.

    Weekdays concentrate the flow in two rush peaks; weekends spread it
    almost uniformly across the open hours.
    """

    kind: str = "weekday"
    daily_total: int = 2000
    morning_peak_hour: float = 8.0
    evening_peak_hour: float = 18.0
    peak_width_hours: float = 1.5
    base_weight: float = 0.05
    open_hour: int = 8
    close_hour: int = 20

    def __post_init__(self):
        if self.kind not in ("weekday", "weekend"):
            raise ValueError(f"kind must be 'weekday' or 'weekend', got {self.kind!r}")
        if self.daily_total < 0:
            raise ValueError("daily_total must be nonnegative")

    def hourly_weights(self) -> list[float]:
        weights = []
        for hour in range(24):
            center = hour + 0.5
            if self.kind == "weekday":
                spread = 2.0 * self.peak_width_hours**2
                weight = (
                    math.exp(-((center - self.morning_peak_hour) ** 2) / spread)
                    + math.exp(-((center - self.evening_peak_hour) ** 2) / spread)
                    + self.base_weight
                )
            else:
                weight = 1.0 if self.open_hour <= hour < self.close_hour else self.base_weight
            weights.append(weight)
        return weights

    def hourly_counts(self) -> list[int]:
        """Integer passenger count per hour of one day.

        Largest-remainder allocation, so the 24 counts sum to
        daily_total exactly.
        """
        weights = self.hourly_weights()
        total_weight = math.fsum(weights)
        quotas = [self.daily_total * w / total_weight for w in weights]
        counts = [math.floor(q) for q in quotas]
        leftover = self.daily_total - sum(counts)
        fractions = np.array([q - c for q, c in zip(quotas, counts)])
        for hour in np.argsort(-fractions, kind="stable")[:leftover]:
            counts[int(hour)] += 1
        return counts


@dataclass(frozen=True)
class HvacPlant:
    """Thermostat schedule, capacities, and water loop parameters.

    The controller engages cooling above setpoint + deadband and
    releases it below setpoint - deadband. While engaged it asks for the
    current load plus recovery_fraction of the remaining error per step,
    prefers outdoor air whenever it is usefully cooler than the zone,
    and serves the rest from a chiller that only runs on whole stages.
    """

    on_hour: float = 5.0
    off_hour: float = 23.0
    setpoint: float = 26.0
    deadband: float = 1.0
    recovery_fraction: float = 0.15
    e_v_max: float = 1300.0
    e_v_min_fraction: float = 0.05
    refrigerator_max: float = 9000.0
    refrigerator_stages: int = 10
    water_delta_t: float = 5.0
    water_supply_temp: float = 7.0
    new_air_min_advantage: float = 3.0

    def __post_init__(self):
        if self.e_v_max < 0 or self.refrigerator_max < 0:
            raise ValueError("capacities must be nonnegative")
        if not 0 < self.e_v_min_fraction <= 1:
            raise ValueError("e_v_min_fraction must be in (0, 1]")
        if self.refrigerator_stages < 1:
            raise ValueError("need at least one chiller stage")
        if self.water_delta_t <= 0:
            raise ValueError("water_delta_t must be positive")

    def in_schedule(self, hour_of_day: float) -> bool:
        if self.on_hour <= self.off_hour:
            return self.on_hour <= hour_of_day < self.off_hour
        return hour_of_day >= self.on_hour or hour_of_day < self.off_hour

    def stage_supply(self, demand: float) -> float:
        """Chiller output for a demand: whole stages, rounded up, capped."""
        if demand <= 0 or self.refrigerator_max == 0:
            return 0.0
        stage = self.refrigerator_max / self.refrigerator_stages
        return min(math.ceil(demand / stage) * stage, self.refrigerator_max)


@dataclass(frozen=True)
class NoiseModel:
    """Sensor corruption for emitted temperature channels."""

    temp_std: float = 0.0
    temp_quantization: float = 0.0

    def __post_init__(self):
        if self.temp_std < 0 or self.temp_quantization < 0:
            raise ValueError("noise parameters must be nonnegative")

    def apply(self, values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        noisy = values
        if self.temp_std > 0:
            noisy = noisy + rng.normal(0.0, self.temp_std, size=len(values))
        if self.temp_quantization > 0:
            noisy = np.round(noisy / self.temp_quantization) * self.temp_quantization
        return noisy


@dataclass(frozen=True)
class Scenario:
    """Complete description of one synthetic run.

    The defaults form the reference scenario: a three day weekday run at
    minute resolution (plus one closing row so the last hour keeps its
    anchor) around the coefficient triple (100, 50, 2000). Its energy
    convention is kilojoules per step, hence c = 1.21 rather than the
    joule-scale library default.
    """

    duration_steps: int = 4321
    start: datetime = datetime(2021, 6, 1, tzinfo=timezone.utc)
    seed: int = 0
    theta_true: Theta = Theta(c_p=100.0, alpha=50.0, beta_ac=2000.0)
    constants: StationConstants = StationConstants(
        c=1.21, m_z=12000.0, t_p=37.0, beta_v=100.0, step=60.0
    )
    outdoor: OutdoorProfile = OutdoorProfile()
    passengers: PassengerProfile = PassengerProfile()
    hvac: HvacPlant = HvacPlant()
    noise: NoiseModel = NoiseModel()
    initial_t_in: Optional[float] = None

    def __post_init__(self):
        if self.duration_steps < 2:
            raise ValueError("duration_steps must be at least 2")
        if self.start.tzinfo is None:
            object.__setattr__(self, "start", self.start.replace(tzinfo=timezone.utc))


def _hour_of_day(ts: datetime) -> float:
    return ts.hour + ts.minute / 60.0 + ts.second / 3600.0 + ts.microsecond / 3.6e9


def _hourly_anchors(scenario: Scenario, grid: list[datetime]) -> list[tuple[datetime, float]]:
    """Anchor (timestamp, count) pairs for every on-the-hour grid row
    after the first. The anchor at H carries the count for [H-1h, H)."""
    day_counts = scenario.passengers.hourly_counts()
    anchors = []
    for ts in grid[1:]:
        if ts.minute == 0 and ts.second == 0 and ts.microsecond == 0:
            hour_start = ts - timedelta(hours=1)
            anchors.append((ts, float(day_counts[hour_start.hour])))
    return anchors


def simulate(scenario: Scenario) -> tuple[FrameSeries, list[tuple[datetime, float]]]:
    """Integrate the scenario forward and return frames plus anchors.

    The latent indoor temperature evolves by
        T(i+1) = T(i) + (load - supply) / (c * m_z)
    with load and supply evaluated on the latent state. Emitted frames
    carry the noisy sensor view of the temperatures; frame deltas are
    differences of the emitted indoor channel, exactly what a consumer
    re-derives from the CSV.

    Raises DivergedState if the latent temperature leaves a plausible
    range, and warns with IdentifiabilityWarning when the refrigerator
    rows it generates are too collinear to pin the coefficients down.
    """
    constants = scenario.constants
    theta = scenario.theta_true
    plant = scenario.hvac
    n_steps = scenario.duration_steps
    grid = [scenario.start + timedelta(seconds=i * constants.step) for i in range(n_steps)]

    anchors = _hourly_anchors(scenario, grid)
    if anchors:
        n_per_step = interpolate_passengers(anchors, grid, step=constants.step)
    else:
        if scenario.passengers.daily_total > 0:
            warnings.warn(
                "no grid row falls on an hour boundary; passenger counts are all zero",
                UserWarning,
                stacklevel=2,
            )
        n_per_step = [0.0] * n_steps

    e_v_min = plant.e_v_min_fraction * plant.e_v_max
    rule = ModeRule(e_v_idle=0.0)

    latent_t = np.empty(n_steps)
    t_out_series = np.empty(n_steps)
    water_in = np.empty(n_steps)
    water_out = np.empty(n_steps)
    v_cool = np.empty(n_steps)
    e_v_series = np.empty(n_steps)
    modes: list[HvacMode] = []

    temperature = scenario.initial_t_in if scenario.initial_t_in is not None else plant.setpoint
    cooling_on = False
    for i in range(n_steps):
        latent_t[i] = temperature
        hour = _hour_of_day(grid[i])
        t_out = scenario.outdoor.temperature(hour)
        t_out_series[i] = t_out

        l_pil = theta.c_p * n_per_step[i] * (constants.t_p - temperature)
        l_eil = theta.alpha * (t_out - temperature)
        load_total = l_pil + l_eil

        error = temperature - plant.setpoint
        if not plant.in_schedule(hour):
            cooling_on = False
        elif cooling_on and error < -plant.deadband:
            cooling_on = False
        elif not cooling_on and error > plant.deadband:
            cooling_on = True

        e_v = 0.0
        supply_ref = 0.0
        if cooling_on:
            demand = max(load_total + constants.thermal_mass * error * plant.recovery_fraction, 0.0)
            advantage = temperature - t_out
            if demand > 0 and advantage >= plant.new_air_min_advantage and plant.e_v_max > 0:
                needed_flow = demand / (constants.c * advantage)
                e_v_needed = (needed_flow / constants.beta_v) ** 3
                if e_v_needed <= plant.e_v_max:
                    e_v = max(e_v_needed, e_v_min)
                else:
                    e_v = plant.e_v_max
                    served = constants.c * fan_airflow(e_v, constants.beta_v) * advantage
                    supply_ref = plant.stage_supply(demand - served)
            elif demand > 0:
                supply_ref = plant.stage_supply(demand)

        if supply_ref > 0 and theta.beta_ac > 0:
            v_cool[i] = supply_ref / (theta.beta_ac * plant.water_delta_t)
            water_out[i] = plant.water_supply_temp
            water_in[i] = plant.water_supply_temp + plant.water_delta_t
        else:
            v_cool[i] = 0.0
            water_out[i] = plant.water_supply_temp
            water_in[i] = plant.water_supply_temp
        e_v_series[i] = e_v

        mode = classify_mode(
            v_cool_w=v_cool[i],
            t_water_in=water_in[i],
            t_water_out=water_out[i],
            e_v=e_v,
            rule=rule,
        )
        modes.append(mode)

        supply_na = 0.0
        if mode in (HvacMode.NEW_AIR, HvacMode.MIXED):
            supply_na = constants.c * fan_airflow(e_v, constants.beta_v) * (temperature - t_out)
        supply_total = supply_na + (water_in[i] - water_out[i]) * v_cool[i] * theta.beta_ac

        temperature = temperature + (load_total - supply_total) / constants.thermal_mass
        if not (T_IN_FLOOR <= temperature <= T_IN_CEILING):
            raise DivergedState(i, temperature)

    rng = np.random.default_rng(scenario.seed)
    emitted_t_in = scenario.noise.apply(latent_t, rng)
    emitted_t_out = scenario.noise.apply(t_out_series, rng)
    emitted_water_in = scenario.noise.apply(water_in, rng)
    emitted_water_out = scenario.noise.apply(water_out, rng)

    frames = []
    for i in range(n_steps):
        delta = float(emitted_t_in[i + 1] - emitted_t_in[i]) if i + 1 < n_steps else None
        frames.append(
            Frame(
                t_in=float(emitted_t_in[i]),
                t_out=float(emitted_t_out[i]),
                n=n_per_step[i],
                t_water_in=float(emitted_water_in[i]),
                t_water_out=float(emitted_water_out[i]),
                v_cool_w=float(v_cool[i]),
                e_v=float(e_v_series[i]),
                mode=modes[i],
                delta=delta,
            )
        )
    series = FrameSeries(start=scenario.start, step=constants.step, frames=tuple(frames))

    _warn_if_collinear(series, constants)
    return series, anchors


def _warn_if_collinear(series: FrameSeries, constants: StationConstants) -> None:
    columns = []
    for frame in series:
        if frame.mode is HvacMode.REFRIGERATOR and frame.delta is not None:
            columns.append(
                (
                    frame.n * (constants.t_p - frame.t_in),
                    frame.t_out - frame.t_in,
                    frame.v_cool_w * (frame.t_water_in - frame.t_water_out),
                )
            )
    if len(columns) < 3:
        return
    matrix = np.array(columns)
    for first, second in ((0, 1), (0, 2), (1, 2)):
        x = matrix[:, first]
        y = matrix[:, second]
        if x.std() == 0.0 or y.std() == 0.0:
            correlation = 1.0
        else:
            correlation = abs(float(np.corrcoef(x, y)[0, 1]))
        if correlation > CORRELATION_LIMIT:
            warnings.warn(
                f"regressor columns {first} and {second} have correlation "
                f"{correlation:.4f}; the fit may not be identifiable",
                IdentifiabilityWarning,
                stacklevel=3,
            )


def emit_csv(
    series: FrameSeries,
    anchors: list[tuple[datetime, float]],
    path: str,
    schema: CsvSchema = CsvSchema(),
) -> None:
    """Write the series in the dataset CSV layout, one indoor and one
    outdoor channel, with passenger counts on their anchor rows."""
    anchor_by_ts = {ts: count for ts, count in anchors}
    records = []
    for ts, frame in zip(series.timestamps(), series):
        records.append(
            SensorRecord(
                timestamp=ts,
                indoor=(frame.t_in,),
                outdoor=(frame.t_out,),
                t_water_in=frame.t_water_in,
                t_water_out=frame.t_water_out,
                v_cool_w=frame.v_cool_w,
                e_v=frame.e_v,
                passengers=anchor_by_ts.get(ts),
            )
        )
    write_records_csv(records, path, schema)


def _profile_to_dict(value) -> dict:
    return asdict(value)


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "duration_steps": scenario.duration_steps,
        "start": scenario.start.isoformat(),
        "seed": scenario.seed,
        "theta_true": asdict(scenario.theta_true),
        "constants": asdict(scenario.constants),
        "outdoor": _profile_to_dict(scenario.outdoor),
        "passengers": _profile_to_dict(scenario.passengers),
        "hvac": _profile_to_dict(scenario.hvac),
        "noise": _profile_to_dict(scenario.noise),
        "initial_t_in": scenario.initial_t_in,
    }


def scenario_from_dict(raw: dict) -> Scenario:
    """Build a Scenario from parsed JSON, applying defaults for any
    omitted section. Unknown keys raise, catching config typos."""
    data = dict(raw)
    kwargs = {}
    if "duration_steps" in data:
        kwargs["duration_steps"] = int(data.pop("duration_steps"))
    if "start" in data:
        kwargs["start"] = datetime.fromisoformat(data.pop("start"))
    if "seed" in data:
        kwargs["seed"] = int(data.pop("seed"))
    if "initial_t_in" in data:
        value = data.pop("initial_t_in")
        kwargs["initial_t_in"] = None if value is None else float(value)
    for key, builder in (
        ("theta_true", Theta),
        ("constants", StationConstants),
        ("outdoor", OutdoorProfile),
        ("passengers", PassengerProfile),
        ("hvac", HvacPlant),
        ("noise", NoiseModel),
    ):
        if key in data:
            kwargs[key] = builder(**data.pop(key))
    if data:
        raise ValueError(f"unknown scenario keys: {sorted(data)}")
    return Scenario(**kwargs)
