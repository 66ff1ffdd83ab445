"""Validation behavior of the shared value types."""

import dataclasses

import pytest

from thermosig import (
    Frame,
    HvacMode,
    LoadSignature,
    StationConstants,
    Theta,
    theta_is_feasible,
)


class TestStationConstants:
    def test_thermal_mass_is_c_times_m_z(self):
        constants = StationConstants(c=1210.0, m_z=10000.0)
        assert constants.thermal_mass == 1210.0 * 10000.0

    def test_defaults_are_valid(self):
        StationConstants()

    @pytest.mark.parametrize("overrides", [
        {"c": 0.0},
        {"c": -1.0},
        {"m_z": 0.0},
        {"step": 0.0},
        {"beta_v": -0.1},
        {"t_p": 25.0},   # below any plausible body temperature
        {"t_p": 45.0},
    ])
    def test_rejects_unphysical_values(self, overrides):
        with pytest.raises(ValueError):
            StationConstants(**overrides)

    def test_frozen(self):
        constants = StationConstants()
        with pytest.raises(dataclasses.FrozenInstanceError):
            constants.c = 1.0


class TestFrame:
    def _frame(self, **overrides):
        base = dict(
            t_in=27.0, t_out=33.0, n=10.0,
            t_water_in=12.0, t_water_out=7.0, v_cool_w=0.4, e_v=0.0,
            mode=HvacMode.REFRIGERATOR, delta=0.01,
        )
        base.update(overrides)
        return Frame(**base)

    def test_valid_frame(self):
        frame = self._frame()
        assert frame.delta == 0.01

    def test_delta_may_be_none(self):
        assert self._frame(delta=None).delta is None

    @pytest.mark.parametrize("overrides", [
        {"n": -1.0},
        {"v_cool_w": -0.1},
        {"e_v": -5.0},
        {"delta": float("nan")},
        {"delta": float("inf")},
    ])
    def test_rejects_bad_values(self, overrides):
        with pytest.raises(ValueError):
            self._frame(**overrides)


class TestTheta:
    def test_feasible(self):
        assert theta_is_feasible(Theta(c_p=100.0, alpha=50.0, beta_ac=2000.0))
        # beta_ac is allowed to sit exactly on its bound
        assert theta_is_feasible(Theta(c_p=1.0, alpha=1.0, beta_ac=0.0))

    @pytest.mark.parametrize("triple", [
        (0.0, 50.0, 2000.0),
        (100.0, 0.0, 2000.0),
        (-1.0, 50.0, 2000.0),
        (100.0, 50.0, -1e-9),
    ])
    def test_infeasible(self, triple):
        assert not theta_is_feasible(Theta(*triple))

    def test_infeasible_values_are_still_constructible(self):
        # the type itself does not enforce the constraint set; the fit does
        theta = Theta(c_p=-1.0, alpha=0.0, beta_ac=-3.0)
        assert theta.c_p == -1.0


class TestLoadSignature:
    def test_accepts_consistent_series(self):
        sig = LoadSignature(
            l_total=(230.0, 100.0),
            l_passenger=(200.0, 60.0),
            l_environment=(30.0, 40.0),
            supply=(200.0, 90.0),
            residual=(30.0, 10.0),
        )
        assert len(sig.l_total) == 2

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError, match="length"):
            LoadSignature(
                l_total=(230.0,),
                l_passenger=(200.0,),
                l_environment=(30.0,),
                supply=(200.0, 90.0),
                residual=(30.0,),
            )

    def test_rejects_inconsistent_decomposition(self):
        with pytest.raises(ValueError, match="l_total"):
            LoadSignature(
                l_total=(230.0,),
                l_passenger=(200.0,),
                l_environment=(31.0,),
                supply=(200.0,),
                residual=(30.0,),
            )
