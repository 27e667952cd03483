import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebmlbm.beam import (
    OFF_DOMAIN, BeamParams, EnergyLedger, ScanPath, beam_position, beam_state, deposit, footprint_weights,
    line_energy,
)


def test_line_energy_is_power_over_speed():
    # 60 kV, 10 mA at 3 m/s
    assert line_energy(BeamParams(60e3, 10e-3, 3.0)) == pytest.approx(200.0, rel=1e-15)


def test_from_line_energy_round_trip():
    p = BeamParams.from_line_energy(200.0, 3.2)
    assert line_energy(p) == pytest.approx(200.0, rel=1e-14)
    assert p.power == pytest.approx(640.0, rel=1e-14)


@pytest.mark.parametrize("kw", [{"scan_velocity": 0.0}, {"spot_sigma": 0.0}, {"efficiency": 1.5}])
def test_invalid_beam_rejected(kw):
    with pytest.raises(ValueError):
        BeamParams(**kw)


def test_serpentine_hatch_and_gaps():
    path = ScanPath.hatch(3, 0.0, 1e-3, 0.0, 1e-4, serpentine=True, beam_offset=5e-4)
    p = BeamParams(scan_velocity=1.0)
    assert path.lines[1] == ((1e-3, 1e-4), (0.0, 1e-4))
    assert path.length == pytest.approx(3e-3 + 2 * 5e-4)
    assert beam_position(path, p, 0.5e-3) == pytest.approx((0.5e-3, 0.0))
    # inside the first gap
    pos, line, done = beam_state(path, p, 1.2e-3)
    assert pos is OFF_DOMAIN and line == -1 and not done
    # second line runs backwards
    assert beam_position(path, p, 1.5e-3 + 0.25e-3) == pytest.approx((0.75e-3, 1e-4))
    assert beam_state(path, p, path.length)[2]


def test_footprint_weights_sum_to_one():
    ii, jj, w = footprint_weights((12.3e-6, 40.1e-6), 20e-6, 5e-6)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(w > 0)


def test_tiny_spot_hits_single_column():
    ii, jj, w = footprint_weights((12.3e-6, 7.6e-6), 1e-9, 5e-6)
    assert w.max() == pytest.approx(1.0)
    assert (ii[w.argmax()], jj[w.argmax()]) == (2, 1)


def test_deposit_splits_budget():
    tops = np.full((10, 10), 4, dtype=np.int64)
    tops[5:, :] = -1      # empty columns let the beam through
    p = BeamParams(60e3, 5e-3, 1.0, spot_sigma=10e-6)
    dep = deposit((25e-6, 0.0), p, tops, dt=1e-7, dx=5e-6, energy_scale=1e9)
    q = p.efficiency * p.power * 1e-7
    assert dep.off_domain > 0 and dep.transmitted > 0 and dep.deposited > 0
    assert math.fsum([dep.deposited, dep.off_domain, dep.transmitted]) == pytest.approx(q, rel=1e-13)
    assert np.all(dep.cells[2] == 4)
    assert dep.energy.sum() * (5e-6) ** 3 * 1e9 == pytest.approx(dep.deposited, rel=1e-13)


def test_off_domain_position_counts_whole_share():
    dep = deposit(OFF_DOMAIN, BeamParams(), np.zeros((2, 2), dtype=np.int64), 1e-7, 5e-6, 1e9)
    assert dep.deposited == 0 and dep.off_domain == pytest.approx(0.9 * 600.0 * 1e-7)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-50e-6, 150e-6), y=st.floats(-50e-6, 150e-6), sigma=st.floats(2e-6, 60e-6))
def test_budget_closes_for_any_position(x, y, sigma):
    tops = np.where(np.arange(20)[:, None] % 3 == 0, -1, 2) * np.ones((20, 20), dtype=np.int64)
    p = BeamParams(60e3, 2e-3, 2.0, spot_sigma=sigma)
    dep = deposit((x, y), p, tops, 1.75e-7, 5e-6, 2.9e9)
    q = p.efficiency * p.power * 1.75e-7
    assert abs(dep.total - q) <= 1e-13 * q
    assert np.all(dep.energy >= 0)


def test_ledger_accumulates():
    led = EnergyLedger()
    tops = np.zeros((4, 4), dtype=np.int64)
    p = BeamParams(spot_sigma=5e-6)
    for _ in range(10):
        led.add(deposit((10e-6, 10e-6), p, tops, 1e-7, 5e-6, 1e9), 1e-7)
    assert led.beam_steps == 10
    assert sum(led.totals()) == pytest.approx(0.9 * p.power * 1e-6, rel=1e-13)
