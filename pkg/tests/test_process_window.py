import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ebmlbm.free_surface import GAS, SOLID
from ebmlbm.kernels import column_tops
from ebmlbm.process_window import (
    CSV_COLUMNS, DENSITY_THRESHOLD, GOOD, POROUS, SWELLING, SWELLING_TEMPERATURE, SweepGrid,
    averaged_peak_temperature, classify, monotone_in_energy, read_completed, relative_density,
    surface_temperature,
)


def _slab(shape, substrate, height):
    flags = np.full(shape, GAS, dtype=np.uint8)
    flags[:, :, : substrate + height] = SOLID
    return flags, np.where(flags == SOLID, 1.0, 0.0)


@pytest.mark.parametrize("rho, T, verdict", [
    (0.994, 3000.0, POROUS),
    (0.999, 7600.0, SWELLING),
    (0.998, 3000.0, GOOD),
    (0.994, 9000.0, POROUS),
    (0.995, 7500.0, GOOD),
    (0.995, 7501.0, SWELLING),
])
def test_classify_examples(rho, T, verdict):
    assert classify(rho, T) == verdict


def _brute(rho, T):
    # two-threshold rule written out independently
    if not rho >= 0.995:
        return "POROUS"
    return "SWELLING" if T > 7500.0 else "GOOD"


@given(st.floats(0.0, 1.0), st.floats(300.0, 2e4))
def test_classify_matches_brute_force(rho, T):
    assert classify(rho, T) == _brute(rho, T)


@given(st.floats(0.0, 1.0), st.floats(300.0, 2e4), st.floats(0.0, 0.5))
def test_classify_never_porous_when_denser(rho, T, extra):
    # raising density never turns a non-porous verdict porous
    if classify(rho, T) != POROUS:
        assert classify(min(rho + extra, 1.0), T) != POROUS


def test_thresholds():
    assert DENSITY_THRESHOLD == 0.995
    assert SWELLING_TEMPERATURE == 7500.0


def test_density_of_dense_slab_is_one():
    flags, fill = _slab((40, 40, 30), 5, 20)
    assert relative_density(flags, fill, 5, (0, 40, 0, 40)) == 1.0


def test_density_with_internal_void():
    flags, fill = _slab((40, 40, 30), 5, 20)
    flags[10:14, 10:14, 12:16] = GAS
    fill[10:14, 10:14, 12:16] = 0.0
    assert relative_density(flags, fill, 5, (0, 40, 0, 40)) == pytest.approx(1 - 64 / 32000, abs=1e-15)


def test_partial_top_cell_is_not_porosity():
    flags, fill = _slab((8, 8, 20), 4, 10)
    fill[:, :, 13] = 0.4
    assert relative_density(flags, fill, 4, (0, 8, 0, 8)) == 1.0
    # the same partial cell buried under a full one is porosity
    flags[:, :, 14] = SOLID
    fill[:, :, 14] = 1.0
    assert relative_density(flags, fill, 4, (0, 8, 0, 8)) == pytest.approx(10.4 / 11.0)


def test_density_of_empty_box_raises():
    flags, fill = _slab((8, 8, 20), 4, 0)
    with pytest.raises(ValueError):
        relative_density(flags, fill, 4, (0, 8, 0, 8))
    with pytest.raises(ValueError):
        relative_density(flags, fill, 4, (3, 3, 0, 8))


def test_averaged_peak_temperature_examples():
    assert averaged_peak_temperature([(0, 3000.0)] * 50) == 3000.0
    ramp = [(0, T) for T in np.linspace(5000.0, 9000.0, 101)]
    assert averaged_peak_temperature(ramp) == pytest.approx(7000.0, rel=1e-12)
    # the hottest line wins
    assert averaged_peak_temperature([(0, 3000.0), (1, 4000.0), (1, 5000.0)]) == 4500.0
    with pytest.raises(ValueError):
        averaged_peak_temperature([])


def test_surface_percentile_rejects_single_cell_spike():
    dx = 5e-6
    flags, _ = _slab((64, 64, 30), 5, 10)
    tops = column_tops(flags)
    T = np.full(flags.shape, 3000.0)
    T[32, 32, tops[32, 32]] = 1e6
    s = surface_temperature(T, tops, (32.5 * dx, 32.5 * dx), 25e-6, dx, 99.0)
    assert s == pytest.approx(3000.0, rel=0.01)


def test_surface_temperature_outside_domain():
    from ebmlbm.beam import OFF_DOMAIN

    flags, _ = _slab((8, 8, 10), 2, 2)
    tops = column_tops(flags)
    T = np.full(flags.shape, 3000.0)
    assert surface_temperature(T, tops, OFF_DOMAIN, 1e-5, 5e-6) is None


def test_sweep_grid_order_and_validation():
    g = SweepGrid([3.2, 6.4], [0.1, 0.2])
    assert g.points() == [(3.2, 0.1), (3.2, 0.2), (6.4, 0.1), (6.4, 0.2)]
    assert SweepGrid([], []).points() == []
    with pytest.raises(ValueError):
        SweepGrid([0.0], [0.1])


def test_monotone_audit():
    assert monotone_in_energy([(1.0, 0.1, POROUS), (1.0, 0.2, GOOD), (1.0, 0.3, SWELLING)])
    assert not monotone_in_energy([(1.0, 0.1, GOOD), (1.0, 0.2, POROUS)])
    assert not monotone_in_energy([(1.0, 0.1, "DIVERGED")])


def test_read_completed(tmp_path):
    p = tmp_path / "t.csv"
    assert read_completed(p) == set()
    with open(p, "w", newline="") as fh:
        fh.write("# provenance\n")
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        w.writerow(["3.2", "0.1", "320", POROUS, "0.9", "3000", "3100", "10", "1.0"])
    assert read_completed(p) == {(3.2, 0.1)}
    p.write_text("a,b\n")
    with pytest.raises(ValueError):
        read_completed(p)


def test_empty_sweep_writes_header_only(tmp_path):
    from ebmlbm.config import parse_config
    from ebmlbm.process_window import run_sweep

    cfg = parse_config("preset = desk\n")
    out = tmp_path / "pw.csv"
    res = run_sweep(SweepGrid([], []), cfg.scenario(), out, provenance=["x"])
    assert res == []
    lines = out.read_text().splitlines()
    assert lines == ["# x", ",".join(CSV_COLUMNS)]


def test_density_box_margins():
    from dataclasses import replace

    from ebmlbm.config import parse_config

    sc = parse_config("preset = desk\n").scenario()
    # one line at y = 160 um, band 110..210 um, 25 um trimmed off each side
    assert sc.density_box() == (30, 98, 27, 37)
    assert replace(sc, density_margin_x=None).density_box() == (5, 123, 27, 37)
    with pytest.raises(ValueError, match="empty"):
        replace(sc, density_margin=60e-6).density_box()
