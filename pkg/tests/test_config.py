import pytest

from ebmlbm.config import PRESETS, ConfigError, dump_config, load_config, parse_config
from ebmlbm.kernels import FIXED, OUTFLOW, PERIODIC, WALL


def test_full_scale_preset_values():
    cfg = parse_config("preset = fig5_scenario\n")
    lat = cfg.lattice
    assert lat.dx == 5e-6 and lat.dt == 1.75e-7
    assert lat.shape == (288, 128, 48)
    assert cfg.beam_offset == 13.56e-3
    assert cfg.n_lines == 7 and cfg.line_offset == 100e-6
    assert cfg.material.preheat_temperature == 1000.0
    assert cfg.powder.layer_thickness == 50e-6
    assert len(cfg.sweep.points()) == 8 * 9


def test_domain_extent_matches_cells():
    lat = parse_config("preset = fig5_scenario\n").lattice
    extent = [n * lat.dx for n in lat.shape]
    assert extent == pytest.approx([1.44e-3, 0.64e-3, 0.24e-3], rel=1e-12)


def test_explicit_keys_override_preset():
    cfg = parse_config("preset = desk\n[lattice]\ntau_f = 0.8\n[sweep]\nvelocities_m_s = 1.0\n")
    assert cfg.lattice.tau_f == 0.8
    assert cfg.sweep.velocities == [1.0]
    assert cfg.thermal_faces[4] == FIXED


def test_round_trip_through_text():
    cfg = parse_config("preset = fig5_scenario\n[boundary]\nx_lo = periodic\nx_hi = periodic\n")
    again = parse_config(dump_config(cfg))
    assert again.values == cfg.values
    assert again.lattice == cfg.lattice
    assert again.faces == cfg.faces == (PERIODIC, PERIODIC, WALL, WALL, WALL, WALL)
    assert again.sweep.points() == cfg.sweep.points()


def test_empty_file_lists_required_keys():
    with pytest.raises(ConfigError) as err:
        parse_config("", "empty.cfg")
    msg = str(err.value)
    for key in ("dx_m", "dt_s", "shape_cells", "tau_f", "tau_h"):
        assert key in msg


def test_tau_below_bound_names_stability():
    with pytest.raises(ConfigError) as err:
        parse_config("preset = desk\n[lattice]\ntau_f = 0.4\n", "t.cfg")
    assert "t.cfg:3" in str(err.value)
    assert "stability" in str(err.value)


@pytest.mark.parametrize("text, line, word", [
    ("preset = desk\n[lattice]\nbogus = 1\n", 3, "unknown key"),
    ("preset = desk\n[nowhere]\n", 2, "unknown section"),
    ("preset = desk\n[lattice]\ndx_m = 5e-6 s\n", 3, "unit violation"),
    ("preset = desk\n[lattice]\ndx_m = -5e-6\n", 3, "unit violation"),
    ("preset = desk\n[lattice]\ndx_m = 1e-6\ndx_m = 2e-6\n", 4, "duplicate"),
    ("preset = nothing\n", 1, "unknown preset"),
    ("preset = desk\n[boundary]\nx_lo = periodic\n", 3, "pairs"),
    ("preset = desk\n[boundary]\ny_lo = sticky\n", 3, "face rule"),
])
def test_errors_carry_line_numbers(text, line, word):
    with pytest.raises(ConfigError) as err:
        parse_config(text, "c.cfg")
    assert f"c.cfg:{line}" in str(err.value)
    assert word in str(err.value)


def test_unit_suffix_accepted_and_comments_ignored():
    cfg = parse_config("preset = desk  # small\n[lattice]\ndx_m = 4e-6 m ; finer\n[boundary]\nz_hi = outflow\n")
    assert cfg.lattice.dx == 4e-6
    assert cfg.faces[5] == OUTFLOW


def test_snapshot_cadence_must_be_positive():
    with pytest.raises(ConfigError):
        parse_config("preset = desk\n[output]\nsnapshot_every_steps = 0\n")


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(tmp_path / "none.cfg")
    assert "none.cfg" in str(err.value)


def test_every_preset_parses():
    for name in PRESETS:
        parse_config(f"preset = {name}\n")
