import csv
import os

import pytest

from ebmlbm.cli import EXIT_DIVERGED, EXIT_INVALID, EXIT_OK, main
from ebmlbm.output import read_sidecar

TINY = """\
preset = desk

[lattice]
shape_cells = 24 24 30

[powder]
substrate_cells = 10

[run]
line_energy_kJ_m = 0.001
scan_velocity_m_s = 10

[sweep]
velocities_m_s = 10
line_energies_kJ_m = 0.0005 0.001
max_cooldown_steps = 50
density_margin_x_m = 10e-6

[output]
snapshot_every_steps = 20
"""


def _cfg(tmp_path, text=TINY, name="tiny.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(line for line in fh if not line.startswith("#")))


def test_invalid_config_exit_code(tmp_path, capsys):
    assert main(["run", _cfg(tmp_path, "[lattice]\ntau_f = 0.4\n")]) == EXIT_INVALID
    assert "missing required keys" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "absent.cfg")]) == EXIT_INVALID


def test_unknown_bench_is_a_usage_error():
    with pytest.raises(SystemExit) as err:
        main(["bench", "nope"])
    assert err.value.code == 2


def test_bed_command(tmp_path):
    out = tmp_path / "bed"
    assert main(["--out", str(out), "bed", _cfg(tmp_path)]) == EXIT_OK
    snap = read_sidecar(out / "bed.bin")
    assert snap.shape == (24, 24, 30)
    assert os.path.exists(out / "bed.vtk")


def test_run_writes_metrics_and_snapshots(tmp_path):
    out = tmp_path / "run"
    assert main(["--out", str(out), "run", _cfg(tmp_path), "--steps", "40"]) == EXIT_OK
    rows = _rows(out / "metrics.csv")
    assert rows[0][:3] == ["step", "time_s", "mass"]
    assert len(rows) == 41
    for name in ("snap_0000000", "snap_0000020", "snap_0000040", "final"):
        assert os.path.exists(out / f"{name}.vtk") and os.path.exists(out / f"{name}.bin")


def test_divergence_exit_code(tmp_path):
    text = TINY.replace("[powder]", "[free_surface]\nsurface_tension = 0.9\n\n[powder]")
    text = text.replace("line_energy_kJ_m = 0.001\n", "line_energy_kJ_m = 5\n")
    code = main(["--out", str(tmp_path / "div"), "run", _cfg(tmp_path, text), "--steps", "400"])
    assert code == EXIT_DIVERGED


def test_empty_sweep_succeeds(tmp_path):
    text = TINY.replace("velocities_m_s = 10", "velocities_m_s =").replace("line_energies_kJ_m = 0.0005 0.001",
                                                                           "line_energies_kJ_m =")
    out = tmp_path / "empty"
    assert main(["--out", str(out), "sweep", _cfg(tmp_path, text)]) == EXIT_OK
    assert len(_rows(out / "process_window.csv")) == 1


def test_sweep_resume_skips_finished_points(tmp_path):
    out = tmp_path / "sw"
    cfg = _cfg(tmp_path)
    assert main(["--out", str(out), "sweep", cfg]) == EXIT_OK
    path = out / "process_window.csv"
    full = path.read_text().splitlines()
    rows = _rows(path)
    assert len(rows) == 3
    # drop the last point and resume
    path.write_text("\n".join(full[:-1]) + "\n")
    assert main(["--out", str(out), "sweep", cfg, "--resume"]) == EXIT_OK
    again = _rows(path)
    assert len(again) == 3
    assert [r[:-1] for r in again] == [r[:-1] for r in rows]
    # nothing left to do
    assert main(["--out", str(out), "sweep", cfg, "--resume"]) == EXIT_OK
    assert len(_rows(path)) == 3
