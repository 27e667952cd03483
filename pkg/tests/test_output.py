import numpy as np
import pytest

from ebmlbm.config import parse_config
from ebmlbm.free_surface import GAS, CellField
from ebmlbm.lattice import PdfGrids
from ebmlbm.output import HEADER, MAGIC, Snapshot, read_sidecar, snapshot_of, write_sidecar, write_snapshot
from ebmlbm.phase_change import MaterialParams
from ebmlbm.solver import initial_state


def _random_snapshot(shape=(3, 4, 5), seed=1):
    rng = np.random.default_rng(seed)
    return Snapshot(
        flag=rng.integers(0, 4, shape).astype(np.uint8), fill=rng.random(shape), rho=rng.random(shape),
        velocity=rng.normal(size=shape + (3,)), T=1000 + rng.random(shape), dx=5e-6, step=42,
    )


def test_sidecar_bitwise_round_trip(tmp_path):
    snap = _random_snapshot()
    p = tmp_path / "s.bin"
    write_sidecar(snap, p)
    back = read_sidecar(p)
    for name in ("flag", "fill", "rho", "velocity", "T"):
        a, b = getattr(snap, name), getattr(back, name)
        assert a.dtype == b.dtype and a.tobytes() == b.tobytes()
    assert back.dx == snap.dx and back.step == 42
    write_sidecar(back, tmp_path / "t.bin")
    assert p.read_bytes() == (tmp_path / "t.bin").read_bytes()


def test_sidecar_header_layout(tmp_path):
    snap = _random_snapshot((2, 3, 4))
    p = tmp_path / "s.bin"
    write_sidecar(snap, p)
    raw = p.read_bytes()
    assert raw[:8] == MAGIC
    assert np.frombuffer(raw[8:20], "<u4").tolist() == [2, 3, 4]
    assert np.frombuffer(raw[20:28], "<f8")[0] == 5e-6
    assert len(raw) == 64 + 24 * (1 + 8 + 8 + 24 + 8)
    # x is the fastest index
    assert raw[64:66] == bytes([snap.flag[0, 0, 0], snap.flag[1, 0, 0]])


def test_sidecar_rejects_garbage(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"nope" * 20)
    with pytest.raises(ValueError):
        read_sidecar(p)
    p.write_bytes(HEADER.pack(MAGIC, 2, 2, 2, 1.0, 0, 1))
    with pytest.raises(ValueError):
        read_sidecar(p)


def test_gas_box_vtk(tmp_path):
    shape = (2, 2, 2)
    cells = CellField.empty(shape)
    grids = PdfGrids.empty(shape)
    snap = snapshot_of(cells, grids, MaterialParams(), 1e-6)
    vtk, _ = write_snapshot(snap, tmp_path / "gas")
    raw = open(vtk, "rb").read()
    assert b"DIMENSIONS 2 2 2" in raw and b"POINT_DATA 8" in raw
    i = raw.index(b"SCALARS flag unsigned_char 1\nLOOKUP_TABLE default\n")
    start = i + len(b"SCALARS flag unsigned_char 1\nLOOKUP_TABLE default\n")
    assert raw[start:start + 8] == bytes([GAS] * 8)


def test_snapshot_is_deterministic(tmp_path):
    snap = _random_snapshot()
    a = write_snapshot(snap, tmp_path / "a")
    b = write_snapshot(snap, tmp_path / "b")
    for x, y in zip(a, b):
        assert open(x, "rb").read() == open(y, "rb").read()


def test_full_scale_initial_temperature_is_preheat():
    cfg = parse_config("preset = fig5_scenario\n")
    shape = (16, 8, 48)     # the preset's height on a narrower box keeps this fast
    flags = np.full(shape, GAS, dtype=np.uint8)
    flags[:, :, :12] = 3
    cells, grids = initial_state(flags, cfg.material)
    snap = snapshot_of(cells, grids, cfg.material, cfg.lattice.dx)
    assert np.allclose(snap.T, 1000.0, rtol=0, atol=1e-9)


def test_unwritable_path_reports_path(tmp_path):
    with pytest.raises(OSError) as err:
        write_sidecar(_random_snapshot(), tmp_path / "missing" / "s.bin")
    assert "missing" in str(err.value)
