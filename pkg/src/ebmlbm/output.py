"""Volume snapshots: legacy VTK structured points plus a raw little-endian sidecar.

Sidecar layout (all little-endian)::

    offset  size  field
    0       8     magic b"EBMLBM\\x00\\x01"
    8       12    nx, ny, nz (uint32)
    20      8     dx in metres (float64)
    28      8     step (uint64)
    36      4     field mask (uint32): 1 flag, 2 fill, 4 rho, 8 velocity, 16 T
    40      24    zero padding

followed by each present field in mask order, x fastest: flag as uint8,
the others as float64, velocity interleaved (ux, uy, uz) per cell.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .free_surface import CellField
from .lattice import moments
from .phase_change import MaterialParams, temperature_of_energy

MAGIC = b"EBMLBM\x00\x01"
HEADER = struct.Struct("<8s3IdQI24x")
assert HEADER.size == 64

FIELDS = (("flag", 1, 1), ("fill", 2, 1), ("rho", 4, 1), ("velocity", 8, 3), ("T", 16, 1))


@dataclass
class Snapshot:
    flag: np.ndarray
    fill: np.ndarray
    rho: np.ndarray | None = None
    velocity: np.ndarray | None = None
    T: np.ndarray | None = None
    dx: float = 1.0
    step: int = 0

    @property
    def shape(self):
        return self.flag.shape


def snapshot_of(cells: CellField, grids, mat: MaterialParams, dx: float, step: int = 0) -> Snapshot:
    """Flag, fill and the moments of the current pdfs; T from the energy of every cell."""
    m = moments(grids.f, grids.h)
    return Snapshot(cells.flags.copy(), cells.fill.copy(), m.rho, m.u, temperature_of_energy(m.E, mat),
                    dx, step)


def _xfast(a: np.ndarray) -> np.ndarray:
    # (nx, ny, nz[, 3]) -> memory order with x fastest
    if a.ndim == 4:
        return np.ascontiguousarray(a.transpose(2, 1, 0, 3))
    return np.ascontiguousarray(a.transpose(2, 1, 0))


def _from_xfast(buf: np.ndarray, shape, comps: int) -> np.ndarray:
    nx, ny, nz = shape
    if comps == 3:
        return np.ascontiguousarray(buf.reshape(nz, ny, nx, 3).transpose(2, 1, 0, 3))
    return np.ascontiguousarray(buf.reshape(nz, ny, nx).transpose(2, 1, 0))


def write_sidecar(snap: Snapshot, path) -> None:
    nx, ny, nz = snap.shape
    mask = 0
    chunks = []
    for name, bit, _ in FIELDS:
        a = getattr(snap, name)
        if a is None:
            continue
        mask |= bit
        dtype = "<u1" if name == "flag" else "<f8"
        chunks.append(_xfast(np.asarray(a)).astype(dtype, copy=False).tobytes())
    try:
        with open(path, "wb") as fh:
            fh.write(HEADER.pack(MAGIC, nx, ny, nz, float(snap.dx), int(snap.step), mask))
            for c in chunks:
                fh.write(c)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write snapshot sidecar {path}: {exc.strerror}") from None


def read_sidecar(path) -> Snapshot:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise OSError(exc.errno, f"cannot read snapshot sidecar {path}: {exc.strerror}") from None
    if len(data) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, nx, ny, nz, dx, step, mask = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a snapshot sidecar")
    n = nx * ny * nz
    off = HEADER.size
    out = {}
    for name, bit, comps in FIELDS:
        if not mask & bit:
            continue
        dtype = np.dtype("<u1") if name == "flag" else np.dtype("<f8")
        size = n * comps * dtype.itemsize
        if off + size > len(data):
            raise ValueError(f"{path}: truncated field {name}")
        buf = np.frombuffer(data, dtype=dtype, count=n * comps, offset=off)
        a = _from_xfast(buf, (nx, ny, nz), comps)
        out[name] = a.astype(np.uint8 if name == "flag" else np.float64)
        off += size
    if off != len(data):
        raise ValueError(f"{path}: {len(data) - off} trailing bytes")
    return Snapshot(dx=dx, step=step, **out)


def write_vtk(snap: Snapshot, path, title: str = "ebmlbm snapshot") -> None:
    """Legacy VTK, BINARY (big-endian), one point per lattice cell."""
    nx, ny, nz = snap.shape
    head = (
        "# vtk DataFile Version 3.0\n"
        f"{title}\n"
        "BINARY\n"
        "DATASET STRUCTURED_POINTS\n"
        f"DIMENSIONS {nx} {ny} {nz}\n"
        "ORIGIN 0 0 0\n"
        f"SPACING {snap.dx!r} {snap.dx!r} {snap.dx!r}\n"
        f"POINT_DATA {nx * ny * nz}\n"
    )
    try:
        with open(path, "wb") as fh:
            fh.write(head.encode("ascii"))
            fh.write(b"SCALARS flag unsigned_char 1\nLOOKUP_TABLE default\n")
            fh.write(_xfast(snap.flag).astype(">u1").tobytes())
            fh.write(b"\n")
            for name in ("fill", "rho", "T"):
                a = getattr(snap, name)
                if a is None:
                    continue
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n".encode("ascii"))
                fh.write(_xfast(a).astype(">f8").tobytes())
                fh.write(b"\n")
            if snap.velocity is not None:
                fh.write(b"VECTORS velocity double\n")
                fh.write(_xfast(snap.velocity).astype(">f8").tobytes())
                fh.write(b"\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write VTK file {path}: {exc.strerror}") from None


def write_snapshot(snap: Snapshot, path_stem) -> tuple[str, str]:
    """Write ``<stem>.vtk`` and ``<stem>.bin``; returns both paths."""
    vtk = f"{path_stem}.vtk"
    side = f"{path_stem}.bin"
    write_vtk(snap, vtk)
    write_sidecar(snap, side)
    return vtk, side


def save_bed(cells: CellField, dx: float, path) -> None:
    write_sidecar(Snapshot(cells.flags, cells.fill, dx=dx), path)


def load_bed(path, mat: MaterialParams) -> tuple[CellField, object, float]:
    """Rebuild a resting state at the preheat temperature from a flag+fill file."""
    from .solver import initial_state

    snap = read_sidecar(path)
    cells, grids = initial_state(snap.flag, mat, fill=snap.fill)
    return cells, grids, snap.dx
