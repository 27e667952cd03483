"""Random powder layer: inverse-Gaussian diameters, drop-and-roll placement, rasterization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .free_surface import GAS, SOLID, CellField
from .lattice import PdfGrids
from .phase_change import MaterialParams


@dataclass
class PowderSpec:
    layer_thickness: float = 50e-6
    mean_diameter: float = 60e-6
    # inverse-Gaussian shape; variance is mean^3 / shape (15 um std by default)
    shape_diameter: float = 9.6e-4
    d_min: float = 30e-6
    d_max: float = 100e-6
    packing_fraction: float = 0.5
    seed: int = 0
    substrate_cells: int = 12
    max_attempts: int = 200

    def __post_init__(self):
        if self.mean_diameter <= 0 or self.shape_diameter <= 0:
            raise ValueError("inverse-Gaussian mean and shape must be positive")
        if self.d_min >= self.d_max:
            raise ValueError(f"degenerate truncation: d_min={self.d_min} >= d_max={self.d_max}")
        if not 0.0 <= self.packing_fraction < 1.0:
            raise ValueError("packing fraction must lie in [0, 1)")
        if self.layer_thickness < 0 or self.substrate_cells < 1:
            raise ValueError("need a non-negative layer thickness and at least one substrate cell")


def sample_diameters(spec: PowderSpec, n: int, rng: np.random.Generator | None = None,
                     truncate: bool = True) -> np.ndarray:
    """``n`` inverse-Gaussian diameters; out-of-range draws are redrawn, not clipped."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    out = rng.wald(spec.mean_diameter, spec.shape_diameter, size=n)
    if not truncate:
        return out
    bad = (out < spec.d_min) | (out > spec.d_max)
    while bad.any():
        out[bad] = rng.wald(spec.mean_diameter, spec.shape_diameter, size=int(bad.sum()))
        bad = (out < spec.d_min) | (out > spec.d_max)
    return out


def rest_height(x: float, y: float, r: float, floor: float, centres: np.ndarray, radii: np.ndarray) -> float:
    """Lowest centre height of a sphere of radius ``r`` dropped at (x, y)."""
    z = floor + r
    if len(radii):
        d2 = (centres[:, 0] - x) ** 2 + (centres[:, 1] - y) ** 2
        reach = (radii + r) ** 2
        touch = d2 < reach
        if touch.any():
            z = max(z, float(np.max(centres[touch, 2] + np.sqrt(reach[touch] - d2[touch]))))
    return z


def roll(x: float, y: float, r: float, floor: float, centres, radii, box, tol: float):
    """Pattern-search descent of the rest height until no neighbouring drop point is lower.

    A sphere on the substrate is already at its minimum; one resting on others
    slides downhill until it is cradled (three contacts) or reaches the floor.
    """
    lx, ly = box
    z = rest_height(x, y, r, floor, centres, radii)
    step = r
    dirs = [(math.cos(a), math.sin(a)) for a in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)]
    while step > tol and z > floor + r + 1e-15:
        best = (z, x, y)
        for cx, cy in dirs:
            nx = min(max(x + step * cx, r), lx - r)
            ny = min(max(y + step * cy, r), ly - r)
            nz = rest_height(nx, ny, r, floor, centres, radii)
            if nz < best[0] - 1e-15:
                best = (nz, nx, ny)
        if best[0] < z:
            z, x, y = best
        else:
            step *= 0.5
    return x, y, z


@dataclass
class PowderBed:
    cells: CellField
    grids: PdfGrids
    centres: np.ndarray
    radii: np.ndarray
    substrate_top: int           # first cell index above the substrate
    packing_fraction: float      # particle volume / (footprint * layer thickness)
    complete: bool               # False if placement gave up before the target
    warnings: list = field(default_factory=list)


def place_spheres(spec: PowderSpec, extent, floor: float, ceiling: float):
    """Drop spheres until their volume reaches ``phi * A * layer``.

    Returns (centres, radii, complete). Placement order is fixed by the seed.
    """
    lx, ly = extent
    rng = np.random.default_rng(spec.seed)
    target = spec.packing_fraction * lx * ly * spec.layer_thickness
    centres = np.zeros((0, 3))
    radii = np.zeros(0)
    vol = 0.0
    failures = 0
    tol = 1e-3 * spec.mean_diameter
    while vol < target:
        r = 0.5 * float(sample_diameters(spec, 1, rng)[0])
        if 2 * r > min(lx, ly):
            failures += 1
        else:
            x = float(rng.uniform(r, lx - r))
            y = float(rng.uniform(r, ly - r))
            x, y, z = roll(x, y, r, floor, centres, radii, (lx, ly), tol)
            if z + r <= ceiling:
                centres = np.vstack([centres, [x, y, z]])
                radii = np.append(radii, r)
                vol += 4.0 / 3.0 * math.pi * r**3
                failures = 0
                continue
            failures += 1
        if failures >= spec.max_attempts:
            return centres, radii, False
    return centres, radii, True


def rasterize(shape, dx: float, substrate_cells: int, centres, radii) -> np.ndarray:
    """SOLID where the cell centre lies in a sphere or below the substrate top."""
    flags = np.full(shape, GAS, dtype=np.uint8)
    flags[:, :, :substrate_cells] = SOLID
    for (cx, cy, cz), r in zip(centres, radii):
        lo = [max(int(math.floor((c - r) / dx - 0.5)), 0) for c in (cx, cy, cz)]
        hi = [min(int(math.ceil((c + r) / dx - 0.5)) + 1, n) for c, n in zip((cx, cy, cz), shape)]
        if any(h <= l for l, h in zip(lo, hi)):
            continue
        gx = (np.arange(lo[0], hi[0]) + 0.5) * dx - cx
        gy = (np.arange(lo[1], hi[1]) + 0.5) * dx - cy
        gz = (np.arange(lo[2], hi[2]) + 0.5) * dx - cz
        inside = gx[:, None, None] ** 2 + gy[None, :, None] ** 2 + gz[None, None, :] ** 2 < r * r
        sub = flags[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]]
        sub[inside] = SOLID
    return flags


def generate_bed(spec: PowderSpec, shape, dx: float, mat: MaterialParams | None = None,
                 headspace_cells: int = 4) -> PowderBed:
    """Powder layer on a flat substrate, initialised at rest at the preheat temperature."""
    from .solver import initial_state

    mat = MaterialParams() if mat is None else mat
    nx, ny, nz = shape
    floor = spec.substrate_cells * dx
    ceiling = (nz - headspace_cells) * dx
    if ceiling <= floor + spec.layer_thickness:
        raise ValueError(f"domain height {nz} cells leaves no room for substrate, layer and headspace")
    warnings = []
    if spec.packing_fraction > 0 and spec.layer_thickness > 0:
        centres, radii, complete = place_spheres(spec, (nx * dx, ny * dx), floor, ceiling)
    else:
        centres, radii, complete = np.zeros((0, 3)), np.zeros(0), True
    if not complete:
        warnings.append("placement stopped early; packing fraction below target")
    flags = rasterize(shape, dx, spec.substrate_cells, centres, radii)
    cells, grids = initial_state(flags, mat)
    area = nx * ny * dx * dx
    phi = float(np.sum(4.0 / 3.0 * np.pi * radii**3)) / (area * spec.layer_thickness) if len(radii) else 0.0
    return PowderBed(cells, grids, centres, radii, spec.substrate_cells, phi, complete, warnings)


def cell_packing_fraction(flags: np.ndarray, substrate_top: int, layer_cells: float) -> float:
    """Solid cells above the substrate per footprint cell and layer thickness."""
    nx, ny, _ = flags.shape
    return float(np.count_nonzero(flags[:, :, substrate_top:] == SOLID)) / (nx * ny * layer_cells)
