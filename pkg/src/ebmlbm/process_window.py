"""Process-window sweep: run the hatch scenario per (line energy, scan velocity) and classify."""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .beam import BeamParams, OFF_DOMAIN, ScanPath, footprint_weights
from .free_surface import GAS, INTERFACE, LIQUID, SOLID, CellField
from .lattice import PdfGrids
from .powder import PowderSpec, generate_bed
from .solver import DivergenceError, Simulation, SolverParams

POROUS, GOOD, SWELLING, DIVERGED = "POROUS", "GOOD", "SWELLING", "DIVERGED"
VERDICT_RANK = {POROUS: 0, GOOD: 1, SWELLING: 2}

DENSITY_THRESHOLD = 0.995
SWELLING_TEMPERATURE = 7500.0

CSV_COLUMNS = ("v_scan_m_s", "E_L_kJ_m", "P_W", "verdict", "rel_density", "T_avg_K", "T_peak_K", "steps", "wall_s")


def classify(rel_density: float, T_avg: float, density_threshold: float = DENSITY_THRESHOLD,
             swelling_temperature: float = SWELLING_TEMPERATURE) -> str:
    """Porosity wins over swelling; a dense sample is swollen only above the temperature bound."""
    if rel_density < density_threshold:
        return POROUS
    if T_avg > swelling_temperature:
        return SWELLING
    return GOOD


@dataclass
class SampleClassification:
    verdict: str
    rel_density: float
    T_avg: float
    T_peak: float
    diagnostics: dict = field(default_factory=dict)


def relative_density(flags: np.ndarray, fill: np.ndarray, substrate_top: int, box) -> float:
    """Material fraction below the local surface inside ``box = (x0, x1, y0, y1)``.

    Each column counts from the substrate top up to its topmost solid cell.
    That top cell adds its fill to both the material and the column height, so
    a partly filled surface cell is not porosity. Gas and partial cells further
    down are. Columns without solid above the substrate are skipped.
    """
    x0, x1, y0, y1 = box
    f = flags[x0:x1, y0:y1, substrate_top:]
    v = np.where(f == SOLID, fill[x0:x1, y0:y1, substrate_top:], 0.0)
    solid = f == SOLID
    if f.size == 0:
        raise ValueError("evaluation box is empty")
    nz = f.shape[2]
    has = solid.any(axis=2)
    top = nz - 1 - np.argmax(solid[:, :, ::-1], axis=2)
    below = np.arange(nz)[None, None, :] < top[:, :, None]
    top_fill = np.take_along_axis(v, top[:, :, None], axis=2)[:, :, 0]
    material = np.where(has, (v * below).sum(axis=2) + top_fill, 0.0)
    height = np.where(has, top + top_fill, 0.0)
    total = math.fsum(height.ravel())
    if total <= 0.0:
        raise ValueError("evaluation box holds no solid above the substrate")
    return math.fsum(material.ravel()) / total


def averaged_peak_temperature(samples) -> float:
    """Max over hatch lines of the mean per-step surface temperature.

    ``samples`` is an iterable of ``(line, T)`` pairs for beam-on steps, with
    ``T`` already an outlier-rejecting per-step statistic.
    """
    per_line: dict[int, list[float]] = {}
    for line, T in samples:
        per_line.setdefault(int(line), []).append(float(T))
    if not per_line:
        raise ValueError("no beam-on samples recorded")
    return max(math.fsum(v) / len(v) for v in per_line.values())


def surface_temperature(T: np.ndarray, tops: np.ndarray, position, sigma: float, dx: float,
                        percentile: float = 99.0) -> float | None:
    """Percentile of the top-cell temperatures of the columns within 3 sigma of the beam axis."""
    if position is OFF_DOMAIN:
        return None
    ii, jj, _ = footprint_weights(position, sigma, dx)
    nx, ny = tops.shape
    inside = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
    ii, jj = ii[inside], jj[inside]
    zz = tops[ii, jj]
    ok = zz >= 0
    if not ok.any():
        return None
    return float(np.percentile(T[ii[ok], jj[ok], zz[ok]], percentile))


@dataclass
class SweepGrid:
    velocities: list[float]          # m/s
    line_energies: list[float]       # kJ/m

    def __post_init__(self):
        self.velocities = [float(v) for v in self.velocities]
        self.line_energies = [float(e) for e in self.line_energies]
        if any(v <= 0 for v in self.velocities) or any(e <= 0 for e in self.line_energies):
            raise ValueError("scan velocities and line energies must be positive")

    def points(self) -> list[tuple[float, float]]:
        """(v, E_L) pairs, velocity-major."""
        return [(v, e) for v in self.velocities for e in self.line_energies]


@dataclass
class Scenario:
    """Everything a single sweep point needs besides (E_L, v)."""

    solver: SolverParams
    beam: BeamParams                 # voltage, spot and efficiency; current is derived per point
    n_lines: int = 7
    line_offset: float = 100e-6
    beam_offset: float = 0.0
    serpentine: bool = True
    powder: PowderSpec = field(default_factory=PowderSpec)
    density_margin: float | None = None    # m; default half a line offset
    density_margin_x: float | None = None  # m along the scan; default density_margin
    percentile: float = 99.0
    max_cooldown_steps: int = 20000

    def path(self) -> ScanPath:
        nx, ny, _ = self.solver.lattice.shape
        dx = self.solver.lattice.dx
        span = (self.n_lines - 1) * self.line_offset
        y_first = 0.5 * (ny * dx - span)
        return ScanPath.hatch(self.n_lines, 0.0, nx * dx, y_first, self.line_offset,
                              self.serpentine, self.beam_offset)

    def density_box(self) -> tuple[int, int, int, int]:
        nx, ny, _ = self.solver.lattice.shape
        dx = self.solver.lattice.dx
        margin = 0.5 * self.line_offset if self.density_margin is None else self.density_margin
        span = (self.n_lines - 1) * self.line_offset
        y_first = 0.5 * (ny * dx - span)
        y0 = y_first - 0.5 * self.line_offset + margin
        y1 = y_first + span + 0.5 * self.line_offset - margin
        mx = margin if self.density_margin_x is None else self.density_margin_x
        m = int(round(mx / dx))
        box = (m, nx - m, max(int(round(y0 / dx)), 0), min(int(round(y1 / dx)), ny))
        if box[1] <= box[0] or box[3] <= box[2]:
            raise ValueError(f"density evaluation box {box} is empty; reduce the margin")
        return box


@dataclass
class PointResult:
    v_scan: float
    E_L: float
    power: float
    classification: SampleClassification | None
    steps: int
    wall_s: float

    @property
    def verdict(self) -> str:
        return DIVERGED if self.classification is None else self.classification.verdict

    def row(self) -> list[str]:
        c = self.classification
        nan = "nan"
        return [
            repr(self.v_scan), repr(self.E_L), f"{self.power:.6g}", self.verdict,
            nan if c is None else f"{c.rel_density:.6f}",
            nan if c is None else f"{c.T_avg:.1f}",
            nan if c is None else f"{c.T_peak:.1f}",
            str(self.steps), f"{self.wall_s:.2f}",
        ]


def run_point(scenario: Scenario, E_L_kJ_m: float, v_scan: float,
              bed: tuple[CellField, PdfGrids] | None = None, progress=None) -> PointResult:
    """Hatch the layer, cool until everything has resolidified, classify."""
    t0 = time.perf_counter()
    b = scenario.beam
    beam = BeamParams.from_line_energy(E_L_kJ_m * 1e3, v_scan, voltage=b.voltage,
                                       spot_sigma=b.spot_sigma, efficiency=b.efficiency)
    lat = scenario.solver.lattice
    mat = scenario.solver.material
    if bed is None:
        pb = generate_bed(scenario.powder, lat.shape, lat.dx, mat)
        cells, grids = pb.cells, pb.grids
    else:
        cells, grids = bed[0].copy(), bed[1].copy()
    path = scenario.path()
    sim = Simulation(scenario.solver, cells, grids, beam, path)
    samples = []
    T_peak = -math.inf
    cool = 0
    try:
        while True:
            r = sim.step()
            T_peak = max(T_peak, r.max_T)
            if sim.beam_on:
                pos, _, _ = _position(sim)
                T = sim.temperature()
                s = surface_temperature(T, sim.tops, pos, beam.spot_sigma, lat.dx, scenario.percentile)
                if s is not None:
                    samples.append((sim.beam_line, s))
            if progress is not None:
                progress(sim, r)
            if sim.beam_finished():
                if sim.fluid_count() == 0 and r.max_T <= mat.melting_temperature:
                    break
                cool += 1
                if cool > scenario.max_cooldown_steps:
                    break
    except DivergenceError:
        return PointResult(v_scan, E_L_kJ_m, beam.power, None, sim.step_count, time.perf_counter() - t0)
    rho = relative_density(sim.cells.flags, sim.cells.fill, scenario.powder.substrate_cells,
                           scenario.density_box())
    T_avg = averaged_peak_temperature(samples) if samples else float(mat.preheat_temperature)
    diag = {"fluid_left": sim.fluid_count(), "cooldown_steps": cool}
    c = SampleClassification(classify(rho, T_avg), rho, T_avg, T_peak, diag)
    return PointResult(v_scan, E_L_kJ_m, beam.power, c, sim.step_count, time.perf_counter() - t0)


def _position(sim: Simulation):
    from .beam import beam_state

    return beam_state(sim.path, sim.beam, sim.time - sim.params.lattice.dt)


def read_completed(csv_path) -> set[tuple[float, float]]:
    done = set()
    if not os.path.exists(csv_path):
        return done
    with open(csv_path, newline="") as fh:
        rows = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(rows, None)
        if header is None:
            return done
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{csv_path}: unexpected header {header}")
        for row in rows:
            if row:
                done.add((float(row[0]), float(row[1])))
    return done


def _job(args):
    scenario, e, v, bed = args
    return run_point(scenario, e, v, bed)


def run_sweep(grid: SweepGrid, scenario: Scenario, csv_path, resume: bool = False, workers: int = 1,
              provenance: list[str] | None = None, bed=None, log=None) -> list[PointResult]:
    """Run every point not already in ``csv_path`` and append its row, in grid order.

    Without ``resume`` an existing table is replaced. A diverged point is
    written as a DIVERGED row and the sweep goes on.
    """
    done = read_completed(csv_path) if resume else set()
    todo = [(v, e) for v, e in grid.points() if (v, e) not in done]
    fresh = not (resume and os.path.exists(csv_path))
    if fresh:
        with open(csv_path, "w", newline="") as fh:
            for line in provenance or []:
                fh.write(f"# {line}\n")
            csv.writer(fh, lineterminator="\n").writerow(CSV_COLUMNS)
    if bed is None and todo:
        lat = scenario.solver.lattice
        pb = generate_bed(scenario.powder, lat.shape, lat.dx, scenario.solver.material)
        bed = (pb.cells, pb.grids)
    jobs = [(scenario, e, v, bed) for v, e in todo]
    results = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            it = ex.map(_job, jobs)
            results = _write_in_order(it, csv_path, log)
    else:
        results = _write_in_order(map(_job, jobs), csv_path, log)
    return results


def _write_in_order(results_iter, csv_path, log):
    out = []
    for res in results_iter:
        with open(csv_path, "a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(res.row())
        if log is not None:
            log(res)
        out.append(res)
    return out


def monotone_in_energy(rows) -> bool:
    """True if, at every velocity, verdict rank never drops as E_L grows."""
    by_v: dict[float, list[tuple[float, str]]] = {}
    for v, e, verdict in rows:
        by_v.setdefault(v, []).append((e, verdict))
    for pts in by_v.values():
        ranks = [VERDICT_RANK.get(verdict, -1) for _, verdict in sorted(pts)]
        if any(r < 0 for r in ranks) or any(b < a for a, b in zip(ranks, ranks[1:])):
            return False
    return True


def with_velocity(scenario: Scenario, **kw) -> Scenario:
    return replace(scenario, **kw)
