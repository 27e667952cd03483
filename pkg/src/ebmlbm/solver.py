"""Time stepping of the coupled thermal free-surface model.

One step runs, in order: beam deposition, interface normals, mass exchange,
streaming (with pdf reconstruction at the free surface), collision, phase
change, interface cell conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import beam as beam_mod
from .free_surface import (
    GAS, INTERFACE, LIQUID, SOLID, CellField, compute_normals_and_curvature, convert_cells,
    exchange_mass, laplace_gas_density,
)
from .kernels import (
    ADIABATIC, FIXED, WALL, ForceInput, collide, column_tops, faces_array, stream, totals_kernel,
)
from .lattice import LatticeConfig, PdfGrids
from .phase_change import MaterialParams, sensible_energy, temperature_of_energy, update_phase_state


class DivergenceError(RuntimeError):
    pass


@dataclass
class SolverParams:
    lattice: LatticeConfig
    material: MaterialParams = field(default_factory=MaterialParams)
    surface_tension: float = 0.0      # lattice units
    gas_density: float = 1.0
    contact_angle_deg: float = 90.0
    faces: tuple = (WALL,) * 6
    thermal_faces: tuple = (ADIABATIC,) * 6
    wall_temperature: float | None = None
    latent_plateau: bool = True
    conversion_delta: float = 1e-3
    max_diverged: int = 0

    def __post_init__(self):
        self.faces = tuple(int(c) for c in faces_array(self.faces))
        self.thermal_faces = tuple(int(c) for c in self.thermal_faces)
        if len(self.thermal_faces) != 6:
            raise ValueError("need six thermal face codes")
        if self.gas_density <= 0:
            raise ValueError("gas density must be positive")
        if not 0.0 < self.contact_angle_deg < 180.0:
            raise ValueError("contact angle must lie strictly between 0 and 180 degrees")


@dataclass
class StepReport:
    step: int
    time: float
    mass: float
    energy: float
    max_u: float
    max_T: float
    deposited: float
    diverged: int
    melted: int = 0
    solidified: int = 0
    filled: int = 0
    emptied: int = 0


class Simulation:
    """Owns the cell field, the pdf grids and the per-step scratch arrays."""

    def __init__(self, params: SolverParams, cells: CellField, grids: PdfGrids,
                 beam: beam_mod.BeamParams | None = None, path: beam_mod.ScanPath | None = None):
        if cells.shape != tuple(params.lattice.shape) or grids.shape != cells.shape:
            raise ValueError(f"state extents {cells.shape} do not match lattice {params.lattice.shape}")
        self.params = params
        self.cells = cells
        self.grids = grids
        self.beam = beam
        self.path = path
        self.step_count = 0
        self.ledger = beam_mod.EnergyLedger()
        self.beam_line = -1
        self.beam_on = False
        self.last_deposit: beam_mod.Deposit | None = None
        self.diverged_total = 0
        shape = cells.shape
        self.bc = np.asarray(params.faces, dtype=np.int64)
        self.tbc = np.asarray(params.thermal_faces, dtype=np.int64)
        mat = params.material
        T_wall = mat.preheat_temperature if params.wall_temperature is None else params.wall_temperature
        e_wall = mat.energy_of_temperature(T_wall, liquid=True)
        s_wall = float(sensible_energy(e_wall, mat)) if params.latent_plateau else e_wall
        self.s_wall = np.full(6, s_wall)
        self._work = {}
        self._rho_air = np.empty(shape)
        self._dmass = np.zeros(shape)
        self._eb = np.zeros(shape)
        self._macro = {
            "rho": np.zeros(shape),
            "u": np.zeros(shape + (3,)),
            "E": grids.h.sum(axis=-1),
            "diverged": np.zeros(shape, dtype=np.uint8),
        }
        self._tops = column_tops(cells.flags)
        self._gravity = params.lattice.gravity_lattice

    @property
    def time(self) -> float:
        return self.step_count * self.params.lattice.dt

    @property
    def macro(self) -> dict:
        return self._macro

    @property
    def tops(self) -> np.ndarray:
        return self._tops

    def temperature(self) -> np.ndarray:
        return temperature_of_energy(self._macro["E"], self.params.material)

    def beam_finished(self) -> bool:
        if self.beam is None or self.path is None:
            return True
        return self.time >= self.path.duration(self.beam)

    def _deposit(self) -> float:
        # clear last step's source cells only
        if self.last_deposit is not None and len(self.last_deposit.energy):
            self._eb[self.last_deposit.cells] = 0.0
        self.last_deposit = None
        self.beam_on = False
        self.beam_line = -1
        if self.beam is None or self.path is None:
            return 0.0
        pos, line, finished = beam_mod.beam_state(self.path, self.beam, self.time)
        if finished:
            return 0.0
        lat = self.params.lattice
        dep = beam_mod.deposit(pos, self.beam, self._tops, lat.dt, lat.dx, self.params.material.energy_scale)
        self.ledger.add(dep, lat.dt)
        self.last_deposit = dep
        self.beam_on = pos is not beam_mod.OFF_DOMAIN
        self.beam_line = line
        if len(dep.energy):
            np.add.at(self._eb, dep.cells, dep.energy)
        return dep.deposited

    def step(self) -> StepReport:
        p = self.params
        mat = p.material
        cells = self.cells
        deposited = self._deposit()

        normal, kappa, _ = compute_normals_and_curvature(cells, self.bc, p.contact_angle_deg, self._work)
        laplace_gas_density(kappa, cells.flags, p.gas_density, p.surface_tension, self._rho_air)
        exchange_mass(cells, self.grids, self.bc, self._dmass)
        stream(self.grids, cells, normal, self._rho_air, self.bc, self.tbc, self.s_wall)

        force = ForceInput(self._gravity, self._eb)
        ndiv, macro = collide(self.grids, force, cells, p.lattice.tau_f, p.lattice.tau_h,
                              mat.E_s, mat.E_l, p.latent_plateau, self._macro)
        self.diverged_total += ndiv

        pr = update_phase_state(cells, self.grids, macro["E"], mat, self.bc)
        cr = convert_cells(cells, self.grids, normal, self.bc, p.conversion_delta)
        self._tops = column_tops(cells.flags)
        self.step_count += 1

        mass, energy, umax = totals_kernel(cells.flags, cells.mass, macro["E"], macro["u"])
        nongas = cells.flags != GAS
        max_T = float(temperature_of_energy(macro["E"][nongas].max(), mat)) if nongas.any() else float("nan")
        report = StepReport(
            step=self.step_count, time=self.time, mass=float(mass) + cells.excess, energy=float(energy) + cells.excess_heat,
            max_u=float(umax), max_T=max_T, deposited=deposited, diverged=ndiv,
            melted=pr.melted, solidified=pr.solidified, filled=cr.filled, emptied=cr.emptied,
        )
        if self.diverged_total > p.max_diverged or not math.isfinite(report.mass):
            raise DivergenceError(
                f"step {self.step_count}: {self.diverged_total} diverged cells (limit {p.max_diverged})"
            )
        return report

    def run(self, n_steps: int, callback=None) -> list[StepReport]:
        reports = []
        for _ in range(n_steps):
            r = self.step()
            reports.append(r)
            if callback is not None:
                callback(self, r)
        return reports

    def fluid_count(self) -> int:
        f = self.cells.flags
        return int(np.count_nonzero((f == LIQUID) | (f == INTERFACE)))

    def solid_count(self) -> int:
        return int(np.count_nonzero(self.cells.flags == SOLID))


def initial_state(flags: np.ndarray, mat: MaterialParams, fill: np.ndarray | None = None,
                  T0: float | None = None, rho0: float | None = None) -> tuple[CellField, PdfGrids]:
    """Material cells at rest with density ``rho0`` and temperature ``T0`` (default preheat)."""
    from .lattice import W

    flags = np.ascontiguousarray(flags, dtype=np.uint8)
    shape = flags.shape
    rho0 = mat.reference_density if rho0 is None else rho0
    T0 = mat.preheat_temperature if T0 is None else T0
    if fill is None:
        fill = np.where(flags == GAS, 0.0, 1.0)
    fill = np.array(fill, dtype=float)
    fill[flags == GAS] = 0.0
    fill[flags == LIQUID] = 1.0
    cells = CellField(flags.copy(), fill, fill * rho0)
    grids = PdfGrids.empty(shape)
    material = flags != GAS
    grids.f[material] = W * rho0
    E0 = mat.energy_of_temperature(T0)
    grids.h[:] = W * E0
    return cells, grids
