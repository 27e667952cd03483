"""Energy/temperature map with a latent-heat plateau, and solid/liquid conversion.

The energy density ``E`` carried by the h distributions is mapped to
temperature piecewise linearly::

    E <= E_s         T = T_m - slope_s * (E_s - E)     (solid, passes through T_0 at E_0)
    E_s < E < E_l    T = T_m                           (melting plateau)
    E >= E_l         T = T_m + slope_l * (E - E_l)     (liquid)

with ``E_l = E_s + latent``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .free_surface import GAS, INTERFACE, LIQUID, SOLID
from .lattice import W
from .kernels import neighbor_index


@dataclass
class MaterialParams:
    melting_temperature: float = 1928.0
    preheat_temperature: float = 1000.0
    solidus_energy: float = 1.0
    latent_energy: float = 0.4
    slope_solid: float = 1000.0
    slope_liquid: float = 1000.0
    reference_density: float = 1.0
    # J/(m^3 K) of the solid; ties lattice energy to joules
    volumetric_heat_capacity: float = 2.9e6
    density_kg_m3: float = 4000.0

    def __post_init__(self):
        if self.latent_energy <= 0:
            raise ValueError("latent_energy must be positive (E_s < E_l)")
        if self.slope_solid <= 0 or self.slope_liquid <= 0:
            raise ValueError("temperature slopes must be positive")
        if self.preheat_temperature >= self.melting_temperature:
            raise ValueError("preheat temperature must lie below the melting temperature")
        if self.reference_density <= 0 or self.volumetric_heat_capacity <= 0 or self.density_kg_m3 <= 0:
            raise ValueError("densities and heat capacity must be positive")

    @property
    def E_s(self) -> float:
        return self.solidus_energy

    @property
    def E_l(self) -> float:
        return self.solidus_energy + self.latent_energy

    @property
    def E_0(self) -> float:
        """Energy density at the preheat temperature."""
        return self.energy_of_temperature(self.preheat_temperature)

    @property
    def energy_scale(self) -> float:
        """Joules per cubic metre represented by one lattice energy unit."""
        return self.volumetric_heat_capacity * self.slope_solid

    def energy_of_temperature(self, T: float, liquid: bool = False) -> float:
        # the plateau is ambiguous at T_m; liquid=True picks its upper end
        if T < self.melting_temperature or (T == self.melting_temperature and not liquid):
            return self.E_s - (self.melting_temperature - T) / self.slope_solid
        return self.E_l + (T - self.melting_temperature) / self.slope_liquid


def temperature_of_energy(E, mat: MaterialParams):
    E = np.asarray(E, dtype=float)
    Tm = mat.melting_temperature
    T = np.where(
        E <= mat.E_s,
        Tm - mat.slope_solid * (mat.E_s - E),
        np.where(E < mat.E_l, Tm, Tm + mat.slope_liquid * (E - mat.E_l)),
    )
    return T if T.ndim else float(T)


def liquid_fraction(E, mat: MaterialParams):
    return np.clip((np.asarray(E, dtype=float) - mat.E_s) / mat.latent_energy, 0.0, 1.0)


def sensible_energy(E, mat: MaterialParams):
    """Energy with the latent part removed; linear in T on both sides of the plateau."""
    E = np.asarray(E, dtype=float)
    return np.where(E <= mat.E_s, E, np.where(E < mat.E_l, mat.E_s, E - mat.latent_energy))


@dataclass
class PhaseReport:
    melted: int
    solidified: int


@njit(cache=True)
def _phase_kernel(f, flags, fill, E, E_s, E_l, rho0, bc):
    nx, ny, nz = flags.shape
    melted = 0
    solidified = 0
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                fl = flags[x, y, z]
                if fl == SOLID:
                    if E[x, y, z] < E_l:
                        continue
                    gas_adj = False
                    for dx in range(-1, 2):
                        for dy in range(-1, 2):
                            for dz in range(-1, 2):
                                if dx == 0 and dy == 0 and dz == 0:
                                    continue
                                ok, ax, ay, az = neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc)
                                if ok and flags[ax, ay, az] == GAS:
                                    gas_adj = True
                    if gas_adj or fill[x, y, z] < 1.0:
                        flags[x, y, z] = INTERFACE
                    else:
                        flags[x, y, z] = LIQUID
                    for i in range(19):
                        f[x, y, z, i] = W[i] * rho0
                    melted += 1
                elif fl == LIQUID or fl == INTERFACE:
                    if E[x, y, z] <= E_s:
                        flags[x, y, z] = SOLID
                        solidified += 1
    return melted, solidified


def update_phase_state(cells, grids, E, mat: MaterialParams, bc) -> PhaseReport:
    """Melt solid cells that reached the liquidus energy and freeze fluid cells at the solidus.

    ``E`` is the post-collision energy density. h is never touched, so the
    energy field is bitwise unchanged by conversion. Newly molten cells start
    at rest with density ``reference_density``.
    """
    m, s = _phase_kernel(grids.f, cells.flags, cells.fill, E, mat.E_s, mat.E_l, mat.reference_density, bc)
    return PhaseReport(melted=int(m), solidified=int(s))
