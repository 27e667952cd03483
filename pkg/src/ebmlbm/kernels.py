"""Grid kernels: pull streaming with free-surface handling, BGK collision with forcing.

All kernels are compiled with numba, run single-threaded and write only the
cell they are visiting, so repeated runs are bitwise identical.

Face boundary codes are held in a length-6 array ordered
``(x_lo, x_hi, y_lo, y_hi, z_lo, z_hi)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .lattice import CS2, E as _E, MAX_LATTICE_SPEED, OPP as _OPP, W as _W

GAS, INTERFACE, LIQUID, SOLID = 0, 1, 2, 3
FLAG_NAMES = {GAS: "GAS", INTERFACE: "INTERFACE", LIQUID: "LIQUID", SOLID: "SOLID"}

PERIODIC, WALL, OUTFLOW = 0, 1, 2
BOUNDARY_CODES = {"periodic": PERIODIC, "wall": WALL, "outflow": OUTFLOW}
ADIABATIC, FIXED = 0, 1
THERMAL_CODES = {"adiabatic": ADIABATIC, "fixed": FIXED}

NEG_TOL = -1e-12

EX = np.ascontiguousarray(_E[:, 0])
EY = np.ascontiguousarray(_E[:, 1])
EZ = np.ascontiguousarray(_E[:, 2])
W = np.array(_W)
OPP = np.array(_OPP)


@njit(cache=True, inline="always")
def _axis(c, n, lo, hi):
    # returns (index, face) with face -1 inside, 0 = low face, 1 = high face
    if c < 0:
        if lo == PERIODIC:
            return c + n, -1
        return c, 0
    if c >= n:
        if hi == PERIODIC:
            return c - n, -1
        return c, 1
    return c, -1


@njit(cache=True)
def resolve(x, y, z, nx, ny, nz, bc):
    """Map a possibly out-of-range cell to (face, x, y, z); face -1 means in-domain."""
    ax, fx = _axis(x, nx, bc[0], bc[1])
    ay, fy = _axis(y, ny, bc[2], bc[3])
    az, fz = _axis(z, nz, bc[4], bc[5])
    if fx >= 0:
        return fx, ax, ay, az
    if fy >= 0:
        return 2 + fy, ax, ay, az
    if fz >= 0:
        return 4 + fz, ax, ay, az
    return -1, ax, ay, az


@njit(cache=True)
def neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc):
    face, ax, ay, az = resolve(x + dx, y + dy, z + dz, nx, ny, nz, bc)
    return face < 0, ax, ay, az


@njit(cache=True, inline="always")
def _source(x, y, z, i, inner, nx, ny, nz, bc):
    # upstream cell of direction i; cells away from the faces skip the boundary logic
    if inner:
        return -1, x - EX[i], y - EY[i], z - EZ[i]
    return resolve(x - EX[i], y - EY[i], z - EZ[i], nx, ny, nz, bc)


@njit(cache=True, inline="always")
def feq_i(i, rho, ux, uy, uz):
    eu = EX[i] * ux + EY[i] * uy + EZ[i] * uz
    uu = ux * ux + uy * uy + uz * uz
    return W[i] * rho * (1.0 + eu / CS2 + eu * eu / (2.0 * CS2 * CS2) - uu / (2.0 * CS2))


@njit(cache=True)
def _cell_velocity(f, x, y, z):
    rho = 0.0
    mx = 0.0
    my = 0.0
    mz = 0.0
    for i in range(19):
        fi = f[x, y, z, i]
        rho += fi
        mx += EX[i] * fi
        my += EY[i] * fi
        mz += EZ[i] * fi
    if rho > 0.0:
        return mx / rho, my / rho, mz / rho
    return 0.0, 0.0, 0.0


@njit(cache=True)
def stream_kernel(f, h, f_new, h_new, flags, normal, rho_air, bc, tbc, s_wall):
    """Pull streaming of f and h.

    f is streamed in LIQUID/INTERFACE cells only; SOLID cells keep f frozen.
    h is streamed in every non-gas cell. Links from GAS are reconstructed (f)
    or reflected adiabatically (h). Interface cells also rebuild links that
    arrive from the gas side of their normal.
    """
    nx, ny, nz = flags.shape
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                fl = flags[x, y, z]
                if fl == GAS:
                    continue
                inner = 0 < x < nx - 1 and 0 < y < ny - 1 and 0 < z < nz - 1
                fluid = fl != SOLID
                h_new[x, y, z, 0] = h[x, y, z, 0]
                f_new[x, y, z, 0] = f[x, y, z, 0]
                nxv = normal[x, y, z, 0]
                nyv = normal[x, y, z, 1]
                nzv = normal[x, y, z, 2]
                ra = rho_air[x, y, z]
                have_u = False
                ux = 0.0
                uy = 0.0
                uz = 0.0
                for i in range(1, 19):
                    oi = OPP[i]
                    face, sx, sy, sz = _source(x, y, z, i, inner, nx, ny, nz, bc)
                    if face >= 0:
                        if bc[face] == OUTFLOW:
                            h_new[x, y, z, i] = h[x, y, z, i]
                            f_new[x, y, z, i] = f[x, y, z, i]
                        else:
                            if tbc[face] == FIXED:
                                h_new[x, y, z, i] = -h[x, y, z, oi] + 2.0 * W[i] * s_wall[face]
                            else:
                                h_new[x, y, z, i] = h[x, y, z, oi]
                            f_new[x, y, z, i] = f[x, y, z, oi] if fluid else f[x, y, z, i]
                        continue
                    nf = flags[sx, sy, sz]
                    if nf == GAS:
                        h_new[x, y, z, i] = h[x, y, z, oi]
                    else:
                        h_new[x, y, z, i] = h[sx, sy, sz, i]
                    if not fluid:
                        f_new[x, y, z, i] = f[x, y, z, i]
                    elif nf == SOLID:
                        f_new[x, y, z, i] = f[x, y, z, oi]
                    elif nf == GAS or (fl == INTERFACE and EX[i] * nxv + EY[i] * nyv + EZ[i] * nzv < 0.0):
                        # from gas, or from the gas side of the interface normal
                        if not have_u:
                            ux, uy, uz = _cell_velocity(f, x, y, z)
                            have_u = True
                        f_new[x, y, z, i] = (
                            feq_i(i, ra, ux, uy, uz) + feq_i(oi, ra, ux, uy, uz) - f[x, y, z, oi]
                        )
                    else:
                        f_new[x, y, z, i] = f[sx, sy, sz, i]


@njit(cache=True)
def mass_exchange_kernel(f, flags, fill, bc, dmass):
    """Mass gained by each fluid cell over its links to fluid neighbours.

    Uses pre-stream pdfs. The link weight is 1 if either end is LIQUID and
    the mean fill level if both are INTERFACE, so every link contributes
    exactly opposite amounts to its two ends.
    """
    nx, ny, nz = flags.shape
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                inner = 0 < x < nx - 1 and 0 < y < ny - 1 and 0 < z < nz - 1
                fl = flags[x, y, z]
                if fl != LIQUID and fl != INTERFACE:
                    dmass[x, y, z] = 0.0
                    continue
                dm = 0.0
                for i in range(1, 19):
                    face, sx, sy, sz = _source(x, y, z, i, inner, nx, ny, nz, bc)
                    if face >= 0:
                        continue
                    nf = flags[sx, sy, sz]
                    if nf != LIQUID and nf != INTERFACE:
                        continue
                    if fl == LIQUID or nf == LIQUID:
                        s = 1.0
                    else:
                        s = 0.5 * (fill[x, y, z] + fill[sx, sy, sz])
                    dm += s * (f[sx, sy, sz, i] - f[x, y, z, OPP[i]])
                dmass[x, y, z] = dm


@njit(cache=True)
def collide_kernel(f, h, flags, eb, gx, gy, gz, omega_f, omega_h, E_s, E_l, latent,
                   rho_out, u_out, E_out, diverged):
    """BGK relaxation of f and h with gravity forcing and the beam source.

    Fluid cells relax f toward the second-order equilibrium and add the
    force term; h relaxes in every non-gas cell (u = 0 in SOLID). The h
    equilibrium is built on the sensible energy so the latent plateau does
    not diffuse when ``latent`` is true. Returns the number of diverged cells.
    """
    nx, ny, nz = flags.shape
    ndiv = 0
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                fl = flags[x, y, z]
                diverged[x, y, z] = 0
                if fl == GAS:
                    rho_out[x, y, z] = 0.0
                    u_out[x, y, z, 0] = 0.0
                    u_out[x, y, z, 1] = 0.0
                    u_out[x, y, z, 2] = 0.0
                    continue
                En = 0.0
                for i in range(19):
                    En += h[x, y, z, i]
                if latent:
                    if En <= E_s:
                        S = En
                    elif En < E_l:
                        S = E_s
                    else:
                        S = En - (E_l - E_s)
                else:
                    S = En
                src = eb[x, y, z]
                ux = 0.0
                uy = 0.0
                uz = 0.0
                rho = 0.0
                if fl == SOLID:
                    for i in range(19):
                        rho += f[x, y, z, i]
                else:
                    mx = 0.0
                    my = 0.0
                    mz = 0.0
                    for i in range(19):
                        fi = f[x, y, z, i]
                        rho += fi
                        mx += EX[i] * fi
                        my += EY[i] * fi
                        mz += EZ[i] * fi
                    if rho > 0.0:
                        ux = mx / rho
                        uy = my / rho
                        uz = mz / rho
                    ug = ux * gx + uy * gy + uz * gz
                    bad = False
                    for i in range(19):
                        eu = EX[i] * ux + EY[i] * uy + EZ[i] * uz
                        eg = EX[i] * gx + EY[i] * gy + EZ[i] * gz
                        force = W[i] * rho * ((eg - ug) / CS2 + eu * eg / (CS2 * CS2))
                        fi = f[x, y, z, i]
                        fi = fi + omega_f * (feq_i(i, rho, ux, uy, uz) - fi) + force
                        f[x, y, z, i] = fi
                        if not (fi >= NEG_TOL):
                            bad = True
                    speed2 = ux * ux + uy * uy + uz * uz
                    if bad or not (speed2 <= MAX_LATTICE_SPEED * MAX_LATTICE_SPEED):
                        diverged[x, y, z] = 1
                        ndiv += 1
                for i in range(19):
                    eu = EX[i] * ux + EY[i] * uy + EZ[i] * uz
                    heq = W[i] * S * (1.0 + eu / CS2)
                    if i == 0:
                        heq += En - S
                    h[x, y, z, i] = h[x, y, z, i] + omega_h * (heq - h[x, y, z, i]) + W[i] * src
                rho_out[x, y, z] = rho
                u_out[x, y, z, 0] = ux
                u_out[x, y, z, 1] = uy
                u_out[x, y, z, 2] = uz
                E_out[x, y, z] = En + src
    return ndiv


@njit(cache=True)
def energy_field_kernel(h, E_out):
    nx, ny, nz = E_out.shape
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                s = 0.0
                for i in range(19):
                    s += h[x, y, z, i]
                E_out[x, y, z] = s


@njit(cache=True)
def totals_kernel(flags, mass, E, u):
    """Serial reduction: (mass, energy, max |u|) over non-gas cells."""
    nx, ny, nz = flags.shape
    m = 0.0
    en = 0.0
    umax2 = 0.0
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if flags[x, y, z] == GAS:
                    continue
                m += mass[x, y, z]
                en += E[x, y, z]
                s = u[x, y, z, 0] ** 2 + u[x, y, z, 1] ** 2 + u[x, y, z, 2] ** 2
                if s > umax2:
                    umax2 = s
    return m, en, np.sqrt(umax2)


@njit(cache=True)
def column_tops(flags):
    """Index of the topmost non-gas cell per (x, y) column, -1 for empty columns."""
    nx, ny, nz = flags.shape
    top = np.full((nx, ny), -1, dtype=np.int64)
    for x in range(nx):
        for y in range(ny):
            for z in range(nz - 1, -1, -1):
                if flags[x, y, z] != GAS:
                    top[x, y] = z
                    break
    return top


@dataclass
class ForceInput:
    gravity: np.ndarray
    beam_energy: np.ndarray

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float)
        if np.any(self.beam_energy < 0):
            raise ValueError("beam energy must be non-negative")


def stream(grids, cells, normal, rho_air, bc, tbc, s_wall) -> None:
    """Stream into the scratch buffers and swap them in."""
    stream_kernel(grids.f, grids.h, grids.f_tmp, grids.h_tmp, cells.flags,
                  normal, rho_air, bc, tbc, s_wall)
    grids.swap()


def collide(grids, force: ForceInput, cells, tau_f, tau_h, E_s=0.0, E_l=0.0, latent=False,
            out=None) -> tuple[int, dict]:
    """Collide in place. Returns (diverged count, macro fields dict)."""
    shape = cells.flags.shape
    if out is None:
        out = {
            "rho": np.zeros(shape),
            "u": np.zeros(shape + (3,)),
            "E": np.zeros(shape),
            "diverged": np.zeros(shape, dtype=np.uint8),
        }
    g = force.gravity
    ndiv = collide_kernel(grids.f, grids.h, cells.flags, force.beam_energy,
                          float(g[0]), float(g[1]), float(g[2]), 1.0 / tau_f, 1.0 / tau_h,
                          float(E_s), float(E_l), bool(latent),
                          out["rho"], out["u"], out["E"], out["diverged"])
    return int(ndiv), out


def faces_array(codes) -> np.ndarray:
    bc = np.asarray(codes, dtype=np.int64)
    if bc.shape != (6,):
        raise ValueError("need six face codes (x_lo, x_hi, y_lo, y_hi, z_lo, z_hi)")
    for a in range(3):
        if (bc[2 * a] == PERIODIC) != (bc[2 * a + 1] == PERIODIC):
            raise ValueError("periodic faces must come in pairs")
    return bc

