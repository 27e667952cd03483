"""Volume-of-fluid free surface: fill levels, mass exchange, cell conversion.

The gas phase carries no dynamics. Interface cells track a mass ``m`` and a
fill level ``eps = m / rho``; the pdfs that would arrive from gas cells are
rebuilt from the equilibrium at the gas density plus the Laplace pressure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .kernels import (
    EX, EY, EZ, GAS, INTERFACE, LIQUID, OPP, PERIODIC, SOLID, W, feq_i, mass_exchange_kernel,
    neighbor_index,
)
from .lattice import CS2, equilibrium_f

DEGENERATE_GRAD = 1e-8
HYSTERESIS = 1e-3

__all__ = [
    "GAS", "INTERFACE", "LIQUID", "SOLID", "CellField", "ConversionReport",
    "compute_normals_and_curvature", "reconstruct_interface_pdfs", "exchange_mass",
    "convert_cells", "closure_violations", "laplace_gas_density",
]


@dataclass
class CellField:
    flags: np.ndarray
    fill: np.ndarray
    mass: np.ndarray
    excess: float = 0.0
    excess_heat: float = 0.0        # energy of emptied cells with no neighbour to take it

    @classmethod
    def empty(cls, shape) -> "CellField":
        return cls(np.zeros(shape, dtype=np.uint8), np.zeros(shape), np.zeros(shape))

    @property
    def shape(self):
        return self.flags.shape

    def total_mass(self) -> float:
        """Mass over non-gas cells plus the excess-mass ledger."""
        return float(np.sum(self.mass[self.flags != GAS])) + self.excess

    def copy(self) -> "CellField":
        return CellField(self.flags.copy(), self.fill.copy(), self.mass.copy(), self.excess, self.excess_heat)


@dataclass
class ConversionReport:
    filled: int
    emptied: int
    new_interface: int
    to_ledger: float
    heat_to_ledger: float = 0.0


@njit(cache=True)
def _smooth_axis(src, dst, axis, periodic):
    nx, ny, nz = src.shape
    n = src.shape[axis]
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                c = x if axis == 0 else (y if axis == 1 else z)
                lo = c - 1
                hi = c + 1
                if lo < 0:
                    lo = n - 1 if periodic else 0
                if hi >= n:
                    hi = 0 if periodic else n - 1
                if axis == 0:
                    dst[x, y, z] = 0.25 * src[lo, y, z] + 0.5 * src[x, y, z] + 0.25 * src[hi, y, z]
                elif axis == 1:
                    dst[x, y, z] = 0.25 * src[x, lo, z] + 0.5 * src[x, y, z] + 0.25 * src[x, hi, z]
                else:
                    dst[x, y, z] = 0.25 * src[x, y, lo] + 0.5 * src[x, y, z] + 0.25 * src[x, y, hi]


@njit(cache=True)
def _effective_fill(flags, fill, bc, out):
    # solid cells take the mean fill of their non-solid neighbours (neutral wetting)
    nx, ny, nz = flags.shape
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if flags[x, y, z] != SOLID:
                    out[x, y, z] = fill[x, y, z] if flags[x, y, z] != GAS else 0.0
                    continue
                s = 0.0
                k = 0
                inner = 0 < x < nx - 1 and 0 < y < ny - 1 and 0 < z < nz - 1
                for dx in range(-1, 2):
                    for dy in range(-1, 2):
                        for dz in range(-1, 2):
                            if inner:
                                ax = x + dx
                                ay = y + dy
                                az = z + dz
                            else:
                                ok, ax, ay, az = neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc)
                                if not ok:
                                    continue
                            fb = flags[ax, ay, az]
                            if fb != SOLID:
                                if fb != GAS:
                                    s += fill[ax, ay, az]
                                k += 1
                out[x, y, z] = s / k if k > 0 else 1.0


@njit(cache=True)
def _deriv(a, x, y, z, axis, periodic):
    n = a.shape[axis]
    c = x if axis == 0 else (y if axis == 1 else z)
    lo = c - 1
    hi = c + 1
    scale = 0.5
    if lo < 0:
        if periodic:
            lo = n - 1
        else:
            lo = c
            scale = 1.0
    if hi >= n:
        if periodic:
            hi = 0
        else:
            hi = c
            scale = 1.0
    if lo == hi:
        return 0.0
    if axis == 0:
        return scale * (a[hi, y, z] - a[lo, y, z])
    if axis == 1:
        return scale * (a[x, hi, z] - a[x, lo, z])
    return scale * (a[x, y, hi] - a[x, y, lo])


@njit(cache=True)
def _normals_kernel(flags, fill, smooth, bc, cos_t, sin_t, use_contact, normal, kappa, degenerate):
    nx, ny, nz = flags.shape
    px = bc[0] == PERIODIC
    py = bc[2] == PERIODIC
    pz = bc[4] == PERIODIC
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                gx = _deriv(smooth, x, y, z, 0, px)
                gy = _deriv(smooth, x, y, z, 1, py)
                gz = _deriv(smooth, x, y, z, 2, pz)
                g = np.sqrt(gx * gx + gy * gy + gz * gz)
                degenerate[x, y, z] = 0
                if g < 1e-8:
                    normal[x, y, z, 0] = 0.0
                    normal[x, y, z, 1] = 0.0
                    normal[x, y, z, 2] = 0.0
                    degenerate[x, y, z] = 1
                else:
                    normal[x, y, z, 0] = -gx / g
                    normal[x, y, z, 1] = -gy / g
                    normal[x, y, z, 2] = -gz / g
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if flags[x, y, z] != INTERFACE:
                    continue
                if degenerate[x, y, z]:
                    best = 0.0
                    bi = -1
                    for i in range(1, 19):
                        ok, ax, ay, az = neighbor_index(x, y, z, EX[i], EY[i], EZ[i], nx, ny, nz, bc)
                        if not ok:
                            continue
                        nf = fill[ax, ay, az] if flags[ax, ay, az] != GAS else 0.0
                        if flags[ax, ay, az] == SOLID:
                            continue
                        ln = np.sqrt(EX[i] * EX[i] + EY[i] * EY[i] + EZ[i] * EZ[i])
                        d = (fill[x, y, z] - nf) / ln
                        if d > best:
                            best = d
                            bi = i
                    if bi < 0:
                        normal[x, y, z, 0] = 0.0
                        normal[x, y, z, 1] = 0.0
                        normal[x, y, z, 2] = 1.0
                    else:
                        ln = np.sqrt(EX[bi] * EX[bi] + EY[bi] * EY[bi] + EZ[bi] * EZ[bi])
                        normal[x, y, z, 0] = EX[bi] / ln
                        normal[x, y, z, 1] = EY[bi] / ln
                        normal[x, y, z, 2] = EZ[bi] / ln
                if use_contact:
                    wx = 0.0
                    wy = 0.0
                    wz = 0.0
                    for i in range(1, 19):
                        ok, ax, ay, az = neighbor_index(x, y, z, EX[i], EY[i], EZ[i], nx, ny, nz, bc)
                        if ok and flags[ax, ay, az] == SOLID:
                            wx -= EX[i]
                            wy -= EY[i]
                            wz -= EZ[i]
                    wl = np.sqrt(wx * wx + wy * wy + wz * wz)
                    if wl > 0.0:
                        wx /= wl
                        wy /= wl
                        wz /= wl
                        n0 = normal[x, y, z, 0]
                        n1 = normal[x, y, z, 1]
                        n2 = normal[x, y, z, 2]
                        d = n0 * wx + n1 * wy + n2 * wz
                        tx = n0 - d * wx
                        ty = n1 - d * wy
                        tz = n2 - d * wz
                        tl = np.sqrt(tx * tx + ty * ty + tz * tz)
                        if tl > 1e-12:
                            normal[x, y, z, 0] = cos_t * wx + sin_t * tx / tl
                            normal[x, y, z, 1] = cos_t * wy + sin_t * ty / tl
                            normal[x, y, z, 2] = cos_t * wz + sin_t * tz / tl
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                kappa[x, y, z] = 0.0
                if flags[x, y, z] != INTERFACE:
                    continue
                k = (_deriv(normal[:, :, :, 0], x, y, z, 0, px) + _deriv(normal[:, :, :, 1], x, y, z, 1, py)
                     + _deriv(normal[:, :, :, 2], x, y, z, 2, pz))
                if k > 1.0:
                    k = 1.0
                elif k < -1.0:
                    k = -1.0
                kappa[x, y, z] = k


def compute_normals_and_curvature(cells: CellField, bc, contact_angle_deg: float = 90.0, work=None):
    """Interface normals (pointing into the gas) and curvature.

    The fill field is smoothed once with a separable (1, 2, 1)/4 kernel per
    axis; ``n = -grad(eps)/|grad(eps)|`` by central differences and the
    curvature is ``div(n)``, positive for a convex liquid body, clamped to
    one inverse cell width. Returns ``(normal, kappa, degenerate)``.
    """
    shape = cells.shape
    if work is None:
        work = {}
    a = work.setdefault("a", np.empty(shape))
    b = work.setdefault("b", np.empty(shape))
    normal = work.setdefault("normal", np.zeros(shape + (3,)))
    kappa = work.setdefault("kappa", np.zeros(shape))
    degenerate = work.setdefault("degenerate", np.zeros(shape, dtype=np.uint8))
    _effective_fill(cells.flags, cells.fill, bc, a)
    _smooth_axis(a, b, 0, bc[0] == PERIODIC)
    _smooth_axis(b, a, 1, bc[2] == PERIODIC)
    _smooth_axis(a, b, 2, bc[4] == PERIODIC)
    theta = np.deg2rad(contact_angle_deg)
    use_contact = abs(contact_angle_deg - 90.0) > 1e-12
    _normals_kernel(cells.flags, cells.fill, b, bc, float(np.cos(theta)), float(np.sin(theta)),
                    use_contact, normal, kappa, degenerate)
    return normal, kappa, degenerate


def laplace_gas_density(kappa, flags, gas_density: float, sigma: float, out=None):
    """Gas-side density imposed at interface cells: ambient plus sigma*kappa / c_s^2."""
    if out is None:
        out = np.empty(flags.shape)
    np.copyto(out, gas_density)
    mask = flags == INTERFACE
    out[mask] = gas_density + sigma * kappa[mask] / CS2
    return out


def reconstruct_interface_pdfs(f_cell, normal, gas_neighbors, rho_air: float):
    """Rebuild the incoming pdfs of one interface cell.

    ``f_cell`` holds the cell's 19 pre-stream pdfs, ``gas_neighbors[i]`` is
    true when the upstream cell ``x - e_i`` is gas. Every incoming direction
    whose upstream neighbour is gas, or which arrives from the gas side of
    ``normal``, is replaced by ``feq_i + feq_inv(i) - f_inv(i)`` at the gas
    density and the cell's own velocity. Returns the 19 incoming values; the
    entries not rebuilt are NaN (they come from ordinary streaming).
    """
    f_cell = np.asarray(f_cell, dtype=float)
    rho = f_cell.sum()
    u = (np.stack([EX, EY, EZ]).astype(float) @ f_cell) / rho if rho > 0 else np.zeros(3)
    normal = np.asarray(normal, dtype=float)
    if not np.all(np.isfinite(normal)) or np.linalg.norm(normal) < DEGENERATE_GRAD:
        normal = np.array([0.0, 0.0, 1.0])
    out = np.full(19, np.nan)
    out[0] = f_cell[0]
    for i in range(1, 19):
        e = np.array([EX[i], EY[i], EZ[i]])
        if gas_neighbors[i] or e @ normal < 0.0:
            oi = OPP[i]
            out[i] = feq_i(i, rho_air, *u) + feq_i(oi, rho_air, *u) - f_cell[oi]
    return out


def exchange_mass(cells: CellField, grids, bc, dmass=None) -> np.ndarray:
    """Apply the pre-stream mass exchange to all fluid cells; returns the per-cell delta."""
    if dmass is None:
        dmass = np.zeros(cells.shape)
    mass_exchange_kernel(grids.f, cells.flags, cells.fill, bc, dmass)
    cells.mass += dmass
    return dmass


def link_exchange(cells: CellField, f, bc, x, i) -> float:
    """Mass received by cell ``x`` over the single link arriving in direction ``i``."""
    nx, ny, nz = cells.shape
    ok, sx, sy, sz = neighbor_index(x[0], x[1], x[2], -EX[i], -EY[i], -EZ[i], nx, ny, nz, bc)
    fl = cells.flags[tuple(x)]
    if not ok or fl not in (LIQUID, INTERFACE):
        return 0.0
    nf = cells.flags[sx, sy, sz]
    if nf not in (LIQUID, INTERFACE):
        return 0.0
    s = 1.0 if (fl == LIQUID or nf == LIQUID) else 0.5 * (cells.fill[tuple(x)] + cells.fill[sx, sy, sz])
    return s * (f[sx, sy, sz, i] - f[x[0], x[1], x[2], OPP[i]])


@njit(cache=True)
def _convert_kernel(f, h, flags, fill, mass, normal, bc, delta):
    nx, ny, nz = flags.shape
    n = nx * ny * nz
    # 0 none, 1 to fill, 2 to empty
    mark = np.zeros((nx, ny, nz), dtype=np.uint8)
    rho = np.zeros((nx, ny, nz))
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if flags[x, y, z] != INTERFACE:
                    continue
                r = 0.0
                for i in range(19):
                    r += f[x, y, z, i]
                rho[x, y, z] = r
                # interface cells held by neither liquid nor solid drift off as empty shells
                # or sit cut off from any heat path; one without gas neighbours is no longer
                # on the surface
                has_fluid = False
                has_gas = False
                anchored = False
                for dx in range(-1, 2):
                    for dy in range(-1, 2):
                        for dz in range(-1, 2):
                            if dx == 0 and dy == 0 and dz == 0:
                                continue
                            ok, ax, ay, az = neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc)
                            if not ok:
                                continue
                            fb = flags[ax, ay, az]
                            if fb == GAS:
                                has_gas = True
                            elif fb != SOLID:
                                has_fluid = True
                            # solid only holds a cell it shares a lattice link with (heat has to leave)
                            if fb == LIQUID or (fb == SOLID and (dx == 0 or dy == 0 or dz == 0)):
                                anchored = True
                if mass[x, y, z] > (1.0 + delta) * r or (not has_gas and has_fluid):
                    mark[x, y, z] = 1
                elif mass[x, y, z] < -delta * r or not anchored:
                    mark[x, y, z] = 2
    filled = 0
    emptied = 0
    new_if = 0
    # fills first, in lexicographic order
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if mark[x, y, z] != 1:
                    continue
                for dx in range(-1, 2):
                    for dy in range(-1, 2):
                        for dz in range(-1, 2):
                            if dx == 0 and dy == 0 and dz == 0:
                                continue
                            ok, ax, ay, az = neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc)
                            if not ok:
                                continue
                            if mark[ax, ay, az] == 2:
                                mark[ax, ay, az] = 0
                            if flags[ax, ay, az] != GAS:
                                continue
                            # new interface cell at the local average state
                            sr = 0.0
                            sE = 0.0
                            su0 = 0.0
                            su1 = 0.0
                            su2 = 0.0
                            k = 0
                            for ex in range(-1, 2):
                                for ey in range(-1, 2):
                                    for ez in range(-1, 2):
                                        ok2, bx, by, bz = neighbor_index(ax, ay, az, ex, ey, ez, nx, ny, nz, bc)
                                        if not ok2:
                                            continue
                                        fb = flags[bx, by, bz]
                                        if fb != LIQUID and fb != INTERFACE:
                                            continue
                                        if fb == INTERFACE and mark[bx, by, bz] == 3:
                                            continue
                                        r = 0.0
                                        m0 = 0.0
                                        m1 = 0.0
                                        m2 = 0.0
                                        en = 0.0
                                        for i in range(19):
                                            fi = f[bx, by, bz, i]
                                            r += fi
                                            m0 += EX[i] * fi
                                            m1 += EY[i] * fi
                                            m2 += EZ[i] * fi
                                            en += h[bx, by, bz, i]
                                        sr += r
                                        sE += en
                                        if r > 0.0:
                                            su0 += m0 / r
                                            su1 += m1 / r
                                            su2 += m2 / r
                                        k += 1
                            if k > 0:
                                ra = sr / k
                                ea = sE / k
                                u0 = su0 / k
                                u1 = su1 / k
                                u2 = su2 / k
                            else:
                                ra = 1.0
                                ea = 0.0
                                u0 = 0.0
                                u1 = 0.0
                                u2 = 0.0
                            # the donors pay for the new cell's heat so energy is conserved
                            if k > 0:
                                share = ea / k
                                for ex in range(-1, 2):
                                    for ey in range(-1, 2):
                                        for ez in range(-1, 2):
                                            ok2, bx, by, bz = neighbor_index(ax, ay, az, ex, ey, ez,
                                                                             nx, ny, nz, bc)
                                            if not ok2:
                                                continue
                                            fb = flags[bx, by, bz]
                                            if fb != LIQUID and fb != INTERFACE:
                                                continue
                                            if fb == INTERFACE and mark[bx, by, bz] == 3:
                                                continue
                                            for i in range(19):
                                                h[bx, by, bz, i] -= W[i] * share
                            for i in range(19):
                                f[ax, ay, az, i] = feq_i(i, ra, u0, u1, u2)
                                eu = EX[i] * u0 + EY[i] * u1 + EZ[i] * u2
                                h[ax, ay, az, i] = W[i] * ea * (1.0 + 3.0 * eu)
                            flags[ax, ay, az] = INTERFACE
                            mark[ax, ay, az] = 3
                            mass[ax, ay, az] = 0.0
                            fill[ax, ay, az] = 0.0
                            rho[ax, ay, az] = ra
                            new_if += 1
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if mark[x, y, z] != 2:
                    continue
                for dx in range(-1, 2):
                    for dy in range(-1, 2):
                        for dz in range(-1, 2):
                            if dx == 0 and dy == 0 and dz == 0:
                                continue
                            ok, ax, ay, az = neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc)
                            if ok and flags[ax, ay, az] == LIQUID:
                                flags[ax, ay, az] = INTERFACE
                                r = 0.0
                                for i in range(19):
                                    r += f[ax, ay, az, i]
                                rho[ax, ay, az] = r
                                mark[ax, ay, az] = 4
    # distribute excess mass of converting cells
    ledger = 0.0
    heat = 0.0
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                mk = mark[x, y, z]
                if mk != 1 and mk != 2:
                    continue
                if mk == 1:
                    ex_m = mass[x, y, z] - rho[x, y, z]
                    mass[x, y, z] = rho[x, y, z]
                    sgn = 1.0
                else:
                    ex_m = mass[x, y, z]
                    mass[x, y, z] = 0.0
                    sgn = -1.0
                n0 = normal[x, y, z, 0]
                n1 = normal[x, y, z, 1]
                n2 = normal[x, y, z, 2]
                wsum = 0.0
                cnt = 0
                for i in range(1, 19):
                    ok, ax, ay, az = neighbor_index(x, y, z, EX[i], EY[i], EZ[i], nx, ny, nz, bc)
                    if not ok or flags[ax, ay, az] != INTERFACE:
                        continue
                    if mark[ax, ay, az] == 1 or mark[ax, ay, az] == 2:
                        continue
                    cnt += 1
                    wv = sgn * (n0 * EX[i] + n1 * EY[i] + n2 * EZ[i])
                    if wv > 0.0:
                        wsum += wv
                if cnt == 0:
                    ledger += ex_m
                    continue
                given = 0.0
                seen = 0
                for i in range(1, 19):
                    ok, ax, ay, az = neighbor_index(x, y, z, EX[i], EY[i], EZ[i], nx, ny, nz, bc)
                    if not ok or flags[ax, ay, az] != INTERFACE:
                        continue
                    if mark[ax, ay, az] == 1 or mark[ax, ay, az] == 2:
                        continue
                    seen += 1
                    if wsum > 0.0:
                        wv = sgn * (n0 * EX[i] + n1 * EY[i] + n2 * EZ[i])
                        if wv <= 0.0:
                            continue
                        share = ex_m * wv / wsum
                    else:
                        share = ex_m / cnt
                    last = True
                    # the final recipient takes the remainder so the sum is exact
                    for j in range(i + 1, 19):
                        ok2, bx, by, bz = neighbor_index(x, y, z, EX[j], EY[j], EZ[j], nx, ny, nz, bc)
                        if not ok2 or flags[bx, by, bz] != INTERFACE:
                            continue
                        if mark[bx, by, bz] == 1 or mark[bx, by, bz] == 2:
                            continue
                        if wsum > 0.0 and sgn * (n0 * EX[j] + n1 * EY[j] + n2 * EZ[j]) <= 0.0:
                            continue
                        last = False
                        break
                    if last:
                        share = ex_m - given
                    mass[ax, ay, az] += share
                    given += share
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                mk = mark[x, y, z]
                if mk == 1:
                    flags[x, y, z] = LIQUID
                    fill[x, y, z] = 1.0
                    filled += 1
                elif mk == 2:
                    # the heat of an emptied cell goes to its remaining neighbours
                    e_c = 0.0
                    for i in range(19):
                        e_c += h[x, y, z, i]
                        h[x, y, z, i] = 0.0
                    cnt = 0
                    for i in range(1, 19):
                        ok, ax, ay, az = neighbor_index(x, y, z, EX[i], EY[i], EZ[i], nx, ny, nz, bc)
                        if ok and flags[ax, ay, az] != GAS and mark[ax, ay, az] != 2:
                            cnt += 1
                    if cnt == 0:
                        heat += e_c
                    else:
                        for i in range(1, 19):
                            ok, ax, ay, az = neighbor_index(x, y, z, EX[i], EY[i], EZ[i], nx, ny, nz, bc)
                            if ok and flags[ax, ay, az] != GAS and mark[ax, ay, az] != 2:
                                for j in range(19):
                                    h[ax, ay, az, j] += W[j] * e_c / cnt
                    flags[x, y, z] = GAS
                    fill[x, y, z] = 0.0
                    mass[x, y, z] = 0.0
                    emptied += 1
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if flags[x, y, z] == INTERFACE:
                    r = rho[x, y, z]
                    e = mass[x, y, z] / r if r > 0.0 else 0.0
                    if e < 0.0:
                        e = 0.0
                    elif e > 1.0:
                        e = 1.0
                    fill[x, y, z] = e
    return filled, emptied, new_if, ledger, heat


def convert_cells(cells: CellField, grids, normal, bc, delta: float = HYSTERESIS) -> ConversionReport:
    """Convert over/under-filled interface cells and keep the interface layer closed.

    Interface cells with ``m > (1 + delta) rho`` become LIQUID and their gas
    neighbours become INTERFACE (pdfs at the neighbours' average state);
    cells with ``m < -delta rho`` become GAS and expose their LIQUID
    neighbours as INTERFACE. Excess or missing mass goes to the neighbouring
    interface cells along (filling) or against (emptying) the normal, or to
    the excess ledger when there is no recipient. Also refreshes the fill
    level of every interface cell.

    Interface cells with no liquid cell around them and no solid cell on a lattice link are emptied,
    and those with no gas around them are filled. Heat follows the cells:
    a new interface cell takes its energy from the cells it was averaged
    over, and an emptied cell hands its energy to its non-gas neighbours.
    """
    filled, emptied, new_if, ledger, heat = _convert_kernel(
        grids.f, grids.h, cells.flags, cells.fill, cells.mass, normal, bc, delta
    )
    cells.excess += ledger
    cells.excess_heat += heat
    return ConversionReport(int(filled), int(emptied), int(new_if), float(ledger), float(heat))


def closure_violations(flags: np.ndarray, bc) -> int:
    """Number of LIQUID cells with a GAS cell in their 26-neighbourhood."""
    return int(_closure_kernel(flags, bc))


@njit(cache=True)
def _closure_kernel(flags, bc):
    nx, ny, nz = flags.shape
    bad = 0
    for x in range(nx):
        for y in range(ny):
            for z in range(nz):
                if flags[x, y, z] != LIQUID:
                    continue
                hit = False
                for dx in range(-1, 2):
                    for dy in range(-1, 2):
                        for dz in range(-1, 2):
                            ok, ax, ay, az = neighbor_index(x, y, z, dx, dy, dz, nx, ny, nz, bc)
                            if ok and flags[ax, ay, az] == GAS:
                                hit = True
                if hit:
                    bad += 1
    return bad


def equilibrium_cells(rho, u=None):
    """Equilibrium pdfs for a scalar or field density at velocity ``u`` (default rest)."""
    rho = np.asarray(rho, dtype=float)
    if u is None:
        u = np.zeros(rho.shape + (3,))
    return equilibrium_f(rho, u)
