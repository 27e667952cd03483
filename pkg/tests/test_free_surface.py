import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ebmlbm.free_surface import (
    GAS, INTERFACE, LIQUID, SOLID, closure_violations, compute_normals_and_curvature, convert_cells,
    exchange_mass,
)
from ebmlbm.kernels import PERIODIC, WALL, faces_array
from ebmlbm.lattice import LatticeConfig, equilibrium_f
from ebmlbm.phase_change import MaterialParams
from ebmlbm.solver import Simulation, SolverParams, initial_state

HOT = MaterialParams().melting_temperature + 500.0


def _pool(shape, level):
    """Liquid below ``level``, one interface layer at ``level`` with fill 0.5, gas above."""
    flags = np.full(shape, GAS, dtype=np.uint8)
    flags[:, :, :level] = LIQUID
    flags[:, :, level] = INTERFACE
    fill = np.where(flags == LIQUID, 1.0, 0.0)
    fill[:, :, level] = 0.5
    return flags, fill


def _random_surface(seed, shape=(8, 8, 10)):
    """Liquid blob with a bumpy top and random interface fills, closed by an interface layer."""
    rng = np.random.default_rng(seed)
    nx, ny, nz = shape
    h = rng.integers(3, nz - 3, size=(nx, ny))
    flags = np.full(shape, GAS, dtype=np.uint8)
    z = np.arange(nz)[None, None, :]
    flags[z < h[:, :, None]] = LIQUID
    liquid = flags == LIQUID
    # gas dilated over the 26-neighbourhood
    grow = flags == GAS
    for ax in range(3):
        grow = grow | np.roll(grow, 1, axis=ax) | np.roll(grow, -1, axis=ax)
    flags[liquid & grow] = INTERFACE
    fill = np.where(flags == LIQUID, 1.0, 0.0)
    iface = flags == INTERFACE
    fill[iface] = rng.uniform(0.05, 0.95, size=int(iface.sum()))
    return flags, fill


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_mass_exchange_sums_to_zero(seed):
    flags, fill = _random_surface(seed)
    cells, grids = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    rng = np.random.default_rng(seed)
    u = rng.uniform(-0.05, 0.05, size=flags.shape + (3,))
    grids.f[:] = equilibrium_f(rng.uniform(0.95, 1.05, flags.shape), u)
    bc = faces_array((PERIODIC,) * 6)
    before = cells.total_mass()
    d = exchange_mass(cells, grids, bc)
    assert abs(d.sum()) < 1e-12
    assert d[flags == GAS].max(initial=0.0) == 0.0
    assert cells.total_mass() == pytest.approx(before, abs=1e-11)


def test_exchange_is_antisymmetric_per_link():
    from ebmlbm.free_surface import link_exchange
    from ebmlbm.lattice import OPP, D3Q19

    flags, fill = _random_surface(3)
    cells, grids = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    rng = np.random.default_rng(3)
    grids.f[:] = equilibrium_f(np.ones(flags.shape), rng.uniform(-0.05, 0.05, size=flags.shape + (3,)))
    bc = faces_array((PERIODIC,) * 6)
    shape = np.array(flags.shape)
    for x in np.argwhere(flags == INTERFACE)[:20]:
        for i in range(1, 19):
            y = (x - D3Q19.velocities[i]) % shape
            if flags[tuple(y)] == GAS:
                continue
            a = link_exchange(cells, grids.f, bc, tuple(x), i)
            b = link_exchange(cells, grids.f, bc, tuple(y), OPP[i])
            assert a == pytest.approx(-b, abs=1e-15)


def test_closure_after_conversion():
    flags, fill = _random_surface(7)
    cells, grids = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    bc = faces_array((PERIODIC,) * 6)
    assert closure_violations(cells.flags, bc) == 0
    # overfill a few cells and drain others
    iface = np.argwhere(cells.flags == INTERFACE)
    for k, x in enumerate(iface[:12]):
        cells.mass[tuple(x)] = 1.2 if k % 2 else -0.05
    before = cells.total_mass()
    normal, _, _ = compute_normals_and_curvature(cells, bc)
    rep = convert_cells(cells, grids, normal, bc)
    assert rep.filled + rep.emptied > 0
    assert closure_violations(cells.flags, bc) == 0
    assert cells.total_mass() == pytest.approx(before, abs=1e-12)


def test_isolated_interface_cell_is_removed():
    shape = (6, 6, 6)
    flags = np.full(shape, GAS, dtype=np.uint8)
    flags[3, 3, 3] = INTERFACE
    fill = np.zeros(shape)
    fill[3, 3, 3] = 0.3
    cells, grids = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    bc = faces_array((WALL,) * 6)
    normal, _, _ = compute_normals_and_curvature(cells, bc)
    rep = convert_cells(cells, grids, normal, bc)
    assert rep.emptied == 1 and cells.flags[3, 3, 3] == GAS
    assert cells.excess == pytest.approx(0.3)
    assert cells.total_mass() == pytest.approx(0.3)


def test_flat_surface_normal_points_up():
    flags, fill = _pool((8, 8, 10), 5)
    cells, _ = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    bc = faces_array((PERIODIC, PERIODIC, PERIODIC, PERIODIC, WALL, WALL))
    normal, kappa, _ = compute_normals_and_curvature(cells, bc)
    assert np.allclose(normal[:, :, 5], [0.0, 0.0, 1.0])
    assert np.allclose(kappa[:, :, 5], 0.0)


def test_sphere_curvature_sign_and_size():
    n, R = 24, 7.0
    c = (n - 1) / 2
    x, y, z = np.meshgrid(*(np.arange(n),) * 3, indexing="ij")
    r = np.sqrt((x - c) ** 2 + (y - c) ** 2 + (z - c) ** 2)
    fill = np.clip(R + 0.5 - r, 0.0, 1.0)
    flags = np.where(fill >= 1.0, LIQUID, np.where(fill > 0, INTERFACE, GAS)).astype(np.uint8)
    cells, _ = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    normal, kappa, _ = compute_normals_and_curvature(cells, faces_array((PERIODIC,) * 6))
    k = kappa[flags == INTERFACE]
    assert np.median(k) == pytest.approx(2.0 / R, rel=0.25)


def test_resting_pool_keeps_mass_and_stays_still():
    shape = (6, 6, 12)
    flags, fill = _pool(shape, 6)
    cells, grids = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    lat = LatticeConfig(1.0, 1.0, shape, 0.8, 0.8)
    p = SolverParams(lat, MaterialParams(), faces=(PERIODIC, PERIODIC, PERIODIC, PERIODIC, WALL, WALL))
    sim = Simulation(p, cells, grids)
    m0 = cells.total_mass()
    sim.run(300)
    assert abs(cells.total_mass() - m0) / m0 < 1e-12
    assert np.abs(sim.macro["u"]).max() < 1e-12
    assert (cells.flags == SOLID).sum() == 0


def test_conversion_conserves_heat():
    flags, fill = _random_surface(11)
    cells, grids = initial_state(flags, MaterialParams(), fill=fill, T0=HOT)
    rng = np.random.default_rng(11)
    grids.h *= rng.uniform(0.9, 1.1, size=flags.shape)[..., None]
    bc = faces_array((PERIODIC,) * 6)
    iface = np.argwhere(cells.flags == INTERFACE)
    for k, x in enumerate(iface[:16]):
        cells.mass[tuple(x)] = 1.2 if k % 2 else -0.05

    def heat():
        return grids.h.sum(axis=-1)[cells.flags != GAS].sum() + cells.excess_heat

    before = heat()
    normal, _, _ = compute_normals_and_curvature(cells, bc)
    rep = convert_cells(cells, grids, normal, bc)
    assert rep.new_interface > 0 and rep.emptied > 0
    assert heat() == pytest.approx(before, rel=1e-13)
