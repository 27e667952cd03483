import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ebmlbm.benchmarks import stefan_lambda
from ebmlbm.free_surface import GAS, INTERFACE, LIQUID, SOLID
from ebmlbm.kernels import WALL, faces_array
from ebmlbm.lattice import W
from ebmlbm.phase_change import (
    MaterialParams, liquid_fraction, sensible_energy, temperature_of_energy, update_phase_state,
)
from ebmlbm.solver import initial_state

MAT = MaterialParams()


def test_temperature_map_pieces():
    Tm = MAT.melting_temperature
    assert temperature_of_energy(MAT.E_s, MAT) == Tm
    assert temperature_of_energy(MAT.E_s + 0.5 * MAT.latent_energy, MAT) == Tm
    assert temperature_of_energy(MAT.E_l + 0.1, MAT) == pytest.approx(Tm + 100.0)
    assert temperature_of_energy(MAT.E_s - 0.1, MAT) == pytest.approx(Tm - 100.0)
    assert temperature_of_energy(MAT.E_0, MAT) == pytest.approx(1000.0, abs=1e-9)


@given(st.floats(300.0, 9000.0))
def test_energy_temperature_round_trip(T):
    E = MAT.energy_of_temperature(T)
    assert temperature_of_energy(E, MAT) == pytest.approx(T, abs=1e-9)


@given(st.floats(-2.0, 5.0), st.floats(-2.0, 5.0))
def test_temperature_is_monotone(a, b):
    lo, hi = sorted((a, b))
    assert temperature_of_energy(lo, MAT) <= temperature_of_energy(hi, MAT)


@given(st.floats(-2.0, 5.0))
def test_liquid_fraction_bounds_and_sensible_energy(E):
    phi = float(liquid_fraction(E, MAT))
    assert 0.0 <= phi <= 1.0
    # the latent part is exactly phi * L
    assert float(sensible_energy(E, MAT)) + phi * MAT.latent_energy == pytest.approx(E, abs=1e-12)


@pytest.mark.parametrize("kw", [{"latent_energy": 0.0}, {"slope_solid": -1.0},
                                {"preheat_temperature": 3000.0}])
def test_invalid_material(kw):
    with pytest.raises(ValueError):
        MaterialParams(**kw)


def _column():
    flags = np.full((3, 3, 6), GAS, dtype=np.uint8)
    flags[:, :, :4] = SOLID
    return flags


def test_melting_and_freezing_flags():
    flags = _column()
    cells, grids = initial_state(flags, MAT)
    E = np.full(flags.shape, MAT.E_0)
    E[1, 1, 3] = MAT.E_l + 0.01      # surface cell touches gas
    E[1, 1, 1] = MAT.E_l              # buried cell
    h_before = grids.h.copy()
    rep = update_phase_state(cells, grids, E, MAT, faces_array((WALL,) * 6))
    assert rep.melted == 2
    assert cells.flags[1, 1, 3] == INTERFACE and cells.flags[1, 1, 1] == LIQUID
    assert np.allclose(grids.f[1, 1, 1], W * MAT.reference_density)
    assert np.array_equal(grids.h, h_before)
    E[1, 1, 1] = MAT.E_s
    rep = update_phase_state(cells, grids, E, MAT, faces_array((WALL,) * 6))
    assert rep.solidified == 1 and cells.flags[1, 1, 1] == SOLID
    # cells on the plateau keep their state
    E[1, 1, 3] = MAT.E_s + 0.2
    cells.flags[1, 1, 3] = LIQUID
    rep = update_phase_state(cells, grids, E, MAT, faces_array((WALL,) * 6))
    assert rep.melted == rep.solidified == 0


@pytest.mark.parametrize("St, lam", [(0.1, 0.2200163), (1.0, 0.6200626), (2.0, 0.8006014)])
def test_stefan_root(St, lam):
    # roots from an independent 30-digit solve
    assert stefan_lambda(St) == pytest.approx(lam, abs=1e-7)
    got = stefan_lambda(St)
    assert got * math.exp(got * got) * math.erf(got) == pytest.approx(St / math.sqrt(math.pi), rel=1e-12)
