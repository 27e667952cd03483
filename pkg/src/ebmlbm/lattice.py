"""D3Q19 stencil, unit conversion and macroscopic moments.

Direction ordering (fixed, used by every kernel and output file)::

    0        rest
    1, 2     +x, -x
    3, 4     +y, -y
    5, 6     +z, -z
    7..10    (+1,+1,0) (-1,-1,0) (+1,-1,0) (-1,+1,0)
    11..14   (+1,0,+1) (-1,0,-1) (+1,0,-1) (-1,0,+1)
    15..18   (0,+1,+1) (0,-1,-1) (0,+1,-1) (0,-1,+1)

Opposite directions are adjacent pairs, so ``inv(i) = i + 1`` for odd ``i``
and ``i - 1`` for even ``i > 0``.

Pdf arrays are laid out as ``(nx, ny, nz, 19)`` (directions last, so one
cell's pdfs are contiguous); vector fields as ``(nx, ny, nz, 3)``. Everything here works in lattice units (``dx = dt = 1``,
``c_s^2 = 1/3``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

Q = 19
CS2 = 1.0 / 3.0
# low-Mach guard for the second-order equilibrium
MAX_LATTICE_SPEED = 0.3

_VELOCITIES = (
    (0, 0, 0),
    (1, 0, 0), (-1, 0, 0),
    (0, 1, 0), (0, -1, 0),
    (0, 0, 1), (0, 0, -1),
    (1, 1, 0), (-1, -1, 0), (1, -1, 0), (-1, 1, 0),
    (1, 0, 1), (-1, 0, -1), (1, 0, -1), (-1, 0, 1),
    (0, 1, 1), (0, -1, -1), (0, 1, -1), (0, -1, 1),
)


def _exact_weight(e: tuple[int, int, int]) -> Fraction:
    n = sum(abs(c) for c in e)
    return {0: Fraction(1, 3), 1: Fraction(1, 18), 2: Fraction(1, 36)}[n]


@dataclass(frozen=True)
class Stencil:
    """Discrete velocity set with weights and the opposite-direction map."""

    velocities: np.ndarray
    weights: np.ndarray
    opposite: np.ndarray
    exact_weights: tuple[Fraction, ...] = field(repr=False)

    @property
    def q(self) -> int:
        return len(self.weights)


def _build_d3q19() -> Stencil:
    e = np.array(_VELOCITIES, dtype=np.int64)
    exact = tuple(_exact_weight(v) for v in _VELOCITIES)
    opp = np.array([_VELOCITIES.index(tuple(-c for c in v)) for v in _VELOCITIES], dtype=np.int64)
    e.setflags(write=False)
    opp.setflags(write=False)
    w = np.array([float(x) for x in exact])
    w.setflags(write=False)
    return Stencil(velocities=e, weights=w, opposite=opp, exact_weights=exact)


D3Q19 = _build_d3q19()
E = D3Q19.velocities
W = D3Q19.weights
OPP = D3Q19.opposite


@dataclass
class LatticeConfig:
    """Discretisation parameters. Physical units: metres, seconds."""

    dx: float
    dt: float
    shape: tuple[int, int, int]
    tau_f: float
    tau_h: float
    gravity: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        self.shape = tuple(int(n) for n in self.shape)
        self.gravity = tuple(float(g) for g in self.gravity)
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("dx and dt must be positive")
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise ValueError(f"grid extents must be three positive integers, got {self.shape}")
        for name in ("tau_f", "tau_h"):
            if getattr(self, name) <= 0.5:
                raise ValueError(
                    f"{name} = {getattr(self, name)} violates the stability bound {name} > 0.5 "
                    "(transport coefficient would be non-positive)"
                )

    @property
    def cs2(self) -> float:
        """Physical speed of sound squared, dx^2 / (3 dt^2)."""
        return self.dx**2 / (3.0 * self.dt**2)

    @property
    def gravity_lattice(self) -> np.ndarray:
        return np.asarray(self.gravity) * self.dt**2 / self.dx

    def velocity_to_lattice(self, v: float) -> float:
        return v * self.dt / self.dx


def transport_coefficients(cfg: LatticeConfig) -> tuple[float, float]:
    """Kinematic viscosity and thermal diffusivity in m^2/s."""
    for tau in (cfg.tau_f, cfg.tau_h):
        if tau <= 0.5:
            raise ValueError(f"relaxation time {tau} <= 0.5 gives a non-positive transport coefficient")
    cs2 = cfg.cs2
    return cs2 * cfg.dt * (cfg.tau_f - 0.5), cs2 * cfg.dt * (cfg.tau_h - 0.5)


@dataclass
class PdfGrids:
    """Double-buffered f and h fields; stream reads ``f``/``h`` and writes the scratch pair."""

    f: np.ndarray
    h: np.ndarray
    f_tmp: np.ndarray
    h_tmp: np.ndarray

    @classmethod
    def empty(cls, shape: tuple[int, int, int]) -> "PdfGrids":
        full = tuple(shape) + (Q,)
        return cls(*(np.zeros(full) for _ in range(4)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.f.shape[:-1]

    def swap(self) -> None:
        self.f, self.f_tmp = self.f_tmp, self.f
        self.h, self.h_tmp = self.h_tmp, self.h

    def copy(self) -> "PdfGrids":
        return PdfGrids(self.f.copy(), self.h.copy(), self.f_tmp.copy(), self.h_tmp.copy())


@dataclass
class MacroFields:
    rho: np.ndarray
    u: np.ndarray
    E: np.ndarray
    T: np.ndarray | None = None


def moments(f: np.ndarray, h: np.ndarray) -> MacroFields:
    """Density, velocity and energy density of pdf arrays shaped ``(..., 19)``.

    Velocity is set to zero where the density vanishes.
    """
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    rho = f.sum(axis=-1)
    mom = f @ E.astype(float)
    safe = np.where(rho != 0, rho, 1.0)[..., None]
    u = np.where((rho != 0)[..., None], mom / safe, 0.0)
    return MacroFields(rho=rho, u=u, E=h.sum(axis=-1))


def equilibrium_f(rho, u) -> np.ndarray:
    """Second-order Maxwellian truncation; ``u`` has shape ``(..., 3)``."""
    rho = np.asarray(rho, dtype=float)[..., None]
    u = np.asarray(u, dtype=float)
    eu = u @ E.T.astype(float)
    uu = np.sum(u * u, axis=-1)[..., None]
    return W * rho * (1.0 + eu / CS2 + eu**2 / (2.0 * CS2**2) - uu / (2.0 * CS2))


def equilibrium_h(E_density, u) -> np.ndarray:
    """Linear equilibrium for the energy distribution."""
    E_density = np.asarray(E_density, dtype=float)[..., None]
    u = np.asarray(u, dtype=float)
    return W * E_density * (1.0 + (u @ E.T.astype(float)) / CS2)
