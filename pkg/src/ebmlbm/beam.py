"""Electron beam: line energy, hatch scan path and surface energy deposition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

OFF_DOMAIN = None


@dataclass
class BeamParams:
    voltage: float = 60e3
    current: float = 10e-3
    scan_velocity: float = 1.0
    spot_sigma: float = 50e-6
    efficiency: float = 0.9

    def __post_init__(self):
        if self.scan_velocity <= 0:
            raise ValueError(f"scan velocity must be positive, got {self.scan_velocity}")
        if self.spot_sigma <= 0:
            raise ValueError("spot sigma must be positive")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("absorption efficiency must lie in (0, 1]")
        if self.voltage < 0 or self.current < 0:
            raise ValueError("voltage and current must be non-negative")

    @property
    def power(self) -> float:
        return self.voltage * self.current

    @classmethod
    def from_line_energy(cls, line_energy_J_m: float, scan_velocity: float, voltage: float = 60e3,
                         **kw) -> "BeamParams":
        """Beam delivering ``line_energy_J_m`` at ``scan_velocity`` (current derived from P = E_L v)."""
        if voltage <= 0:
            raise ValueError("voltage must be positive")
        return cls(voltage=voltage, current=line_energy_J_m * scan_velocity / voltage,
                   scan_velocity=scan_velocity, **kw)


def line_energy(p: BeamParams) -> float:
    """E_L = U I / v_scan in J/m."""
    if p.scan_velocity <= 0:
        raise ValueError("scan velocity must be positive")
    return p.voltage * p.current / p.scan_velocity


@dataclass
class ScanPath:
    """Ordered hatch lines in metres (x, y), plus the off-domain travel between lines."""

    lines: list[tuple[tuple[float, float], tuple[float, float]]]
    line_offset: float
    serpentine: bool = True
    beam_offset: float = 0.0
    _starts: list[float] = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        if self.beam_offset < 0:
            raise ValueError("beam offset must be non-negative")
        self.lines = [(tuple(map(float, a)), tuple(map(float, b))) for a, b in self.lines]
        acc = 0.0
        self._starts = []
        for k, (a, b) in enumerate(self.lines):
            self._starts.append(acc)
            acc += self.line_length(k) + self.beam_offset

    @classmethod
    def hatch(cls, n_lines: int, x_start: float, x_end: float, y_first: float, line_offset: float,
              serpentine: bool = True, beam_offset: float = 0.0) -> "ScanPath":
        lines = []
        for k in range(n_lines):
            y = y_first + k * line_offset
            if serpentine and k % 2 == 1:
                lines.append(((x_end, y), (x_start, y)))
            else:
                lines.append(((x_start, y), (x_end, y)))
        return cls(lines=lines, line_offset=line_offset, serpentine=serpentine, beam_offset=beam_offset)

    def line_length(self, k: int) -> float:
        (x0, y0), (x1, y1) = self.lines[k]
        return math.hypot(x1 - x0, y1 - y0)

    @property
    def length(self) -> float:
        """Arc length including the gaps between lines (not after the last one)."""
        if not self.lines:
            return 0.0
        return self._starts[-1] + self.line_length(len(self.lines) - 1)

    @property
    def on_domain_length(self) -> float:
        return sum(self.line_length(k) for k in range(len(self.lines)))

    def duration(self, p: BeamParams) -> float:
        return self.length / p.scan_velocity


def beam_state(path: ScanPath, p: BeamParams, t: float):
    """``(position | OFF_DOMAIN, line index or -1, finished)`` at time ``t``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    s = t * p.scan_velocity
    if not path.lines or s >= path.length:
        return OFF_DOMAIN, -1, True
    for k in range(len(path.lines) - 1, -1, -1):
        if s >= path._starts[k]:
            break
    d = s - path._starts[k]
    ell = path.line_length(k)
    if d >= ell:
        return OFF_DOMAIN, -1, False
    (x0, y0), (x1, y1) = path.lines[k]
    frac = d / ell if ell > 0 else 0.0
    return (x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)), k, False


def beam_position(path: ScanPath, p: BeamParams, t: float):
    return beam_state(path, p, t)[0]


@dataclass
class Deposit:
    cells: tuple[np.ndarray, np.ndarray, np.ndarray]
    energy: np.ndarray          # lattice energy density added per cell
    deposited: float            # J
    off_domain: float           # J
    transmitted: float          # J
    window: tuple[np.ndarray, np.ndarray] = None

    @property
    def total(self) -> float:
        return self.deposited + self.off_domain + self.transmitted

    def to_field(self, shape, out=None) -> np.ndarray:
        if out is None:
            out = np.zeros(shape)
        np.add.at(out, self.cells, self.energy)
        return out


def footprint_weights(position, sigma: float, dx: float):
    """Cell-integrated Gaussian weights over the columns within 3 sigma of the beam axis.

    Returns integer column indices (may fall outside the domain) and weights
    normalised over the whole window. The column holding the axis is always
    included, so a vanishing spot puts everything in one column.
    """
    bx, by = position
    r = 3.0 * sigma
    i0 = math.floor((bx - r) / dx - 0.5)
    i1 = math.ceil((bx + r) / dx - 0.5)
    j0 = math.floor((by - r) / dx - 0.5)
    j1 = math.ceil((by + r) / dx - 0.5)
    ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    cx = (ii + 0.5) * dx
    cy = (jj + 0.5) * dx
    keep = (cx - bx) ** 2 + (cy - by) ** 2 <= r * r
    keep |= (ii == math.floor(bx / dx)) & (jj == math.floor(by / dx))
    ii = ii[keep]
    jj = jj[keep]
    wx = ndtr(((ii + 1) * dx - bx) / sigma) - ndtr((ii * dx - bx) / sigma)
    wy = ndtr(((jj + 1) * dx - by) / sigma) - ndtr((jj * dx - by) / sigma)
    w = wx * wy
    tot = w.sum()
    if tot <= 0.0:
        w = ((ii == math.floor(bx / dx)) & (jj == math.floor(by / dx))).astype(float)
        tot = w.sum()
    return ii, jj, w / tot


def deposit(position, p: BeamParams, tops: np.ndarray, dt: float, dx: float, energy_scale: float) -> Deposit:
    """Spread ``eta P dt`` over the surface columns under the beam.

    ``tops[i, j]`` is the z index of the topmost non-gas cell of column
    (i, j), or -1 when the column is empty; the share of an empty column is
    reported as transmitted, the share of columns outside the domain as
    off-domain. ``energy_scale`` converts J/m^3 to lattice energy density.
    """
    q = p.efficiency * p.power * dt
    empty = (np.empty(0, dtype=np.int64),) * 3
    if position is OFF_DOMAIN:
        return Deposit(empty, np.empty(0), 0.0, q, 0.0)
    nx, ny = tops.shape
    ii, jj, w = footprint_weights(position, p.spot_sigma, dx)
    inside = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
    off = math.fsum(q * w[~inside])
    ii_in = ii[inside]
    jj_in = jj[inside]
    w_in = w[inside]
    zz = tops[ii_in, jj_in]
    hole = zz < 0
    transmitted = math.fsum(q * w_in[hole])
    hit = ~hole
    shares = q * w_in[hit]
    cells = (ii_in[hit].astype(np.int64), jj_in[hit].astype(np.int64), zz[hit].astype(np.int64))
    energy = shares / (dx**3 * energy_scale)
    return Deposit(cells, energy, math.fsum(shares), off, transmitted, window=(ii, jj))


@dataclass
class EnergyLedger:
    """Running beam energy accounts in joules."""

    deposited: list = field(default_factory=list)
    off_domain: list = field(default_factory=list)
    transmitted: list = field(default_factory=list)
    beam_time: float = 0.0
    beam_steps: int = 0

    def add(self, dep: Deposit, dt: float) -> None:
        self.deposited.append(dep.deposited)
        self.off_domain.append(dep.off_domain)
        self.transmitted.append(dep.transmitted)
        self.beam_steps += 1
        self.beam_time = self.beam_steps * dt

    def totals(self) -> tuple[float, float, float]:
        return math.fsum(self.deposited), math.fsum(self.off_domain), math.fsum(self.transmitted)
