"""Run configuration: a flat ``[section]`` / ``key = value`` text format with SI unit suffixes.

Example::

    preset = fig5_scenario

    [sweep]
    velocities_m_s = 3.2 6.4
    line_energies_kJ_m = 0.1 0.2 0.3

Keys carry their unit in the suffix (``dx_m``, ``dt_s``, ``preheat_temperature_K``).
A value may repeat that unit (``dx_m = 5e-6 m``) but any other unit is rejected.
Errors raise :class:`ConfigError` with the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

from .beam import BeamParams
from .kernels import ADIABATIC, BOUNDARY_CODES, FIXED, OUTFLOW, PERIODIC, THERMAL_CODES, WALL
from .lattice import LatticeConfig
from .phase_change import MaterialParams
from .powder import PowderSpec
from .process_window import Scenario, SweepGrid
from .solver import SolverParams

FACES = ("x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi")


class ConfigError(ValueError):
    pass


@dataclass
class Key:
    kind: str            # float | int | bool | str | floats | ints | face | thermal
    unit: str = ""
    positive: bool = False
    nonneg: bool = False
    length: int | None = None


# (section, key) -> Key
SCHEMA: dict[tuple[str, str], Key] = {
    ("lattice", "dx_m"): Key("float", "m", positive=True),
    ("lattice", "dt_s"): Key("float", "s", positive=True),
    ("lattice", "shape_cells"): Key("ints", "cells", positive=True, length=3),
    ("lattice", "tau_f"): Key("float"),
    ("lattice", "tau_h"): Key("float"),
    ("lattice", "gravity_m_s2"): Key("floats", "m/s2", length=3),
    ("material", "melting_temperature_K"): Key("float", "K", positive=True),
    ("material", "preheat_temperature_K"): Key("float", "K", positive=True),
    ("material", "solidus_energy"): Key("float"),
    ("material", "latent_energy"): Key("float", positive=True),
    ("material", "slope_solid_K"): Key("float", "K", positive=True),
    ("material", "slope_liquid_K"): Key("float", "K", positive=True),
    ("material", "reference_density"): Key("float", positive=True),
    ("material", "volumetric_heat_capacity_J_m3K"): Key("float", "J/m3K", positive=True),
    ("material", "density_kg_m3"): Key("float", "kg/m3", positive=True),
    ("beam", "voltage_V"): Key("float", "V", positive=True),
    ("beam", "spot_sigma_m"): Key("float", "m", positive=True),
    ("beam", "efficiency"): Key("float", positive=True),
    ("beam", "beam_offset_m"): Key("float", "m", nonneg=True),
    ("scan", "n_lines"): Key("int", positive=True),
    ("scan", "line_offset_m"): Key("float", "m", positive=True),
    ("scan", "serpentine"): Key("bool"),
    ("powder", "layer_thickness_m"): Key("float", "m", nonneg=True),
    ("powder", "mean_diameter_m"): Key("float", "m", positive=True),
    ("powder", "shape_diameter_m"): Key("float", "m", positive=True),
    ("powder", "d_min_m"): Key("float", "m", positive=True),
    ("powder", "d_max_m"): Key("float", "m", positive=True),
    ("powder", "packing_fraction"): Key("float", nonneg=True),
    ("powder", "substrate_cells"): Key("int", "cells", positive=True),
    ("powder", "max_attempts"): Key("int", positive=True),
    ("powder", "bed_file"): Key("str"),
    ("free_surface", "surface_tension"): Key("float", nonneg=True),
    ("free_surface", "gas_density"): Key("float", positive=True),
    ("free_surface", "contact_angle_deg"): Key("float", "deg", positive=True),
    ("free_surface", "conversion_delta"): Key("float", nonneg=True),
    ("boundary", "wall_temperature_K"): Key("float", "K", positive=True),
    ("sweep", "velocities_m_s"): Key("floats", "m/s", positive=True),
    ("sweep", "line_energies_kJ_m"): Key("floats", "kJ/m", positive=True),
    ("sweep", "density_margin_m"): Key("float", "m", nonneg=True),
    ("sweep", "density_margin_x_m"): Key("float", "m", nonneg=True),
    ("sweep", "percentile"): Key("float", positive=True),
    ("sweep", "max_cooldown_steps"): Key("int", positive=True),
    ("sweep", "workers"): Key("int", positive=True),
    ("run", "line_energy_kJ_m"): Key("float", "kJ/m", positive=True),
    ("run", "scan_velocity_m_s"): Key("float", "m/s", positive=True),
    ("run", "max_steps"): Key("int", positive=True),
    ("run", "seed"): Key("int", nonneg=True),
    ("output", "snapshot_every_steps"): Key("int", positive=True),
    ("output", "directory"): Key("str"),
}
for _f in FACES:
    SCHEMA[("boundary", _f)] = Key("face")
    SCHEMA[("boundary", "thermal_" + _f)] = Key("thermal")

REQUIRED = (("lattice", "dx_m"), ("lattice", "dt_s"), ("lattice", "shape_cells"),
            ("lattice", "tau_f"), ("lattice", "tau_h"))

PRESETS: dict[str, dict[tuple[str, str], str]] = {
    # full-scale single-layer hatch scenario
    "fig5_scenario": {
        ("lattice", "dx_m"): "5e-6",
        ("lattice", "dt_s"): "1.75e-7",
        ("lattice", "shape_cells"): "288 128 48",
        ("lattice", "tau_f"): "0.6",
        ("lattice", "tau_h"): "1.0",
        ("material", "preheat_temperature_K"): "1000",
        ("beam", "beam_offset_m"): "13.56e-3",
        ("scan", "n_lines"): "7",
        ("scan", "line_offset_m"): "100e-6",
        ("powder", "layer_thickness_m"): "50e-6",
        ("sweep", "velocities_m_s"): "0.8 1.6 2.4 3.2 4.0 4.8 5.6 6.4",
        ("sweep", "line_energies_kJ_m"): "0.1 0.15 0.2 0.25 0.3 0.35 0.4 0.45 0.5",
        ("run", "line_energy_kJ_m"): "0.2",
        ("run", "scan_velocity_m_s"): "3.2",
    },
    # single hatch line on a small bed with synthetic material constants
    "desk": {
        ("lattice", "dx_m"): "5e-6",
        ("lattice", "dt_s"): "1.75e-7",
        ("lattice", "shape_cells"): "128 64 48",
        ("lattice", "tau_f"): "0.6",
        ("lattice", "tau_h"): "1.0",
        ("material", "preheat_temperature_K"): "1000",
        ("material", "latent_energy"): "0.1",
        ("beam", "beam_offset_m"): "0",
        ("scan", "n_lines"): "1",
        ("scan", "line_offset_m"): "100e-6",
        ("powder", "layer_thickness_m"): "50e-6",
        ("boundary", "thermal_z_lo"): "fixed",
        ("sweep", "velocities_m_s"): "3.2 6.4",
        ("sweep", "line_energies_kJ_m"): "0.03 0.08 0.15",
        ("sweep", "density_margin_m"): "25e-6",
        ("sweep", "density_margin_x_m"): "150e-6",
    },
}

_UNIT_ALIASES = {"m/s2": {"m/s^2", "m/s2"}, "J/m3K": {"J/m3K", "J/(m3K)", "J/m^3/K"}}


@dataclass
class RunConfig:
    lattice: LatticeConfig
    material: MaterialParams = field(default_factory=MaterialParams)
    beam: BeamParams = field(default_factory=BeamParams)
    beam_offset: float = 0.0
    n_lines: int = 7
    line_offset: float = 100e-6
    serpentine: bool = True
    powder: PowderSpec = field(default_factory=PowderSpec)
    bed_file: str | None = None
    sweep: SweepGrid | None = None
    density_margin: float | None = None
    density_margin_x: float | None = None
    percentile: float = 99.0
    max_cooldown_steps: int = 20000
    workers: int = 1
    faces: tuple = (WALL,) * 6
    thermal_faces: tuple = (ADIABATIC,) * 6
    wall_temperature: float | None = None
    surface_tension: float = 1e-3
    gas_density: float = 1.0
    contact_angle_deg: float = 90.0
    conversion_delta: float = 1e-3
    line_energy_kJ_m: float | None = None
    scan_velocity: float | None = None
    max_steps: int | None = None
    seed: int = 0
    snapshot_every: int = 1000
    output_dir: str = "out"
    values: dict = field(default_factory=dict, repr=False)     # raw text per (section, key)

    def __post_init__(self):
        if self.snapshot_every < 1:
            raise ValueError("snapshot cadence must be at least one step")

    def solver_params(self) -> SolverParams:
        return SolverParams(
            lattice=self.lattice, material=self.material, surface_tension=self.surface_tension,
            gas_density=self.gas_density, contact_angle_deg=self.contact_angle_deg, faces=self.faces,
            thermal_faces=self.thermal_faces, wall_temperature=self.wall_temperature,
            conversion_delta=self.conversion_delta,
        )

    def scenario(self) -> Scenario:
        return Scenario(
            solver=self.solver_params(), beam=self.beam, n_lines=self.n_lines, line_offset=self.line_offset,
            beam_offset=self.beam_offset, serpentine=self.serpentine, powder=self.powder,
            density_margin=self.density_margin, density_margin_x=self.density_margin_x,
            percentile=self.percentile, max_cooldown_steps=self.max_cooldown_steps,
        )

    def provenance(self) -> list[str]:
        """One ``section.key = value`` line per configured value, sorted."""
        return [f"{s}.{k} = {v}" for (s, k), v in sorted(self.values.items())]


def _strip_comment(line: str) -> str:
    for mark in ("#", ";"):
        i = line.find(mark)
        if i >= 0:
            line = line[:i]
    return line.strip()


def _parse_scalar(text: str, spec: Key, where: str):
    parts = text.split()
    if spec.kind in ("float", "int") and len(parts) == 2:
        unit = parts[1]
        allowed = _UNIT_ALIASES.get(spec.unit, {spec.unit})
        if not spec.unit or unit not in allowed:
            raise ConfigError(f"{where}: unit violation, '{unit}' given but the key expects "
                              f"{spec.unit or 'a dimensionless value'}")
        parts = parts[:1]
    if spec.kind == "str":
        return text
    if spec.kind == "bool":
        t = text.lower()
        if t in ("true", "yes", "1", "on"):
            return True
        if t in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got '{text}'")
    if spec.kind == "face":
        if text.lower() not in BOUNDARY_CODES:
            raise ConfigError(f"{where}: face rule must be one of {sorted(BOUNDARY_CODES)}")
        return BOUNDARY_CODES[text.lower()]
    if spec.kind == "thermal":
        if text.lower() not in THERMAL_CODES:
            raise ConfigError(f"{where}: thermal rule must be one of {sorted(THERMAL_CODES)}")
        return THERMAL_CODES[text.lower()]
    conv = int if spec.kind in ("int", "ints") else float
    if spec.kind in ("float", "int") and len(parts) != 1:
        raise ConfigError(f"{where}: expected one number, got '{text}'")
    try:
        vals = [conv(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{where}: cannot read '{text}' as {spec.kind}") from None
    for v in vals:
        if not math.isfinite(v):
            raise ConfigError(f"{where}: value must be finite")
        if spec.positive and v <= 0:
            raise ConfigError(f"{where}: unit violation, value must be positive ({spec.unit or 'dimensionless'})")
        if spec.nonneg and v < 0:
            raise ConfigError(f"{where}: unit violation, value must be non-negative")
    if spec.kind in ("float", "int"):
        return vals[0]
    if spec.length is not None and len(vals) != spec.length:
        raise ConfigError(f"{where}: expected {spec.length} values, got {len(vals)}")
    return vals


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse and validate a configuration text. Preset values are overridden by explicit keys."""
    raw: dict[tuple[str, str], tuple[str, int]] = {}
    section = ""
    preset = None
    for n, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line)
        if not body:
            continue
        where = f"{source}:{n}"
        if body.startswith("["):
            if not body.endswith("]"):
                raise ConfigError(f"{where}: malformed section header '{body}'")
            section = body[1:-1].strip()
            if section not in {s for s, _ in SCHEMA}:
                raise ConfigError(f"{where}: unknown section [{section}]")
            continue
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got '{body}'")
        key, value = (p.strip() for p in body.split("=", 1))
        if not section and key == "preset":
            if value not in PRESETS:
                raise ConfigError(f"{where}: unknown preset '{value}' (known: {', '.join(sorted(PRESETS))})")
            preset = value
            continue
        if not section:
            raise ConfigError(f"{where}: key '{key}' outside any section")
        if (section, key) not in SCHEMA:
            raise ConfigError(f"{where}: unknown key '{key}' in [{section}]")
        if (section, key) in raw:
            raise ConfigError(f"{where}: duplicate key '{key}' (first set on line {raw[(section, key)][1]})")
        raw[(section, key)] = (value, n)

    merged: dict[tuple[str, str], tuple[str, str]] = {}
    if preset is not None:
        for k, v in PRESETS[preset].items():
            merged[k] = (v, f"preset {preset}")
    for k, (v, n) in raw.items():
        merged[k] = (v, f"{source}:{n}")

    missing = [f"[{s}] {k}" for s, k in REQUIRED if (s, k) not in merged]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")

    vals = {}
    for k, (v, where) in merged.items():
        vals[k] = _parse_scalar(v, SCHEMA[k], f"{where} ({k[0]}.{k[1]})")

    def where(k):
        return f"{merged[k][1]} ({k[0]}.{k[1]})"

    def build(cls, where_key, **kw):
        try:
            return cls(**kw)
        except ValueError as exc:
            raise ConfigError(f"{where(where_key) if where_key in merged else source}: {exc}") from None

    g = vals.get(("lattice", "gravity_m_s2"), (0.0, 0.0, 0.0))
    lattice = build(LatticeConfig, ("lattice", "tau_f") if vals[("lattice", "tau_f")] <= 0.5 else ("lattice", "tau_h"),
                    dx=vals[("lattice", "dx_m")], dt=vals[("lattice", "dt_s")],
                    shape=tuple(vals[("lattice", "shape_cells")]), tau_f=vals[("lattice", "tau_f")],
                    tau_h=vals[("lattice", "tau_h")], gravity=tuple(g))

    mat_map = {
        "melting_temperature_K": "melting_temperature", "preheat_temperature_K": "preheat_temperature",
        "solidus_energy": "solidus_energy", "latent_energy": "latent_energy", "slope_solid_K": "slope_solid",
        "slope_liquid_K": "slope_liquid", "reference_density": "reference_density",
        "volumetric_heat_capacity_J_m3K": "volumetric_heat_capacity", "density_kg_m3": "density_kg_m3",
    }
    material = build(MaterialParams, ("material", "preheat_temperature_K"),
                     **{a: vals[("material", k)] for k, a in mat_map.items() if ("material", k) in vals})

    beam_kw = {a: vals[("beam", k)] for k, a in (("voltage_V", "voltage"), ("spot_sigma_m", "spot_sigma"),
                                                  ("efficiency", "efficiency")) if ("beam", k) in vals}
    beam = build(BeamParams, ("beam", "efficiency"), **beam_kw)

    pw_map = {"layer_thickness_m": "layer_thickness", "mean_diameter_m": "mean_diameter",
              "shape_diameter_m": "shape_diameter", "d_min_m": "d_min", "d_max_m": "d_max",
              "packing_fraction": "packing_fraction", "substrate_cells": "substrate_cells",
              "max_attempts": "max_attempts"}
    seed = vals.get(("run", "seed"), 0)
    powder = build(PowderSpec, ("powder", "d_min_m"), seed=seed,
                   **{a: vals[("powder", k)] for k, a in pw_map.items() if ("powder", k) in vals})

    sweep = None
    if ("sweep", "velocities_m_s") in vals or ("sweep", "line_energies_kJ_m") in vals:
        sweep = build(SweepGrid, ("sweep", "velocities_m_s"),
                      velocities=vals.get(("sweep", "velocities_m_s"), []),
                      line_energies=vals.get(("sweep", "line_energies_kJ_m"), []))

    faces = [WALL] * 6
    thermal = [ADIABATIC] * 6
    for i, f in enumerate(FACES):
        faces[i] = vals.get(("boundary", f), faces[i])
        thermal[i] = vals.get(("boundary", "thermal_" + f), thermal[i])
    for a in range(3):
        if (faces[2 * a] == PERIODIC) != (faces[2 * a + 1] == PERIODIC):
            k = ("boundary", FACES[2 * a]) if ("boundary", FACES[2 * a]) in merged else ("boundary", FACES[2 * a + 1])
            raise ConfigError(f"{where(k)}: periodic faces must come in pairs")

    if lattice.shape[2] <= powder.substrate_cells:
        raise ConfigError(f"{source}: domain height {lattice.shape[2]} cells does not exceed the substrate")

    fs = {k: vals[("free_surface", k)] for k in ("surface_tension", "gas_density", "contact_angle_deg",
                                                 "conversion_delta") if ("free_surface", k) in vals}
    if "contact_angle_deg" in fs and not 0 < fs["contact_angle_deg"] < 180:
        raise ConfigError(f"{where(('free_surface', 'contact_angle_deg'))}: contact angle must lie in (0, 180)")

    cfg = RunConfig(
        lattice=lattice, material=material, beam=beam,
        beam_offset=vals.get(("beam", "beam_offset_m"), 0.0),
        n_lines=vals.get(("scan", "n_lines"), 7),
        line_offset=vals.get(("scan", "line_offset_m"), 100e-6),
        serpentine=vals.get(("scan", "serpentine"), True),
        powder=powder, bed_file=vals.get(("powder", "bed_file")), sweep=sweep,
        density_margin=vals.get(("sweep", "density_margin_m")),
        density_margin_x=vals.get(("sweep", "density_margin_x_m")),
        percentile=vals.get(("sweep", "percentile"), 99.0),
        max_cooldown_steps=vals.get(("sweep", "max_cooldown_steps"), 20000),
        workers=vals.get(("sweep", "workers"), 1),
        faces=tuple(faces), thermal_faces=tuple(thermal),
        wall_temperature=vals.get(("boundary", "wall_temperature_K")),
        line_energy_kJ_m=vals.get(("run", "line_energy_kJ_m")),
        scan_velocity=vals.get(("run", "scan_velocity_m_s")),
        max_steps=vals.get(("run", "max_steps")), seed=seed,
        snapshot_every=vals.get(("output", "snapshot_every_steps"), 1000),
        output_dir=vals.get(("output", "directory"), "out"),
        values={k: v for k, (v, _) in merged.items()},
        **fs,
    )
    if cfg.percentile > 100:
        raise ConfigError(f"{where(('sweep', 'percentile'))}: percentile must lie in (0, 100]")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from None
    return parse_config(text, str(path))


def dump_config(cfg: RunConfig) -> str:
    """Text that parses back to the same configuration."""
    lines = []
    section = None
    for (s, k), v in sorted(cfg.values.items()):
        if s != section:
            lines.append(f"\n[{s}]")
            section = s
        lines.append(f"{k} = {v}")
    return "\n".join(lines).lstrip() + "\n"
