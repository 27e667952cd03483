"""Command-line driver.

Exit codes: 0 success, 1 invalid input, 2 numerical divergence, 3 benchmark failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import replace

from . import __version__
from .beam import BeamParams
from .config import ConfigError, RunConfig, load_config
from .output import load_bed, save_bed, snapshot_of, write_snapshot
from .powder import generate_bed
from .process_window import (
    Scenario, averaged_peak_temperature, classify, relative_density, run_sweep, surface_temperature,
)
from .solver import DivergenceError, Simulation

EXIT_OK, EXIT_INVALID, EXIT_DIVERGED, EXIT_BENCH_FAIL = 0, 1, 2, 3


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ebmlbm", description="Thermal free-surface LBM for electron beam melting")
    p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps (kernels are serial)")
    p.add_argument("--seed", type=int, default=None, help="override the powder seed")
    p.add_argument("--out", default=None, help="output directory (default: [output] directory)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="single simulation")
    r.add_argument("config")
    r.add_argument("--steps", type=int, default=None, help="stop after this many steps")

    s = sub.add_parser("sweep", help="process-window sweep")
    s.add_argument("config")
    s.add_argument("--resume", action="store_true", help="skip points already in the table")

    b = sub.add_parser("bench", help="reference problem with an analytic answer")
    b.add_argument("name", choices=["stefan", "poiseuille", "thermal-decay", "laplace", "shear-wave"])

    g = sub.add_parser("bed", help="generate and save a powder bed")
    g.add_argument("config")
    return p


def _apply_globals(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.powder = replace(cfg.powder, seed=args.seed)
        cfg.values[("run", "seed")] = str(args.seed)
    if args.out is not None:
        cfg.output_dir = args.out
    if args.threads < 1:
        raise ConfigError("--threads must be at least 1")
    cfg.workers = max(cfg.workers, args.threads) if args.threads > 1 else cfg.workers
    return cfg


def _bed(cfg: RunConfig):
    lat = cfg.lattice
    if cfg.bed_file:
        cells, grids, dx = load_bed(cfg.bed_file, cfg.material)
        if cells.shape != lat.shape or abs(dx - lat.dx) > 1e-12 * lat.dx:
            raise ConfigError(f"{cfg.bed_file}: bed {cells.shape} at dx={dx} does not match the lattice")
        return cells, grids
    pb = generate_bed(cfg.powder, lat.shape, lat.dx, cfg.material)
    for w in pb.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return pb.cells, pb.grids


def cmd_run(cfg: RunConfig, args) -> int:
    if cfg.line_energy_kJ_m is None or cfg.scan_velocity is None:
        raise ConfigError("[run] needs line_energy_kJ_m and scan_velocity_m_s")
    os.makedirs(cfg.output_dir, exist_ok=True)
    sc: Scenario = cfg.scenario()
    b = cfg.beam
    beam = BeamParams.from_line_energy(cfg.line_energy_kJ_m * 1e3, cfg.scan_velocity, voltage=b.voltage,
                                       spot_sigma=b.spot_sigma, efficiency=b.efficiency)
    cells, grids = _bed(cfg)
    sim = Simulation(sc.solver, cells, grids, beam, sc.path())
    max_steps = args.steps if args.steps is not None else cfg.max_steps
    mat = cfg.material
    dx = cfg.lattice.dx
    samples = []
    metrics_path = os.path.join(cfg.output_dir, "metrics.csv")
    write_snapshot(snapshot_of(sim.cells, sim.grids, mat, dx, 0), os.path.join(cfg.output_dir, "snap_0000000"))
    t0 = time.perf_counter()
    cool = 0
    with open(metrics_path, "w", newline="") as fh:
        for line in cfg.provenance():
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "time_s", "mass", "energy", "max_u", "max_T_K", "deposited_J", "fluid_cells"])
        while True:
            try:
                r = sim.step()
            except DivergenceError as exc:
                print(f"diverged: {exc}", file=sys.stderr)
                return EXIT_DIVERGED
            w.writerow([r.step, repr(r.time), repr(r.mass), repr(r.energy), repr(r.max_u), repr(r.max_T),
                        repr(r.deposited), sim.fluid_count()])
            if sim.beam_on:
                from .beam import beam_state
                pos = beam_state(sim.path, beam, sim.time - cfg.lattice.dt)[0]
                s = surface_temperature(sim.temperature(), sim.tops, pos, beam.spot_sigma, dx, sc.percentile)
                if s is not None:
                    samples.append((sim.beam_line, s))
            if r.step % cfg.snapshot_every == 0:
                write_snapshot(snapshot_of(sim.cells, sim.grids, mat, dx, r.step),
                               os.path.join(cfg.output_dir, f"snap_{r.step:07d}"))
            if max_steps is not None and r.step >= max_steps:
                break
            if sim.beam_finished():
                if sim.fluid_count() == 0 and r.max_T <= mat.melting_temperature:
                    break
                cool += 1
                if cool > sc.max_cooldown_steps:
                    break
    write_snapshot(snapshot_of(sim.cells, sim.grids, mat, dx, sim.step_count),
                   os.path.join(cfg.output_dir, "final"))
    print(f"{sim.step_count} steps in {time.perf_counter() - t0:.1f} s")
    if sim.beam_finished():
        rho = relative_density(sim.cells.flags, sim.cells.fill, cfg.powder.substrate_cells, sc.density_box())
        T_avg = averaged_peak_temperature(samples) if samples else mat.preheat_temperature
        print(f"relative density {rho:.4f}, averaged peak temperature {T_avg:.0f} K -> {classify(rho, T_avg)}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args) -> int:
    if cfg.sweep is None:
        raise ConfigError("[sweep] needs velocities_m_s and line_energies_kJ_m")
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, "process_window.csv")
    bed = _bed(cfg) if cfg.bed_file else None

    def log(res):
        print(f"v={res.v_scan:g} m/s E_L={res.E_L:g} kJ/m -> {res.verdict} ({res.steps} steps, {res.wall_s:.0f} s)",
              flush=True)

    prov = [f"ebmlbm {__version__}"] + cfg.provenance()
    run_sweep(cfg.sweep, cfg.scenario(), path, resume=args.resume, workers=cfg.workers, provenance=prov,
              bed=bed, log=log)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .benchmarks import BENCHES

    ok = True
    for res in BENCHES[args.name]():
        print(res.line(), flush=True)
        ok &= res.passed
    return EXIT_OK if ok else EXIT_BENCH_FAIL


def cmd_bed(cfg: RunConfig, args) -> int:
    os.makedirs(cfg.output_dir, exist_ok=True)
    lat = cfg.lattice
    pb = generate_bed(cfg.powder, lat.shape, lat.dx, cfg.material)
    path = os.path.join(cfg.output_dir, "bed.bin")
    save_bed(pb.cells, lat.dx, path)
    write_snapshot(snapshot_of(pb.cells, pb.grids, cfg.material, lat.dx, 0), os.path.join(cfg.output_dir, "bed"))
    print(f"{len(pb.radii)} particles, packing fraction {pb.packing_fraction:.3f}, saved {path}")
    for w in pb.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            return cmd_bench(args)
        cfg = _apply_globals(load_config(args.config), args)
        if args.threads > 1:
            import numba
            numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
        return {"run": cmd_run, "sweep": cmd_sweep, "bed": cmd_bed}[args.command](cfg, args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
