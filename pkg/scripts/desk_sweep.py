#!/usr/bin/env python3
"""Desk-scale process window: the 3 x 2 sweep of the `desk` preset, with a monotonicity audit.

    python3 scripts/desk_sweep.py                 # configs/desk.cfg -> out/desk/process_window.csv
    python3 scripts/desk_sweep.py --resume        # skip finished points
"""

import argparse
import csv
import os
import sys

from ebmlbm import __version__
from ebmlbm.config import load_config
from ebmlbm.process_window import monotone_in_energy, run_sweep

HERE = os.path.dirname(os.path.abspath(__file__))


def main() -> int:
    ap = argparse.ArgumentParser(description="desk-scale process-window sweep")
    ap.add_argument("--config", default=os.path.join(HERE, "..", "configs", "desk.cfg"))
    ap.add_argument("--out", default=None, help="output directory (default: [output] directory)")
    ap.add_argument("--resume", action="store_true")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    cfg = load_config(args.config)
    out = args.out or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "process_window.csv")

    def log(res):
        c = res.classification
        extra = "" if c is None else f" rho={c.rel_density:.4f} T_avg={c.T_avg:.0f} K"
        print(f"v={res.v_scan:g} m/s  E_L={res.E_L:g} kJ/m  -> {res.verdict}{extra}  "
              f"({res.steps} steps, {res.wall_s:.0f} s)", flush=True)

    run_sweep(cfg.sweep, cfg.scenario(), path, resume=args.resume, workers=args.workers or cfg.workers,
              provenance=[f"ebmlbm {__version__}"] + cfg.provenance(), log=log)

    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    energies = sorted({float(r["E_L_kJ_m"]) for r in rows})
    print("\nv [m/s] \\ E_L [kJ/m]  " + "  ".join(f"{e:>9g}" for e in energies))
    for v in sorted({float(r["v_scan_m_s"]) for r in rows}):
        by_e = {float(r["E_L_kJ_m"]): r["verdict"] for r in rows if float(r["v_scan_m_s"]) == v}
        print(f"{v:>20g}  " + "  ".join(f"{by_e.get(e, '-'):>9}" for e in energies))
    mono = monotone_in_energy([(float(r["v_scan_m_s"]), float(r["E_L_kJ_m"]), r["verdict"]) for r in rows])
    print(f"\nverdicts monotone in line energy: {mono}")
    print(f"wrote {path}")
    return 0 if mono else 1


if __name__ == "__main__":
    sys.exit(main())
