#!/usr/bin/env python3
"""Full-scale Monte Carlo campaign over all three reference schemes.

This is the long-running (hours) reproduction of the summary tables:
N = 100 replications of T = 1000 periods per variance cell, for the 3-, 4-
and 5-reference schemes.  It is deliberately not part of the test suite; run
it directly, optionally narrowing the workload:

    python scripts/run_full_tables.py --reps 100 --T 1000 --out results/

Expect the dynamic method's absolute numbers to differ from the published
tables (those are unseeded Monte Carlo outputs); directions and orderings
are the reproducible content.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from dyncal.campaign import run_grid                      # noqa: E402
from dyncal.simgen import SIM_SCHEMES                     # noqa: E402
from dyncal.sir import CalibrationConfig                  # noqa: E402

E_GRID = (1e-5, 1e-4, 1e-3)
W_GRID = (5e-5, 1e-4, 1e-3)


def fmt_cell(value):
    return "   N/A" if value is None else f"{value:8.3f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--T", type=int, default=1000)
    ap.add_argument("--M", type=int, default=500)
    ap.add_argument("--N-resample", type=int, default=250)
    ap.add_argument("--x0", type=float, default=65.0)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--schemes", type=int, nargs="+", default=[3, 4, 5],
                    choices=[3, 4, 5])
    ap.add_argument("--out", default="full_tables")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = CalibrationConfig(M=args.M, N=args.N_resample, threads=args.threads,
                            keep_samples=False)

    for n_refs in args.schemes:
        scheme = SIM_SCHEMES[n_refs]
        t0 = time.time()
        cells = run_grid(scheme, E_GRID, W_GRID, args.T, args.reps, cfg,
                         args.x0, args.seed + n_refs)
        lines = [f"{n_refs} Reference Model  (reps={args.reps}, T={args.T}, "
                 f"x0={args.x0})"]
        for sw in W_GRID:
            lines.append(f"\nsigma2_W = {sw:g}")
            lines.append(f"{'sigma2_E':>10} | {'RAMSE DC':>8} {'RAMSE SC':>8} "
                         f"| {'AIW DC':>8} {'AIW SC':>8} | {'ACP DC':>8} {'ACP SC':>8}")
            for c in cells:
                if c.sigma2_W != sw:
                    continue
                sc = c.sc
                lines.append(
                    f"{c.sigma2_E:>10g} | {c.dc.ramse:8.3f} "
                    f"{fmt_cell(sc.ramse if sc else None)} | {c.dc.aviw:8.3f} "
                    f"{fmt_cell(sc.aviw if sc else None)} | {c.dc.avcp:8.3f} "
                    f"{fmt_cell(sc.avcp if sc else None)}")
        text = "\n".join(lines) + f"\n\nelapsed: {time.time() - t0:.0f}s\n"
        (out / f"table_{n_refs}ref.txt").write_text(text, encoding="utf-8")
        print(text)


if __name__ == "__main__":
    main()
