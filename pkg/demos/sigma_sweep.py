"""Reduced Monte Carlo noise sweep, written to CSV.

Runs 300 trials per noise level (the full evaluation uses 3000) for both
the weighted and the unweighted solver, prints the error table, and writes
the weighted records to sigma_sweep.csv in the working directory.
The run is deterministic: rerunning produces the identical file.
"""

import sys
from dataclasses import replace

from uwloc.config import bundled_scenario_path, parse_scenario
from uwloc.experiments import run_sweep, write_csv

if __name__ == "__main__":
    config = replace(parse_scenario(bundled_scenario_path()), mc_trials=300)
    weighted = run_sweep(config)
    unweighted = run_sweep(replace(config, weighted=False))

    print(f"{'sigma':>6}  {'weighted NRMSE_t (m)':>20}  {'unweighted (m)':>15}  {'bound (m)':>10}  {'NRMSE_p (dB)':>12}")
    for w, u in zip(weighted, unweighted):
        sigma = w.sweep_coord.split("=")[1]
        print(
            f"{sigma:>6}  {w.nrmse_t_m:20.1f}  {u.nrmse_t_m:15.1f}"
            f"  {w.crlb_t_m:10.1f}  {w.nrmse_p_db:12.2f}"
        )

    out = "sigma_sweep.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        write_csv(weighted, handle)
    print(f"\nwrote {out}", file=sys.stderr)
