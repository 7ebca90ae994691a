"""Desk-scale reproduction of fig3; writes CSV, text table and plot data to results/."""

import argparse

from radialqd import presets
from radialqd.harness import emit, format_table, run_scenario

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    for cfg in presets.PRESETS["fig3"](trials=args.trials, seed=args.seed):
        res = run_scenario(cfg, workers=args.workers)
        emit(res.rows, args.out, ["csv", "table-text", "plot-data"], stem=cfg.name)
        for metric in ("pfa", "add", "fdr"):
            if any(getattr(r, metric) is not None for r in res.rows):
                print(format_table(res.rows, metric), end="\n\n")
