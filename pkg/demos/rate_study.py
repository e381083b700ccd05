"""A small cube-root rate study: medians of several errors over a grid of sample sizes.

The full acceptance run uses n up to 8000 with 100 replications; this one is
sized to finish in well under a minute. Set CRCS_THREADS to use more processes.

Run: python3 demos/rate_study.py
"""

import numpy as np

from crcs.experiments import RateConfig, rate_experiment

cfg = RateConfig(n_grid=(250, 500, 1000, 2000), reps=20, base_seed=2024)
table = rate_experiment(cfg)

for metric in ("mle/hellinger", "naive/hellinger", "mle/l2", "mle/local_err_1"):
    meds = table.median(metric)
    print(f"{metric:<18} medians {np.round(meds, 4).tolist()}  slope {table.slope(metric):+.3f}")

print("\nreference slope for the global distances: -1/3")
# the local error itself shrinks like n^(-1/3), so scaling by n^(1/3) should look flat
scaled = np.array(cfg.n_grid) ** (1 / 3) * table.median("mle/local_err_1")
print("n^(1/3) |F_1(t0) - F_01(t0)| medians:", np.round(scaled, 3).tolist())
if table.failures:
    print(f"{len(table.failures)} fits failed to converge")
