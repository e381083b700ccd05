"""Fit the naive estimator and the joint MLE to simulated data and certify the MLE.

Run: python3 demos/fit_and_certify.py
"""

import numpy as np

from crcs.certify import fenchel_check, loglik
from crcs.estimators import mle_estimate, naive_estimate
from crcs.model import StepFn, SubDistSystem
from crcs.simulation import sample_dataset
from crcs.truth import default_truth

tm = default_truth()
d = sample_dataset(tm, 1000, seed=7)
print(f"n = {d.n}, distinct times = {len(d.times)}, causes = {d.k_causes}")

# The naive estimator treats each cause as its own current status problem,
# so the fitted components can add up to more than one.
naive = naive_estimate(d)
print(f"naive: {len(naive.sum_violations)} times where the components sum past 1")

mle = mle_estimate(d)
print(f"MLE: loglik {mle.loglik:.6f} after {mle.iterations} iterations")

rep = fenchel_check(d, mle.system, 1e-8)
print(f"certificate passed: {rep.passed}, beta = {rep.beta:.3e}, worst violation {rep.max_violation:.2e}")

# Move some mass from the next jump onto a middle jump: still feasible, no longer optimal.
comp = mle.components[0]
vals = comp.jump_values.copy()
j = len(vals) // 2
vals[j] += min(0.05, (vals[j + 1] - vals[j]) / 2)
bad = SubDistSystem((StepFn(comp.jump_times, vals, comp.baseline, comp.tail_mass),) + mle.components[1:])
print(f"perturbed: loglik {loglik(d, bad):.6f}, certificate passed: {fenchel_check(d, bad, 1e-8).passed}")

t = np.array([0.5, 1.0, 1.5])
for k in range(d.k_causes):
    print(f"cause {k + 1} at {t}: MLE {np.round(mle.components[k](t), 3)}, "
          f"naive {np.round(naive.components[k](t), 3)}, truth {np.round(tm.eval(t)[k], 3)}")
