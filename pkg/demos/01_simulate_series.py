"""Simulate the four linear benchmark scenarios and check their moments.

Each scenario is an observation-driven count model: the conditional mean
follows an INGARCH recursion and the observation is drawn from the emission
family.  For the linear recursion the stationary mean has the closed form
a0 / (1 - sum of non-intercept coefficients), which the empirical means
should approach.
"""

import numpy as np

import countsel as cs

scenarios = ["model-a", "model-b", "model-c", "model-d"]

print(f"{'scenario':<10} {'model':<26} {'E[Y] theory':>12} {'E[Y] sim':>10} {'Var sim':>9} {'max':>4}")
for name in scenarios:
    spec, theta, _ = cs.preset(name)
    y = cs.simulate(spec, theta, cs.SimConfig(n=50_000, seed=1))
    mean_theory = theta.alpha0 / cs.stationarity_margin(theta)
    print(
        f"{name:<10} {spec.label:<26} {mean_theory:>12.4f} "
        f"{y.mean():>10.4f} {y.var():>9.4f} {y.max():>4d}"
    )

# The binary scenarios produce 0/1 series; the Poisson ones overdispersed
# counts once feedback is present.  A short window of Model B:
spec, theta, _ = cs.preset("model-b")
y = cs.simulate(spec, theta, cs.SimConfig(n=30, seed=1))
print("\nModel B sample path:", y.tolist())

# Determinism: the same configuration always yields the same trajectory.
y2 = cs.simulate(spec, theta, cs.SimConfig(n=30, seed=1))
print("identical rerun:", np.array_equal(y, y2))
