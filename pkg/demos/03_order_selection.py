"""Order selection over all INGARCH(p, q) with p, q <= 5 on one trajectory.

The penalized criterion -2 loglik + kappa_n |m| is evaluated for all 36
candidate models over the same fits; only the penalty weight changes between
the BIC-like log n and the polynomial n^(1/3).  Bigger models always achieve
a weakly larger log-likelihood (nesting), so the penalty does the pruning.
"""

import countsel as cs

spec, theta, coll = cs.preset("model-a")   # truth: INARCH(2)
y = cs.simulate(spec, theta, cs.SimConfig(n=2000, seed=3))

penalties = [cs.Penalty.log_n(), cs.Penalty.power(1 / 3)]
res_logn, res_pow = cs.select_with_penalties(coll.build(), y, penalties)

print(res_logn.to_text())
print()
print("chosen under log n   :", res_logn.chosen_row.model.label)
print("chosen under n^(1/3) :", res_pow.chosen_row.model.label)
print("truth                :", spec.label)

# the shared fits mean the loglik column is penalty-invariant
assert all(
    a.loglik == b.loglik for a, b in zip(res_logn.table, res_pow.table) if not a.failed
)

# a heavier custom penalty prunes harder; it must never select a bigger model
heavy = cs.Penalty.custom(lambda n: 5.0 * cs.penalty_value(cs.Penalty.log_n(), n), "5 log n")
res_heavy = cs.select(coll.build(), y, heavy)
print("chosen under 5 log n :", res_heavy.chosen_row.model.label,
      f"(dim {res_heavy.chosen_row.dim} <= {res_logn.chosen_row.dim})")
