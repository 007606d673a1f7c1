"""
Competitive ratio across market scale
=====================================

Measure how much of the offline-optimal gain from trade the online mechanism
captures as markets grow. The market-share cap alpha shrinks while the
optimal trade count tau grows like 5/alpha, so each grid point is the same
market shape at a different scale.
"""

from fractions import Fraction

from observeprice import competitive_ratio_experiment, matched_family

# 1. Matched families: 1/alpha mediators and advertisers per side, five users
#    or slots each, uniform costs, heavy-tailed values. At small scale the
#    mechanism's safety checks force a dummy (no-trade) threshold pair; at
#    tau = 400 prices go live.
grid = (Fraction(1, 5), Fraction(1, 20), Fraction(1, 80))
points = [(alpha, matched_family(alpha, seed=0)) for alpha in grid]

# 2. 200 seeded runs per point. Each ratio is the executed gain over the
#    full offline optimum; the reachable column swaps in the optimum of the
#    sub-market the mechanism was actually allowed to price (arrivals after
#    the observation phase).
results = competitive_ratio_experiment(points, n_seeds=200)
print(f"{'alpha':>8} {'tau':>5} {'mean':>7} {'se':>7} {'q50':>7} "
      f"{'vs reachable':>13} {'analytic bound':>15}")
for p in results:
    print(f"{str(p.alpha):>8} {p.tau:>5} {p.mean:>7.4f} {p.std_error:>7.4f} "
          f"{p.quantiles[1]:>7.4f} {p.mean_vs_reachable:>13.4f} {p.bound_clamped:>15.4f}")

# 3. The trend is the point: the mean ratio is non-decreasing as alpha
#    shrinks. The analytic guarantee is 0-clamped at these scales (it only
#    turns positive around alpha ~ 1e-8) which is why the empirical trend,
#    not the closed-form bound, is what a desk-sized experiment can certify.
means = [p.mean for p in results]
assert all(b >= a - 1e-12 for a, b in zip(means, means[1:]))
print("mean ratio is non-decreasing as the market grows")
