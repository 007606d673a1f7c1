"""
One priced run, step by step
============================

Run the observe-then-price mechanism on a small market with pinned thresholds
and a forced arrival order, and read the full event trace: who arrived, which
trades executed at what fixed prices, and how the cumulative payment
recommendations to users moved.
"""

import random
from fractions import Fraction

from observeprice import (
    AdvertiserSpec,
    Instance,
    MechanismConfig,
    MediatorSpec,
    advertiser_id,
    final_utility,
    from_units,
    mediator_id,
    money_to_text,
    random_tie_order,
    run_mechanism,
    threshold_keys_from_amounts,
    truthful_run,
    utility_trajectory,
)
from observeprice.market import ReportProfile

# 1. A market whose optimal behavior is easy to follow: m0 holds users at
#    costs 1, 3, 5; a0 brings two slots worth 7 each. The single-user
#    mediators and single-slot advertisers beside them exist to keep every
#    individual player's footprint small relative to the optimum.
instance = Instance(
    (
        MediatorSpec(mediator_id(0), (from_units(1), from_units(3), from_units(5))),
        MediatorSpec(mediator_id(1), (from_units(5),)),
        MediatorSpec(mediator_id(2), (from_units(5),)),
    ),
    (
        AdvertiserSpec(advertiser_id(0), 2, from_units(7)),
        AdvertiserSpec(advertiser_id(1), 1, from_units(6)),
        AdvertiserSpec(advertiser_id(2), 1, from_units(6)),
    ),
    random_tie_order(
        [mediator_id(i) for i in range(3)] + [advertiser_id(i) for i in range(3)],
        random.Random(3),
    ),
)

# 2. Pin the price thresholds (normally learned from an observation phase):
#    users trading below cost 4, slots trading above value 6. Forcing the
#    arrival order and an empty observation phase makes the run fully
#    deterministic, which is exactly how the replay format works too.
config = MechanismConfig(
    alpha=Fraction(3, 4),
    threshold_override=threshold_keys_from_amounts(from_units(4), from_units(6), instance),
    forced_arrival_order=(
        mediator_id(0), advertiser_id(0), mediator_id(1),
        mediator_id(2), advertiser_id(1), advertiser_id(2),
    ),
    forced_observation_count=0,
)
outcome = truthful_run(instance, config)
print(f"thresholds: pay users {money_to_text(outcome.thresholds.payment)}, "
      f"charge advertisers {money_to_text(outcome.thresholds.charge)}")

# 3. The event trace. Each arrival may trigger trades (earliest waiting
#    counterparty first, cheapest user first) and pushes the cumulative pay
#    target of already-assigned users up to the mediator's next-cheapest
#    assignable cost.
for event in outcome.events:
    print(f"arrival {event.arrival}:")
    for t in event.trades:
        print(f"  trade: user {t.user} -> slot {t.slot} "
              f"(charge {money_to_text(t.charge)}, pay {money_to_text(t.payment)})")
    for user, amount in event.pay_steps:
        print(f"  pay target for {user} raised to {money_to_text(amount)}")

print(f"executed GfT = {money_to_text(outcome.gft)}")

# 4. Final utilities are all non-negative, and each traded user's utility
#    grew monotonically through the run (continuous individual rationality).
for player in (mediator_id(0), advertiser_id(0)):
    print(f"final utility of {player}: {money_to_text(final_utility(outcome, instance, player))}")
traj = utility_trajectory(outcome, instance, next(iter(outcome.final_targets)))
print(f"a traded user's utility trajectory: {[money_to_text(x) for x in traj.series]}")

# 5. Misreporting does not help: the same seeds, with m0 inflating its
#    cheapest user's cost, never beat the truthful outcome for m0.
truthful = ReportProfile.truthful(instance)
lying = truthful.with_mediator_costs(mediator_id(0), (from_units(2), from_units(3), from_units(5)))
deviant = run_mechanism(instance, lying, config)
print(f"truthful m0 utility {money_to_text(final_utility(outcome, instance, mediator_id(0)))}, "
      f"after inflating its cheapest cost {money_to_text(final_utility(deviant, instance, mediator_id(0)))}")
