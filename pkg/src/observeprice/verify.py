"""Economic verification: individual rationality, budget balance, incentives.

All utilities are evaluated against the TRUE instance, in exact integer
money, regardless of what was reported:

* user: cumulative payment received minus her true cost once assigned;
* mediator: he fulfills assignments with his cheapest undelivered true users,
  and a payment counts only when a true user actually backs the trade, so
  claiming users he does not have earns nothing;
* advertiser: true per-slot value for assigned users up to her TRUE capacity
  (extra users won via an inflated capacity report are worthless), minus
  charges.

With truthful reports these definitions collapse to the plain ledger flows.

The deviation test runs a truthful and a misreporting twin under the same
seed (same tie order, arrival order and observation count) and compares final
utilities exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

from .market import (
    EntityId,
    Instance,
    Money,
    ReportProfile,
    UserRef,
)
from .mechanism import MechanismConfig, MechanismOutcome, run_mechanism


@dataclass(frozen=True)
class UtilityTrajectory:
    player: object  # UserRef or EntityId
    series: tuple[Money, ...]  # element 0 is the pre-arrival state, always 0


def _user_trajectory(outcome: MechanismOutcome, instance: Instance, user: UserRef) -> UtilityTrajectory:
    true_cost = instance.mediator(user.mediator).user_costs[user.user_index]
    series = [0]
    assigned = False
    for event in outcome.events:
        if any(t.user == user for t in event.trades):
            assigned = True
        paid = dict(event.targets).get(user, 0)
        series.append(paid - (true_cost if assigned else 0))
    return UtilityTrajectory(user, tuple(series))


def _mediator_trajectory(outcome: MechanismOutcome, instance: Instance, mediator: EntityId) -> UtilityTrajectory:
    true_costs = sorted(instance.mediator(mediator).user_costs)
    series = [0]
    payments: list[Money] = []  # per-trade receipts for this mediator, in trade order
    for event in outcome.events:
        for t in event.trades:
            if t.user.mediator == mediator:
                payments.append(t.payment)
        delivered = min(len(payments), len(true_costs))
        series.append(sum(payments[:delivered]) - sum(true_costs[:delivered]))
    return UtilityTrajectory(mediator, tuple(series))


def _advertiser_trajectory(outcome: MechanismOutcome, instance: Instance, advertiser: EntityId) -> UtilityTrajectory:
    spec = instance.advertiser(advertiser)
    series = [0]
    assigned = 0
    charged = 0
    for event in outcome.events:
        for t in event.trades:
            if t.slot.advertiser == advertiser:
                assigned += 1
                charged += t.charge
        series.append(min(assigned, spec.capacity) * spec.value - charged)
    return UtilityTrajectory(advertiser, tuple(series))


def utility_trajectory(outcome: MechanismOutcome, instance: Instance, player) -> UtilityTrajectory:
    """True cumulative utility after each post-observation arrival."""
    if isinstance(player, UserRef):
        spec = instance.mediator(player.mediator)
        if not 0 <= player.user_index < len(spec.user_costs):
            raise ValueError(f"unknown user {player}")
        return _user_trajectory(outcome, instance, player)
    if isinstance(player, EntityId):
        if player.kind == "mediator":
            instance.mediator(player)  # raises KeyError for unknown players
            return _mediator_trajectory(outcome, instance, player)
        instance.advertiser(player)
        return _advertiser_trajectory(outcome, instance, player)
    raise TypeError(f"not a player: {player!r}")


def final_utility(outcome: MechanismOutcome, instance: Instance, player) -> Money:
    return utility_trajectory(outcome, instance, player).series[-1]


def all_players(instance: Instance) -> list[object]:
    players: list[object] = []
    for m in instance.mediators:
        players.extend(UserRef(m.id, i) for i in range(len(m.user_costs)))
    players.extend(m.id for m in instance.mediators)
    players.extend(a.id for a in instance.advertisers)
    return players


# -- per-run checks ------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    failures: tuple[str, ...]

    def __bool__(self) -> bool:
        return self.ok


def check_continuous_ir(trajectory: UtilityTrajectory) -> CheckResult:
    """Starts at zero and never decreases."""
    s = trajectory.series
    fails = []
    if s[0] != 0:
        fails.append(f"{trajectory.player}: trajectory starts at {s[0]}, not 0")
    for i in range(1, len(s)):
        if s[i] < s[i - 1]:
            fails.append(f"{trajectory.player}: utility drops {s[i - 1]} -> {s[i]} at event {i}")
            break
    return CheckResult(not fails, tuple(fails))


def check_budget_balance(outcome: MechanismOutcome) -> CheckResult:
    """No deficit overall, per trade, and per mediator at every snapshot."""
    fails = []
    total_charges = sum(outcome.charges.values())
    total_receipts = sum(outcome.receipts.values())
    if total_charges < total_receipts:
        fails.append(f"total charges {total_charges} < total mediator receipts {total_receipts}")
    receipts_so_far: dict[EntityId, Money] = {}
    for i, event in enumerate(outcome.events):
        for t in event.trades:
            if t.charge < t.payment:
                fails.append(f"event {i}: trade charges {t.charge} but pays {t.payment}")
            receipts_so_far[t.user.mediator] = receipts_so_far.get(t.user.mediator, 0) + t.payment
        owed: dict[EntityId, Money] = {}
        for user, target in event.targets:
            owed[user.mediator] = owed.get(user.mediator, 0) + target
        for m, owed_total in owed.items():
            if owed_total > receipts_so_far.get(m, 0):
                fails.append(
                    f"event {i}: mediator {m} owes users {owed_total} but has only received {receipts_so_far.get(m, 0)}"
                )
    return CheckResult(not fails, tuple(fails))


def check_surplus_invariant(outcome: MechanismOutcome) -> CheckResult:
    """After each arrival: no assignable user or no assignable slot is left idle."""
    fails = []
    for i, event in enumerate(outcome.events):
        if event.unassigned_assignable_users > 0 and event.unassigned_assignable_slots > 0:
            fails.append(
                f"event {i}: {event.unassigned_assignable_users} assignable users and "
                f"{event.unassigned_assignable_slots} assignable slots both left unassigned"
            )
    return CheckResult(not fails, tuple(fails))


def check_online_legality(outcome: MechanismOutcome) -> CheckResult:
    """Every trade involves the entity that just arrived, on exactly one side."""
    fails = []
    for i, event in enumerate(outcome.events):
        for t in event.trades:
            sides = (t.user.mediator == event.arrival) + (t.slot.advertiser == event.arrival)
            if sides != 1:
                fails.append(f"event {i}: trade {t.user}->{t.slot} does not involve arrival {event.arrival} on one side")
    return CheckResult(not fails, tuple(fails))


def check_pay_targets_monotone(outcome: MechanismOutcome) -> CheckResult:
    """Cumulative user pay targets never decrease across events."""
    fails = []
    prev: dict[UserRef, Money] = {}
    for i, event in enumerate(outcome.events):
        now = dict(event.targets)
        for user, old in prev.items():
            if now.get(user, 0) < old:
                fails.append(f"event {i}: pay target of {user} drops {old} -> {now.get(user, 0)}")
        prev = now
    return CheckResult(not fails, tuple(fails))


def check_observed_never_trade(outcome: MechanismOutcome) -> CheckResult:
    observed = set(outcome.observed_mediators) | set(outcome.observed_advertisers)
    fails = []
    for t in outcome.trades_of():
        if t.user.mediator in observed or t.slot.advertiser in observed:
            fails.append(f"observed entity traded: {t.user}->{t.slot}")
    return CheckResult(not fails, tuple(fails))


RUN_CHECKS: dict[str, Callable[[MechanismOutcome], CheckResult]] = {
    "budget_balance": check_budget_balance,
    "surplus_invariant": check_surplus_invariant,
    "online_legality": check_online_legality,
    "pay_targets_monotone": check_pay_targets_monotone,
    "observed_never_trade": check_observed_never_trade,
}


# -- misreports ------------------------------------------------------------------


@dataclass(frozen=True)
class DeviationCase:
    """One misreport: who deviates and what they claim instead."""

    player: object  # UserRef or EntityId
    label: str
    # exactly one of the three is set, matching the player's role
    user_cost: Optional[Money] = None
    mediator_costs: Optional[tuple[Money, ...]] = None
    advertiser_slots: Optional[tuple[int, Money]] = None

    def apply(self, reports: ReportProfile) -> ReportProfile:
        if isinstance(self.player, UserRef):
            return reports.with_user_cost(self.player, self.user_cost)
        if self.player.kind == "mediator":
            return reports.with_mediator_costs(self.player, self.mediator_costs)
        cap, value = self.advertiser_slots
        return reports.with_advertiser_slots(self.player, cap, value)


def _dedupe(cases: list[DeviationCase], truth_payload) -> list[DeviationCase]:
    seen = {truth_payload}
    out = []
    for c in cases:
        payload = c.user_cost if c.user_cost is not None else (c.mediator_costs or c.advertiser_slots)
        if payload in seen:
            continue
        seen.add(payload)
        out.append(c)
    return out


def generate_misreports(player, instance: Instance, rng: random.Random, k: int) -> list[DeviationCase]:
    """Up to k deterministic-given-rng misreports for one player.

    Users get boundary probes around their true cost (zero, halved, doubled,
    one micro-unit up/down, very large); mediators get vector edits (drop,
    duplicate, fake cheap/expensive user, permutations, per-entry perturbs,
    rescales); advertisers get capacity and value edits including capacity 0
    and inflated capacity.
    """
    big = 10**12
    cases: list[DeviationCase] = []
    if isinstance(player, UserRef):
        c = instance.mediator(player.mediator).user_costs[player.user_index]
        pool = [0, c + 1, max(0, c - 1), 2 * c, c // 2, big, c + 7, max(0, c - 7)]
        for x in pool:
            cases.append(DeviationCase(player, f"user cost {c}->{x}", user_cost=x))
        cases = _dedupe(cases, c)
    elif player.kind == "mediator":
        costs = instance.mediator(player).user_costs
        n = len(costs)
        pool: list[tuple[str, tuple[Money, ...]]] = []
        cheapest = min(range(n), key=lambda i: costs[i])
        pool.append(("drop cheapest user", tuple(c for i, c in enumerate(costs) if i != cheapest)))
        if n > 1:
            drop = rng.randrange(n)
            pool.append((f"drop user {drop}", tuple(c for i, c in enumerate(costs) if i != drop)))
        dup = rng.randrange(n)
        pool.append((f"duplicate user {dup}", costs + (costs[dup],)))
        pool.append(("append fake cheap user", costs + (0,)))
        pool.append(("append two fake cheap users", costs + (0, 0)))
        pool.append(("append fake expensive user", costs + (big,)))
        pool.append(("reverse order", tuple(reversed(costs))))
        shuffled = list(costs)
        rng.shuffle(shuffled)
        pool.append(("shuffle order", tuple(shuffled)))
        pool.append(("all costs +1", tuple(c + 1 for c in costs)))
        pool.append(("all costs -1", tuple(max(0, c - 1) for c in costs)))
        pool.append(("all costs doubled", tuple(2 * c for c in costs)))
        pool.append(("all costs halved", tuple(c // 2 for c in costs)))
        pool.append(("all costs zero", tuple(0 for _ in costs)))
        jitter = tuple(max(0, c + rng.choice((-1, 1)) * rng.randrange(1, 4)) for c in costs)
        pool.append(("jitter each cost", jitter))
        cases = [DeviationCase(player, label, mediator_costs=v) for label, v in pool]
        cases = _dedupe(cases, costs)
    else:
        spec = instance.advertiser(player)
        u, v = spec.capacity, spec.value
        pool = [
            (u, 2 * v),
            (u, v // 2),
            (u, v + 1),
            (u, max(0, v - 1)),
            (u, 0),
            (u, big),
            (u + 1, v),
            (u + 3, v),
            (max(0, u - 1), v),
            (0, v),
            (u + 1, v + 1),
            (2 * u, 2 * v),
        ]
        cases = [DeviationCase(player, f"report cap/value {uu}/{vv}", advertiser_slots=(uu, vv)) for uu, vv in pool]
        cases = _dedupe(cases, (u, v))
    rng.shuffle(cases)
    return cases[:k]


@dataclass(frozen=True)
class DeviationVerdict:
    case: DeviationCase
    seed: int
    truthful_utility: Money
    deviant_utility: Money

    @property
    def profitable(self) -> bool:
        return self.deviant_utility > self.truthful_utility


def deviation_test(
    instance: Instance,
    case: DeviationCase,
    base_config: MechanismConfig,
    seeds: Sequence[int],
    truthful_outcomes: Optional[dict[int, MechanismOutcome]] = None,
) -> list[DeviationVerdict]:
    """Truthful vs misreporting twin runs, one pair per seed, exact compare."""
    truthful = ReportProfile.truthful(instance)
    deviant = case.apply(truthful)
    verdicts = []
    for seed in seeds:
        config = replace(base_config, seed=seed)
        if truthful_outcomes is not None and seed in truthful_outcomes:
            base_outcome = truthful_outcomes[seed]
        else:
            base_outcome = run_mechanism(instance, truthful, config)
            if truthful_outcomes is not None:
                truthful_outcomes[seed] = base_outcome
        dev_outcome = run_mechanism(instance, deviant, config)
        verdicts.append(
            DeviationVerdict(
                case,
                seed,
                final_utility(base_outcome, instance, case.player),
                final_utility(dev_outcome, instance, case.player),
            )
        )
    return verdicts


# -- sweeps ----------------------------------------------------------------------


@dataclass
class SweepResult:
    runs: int = 0
    trades: int = 0
    trajectories: int = 0
    deviation_pairs: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def truthful_sweep(
    runs: Iterable[tuple[Instance, MechanismConfig]],
    collect_outcomes: bool = False,
) -> tuple[SweepResult, list[MechanismOutcome]]:
    """Run truthfully and check IR for every player plus all run invariants."""
    result = SweepResult()
    outcomes = []
    for instance, config in runs:
        outcome = run_mechanism(instance, ReportProfile.truthful(instance), config)
        result.runs += 1
        result.trades += len(outcome.assignment)
        for name, chk in RUN_CHECKS.items():
            got = chk(outcome)
            if not got.ok:
                result.violations.append(f"{name}: {got.failures[0]}")
        for player in all_players(instance):
            traj = utility_trajectory(outcome, instance, player)
            result.trajectories += 1
            got = check_continuous_ir(traj)
            if not got.ok:
                result.violations.append(f"continuous_ir: {got.failures[0]}")
        if collect_outcomes:
            outcomes.append(outcome)
    return result, outcomes


def incentive_sweep(
    items: Iterable[tuple[Instance, MechanismConfig]],
    misreports_per_role: int,
    seeds_per_case: int,
    rng: random.Random,
) -> SweepResult:
    """Sampled misreports for every role; any strictly profitable deviation is a violation.

    Invariant checks also run on every deviant outcome (criterion: surplus and
    legality hold across all runs, truthful or not).
    """
    result = SweepResult()
    for instance, base_config in items:
        truthful = ReportProfile.truthful(instance)
        seeds = [rng.randrange(2**60) for _ in range(seeds_per_case)]
        truthful_outcomes: dict[int, MechanismOutcome] = {}
        for seed in seeds:
            config = replace(base_config, seed=seed)
            truthful_outcomes[seed] = run_mechanism(instance, truthful, config)
            result.runs += 1

        users = [p for p in all_players(instance) if isinstance(p, UserRef)]
        mediators = [m.id for m in instance.mediators]
        advertisers = [a.id for a in instance.advertisers]
        for role_players in (users, mediators, advertisers):
            if not role_players:
                continue
            cases: list[DeviationCase] = []
            guard = 0
            while len(cases) < misreports_per_role and guard < misreports_per_role * 10:
                guard += 1
                player = rng.choice(role_players)
                take = generate_misreports(player, instance, rng, misreports_per_role - len(cases))
                cases.extend(take)
            for case in cases:
                deviant = case.apply(truthful)
                for seed in seeds:
                    config = replace(base_config, seed=seed)
                    dev_outcome = run_mechanism(instance, deviant, config)
                    result.runs += 1
                    result.deviation_pairs += 1
                    for name in ("surplus_invariant", "online_legality"):
                        got = RUN_CHECKS[name](dev_outcome)
                        if not got.ok:
                            result.violations.append(f"{name}[deviant]: {got.failures[0]}")
                    tu = final_utility(truthful_outcomes[seed], instance, case.player)
                    du = final_utility(dev_outcome, instance, case.player)
                    if du > tu:
                        result.violations.append(
                            f"profitable deviation: {case.label} for {case.player} "
                            f"(truthful {tu} < deviant {du}, seed {seed})"
                        )
    return result
