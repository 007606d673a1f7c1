"""The observe-then-price mechanism.

Entities (mediators and advertisers) arrive one by one in uniformly random
order. The mechanism observes a Binomial(n, r) prefix without trading, prices
all later trades off one canonical pair of the observed sub-market, and then
serves each arriving entity greedily: every trade charges the advertiser the
threshold slot value and pays the mediator the threshold user cost, and after
every arrival each mediator's assigned users have their cumulative payment
raised to the mediator's currently cheapest unassigned assignable cost (or to
the threshold cost once none remain).

All money flows are exact integers. The threshold location involves a cube
root, so location and sign decisions are made with a float fast path that is
always verified (and, if needed, corrected) by exact integer comparisons;
a rounding error can never flip them.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Sequence

from .canonical import canonical_assignment
from .market import (
    Assignment,
    EntityId,
    Instance,
    MarketView,
    Money,
    ReportProfile,
    SlotRef,
    TieKey,
    UserRef,
    report_view,
    validate_instance,
)

VARIANTS = ("standard", "pay_slot_value", "skip_user_payment_updates")


def _iroot6(n: int) -> int:
    """Floor integer sixth root."""
    if n < 0:
        raise ValueError("negative")
    if n == 0:
        return 0
    x = max(1, int(round(n ** (1.0 / 6))))
    while x**6 > n:
        x -= 1
    while (x + 1) ** 6 <= n:
        x += 1
    return x


def derive_r(alpha: Fraction) -> Fraction:
    """Observation rate min(1/2, 4*alpha^(1/6)), floored to the 1e-6 grid.

    Computed with integer arithmetic so the grid rounding is exact and always
    toward zero.
    """
    alpha = Fraction(alpha)
    if not 0 < alpha <= 1:
        raise ValueError("alpha must be in (0, 1]")
    # floor(4e6 * alpha^(1/6)) = floor((4**6 * 1e36 * p / q)^(1/6))
    n = (4**6) * 10**36 * alpha.numerator // alpha.denominator
    micro = _iroot6(n)
    if micro <= 0:
        raise ValueError("alpha too small: derived r underflows the 1e-6 grid")
    return min(Fraction(1, 2), Fraction(micro, 10**6))


def cbrt_term_dominates(total: int | Fraction, coeff: Fraction, alpha: Fraction) -> bool:
    """Exactly decide total - coeff * alpha^(1/3) <= 0 (total, coeff >= 0)."""
    total = Fraction(total)
    if total <= 0:
        return True
    if coeff <= 0:
        return False
    return total**3 <= coeff**3 * Fraction(alpha)


def ceil_minus_cbrt(total: int, coeff: Fraction, alpha: Fraction) -> int:
    """Exact ceil(total - coeff * alpha^(1/3)) for total >= 0, coeff >= 0.

    Float estimate first; the candidate is then pinned by exact cubed
    comparisons, so the result is correct even when the expression sits next
    to an integer.
    """
    alpha = Fraction(alpha)
    coeff = Fraction(coeff)
    a3 = coeff**3 * alpha

    def at_most(m: int) -> bool:  # total - coeff*cbrt(alpha) <= m
        d = total - m
        return d <= 0 or Fraction(d) ** 3 <= a3

    m = math.ceil(total - float(coeff) * float(alpha) ** (1.0 / 3.0))
    while not at_most(m):
        m += 1
    while at_most(m - 1):
        m -= 1
    return m


def sample_observation_count(n_entities: int, r: Fraction, rng: random.Random) -> int:
    """Binomial(n, r) drawn as n independent Bernoulli(r) trials.

    Each trial is exact for rational r (no float thresholding), so replaying
    a seed reproduces the draw bit for bit and each entity independently lands
    in the observed prefix with probability r.
    """
    r = Fraction(r)
    if not 0 <= r <= 1:
        raise ValueError("r must be in [0, 1]")
    num, den = r.numerator, r.denominator
    return sum(1 for _ in range(n_entities) if rng.randrange(den) < num)


@dataclass(frozen=True)
class Thresholds:
    """The price pair: trades pay mediators ``payment`` and charge advertisers
    ``charge``. ``None`` keys are the dummy pair (cost -inf / value +inf), under
    which nothing is assignable and the run trades nothing."""

    user_key: Optional[TieKey]
    slot_key: Optional[TieKey]
    location: Optional[int]
    observed_size: int
    injected: bool = False

    def __post_init__(self) -> None:
        if (self.user_key is None) != (self.slot_key is None):
            raise ValueError("thresholds must be both dummy or both real")
        if self.user_key is not None and not (self.user_key < self.slot_key):
            raise ValueError("threshold user key must order below the slot key")

    @property
    def is_dummy(self) -> bool:
        return self.user_key is None

    @property
    def payment(self) -> Money:
        if self.user_key is None:
            raise ValueError("dummy thresholds have no payment amount")
        return self.user_key.amount

    @property
    def charge(self) -> Money:
        if self.slot_key is None:
            raise ValueError("dummy thresholds have no charge amount")
        return self.slot_key.amount

    def user_assignable(self, key: TieKey) -> bool:
        return self.user_key is not None and key < self.user_key

    def slot_assignable(self, key: TieKey) -> bool:
        return self.slot_key is not None and key > self.slot_key


def dummy_thresholds(observed_size: int = 0, injected: bool = False) -> Thresholds:
    return Thresholds(None, None, None, observed_size, injected)


def injected_thresholds(user_key: TieKey, slot_key: TieKey) -> Thresholds:
    """Test-only override of step 2. Flagged on the outcome."""
    return Thresholds(user_key, slot_key, None, 0, injected=True)


def threshold_keys_from_amounts(cost_amount: Money, value_amount: Money, instance: Instance) -> tuple[TieKey, TieKey]:
    """Synthetic override keys from plain amounts.

    Both keys rank after every real entity, so a user whose amount equals the
    cost threshold is assignable while a slot whose amount equals the value
    threshold is not; pass full TieKeys instead when a test needs different
    tie semantics.
    """
    rank = instance.n_entities
    return TieKey(cost_amount, rank, 0), TieKey(value_amount, rank, 0)


def compute_thresholds(
    view: MarketView,
    observed_mediators: Sequence[EntityId],
    observed_advertisers: Sequence[EntityId],
    r: Fraction,
    alpha: Fraction,
) -> Thresholds:
    """Step 2: price off the canonical assignment of the observed sub-market.

    The location is ceil((1 - 2/r * alpha^(1/3)) * s) for s observed canonical
    pairs; if the expression is <= 0 the thresholds degenerate to the dummy
    pair and the run will trade nothing.
    """
    users = view.users_of(observed_mediators)
    slots = view.slots_of(observed_advertisers)
    cano = canonical_assignment(users, slots, view)
    s = cano.size
    if s == 0 or cbrt_term_dominates(s, Fraction(2 * s) / Fraction(r), alpha):
        return dummy_thresholds(observed_size=s)
    k = ceil_minus_cbrt(s, Fraction(2 * s) / Fraction(r), alpha)
    k = max(1, min(k, s))
    p_hat = cano.user_at(k)
    b_hat = cano.slot_at(k)
    return Thresholds(view.user_keys[p_hat], view.slot_keys[b_hat], k, s)


class Trade(NamedTuple):
    user: UserRef
    slot: SlotRef
    charge: Money  # paid by the slot's advertiser
    payment: Money  # received by the user's mediator


@dataclass(frozen=True)
class ArrivalEvent:
    """Everything that happened while serving one post-observation arrival."""

    arrival: EntityId
    trades: tuple[Trade, ...]
    pay_steps: tuple[tuple[UserRef, Money], ...]  # chronological raises of cumulative pay targets
    targets: tuple[tuple[UserRef, Money], ...]  # full cumulative pay vector after the event
    unassigned_assignable_users: int
    unassigned_assignable_slots: int


@dataclass(frozen=True)
class MechanismConfig:
    alpha: Fraction
    r: Optional[Fraction] = None  # default: derive_r(alpha)
    seed: int = 0
    # Test-only injection points. Production runs leave all three at None;
    # outcomes record whether any was used.
    threshold_override: Optional[tuple[TieKey, TieKey]] = None
    forced_arrival_order: Optional[tuple[EntityId, ...]] = None
    forced_observation_count: Optional[int] = None
    # Deliberately broken engines for negative-control tests.
    variant: str = "standard"

    def resolved_r(self) -> Fraction:
        r = derive_r(self.alpha) if self.r is None else Fraction(self.r)
        if not 0 < r <= Fraction(1, 2):
            raise ValueError("r must be in (0, 1/2]")
        return r


@dataclass
class MechanismOutcome:
    alpha: Fraction
    r: Fraction
    seed: int
    variant: str
    injected_thresholds: bool
    forced_arrival: bool
    forced_observation: bool
    arrival_order: tuple[EntityId, ...]
    observation_count: int
    observed_mediators: tuple[EntityId, ...]
    observed_advertisers: tuple[EntityId, ...]
    thresholds: Thresholds
    events: tuple[ArrivalEvent, ...]
    assignment: Assignment
    charges: dict[EntityId, Money]  # per advertiser
    receipts: dict[EntityId, Money]  # per mediator
    final_targets: dict[UserRef, Money]
    gft: Money  # of the executed assignment, in the amounts the run was priced on

    @property
    def post_observation_order(self) -> tuple[EntityId, ...]:
        return self.arrival_order[self.observation_count :]

    def trades_of(self) -> list[Trade]:
        return [t for e in self.events for t in e.trades]


class MechanismState:
    """Post-observation serving state; one ``process_arrival`` per entity.

    Usable directly in tests (with injected thresholds); ``run_mechanism``
    drives it for real runs.
    """

    def __init__(
        self,
        view: MarketView,
        thresholds: Thresholds,
        observed: Sequence[EntityId],
        variant: str = "standard",
    ) -> None:
        if variant not in VARIANTS:
            raise ValueError(f"unknown engine variant {variant!r}")
        self.view = view
        self.thresholds = thresholds
        self.variant = variant
        self.observed = set(observed)
        self.arrived: set[EntityId] = set()
        # Per-mediator queue of assignable users, cheapest key first; only the
        # pointer moves, the membership is fixed at arrival.
        self._queue: dict[EntityId, list[UserRef]] = {}
        self._qpos: dict[EntityId, int] = {}
        # Per-advertiser assignable slots, lowest index first.
        self._slots: dict[EntityId, list[SlotRef]] = {}
        self._spos: dict[EntityId, int] = {}
        self._set_mediators: list[EntityId] = []  # sigma, mediators in arrival order
        self._set_advertisers: list[EntityId] = []
        self._mptr = 0
        self._aptr = 0
        self.assigned_by_mediator: dict[EntityId, list[UserRef]] = {}
        self.targets: dict[UserRef, Money] = {}
        self.charges: dict[EntityId, Money] = {}
        self.receipts: dict[EntityId, Money] = {}
        self.pairs: list[tuple[UserRef, SlotRef]] = []
        self.events: list[ArrivalEvent] = []

    # -- pools ---------------------------------------------------------------

    def _mediator_pool(self, m: EntityId) -> list[UserRef]:
        return self._queue[m][self._qpos[m] :]

    def _next_user(self, m: EntityId) -> Optional[UserRef]:
        q, i = self._queue[m], self._qpos[m]
        return q[i] if i < len(q) else None

    def _next_slot(self, a: EntityId) -> Optional[SlotRef]:
        s, i = self._slots[a], self._spos[a]
        return s[i] if i < len(s) else None

    def _earliest_advertiser_with_slots(self) -> Optional[EntityId]:
        while self._aptr < len(self._set_advertisers):
            a = self._set_advertisers[self._aptr]
            if self._next_slot(a) is not None:
                return a
            self._aptr += 1
        return None

    def _earliest_mediator_with_users(self) -> Optional[EntityId]:
        while self._mptr < len(self._set_mediators):
            m = self._set_mediators[self._mptr]
            if self._next_user(m) is not None:
                return m
            self._mptr += 1
        return None

    def unassigned_assignable_users(self) -> int:
        return sum(len(q) - self._qpos[m] for m, q in self._queue.items())

    def unassigned_assignable_slots(self) -> int:
        return sum(len(s) - self._spos[a] for a, s in self._slots.items())

    # -- payment rule ----------------------------------------------------------

    def _target_amount(self, m: EntityId) -> Money:
        """Cumulative pay owed to each of m's assigned users right now."""
        nxt = self._next_user(m)
        if nxt is None:
            return self.thresholds.payment
        return self.view.user_costs[nxt]

    def _raise_targets(self, m: EntityId, steps: list[tuple[UserRef, Money]]) -> None:
        if self.variant == "skip_user_payment_updates":
            return
        assigned = self.assigned_by_mediator.get(m)
        if not assigned:
            return
        amount = self._target_amount(m)
        for u in assigned:
            old = self.targets[u]
            if amount != old:
                if amount < old:
                    raise AssertionError("pay target decreased; engine invariant broken")
                self.targets[u] = amount
                steps.append((u, amount))

    # -- trades ----------------------------------------------------------------

    def _execute(self, m: EntityId, a: EntityId, trades: list[Trade], steps: list[tuple[UserRef, Money]]) -> None:
        user = self._next_user(m)
        slot = self._next_slot(a)
        assert user is not None and slot is not None
        self._qpos[m] += 1
        self._spos[a] += 1
        charge = self.thresholds.charge
        payment = charge if self.variant == "pay_slot_value" else self.thresholds.payment
        self.charges[a] = self.charges.get(a, 0) + charge
        self.receipts[m] = self.receipts.get(m, 0) + payment
        self.assigned_by_mediator.setdefault(m, []).append(user)
        self.targets.setdefault(user, 0)
        self.pairs.append((user, slot))
        trades.append(Trade(user, slot, charge, payment))
        # The newly assigned user is paid immediately; her mediator's other
        # assigned users ride along on the same rule.
        self._raise_targets(m, steps)

    def process_arrival(self, entity: EntityId) -> ArrivalEvent:
        if entity in self.arrived:
            raise ValueError(f"{entity} already arrived")
        if entity in self.observed:
            raise ValueError(f"{entity} was observed; observed entities do not arrive again")
        self.arrived.add(entity)
        trades: list[Trade] = []
        steps: list[tuple[UserRef, Money]] = []

        if entity.kind == "mediator":
            users = [u for u in self.view.users_by_mediator[entity] if self.thresholds.user_assignable(self.view.user_keys[u])]
            users.sort(key=lambda u: self.view.user_keys[u])
            self._queue[entity] = users
            self._qpos[entity] = 0
            self._set_mediators.append(entity)
            while self._next_user(entity) is not None:
                a = self._earliest_advertiser_with_slots()
                if a is None:
                    break
                self._execute(entity, a, trades, steps)
        else:
            slots = [b for b in self.view.slots_by_advertiser[entity] if self.thresholds.slot_assignable(self.view.slot_keys[b])]
            self._slots[entity] = slots
            self._spos[entity] = 0
            self._set_advertisers.append(entity)
            while self._next_slot(entity) is not None:
                m = self._earliest_mediator_with_users()
                if m is None:
                    break
                self._execute(m, entity, trades, steps)

        # Step 4d: after the arrival's trades, refresh every arrived mediator.
        if self.variant != "skip_user_payment_updates":
            for m in self._set_mediators:
                self._raise_targets(m, steps)

        event = ArrivalEvent(
            arrival=entity,
            trades=tuple(trades),
            pay_steps=tuple(steps),
            targets=tuple(sorted(self.targets.items())),
            unassigned_assignable_users=self.unassigned_assignable_users(),
            unassigned_assignable_slots=self.unassigned_assignable_slots(),
        )
        self.events.append(event)
        return event


def run_mechanism(instance: Instance, reports: ReportProfile, config: MechanismConfig) -> MechanismOutcome:
    """One full run: arrival order, observation, thresholds, serving loop.

    The true instance must satisfy the standing assumptions for config.alpha;
    reports are arbitrary type-valid claims.
    """
    alpha = Fraction(config.alpha)
    r = config.resolved_r()
    if config.variant not in VARIANTS:
        raise ValueError(f"unknown engine variant {config.variant!r}")
    check = validate_instance(instance, alpha)
    if not check.ok:
        raise ValueError("instance fails mechanism assumptions: " + "; ".join(check.violations))

    rng = random.Random(config.seed)
    if config.forced_arrival_order is not None:
        arrival = list(config.forced_arrival_order)
        if sorted(map(str, arrival)) != sorted(map(str, instance.entity_ids)):
            raise ValueError("forced_arrival_order must be a permutation of the instance's entities")
    else:
        arrival = list(instance.entity_ids)
        rng.shuffle(arrival)

    n = len(arrival)
    if config.forced_observation_count is not None:
        t = config.forced_observation_count
        if not 0 <= t <= n:
            raise ValueError("forced_observation_count outside 0..n")
    else:
        t = sample_observation_count(n, r, rng)

    observed = arrival[:t]
    observed_m = tuple(e for e in observed if e.kind == "mediator")
    observed_a = tuple(e for e in observed if e.kind == "advertiser")

    view = report_view(instance, reports)
    if config.threshold_override is not None:
        user_key, slot_key = config.threshold_override
        thresholds = injected_thresholds(user_key, slot_key)
    else:
        thresholds = compute_thresholds(view, observed_m, observed_a, r, alpha)

    state = MechanismState(view, thresholds, observed, variant=config.variant)
    for entity in arrival[t:]:
        state.process_arrival(entity)

    assignment = Assignment(tuple(state.pairs))
    gft = sum(view.slot_values[b] - view.user_costs[u] for u, b in state.pairs)
    return MechanismOutcome(
        alpha=alpha,
        r=r,
        seed=config.seed,
        variant=config.variant,
        injected_thresholds=config.threshold_override is not None,
        forced_arrival=config.forced_arrival_order is not None,
        forced_observation=config.forced_observation_count is not None,
        arrival_order=tuple(arrival),
        observation_count=t,
        observed_mediators=observed_m,
        observed_advertisers=observed_a,
        thresholds=thresholds,
        events=tuple(state.events),
        assignment=assignment,
        charges=dict(state.charges),
        receipts=dict(state.receipts),
        final_targets=dict(state.targets),
        gft=gft,
    )


def truthful_run(instance: Instance, config: MechanismConfig) -> MechanismOutcome:
    return run_mechanism(instance, ReportProfile.truthful(instance), config)
