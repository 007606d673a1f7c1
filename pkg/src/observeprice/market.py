"""Core types for a three-sided information market.

An instance has mediators, each holding an ordered list of users with
non-negative costs, and advertisers, each bringing ``capacity`` identical
slots at a non-negative per-slot value. Matching a user to a slot realizes a
trade whose gain is the slot value minus the user cost.

Money is an exact integer count of micro-units. Nothing in this package does
floating-point arithmetic on money, so budget and incentive checks can assert
exact equalities.

Every cost/value comparison goes through ``TieKey``, a lexicographic key
``(amount, entity_rank, within_index)`` that turns the amount order into a
strict total order: amount ties break by the owning entity's position in the
instance's tie order, then by the user/slot index inside the entity. The tie
order is fixed when the instance is built, drawn independently of reports and
of arrival order, and is never redrawn.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

Money = int
MICRO = 10**6


def from_units(x: int) -> Money:
    """Whole currency units -> micro-unit Money."""
    return x * MICRO


class MarketError(Exception):
    pass


@dataclass(frozen=True, order=True)
class EntityId:
    """A mediator or advertiser handle, e.g. m0 / a3."""

    kind: str  # "mediator" | "advertiser"
    index: int

    def __post_init__(self) -> None:
        if self.kind not in ("mediator", "advertiser"):
            raise ValueError(f"bad entity kind {self.kind!r}")
        if self.index < 0:
            raise ValueError("entity index must be >= 0")

    def __str__(self) -> str:
        return f"{'m' if self.kind == 'mediator' else 'a'}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "EntityId":
        if not text or text[0] not in "ma" or not text[1:].isdigit():
            raise ValueError(f"bad entity id {text!r}")
        kind = "mediator" if text[0] == "m" else "advertiser"
        return cls(kind, int(text[1:]))


def mediator_id(index: int) -> EntityId:
    return EntityId("mediator", index)


def advertiser_id(index: int) -> EntityId:
    return EntityId("advertiser", index)


class UserRef(NamedTuple):
    mediator: EntityId
    user_index: int

    def __str__(self) -> str:
        return f"{self.mediator}:{self.user_index}"


class SlotRef(NamedTuple):
    advertiser: EntityId
    slot_index: int

    def __str__(self) -> str:
        return f"{self.advertiser}:{self.slot_index}"


class TieKey(NamedTuple):
    """Strict comparison key for one cost or one slot value.

    Tuple order is the comparison rule. Distinct users/slots always get
    distinct keys, because (entity_rank, within_index) is unique, so a key
    comparison never lands on "equal" between two different market objects.
    """

    amount: Money
    entity_rank: int
    within_index: int


def compare_keys(a: TieKey, b: TieKey) -> int:
    """-1 if a orders below b, +1 if above, 0 only for the identical key.

    Two different users/slots never share a key, so 0 means both arguments
    refer to the same object.
    """
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


@dataclass(frozen=True)
class MediatorSpec:
    id: EntityId
    user_costs: tuple[Money, ...]

    def __post_init__(self) -> None:
        if self.id.kind != "mediator":
            raise ValueError("MediatorSpec needs a mediator id")
        if any(c < 0 for c in self.user_costs):
            raise ValueError(f"{self.id}: user costs must be >= 0")


@dataclass(frozen=True)
class AdvertiserSpec:
    id: EntityId
    capacity: int
    value: Money

    def __post_init__(self) -> None:
        if self.id.kind != "advertiser":
            raise ValueError("AdvertiserSpec needs an advertiser id")
        if self.capacity < 1:
            raise ValueError(f"{self.id}: capacity must be >= 1")
        if self.value < 0:
            raise ValueError(f"{self.id}: slot value must be >= 0")


@dataclass(frozen=True)
class Instance:
    """One market: the ground truth plus the frozen tie order.

    ``tie_order`` must list every entity exactly once. It is part of the
    instance so that reruns, misreport experiments and replays all share the
    same strict comparison order.
    """

    mediators: tuple[MediatorSpec, ...]
    advertisers: tuple[AdvertiserSpec, ...]
    tie_order: tuple[EntityId, ...]
    _rank: Mapping[EntityId, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ids = [m.id for m in self.mediators] + [a.id for a in self.advertisers]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate entity id")
        if sorted(self.tie_order, key=str) != sorted(ids, key=str):
            raise ValueError("tie_order must be a permutation of all entity ids")
        object.__setattr__(self, "_rank", {e: i for i, e in enumerate(self.tie_order)})

    @property
    def entity_ids(self) -> tuple[EntityId, ...]:
        return tuple(m.id for m in self.mediators) + tuple(a.id for a in self.advertisers)

    @property
    def n_entities(self) -> int:
        return len(self.mediators) + len(self.advertisers)

    def rank(self, entity: EntityId) -> int:
        return self._rank[entity]

    def mediator(self, entity: EntityId) -> MediatorSpec:
        for m in self.mediators:
            if m.id == entity:
                return m
        raise KeyError(str(entity))

    def advertiser(self, entity: EntityId) -> AdvertiserSpec:
        for a in self.advertisers:
            if a.id == entity:
                return a
        raise KeyError(str(entity))


def random_tie_order(entity_ids: Sequence[EntityId], rng: random.Random) -> tuple[EntityId, ...]:
    """Uniform tie order. Draw this before looking at any report."""
    order = list(entity_ids)
    rng.shuffle(order)
    return tuple(order)


@dataclass(frozen=True)
class ReportProfile:
    """What the mechanism is told.

    Reports are only type-checked: mediators may claim any number of users at
    any non-negative costs, advertisers any capacity >= 0 and value >= 0.
    Truthfulness is a property, not a constraint.
    """

    mediator_costs: Mapping[EntityId, tuple[Money, ...]]
    advertiser_slots: Mapping[EntityId, tuple[int, Money]]  # capacity, per-slot value

    def __post_init__(self) -> None:
        for m, costs in self.mediator_costs.items():
            if m.kind != "mediator":
                raise ValueError(f"{m} is not a mediator")
            if any(c < 0 for c in costs):
                raise ValueError(f"{m}: reported costs must be >= 0")
        for a, (cap, value) in self.advertiser_slots.items():
            if a.kind != "advertiser":
                raise ValueError(f"{a} is not an advertiser")
            if cap < 0 or value < 0:
                raise ValueError(f"{a}: reported capacity and value must be >= 0")

    @classmethod
    def truthful(cls, instance: Instance) -> "ReportProfile":
        return cls(
            {m.id: m.user_costs for m in instance.mediators},
            {a.id: (a.capacity, a.value) for a in instance.advertisers},
        )

    def check_covers(self, instance: Instance) -> None:
        if set(self.mediator_costs) != {m.id for m in instance.mediators} or set(
            self.advertiser_slots
        ) != {a.id for a in instance.advertisers}:
            raise ValueError("report profile must cover exactly the instance's entities")

    def with_user_cost(self, user: UserRef, cost: Money) -> "ReportProfile":
        costs = list(self.mediator_costs[user.mediator])
        costs[user.user_index] = cost
        new = dict(self.mediator_costs)
        new[user.mediator] = tuple(costs)
        return ReportProfile(new, self.advertiser_slots)

    def with_mediator_costs(self, mediator: EntityId, costs: Sequence[Money]) -> "ReportProfile":
        new = dict(self.mediator_costs)
        new[mediator] = tuple(costs)
        return ReportProfile(new, self.advertiser_slots)

    def with_advertiser_slots(self, advertiser: EntityId, capacity: int, value: Money) -> "ReportProfile":
        new = dict(self.advertiser_slots)
        new[advertiser] = (capacity, value)
        return ReportProfile(self.mediator_costs, new)


@dataclass(frozen=True)
class MarketView:
    """Numeric amounts and tie keys for one reading of the market.

    Built either from the ground truth or from a report profile; everything
    downstream (canonical assignment, the mechanism, diagnostics) works on a
    view and never cares which reading it is.
    """

    user_costs: Mapping[UserRef, Money]
    slot_values: Mapping[SlotRef, Money]
    user_keys: Mapping[UserRef, TieKey]
    slot_keys: Mapping[SlotRef, TieKey]
    users_by_mediator: Mapping[EntityId, tuple[UserRef, ...]]
    slots_by_advertiser: Mapping[EntityId, tuple[SlotRef, ...]]

    @property
    def all_users(self) -> tuple[UserRef, ...]:
        return tuple(u for us in self.users_by_mediator.values() for u in us)

    @property
    def all_slots(self) -> tuple[SlotRef, ...]:
        return tuple(s for ss in self.slots_by_advertiser.values() for s in ss)

    def users_of(self, mediators: Iterable[EntityId]) -> list[UserRef]:
        return [u for m in mediators for u in self.users_by_mediator[m]]

    def slots_of(self, advertisers: Iterable[EntityId]) -> list[SlotRef]:
        return [s for a in advertisers for s in self.slots_by_advertiser[a]]


def _build_view(
    instance: Instance,
    mediator_costs: Mapping[EntityId, tuple[Money, ...]],
    advertiser_slots: Mapping[EntityId, tuple[int, Money]],
) -> MarketView:
    user_costs: dict[UserRef, Money] = {}
    user_keys: dict[UserRef, TieKey] = {}
    users_by_mediator: dict[EntityId, tuple[UserRef, ...]] = {}
    for m in instance.mediators:
        costs = mediator_costs[m.id]
        rank = instance.rank(m.id)
        refs = []
        for i, c in enumerate(costs):
            u = UserRef(m.id, i)
            user_costs[u] = c
            user_keys[u] = TieKey(c, rank, i)
            refs.append(u)
        users_by_mediator[m.id] = tuple(refs)

    slot_values: dict[SlotRef, Money] = {}
    slot_keys: dict[SlotRef, TieKey] = {}
    slots_by_advertiser: dict[EntityId, tuple[SlotRef, ...]] = {}
    for a in instance.advertisers:
        cap, value = advertiser_slots[a.id]
        rank = instance.rank(a.id)
        refs = []
        for j in range(cap):
            b = SlotRef(a.id, j)
            slot_values[b] = value
            slot_keys[b] = TieKey(value, rank, j)
            refs.append(b)
        slots_by_advertiser[a.id] = tuple(refs)

    return MarketView(user_costs, slot_values, user_keys, slot_keys, users_by_mediator, slots_by_advertiser)


def true_view(instance: Instance) -> MarketView:
    return _build_view(
        instance,
        {m.id: m.user_costs for m in instance.mediators},
        {a.id: (a.capacity, a.value) for a in instance.advertisers},
    )


def report_view(instance: Instance, reports: ReportProfile) -> MarketView:
    reports.check_covers(instance)
    return _build_view(instance, reports.mediator_costs, reports.advertiser_slots)


@dataclass(frozen=True)
class Assignment:
    """A set of user-slot pairs with no user and no slot repeated."""

    pairs: tuple[tuple[UserRef, SlotRef], ...]

    def __post_init__(self) -> None:
        users = [p for p, _ in self.pairs]
        slots = [b for _, b in self.pairs]
        if len(set(users)) != len(users):
            raise ValueError("assignment repeats a user")
        if len(set(slots)) != len(slots):
            raise ValueError("assignment repeats a slot")

    def __len__(self) -> int:
        return len(self.pairs)


def gain_from_trade(assignment: Assignment, view: MarketView) -> Money:
    """Exact sum of slot value minus user cost over the assigned pairs."""
    total = 0
    for user, slot in assignment.pairs:
        if user not in view.user_costs:
            raise ValueError(f"assignment references unknown user {user}")
        if slot not in view.slot_values:
            raise ValueError(f"assignment references unknown slot {slot}")
        total += view.slot_values[slot] - view.user_costs[user]
    return total


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    tau: int
    violations: tuple[str, ...]


def validate_instance(instance: Instance, alpha: Fraction) -> ValidationReport:
    """Check the mechanism's standing assumptions against the ground truth.

    tau is the size of the offline-optimal (canonical) assignment. Required:
    tau >= 1, 1/tau <= alpha <= 1, and no single entity brings more than
    alpha*tau users or slots.
    """
    from .canonical import tau as _tau  # local import, avoids a module cycle

    t = _tau(instance)
    violations: list[str] = []
    if t == 0:
        violations.append("tau=0: no trade has positive gain, mechanism assumptions reject the instance")
        return ValidationReport(False, 0, tuple(violations))
    alpha = Fraction(alpha)
    if not (Fraction(1, t) <= alpha <= 1):
        violations.append(f"alpha={alpha} outside [1/tau, 1] = [1/{t}, 1]")
    cap = alpha * t
    for m in instance.mediators:
        if len(m.user_costs) > cap:
            violations.append(f"{m.id}: {len(m.user_costs)} users > alpha*tau = {float(cap):.6g}")
    for a in instance.advertisers:
        if a.capacity > cap:
            violations.append(f"{a.id}: capacity {a.capacity} > alpha*tau = {float(cap):.6g}")
    return ValidationReport(not violations, t, tuple(violations))
