"""Human-readable text serialization with exact money round trips.

Documents are JSON with a ``schema_version`` and ``kind`` header. Money is
written as a decimal string on the micro-unit grid ("5", "5.25", "0.000001");
parsing rejects finer precision outright instead of rounding, and parse
errors carry the offending field path. Serialization is canonical: parsing a
document and re-serializing it reproduces the text byte for byte, which is
what the replay check compares.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Any

from .market import (
    AdvertiserSpec,
    Assignment,
    EntityId,
    Instance,
    MediatorSpec,
    Money,
    ReportProfile,
    SlotRef,
    TieKey,
    UserRef,
)
from .mechanism import (
    ArrivalEvent,
    MechanismConfig,
    MechanismOutcome,
    Thresholds,
    Trade,
    run_mechanism,
)

SCHEMA_VERSION = 1


class ParseError(Exception):
    pass


_MONEY_RE = re.compile(r"^-?\d+(\.\d{1,6})?$")


def money_to_text(amount: Money) -> str:
    sign = "-" if amount < 0 else ""
    a = abs(amount)
    whole, frac = divmod(a, 10**6)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:06d}".rstrip("0")


def money_from_text(text: str, path: str = "amount") -> Money:
    if not isinstance(text, str) or not _MONEY_RE.match(text):
        raise ParseError(f"{path}: {text!r} is not a money amount on the micro-unit grid (max 6 decimals)")
    sign = -1 if text.startswith("-") else 1
    text = text.lstrip("-")
    if "." in text:
        whole, frac = text.split(".")
        micro = int(whole) * 10**6 + int(frac.ljust(6, "0"))
    else:
        micro = int(text) * 10**6
    return sign * micro


def fraction_to_text(fr: Fraction) -> str:
    fr = Fraction(fr)
    return str(fr.numerator) if fr.denominator == 1 else f"{fr.numerator}/{fr.denominator}"


def fraction_from_text(text: str, path: str = "fraction") -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{path}: {text!r} is not a fraction") from exc


def _need(doc: dict, key: str, path: str) -> Any:
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected an object")
    if key not in doc:
        raise ParseError(f"{path}.{key}: required")
    return doc[key]


def _header(doc: dict, kind: str, path: str) -> None:
    version = _need(doc, "schema_version", path)
    if version != SCHEMA_VERSION:
        raise ParseError(f"{path}.schema_version: got {version!r}, this reader understands {SCHEMA_VERSION}")
    got = _need(doc, "kind", path)
    if got != kind:
        raise ParseError(f"{path}.kind: expected {kind!r}, got {got!r}")


def _entity_from_text(text: Any, path: str) -> EntityId:
    try:
        return EntityId.parse(text)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _user_from_text(text: str, path: str) -> UserRef:
    try:
        ent, idx = text.split(":")
        return UserRef(EntityId.parse(ent), int(idx))
    except (ValueError, AttributeError) as exc:
        raise ParseError(f"{path}: {text!r} is not a user reference") from exc


def _slot_from_text(text: str, path: str) -> SlotRef:
    try:
        ent, idx = text.split(":")
        return SlotRef(EntityId.parse(ent), int(idx))
    except (ValueError, AttributeError) as exc:
        raise ParseError(f"{path}: {text!r} is not a slot reference") from exc


def _loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level: expected an object")
    return doc


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


# -- instance ----------------------------------------------------------------


def instance_to_doc(instance: Instance) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "instance",
        "mediators": [
            {"id": str(m.id), "user_costs": [money_to_text(c) for c in m.user_costs]}
            for m in instance.mediators
        ],
        "advertisers": [
            {"id": str(a.id), "capacity": a.capacity, "value": money_to_text(a.value)}
            for a in instance.advertisers
        ],
        "tie_order": [str(e) for e in instance.tie_order],
    }


def instance_from_doc(doc: dict, path: str = "instance") -> Instance:
    _header(doc, "instance", path)
    mediators = []
    for i, m in enumerate(_need(doc, "mediators", path)):
        mp = f"{path}.mediators[{i}]"
        ident = _entity_from_text(_need(m, "id", mp), f"{mp}.id")
        costs = tuple(
            money_from_text(c, f"{mp}.user_costs[{j}]") for j, c in enumerate(_need(m, "user_costs", mp))
        )
        try:
            mediators.append(MediatorSpec(ident, costs))
        except ValueError as exc:
            raise ParseError(f"{mp}: {exc}") from exc
    advertisers = []
    for i, a in enumerate(_need(doc, "advertisers", path)):
        ap = f"{path}.advertisers[{i}]"
        ident = _entity_from_text(_need(a, "id", ap), f"{ap}.id")
        cap = _need(a, "capacity", ap)
        if not isinstance(cap, int):
            raise ParseError(f"{ap}.capacity: expected an integer")
        value = money_from_text(_need(a, "value", ap), f"{ap}.value")
        try:
            advertisers.append(AdvertiserSpec(ident, cap, value))
        except ValueError as exc:
            raise ParseError(f"{ap}: {exc}") from exc
    tie_order = tuple(
        _entity_from_text(e, f"{path}.tie_order[{i}]") for i, e in enumerate(_need(doc, "tie_order", path))
    )
    try:
        return Instance(tuple(mediators), tuple(advertisers), tie_order)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def instance_to_text(instance: Instance) -> str:
    return _dumps(instance_to_doc(instance))


def instance_from_text(text: str) -> Instance:
    return instance_from_doc(_loads(text))


# -- reports -----------------------------------------------------------------


def reports_to_doc(reports: ReportProfile) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "reports",
        "mediator_costs": {
            str(m): [money_to_text(c) for c in costs] for m, costs in sorted(reports.mediator_costs.items(), key=lambda kv: str(kv[0]))
        },
        "advertiser_slots": {
            str(a): {"capacity": cap, "value": money_to_text(v)}
            for a, (cap, v) in sorted(reports.advertiser_slots.items(), key=lambda kv: str(kv[0]))
        },
    }


def reports_from_doc(doc: dict, path: str = "reports") -> ReportProfile:
    _header(doc, "reports", path)
    mediator_costs = {}
    for key, costs in _need(doc, "mediator_costs", path).items():
        ent = _entity_from_text(key, f"{path}.mediator_costs")
        mediator_costs[ent] = tuple(
            money_from_text(c, f"{path}.mediator_costs[{key}][{j}]") for j, c in enumerate(costs)
        )
    advertiser_slots = {}
    for key, slot in _need(doc, "advertiser_slots", path).items():
        ent = _entity_from_text(key, f"{path}.advertiser_slots")
        ap = f"{path}.advertiser_slots[{key}]"
        cap = _need(slot, "capacity", ap)
        if not isinstance(cap, int):
            raise ParseError(f"{ap}.capacity: expected an integer")
        advertiser_slots[ent] = (cap, money_from_text(_need(slot, "value", ap), f"{ap}.value"))
    try:
        return ReportProfile(mediator_costs, advertiser_slots)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def reports_to_text(reports: ReportProfile) -> str:
    return _dumps(reports_to_doc(reports))


def reports_from_text(text: str) -> ReportProfile:
    return reports_from_doc(_loads(text))


# -- config ------------------------------------------------------------------


def _key_to_doc(key: TieKey) -> dict:
    return {"amount": money_to_text(key.amount), "entity_rank": key.entity_rank, "within_index": key.within_index}


def _key_from_doc(doc: dict, path: str) -> TieKey:
    amount = money_from_text(_need(doc, "amount", path), f"{path}.amount")
    rank = _need(doc, "entity_rank", path)
    within = _need(doc, "within_index", path)
    if not isinstance(rank, int) or not isinstance(within, int):
        raise ParseError(f"{path}: entity_rank and within_index must be integers")
    return TieKey(amount, rank, within)


def config_to_doc(config: MechanismConfig) -> dict:
    override = None
    if config.threshold_override is not None:
        user_key, slot_key = config.threshold_override
        override = {"user_key": _key_to_doc(user_key), "slot_key": _key_to_doc(slot_key)}
    return {
        "alpha": fraction_to_text(config.alpha),
        "r": None if config.r is None else fraction_to_text(config.r),
        "seed": config.seed,
        "variant": config.variant,
        "threshold_override": override,
        "forced_arrival_order": None
        if config.forced_arrival_order is None
        else [str(e) for e in config.forced_arrival_order],
        "forced_observation_count": config.forced_observation_count,
    }


def config_from_doc(doc: dict, path: str = "config") -> MechanismConfig:
    alpha = fraction_from_text(_need(doc, "alpha", path), f"{path}.alpha")
    r_text = _need(doc, "r", path)
    r = None if r_text is None else fraction_from_text(r_text, f"{path}.r")
    seed = _need(doc, "seed", path)
    if not isinstance(seed, int):
        raise ParseError(f"{path}.seed: expected an integer")
    variant = _need(doc, "variant", path)
    override_doc = _need(doc, "threshold_override", path)
    override = None
    if override_doc is not None:
        override = (
            _key_from_doc(_need(override_doc, "user_key", f"{path}.threshold_override"), f"{path}.threshold_override.user_key"),
            _key_from_doc(_need(override_doc, "slot_key", f"{path}.threshold_override"), f"{path}.threshold_override.slot_key"),
        )
    forced_order_doc = _need(doc, "forced_arrival_order", path)
    forced_order = None
    if forced_order_doc is not None:
        forced_order = tuple(
            _entity_from_text(e, f"{path}.forced_arrival_order[{i}]") for i, e in enumerate(forced_order_doc)
        )
    forced_count = _need(doc, "forced_observation_count", path)
    if forced_count is not None and not isinstance(forced_count, int):
        raise ParseError(f"{path}.forced_observation_count: expected an integer or null")
    return MechanismConfig(
        alpha=alpha,
        r=r,
        seed=seed,
        threshold_override=override,
        forced_arrival_order=forced_order,
        forced_observation_count=forced_count,
        variant=variant,
    )


# -- outcome -----------------------------------------------------------------


def _thresholds_to_doc(t: Thresholds) -> dict:
    return {
        "dummy": t.is_dummy,
        "user_key": None if t.user_key is None else _key_to_doc(t.user_key),
        "slot_key": None if t.slot_key is None else _key_to_doc(t.slot_key),
        "location": t.location,
        "observed_size": t.observed_size,
        "injected": t.injected,
    }


def _thresholds_from_doc(doc: dict, path: str) -> Thresholds:
    user_key_doc = _need(doc, "user_key", path)
    slot_key_doc = _need(doc, "slot_key", path)
    return Thresholds(
        None if user_key_doc is None else _key_from_doc(user_key_doc, f"{path}.user_key"),
        None if slot_key_doc is None else _key_from_doc(slot_key_doc, f"{path}.slot_key"),
        _need(doc, "location", path),
        _need(doc, "observed_size", path),
        _need(doc, "injected", path),
    )


def outcome_to_doc(outcome: MechanismOutcome) -> dict:
    return {
        "alpha": fraction_to_text(outcome.alpha),
        "r": fraction_to_text(outcome.r),
        "seed": outcome.seed,
        "variant": outcome.variant,
        "injected_thresholds": outcome.injected_thresholds,
        "forced_arrival": outcome.forced_arrival,
        "forced_observation": outcome.forced_observation,
        "arrival_order": [str(e) for e in outcome.arrival_order],
        "observation_count": outcome.observation_count,
        "observed_mediators": [str(e) for e in outcome.observed_mediators],
        "observed_advertisers": [str(e) for e in outcome.observed_advertisers],
        "thresholds": _thresholds_to_doc(outcome.thresholds),
        "events": [
            {
                "arrival": str(e.arrival),
                "trades": [
                    {
                        "user": str(t.user),
                        "slot": str(t.slot),
                        "charge": money_to_text(t.charge),
                        "payment": money_to_text(t.payment),
                    }
                    for t in e.trades
                ],
                "pay_steps": [[str(u), money_to_text(x)] for u, x in e.pay_steps],
                "targets": [[str(u), money_to_text(x)] for u, x in e.targets],
                "unassigned_assignable_users": e.unassigned_assignable_users,
                "unassigned_assignable_slots": e.unassigned_assignable_slots,
            }
            for e in outcome.events
        ],
        "assignment": [[str(u), str(b)] for u, b in outcome.assignment.pairs],
        "charges": {str(a): money_to_text(x) for a, x in sorted(outcome.charges.items(), key=lambda kv: str(kv[0]))},
        "receipts": {str(m): money_to_text(x) for m, x in sorted(outcome.receipts.items(), key=lambda kv: str(kv[0]))},
        "final_targets": {str(u): money_to_text(x) for u, x in sorted(outcome.final_targets.items())},
        "gft": money_to_text(outcome.gft),
    }


def outcome_from_doc(doc: dict, path: str = "outcome") -> MechanismOutcome:
    events = []
    for i, e in enumerate(_need(doc, "events", path)):
        ep = f"{path}.events[{i}]"
        trades = tuple(
            Trade(
                _user_from_text(_need(t, "user", ep), f"{ep}.user"),
                _slot_from_text(_need(t, "slot", ep), f"{ep}.slot"),
                money_from_text(_need(t, "charge", ep), f"{ep}.charge"),
                money_from_text(_need(t, "payment", ep), f"{ep}.payment"),
            )
            for t in _need(e, "trades", ep)
        )
        events.append(
            ArrivalEvent(
                arrival=_entity_from_text(_need(e, "arrival", ep), f"{ep}.arrival"),
                trades=trades,
                pay_steps=tuple(
                    (_user_from_text(u, f"{ep}.pay_steps"), money_from_text(x, f"{ep}.pay_steps"))
                    for u, x in _need(e, "pay_steps", ep)
                ),
                targets=tuple(
                    (_user_from_text(u, f"{ep}.targets"), money_from_text(x, f"{ep}.targets"))
                    for u, x in _need(e, "targets", ep)
                ),
                unassigned_assignable_users=_need(e, "unassigned_assignable_users", ep),
                unassigned_assignable_slots=_need(e, "unassigned_assignable_slots", ep),
            )
        )
    return MechanismOutcome(
        alpha=fraction_from_text(_need(doc, "alpha", path), f"{path}.alpha"),
        r=fraction_from_text(_need(doc, "r", path), f"{path}.r"),
        seed=_need(doc, "seed", path),
        variant=_need(doc, "variant", path),
        injected_thresholds=_need(doc, "injected_thresholds", path),
        forced_arrival=_need(doc, "forced_arrival", path),
        forced_observation=_need(doc, "forced_observation", path),
        arrival_order=tuple(_entity_from_text(e, f"{path}.arrival_order") for e in _need(doc, "arrival_order", path)),
        observation_count=_need(doc, "observation_count", path),
        observed_mediators=tuple(
            _entity_from_text(e, f"{path}.observed_mediators") for e in _need(doc, "observed_mediators", path)
        ),
        observed_advertisers=tuple(
            _entity_from_text(e, f"{path}.observed_advertisers") for e in _need(doc, "observed_advertisers", path)
        ),
        thresholds=_thresholds_from_doc(_need(doc, "thresholds", path), f"{path}.thresholds"),
        events=tuple(events),
        assignment=Assignment(
            tuple(
                (_user_from_text(u, f"{path}.assignment"), _slot_from_text(b, f"{path}.assignment"))
                for u, b in _need(doc, "assignment", path)
            )
        ),
        charges={
            _entity_from_text(a, f"{path}.charges"): money_from_text(x, f"{path}.charges[{a}]")
            for a, x in _need(doc, "charges", path).items()
        },
        receipts={
            _entity_from_text(m, f"{path}.receipts"): money_from_text(x, f"{path}.receipts[{m}]")
            for m, x in _need(doc, "receipts", path).items()
        },
        final_targets={
            _user_from_text(u, f"{path}.final_targets"): money_from_text(x, f"{path}.final_targets[{u}]")
            for u, x in _need(doc, "final_targets", path).items()
        },
        gft=money_from_text(_need(doc, "gft", path), f"{path}.gft"),
    )


# -- run report ----------------------------------------------------------------


def run_report_to_doc(
    instance: Instance,
    reports: ReportProfile,
    config: MechanismConfig,
    outcome: MechanismOutcome,
) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "run_report",
        "instance": instance_to_doc(instance),
        "reports": reports_to_doc(reports),
        "config": config_to_doc(config),
        "outcome": outcome_to_doc(outcome),
    }


def run_report_to_text(instance, reports, config, outcome) -> str:
    return _dumps(run_report_to_doc(instance, reports, config, outcome))


def run_report_from_text(text: str) -> dict:
    doc = _loads(text)
    _header(doc, "run_report", "run_report")
    for key in ("instance", "reports", "config", "outcome"):
        _need(doc, key, "run_report")
    return doc


def replay_run_report(doc: dict) -> tuple[bool, str]:
    """Re-run the embedded configuration and compare outcomes byte for byte."""
    instance = instance_from_doc(doc["instance"])
    reports = reports_from_doc(doc["reports"])
    config = config_from_doc(doc["config"])
    fresh = run_mechanism(instance, reports, config)
    original_text = _dumps(doc["outcome"])
    fresh_text = _dumps(outcome_to_doc(fresh))
    if original_text == fresh_text:
        return True, "replay matches recorded outcome exactly"
    for lineno, (a, b) in enumerate(zip(original_text.splitlines(), fresh_text.splitlines()), start=1):
        if a != b:
            return False, f"replay diverges at outcome line {lineno}: recorded {a.strip()!r} vs fresh {b.strip()!r}"
    return False, "replay diverges: outcome lengths differ"
