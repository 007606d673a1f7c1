"""Shared instance builders for the test suite."""

import random
from fractions import Fraction

import pytest

from observeprice import (
    AdvertiserSpec,
    GeneratorConfig,
    Instance,
    MechanismConfig,
    MediatorSpec,
    advertiser_id,
    constant,
    generate_instance,
    mediator_id,
    random_tie_order,
    threshold_keys_from_amounts,
    uniform,
)

MICRO = 10**6


def build_instance(mediator_costs, advertiser_slots, seed=0):
    """Instance from plain python data: [[costs...]...], [(cap, value)...]."""
    meds = tuple(
        MediatorSpec(mediator_id(i), tuple(costs)) for i, costs in enumerate(mediator_costs)
    )
    ads = tuple(
        AdvertiserSpec(advertiser_id(i), cap, value)
        for i, (cap, value) in enumerate(advertiser_slots)
    )
    ids = [m.id for m in meds] + [a.id for a in ads]
    return Instance(meds, ads, random_tie_order(ids, random.Random(seed)))


def worked_example():
    """Three-mediator instance whose standard run is fully known by hand.

    m0 holds users at costs 1, 3, 5 and a0 brings two slots at value 7. The
    remaining entities only exist to raise the optimal trade count so the
    per-entity market share cap holds; their users cost 5 (at the injected
    user threshold 4, never assignable) and their slots are worth 6 (not
    strictly above the injected slot threshold 6, never assignable).
    """
    instance = build_instance(
        [[1, 3, 5], [5], [5]],
        [(2, 7), (1, 6), (1, 6)],
        seed=3,
    )
    config = MechanismConfig(
        alpha=Fraction(3, 4),
        threshold_override=threshold_keys_from_amounts(4, 6, instance),
        forced_arrival_order=(
            mediator_id(0),
            advertiser_id(0),
            mediator_id(1),
            mediator_id(2),
            advertiser_id(1),
            advertiser_id(2),
        ),
        forced_observation_count=0,
    )
    return instance, config


def desk_instance(seed, n_mediators=3, n_advertisers=3):
    """Small random instance valid at alpha = 1, for injected-threshold runs."""
    return generate_instance(
        GeneratorConfig(
            n_mediators=n_mediators,
            n_advertisers=n_advertisers,
            users_per_mediator=uniform(1, 3),
            capacity=uniform(1, 3),
            cost=uniform(0, 12 * MICRO),
            value=uniform(0, 12 * MICRO),
            alpha=Fraction(1),
            seed=seed,
        )
    )


def desk_config(instance, seed, variant="standard"):
    """Injected mid-range thresholds and a short observation phase."""
    return MechanismConfig(
        alpha=Fraction(1),
        r=Fraction(1, 10),
        seed=seed,
        threshold_override=threshold_keys_from_amounts(6 * MICRO, 7 * MICRO, instance),
        variant=variant,
    )


def organic_instance(seed, per_side=80):
    """Every value beats every cost, so tau equals the side count and the
    computed thresholds are non-dummy at alpha = 1/70 (8 * alpha < r**3)."""
    return generate_instance(
        GeneratorConfig(
            n_mediators=per_side,
            n_advertisers=per_side,
            users_per_mediator=constant(1),
            capacity=constant(1),
            cost=uniform(0, MICRO),
            value=uniform(MICRO + 1, 2 * MICRO),
            alpha=Fraction(1, 70),
            seed=seed,
        )
    )


ORGANIC_ALPHA = Fraction(1, 70)


@pytest.fixture(scope="session")
def worked():
    instance, config = worked_example()
    return instance, config
