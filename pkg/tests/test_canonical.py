"""Canonical assignment vs a brute-force optimum oracle."""

import random

import pytest

from observeprice import (
    brute_force_optimal_gft,
    canonical_assignment,
    gain_from_trade,
    optimal_gain,
    tau,
    true_view,
)
from conftest import build_instance


def _canon(inst):
    view = true_view(inst)
    return canonical_assignment(view.all_users, view.all_slots, view), view


def test_zip_stops_at_first_unprofitable_pair():
    # users 1, 3, 6 against slots 5, 4, 2: pairs (1,5), (3,4) trade, (6,2) does not
    inst = build_instance([[1, 3, 6]], [(1, 5), (1, 4), (1, 2)], seed=0)
    canon, view = _canon(inst)
    assert canon.size == 2
    assert gain_from_trade(canon.as_assignment(), view) == (5 - 1) + (4 - 3)


def test_two_by_two_gain():
    inst = build_instance([[1, 2]], [(1, 10), (1, 9)], seed=0)
    canon, view = _canon(inst)
    assert canon.size == 2
    assert gain_from_trade(canon.as_assignment(), view) == 16


def test_tau_counts_only_profitable_prefix():
    inst = build_instance([[1], [2], [3], [4]], [(1, 10), (1, 9), (1, 8), (1, 0)], seed=0)
    assert tau(inst) == 3


def test_pairs_are_cheapest_user_to_highest_slot():
    inst = build_instance([[3, 1]], [(1, 4), (1, 9)], seed=0)
    canon, view = _canon(inst)
    (u0, s0), (u1, s1) = canon.ordered_pairs
    assert view.user_costs[u0] == 1 and view.slot_values[s0] == 9
    assert view.user_costs[u1] == 3 and view.slot_values[s1] == 4


def test_locations_are_one_indexed():
    inst = build_instance([[1, 2]], [(2, 9)], seed=0)
    canon, view = _canon(inst)
    assert view.user_costs[canon.user_at(1)] == 1
    assert view.user_costs[canon.user_at(2)] == 2
    with pytest.raises(ValueError):
        canon.user_at(0)
    with pytest.raises(ValueError):
        canon.slot_at(3)


def test_empty_sides():
    inst = build_instance([[5]], [(1, 2)], seed=0)  # no profitable pair
    canon, _ = _canon(inst)
    assert canon.size == 0
    assert optimal_gain(inst) == 0


def test_equal_cost_and_value_does_not_trade():
    """A pair needs slot key strictly above user key; equal amounts resolve
    by entity rank, so a trade can still happen when ranks line up."""
    inst = build_instance([[5]], [(1, 5)], seed=0)
    canon, view = _canon(inst)
    u = view.all_users[0]
    s = view.all_slots[0]
    expected = 1 if view.user_keys[u] < view.slot_keys[s] else 0
    assert canon.size == expected
    assert optimal_gain(inst) == 0  # either way the margin is zero


def test_matches_brute_force_on_random_instances():
    """Seeded sweep against exhaustive search, amounts drawn tiny to force ties."""
    rng = random.Random(42)
    for trial in range(300):
        n_m = rng.randint(1, 3)
        n_a = rng.randint(1, 3)
        inst = build_instance(
            [[rng.randrange(6) for _ in range(rng.randint(1, 2))] for _ in range(n_m)],
            [(rng.randint(1, 2), rng.randrange(6)) for _ in range(n_a)],
            seed=trial,
        )
        view = true_view(inst)
        canon = canonical_assignment(view.all_users, view.all_slots, view)
        got = gain_from_trade(canon.as_assignment(), view)
        want = brute_force_optimal_gft(view.all_users, view.all_slots, view)
        assert got == want, f"trial {trial}: canonical {got} != brute force {want}"


def test_optimal_gain_equals_brute_force_on_subsets():
    """Canonical restricted to entity subsets (the observed sub-market case)."""
    rng = random.Random(9)
    for trial in range(100):
        inst = build_instance(
            [[rng.randrange(8) for _ in range(2)] for _ in range(3)],
            [(2, rng.randrange(8)) for _ in range(2)],
            seed=trial,
        )
        view = true_view(inst)
        meds = [m.id for m in inst.mediators if rng.random() < 0.5]
        ads = [a.id for a in inst.advertisers if rng.random() < 0.5]
        users = view.users_of(meds)
        slots = view.slots_of(ads)
        canon = canonical_assignment(users, slots, view)
        got = gain_from_trade(canon.as_assignment(), view)
        assert got == brute_force_optimal_gft(users, slots, view)


def test_brute_force_caps_problem_size():
    inst = build_instance([[1] * 9], [(9, 5)], seed=0)
    view = true_view(inst)
    with pytest.raises(ValueError):
        brute_force_optimal_gft(view.all_users, view.all_slots, view)
