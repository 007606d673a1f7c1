"""Utility accounting, run invariants, and deviation machinery."""

import random
from dataclasses import replace
from fractions import Fraction

import pytest

from observeprice import (
    DeviationCase,
    MechanismConfig,
    ReportProfile,
    UserRef,
    advertiser_id,
    all_players,
    check_budget_balance,
    check_continuous_ir,
    check_observed_never_trade,
    check_online_legality,
    check_pay_targets_monotone,
    check_surplus_invariant,
    deviation_test,
    final_utility,
    generate_misreports,
    incentive_sweep,
    mediator_id,
    run_mechanism,
    truthful_run,
    truthful_sweep,
    utility_trajectory,
)
from conftest import desk_config, desk_instance, worked_example


def _worked_run(variant="standard"):
    instance, config = worked_example()
    return instance, truthful_run(instance, replace(config, variant=variant))


# -- utilities --------------------------------------------------------------------


def test_worked_example_final_utilities():
    instance, out = _worked_run()
    m0, a0 = mediator_id(0), advertiser_id(0)
    assert final_utility(out, instance, UserRef(m0, 0)) == 3  # paid 4, cost 1
    assert final_utility(out, instance, UserRef(m0, 1)) == 1
    assert final_utility(out, instance, UserRef(m0, 2)) == 0  # never assigned
    assert final_utility(out, instance, m0) == 4  # 2 * 4 received - costs 1 - 3
    assert final_utility(out, instance, a0) == 2  # 2 * 7 value - 12 charged
    for idle in (mediator_id(1), mediator_id(2), advertiser_id(1), advertiser_id(2)):
        assert final_utility(out, instance, idle) == 0


def test_trajectories_are_stepwise_and_start_at_zero():
    instance, out = _worked_run()
    m0 = mediator_id(0)
    user = utility_trajectory(out, instance, UserRef(m0, 0))
    # arrivals: m0, a0 (both trades), m1, m2, a1, a2
    assert user.series == (0, 0, 3, 3, 3, 3, 3)
    mediator = utility_trajectory(out, instance, m0)
    assert mediator.series == (0, 0, 4, 4, 4, 4, 4)
    advertiser = utility_trajectory(out, instance, advertiser_id(0))
    assert advertiser.series == (0, 0, 2, 2, 2, 2, 2)


def test_utility_trajectory_rejects_unknown_players():
    instance, out = _worked_run()
    with pytest.raises(KeyError):
        utility_trajectory(out, instance, mediator_id(9))
    with pytest.raises(ValueError):
        utility_trajectory(out, instance, UserRef(mediator_id(0), 99))
    with pytest.raises(TypeError):
        utility_trajectory(out, instance, "m0")


def test_all_players_enumerates_every_role():
    instance, _ = worked_example()
    players = all_players(instance)
    assert UserRef(mediator_id(0), 2) in players
    assert mediator_id(2) in players
    assert advertiser_id(1) in players
    assert len(players) == 5 + 3 + 3  # users + mediators + advertisers


# -- run checks ---------------------------------------------------------------------


def test_run_checks_pass_on_truthful_runs():
    inst = desk_instance(7)
    for seed in range(8):
        out = truthful_run(inst, desk_config(inst, seed))
        assert check_budget_balance(out).ok
        assert check_surplus_invariant(out).ok
        assert check_online_legality(out).ok
        assert check_pay_targets_monotone(out).ok
        assert check_observed_never_trade(out).ok


def test_budget_balance_catches_underfunded_totals():
    instance, out = _worked_run()
    tampered = replace(out, receipts={mediator_id(0): 10**9})
    got = check_budget_balance(tampered)
    assert not got.ok


def test_budget_balance_catches_per_trade_subsidy():
    instance, out = _worked_run()
    event = out.events[1]
    bad_trades = tuple(t._replace(charge=1) for t in event.trades)
    tampered = replace(out, events=out.events[:1] + (replace(event, trades=bad_trades),) + out.events[2:])
    assert not check_budget_balance(tampered).ok


def test_solvency_uses_event_snapshots():
    """Recommended totals above the receipts collected so far must flag."""
    instance, out = _worked_run()
    event = out.events[1]
    inflated = tuple((u, x + 10**6) for u, x in event.targets)
    tampered = replace(out, events=out.events[:1] + (replace(event, targets=inflated),) + out.events[2:])
    assert not check_budget_balance(tampered).ok


def test_continuous_ir_fails_on_dip():
    instance, out = _worked_run()
    traj = utility_trajectory(out, instance, UserRef(mediator_id(0), 0))
    assert check_continuous_ir(traj).ok
    dipped = replace(traj, series=traj.series[:3] + (traj.series[3] - 1,) + traj.series[4:])
    assert not check_continuous_ir(dipped).ok


def test_surplus_invariant_flags_idle_pairs():
    instance, out = _worked_run()
    event = out.events[1]
    tampered = replace(
        out,
        events=out.events[:1]
        + (replace(event, unassigned_assignable_users=1, unassigned_assignable_slots=2),)
        + out.events[2:],
    )
    assert not check_surplus_invariant(tampered).ok


def test_online_legality_flags_unrelated_trades():
    instance, out = _worked_run()
    trade_event = out.events[1]
    foreign = out.events[2]  # m1's arrival, no trades of its own
    tampered = replace(
        out,
        events=out.events[:2] + (replace(foreign, trades=trade_event.trades),) + out.events[3:],
    )
    assert not check_online_legality(tampered).ok


def test_pay_monotone_flags_decreasing_targets():
    instance, out = _worked_run()
    later = out.events[2]  # quiet arrival that repeats the target snapshot
    shrunk = tuple((u, x - 1) for u, x in later.targets)
    tampered = replace(out, events=out.events[:2] + (replace(later, targets=shrunk),) + out.events[3:])
    assert not check_pay_targets_monotone(tampered).ok


def test_observed_never_trade_flags_planted_observation():
    instance, out = _worked_run()
    tampered = replace(out, observed_mediators=(mediator_id(0),))
    assert not check_observed_never_trade(tampered).ok


# -- misreports ----------------------------------------------------------------------


def test_generate_misreports_each_role():
    inst = desk_instance(2)
    rng = random.Random(0)
    user = UserRef(inst.mediators[0].id, 0)
    for player in (user, inst.mediators[0].id, inst.advertisers[0].id):
        cases = generate_misreports(player, inst, rng, 8)
        assert 0 < len(cases) <= 8
        assert all(c.player == player for c in cases)


def test_generate_misreports_skips_truthful_payload():
    inst = desk_instance(2)
    truth = ReportProfile.truthful(inst)
    rng = random.Random(1)
    for player in all_players(inst):
        for case in generate_misreports(player, inst, rng, 12):
            assert case.apply(truth) != truth


def test_mediator_misreports_include_length_changes():
    inst = desk_instance(3)
    mediator = next(m.id for m in inst.mediators if len(m.user_costs) >= 2)
    cases = generate_misreports(mediator, inst, random.Random(4), 100)
    lengths = {len(c.mediator_costs) for c in cases}
    true_len = len(inst.mediator(mediator).user_costs)
    assert any(n < true_len for n in lengths)
    assert any(n > true_len for n in lengths)


def test_deviation_case_apply_targets_one_player():
    inst = desk_instance(2)
    truth = ReportProfile.truthful(inst)
    case = DeviationCase(inst.advertisers[0].id, "cap bump", advertiser_slots=(9, 5))
    got = case.apply(truth)
    assert got.advertiser_slots[inst.advertisers[0].id] == (9, 5)
    assert got.mediator_costs == truth.mediator_costs


def test_deviation_test_reports_exact_utilities():
    instance, config = worked_example()
    user = UserRef(mediator_id(0), 0)
    same = DeviationCase(user, "cost 1->2", user_cost=2)
    verdicts = deviation_test(instance, same, config, seeds=[0, 1])
    for v in verdicts:
        assert v.truthful_utility == 3
        assert v.deviant_utility == 3  # still assigned, payment set by others
        assert not v.profitable
    hiding = DeviationCase(user, "cost 1->big", user_cost=10**12)
    for v in deviation_test(instance, hiding, config, seeds=[0]):
        assert v.deviant_utility == 0
        assert not v.profitable


def test_truthful_sweep_counts_and_passes():
    inst = desk_instance(5)
    runs = [(inst, desk_config(inst, seed)) for seed in range(6)]
    result, outcomes = truthful_sweep(runs, collect_outcomes=True)
    assert result.ok
    assert result.runs == 6
    assert len(outcomes) == 6
    assert result.trajectories == 6 * len(all_players(inst))


def test_incentive_sweep_clean_on_standard_engine():
    items = [(desk_instance(s), desk_config(desk_instance(s), 0)) for s in (11, 12)]
    result = incentive_sweep(items, misreports_per_role=4, seeds_per_case=4, rng=random.Random(0))
    assert result.ok
    assert result.deviation_pairs > 0


# -- negative controls ------------------------------------------------------------------


def test_skip_updates_variant_breaks_continuous_ir():
    instance, config = worked_example()
    broken = replace(config, variant="skip_user_payment_updates")
    result, _ = truthful_sweep([(instance, broken)])
    assert not result.ok
    assert any("continuous_ir" in v for v in result.violations)


def _fabrication_prone_config(config):
    """Let the single-user mediator m1 arrive before m0 so an invented cheap
    user can still find an open assignable slot."""
    return replace(
        config,
        forced_arrival_order=(
            mediator_id(1),
            advertiser_id(0),
            mediator_id(0),
            mediator_id(2),
            advertiser_id(1),
            advertiser_id(2),
        ),
    )


def test_pay_slot_value_variant_rewards_fabrication():
    """Paying v(b) per trade lets a mediator profit from inventing a cheap
    user: the fake entry books a slot at 6 while the real user costs 5."""
    instance, config = worked_example()
    config = _fabrication_prone_config(config)
    broken = replace(config, variant="pay_slot_value")
    fabricate = DeviationCase(mediator_id(1), "append fake", mediator_costs=(5, 0))
    verdicts = deviation_test(instance, fabricate, broken, seeds=[0])
    assert verdicts[0].truthful_utility == 0
    assert verdicts[0].deviant_utility == 1  # paid the slot value 6, delivers at cost 5
    assert verdicts[0].profitable
    # same deviation under the standard engine is a loss, not a gain
    honest = deviation_test(instance, fabricate, config, seeds=[0])
    assert honest[0].deviant_utility == -1  # paid c threshold 4 for a cost-5 user
    assert not honest[0].profitable


def test_pay_slot_value_caught_by_incentive_sweep():
    instance, config = worked_example()
    broken = replace(_fabrication_prone_config(config), variant="pay_slot_value")
    result = incentive_sweep(
        [(instance, broken)], misreports_per_role=20, seeds_per_case=2, rng=random.Random(2)
    )
    assert any("profitable deviation" in v for v in result.violations)
