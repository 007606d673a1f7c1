"""Diagnostics behind the competitive-ratio analysis, plus experiments.

For a truthful run this module rebuilds the sample-split bookkeeping the
ratio argument rests on: the offline-optimal users/slots, the slightly
shortened "core" prefix of the optimum, the set of post-observation
users/slots that clear the thresholds, a trailing random block of arrivals,
and the marginal retained slot value ``ell``. It then evaluates the
concentration event those proofs condition on, so Monte Carlo sweeps can
compare the event's empirical frequency against its analytic lower bound.

Experiments report raw and zero-clamped analytic bounds side by side; at
desk scales the bounds are often vacuous and the point of the lab is the
empirical trend, not the constant.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .canonical import canonical_assignment
from .market import EntityId, Instance, Money, SlotRef, UserRef, true_view
from .mechanism import (
    MechanismConfig,
    MechanismOutcome,
    cbrt_term_dominates,
    ceil_minus_cbrt,
    truthful_run,
)


def analytic_bound(alpha: float, r: float) -> float:
    """Analytic competitive-ratio lower bound for given alpha and r (raw)."""
    a3 = alpha ** (1.0 / 3.0)
    return 1.0 - r - 22.0 / r * a3 - 10.0 * math.exp(-2.0 / a3)


def competitive_ratio_bound(alpha: float) -> float:
    """Bound at the recommended observation rate (raw, usually negative at desk scale)."""
    a6 = alpha ** (1.0 / 6.0)
    a3 = alpha ** (1.0 / 3.0)
    return 1.0 - 9.5 * a6 - 10.0 * math.exp(-2.0 / a3)


def event_probability_bound(alpha: float) -> float:
    """Analytic lower bound on the concentration event's probability (raw)."""
    return 1.0 - 10.0 * math.exp(-2.0 / alpha ** (1.0 / 3.0))


def clamp01(x: float) -> float:
    return max(0.0, x)


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95 percent Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ValueError("need n > 0")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class EventFlags:
    """The concentration event and its pieces, exactly evaluated."""

    observed_opt_slots_ok: bool  # | |B_o ∩ observed| - r|B_o| |  <= a^(1/3) tau
    observed_opt_users_ok: bool
    observed_core_slots_ok: bool  # same for the shortened core prefix
    observed_core_users_ok: bool
    spare_slots_covered: bool  # |clearing slots outside the trailing block| <= |clearing users|
    spare_users_covered: bool
    core_slots_subset: bool  # unobserved core slots all clear the threshold
    core_users_subset: bool
    ell_sandwich: bool  # every clearing user cost <= ell <= every clearing slot value
    clearing_within_optimum: bool  # clearing users/slots sit inside the offline optimum

    @property
    def concentration(self) -> bool:
        return (
            self.observed_opt_slots_ok
            and self.observed_opt_users_ok
            and self.observed_core_slots_ok
            and self.observed_core_users_ok
        )

    @property
    def event(self) -> bool:
        return self.concentration and self.spare_slots_covered and self.spare_users_covered


@dataclass(frozen=True)
class DiagnosticSets:
    tau: int
    opt_users: tuple[UserRef, ...]  # users the offline optimum assigns
    opt_slots: tuple[SlotRef, ...]
    core_users: tuple[UserRef, ...]  # optimum prefix of length ceil((1 - 6/r a^(1/3)) tau)
    core_slots: tuple[SlotRef, ...]
    clearing_users: tuple[UserRef, ...]  # post-observation users below the cost threshold
    clearing_slots: tuple[SlotRef, ...]
    ell: Money  # value of the optimum's last retained slot
    trailing_count: int
    trailing_mediators: tuple[EntityId, ...]
    trailing_advertisers: tuple[EntityId, ...]
    observed_canonical_size: int
    flags: EventFlags


def _abs_dev_within_cbrt(count: int, r: Fraction, total: int, alpha: Fraction, tau_: int) -> bool:
    """Exactly decide |count - r*total| <= alpha^(1/3) * tau."""
    d = abs(Fraction(count) - Fraction(r) * total)
    return d**3 <= Fraction(alpha) * tau_**3


def compute_diagnostic_sets(
    instance: Instance,
    outcome: MechanismOutcome,
    rng: random.Random,
) -> DiagnosticSets:
    """Rebuild the analysis sets for one truthful run.

    The trailing block is resampled here (it is an analysis device, not part
    of the mechanism), drawing each post-observation entity into the block
    with probability min(1, 16/r * alpha^(1/3)).
    """
    alpha = outcome.alpha
    r = outcome.r
    view = true_view(instance)
    cano = canonical_assignment(view.all_users, view.all_slots, view)
    tau_ = cano.size
    if tau_ == 0:
        raise ValueError("tau=0: diagnostics need a non-trivial optimum")
    opt_users = tuple(u for u, _ in cano.ordered_pairs)
    opt_slots = tuple(b for _, b in cano.ordered_pairs)
    ell = view.slot_values[opt_slots[-1]]

    coeff = Fraction(6 * tau_) / r
    if cbrt_term_dominates(tau_, coeff, alpha):
        core_len = 0
    else:
        core_len = max(0, min(tau_, ceil_minus_cbrt(tau_, coeff, alpha)))
    core_users = opt_users[:core_len]
    core_slots = opt_slots[:core_len]

    observed_m = set(outcome.observed_mediators)
    observed_a = set(outcome.observed_advertisers)
    thresholds = outcome.thresholds
    clearing_users = tuple(
        u
        for u in view.all_users
        if u.mediator not in observed_m and thresholds.user_assignable(view.user_keys[u])
    )
    clearing_slots = tuple(
        b
        for b in view.all_slots
        if b.advertiser not in observed_a and thresholds.slot_assignable(view.slot_keys[b])
    )

    post = outcome.post_observation_order
    p_block = min(1.0, float(Fraction(16) / r) * float(alpha) ** (1.0 / 3.0))
    picks = [e for e in post if rng.random() < p_block]
    f = len(picks)
    trailing = post[len(post) - f :] if f else ()
    trailing_m = tuple(e for e in trailing if e.kind == "mediator")
    trailing_a = tuple(e for e in trailing if e.kind == "advertiser")

    # Exact concentration checks on the observed split.
    opt_slots_observed = sum(1 for b in opt_slots if b.advertiser in observed_a)
    opt_users_observed = sum(1 for u in opt_users if u.mediator in observed_m)
    core_slots_observed = sum(1 for b in core_slots if b.advertiser in observed_a)
    core_users_observed = sum(1 for u in core_users if u.mediator in observed_m)

    trailing_m_set = set(trailing_m)
    trailing_a_set = set(trailing_a)
    spare_slots = sum(1 for b in clearing_slots if b.advertiser not in trailing_a_set)
    spare_users = sum(1 for u in clearing_users if u.mediator not in trailing_m_set)

    clearing_user_set = set(clearing_users)
    clearing_slot_set = set(clearing_slots)
    core_users_subset = all(u in clearing_user_set for u in core_users if u.mediator not in observed_m)
    core_slots_subset = all(b in clearing_slot_set for b in core_slots if b.advertiser not in observed_a)

    ell_sandwich = all(view.user_costs[u] <= ell for u in clearing_users) and all(
        ell <= view.slot_values[b] for b in clearing_slots
    )
    opt_user_set = set(opt_users)
    opt_slot_set = set(opt_slots)
    clearing_within = all(u in opt_user_set for u in clearing_users) and all(
        b in opt_slot_set for b in clearing_slots
    )

    flags = EventFlags(
        observed_opt_slots_ok=_abs_dev_within_cbrt(opt_slots_observed, r, len(opt_slots), alpha, tau_),
        observed_opt_users_ok=_abs_dev_within_cbrt(opt_users_observed, r, len(opt_users), alpha, tau_),
        observed_core_slots_ok=_abs_dev_within_cbrt(core_slots_observed, r, len(core_slots), alpha, tau_),
        observed_core_users_ok=_abs_dev_within_cbrt(core_users_observed, r, len(core_users), alpha, tau_),
        spare_slots_covered=spare_slots <= len(clearing_users),
        spare_users_covered=spare_users <= len(clearing_slots),
        core_slots_subset=core_slots_subset,
        core_users_subset=core_users_subset,
        ell_sandwich=ell_sandwich,
        clearing_within_optimum=clearing_within,
    )

    # Always-true sandwich facts, asserted on every diagnostic pass.
    obs_cano = canonical_assignment(view.users_of(outcome.observed_mediators), view.slots_of(outcome.observed_advertisers), view)
    lo = min(opt_users_observed, opt_slots_observed)
    hi = max(opt_users_observed, opt_slots_observed)
    if not lo <= obs_cano.size <= hi:
        raise AssertionError("observed canonical size escaped the min/max sandwich")
    if not all(view.user_costs[u] <= ell for u in opt_users):
        raise AssertionError("an offline-optimal user cost exceeds ell")
    if not all(ell <= view.slot_values[b] for b in opt_slots):
        raise AssertionError("ell exceeds an offline-optimal slot value")

    return DiagnosticSets(
        tau=tau_,
        opt_users=opt_users,
        opt_slots=opt_slots,
        core_users=core_users,
        core_slots=core_slots,
        clearing_users=clearing_users,
        clearing_slots=clearing_slots,
        ell=ell,
        trailing_count=f,
        trailing_mediators=trailing_m,
        trailing_advertisers=trailing_a,
        observed_canonical_size=obs_cano.size,
        flags=flags,
    )


# -- experiments -----------------------------------------------------------------


@dataclass
class EventFrequencyResult:
    alpha: Fraction
    r: Fraction
    seeds: int
    event_count: int
    concentration_count: int
    event_frequency: float
    concentration_frequency: float
    event_wilson: tuple[float, float]
    concentration_wilson: tuple[float, float]
    bound_raw: float
    bound_clamped: float

    @property
    def meets_bound(self) -> bool:
        return self.event_frequency >= self.bound_clamped


def event_frequency_experiment(
    instance: Instance,
    alpha: Fraction,
    n_seeds: int,
    r: Optional[Fraction] = None,
    base_seed: int = 0,
) -> EventFrequencyResult:
    """Monte Carlo frequency of the concentration event on truthful runs."""
    event_count = 0
    conc_count = 0
    r_used = None
    for i in range(n_seeds):
        config = MechanismConfig(alpha=alpha, r=r, seed=base_seed + i)
        outcome = truthful_run(instance, config)
        r_used = outcome.r
        diag = compute_diagnostic_sets(instance, outcome, random.Random((base_seed + i) ^ 0x9E3779B9))
        event_count += diag.flags.event
        conc_count += diag.flags.concentration
    raw = event_probability_bound(float(alpha))
    return EventFrequencyResult(
        alpha=Fraction(alpha),
        r=r_used,
        seeds=n_seeds,
        event_count=event_count,
        concentration_count=conc_count,
        event_frequency=event_count / n_seeds,
        concentration_frequency=conc_count / n_seeds,
        event_wilson=wilson_interval(event_count, n_seeds),
        concentration_wilson=wilson_interval(conc_count, n_seeds),
        bound_raw=raw,
        bound_clamped=clamp01(raw),
    )


@dataclass
class RatioPoint:
    alpha: Fraction
    r: Fraction
    tau: int
    seeds: int
    ratios: np.ndarray  # one empirical ratio per seed
    mean: float
    std_error: float
    quantiles: tuple[float, float, float]  # 10/50/90
    bound_raw: float
    bound_clamped: float
    mean_vs_reachable: float  # same ratios but against the unobserved part's optimum


def competitive_ratio_experiment(
    points: Sequence[tuple[Fraction, Instance]],
    n_seeds: int,
    r: Optional[Fraction] = None,
    base_seed: int = 0,
) -> list[RatioPoint]:
    """Empirical GfT share of the offline optimum, per alpha grid point.

    Each point runs one matched instance for n_seeds mechanism seeds. The
    ratio per run is exact (integer GfTs) before conversion to float. Runs
    with a zero-GfT optimum would be skipped with a notice; instance
    validation already rejects them (tau >= 1 can still mean zero optimum
    gain when amounts tie, hence the runtime guard).
    """
    results = []
    for alpha, instance in points:
        view = true_view(instance)
        cano = canonical_assignment(view.all_users, view.all_slots, view)
        opt = sum(view.slot_values[b] - view.user_costs[u] for u, b in cano.ordered_pairs)
        if opt <= 0:
            raise ValueError(f"alpha={alpha}: optimum gain is {opt}, ratio undefined; pick another instance")
        ratios = np.empty(n_seeds)
        reachable_ratios = np.empty(n_seeds)
        r_used = None
        for i in range(n_seeds):
            config = MechanismConfig(alpha=alpha, r=r, seed=base_seed + i)
            outcome = truthful_run(instance, config)
            r_used = outcome.r
            ratios[i] = float(Fraction(outcome.gft, opt))
            observed_m = set(outcome.observed_mediators)
            observed_a = set(outcome.observed_advertisers)
            post_users = [u for u in view.all_users if u.mediator not in observed_m]
            post_slots = [b for b in view.all_slots if b.advertiser not in observed_a]
            post_cano = canonical_assignment(post_users, post_slots, view)
            reachable = sum(view.slot_values[b] - view.user_costs[u] for u, b in post_cano.ordered_pairs)
            reachable_ratios[i] = float(Fraction(outcome.gft, reachable)) if reachable > 0 else (1.0 if outcome.gft == 0 else 0.0)
        raw = analytic_bound(float(alpha), float(r_used))
        results.append(
            RatioPoint(
                alpha=Fraction(alpha),
                r=r_used,
                tau=cano.size,
                seeds=n_seeds,
                ratios=ratios,
                mean=float(np.mean(ratios)),
                std_error=float(np.std(ratios, ddof=1) / math.sqrt(n_seeds)) if n_seeds > 1 else 0.0,
                quantiles=tuple(float(q) for q in np.quantile(ratios, (0.1, 0.5, 0.9))),
                bound_raw=raw,
                bound_clamped=clamp01(raw),
                mean_vs_reachable=float(np.mean(reachable_ratios)),
            )
        )
    return results
