"""Fano-type failure lower bounds, the two-level distance rho, and thresholds.

The plain Fano bound lower-bounds any decoder's failure probability by
1 - (MI + ln 2)/log|class|.  The distance-based variant only counts
failures beyond radius t under rho and replaces the cardinality with
|class| / N_t^max.  rho takes values in {0, 1, 2}: it adds one for
getting the parameter stack wrong and one more for getting the effective
vector wrong, so {rho > 1} is exactly the positive-excess-risk event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BudgetExceededError, InvalidConfigError
from .hypothesis_space import (
    Hypothesis,
    class_cardinality,
    class_log_cardinality,
    effective_pattern,
    enumerate_class,
    ENUMERATION_BUDGET,
)
from .info_metrics import mi_upper_bound_pairwise

_LN2 = math.log(2.0)

KIND_EXACT = "exact-recovery"
KIND_EXCESS = "excess-risk"


@dataclass(frozen=True)
class BoundReport:
    """One evaluated failure bound.

    log_cardinality holds the denominator actually used: log|G| for
    exact recovery, log(|G|/N_max) for the distance form.  The raw
    (unclipped) value is kept alongside the clipped one because a
    negative raw value still tells you how vacuous the bound is.
    """

    kind: str
    mi_upper: float
    log_cardinality: float
    failure_lower_bound: float
    raw_lower_bound: float
    threshold_n: float

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "mi_upper": self.mi_upper,
            "log_cardinality": self.log_cardinality,
            "failure_lower_bound": self.failure_lower_bound,
            "raw_lower_bound": self.raw_lower_bound,
            "threshold_n": self.threshold_n,
        }


def fano_failure_lower_bound(mi_upper: float, log_cardinality: float) -> float:
    """max(0, 1 - (mi_upper + ln 2) / log_cardinality)."""
    if not log_cardinality > 0.0:
        raise InvalidConfigError(
            f"log_cardinality must be positive, got {log_cardinality}"
        )
    return max(0.0, 1.0 - (mi_upper + _LN2) / log_cardinality)


def threshold_exact_recovery(p: int, d: int, r: int, sigma2: float) -> float:
    """Largest real n at which the exact-recovery failure bound is >= 1/2.

    sigma2 * [d * sum_i ln i + p ln 2 - ln 4] / 4, equivalently
    (sigma2/2)(log|G|/2 - ln 2).
    """
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    log_card = class_log_cardinality(p, d, r)
    return sigma2 * (log_card - 2.0 * _LN2) / 4.0


def threshold_excess_risk(p: int, r: int, sigma2: float) -> float:
    """Sample-size threshold for the positive-excess-risk event.

    sigma2 * [sum_i ln i + p ln 2 - ln 4] / 4.  One factor of d smaller
    than the exact-recovery threshold: the neighborhood count (r!)^{d-1}
    cancels all but one layer's worth of permutations.
    """
    if p < 3:
        raise InvalidConfigError(f"p must be at least 3, got {p}")
    if not 1 <= r <= p - 1:
        raise InvalidConfigError(f"need 1 <= r <= p-1, got r={r}, p={p}")
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    return sigma2 * (math.lgamma(r + 1) + p * _LN2 - 2.0 * _LN2) / 4.0


def rho_distance(h: Hypothesis, h_other: Hypothesis) -> int:
    """1{h != h'} + 1{effective vectors differ}, in {0, 1, 2}.

    Effective vectors are compared through their symbolic pattern
    (composed permutation plus signs), never through floats.
    """
    if (h.p, h.d, h.r, h.c) != (h_other.p, h_other.d, h_other.r, h_other.c):
        raise InvalidConfigError(
            "hypotheses come from different classes: "
            f"{(h.p, h.d, h.r, h.c)} vs {(h_other.p, h_other.d, h_other.r, h_other.c)}"
        )
    if h == h_other:
        return 0
    return 1 + (1 if effective_pattern(h) != effective_pattern(h_other) else 0)


def neighborhood_sizes(
    p: int, d: int, r: int, t: int, c: float | None = None,
    budget: int = ENUMERATION_BUDGET,
) -> tuple[int, int]:
    """(max, min) over centers h of #{h' : rho(h, h') <= t}, by brute force."""
    if t not in (0, 1, 2):
        raise InvalidConfigError(f"t must be 0, 1, or 2, got {t}")
    card = class_cardinality(p, d, r)
    if card > budget:
        raise BudgetExceededError(
            f"class has {card} members, which exceeds the enumeration budget {budget}"
        )
    if t == 0:
        return 1, 1
    if t == 2:
        return card, card
    groups: dict = {}
    for h in enumerate_class(p, d, r, c=c, budget=budget):
        key = effective_pattern(h)
        groups[key] = groups.get(key, 0) + 1
    sizes = groups.values()
    return max(sizes), min(sizes)


def distance_fano_bound(
    mi_upper: float,
    cardinality: int,
    n_max_at_t: int,
    n_min_at_t: int | None = None,
) -> float:
    """max(0, 1 - (mi_upper + ln 2) / ln(cardinality / n_max_at_t)).

    The inequality needs cardinality - N_min > N_max; pass n_min_at_t to
    have that checked (it defaults to n_max_at_t, which is exact for the
    class at t = 1 where all neighborhoods have equal size).
    """
    if n_max_at_t < 1 or cardinality < 1:
        raise InvalidConfigError("cardinality and neighborhood sizes must be positive")
    if n_min_at_t is None:
        n_min_at_t = n_max_at_t
    if not cardinality - n_min_at_t > n_max_at_t:
        raise InvalidConfigError(
            f"distance bound inapplicable: cardinality {cardinality} minus minimum "
            f"neighborhood {n_min_at_t} must exceed maximum neighborhood {n_max_at_t}"
        )
    return fano_failure_lower_bound(mi_upper, math.log(cardinality / n_max_at_t))


def bound_report(
    p: int, d: int, r: int, sigma2: float, n: int, kind: str = KIND_EXACT
) -> BoundReport:
    """Evaluate either bound for the class at sample size n."""
    mi = mi_upper_bound_pairwise(p, d, r, sigma2, n)
    if kind == KIND_EXACT:
        log_card = class_log_cardinality(p, d, r)
        threshold = threshold_exact_recovery(p, d, r, sigma2)
    elif kind == KIND_EXCESS:
        card = class_cardinality(p, d, r)
        n_max, n_min = neighborhood_sizes(p, d, r, t=1)
        if not card - n_min > n_max:
            raise InvalidConfigError(
                f"distance bound inapplicable: cardinality {card} minus minimum "
                f"neighborhood {n_min} must exceed maximum neighborhood {n_max}"
            )
        log_card = math.log(card / n_max)
        threshold = threshold_excess_risk(p, r, sigma2)
    else:
        raise InvalidConfigError(f"kind must be {KIND_EXACT!r} or {KIND_EXCESS!r}")
    raw = 1.0 - (mi + _LN2) / log_card
    return BoundReport(
        kind=kind,
        mi_upper=mi,
        log_cardinality=log_card,
        failure_lower_bound=max(0.0, raw),
        raw_lower_bound=raw,
        threshold_n=threshold,
    )
