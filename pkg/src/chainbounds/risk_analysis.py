"""Exact prediction risk, the excess-risk gap, and its linear approximation.

The predictor attached to a hypothesis labels x by the sign of the inner
product with the hypothesis' effective vector.  Under the true law that
misclassification probability has an erf closed form whose argument is
an alignment ratio; the gap between the best and second-best achievable
alignments yields a uniform excess-risk lower bound off the set of
hypotheses sharing the truth's effective vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidConfigError
from .gaussian_chain import ChainParams, marginal_covariance, sample_dataset
from .hypothesis_space import (
    ENUMERATION_BUDGET,
    GeneralNetwork,
    Hypothesis,
    composed_permutation,
    effective_pattern,
    effective_vector,
    enumerate_class,
    hypothesis_at,
    scale_constant,
)

# excess-vs-gap comparisons share one tolerance: the gap is attained with
# equality by the extremal sign-flip pairs, so a strict float comparison
# would turn the discrete event into a coin flip on rounding noise
GAP_TIE_TOL = 1e-12

_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class RiskGapConstants:
    """The two erf arguments, their gap, and the configuration they echo."""

    c0: float
    c1: float
    gap: float
    c0_numerator: float
    c1_numerator: float
    denominator: float
    p: int
    d: int
    r: int
    c: float
    sigma: float

    def to_json_dict(self) -> dict:
        return {
            "c0": self.c0,
            "c1": self.c1,
            "gap": self.gap,
            "c0_numerator": self.c0_numerator,
            "c1_numerator": self.c1_numerator,
            "denominator": self.denominator,
            "p": self.p,
            "d": self.d,
            "r": self.r,
            "c": self.c,
            "sigma": self.sigma,
        }


class LinearApprox(NamedTuple):
    linearized: float
    explicit: float
    explicit_valid: bool


def _check_params(p: int, d: int, r: int, sigma2: float):
    if p < 3:
        raise InvalidConfigError(f"p must be at least 3, got {p}")
    if d < 1:
        raise InvalidConfigError(f"d must be at least 1, got {d}")
    if not 1 <= r <= p - 1:
        raise InvalidConfigError(f"need 1 <= r <= p-1, got r={r}, p={p}")
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")


def _bracket(d: int, r: int, c: float) -> float:
    """Shared quadratic form value w^T (I - M_d)^{-1} w on the class.

    (d+1)(1 - 2^-r) + ((1 - c^(2(d+1)))/(1 - c^2)) * c^(2d) * 2^-r.
    Identical for every member because the magnitude multiset is shared.
    """
    top = (d + 1) * (1.0 - 2.0**-r)
    geom = (1.0 - c ** (2 * (d + 1))) / (1.0 - c * c)
    return top + geom * (c ** (2 * d)) * 2.0**-r


def risk_gap_constants(p: int, d: int, r: int, sigma2: float) -> RiskGapConstants:
    """c0, c1, and the gap (erf(c1) - erf(c0))/2 for the class."""
    _check_params(p, d, r, sigma2)
    c = scale_constant(p, r)
    sigma = math.sqrt(sigma2)
    denominator = sigma * math.sqrt(2.0 * _bracket(d, r, c))
    c2d = c ** (2 * d)
    c1_num = 1.0 - 2.0**-r + c2d * 2.0**-r
    c0_num = 1.0 - 2.0**-r + c2d * (2.0**-r - 2.0 ** -(p - 2))
    c0 = c0_num / denominator
    c1 = c1_num / denominator
    return RiskGapConstants(
        c0=c0,
        c1=c1,
        gap=0.5 * (math.erf(c1) - math.erf(c0)),
        c0_numerator=c0_num,
        c1_numerator=c1_num,
        denominator=denominator,
        p=p,
        d=d,
        r=r,
        c=c,
        sigma=sigma,
    )


def _quadratic_form(w: np.ndarray, h_star: Hypothesis | GeneralNetwork, sigma2: float) -> float:
    """w^T (I - M_d(h_star))^{-1} w, closed form when h_star is a class member."""
    if isinstance(h_star, Hypothesis):
        geom = sum(h_star.c ** (2 * j) for j in range(1, h_star.d + 1))
        top = float(w[: h_star.r] @ w[: h_star.r])
        bottom = float(w[h_star.r :] @ w[h_star.r :])
        return (h_star.d + 1) * top + (1.0 + geom) * bottom
    cov = marginal_covariance(ChainParams(h_star, sigma2))
    return float(w @ cov @ w) / sigma2


def exact_risk(
    h: Hypothesis | GeneralNetwork,
    h_star: Hypothesis | GeneralNetwork,
    sigma2: float,
) -> float:
    """P[label mismatch] when predicting with h's direction under h_star's law.

    (1/2)[1 - erf( w^T w* / sqrt(2 sigma2 w^T (I - M_d(h_star))^{-1} w) )]
    with w the effective vector of h.
    """
    if isinstance(h, Hypothesis) and isinstance(h_star, Hypothesis):
        _require_same_class(h, h_star)
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    w = effective_vector(h)
    w_star = effective_vector(h_star)
    if w.size != w_star.size:
        raise InvalidConfigError(
            f"dimension mismatch: {w.size} vs {w_star.size}"
        )
    quad = _quadratic_form(w, h_star, sigma2)
    if not quad > 0.0:
        raise InvalidConfigError("effective vector is zero; risk undefined")
    arg = float(w @ w_star) / math.sqrt(2.0 * sigma2 * quad)
    return 0.5 * (1.0 - math.erf(arg))


def _require_same_class(h: Hypothesis, other: Hypothesis):
    if (h.p, h.d, h.r, h.c) != (other.p, other.d, other.r, other.c):
        raise InvalidConfigError(
            "hypotheses come from different classes: "
            f"{(h.p, h.d, h.r, h.c)} vs {(other.p, other.d, other.r, other.c)}"
        )


def excess_risk(
    h: Hypothesis | GeneralNetwork,
    h_star: Hypothesis | GeneralNetwork,
    sigma2: float,
) -> float:
    """exact_risk(h) minus exact_risk(h_star), exactly 0 on shared directions."""
    if isinstance(h, Hypothesis) and isinstance(h_star, Hypothesis):
        _require_same_class(h, h_star)
        if effective_pattern(h) == effective_pattern(h_star):
            return 0.0
    return exact_risk(h, h_star, sigma2) - exact_risk(h_star, h_star, sigma2)


def at_or_above_gap(excess: float, gap: float) -> bool:
    """The positive-excess-risk event, tolerant to gap-attaining ties."""
    return excess >= gap - GAP_TIE_TOL


def identifiability_set(
    h_star: Hypothesis, budget: int = ENUMERATION_BUDGET
) -> list[Hypothesis]:
    """Members other than h_star sharing its effective vector.

    Symbolic comparison; the result has exactly (r!)^(d-1) - 1 elements:
    the first d-1 layer permutations are free, the last is then forced,
    and the sign vector is pinned.
    """
    target = effective_pattern(h_star)
    return [
        h
        for h in enumerate_class(h_star.p, h_star.d, h_star.r, c=h_star.c, budget=budget)
        if h != h_star and effective_pattern(h) == target
    ]


def excess_risk_lower_bound(p: int, d: int, r: int, sigma2: float) -> float:
    """The gap (erf(c1) - erf(c0))/2: minimum excess risk off the shared-direction set."""
    return risk_gap_constants(p, d, r, sigma2).gap


def linear_approx_bound(p: int, d: int, r: int, sigma2: float) -> LinearApprox:
    """First-order version of the gap and its explicit closed-form weakening.

    linearized applies the erf derivative at zero, 2/sqrt(pi), to the
    argument gap c1 - c0.  explicit weakens every factor down to
    (1/sqrt(2 pi)) c^(2d) 2^(-(p-2)) / (sigma sqrt(d + 7/5)); that chain
    of inequalities assumes r <= p/2 + 1 and is flagged invalid outside
    that range (linearized is always returned).
    """
    constants = risk_gap_constants(p, d, r, sigma2)
    linearized = (constants.c1 - constants.c0) / _SQRT_PI
    sigma = math.sqrt(sigma2)
    explicit = (
        (constants.c ** (2 * d))
        * 2.0 ** -(p - 2)
        / (math.sqrt(2.0 * math.pi) * sigma * math.sqrt(d + 1.4))
    )
    return LinearApprox(
        linearized=linearized,
        explicit=explicit,
        explicit_valid=r <= p / 2 + 1,
    )


def pair_case(h: Hypothesis, h_star: Hypothesis) -> int:
    """Taxonomy of a candidate against the truth, 0 for equality.

    1: signs differ, every layer equal.
    2: signs differ, layers differ, composed permutation equal.
    3: signs differ, composed permutation differs.
    4: signs equal, layers differ, composed permutation equal
       (the shared-direction case: excess risk is exactly zero).
    5: signs equal, composed permutation differs.
    """
    _require_same_class(h, h_star)
    if h == h_star:
        return 0
    same_signs = h.w0.signs == h_star.w0.signs
    same_layers = all(
        a.perm == b.perm for a, b in zip(h.layers, h_star.layers)
    )
    same_product = composed_permutation(h) == composed_permutation(h_star)
    if not same_signs:
        if same_layers:
            return 1
        return 2 if same_product else 3
    return 4 if same_product else 5


def second_best_alignment_case5(p: int, d: int, r: int) -> tuple[float, float]:
    """Largest sign-preserving misaligned inner product vs the c0 numerator.

    Returns (alignment, c0_numerator) where alignment is attained by
    swapping the two smallest permuted coordinates:
    1 - 2^-(r-2) + 2^-(2r-3)/2 + c^(2d) 2^-r.  The gap argument needs
    alignment < c0_numerator; this fails for r = p-1 with d = 1, so
    callers should check rather than assume.
    """
    _check_params(p, d, r, 1.0)
    if r < 2:
        raise InvalidConfigError("case-5 pairs need r >= 2 (r = 1 has no permutations)")
    c = scale_constant(p, r)
    c2d = c ** (2 * d)
    alignment = (
        1.0 - 2.0 ** -(r - 2) + 2.0 ** (-(2 * r - 3) / 2.0) + c2d * 2.0**-r
    )
    c0_num = 1.0 - 2.0**-r + c2d * (2.0**-r - 2.0 ** -(p - 2))
    return alignment, c0_num


def mc_risk_estimate(
    h: Hypothesis | GeneralNetwork,
    h_star: Hypothesis | GeneralNetwork,
    sigma2: float,
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Empirical P[y * w^T x <= 0] under h_star's law, with binomial stderr."""
    if n_samples < 1:
        raise InvalidConfigError(f"n_samples must be positive, got {n_samples}")
    w = effective_vector(h)
    data = sample_dataset(ChainParams(h_star, sigma2), n_samples, seed)
    failures = float(np.mean(data.ys * (data.xs @ w) <= 0.0))
    stderr = math.sqrt(failures * (1.0 - failures) / n_samples)
    return failures, stderr


def risk_table(
    p: int, d: int, r: int, sigma2: float, star_index: int = 0
) -> tuple[RiskGapConstants, list[tuple[int, int, float, bool]]]:
    """Per-hypothesis excess risk against the member at star_index.

    Rows are (index, case, excess_risk, at_or_above_gap) in index order.
    """
    constants = risk_gap_constants(p, d, r, sigma2)
    h_star = hypothesis_at(p, d, r, star_index)
    rows = []
    for idx, h in enumerate(enumerate_class(p, d, r)):
        excess = excess_risk(h, h_star, sigma2)
        rows.append(
            (idx, pair_case(h, h_star), excess, at_or_above_gap(excess, constants.gap))
        )
    return constants, rows
