"""KL divergences, mutual-information upper bounds, and the KL-to-prior bound.

All divergences here are between observation laws of layered chains.  Two
members of one hypothesis class share their conditional covariance, which
collapses their pairwise KL to a weighted squared distance between
effective vectors and caps it at 2/sigma2.  The per-label decomposition
(labels are uniform on {-1, +1} under every law considered, so the label
factor cancels inside every log ratio) is used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidConfigError
from .gaussian_chain import (
    ChainParams,
    GaussianDist,
    conditional_dist,
    log_density_batch,
    sample_dataset,
    _cholesky_lower,
)
from .hypothesis_space import (
    GeneralNetwork,
    Hypothesis,
    class_cardinality,
    enumerate_class,
    effective_vector,
)

PAIR_SUM_BUDGET = 1_000_000

# slack for the closed-form-vs-bound consistency assertion
_REPORT_TOL = 1e-12


@dataclass
class KlReport:
    """Exact pair KL with its analytic cap and optional MC corroboration."""

    exact: float
    bound: float
    mc_estimate: float | None = None
    mc_stderr: float | None = None
    n_samples: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.exact < -_REPORT_TOL:
            raise ValueError(f"exact KL must be non-negative, got {self.exact}")
        if self.exact > self.bound + _REPORT_TOL:
            raise ValueError(
                f"exact KL {self.exact} exceeds its bound {self.bound}"
            )

    def to_json_dict(self) -> dict:
        return {
            "exact": self.exact,
            "bound": self.bound,
            "mc_estimate": self.mc_estimate,
            "mc_stderr": self.mc_stderr,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SingularProfile:
    """Per-layer singular values, non-increasing within each layer."""

    layers: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "layers", tuple(tuple(float(v) for v in layer) for layer in self.layers)
        )
        if not self.layers:
            raise InvalidConfigError("profile must have at least one layer")
        for i, layer in enumerate(self.layers):
            if not layer:
                raise InvalidConfigError(f"layer {i + 1} of the profile is empty")
            if any(v < 0.0 for v in layer):
                raise InvalidConfigError("singular values must be non-negative")
            if any(a < b for a, b in zip(layer, layer[1:])):
                raise InvalidConfigError("singular values must be non-increasing")

    @classmethod
    def from_network(cls, network: Hypothesis | GeneralNetwork) -> "SingularProfile":
        """Full singular spectrum of every layer matrix.

        Class members need no decomposition: each layer is orthogonal on
        the permuted block and c times identity on the rest, so its
        spectrum is r ones followed by p-r copies of c.
        """
        if isinstance(network, Hypothesis):
            layer = (1.0,) * network.r + (network.c,) * (network.p - network.r)
            return cls((layer,) * network.d)
        return cls(
            tuple(
                tuple(np.linalg.svd(mat, compute_uv=False).tolist())
                for mat in network.mats
            )
        )


def m_recursion(profile: SingularProfile) -> tuple[float, ...]:
    """Last-layer values of m: m_1i = d_1i^2, then m_li = d_li^2 (m_{l-1,1} + 1).

    m_{l-1,1} is the largest previous value, which is the first entry
    because profiles are sorted.
    """
    m = tuple(v * v for v in profile.layers[0])
    for layer in profile.layers[1:]:
        top = m[0]
        m = tuple(v * v * (top + 1.0) for v in layer)
    return m


def kl_gaussian(dist_p: GaussianDist, dist_q: GaussianDist) -> float:
    """KL(P || Q) between multivariate normals, Cholesky throughout."""
    k = dist_p.mean.size
    if dist_q.mean.size != k:
        raise InvalidConfigError(
            f"dimension mismatch: {k} vs {dist_q.mean.size}"
        )
    factor_q = _cholesky_lower(dist_q.cov, "covariance of Q")
    factor_p = _cholesky_lower(dist_p.cov, "covariance of P")
    # tr(Q^-1 P) via the triangular solve of each factor
    half = scipy.linalg.solve_triangular(factor_q, factor_p, lower=True)
    trace = float(np.sum(half * half))
    diff = dist_q.mean - dist_p.mean
    shift = scipy.linalg.solve_triangular(factor_q, diff, lower=True)
    quad = float(shift @ shift)
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(factor_q))))
    logdet_p = 2.0 * float(np.sum(np.log(np.diag(factor_p))))
    return 0.5 * (trace + quad + logdet_q - logdet_p - k)


def _class_weights(p: int, d: int, r: int, c: float) -> np.ndarray:
    """Diagonal of I - M_d for class members: 1/(d+1) up top, 1/(1+s) below."""
    geom = sum(c ** (2 * j) for j in range(1, d + 1))
    weights = np.full(p, 1.0 / (1.0 + geom))
    weights[:r] = 1.0 / (d + 1.0)
    return weights


def _require_same_class(h: Hypothesis, other: Hypothesis):
    if (h.p, h.d, h.r, h.c) != (other.p, other.d, other.r, other.c):
        raise InvalidConfigError(
            "hypotheses come from different classes: "
            f"{(h.p, h.d, h.r, h.c)} vs {(other.p, other.d, other.r, other.c)}"
        )


def kl_pair_exact(h: Hypothesis, h_other: Hypothesis, sigma2: float) -> float:
    """Closed-form KL between two class members' observation laws.

    Both laws share the covariance, so the KL reduces to the quadratic
    form (w - w')^T (I - M_d)(w - w') / (2 sigma2).
    """
    _require_same_class(h, h_other)
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    diff = effective_vector(h) - effective_vector(h_other)
    weights = _class_weights(h.p, h.d, h.r, h.c)
    return float(diff @ (weights * diff)) / (2.0 * sigma2)


def kl_pair_in_class(
    h: Hypothesis,
    h_other: Hypothesis,
    sigma2: float,
    mc_samples: int | None = None,
    seed: int | None = None,
) -> KlReport:
    """Exact pair KL with its 2/sigma2 cap; optional MC corroboration."""
    exact = kl_pair_exact(h, h_other, sigma2)
    report = KlReport(exact=exact, bound=2.0 / sigma2)
    if mc_samples is not None:
        if seed is None:
            raise InvalidConfigError("mc_samples requires a seed")
        estimate, stderr = mc_kl_estimate(h, h_other, sigma2, mc_samples, seed)
        report.mc_estimate = estimate
        report.mc_stderr = stderr
        report.n_samples = mc_samples
        report.seed = seed
    return report


def mc_kl_estimate(
    h: Hypothesis | GeneralNetwork,
    h_other: Hypothesis | GeneralNetwork,
    sigma2: float,
    n_samples: int,
    seed: int,
) -> tuple[float, float]:
    """Monte Carlo KL: average log-density ratio under the law of h."""
    if n_samples < 1000:
        raise InvalidConfigError(f"need at least 1000 samples, got {n_samples}")
    params_p = ChainParams(h, sigma2)
    params_q = ChainParams(h_other, sigma2)
    data = sample_dataset(params_p, n_samples, seed)
    ratios = log_density_batch(data.xs, data.ys, params_p) - log_density_batch(
        data.xs, data.ys, params_q
    )
    estimate = float(np.mean(ratios))
    stderr = float(np.std(ratios, ddof=1) / math.sqrt(n_samples))
    return estimate, stderr


def kl_to_prior_exact(
    network: Hypothesis | GeneralNetwork, sigma2: float, tau2: float
) -> float:
    """KL between the chain's (x, y) law and N(0, tau2 I) x Uniform{-1,+1}.

    The label is uniform under both laws, so the KL splits into the
    average of the two conditional Gaussian KLs.
    """
    if not tau2 > 0.0:
        raise InvalidConfigError(f"tau2 must be positive, got {tau2}")
    params = ChainParams(network, sigma2)
    p = effective_vector(network).size
    prior = GaussianDist(np.zeros(p), tau2 * np.eye(p))
    plus = kl_gaussian(conditional_dist(params, 1), prior)
    minus = kl_gaussian(conditional_dist(params, -1), prior)
    return 0.5 * (plus + minus)


def kl_to_prior_bound(
    network: Hypothesis | GeneralNetwork, sigma2: float, tau2: float
) -> float:
    """Upper bound on kl_to_prior_exact from the singular-value recursion.

    (1/2)[(sigma2/tau2)(p + sum_i m_di) + ||w_eff||^2/tau2
          + p ln(tau2/sigma2) - p].
    """
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    if not tau2 > 0.0:
        raise InvalidConfigError(f"tau2 must be positive, got {tau2}")
    w = effective_vector(network)
    p = w.size
    m_last = m_recursion(SingularProfile.from_network(network))
    trace_term = (sigma2 / tau2) * (p + math.fsum(m_last))
    mean_term = float(w @ w) / tau2
    return 0.5 * (trace_term + mean_term + p * math.log(tau2 / sigma2) - p)


def mi_upper_bound_pairwise(
    p: int,
    d: int,
    r: int,
    sigma2: float,
    n: int,
    c: float | None = None,
    pair_budget: int = PAIR_SUM_BUDGET,
) -> float:
    """Mutual-information surrogate: average pairwise dataset KL over the class.

    Computed exactly as (1/|G|^2) sum over ordered pairs of n * KL(h||h')
    when |G|^2 fits the pair budget; otherwise returns the analytic cap
    2n/sigma2.  Either way the value never exceeds the cap.
    """
    if n < 1:
        raise InvalidConfigError(f"n must be at least 1, got {n}")
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    card = class_cardinality(p, d, r)
    if card * card > pair_budget:
        return 2.0 * n / sigma2
    members = list(enumerate_class(p, d, r, c=c))
    vectors = np.array([effective_vector(h) for h in members])
    weights = _class_weights(p, d, r, members[0].c) / (2.0 * sigma2)
    # pair KL = q_i + q_j - 2 B_ij with q the weighted squared norms
    q = (vectors * vectors) @ weights
    cross = (vectors * weights) @ vectors.T
    mean_pair = float(2.0 * np.mean(q) - 2.0 * np.mean(cross))
    return n * mean_pair
