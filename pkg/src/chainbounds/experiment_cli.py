"""Recovery experiments: MAP decoding over the enumerated class vs sample size.

One engine drives both experiment flavors.  Each trial draws a truth
uniformly from the class, samples n labeled observations, decodes with
the exact posterior maximizer, and records two events: exact-recovery
failure and the positive-excess-risk event.  The latter is computed both
through the risk gap and through the two-level distance and the two must
agree on every single trial; disagreement raises immediately.

Per-trial randomness comes from streams keyed by (seed, trial, n), so
results are reproducible and independent of worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError
from .fano_bounds import fano_failure_lower_bound, rho_distance
from .gaussian_chain import ChainParams, Dataset, sample_dataset
from .hypothesis_space import (
    ENUMERATION_BUDGET,
    Hypothesis,
    class_cardinality,
    class_log_cardinality,
    enumerate_class,
    effective_vector,
)
from .info_metrics import _class_weights
from .risk_analysis import at_or_above_gap, excess_risk, excess_risk_lower_bound
from .rng import generator_for, mix64


@dataclass(frozen=True)
class ExperimentConfig:
    """Class parameters, noise level, sample-size grid, and trial count."""

    p: int
    d: int
    r: int
    sigma2: float
    n_grid: tuple[int, ...]
    trials: int
    seed: int
    output_path: str | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.trials < 1:
            raise InvalidConfigError(f"trials must be at least 1, got {self.trials}")
        if not self.n_grid:
            raise InvalidConfigError("n_grid must not be empty")
        if any(n < 1 for n in self.n_grid):
            raise InvalidConfigError("every n in n_grid must be at least 1")
        if any(a >= b for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidConfigError("n_grid must be strictly increasing")
        if not self.sigma2 > 0.0:
            raise InvalidConfigError(f"sigma2 must be positive, got {self.sigma2}")
        if self.threads < 1:
            raise InvalidConfigError(f"threads must be at least 1, got {self.threads}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {"p", "d", "r", "sigma2", "n_grid", "trials", "seed", "output_path", "threads"}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfigError(f"unknown config fields: {sorted(unknown)}")
        missing = {"p", "d", "r", "sigma2", "n_grid", "trials", "seed"} - set(data)
        if missing:
            raise InvalidConfigError(f"missing config fields: {sorted(missing)}")
        return cls(
            p=int(data["p"]),
            d=int(data["d"]),
            r=int(data["r"]),
            sigma2=float(data["sigma2"]),
            n_grid=tuple(data["n_grid"]),
            trials=int(data["trials"]),
            seed=int(data["seed"]),
            output_path=data.get("output_path"),
            threads=int(data.get("threads", 1)),
        )


@dataclass(frozen=True)
class ExperimentRow:
    """Empirical failure frequencies at one sample size, plus the Fano floor."""

    n: int
    xi1: float
    xi1_stderr: float
    xi2: float
    xi2_stderr: float
    fano_bound: float

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "xi1": self.xi1,
            "xi1_stderr": self.xi1_stderr,
            "xi2": self.xi2,
            "xi2_stderr": self.xi2_stderr,
            "fano_bound": self.fano_bound,
        }


class MapDecoder:
    """Exact MAP over the enumerated class, ties to the lowest index.

    All members share the conditional covariance, so the log likelihood
    of member h is, up to an h-independent term, a linear function of
    the sufficient statistic sum_i y_i x_i.  Scores of members with
    equal effective vectors are bit-identical (their vectors are built
    by identical arithmetic), so first-maximum argmax is the lowest-index
    tie rule.
    """

    def __init__(
        self,
        p: int,
        d: int,
        r: int,
        sigma2: float,
        c: float | None = None,
        budget: int = ENUMERATION_BUDGET,
    ):
        self.members = list(enumerate_class(p, d, r, c=c, budget=budget))
        self.sigma2 = float(sigma2)
        if not self.sigma2 > 0.0:
            raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
        c_actual = self.members[0].c
        weights = _class_weights(p, d, r, c_actual) / self.sigma2
        vectors = np.array([effective_vector(h) for h in self.members])
        self._scored = vectors * weights
        self._quad = (vectors * vectors) @ weights

    def decode_index(self, xs: np.ndarray, ys: np.ndarray) -> int:
        if xs.shape[0] == 0:
            raise InvalidConfigError("cannot decode an empty dataset")
        stat = ys.astype(np.float64) @ xs
        scores = self._scored @ stat - 0.5 * xs.shape[0] * self._quad
        return int(np.argmax(scores))

    def decode(self, xs: np.ndarray, ys: np.ndarray) -> Hypothesis:
        return self.members[self.decode_index(xs, ys)]


def map_decoder(
    dataset: Dataset, klass: tuple[int, int, int], sigma2: float
) -> Hypothesis:
    """Most likely class member given the dataset; klass is (p, d, r)."""
    p, d, r = klass
    if dataset.ys.size == 0:
        raise InvalidConfigError("cannot decode an empty dataset")
    return MapDecoder(p, d, r, sigma2).decode(dataset.xs, dataset.ys)


def _run_trials(cfg: ExperimentConfig) -> list[ExperimentRow]:
    decoder = MapDecoder(cfg.p, cfg.d, cfg.r, cfg.sigma2)
    members = decoder.members
    card = class_cardinality(cfg.p, cfg.d, cfg.r)
    log_card = class_log_cardinality(cfg.p, cfg.d, cfg.r)
    gap = excess_risk_lower_bound(cfg.p, cfg.d, cfg.r, cfg.sigma2)
    rows = []
    for n in cfg.n_grid:
        miss = np.empty(cfg.trials, dtype=bool)
        event = np.empty(cfg.trials, dtype=bool)

        def one_trial(trial: int):
            gen = generator_for(cfg.seed, trial, n)
            star = int(gen.integers(card))
            data_seed = mix64(cfg.seed, trial, n, 1)
            data = sample_dataset(
                ChainParams(members[star], cfg.sigma2), n, data_seed
            )
            guess = decoder.decode_index(data.xs, data.ys)
            excess = excess_risk(members[guess], members[star], cfg.sigma2)
            by_gap = at_or_above_gap(excess, gap)
            by_rho = rho_distance(members[guess], members[star]) > 1
            if by_gap != by_rho:
                raise RuntimeError(
                    f"event mismatch at trial {trial}, n {n}: excess {excess} vs "
                    f"gap {gap} says {by_gap}, distance says {by_rho}"
                )
            miss[trial] = guess != star
            event[trial] = by_gap

        if cfg.threads == 1:
            for trial in range(cfg.trials):
                one_trial(trial)
        else:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                list(pool.map(one_trial, range(cfg.trials)))
        xi1 = float(np.mean(miss))
        xi2 = float(np.mean(event))
        rows.append(
            ExperimentRow(
                n=n,
                xi1=xi1,
                xi1_stderr=math.sqrt(xi1 * (1.0 - xi1) / cfg.trials),
                xi2=xi2,
                xi2_stderr=math.sqrt(xi2 * (1.0 - xi2) / cfg.trials),
                fano_bound=fano_failure_lower_bound(
                    2.0 * n / cfg.sigma2, log_card
                ),
            )
        )
    return rows


def run_recovery_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """Failure frequency of exact recovery across the sample-size grid."""
    return _run_trials(cfg)


def run_excess_risk_experiment(cfg: ExperimentConfig) -> list[ExperimentRow]:
    """Frequency of the positive-excess-risk event across the grid.

    Shares the recovery engine; every row carries both frequencies and
    the per-trial identity between the gap event and the distance event
    has already been asserted.
    """
    return _run_trials(cfg)


REPORT_HEADER = "n,xi1,xi1_stderr,xi2,xi2_stderr,fano_bound"


def render_report(rows: list[ExperimentRow], fmt: str = "csv") -> str:
    """Report text: CSV with a fixed header, or a JSON array."""
    if fmt == "csv":
        lines = [REPORT_HEADER]
        for row in rows:
            lines.append(
                ",".join(
                    [str(row.n)]
                    + [
                        format(v, ".17g")
                        for v in (
                            row.xi1,
                            row.xi1_stderr,
                            row.xi2,
                            row.xi2_stderr,
                            row.fano_bound,
                        )
                    ]
                )
            )
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps([row.to_json_dict() for row in rows], indent=2) + "\n"
    raise InvalidConfigError(f"format must be 'csv' or 'json', got {fmt!r}")


def emit_report(
    rows: list[ExperimentRow], cfg: ExperimentConfig, fmt: str = "csv"
) -> Path:
    """Write the report to cfg.output_path and return that path."""
    if not cfg.output_path:
        raise InvalidConfigError("config has no output_path")
    path = Path(cfg.output_path)
    path.write_text(render_report(rows, fmt))
    return path
