"""Gaussian law of a layered chain and seeded sampling from it.

Conditional on a label y drawn uniformly from {-1, +1}, the chain starts
at z_0 ~ N(y * w0, sigma2 * I) and each layer applies its matrix plus
fresh Gaussian noise with the same sigma2.  The observable is the last
layer.  This module exposes the joint precision over all layers, the
observable's marginal covariance (by recursion and, for class members,
in closed form), log densities, and CSV round-trips for sampled data.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import InvalidConfigError
from .hypothesis_space import GeneralNetwork, Hypothesis, effective_vector
from .rng import generator_for

# fixed sampling block so thread count never changes the draws
_BLOCK = 1024

_LOG_HALF = math.log(0.5)

Network = Hypothesis | GeneralNetwork


@dataclass(frozen=True, eq=False)
class ChainParams:
    """A network together with the shared per-layer noise variance."""

    network: Network
    sigma2: float

    def __post_init__(self):
        if not isinstance(self.network, (Hypothesis, GeneralNetwork)):
            raise InvalidConfigError("network must be a Hypothesis or GeneralNetwork")
        if not self.sigma2 > 0.0:
            raise InvalidConfigError(f"sigma2 must be positive, got {self.sigma2}")


@dataclass(eq=False)
class GaussianDist:
    """Mean vector and SPD covariance, validated on construction."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.cov = np.asarray(self.cov, dtype=np.float64)
        if self.mean.ndim != 1 or self.cov.shape != (self.mean.size, self.mean.size):
            raise InvalidConfigError("mean must be a vector and cov a matching square matrix")
        if not np.allclose(self.cov, self.cov.T, rtol=0.0, atol=1e-12):
            raise InvalidConfigError("covariance must be symmetric")
        _cholesky_lower(self.cov, "covariance")


@dataclass(eq=False)
class Dataset:
    """Sampled observations: xs has one row per draw, ys holds the labels."""

    xs: np.ndarray
    ys: np.ndarray
    seed: int
    source: dict


def _cholesky_lower(mat: np.ndarray, what: str) -> np.ndarray:
    """Cholesky factor, failing loudly with a condition estimate.

    Nothing is regularized here on purpose: a failure means the inputs
    are outside the model's valid regime and the caller should know.
    """
    try:
        return scipy.linalg.cholesky(mat, lower=True)
    except scipy.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(mat))
        raise np.linalg.LinAlgError(
            f"{what} is not numerically positive definite (condition number {cond:.6e})"
        ) from exc


def _layer_matrices(network: Network) -> list[np.ndarray]:
    if isinstance(network, Hypothesis):
        return [layer.realized() for layer in network.layers]
    return list(network.mats)


def _network_dims(network: Network) -> list[int]:
    if isinstance(network, Hypothesis):
        return [network.p] * (network.d + 1)
    return list(network.dims)


def precision_matrix(params: ChainParams) -> np.ndarray:
    """Joint precision of (z_0, ..., z_d) given y: block tridiagonal.

    Diagonal block i is (I + W_{i+1}^T W_{i+1}) / sigma2 (last block has
    no W term) and the superdiagonal block is -W_{i+1}^T / sigma2.
    """
    mats = _layer_matrices(params.network)
    dims = _network_dims(params.network)
    total = sum(dims)
    offsets = np.concatenate([[0], np.cumsum(dims)])
    inv_s2 = 1.0 / params.sigma2
    kappa = np.zeros((total, total))
    for i, n_i in enumerate(dims):
        lo, hi = offsets[i], offsets[i + 1]
        block = np.eye(n_i)
        if i < len(mats):
            block = block + mats[i].T @ mats[i]
        kappa[lo:hi, lo:hi] = inv_s2 * block
        if i < len(mats):
            nxt = offsets[i + 2]
            kappa[lo:hi, hi:nxt] = -inv_s2 * mats[i].T
            kappa[hi:nxt, lo:hi] = -inv_s2 * mats[i]
    return kappa


def _overlap_matrix(network: Network) -> np.ndarray:
    """M_d from M_k = W_k (I + W_k^T W_k - M_{k-1})^{-1} W_k^T, M_0 = 0.

    The inner matrix stays positive definite because every M_k is a
    contraction, so plain Cholesky solves are safe.
    """
    mats = _layer_matrices(network)
    m_prev = np.zeros((mats[0].shape[1], mats[0].shape[1]))
    for k, w in enumerate(mats, start=1):
        inner = np.eye(w.shape[1]) + w.T @ w - m_prev
        inner = 0.5 * (inner + inner.T)
        factor = _cholesky_lower(inner, f"recursion matrix at layer {k}")
        half = scipy.linalg.solve_triangular(factor, w.T, lower=True)
        m_prev = half.T @ half
    return m_prev


def marginal_covariance(params: ChainParams) -> np.ndarray:
    """Covariance of the observable given y: sigma2 * (I - M_d)^{-1}."""
    m_d = _overlap_matrix(params.network)
    eye = np.eye(m_d.shape[0])
    factor = _cholesky_lower(eye - m_d, "I - M_d")
    inv = scipy.linalg.cho_solve((factor, True), eye)
    cov = params.sigma2 * inv
    return 0.5 * (cov + cov.T)


def structured_marginal_covariance(
    p: int, d: int, r: int, c: float, sigma2: float
) -> np.ndarray:
    """Closed-form observable covariance for class members.

    Diagonal: sigma2 * (d + 1) on the permuted block and
    sigma2 * (1 + c^2 + ... + c^(2d)) on the contracted block.
    """
    if not 1 <= r <= p - 1:
        raise InvalidConfigError(f"need 1 <= r <= p-1, got r={r}, p={p}")
    if d < 1:
        raise InvalidConfigError(f"d must be at least 1, got {d}")
    if not sigma2 > 0.0:
        raise InvalidConfigError(f"sigma2 must be positive, got {sigma2}")
    if not 0.0 < c < 1.0:
        raise InvalidConfigError(f"c must lie in (0, 1), got {c}")
    geom = sum(c ** (2 * j) for j in range(1, d + 1))
    diag = np.full(p, sigma2 * (1.0 + geom))
    diag[:r] = sigma2 * (d + 1)
    return np.diag(diag)


def conditional_mean(params: ChainParams, y: int) -> np.ndarray:
    """Mean of the observable given the label: y times the effective vector."""
    if y not in (-1, 1):
        raise InvalidConfigError(f"y must be -1 or +1, got {y}")
    return y * effective_vector(params.network)


def conditional_dist(params: ChainParams, y: int) -> GaussianDist:
    """Observable law given y.  Class members use the closed-form covariance."""
    mean = conditional_mean(params, y)
    net = params.network
    if isinstance(net, Hypothesis):
        cov = structured_marginal_covariance(net.p, net.d, net.r, net.c, params.sigma2)
    else:
        cov = marginal_covariance(params)
    return GaussianDist(mean, cov)


def _conditional_variances(params: ChainParams) -> np.ndarray | None:
    """Diagonal of the observable covariance when it is exactly diagonal."""
    net = params.network
    if isinstance(net, Hypothesis):
        return np.diag(
            structured_marginal_covariance(net.p, net.d, net.r, net.c, params.sigma2)
        )
    return None


def log_density_batch(xs: np.ndarray, ys: np.ndarray, params: ChainParams) -> np.ndarray:
    """Log density of observation pairs, vectorized over rows.

    Includes the ln(1/2) label prior, so exponentiating and summing over
    y in {-1, +1} gives the unconditional density of x.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    w = effective_vector(params.network)
    p = w.size
    resid = xs - ys[:, None] * w
    variances = _conditional_variances(params)
    if variances is not None:
        logdet = float(np.sum(np.log(variances)))
        quad = np.sum(resid * resid / variances, axis=1)
    else:
        cov = marginal_covariance(params)
        factor = _cholesky_lower(cov, "covariance")
        logdet = 2.0 * float(np.sum(np.log(np.diag(factor))))
        half = scipy.linalg.solve_triangular(factor, resid.T, lower=True)
        quad = np.sum(half * half, axis=0)
    return -0.5 * (p * math.log(2.0 * math.pi) + logdet + quad) + _LOG_HALF


def marginal_log_density(x: np.ndarray, y: int, params: ChainParams) -> float:
    """Log density of a single (x, y) pair under the chain."""
    if y not in (-1, 1):
        raise InvalidConfigError(f"y must be -1 or +1, got {y}")
    x = np.asarray(x, dtype=np.float64)
    return float(log_density_batch(x[None, :], np.array([y]), params)[0])


def _sample_block(params: ChainParams, seed: int, block: int, count: int):
    """Draws for one block on its own stream; order of draws is fixed."""
    gen = generator_for(seed, block)
    sigma = math.sqrt(params.sigma2)
    dims = _network_dims(params.network)
    ys = gen.integers(0, 2, size=count) * 2 - 1
    if isinstance(params.network, Hypothesis):
        w0 = params.network.w0.as_array()
    else:
        w0 = params.network.w0
    z = ys[:, None] * w0 + sigma * gen.standard_normal((count, dims[0]))
    mats = _layer_matrices(params.network)
    for i, mat in enumerate(mats):
        z = z @ mat.T + sigma * gen.standard_normal((count, dims[i + 1]))
    return ys, z


def sample_dataset(params: ChainParams, n: int, seed: int, threads: int = 1) -> Dataset:
    """Draw n labeled observations from the chain.

    Work is split into fixed-size blocks, each on a stream keyed by
    (seed, block index), so any thread count produces identical output.
    """
    if n < 1:
        raise InvalidConfigError(f"n must be at least 1, got {n}")
    if threads < 1:
        raise InvalidConfigError(f"threads must be at least 1, got {threads}")
    dims = _network_dims(params.network)
    blocks = [(b, min(_BLOCK, n - b * _BLOCK)) for b in range((n + _BLOCK - 1) // _BLOCK)]
    ys = np.empty(n, dtype=np.int64)
    xs = np.empty((n, dims[-1]), dtype=np.float64)

    def fill(item):
        block, count = item
        ys_b, xs_b = _sample_block(params, seed, block, count)
        lo = block * _BLOCK
        ys[lo : lo + count] = ys_b
        xs[lo : lo + count] = xs_b

    if threads == 1 or len(blocks) == 1:
        for item in blocks:
            fill(item)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, blocks))
    if isinstance(params.network, Hypothesis):
        source = params.network.to_dict()
    else:
        source = {
            "kind": "general",
            "dims": list(params.network.dims),
            "w0": params.network.w0.tolist(),
            "mats": [m.tolist() for m in params.network.mats],
        }
    return Dataset(xs=xs, ys=ys, seed=seed, source=source)


def render_dataset_csv(dataset: Dataset) -> str:
    """CSV text with header y,x1,...,xp and 17 significant digit floats."""
    p = dataset.xs.shape[1]
    lines = ["y," + ",".join(f"x{j}" for j in range(1, p + 1))]
    for y, row in zip(dataset.ys, dataset.xs):
        lines.append(str(int(y)) + "," + ",".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def dataset_sidecar(dataset: Dataset, sigma2: float) -> dict:
    return {
        "seed": int(dataset.seed),
        "n": int(dataset.ys.size),
        "sigma2": float(sigma2),
        "hypothesis": dataset.source,
    }


def sidecar_path(path: Path) -> Path:
    if path.suffix == ".csv":
        return path.with_suffix(".meta.json")
    return path.with_name(path.name + ".meta.json")


def write_dataset_csv(dataset: Dataset, sigma2: float, path: str | Path) -> Path:
    """Write the CSV and its JSON sidecar; returns the sidecar path."""
    path = Path(path)
    path.write_text(render_dataset_csv(dataset))
    meta = sidecar_path(path)
    meta.write_text(json.dumps(dataset_sidecar(dataset, sigma2), indent=2) + "\n")
    return meta


def read_dataset_csv(path: str | Path) -> tuple[Dataset, dict | None]:
    """Read a dataset CSV back; the sidecar is returned too when present."""
    path = Path(path)
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    if header[0] != "y" or any(
        name != f"x{j}" for j, name in enumerate(header[1:], start=1)
    ):
        raise InvalidConfigError(f"unrecognized dataset header: {lines[0]!r}")
    ys = np.empty(len(lines) - 1, dtype=np.int64)
    xs = np.empty((len(lines) - 1, len(header) - 1), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        parts = line.split(",")
        if len(parts) != len(header):
            raise InvalidConfigError(f"row {i + 1} has {len(parts)} fields, expected {len(header)}")
        ys[i] = int(parts[0])
        xs[i] = [float(v) for v in parts[1:]]
    meta = None
    meta_file = sidecar_path(path)
    if meta_file.exists():
        meta = json.loads(meta_file.read_text())
    seed = int(meta["seed"]) if meta else -1
    source = meta.get("hypothesis", {}) if meta else {}
    return Dataset(xs=xs, ys=ys, seed=seed, source=source), meta
