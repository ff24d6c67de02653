"""The restricted hypothesis class of layered sign networks.

A hypothesis is a unit sign vector with dyadic magnitudes together with d
structured layer matrices.  Each layer acts as a permutation on the first r
coordinates and as multiplication by a fixed contraction c on the rest:

    layer = [[R, 0], [0, c * I]],  R the matrix of a permutation of {1..r}.

The class is finite with (r!)^d * 2^p members and every member has a
canonical integer index used for enumeration, serialization, and tie
breaking.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidConfigError

ENUMERATION_BUDGET = 10_000_000

_INV_SQRT2 = math.sqrt(0.5)


def _dyadic_magnitude(k: int) -> float:
    # 2^(-k/2), exact power of two for even k
    return math.ldexp(_INV_SQRT2 if k % 2 else 1.0, -(k // 2))


def magnitude_ladder(p: int) -> tuple[float, ...]:
    """Coordinate magnitudes 2^(-1/2), 2^(-1), ..., with the last value repeated.

    Repeating 2^(-(p-1)/2) at position p makes the squared magnitudes sum
    to exactly 1: the first p-1 terms telescope to 1 - 2^(-(p-1)) and the
    repeat adds the missing 2^(-(p-1)).
    """
    mags = [_dyadic_magnitude(k) for k in range(1, p)]
    mags.append(mags[-1])
    return tuple(mags)


def _check_signs(p: int, signs: Sequence[int]) -> tuple[int, ...]:
    signs = tuple(int(s) for s in signs)
    if len(signs) != p:
        raise InvalidConfigError(f"expected {p} signs, got {len(signs)}")
    if any(s not in (-1, 1) for s in signs):
        raise InvalidConfigError("signs must be +1 or -1")
    return signs


def _check_perm(r: int, perm: Sequence[int]) -> tuple[int, ...]:
    perm = tuple(int(q) for q in perm)
    if sorted(perm) != list(range(1, r + 1)):
        raise InvalidConfigError(f"perm must be a permutation of 1..{r}, got {perm}")
    return perm


@dataclass(frozen=True)
class SignVector:
    """Unit vector whose k-th entry is sign_k * 2^(-k/2) (last magnitude repeated)."""

    p: int
    signs: tuple[int, ...]
    values: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.p < 3:
            raise InvalidConfigError(f"p must be at least 3, got {self.p}")
        object.__setattr__(self, "signs", _check_signs(self.p, self.signs))
        mags = magnitude_ladder(self.p)
        object.__setattr__(
            self, "values", tuple(s * m for s, m in zip(self.signs, mags))
        )

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)


@dataclass(frozen=True)
class StructuredLayer:
    """One layer matrix: permutation block of size r, then c times identity."""

    p: int
    r: int
    perm: tuple[int, ...]
    c: float

    def __post_init__(self):
        if not 1 <= self.r <= self.p - 1:
            raise InvalidConfigError(f"need 1 <= r <= p-1, got r={self.r}, p={self.p}")
        object.__setattr__(self, "perm", _check_perm(self.r, self.perm))
        if not 0.0 < self.c < 1.0:
            raise InvalidConfigError(f"c must lie in (0, 1), got {self.c}")

    def realized(self) -> np.ndarray:
        """Dense p x p matrix of this layer."""
        mat = np.zeros((self.p, self.p))
        for j, target in enumerate(self.perm):
            mat[target - 1, j] = 1.0
        for i in range(self.r, self.p):
            mat[i, i] = self.c
        return mat

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply the layer without materializing the matrix.

        The permuted coordinates move by index only, so repeated
        application introduces no floating error in the top block.
        """
        out = np.empty_like(v)
        idx = np.fromiter((q - 1 for q in self.perm), dtype=np.intp, count=self.r)
        out[idx] = v[: self.r]
        out[self.r :] = self.c * v[self.r :]
        return out


def scale_constant(p: int, r: int) -> float:
    """Contraction used on the unpermuted block: 1 / (p - r + 1)."""
    if not 1 <= r <= p - 1:
        raise InvalidConfigError(f"need 1 <= r <= p-1, got r={r}, p={p}")
    return 1.0 / (p - r + 1)


@dataclass(frozen=True)
class Hypothesis:
    """A sign vector plus d structured layers sharing one (p, r, c)."""

    w0: SignVector
    layers: tuple[StructuredLayer, ...]

    def __post_init__(self):
        if not self.layers:
            raise InvalidConfigError("a hypothesis needs at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        p, r, c = self.w0.p, self.layers[0].r, self.layers[0].c
        for layer in self.layers:
            if (layer.p, layer.r, layer.c) != (p, r, c):
                raise InvalidConfigError("all layers must share p, r, and c")

    @property
    def p(self) -> int:
        return self.w0.p

    @property
    def d(self) -> int:
        return len(self.layers)

    @property
    def r(self) -> int:
        return self.layers[0].r

    @property
    def c(self) -> float:
        return self.layers[0].c

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "d": self.d,
            "r": self.r,
            "c": self.c,
            "signs": list(self.w0.signs),
            "perms": [list(layer.perm) for layer in self.layers],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Hypothesis":
        try:
            p, d, r, c = data["p"], data["d"], data["r"], data["c"]
            signs, perms = data["signs"], data["perms"]
        except KeyError as exc:
            raise InvalidConfigError(f"missing hypothesis field {exc}") from exc
        if len(perms) != d:
            raise InvalidConfigError(f"expected {d} perms, got {len(perms)}")
        w0 = SignVector(p, tuple(signs))
        layers = tuple(StructuredLayer(p, r, tuple(q), c) for q in perms)
        return cls(w0, layers)


@dataclass(frozen=True, eq=False)
class GeneralNetwork:
    """Arbitrary layered linear network: a mean vector and d weight matrices.

    Used by the generic covariance and divergence routines; carries no
    class structure.  Matrix i maps layer i-1 activations to layer i, so
    mats[i].shape == (dims[i+1], dims[i]).
    """

    w0: np.ndarray
    mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "w0", np.asarray(self.w0, dtype=np.float64))
        object.__setattr__(
            self, "mats", tuple(np.asarray(m, dtype=np.float64) for m in self.mats)
        )
        if self.w0.ndim != 1:
            raise InvalidConfigError("w0 must be a vector")
        if not self.mats:
            raise InvalidConfigError("a network needs at least one layer matrix")
        prev = self.w0.shape[0]
        for i, mat in enumerate(self.mats):
            if mat.ndim != 2 or mat.shape[1] != prev:
                raise InvalidConfigError(
                    f"layer {i + 1} must have {prev} columns, got shape {mat.shape}"
                )
            prev = mat.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.w0.shape[0],) + tuple(m.shape[0] for m in self.mats)

    @property
    def d(self) -> int:
        return len(self.mats)

    @property
    def p(self) -> int:
        return self.mats[-1].shape[0]

    @classmethod
    def from_hypothesis(cls, h: Hypothesis) -> "GeneralNetwork":
        return cls(h.w0.as_array(), tuple(layer.realized() for layer in h.layers))


def _check_class_params(p: int, d: int, r: int, c: float | None) -> float:
    if p < 3:
        raise InvalidConfigError(f"p must be at least 3, got {p}")
    if d < 1:
        raise InvalidConfigError(f"d must be at least 1, got {d}")
    if not 1 <= r <= p - 1:
        raise InvalidConfigError(f"need 1 <= r <= p-1, got r={r}, p={p}")
    if c is None:
        c = scale_constant(p, r)
    if not 0.0 < c < 1.0:
        raise InvalidConfigError(f"c must lie in (0, 1), got {c}")
    return c


def class_cardinality(p: int, d: int, r: int) -> int:
    """Exact member count (r!)^d * 2^p."""
    _check_class_params(p, d, r, None)
    return math.factorial(r) ** d * 2**p


def class_log_cardinality(p: int, d: int, r: int) -> float:
    """log((r!)^d * 2^p), computed in log space to stay finite for large classes."""
    _check_class_params(p, d, r, None)
    return d * math.lgamma(r + 1) + p * math.log(2.0)


def permutation_rank(perm: Sequence[int]) -> int:
    """Lexicographic rank of a permutation of 1..r (identity has rank 0)."""
    perm = tuple(perm)
    r = len(perm)
    rank = 0
    for i in range(r):
        smaller = sum(1 for x in perm[i + 1 :] if x < perm[i])
        rank += smaller * math.factorial(r - 1 - i)
    return rank


def permutation_at(r: int, rank: int) -> tuple[int, ...]:
    """Inverse of permutation_rank: the rank-th permutation of 1..r."""
    if not 0 <= rank < math.factorial(r):
        raise InvalidConfigError(f"rank {rank} out of range for r={r}")
    pool = list(range(1, r + 1))
    out = []
    for i in range(r, 0, -1):
        f = math.factorial(i - 1)
        digit, rank = divmod(rank, f)
        out.append(pool.pop(digit))
    return tuple(out)


def _sign_mask(signs: Sequence[int]) -> int:
    # big-endian: coordinate 1 is the most significant bit, bit 0 means +1
    mask = 0
    for s in signs:
        mask = (mask << 1) | (1 if s < 0 else 0)
    return mask


def _signs_from_mask(p: int, mask: int) -> tuple[int, ...]:
    return tuple(-1 if (mask >> (p - k)) & 1 else 1 for k in range(1, p + 1))


def index_of(h: Hypothesis) -> int:
    """Canonical index: sign mask in the high digits, layer ranks below.

    The last layer occupies the least significant digit, so consecutive
    indices differ in layer d first.  Index 0 is the all-plus sign vector
    with identity layers.
    """
    base = math.factorial(h.r)
    idx = _sign_mask(h.w0.signs)
    for layer in h.layers:
        idx = idx * base + permutation_rank(layer.perm)
    return idx


def hypothesis_at(
    p: int, d: int, r: int, index: int, c: float | None = None
) -> Hypothesis:
    """Member of the class at the given canonical index."""
    c = _check_class_params(p, d, r, c)
    card = class_cardinality(p, d, r)
    if not 0 <= index < card:
        raise InvalidConfigError(f"index {index} out of range, class has {card} members")
    base = math.factorial(r)
    ranks = []
    for _ in range(d):
        index, rank = divmod(index, base)
        ranks.append(rank)
    ranks.reverse()
    signs = _signs_from_mask(p, index)
    layers = tuple(StructuredLayer(p, r, permutation_at(r, rank), c) for rank in ranks)
    return Hypothesis(SignVector(p, signs), layers)


def enumerate_class(
    p: int, d: int, r: int, c: float | None = None, budget: int = ENUMERATION_BUDGET
) -> Iterator[Hypothesis]:
    """All class members in canonical index order.

    Refuses upfront when the class is larger than `budget` so callers
    never start an enumeration they cannot finish.
    """
    c = _check_class_params(p, d, r, c)
    card = class_cardinality(p, d, r)
    if card > budget:
        raise BudgetExceededError(
            f"class has {card} members, which exceeds the enumeration budget {budget}"
        )
    # itertools.permutations of a sorted pool is lexicographic, which is
    # exactly rank order
    perms = list(itertools.permutations(range(1, r + 1)))
    for mask in range(2**p):
        w0 = SignVector(p, _signs_from_mask(p, mask))
        for combo in itertools.product(perms, repeat=d):
            layers = tuple(StructuredLayer(p, r, perm, c) for perm in combo)
            yield Hypothesis(w0, layers)


def composed_permutation(h: Hypothesis) -> tuple[int, ...]:
    """Product of the layer permutations in application order."""
    comp = tuple(range(1, h.r + 1))
    for layer in h.layers:
        comp = tuple(layer.perm[x - 1] for x in comp)
    return comp


def effective_pattern(h: Hypothesis) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Symbolic identity of the effective mean direction.

    Two members of one class produce the same effective vector exactly
    when their composed permutation and sign vector agree, so this pair
    is a float-free equality key.
    """
    return composed_permutation(h), h.w0.signs


def effective_vector(network: Hypothesis | GeneralNetwork) -> np.ndarray:
    """Mean direction of the observable layer: all layer matrices applied to w0."""
    if isinstance(network, Hypothesis):
        v = network.w0.as_array()
        for layer in network.layers:
            v = layer.apply(v)
        return v
    v = network.w0.copy()
    for mat in network.mats:
        v = mat @ v
    return v
