"""Densities on k-subsets of a ground set {0, ..., n-1}.

A SubsetDensity stores nonnegative weights on size-k subsets together with a
cached normalizer; probability semantics divide by the normalizer on read.
Subsets are canonically encoded as sorted index tuples externally and as
bitmasks internally (n <= 64), which keeps enumeration loops cheap.

The operations here cover the constructions the rest of the package builds
on: generating polynomials, external fields, links (conditioning), spin-law
homogenization, r-fold products, and level-wise down-projection.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, product
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import (
    ArityMismatch,
    ArityOutOfRange,
    DuplicateKey,
    EmptySupport,
    NegativeCoordinate,
    NegativeWeight,
    NonpositiveField,
    StateSpaceTooLarge,
    ZeroMassCondition,
)

MAX_GROUND = 64  # bitmask encoding


def mask_of(subset: Iterable[int]) -> int:
    m = 0
    for i in subset:
        m |= 1 << int(i)
    return m


def subset_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    m = int(mask)
    while m:
        if m & 1:
            out.append(i)
        m >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class SubsetDensity:
    """Unnormalized density on the k-subsets of {0, ..., n-1}.

    Fields
    ------
    n, k : ground size and arity
    masks : sorted uint64 bitmasks of the support sets
    weights : positive weights aligned with masks (zeros dropped upstream)
    normalizer : cached sum of weights
    """

    n: int
    k: int
    masks: np.ndarray
    weights: np.ndarray
    normalizer: float

    def __post_init__(self):
        self.masks.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.masks)

    @property
    def probs(self) -> np.ndarray:
        return self.weights / self.normalizer

    @cached_property
    def sets(self) -> list[tuple[int, ...]]:
        return [subset_of(int(m)) for m in self.masks]

    @cached_property
    def sets_array(self) -> np.ndarray:
        """(support, k) matrix of member indices, rows sorted ascending."""
        if self.k == 0:
            return np.zeros((self.size, 0), dtype=np.int64)
        return np.array(self.sets, dtype=np.int64)

    @cached_property
    def indicator(self) -> np.ndarray:
        """(support, n) 0/1 membership matrix."""
        B = np.zeros((self.size, self.n))
        if self.k > 0:
            rows = np.repeat(np.arange(self.size), self.k)
            B[rows, self.sets_array.ravel()] = 1.0
        return B

    def index_of(self, subset: Iterable[int]) -> int:
        """Position of a subset in the support, or -1 if absent."""
        m = np.uint64(mask_of(subset))
        j = int(np.searchsorted(self.masks, m))
        if j < len(self.masks) and self.masks[j] == m:
            return j
        return -1

    def prob_of(self, subset: Iterable[int]) -> float:
        j = self.index_of(subset)
        return 0.0 if j < 0 else float(self.weights[j] / self.normalizer)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "entries": [
                {"set": list(s), "w": float(w)}
                for s, w in zip(self.sets, self.weights)
            ],
        }


def _build(n: int, k: int, masks: np.ndarray, weights: np.ndarray) -> SubsetDensity:
    """Assemble a density from aligned mask/weight arrays, dropping zeros."""
    keep = weights > 0.0
    masks, weights = masks[keep], weights[keep]
    if len(masks) == 0:
        raise EmptySupport("density has no positive-weight support set")
    order = np.argsort(masks, kind="stable")
    masks = np.ascontiguousarray(masks[order])
    weights = np.ascontiguousarray(weights[order].astype(np.float64))
    return SubsetDensity(n=int(n), k=int(k), masks=masks, weights=weights,
                         normalizer=float(weights.sum()))


def make_density(n: int, k: int, entries: Iterable[tuple[Sequence[int], float]]) -> SubsetDensity:
    """Construct a SubsetDensity from (subset, weight) pairs.

    Weights must be >= 0 with at least one positive; zero-weight entries are
    dropped so the support set is crisp. Duplicate subsets are rejected.
    """
    if not (0 <= k <= n):
        raise ArityMismatch(f"need 0 <= k <= n, got k={k}, n={n}")
    if n > MAX_GROUND:
        raise StateSpaceTooLarge(f"ground size {n} exceeds bitmask limit {MAX_GROUND}")
    masks, weights, seen = [], [], set()
    for subset, w in entries:
        s = tuple(sorted(int(i) for i in subset))
        if len(s) != k or len(set(s)) != k:
            raise ArityMismatch(f"subset {s} does not have arity {k}")
        if s and (s[0] < 0 or s[-1] >= n):
            raise ArityMismatch(f"subset {s} not contained in range(0, {n})")
        w = float(w)
        if w < 0.0:
            raise NegativeWeight(f"weight {w} for subset {s}")
        m = mask_of(s)
        if m in seen:
            raise DuplicateKey(f"duplicate subset {s}")
        seen.add(m)
        masks.append(m)
        weights.append(w)
    if not masks:
        raise EmptySupport("no entries given")
    return _build(n, k, np.array(masks, dtype=np.uint64), np.array(weights))


def uniform_density(n: int, k: int) -> SubsetDensity:
    """Uniform distribution on all of C(n, k)."""
    return make_density(n, k, ((s, 1.0) for s in combinations(range(n), k)))


def marginal_vector(mu: SubsetDensity) -> np.ndarray:
    """Element marginals p = mu D_{k->1}: p_i = P[i in S] / k, summing to 1."""
    if mu.k == 0:
        raise ArityOutOfRange("marginal vector undefined for arity 0")
    return (mu.probs @ mu.indicator) / mu.k


def validate_marginal(q: np.ndarray, n: int, tol: float = 1e-12) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (n,):
        raise ArityMismatch(f"marginal has shape {q.shape}, expected ({n},)")
    if np.any(q < -tol):
        raise NegativeWeight("marginal has negative entries")
    if abs(q.sum() - 1.0) > 1e-9:
        raise NegativeWeight(f"marginal sums to {q.sum()}, expected 1")
    return np.clip(q, 0.0, None)


def validate_alphas(alpha, n: int) -> np.ndarray:
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim == 0:
        a = np.full(n, float(a))
    if a.shape != (n,):
        raise ArityMismatch(f"alpha vector has shape {a.shape}, expected ({n},)")
    if np.any(a <= 0.0) or np.any(a > 1.0):
        raise ArityOutOfRange("alpha exponents must lie in (0, 1]")
    return a


def gen_poly_eval(mu: SubsetDensity, z: Sequence[float]) -> float:
    """Evaluate g_mu(z) = sum_S prob(S) * prod_{i in S} z_i."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (mu.n,):
        raise ArityMismatch(f"z has shape {z.shape}, expected ({mu.n},)")
    if np.any(z < 0.0):
        raise NegativeCoordinate("generating polynomial takes z >= 0")
    if mu.k == 0:
        return 1.0
    monomials = np.prod(z[mu.sets_array], axis=1)
    return float(mu.probs @ monomials)


def log_gen_poly(mu: SubsetDensity, log_z: np.ndarray, alpha: np.ndarray | None = None) -> np.ndarray:
    """log g_mu(z^alpha) for one or many points, evaluated stably in log space.

    log_z has shape (n,) or (m, n); returns a scalar array of shape () or (m,).
    """
    log_z = np.atleast_2d(np.asarray(log_z, dtype=np.float64))
    if alpha is not None:
        log_z = log_z * alpha[None, :]
    logw = np.log(mu.probs)
    if mu.k == 0:
        out = np.zeros(log_z.shape[0])
    else:
        mono = log_z @ mu.indicator.T  # (m, support)
        out = logsumexp(mono + logw[None, :], axis=1)
    return out if out.shape[0] > 1 else out[0]


def external_field(mu: SubsetDensity, lam: Sequence[float]) -> SubsetDensity:
    """Reweight by the monomial prod_{i in S} lambda_i (support unchanged)."""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (mu.n,):
        raise ArityMismatch(f"field has shape {lam.shape}, expected ({mu.n},)")
    if np.any(lam <= 0.0):
        raise NonpositiveField("external field must be strictly positive")
    if mu.k == 0:
        factors = np.ones(mu.size)
    else:
        # log-space product tolerates huge and tiny fields
        factors = np.exp(np.log(lam)[mu.sets_array].sum(axis=1))
    return _build(mu.n, mu.k, mu.masks.copy(), mu.weights * factors)


def condition_on(mu: SubsetDensity, t: Iterable[int]) -> SubsetDensity:
    """Link of mu at T: law of S \\ T given T subset S, ground relabeled to [n]\\T."""
    t = tuple(sorted(set(int(i) for i in t)))
    if len(t) > mu.k:
        raise ArityOutOfRange(f"conditioning set size {len(t)} exceeds arity {mu.k}")
    tmask = np.uint64(mask_of(t))
    hit = (mu.masks & tmask) == tmask
    if not np.any(hit):
        raise ZeroMassCondition(f"no support set contains {t}")
    remaining = [i for i in range(mu.n) if i not in t]
    relabel = {old: new for new, old in enumerate(remaining)}
    masks, weights = [], []
    for m, w in zip(mu.masks[hit], mu.weights[hit]):
        rest = subset_of(int(m) & ~int(tmask))
        masks.append(mask_of(relabel[i] for i in rest))
        weights.append(w)
    return _build(len(remaining), mu.k - len(t),
                  np.array(masks, dtype=np.uint64), np.array(weights))


def homogenize(spin_weights) -> SubsetDensity:
    """Encode a (+/-1)^m spin law as an m-homogeneous density on 2m elements.

    sigma maps to {i : sigma_i = +1} union {m+i : sigma_i = -1}, so every
    support set holds exactly one of {i, m+i} per coordinate. Accepts a
    mapping {sigma tuple: weight} or a pair (sigmas array, weights array).
    """
    if isinstance(spin_weights, Mapping):
        items = list(spin_weights.items())
        if not items:
            raise EmptySupport("no spin configurations given")
        sigmas = np.array([s for s, _ in items], dtype=np.int64)
        weights = np.array([w for _, w in items], dtype=np.float64)
    else:
        sigmas, weights = spin_weights
        sigmas = np.asarray(sigmas, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
    if sigmas.ndim != 2 or not np.all(np.abs(sigmas) == 1):
        raise ArityMismatch("spin configurations must be +/-1 vectors")
    if np.any(weights < 0.0):
        raise NegativeWeight("spin weights must be >= 0")
    m = sigmas.shape[1]
    if 2 * m > MAX_GROUND:
        raise StateSpaceTooLarge(f"2m = {2 * m} exceeds bitmask limit")
    up = (sigmas > 0)
    pos = np.arange(m, dtype=np.uint64)
    masks = np.where(up, np.uint64(1) << pos, np.uint64(1) << (pos + np.uint64(m))).astype(np.uint64)
    masks = np.bitwise_or.reduce(masks, axis=1) if m > 0 else np.zeros(len(sigmas), dtype=np.uint64)
    if len(np.unique(masks)) != len(masks):
        raise DuplicateKey("duplicate spin configuration")
    return _build(2 * m, m, masks, weights)


def spin_mask(sigma: Sequence[int]) -> int:
    """Bitmask of sigma^hom under the i-bar = m + i pairing."""
    m = len(sigma)
    out = 0
    for i, s in enumerate(sigma):
        out |= 1 << (i if s > 0 else m + i)
    return out


def r_fold(mu: SubsetDensity, r: int) -> SubsetDensity:
    """r-fold product: support set S maps to S x [r], same masses.

    Element (a, i) is encoded as a*r + i.
    """
    r = int(r)
    if r < 1:
        raise ArityOutOfRange(f"fold count must be >= 1, got {r}")
    if mu.n * r > MAX_GROUND:
        raise StateSpaceTooLarge(f"n*r = {mu.n * r} exceeds bitmask limit")
    block = (np.uint64(1) << np.uint64(r)) - np.uint64(1)  # r low bits
    masks = []
    for s in mu.sets:
        m = np.uint64(0)
        for a in s:
            m |= block << np.uint64(a * r)
        masks.append(m)
    return _build(mu.n * r, mu.k * r, np.array(masks, dtype=np.uint64),
                  mu.weights.copy())


def down_project(nu: SubsetDensity, ell: int) -> SubsetDensity:
    """Push nu through D_{k->ell}: mass of T is sum_{S >= T} nu(S) / C(k, ell).

    Implemented as the chain of one-level steps D_{k->k-1} ... D_{ell+1->ell},
    which makes the composition identity D_{k->ell} D_{ell->m} = D_{k->m}
    hold bit for bit.
    """
    ell = int(ell)
    if not (0 <= ell <= nu.k):
        raise ArityOutOfRange(f"need 0 <= ell <= {nu.k}, got {ell}")
    masks, weights = nu.masks, nu.weights
    j = nu.k
    while j > ell:
        sets = np.array([subset_of(int(m)) for m in masks], dtype=np.int64)
        child = (masks[:, None] & ~(np.uint64(1) << sets.astype(np.uint64))).ravel()
        w = np.repeat(weights / j, j)
        umasks, inv = np.unique(child, return_inverse=True)
        acc = np.zeros(len(umasks))
        np.add.at(acc, inv, w)
        masks, weights = umasks, acc
        j -= 1
    return _build(nu.n, ell, masks.copy(), weights.copy())


# ---------------------------------------------------------------------------
# file formats


def density_to_file(mu: SubsetDensity, path) -> None:
    with open(path, "w") as fh:
        json.dump(mu.to_json(), fh, indent=1)


def density_from_json(obj: dict) -> SubsetDensity:
    return make_density(obj["n"], obj["k"],
                        ((e["set"], e["w"]) for e in obj["entries"]))


def density_from_file(path) -> SubsetDensity:
    with open(path) as fh:
        return density_from_json(json.load(fh))


def spin_density_from_json(obj: dict) -> SubsetDensity:
    m = obj["m"]
    sigmas = np.array([e["sigma"] for e in obj["entries"]], dtype=np.int64)
    weights = np.array([e["w"] for e in obj["entries"]], dtype=np.float64)
    if sigmas.shape[1] != m:
        raise ArityMismatch("sigma length disagrees with m")
    return homogenize((sigmas, weights))


def all_spin_states(m: int) -> np.ndarray:
    """All +/-1 vectors of length m in index order (bit b of the index is
    coordinate b counted from the left; bit set means +1)."""
    idx = np.arange(1 << m, dtype=np.uint64)
    shifts = np.uint64(m - 1) - np.arange(m, dtype=np.uint64)
    bits = (idx[:, None] >> shifts[None, :]) & np.uint64(1)
    return (2 * bits.astype(np.int8) - 1).astype(np.int8)
