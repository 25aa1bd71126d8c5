"""Exact transition kernels: down/up operators, down-up walks, Glauber dynamics.

Kernels are immutable row-stochastic matrices over an explicit state index
with a designated stationary density. Small state spaces get dense matrices;
Glauber kernels switch to CSR beyond 2^12 states.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import expit, logsumexp

from .errors import (
    ArityOutOfRange,
    DimensionMismatch,
    StateSpaceTooLarge,
    ZeroMassRow,
)
from .subsets import SubsetDensity, all_spin_states, down_project, subset_of

DENSE_STATE_LIMIT = 1 << 12
ENUMERATION_CAP = 1 << 20


@dataclass(frozen=True)
class TransitionKernel:
    """Row-stochastic operator with explicit row/column state indices.

    Square kernels carry their stationary density; rectangular operators
    (down/up) leave it None.
    """

    row_states: tuple
    col_states: tuple
    matrix: object  # ndarray or scipy.sparse matrix
    stationary: np.ndarray | None
    kind: str

    @property
    def square(self) -> bool:
        return self.row_states is self.col_states or self.row_states == self.col_states

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def step(self, dist: np.ndarray) -> np.ndarray:
        """One step of the chain applied to a distribution row vector."""
        return np.asarray(dist @ self.matrix).ravel()

    def row_sum_residual(self) -> float:
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        return float(np.max(np.abs(rows - 1.0)))

    def detailed_balance_residual(self) -> float:
        if self.stationary is None or not self.square:
            raise DimensionMismatch("detailed balance needs a square kernel with stationary density")
        P = self.dense()
        F = self.stationary[:, None] * P
        return float(np.max(np.abs(F - F.T)))

    def stationarity_residual(self) -> float:
        if self.stationary is None:
            raise DimensionMismatch("kernel has no stationary density")
        return float(np.max(np.abs(self.step(self.stationary) - self.stationary)))

    def to_json(self, max_states: int = 512) -> dict:
        if self.shape[0] > max_states or self.shape[1] > max_states:
            raise StateSpaceTooLarge(f"kernel dump limited to {max_states} states")
        return {
            "kind": self.kind,
            "row_states": [list(s) for s in self.row_states],
            "col_states": [list(s) for s in self.col_states],
            "matrix": self.dense().tolist(),
            "stationary": None if self.stationary is None else self.stationary.tolist(),
        }


def kernel_to_file(kernel: TransitionKernel, path, max_states: int = 512) -> None:
    with open(path, "w") as fh:
        json.dump(kernel.to_json(max_states), fh)


# ---------------------------------------------------------------------------
# down / up operators


def down_operator(n: int, k: int, ell: int) -> TransitionKernel:
    """D_{k->ell} on the full lattice: entry 1/C(k,ell) iff T subset S."""
    if not (0 <= ell <= k <= n):
        raise ArityOutOfRange(f"need 0 <= ell <= k <= n, got ell={ell}, k={k}, n={n}")
    rows = tuple(combinations(range(n), k))
    cols = tuple(combinations(range(n), ell))
    col_index = {c: j for j, c in enumerate(cols)}
    D = np.zeros((len(rows), len(cols)))
    coeff = 1.0 / _binom(k, ell)
    for i, S in enumerate(rows):
        for T in combinations(S, ell):
            D[i, col_index[T]] = coeff
    return TransitionKernel(rows, cols, D, None, kind=f"down:{k}->{ell}")


def _binom(a: int, b: int) -> int:
    from math import comb

    return comb(a, b)


def _reachable_level(mu: SubsetDensity, ell: int):
    """Unique ell-subsets of support sets, as sorted masks plus tuple states."""
    masks = set()
    for S in mu.sets:
        for T in combinations(S, ell):
            m = 0
            for i in T:
                m |= 1 << i
            masks.add(m)
    order = np.array(sorted(masks), dtype=np.uint64)
    return order, tuple(subset_of(int(m)) for m in order)


def _down_restricted(mu: SubsetDensity, ell: int):
    """D_{k->ell} with rows restricted to supp(mu), columns to reachable sets."""
    col_masks, col_states = _reachable_level(mu, ell)
    lookup = {int(m): j for j, m in enumerate(col_masks)}
    D = np.zeros((mu.size, len(col_masks)))
    coeff = 1.0 / _binom(mu.k, ell)
    for i, S in enumerate(mu.sets):
        for T in combinations(S, ell):
            m = 0
            for x in T:
                m |= 1 << x
            D[i, lookup[m]] = coeff
    return D, col_masks, col_states


def up_operator(mu: SubsetDensity, ell: int) -> TransitionKernel:
    """U_{ell->k} for mu: entry mu(S) / sum_{S' >= T} mu(S') iff T subset S.

    Rows cover exactly the ell-sets reachable under supp(mu); unreachable
    rows are omitted from the state index.
    """
    if not (0 <= ell <= mu.k):
        raise ArityOutOfRange(f"need 0 <= ell <= k={mu.k}, got {ell}")
    D, col_masks, col_states = _down_restricted(mu, ell)
    # denom(T) = total mass of supersets of T
    hits = D > 0
    denom = hits.T @ mu.weights
    if np.any(denom <= 0.0):
        raise ZeroMassRow("reachable set with zero superset mass")
    U = (hits.T * mu.weights[None, :]) / denom[:, None]
    return TransitionKernel(col_states, tuple(mu.sets), U, None, kind=f"up:{ell}->{mu.k}")


def down_up_kernel(mu: SubsetDensity, ell: int, level: str = "k") -> TransitionKernel:
    """The k<->ell down-up walk for mu.

    level="k" composes D then U (states are the support k-sets, stationary
    mu); level="ell" composes U then D (states are the reachable ell-sets,
    stationary mu D_{k->ell}). Both are reversible with nonnegative spectra.
    """
    if not (0 <= ell <= mu.k):
        raise ArityOutOfRange(f"need 0 <= ell <= k={mu.k}, got {ell}")
    if level not in ("k", "ell"):
        raise ArityOutOfRange(f"level must be 'k' or 'ell', got {level!r}")
    D, col_masks, col_states = _down_restricted(mu, ell)
    hits = D > 0
    denom = hits.T @ mu.weights
    if np.any(denom <= 0.0):
        raise ZeroMassRow("reachable set with zero superset mass")
    U = (hits.T * mu.weights[None, :]) / denom[:, None]
    if level == "k":
        P = D @ U
        return TransitionKernel(tuple(mu.sets), tuple(mu.sets), P, mu.probs,
                                kind=f"down-up:{mu.k}<->{ell}")
    P = U @ D
    proj = down_project(mu, ell)
    if not np.array_equal(proj.masks, col_masks):
        raise ZeroMassRow("projected support disagrees with reachable level")
    return TransitionKernel(col_states, col_states, P, proj.probs,
                            kind=f"up-down:{ell}<->{mu.k}")


# ---------------------------------------------------------------------------
# Glauber dynamics


def spin_states(n: int) -> np.ndarray:
    return all_spin_states(n)


def flip_index(idx, j: int, n: int):
    """State index after flipping coordinate j (index bit n-1-j)."""
    return idx ^ (1 << (n - 1 - j))


def ising_local_fields(X: np.ndarray, J: np.ndarray, h: np.ndarray) -> np.ndarray:
    """F[s, j] = sum_{l != j} J_{jl} x_l + h_j for every state s."""
    return X @ J - X * np.diag(J)[None, :] + h[None, :]


def glauber_kernel(model, force_dense: bool | None = None) -> TransitionKernel:
    """Exact 2^n x 2^n Glauber kernel for an Ising model.

    A step picks a coordinate uniformly and resamples it from the conditional
    law. This is the n<->(n-1) down-up walk on the homogenized density, up to
    the sigma <-> sigma^hom state relabeling.
    """
    n, J, h = model.n, model.interaction, model.field
    if n > 20:
        raise StateSpaceTooLarge(f"2^{n} states exceed the enumeration cap")
    m = 1 << n
    X = spin_states(n).astype(np.float64)
    F = ising_local_fields(X, J, h)
    pflip = expit(-2.0 * X * F)  # prob the resampled value differs
    energies = 0.5 * np.einsum("si,si->s", X @ J, X) + X @ h
    stationary = np.exp(energies - logsumexp(energies))
    stationary /= stationary.sum()

    idx = np.arange(m)
    dense = force_dense if force_dense is not None else (m <= DENSE_STATE_LIMIT)
    states = tuple(map(tuple, spin_states(n)))
    if dense:
        P = np.zeros((m, m))
        for j in range(n):
            P[idx, flip_index(idx, j, n)] = pflip[:, j] / n
        P[idx, idx] = 1.0 - pflip.sum(axis=1) / n
        return TransitionKernel(states, states, P, stationary, kind="glauber")
    rows = np.concatenate([idx] * (n + 1))
    cols = np.concatenate([flip_index(idx, j, n) for j in range(n)] + [idx])
    data = np.concatenate([pflip[:, j] / n for j in range(n)]
                          + [1.0 - pflip.sum(axis=1) / n])
    P = sp.csr_matrix((data, (rows, cols)), shape=(m, m))
    return TransitionKernel(states, states, P, stationary, kind="glauber")


# ---------------------------------------------------------------------------
# Dirichlet forms and spectra


def dirichlet_form(kernel: TransitionKernel, f, g) -> float:
    """E_P(f, g) = <f, (I - P) g>_mu."""
    if kernel.stationary is None or not kernel.square:
        raise DimensionMismatch("Dirichlet form needs a square kernel with stationary density")
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != (kernel.shape[0],) or g.shape != (kernel.shape[0],):
        raise DimensionMismatch("f, g must be defined on the full state index")
    Pg = np.asarray(kernel.matrix @ g).ravel()
    return float(np.sum(kernel.stationary * f * (g - Pg)))


def glauber_conductance_form(model, f, g) -> float:
    """Glauber Dirichlet form as a sum over hypercube edges.

    E(f, g) = (1/n) sum_{x ~ y} [mu(x) mu(y) / (mu(x) + mu(y))]
              (f(x) - f(y)) (g(x) - g(y)),
    the edge-conductance expression with the uniform 1/n site-selection
    factor made explicit.
    """
    n = model.n
    mu = model.spin_probs()
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    m = 1 << n
    idx = np.arange(m)
    total = 0.0
    for j in range(n):
        nb = flip_index(idx, j, n)
        take = nb > idx  # each edge once
        a, b = idx[take], nb[take]
        cond = mu[a] * mu[b] / (mu[a] + mu[b])
        total += np.sum(cond * (f[a] - f[b]) * (g[a] - g[b]))
    return float(total / n)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    gap: float
    reversible: bool
    db_residual: float
    min_eigenvalue: float


def spectrum_report(kernel: TransitionKernel, db_tol: float = 1e-10,
                    max_states: int = DENSE_STATE_LIMIT) -> SpectrumReport:
    """Full spectrum of the mu-symmetrized kernel plus reversibility verdict."""
    if not kernel.square or kernel.stationary is None:
        raise DimensionMismatch("spectrum needs a square kernel with stationary density")
    m = kernel.shape[0]
    if m > max_states:
        raise StateSpaceTooLarge(f"{m} states exceed dense spectrum limit {max_states}")
    P = kernel.dense()
    mu = kernel.stationary
    db = float(np.max(np.abs(mu[:, None] * P - (mu[:, None] * P).T)))
    root = np.sqrt(np.maximum(mu, 1e-300))
    S = (root[:, None] * P) / root[None, :]
    S = 0.5 * (S + S.T)
    eig = np.linalg.eigvalsh(S)[::-1]
    gap = float(1.0 - eig[1]) if m > 1 else 1.0
    return SpectrumReport(eigenvalues=eig, gap=gap, reversible=db <= db_tol,
                          db_residual=db, min_eigenvalue=float(eig[-1]))


def spectral_gap(kernel: TransitionKernel) -> float:
    """1 - lambda_2 of the symmetrized kernel; sparse-safe via Lanczos."""
    if not kernel.square or kernel.stationary is None:
        raise DimensionMismatch("gap needs a square kernel with stationary density")
    m = kernel.shape[0]
    if not kernel.is_sparse and m <= DENSE_STATE_LIMIT:
        return spectrum_report(kernel).gap
    mu = kernel.stationary
    root = np.sqrt(np.maximum(mu, 1e-300))
    Dl = sp.diags(root)
    Dr = sp.diags(1.0 / root)
    S = Dl @ kernel.matrix @ Dr
    S = 0.5 * (S + S.T)
    vals = spla.eigsh(S, k=2, which="LA", return_eigenvectors=False,
                      maxiter=20000, tol=0.0)
    return float(1.0 - np.sort(vals)[0])
