"""Ising models, the rank-1 specialization, and their certificate chains.

mu_{J,h}(x) is proportional to exp(<x, J x>/2 + <h, x>) on {-1,+1}^n. Rank-1
models J = u u^T carry the per-coordinate concavity profile
alpha_i = 1 - ||u_{-i}||^2 and admit exact Hessian, influence, contraction,
and exchange checks on enumerable instances. All ratio computations run on
Hamiltonian differences in log space, so huge external fields are safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .certify import CERTIFIED, FALSIFIED, Certificate
from .divergence import kl_divergence
from .errors import (
    ArityOutOfRange,
    AsymmetricMatrix,
    NormTooLarge,
    StateSpaceTooLarge,
)
from .subsets import SubsetDensity, all_spin_states, homogenize

ENUM_SPINS = 20


@dataclass(frozen=True)
class IsingModel:
    """Symmetric interaction matrix J and field h on {-1,+1}^n.

    rank1, when present, stores (u, v) with J = u u^T and h = v, enabling
    O(1)-per-step Glauber updates and the alpha-profile certificates.
    """

    n: int
    interaction: np.ndarray
    field: np.ndarray
    rank1: tuple | None = None

    def __post_init__(self):
        self.interaction.setflags(write=False)
        self.field.setflags(write=False)

    @cached_property
    def op_norm(self) -> float:
        if self.rank1 is not None:
            return float(np.dot(self.rank1[0], self.rank1[0]))
        if self.n <= 2048:
            return float(np.max(np.abs(np.linalg.eigvalsh(self.interaction))))
        rng = np.random.default_rng(0)
        v = rng.normal(size=self.n)
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(500):
            w = self.interaction @ v
            lam_new = float(np.linalg.norm(w))
            if lam_new == 0.0:
                return 0.0
            v = w / lam_new
            if abs(lam_new - lam) < 1e-13 * max(1.0, lam_new):
                lam = lam_new
                break
            lam = lam_new
        return lam

    def energies(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return 0.5 * np.einsum("si,si->s", X @ self.interaction, X) + X @ self.field

    def spin_states(self) -> np.ndarray:
        if self.n > ENUM_SPINS:
            raise StateSpaceTooLarge(f"2^{self.n} states exceed the enumeration cap")
        return all_spin_states(self.n)

    @cached_property
    def _probs(self) -> np.ndarray:
        E = self.energies(self.spin_states())
        p = np.exp(E - logsumexp(E))
        return p / p.sum()

    def spin_probs(self) -> np.ndarray:
        return self._probs

    def spin_density(self) -> SubsetDensity:
        """Homogenized representation of the spin law on 2n elements."""
        return homogenize((self.spin_states(), self.spin_probs()))

    def to_json(self) -> dict:
        if self.rank1 is not None:
            return {"n": self.n, "J": {"u": self.rank1[0].tolist()},
                    "h": self.field.tolist()}
        return {"n": self.n, "J": self.interaction.tolist(),
                "h": self.field.tolist()}


def make_ising(J, h) -> IsingModel:
    J = np.asarray(J, dtype=np.float64).copy()
    h = np.asarray(h, dtype=np.float64).copy()
    n = len(h)
    if J.shape != (n, n):
        raise AsymmetricMatrix(f"J has shape {J.shape} for n = {n}")
    if np.max(np.abs(J - J.T)) > 1e-12 * max(1.0, np.max(np.abs(J))):
        raise AsymmetricMatrix("interaction matrix must be symmetric")
    J = 0.5 * (J + J.T)
    return IsingModel(n=n, interaction=J, field=h)


def make_rank_one(u, v) -> IsingModel:
    u = np.asarray(u, dtype=np.float64).copy()
    v = np.asarray(v, dtype=np.float64).copy()
    if u.shape != v.shape:
        raise AsymmetricMatrix("u and v must have equal length")
    J = np.outer(u, u)
    return IsingModel(n=len(u), interaction=J, field=v, rank1=(u, v))


def curie_weiss(n: int, delta: float, h=None) -> IsingModel:
    """Complete-graph model J = ((1 - delta)/n) 11^T, so ||J||_op = 1 - delta."""
    if not (0.0 < delta < 1.0):
        raise ArityOutOfRange(f"delta must lie in (0, 1), got {delta}")
    u = np.full(n, math.sqrt((1.0 - delta) / n))
    v = np.zeros(n) if h is None else np.asarray(h, dtype=np.float64).copy()
    J = np.outer(u, u)
    return IsingModel(n=n, interaction=J, field=v, rank1=(u, v))


def psd_shift(model: IsingModel) -> IsingModel:
    """J' = J - lambda_min(J) I; the induced distribution is unchanged."""
    lam_min = float(np.min(np.linalg.eigvalsh(model.interaction)))
    if abs(lam_min) < 1e-15:
        return model
    J = model.interaction - lam_min * np.eye(model.n)
    return IsingModel(n=model.n, interaction=J, field=model.field.copy())


@dataclass(frozen=True)
class AlphaProfile:
    """alpha_i = 1 - ||u_{-i}||^2 = 1 - ||u||^2 + u_i^2."""

    alphas: np.ndarray
    norm_u_sq: float


def alpha_profile(u) -> AlphaProfile:
    u = np.asarray(u, dtype=np.float64)
    nsq = float(u @ u)
    return AlphaProfile(alphas=1.0 - nsq + u ** 2, norm_u_sq=nsq)


# ---------------------------------------------------------------------------
# moments and influence for spin laws


def spin_moments(X: np.ndarray, probs: np.ndarray):
    """(P[X_i=1], P[X_i=1 and X_j=1]) for a spin law given as a table."""
    up = (X > 0).astype(np.float64)
    P1 = probs @ up
    P2 = up.T @ (probs[:, None] * up)
    return P1, P2


def spin_influence(X: np.ndarray, probs: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Psi(i,j) = P[X_j=1 | X_i=1] - P[X_j=1 | X_i=-1], zero diagonal."""
    P1, P2 = spin_moments(X, probs)
    n = len(P1)
    psi = np.zeros((n, n))
    for i in range(n):
        if P1[i] < tol or P1[i] > 1.0 - tol:
            continue
        psi[i] = P2[i] / P1[i] - (P1 - P2[i]) / (1.0 - P1[i])
        psi[i, i] = 0.0
    return psi


def homogenized_moments(X: np.ndarray, probs: np.ndarray):
    """Membership moments over the 2n homogenized elements (i, then i-bar)."""
    up = (X > 0).astype(np.float64)
    B = np.hstack([up, 1.0 - up])
    P1 = probs @ B
    P2 = B.T @ (probs[:, None] * B)
    return P1, P2


def _hessian_from_moments(P1: np.ndarray, P2: np.ndarray, a: np.ndarray) -> np.ndarray:
    H = np.outer(a, a) * (P2 - np.outer(P1, P1))
    d = np.arange(len(P1))
    H[d, d] = a * (a - 1.0) * P1 - a ** 2 * P1 ** 2
    return 0.5 * (H + H.T)


# ---------------------------------------------------------------------------
# rank-1 certificate chain


def rank_one_flc_certify(u, h, shifts: int = 200, seed: int = 0,
                         eig_tol: float = 1e-8, ineq_tol: float = 1e-10) -> Certificate:
    """Certify the non-uniform log-concavity profile of mu_{u,h}.

    For each random field shift h', checks (a) the closed-form Hessian of
    log g at the all-ones point is negative semidefinite and (b) the exact
    influence row bound sum_{j != i} |Psi(i,j)| |u_j| <=
    alpha_i^{-1} |u_i| ||u_{-i}||^2. The shift reduction makes the all-ones
    point sufficient, so with ||u|| <= 1 the verdict is certified-exact.
    """
    u = np.asarray(u, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    n = len(u)
    nsq = float(u @ u)
    if nsq > 1.0 + 1e-12:
        raise NormTooLarge(f"||u||^2 = {nsq} exceeds 1")
    prof = alpha_profile(u)
    a2 = np.concatenate([prof.alphas, prof.alphas])
    rng = np.random.default_rng(seed)
    X = all_spin_states(n)
    base = 0.5 * (X @ u) ** 2

    deltas = np.vstack([np.zeros(n), rng.normal(0.0, 2.0, size=(shifts, n))])
    worst_eig = -math.inf
    worst_ineq = math.inf
    witness = None
    for d in deltas:
        E = base + X @ (h + d)
        probs = np.exp(E - logsumexp(E))
        probs /= probs.sum()
        P1, P2 = homogenized_moments(X, probs)
        H = _hessian_from_moments(P1, P2, a2)
        top = float(np.linalg.eigvalsh(H)[-1])
        psi = spin_influence(X, probs)
        lhs = np.abs(psi) @ np.abs(u)
        rhs = np.abs(u) * (nsq - u ** 2) / prof.alphas
        m = float(np.min(rhs - lhs))
        if top > worst_eig:
            worst_eig = top
        if m < worst_ineq:
            worst_ineq = m
        if top > eig_tol or m < -ineq_tol:
            witness = {"shift": (h + d).tolist(), "max_eigenvalue": top,
                       "influence_margin": m}
    margin = float(min(-worst_eig, worst_ineq))
    if witness is not None:
        return Certificate(property="FLC", alpha=prof.alphas, verdict=FALSIFIED,
                           margin=margin, witness=witness,
                           samples=len(deltas), seed=seed)
    return Certificate(property="FLC", alpha=prof.alphas, verdict=CERTIFIED,
                       margin=margin, witness=None,
                       samples=len(deltas), seed=seed)


def _coordinate_marginals(t: np.ndarray, n: int):
    """P[X_i = +1] for each i from a distribution table over 2^n states."""
    T = t.reshape((2,) * n)
    out = np.empty(n)
    for i in range(n):
        out[i] = T.sum(axis=tuple(j for j in range(n) if j != i))[1]
    return out


def _erase_one_kl(nu: np.ndarray, mu: np.ndarray, n: int) -> float:
    """KL(nu D || mu D) for D = D_{n->(n-1)} on the homogenized laws:
    equals (1/n) sum_i KL of the laws with coordinate i erased."""
    Tn = nu.reshape((2,) * n)
    Tm = mu.reshape((2,) * n)
    total = 0.0
    for i in range(n):
        a = Tn.sum(axis=i).ravel()
        b = Tm.sum(axis=i).ravel()
        total += kl_divergence(a, b)
    return total / n


@dataclass
class Rank1ContractionReport:
    factor: float
    worst_contraction_margin: float
    worst_data_processing_margin: float
    worst_coordinate_margin: float
    trials: int
    seed: int

    @property
    def ok(self) -> bool:
        return (self.worst_contraction_margin >= -1e-10
                and self.worst_data_processing_margin >= -1e-10
                and self.worst_coordinate_margin >= -1e-10)


def rank_one_contraction_check(u, h, trials: int = 200, seed: int = 0) -> Rank1ContractionReport:
    """Exhaustively test the rank-1 entropy contraction chain on random nu.

    For each trial: KL(nu P || mu P) <= KL(nu D || mu D)
                                     <= (1 - (1 - ||u||^2)/n) KL(nu || mu),
    plus the coordinate-marginal bound
    sum_i alpha_i KL(nu_i || mu_i) <= KL(nu || mu).
    """
    from .kernels import glauber_kernel

    u = np.asarray(u, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    n = len(u)
    if n < 2:
        raise ArityOutOfRange("contraction check needs n >= 2")
    nsq = float(u @ u)
    if nsq >= 1.0:
        raise NormTooLarge(f"||u||^2 = {nsq} must be < 1")
    model = make_rank_one(u, h)
    mu = model.spin_probs()
    P = glauber_kernel(model, force_dense=True).dense()
    prof = alpha_profile(u)
    factor = 1.0 - (1.0 - nsq) / n
    mu_coord = _coordinate_marginals(mu, n)

    rng = np.random.default_rng(seed)
    worst_c, worst_dp, worst_m = math.inf, math.inf, math.inf
    m_states = 1 << n
    for t in range(trials):
        conc = 1.0 if t % 2 == 0 else 0.2
        nu = rng.dirichlet(np.full(m_states, conc))
        kl = kl_divergence(nu, mu)
        klD = _erase_one_kl(nu, mu, n)
        klP = kl_divergence(nu @ P, mu)
        worst_c = min(worst_c, factor * kl - klD)
        worst_dp = min(worst_dp, klD - klP)
        nu_coord = _coordinate_marginals(nu, n)
        coord_sum = 0.0
        for i in range(n):
            coord_sum += prof.alphas[i] * kl_divergence(
                np.array([nu_coord[i], 1 - nu_coord[i]]),
                np.array([mu_coord[i], 1 - mu_coord[i]]))
        worst_m = min(worst_m, kl - coord_sum)
    return Rank1ContractionReport(factor=factor,
                                  worst_contraction_margin=float(worst_c),
                                  worst_data_processing_margin=float(worst_dp),
                                  worst_coordinate_margin=float(worst_m),
                                  trials=trials, seed=seed)


# ---------------------------------------------------------------------------
# exchange property and warm starts


def exchange_log_ratio(model: IsingModel, sigma, tau, i: int) -> float:
    """log of mu(sigma) mu(tau) / (mu(sigma^i) mu(tau^i)), normalizer-free.

    Computed from Hamiltonian differences: flipping coordinate i of x changes
    the log weight by -2 x_i (sum_{j != i} J_ij x_j + h_i).
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    J, h = model.interaction, model.field
    gi_s = float(J[i] @ sigma - J[i, i] * sigma[i])
    gi_t = float(J[i] @ tau - J[i, i] * tau[i])
    return 2.0 * sigma[i] * (gi_s + h[i]) + 2.0 * tau[i] * (gi_t + h[i])


@dataclass
class ExchangeReport:
    max_log_ratio: float
    log_bound: float
    margin: float
    witness: dict | None
    pairs_checked: int

    @property
    def ok(self) -> bool:
        return self.margin >= -1e-10


def exchange_check(model: IsingModel, pairs="all", seed: int = 0) -> ExchangeReport:
    """Verify the exchange bound ratio <= exp(4 sqrt(n) ||J||_op) in log space.

    With pairs="all" the maximum over every (sigma, tau, i) with
    sigma_i != tau_i is computed exactly (n <= 16); an integer asks for that
    many random triples instead.
    """
    n = model.n
    log_bound = 4.0 * math.sqrt(n) * model.op_norm
    J, h = model.interaction, model.field
    if pairs == "all":
        if n > 16:
            raise StateSpaceTooLarge("exhaustive exchange sweep needs n <= 16")
        X = all_spin_states(n).astype(np.float64)
        G = X @ J - X * np.diag(J)[None, :]
        worst = -math.inf
        witness = None
        count = 0
        for i in range(n):
            plus = X[:, i] > 0
            # sigma_i = +1, tau_i = -1: log ratio = 2 (G[s,i] - G[t,i]) + h-cancel
            hi = np.max(G[plus, i])
            lo = np.min(G[~plus, i])
            val = 2.0 * (hi - lo)
            count += int(plus.sum()) * int((~plus).sum())
            if val > worst:
                s = int(np.nonzero(plus)[0][np.argmax(G[plus, i])])
                t = int(np.nonzero(~plus)[0][np.argmin(G[~plus, i])])
                worst, witness = val, {"i": i, "sigma_index": s, "tau_index": t}
        return ExchangeReport(max_log_ratio=float(worst), log_bound=log_bound,
                              margin=float(log_bound - worst), witness=witness,
                              pairs_checked=count)
    rng = np.random.default_rng(seed)
    worst = -math.inf
    witness = None
    for _ in range(int(pairs)):
        sigma = rng.choice([-1, 1], size=n)
        tau = rng.choice([-1, 1], size=n)
        i = int(rng.integers(n))
        tau[i] = -sigma[i]
        val = exchange_log_ratio(model, sigma, tau, i)
        if val > worst:
            worst = val
            witness = {"i": i, "sigma": sigma.tolist(), "tau": tau.tolist()}
    return ExchangeReport(max_log_ratio=float(worst), log_bound=log_bound,
                          margin=float(log_bound - worst), witness=witness,
                          pairs_checked=int(pairs))


def warm_start_probe(model: IsingModel, start, steps: int) -> np.ndarray:
    """Exact sup-density ratios max_x (delta_start P^t)(x) / mu(x), t = 0..steps."""
    from .kernels import glauber_kernel

    kern = glauber_kernel(model)
    mu = kern.stationary
    states = kern.row_states
    start = tuple(int(s) for s in start)
    dist = np.zeros(len(states))
    dist[states.index(start)] = 1.0
    out = np.empty(steps + 1)
    for t in range(steps + 1):
        out[t] = float(np.max(dist / mu))
        if t < steps:
            dist = kern.step(dist)
    return out


# ---------------------------------------------------------------------------
# file format


def ising_to_file(model: IsingModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_json(), fh)


def ising_from_json(obj: dict) -> IsingModel:
    h = np.asarray(obj["h"], dtype=np.float64)
    J = obj["J"]
    if isinstance(J, dict):
        return make_rank_one(np.asarray(J["u"], dtype=np.float64), h)
    return make_ising(np.asarray(J, dtype=np.float64), h)


def ising_from_file(path) -> IsingModel:
    with open(path) as fh:
        return ising_from_json(json.load(fh))
