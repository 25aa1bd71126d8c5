"""Divergences, entropy functionals, contraction coefficients, and mixing times.

The modified log-Sobolev constant is taken with the Bobkov-Tetali
normalization

    rho_0(P) = inf { E_P(f, log f) / Ent_mu[f] :  f >= 0, Ent_mu[f] != 0 },

under which the mixing bound t_mix <= ceil(rho_0^{-1} (log log(1/mu_min) +
log(1/(2 eps^2)))) holds verbatim. One-step relative-entropy contraction
with amount a (KL(nu P || mu P) <= (1 - a) KL(nu || mu) for all nu) yields
rho_0 >= a: for nu = f mu,

    a Ent[f] <= KL(nu||mu) - KL(nu P||mu) <= E_P(f, log f).

mlsi_estimate reports the honest bracket [a_hat, best ratio found] and
cross-feeds witnesses between the two searches, which forces the bracket to
close: the pointwise inequality above applied to the minimizing f shows the
fed-back measure f mu has contraction ratio >= 1 - upper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .errors import (
    DegenerateBase,
    DimensionMismatch,
    EllTooLarge,
    IterationCapExceeded,
    NegativeFunction,
    NonpositiveRho,
    NonReversibleKernel,
    NotErgodic,
    StateSpaceTooLarge,
    SupportMismatch,
)
from .kernels import TransitionKernel
from .subsets import SubsetDensity, down_project, validate_alphas


# ---------------------------------------------------------------------------
# basic divergences


def kl_divergence(nu: np.ndarray, mu: np.ndarray) -> float:
    """KL(nu || mu) in nats; +inf when supp(nu) is not inside supp(mu)."""
    nu = np.asarray(nu, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if nu.shape != mu.shape:
        raise DimensionMismatch(f"shapes {nu.shape} vs {mu.shape}")
    on = nu > 0.0
    if np.any(mu[on] <= 0.0):
        return math.inf
    return float(np.sum(nu[on] * (np.log(nu[on]) - np.log(mu[on]))))


def tv_distance(nu: np.ndarray, mu: np.ndarray) -> float:
    nu = np.asarray(nu, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if nu.shape != mu.shape:
        raise DimensionMismatch(f"shapes {nu.shape} vs {mu.shape}")
    return float(0.5 * np.sum(np.abs(nu - mu)))


def divergences(nu: np.ndarray, mu: np.ndarray) -> tuple[float, float]:
    """(KL, TV) between two distributions on a shared state index."""
    return kl_divergence(nu, mu), tv_distance(nu, mu)


def entropy_functional(mu: np.ndarray, f: np.ndarray) -> float:
    """Ent_mu[f] = E_mu[f log f] - E_mu[f] log E_mu[f], with 0 log 0 = 0."""
    mu = np.asarray(mu, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    if mu.shape != f.shape:
        raise DimensionMismatch(f"shapes {mu.shape} vs {f.shape}")
    if np.any(f < 0.0):
        raise NegativeFunction("Ent takes f >= 0")
    on = (f > 0.0) & (mu > 0.0)
    mean = float(np.sum(mu * f))
    if mean <= 0.0:
        return 0.0
    return float(np.sum(mu[on] * f[on] * np.log(f[on])) - mean * math.log(mean))


# ---------------------------------------------------------------------------
# kappa of the multi-step contraction theorem


@dataclass(frozen=True)
class KappaBounds:
    """The two closed-form contraction amounts for the k<->ell walk.

    `general` is the Gamma-ratio bound valid for every alpha; `integer_form`
    is the binomial-ratio bound available when 1/alpha is an integer. They
    are different bounds and need not agree.
    """

    general: float
    integer_form: float | None


def kappa_closed_form(k: int, ell: int, alpha: float) -> KappaBounds:
    if not (0.0 < alpha <= 1.0):
        raise EllTooLarge(f"alpha must lie in (0, 1], got {alpha}")
    inv = 1.0 / alpha
    inv_int = round(inv)
    is_int = abs(inv - inv_int) < 1e-9
    ceil_inv = inv_int if is_int else math.ceil(inv)
    if not (0 <= ell <= k - ceil_inv):
        raise EllTooLarge(f"need ell <= k - ceil(1/alpha) = {k - ceil_inv}, got {ell}")
    prod = 1.0
    for i in range(ceil_inv):
        prod *= (k - ell - i)
    general = (k + 1.0 - ell - inv) ** (inv - ceil_inv) * prod / (k + 1.0) ** inv
    integer_form = None
    if is_int:
        integer_form = math.comb(k - ell, inv_int) / math.comb(k, inv_int)
    return KappaBounds(general=float(general), integer_form=integer_form)


# ---------------------------------------------------------------------------
# contraction coefficient search


@dataclass
class ContractionReport:
    coefficient: float
    kappa_bound: float | None
    witness: np.ndarray
    iterations: int
    seed: int
    trials: int

    def to_json(self) -> dict:
        return {
            "coefficient": self.coefficient,
            "kappa_bound": self.kappa_bound,
            "lower": None,
            "upper": None,
            "witness": self.witness.tolist(),
            "iterations": self.iterations,
            "seed": self.seed,
            "trials": self.trials,
        }


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _ratio_and_grad(nu, p, D, qD, logp):
    """KL(nu D || p D) / KL(nu || p) and its gradient on the simplex."""
    on = nu > 0.0
    b = float(np.sum(nu[on] * (np.log(nu[on]) - logp[on])))
    nd = nu @ D
    ond = nd > 0.0
    a = float(np.sum(nd[ond] * (np.log(nd[ond]) - np.log(qD[ond]))))
    if b <= 0.0:
        return 0.0, np.zeros_like(nu)
    term = np.zeros_like(qD)
    term[ond] = np.log(nd[ond]) - np.log(qD[ond]) + 1.0
    term[~ond] = -700.0
    gA = D @ term
    gB = np.where(on, np.log(np.maximum(nu, 1e-300)) - logp, -700.0) + 1.0
    r = a / b
    return r, (gA - r * gB) / b


def contraction_coefficient(mu, projector, trials: int = 512, seed: int = 0,
                            ascent_steps: int = 200, alpha: float | None = None,
                            extra_candidates=None, eps_filter: float = 1e-9) -> ContractionReport:
    """Measured sup over nu of KL(nu D || mu D) / KL(nu || mu).

    The search follows a fixed, seeded recipe: every vertex measure, `trials`
    Dirichlet(1) draws, then projected gradient ascent from the best starts.
    Measures with KL(nu||mu) below `eps_filter` are excluded (the defining
    inequality is vacuous there). Data processing keeps the true sup <= 1.
    """
    kappa = None
    if isinstance(mu, SubsetDensity):
        p = mu.probs
        if isinstance(projector, (int, np.integer)):
            from .kernels import _down_restricted

            ell = int(projector)
            D, _, _ = _down_restricted(mu, ell)
            if alpha is not None:
                try:
                    kb = kappa_closed_form(mu.k, ell, alpha)
                    kappa = kb.integer_form if kb.integer_form is not None else kb.general
                except EllTooLarge:
                    kappa = None
        else:
            D = projector.dense() if isinstance(projector, TransitionKernel) else np.asarray(projector)
    else:
        p = np.asarray(mu, dtype=np.float64)
        D = projector.dense() if isinstance(projector, TransitionKernel) else np.asarray(projector)
    if len(p) < 2:
        raise DegenerateBase("base measure has a single support point")
    if D.shape[0] != len(p):
        raise DimensionMismatch(f"projector rows {D.shape[0]} vs base size {len(p)}")
    if np.any(p <= 0.0):
        raise DegenerateBase("base measure must be positive on its index")

    rng = np.random.default_rng(seed)
    logp = np.log(p)
    qD = p @ D
    m = len(p)

    candidates = [np.eye(m)[i] for i in range(m)]
    candidates.extend(rng.dirichlet(np.ones(m), size=trials))
    if extra_candidates is not None:
        candidates.extend(extra_candidates)

    best_r, best_nu = -1.0, None
    scored = []
    for nu in candidates:
        nu = np.asarray(nu, dtype=np.float64)
        b = kl_divergence(nu, p)
        if not (b >= eps_filter) or not np.isfinite(b):
            continue
        r, _ = _ratio_and_grad(nu, p, D, qD, logp)
        scored.append((r, nu))
        if r > best_r:
            best_r, best_nu = r, nu
    scored.sort(key=lambda t: -t[0])

    iterations = 0
    for r0, nu0 in scored[:8]:
        nu = nu0.copy()
        r, g = _ratio_and_grad(nu, p, D, qD, logp)
        scale = np.max(np.abs(g))
        eta = 0.1 / scale if scale > 0 else 0.0
        steps_left = ascent_steps
        while steps_left > 0 and eta > 0:
            steps_left -= 1
            iterations += 1
            cand = project_simplex(nu + eta * g)
            rb = kl_divergence(cand, p)
            if rb >= eps_filter:
                rc, gc = _ratio_and_grad(cand, p, D, qD, logp)
            else:
                rc = -1.0
            if rc > r:
                nu, r, g = cand, rc, gc
                eta *= 1.3
            else:
                eta *= 0.5
                if eta < 1e-14:
                    break
        if r > best_r:
            best_r, best_nu = r, nu

    return ContractionReport(coefficient=float(best_r), kappa_bound=kappa,
                             witness=best_nu, iterations=iterations,
                             seed=seed, trials=trials)


# ---------------------------------------------------------------------------
# modified log-Sobolev bracket


@dataclass
class MlsiEstimate:
    upper: float
    lower: float
    witness_f: np.ndarray
    contraction_sup: float
    witness_nu: np.ndarray
    seed: int
    trials: int

    def to_json(self) -> dict:
        return {
            "coefficient": self.contraction_sup,
            "kappa_bound": None,
            "lower": self.lower,
            "upper": self.upper,
            "witness": self.witness_f.tolist(),
            "seed": self.seed,
            "trials": self.trials,
        }


def _mlsi_value_grad(g, P, mu, logmu):
    logZ = logsumexp(logmu + g)
    f = np.exp(g - logZ)
    w = mu * f
    a = g - P @ g
    N = float(w @ a)
    fg = float(w @ g)
    D = fg - logZ
    if D < 1e-14:
        # ratio degenerates at f == const; push back toward informative f
        return 1e6, np.zeros_like(g)
    dN = w * a - w * N + w - P.T @ w
    dD = w * g - w * fg
    r = N / D
    grad = (dN * D - N * dD) / (D * D)
    return r, grad


def mlsi_ratio(kernel: TransitionKernel, f: np.ndarray) -> float:
    """E_P(f, log f) / Ent_mu[f] for a positive f."""
    P = kernel.dense()
    mu = kernel.stationary
    f = np.asarray(f, dtype=np.float64)
    g = np.log(f)
    N = float(np.sum(mu * f * (g - P @ g)))
    D = entropy_functional(mu, f / np.sum(mu * f))
    return N / D


def mlsi_estimate(kernel: TransitionKernel, trials: int = 256, seed: int = 0,
                  n_starts: int = 8, max_states: int = 2048,
                  db_tol: float = 1e-8) -> MlsiEstimate:
    """Bracket rho_0(P) between a contraction-based lower bound and the best
    Dirichlet-to-entropy ratio found by multi-start minimization.

    upper: min over searched f of E_P(f, log f) / Ent[f], with witness.
    lower: 1 - s where s is the measured one-step KL contraction sup.
    The minimizing f is fed back into the contraction pool, which forces
    lower <= upper up to float error.
    """
    if not kernel.square or kernel.stationary is None:
        raise NonReversibleKernel("mlsi needs a square kernel with stationary density")
    m = kernel.shape[0]
    if m > max_states:
        raise StateSpaceTooLarge(f"{m} states exceed the mlsi cap {max_states}")
    if kernel.detailed_balance_residual() > db_tol:
        raise NonReversibleKernel("kernel is not reversible within tolerance")
    P = kernel.dense()
    mu = kernel.stationary
    logmu = np.log(mu)
    rng = np.random.default_rng(seed)

    # spectral directions of the symmetrized kernel give the perturbative f
    root = np.sqrt(mu)
    S = (root[:, None] * P) / root[None, :]
    S = 0.5 * (S + S.T)
    evals, evecs = np.linalg.eigh(S)
    order = np.argsort(evals)[::-1]
    perturb = []
    for j in order[1:min(m, 5)]:
        phi = evecs[:, j] / root
        phi -= np.sum(mu * phi)
        for eps in (1e-3, 0.1, 0.5):
            f = 1.0 + eps * phi / np.max(np.abs(phi))
            if np.all(f > 1e-12):
                perturb.append(mu * f / np.sum(mu * f))

    report = contraction_coefficient(mu, P, trials=trials, seed=seed,
                                     extra_candidates=perturb)
    sup = report.coefficient
    witness_nu = report.witness

    # MLSI minimization in g = log f coordinates
    starts = [np.log(np.maximum(witness_nu, 1e-12) / mu)]
    for j in order[1:min(m, 4)]:
        phi = evecs[:, j] / root
        starts.append(1e-2 * phi / np.max(np.abs(phi)))
    for _ in range(n_starts):
        starts.append(rng.normal(size=m))

    best_val, best_g = math.inf, None
    for g0 in starts:
        res = minimize(_mlsi_value_grad, g0, args=(P, mu, logmu), jac=True,
                       method="BFGS", options={"maxiter": 300, "gtol": 1e-12})
        for g in (g0, res.x):
            val, _ = _mlsi_value_grad(g, P, mu, logmu)
            if val < best_val:
                best_val, best_g = val, g
    upper = float(best_val)
    fstar = np.exp(best_g - logsumexp(logmu + best_g))

    # cross-feed: the upper witness bounds the contraction sup from below,
    # KL(nu||mu) - KL(nu P||mu) <= E_P(f, log f) with nu = f mu
    ent_f = entropy_functional(mu, fstar)
    if ent_f > 0.0:
        ent_pf = entropy_functional(mu, P @ fstar)
        r_fed = ent_pf / ent_f
        if r_fed > sup:
            sup = float(r_fed)
            witness_nu = mu * fstar
    lower = 1.0 - min(sup, 1.0)

    return MlsiEstimate(upper=upper, lower=float(lower), witness_f=fstar,
                        contraction_sup=float(sup), witness_nu=witness_nu,
                        seed=seed, trials=trials)


# ---------------------------------------------------------------------------
# mixing times


def _start_distribution(kernel: TransitionKernel, start) -> np.ndarray:
    m = kernel.shape[0]
    if isinstance(start, (int, np.integer)):
        d = np.zeros(m)
        d[int(start)] = 1.0
        return d
    if isinstance(start, tuple) or (isinstance(start, list) and start and
                                    not isinstance(start[0], float)):
        idx = kernel.row_states.index(tuple(start))
        d = np.zeros(m)
        d[idx] = 1.0
        return d
    d = np.asarray(start, dtype=np.float64)
    if d.shape != (m,):
        raise DimensionMismatch(f"start has shape {d.shape}, expected ({m},)")
    return d


def mixing_time(kernel: TransitionKernel, start, epsilon: float = 0.25,
                cap: int = 10_000_000, stall_window: int = 500) -> int:
    """Minimal t with TV(start P^t, mu) <= epsilon, by iterated application."""
    if not (0.0 < epsilon < 1.0):
        raise NotErgodic(f"epsilon must lie in (0, 1), got {epsilon}")
    if kernel.stationary is None:
        raise NotErgodic("kernel has no stationary density")
    mu = kernel.stationary
    dist = _start_distribution(kernel, start)
    best, since_best = math.inf, 0
    t = 0
    while True:
        tv = tv_distance(dist, mu)
        if tv <= epsilon:
            return t
        if tv < best - 1e-15:
            best, since_best = tv, 0
        else:
            since_best += 1
            if since_best >= stall_window:
                raise NotErgodic("TV distance stopped decreasing above epsilon")
        if t >= cap:
            raise IterationCapExceeded(f"no mixing within {cap} iterations")
        dist = kernel.step(dist)
        t += 1


def mixing_time_worst(kernel: TransitionKernel, epsilon: float = 0.25,
                      starts=None, cap: int = 10_000_000) -> int:
    """max over starts of mixing_time; `starts` defaults to every state."""
    m = kernel.shape[0]
    if starts is None:
        starts = range(m)
    return max(mixing_time(kernel, s, epsilon, cap) for s in starts)


def mlsi_mixing_bound(rho0: float, mu: np.ndarray, nu="worst",
                      epsilon: float = 0.25) -> int:
    """ceil( rho0^{-1} ( log log(sup nu/mu) + log(1/(2 eps^2)) ) ), floored at 0."""
    if rho0 <= 0.0:
        raise NonpositiveRho(f"rho0 must be positive, got {rho0}")
    mu = np.asarray(mu, dtype=np.float64)
    if np.any(mu <= 0.0):
        raise NonpositiveRho("mu must have full support on its index")
    if isinstance(nu, str) and nu == "worst":
        ratio_max = 1.0 / float(np.min(mu))
    else:
        nu = np.asarray(nu, dtype=np.float64)
        if nu.shape != mu.shape:
            raise DimensionMismatch(f"shapes {nu.shape} vs {mu.shape}")
        ratio_max = float(np.max(nu / mu))
    inner = math.log(ratio_max) if ratio_max > 0 else 0.0
    term = math.log(inner) if inner > 0 else -math.inf
    val = (term + math.log(1.0 / (2.0 * epsilon ** 2))) / rho0
    if val == -math.inf:
        return 0
    return max(0, math.ceil(val))


# ---------------------------------------------------------------------------
# telescoping entropy profile


@dataclass
class TelescopeProfile:
    """Level-by-level entropy gaps Delta_i and the chain coefficients beta_i.

    kl_levels[i] = KL(nu D_{k->i} || mu D_{k->i}); deltas[i] = kl_levels[i+1]
    - kl_levels[i]; partial sums through level ell recover the projected KL.
    chain_margins[i] = beta_i * (Delta_{i+1} + ... + Delta_{k-1}) - Delta_i
    where beta_i = 1 / (alpha (k - i) - 1) is defined.
    """

    deltas: np.ndarray
    betas: np.ndarray
    kl_levels: np.ndarray
    chain_margins: np.ndarray
    alpha: float | None


def _kl_between_densities(nu: SubsetDensity, mu: SubsetDensity) -> float:
    pos = {int(m): w for m, w in zip(mu.masks, mu.probs)}
    total = 0.0
    for m, w in zip(nu.masks, nu.probs):
        q = pos.get(int(m))
        if q is None or q <= 0.0:
            raise SupportMismatch("nu puts mass outside supp(mu)")
        total += w * math.log(w / q)
    return total


def telescope_profile(nu: SubsetDensity, mu: SubsetDensity,
                      alpha: float | None = None) -> TelescopeProfile:
    """Exact telescoping decomposition of KL(nu||mu) over projection levels."""
    if (nu.n, nu.k) != (mu.n, mu.k):
        raise DimensionMismatch("nu and mu must share ground size and arity")
    k = mu.k
    kls = np.zeros(k + 1)
    pn, pm = nu, mu
    kls[k] = _kl_between_densities(pn, pm)
    for lvl in range(k - 1, -1, -1):
        pn = down_project(pn, lvl)
        pm = down_project(pm, lvl)
        kls[lvl] = _kl_between_densities(pn, pm)
    deltas = np.diff(kls)
    betas = np.full(k, np.nan)
    margins = np.full(k, np.nan)
    if alpha is not None:
        a = float(validate_alphas(alpha, 1)[0])
        for i in range(k):
            denom = a * (k - i) - 1.0
            if denom > 1e-12:
                betas[i] = 1.0 / denom
                margins[i] = betas[i] * float(np.sum(deltas[i + 1:])) - deltas[i]
    return TelescopeProfile(deltas=deltas, betas=betas, kl_levels=kls,
                            chain_margins=margins, alpha=alpha)
