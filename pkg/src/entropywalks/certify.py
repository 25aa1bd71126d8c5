"""Certification of entropic independence, fractional log-concavity, and
spectral-independence style matrix bounds.

Verdicts are three-valued. "certified-exact" is reserved for checks that are
exact on enumerable instances (the dual sweep over an explicit marginal mesh,
finite matrix inequalities) or families with a structural argument;
"evidence-sampled" covers finite sampling of an infinite quantifier; any
reproducible violation yields "falsified" with a witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

from .divergence import kl_divergence
from .errors import (
    ArityOutOfRange,
    ContractionNotCertified,
    DimensionMismatch,
    InfeasibleMarginal,
    NegativeWeight,
    NoConvergence,
    NumericalBreakdown,
    StateSpaceTooLarge,
)
from .subsets import (
    SubsetDensity,
    condition_on,
    external_field,
    log_gen_poly,
    marginal_vector,
    validate_alphas,
    validate_marginal,
)

CERTIFIED = "certified-exact"
SAMPLED = "evidence-sampled"
FALSIFIED = "falsified"


@dataclass
class Certificate:
    property: str
    alpha: object
    verdict: str
    margin: float
    witness: dict | None
    samples: int
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return self.verdict != FALSIFIED

    def to_json(self) -> dict:
        alpha = self.alpha
        if isinstance(alpha, np.ndarray):
            alpha = alpha.tolist()
        return {
            "property": self.property,
            "alpha": alpha,
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": self.witness,
            "samples": self.samples,
            "seed": self.seed,
        }


def _merge_worst(a: Certificate, b: Certificate) -> Certificate:
    keep = a if a.margin <= b.margin else b
    verdict = FALSIFIED if (a.verdict == FALSIFIED or b.verdict == FALSIFIED) else (
        SAMPLED if SAMPLED in (a.verdict, b.verdict) else CERTIFIED)
    return Certificate(property=keep.property, alpha=keep.alpha, verdict=verdict,
                       margin=keep.margin, witness=keep.witness,
                       samples=a.samples + b.samples, seed=a.seed)


# ---------------------------------------------------------------------------
# minimum relative entropy with a prescribed element marginal


@dataclass
class DualSolution:
    """Solution of inf{ KL(nu||mu) : nu D_{k->1} = q } via the convex dual.

    value = -log inf_{z>0} g_mu(z) / prod z_i^{k q_i}; z_star attains the
    inner infimum (coordinates with q_i = 0 sit at the z -> 0 boundary and
    are reported as 0); nu_star is the primal optimum over supp(mu).
    """

    value: float
    z_star: np.ndarray
    nu_star: np.ndarray
    grad_norm: float
    iterations: int


def min_entropy_dual(mu: SubsetDensity, q, tol: float = 1e-10,
                     max_iter: int = 200) -> DualSolution:
    q = validate_marginal(q, mu.n)
    covered = mu.indicator.sum(axis=0) > 0
    if np.any((q > 0) & ~covered):
        bad = int(np.nonzero((q > 0) & ~covered)[0][0])
        raise InfeasibleMarginal(f"element {bad} has positive marginal but no support set")
    active = q > 0.0
    keep = mu.indicator[:, ~active].sum(axis=1) == 0
    if not np.any(keep):
        raise InfeasibleMarginal("the zero-marginal elements exclude every support set")
    B = mu.indicator[keep][:, active]
    logw = np.log(mu.probs[keep])  # original masses: dropped sets vanish in the limit
    qa = q[active]
    k = mu.k
    na = B.shape[1]

    y = np.zeros(na)

    def value_grad(yv):
        expo = logw + B @ yv
        lse = logsumexp(expo)
        pi = np.exp(expo - lse)
        return lse - k * float(qa @ yv), B.T @ pi - k * qa, pi

    F, grad, pi = value_grad(y)
    it = 0
    while np.max(np.abs(grad)) > tol:
        if it >= max_iter:
            if np.max(np.abs(grad)) > 1e-6:
                raise NoConvergence(
                    f"dual Newton stalled at gradient norm {np.max(np.abs(grad)):.2e} "
                    "(marginal may sit outside the polytope)")
            break  # converged to machine precision, just shy of tol
        H = B.T @ (pi[:, None] * B) - np.outer(B.T @ pi, B.T @ pi)
        ridge = 1e-12 * (1.0 + np.trace(H) / na)
        step = np.linalg.solve(H + ridge * np.eye(na), -grad)
        t = 1.0
        improved = False
        while t >= 1e-16:
            F2, grad2, pi2 = value_grad(y + t * step)
            if F2 < F:
                improved = True
                break
            t *= 0.5
        if not improved:
            if np.max(np.abs(grad)) > 1e-6:
                raise NoConvergence(
                    f"dual Newton cannot descend at gradient norm "
                    f"{np.max(np.abs(grad)):.2e}")
            break  # flat to machine precision
        y, F, grad, pi = y + t * step, F2, grad2, pi2
        it += 1

    y = y - np.max(y)  # gauge: F is invariant under y -> y + c
    z = np.zeros(mu.n)
    z[active] = np.exp(y)
    nu = np.zeros(mu.size)
    nu[keep] = pi
    return DualSolution(value=float(-F), z_star=z, nu_star=nu,
                        grad_norm=float(np.max(np.abs(grad))), iterations=it)


# ---------------------------------------------------------------------------
# tangent inequality and entropic independence


def _log_uniform_points(rng, n, num, lo=-3.0, hi=3.0):
    return 10.0 ** rng.uniform(lo, hi, size=(num, n))


def _structured_points(mu: SubsetDensity, cap: int = 64):
    pts = [np.ones(mu.n)]
    for S in mu.sets[:cap]:
        for t in (0.01, 100.0):
            z = np.ones(mu.n)
            z[list(S)] = t
            pts.append(z)
    return np.array(pts)


def tangent_check(mu: SubsetDensity, alpha: float, z_points=None,
                  num_points: int = 1000, seed: int = 0,
                  falsify_tol: float = 1e-9) -> Certificate:
    """Check g_mu(z^alpha)^{1/(k alpha)} <= sum_i p_i z_i on a point set.

    Points default to log-uniform draws on [1e-3, 1e3]^n plus structured
    spikes along support sets. The inequality is tangent at z = 1, so the
    margin there is 0 up to roundoff.
    """
    if mu.k == 0:
        raise ArityOutOfRange("tangent check needs arity k >= 1")
    a = float(validate_alphas(alpha, 1)[0])
    rng = np.random.default_rng(seed)
    if z_points is None:
        z_points = np.vstack([_log_uniform_points(rng, mu.n, num_points),
                              _structured_points(mu)])
    else:
        z_points = np.atleast_2d(np.asarray(z_points, dtype=np.float64))
        if np.any(z_points <= 0.0):
            raise NegativeWeight("tangent points must be strictly positive")
    p = marginal_vector(mu)
    avec = np.full(mu.n, a)
    logg = np.atleast_1d(log_gen_poly(mu, np.log(z_points), avec))
    lhs = np.exp(logg / (mu.k * a))
    rhs = z_points @ p
    slack = rhs - lhs
    j = int(np.argmin(slack))
    margin = float(slack[j])
    verdict = FALSIFIED if margin < -falsify_tol else SAMPLED
    witness = {"z": z_points[j].tolist(), "slack": margin} if verdict == FALSIFIED else None
    return Certificate(property="TangentInequality", alpha=a, verdict=verdict,
                       margin=margin, witness=witness,
                       samples=len(z_points), seed=seed)


def entropic_independence_certify(mu: SubsetDensity, alpha: float,
                                  mode: str = "exact-dual", mesh: int = 256,
                                  seed: int = 0, num_tangent: int = 1000,
                                  all_links: bool = False,
                                  falsify_tol: float = 1e-9) -> Certificate:
    """Certify KL(nu D_{k->1} || mu D_{k->1}) <= KL(nu || mu) / (alpha k).

    exact-dual mode sweeps a marginal mesh (all vertex marginals plus `mesh`
    Dirichlet-mixture marginals), checking the dual value against
    alpha k KL(q || p) for each q, and also runs the tangent test; sampled
    mode runs the tangent test alone.
    """
    a = float(validate_alphas(alpha, 1)[0])
    cert = tangent_check(mu, a, num_points=num_tangent, seed=seed,
                         falsify_tol=falsify_tol)
    cert.property = "EntropicIndependence"
    if mode == "sampled":
        return cert

    rng = np.random.default_rng(seed + 1)
    p = marginal_vector(mu)
    k = mu.k
    vertex_q = mu.indicator / k
    mix = rng.dirichlet(np.ones(mu.size), size=mesh)
    mesh_q = (mix @ mu.indicator) / k
    worst = math.inf
    worst_q = None
    count = 0
    for q in np.vstack([vertex_q, mesh_q]):
        q = np.clip(q, 0.0, None)
        q[q < 1e-15] = 0.0
        q = q / q.sum()
        sol = min_entropy_dual(mu, q)
        need = a * k * kl_divergence(q, p)
        m = sol.value - need
        count += 1
        if m < worst:
            worst, worst_q = m, q
    margin = min(cert.margin, worst)
    if worst < -falsify_tol:
        cert = Certificate(property="EntropicIndependence", alpha=a,
                           verdict=FALSIFIED, margin=float(worst),
                           witness={"q": worst_q.tolist(), "slack": float(worst)},
                           samples=cert.samples + count, seed=seed)
    elif cert.verdict == FALSIFIED:
        cert.samples += count
    else:
        cert = Certificate(property="EntropicIndependence", alpha=a,
                           verdict=CERTIFIED, margin=float(margin), witness=None,
                           samples=cert.samples + count, seed=seed)

    if all_links and cert.verdict != FALSIFIED:
        seen = set()
        for S in mu.sets:
            for size in range(1, k):
                for T in combinations(S, size):
                    if T in seen:
                        continue
                    seen.add(T)
                    link = condition_on(mu, T)
                    if link.k == 0 or link.size == 1:
                        continue
                    sub = entropic_independence_certify(
                        link, a, mode=mode, mesh=max(mesh // 4, 16),
                        seed=seed + 7, num_tangent=max(num_tangent // 4, 50),
                        all_links=False, falsify_tol=falsify_tol)
                    cert = _merge_worst(cert, sub)
                    if cert.verdict == FALSIFIED:
                        return cert
    return cert


# ---------------------------------------------------------------------------
# fractional log-concavity via closed-form Hessians


def hessian_at_ones(mu: SubsetDensity, alphavec) -> np.ndarray:
    """Hessian of z -> log g_mu(z^alpha) at the all-ones point, closed form.

    H_ii = a_i (a_i - 1) P[i] - a_i^2 P[i]^2,
    H_ij = a_i a_j (P[i and j] - P[i] P[j])   for i != j,
    where P[.] are membership probabilities under mu. Matches central finite
    differences of log g(z^alpha) at 1.
    """
    a = validate_alphas(alphavec, mu.n)
    B = mu.indicator
    w = mu.probs
    P1 = w @ B
    P2 = B.T @ (w[:, None] * B)
    H = np.outer(a, a) * (P2 - np.outer(P1, P1))
    d = np.arange(mu.n)
    H[d, d] = a * (a - 1.0) * P1 - a ** 2 * P1 ** 2
    return 0.5 * (H + H.T)


def hessian_log_gen(mu: SubsetDensity, alphavec, z) -> np.ndarray:
    """Hessian of log g(z^alpha) at a general z > 0, up to the positive
    diagonal congruence diag(1/z) H diag(1/z) which preserves definiteness.

    Uses the external-field identity: the Hessian at z equals the Hessian at
    the all-ones point of (z^alpha) * mu.
    """
    a = validate_alphas(alphavec, mu.n)
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0.0):
        raise NegativeWeight("Hessian points must be strictly positive")
    shifted = external_field(mu, z ** a)
    if not np.isfinite(shifted.normalizer) or shifted.normalizer <= 0.0:
        raise NumericalBreakdown("external-field reweighting overflowed")
    return hessian_at_ones(shifted, a)


def flc_check(mu: SubsetDensity, alphavec, points=None, num_points: int = 64,
              field_shifts: int = 0, seed: int = 0, structural: bool = False,
              eig_tol: float = 1e-8) -> Certificate:
    """Test concavity of log g_mu(z^alpha) through closed-form Hessians.

    Evaluates the Hessian at 1, at sampled log-uniform points, and (for
    homogenized spin densities, when field_shifts > 0) at random external
    field shifts exp(+/- delta). Falsified when any Hessian has an eigenvalue
    above eig_tol. certified-exact is only granted with structural=True,
    i.e. when the caller holds a structural argument for the family.
    """
    a = validate_alphas(alphavec, mu.n)
    rng = np.random.default_rng(seed)
    pts = [np.ones(mu.n)]
    if points is not None:
        pts.extend(np.atleast_2d(np.asarray(points, dtype=np.float64)))
    else:
        pts.extend(_log_uniform_points(rng, mu.n, num_points, -2.0, 2.0))
    if field_shifts > 0:
        if mu.n % 2 != 0:
            raise DimensionMismatch("field shifts need a homogenized (2m-ground) density")
        m = mu.n // 2
        for _ in range(field_shifts):
            delta = rng.normal(0.0, 2.0, size=m)
            lam = np.exp(np.concatenate([delta, -delta]))
            pts.append(lam ** (1.0 / a))  # z with z^alpha = lam
    worst_eig = -math.inf
    worst_z = None
    for z in pts:
        H = hessian_log_gen(mu, a, z)
        if not np.all(np.isfinite(H)):
            raise NumericalBreakdown("non-finite Hessian entries")
        top = float(np.linalg.eigvalsh(H)[-1])
        if top > worst_eig:
            worst_eig, worst_z = top, z
    margin = -worst_eig
    if worst_eig > eig_tol:
        return Certificate(property="FLC", alpha=a, verdict=FALSIFIED,
                           margin=float(margin),
                           witness={"z": np.asarray(worst_z).tolist(),
                                    "max_eigenvalue": worst_eig},
                           samples=len(pts), seed=seed)
    verdict = CERTIFIED if structural else SAMPLED
    return Certificate(property="FLC", alpha=a, verdict=verdict,
                       margin=float(margin), witness=None,
                       samples=len(pts), seed=seed)


def root_concavity_probe(mu: SubsetDensity, alpha: float, segments: int = 1000,
                         seed: int = 0) -> float:
    """Worst midpoint-concavity margin of f = g(z^alpha)^{1/(k alpha)} over
    random segments; nonnegative (within roundoff) iff f looks concave."""
    a = float(validate_alphas(alpha, 1)[0])
    rng = np.random.default_rng(seed)
    avec = np.full(mu.n, a)
    X = _log_uniform_points(rng, mu.n, segments, -1.5, 1.5)
    Y = _log_uniform_points(rng, mu.n, segments, -1.5, 1.5)
    M = 0.5 * (X + Y)

    def f(zs):
        return np.exp(np.atleast_1d(log_gen_poly(mu, np.log(zs), avec)) / (mu.k * a))

    fm, fx, fy = f(M), f(X), f(Y)
    scale = np.maximum(np.maximum(fx, fy), 1.0)
    return float(np.min((fm - 0.5 * (fx + fy)) / scale))


# ---------------------------------------------------------------------------
# influence, correlation, and Dobrushin matrices


@dataclass
class InfluenceBundle:
    psi: np.ndarray
    corr: np.ndarray
    eigen_max: float
    degenerate: list = field(default_factory=list)


def influence_bundle(mu: SubsetDensity, tol: float = 1e-14) -> InfluenceBundle:
    """Signed pairwise influence Psi(i,j) = P[j|i] - P[j|not i] and the
    correlation matrix (1 - P[i] on the diagonal, P[j|i] - P[j] off it).

    Elements with P[i] in {0, 1} cannot be conditioned both ways; their rows
    are zeroed and flagged.
    """
    B = mu.indicator
    w = mu.probs
    P1 = w @ B
    P2 = B.T @ (w[:, None] * B)
    n = mu.n
    psi = np.zeros((n, n))
    corr = np.zeros((n, n))
    degenerate = []
    for i in range(n):
        if P1[i] < tol or P1[i] > 1.0 - tol:
            degenerate.append(i)
            corr[i, i] = 1.0 - P1[i]
            continue
        cond_in = P2[i] / P1[i]
        cond_out = (P1 - P2[i]) / (1.0 - P1[i])
        psi[i] = cond_in - cond_out
        psi[i, i] = 0.0
        corr[i] = cond_in - P1
        corr[i, i] = 1.0 - P1[i]
    eig = np.linalg.eigvals(corr)
    return InfluenceBundle(psi=psi, corr=corr,
                           eigen_max=float(np.max(eig.real)),
                           degenerate=degenerate)


def dobrushin_matrix(spin, cap: int = 14) -> np.ndarray:
    """Exhaustive Dobrushin matrix of a spin system on {-1,+1}^n.

    R[i, j] = max over boundary conditions of the TV distance between the
    conditional laws of X_j when X_i is flipped. Accepts an IsingModel or a
    (states, probs) pair in standard state order.
    """
    from .ising import IsingModel

    if isinstance(spin, IsingModel):
        states, probs = spin.spin_states(), spin.spin_probs()
        n = spin.n
    else:
        states, probs = spin
        n = states.shape[1]
    if n > cap:
        raise StateSpaceTooLarge(f"Dobrushin matrix needs n <= {cap}")
    T = probs.reshape((2,) * n)
    R = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            A = np.moveaxis(T, (i, j), (0, 1)).reshape(2, 2, -1)
            tot = A.sum(axis=1)  # (2, rest): mass of (omega, sigma)
            ok = (tot[0] > 0) & (tot[1] > 0)
            if not np.any(ok):
                continue
            c0 = A[0][:, ok] / tot[0][ok]
            c1 = A[1][:, ok] / tot[1][ok]
            R[i, j] = float(np.max(0.5 * np.abs(c0 - c1).sum(axis=0)))
    return R


def weighted_contraction_check(R: np.ndarray, w: np.ndarray,
                               target_eps: float = 0.0) -> Certificate:
    """Largest eps with sum_j R_ij w_j <= (1 - eps) w_i for all rows.

    Certified iff eps >= target_eps; a row sum exceeding w_i falsifies with
    that row as witness. The check is a finite exact computation.
    """
    R = np.asarray(R, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if R.shape != (len(w), len(w)):
        raise DimensionMismatch(f"R has shape {R.shape} for weight length {len(w)}")
    if np.any(w <= 0.0):
        raise NegativeWeight("weights must be strictly positive")
    if np.any(R < -1e-15):
        raise NegativeWeight("Dobrushin matrix must be nonnegative")
    rows = (R @ w) / w
    eps = float(1.0 - np.max(rows))
    i = int(np.argmax(rows))
    margin = eps - target_eps
    if margin >= 0.0:
        return Certificate(property="DobrushinContraction", alpha=None,
                           verdict=CERTIFIED, margin=margin,
                           witness=None, samples=len(w))
    return Certificate(property="DobrushinContraction", alpha=None,
                       verdict=FALSIFIED, margin=margin,
                       witness={"row": i, "row_sum_over_w": float(rows[i]),
                                "epsilon": eps},
                       samples=len(w))


@dataclass
class TransferReport:
    lhs: float
    rhs: float
    verdict: bool
    epsilon: float


def marginal_transfer_check(mu: np.ndarray, nu: np.ndarray, kernel_mu,
                            kernel_nu, w: np.ndarray, eps: float,
                            tol: float = 1e-10) -> TransferReport:
    """Weighted marginal-difference transfer bound.

    lhs = sum_i w_i |P_mu[X_i = 1] - P_nu[X_i = 1]|
    rhs = (n / eps) E_{sigma ~ nu} sum_i w_i |P_mu(sigma -> sigma^i)
                                              - P_nu(sigma -> sigma^i)|
    Requires mu to be (1 - eps/n)-contractive for the weighted Hamming
    metric, which the caller certifies via weighted_contraction_check.
    """
    from .kernels import flip_index

    if eps <= 0.0:
        raise ContractionNotCertified("need a certified contraction amount eps > 0")
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n = len(w)
    m = 1 << n
    if mu.shape != (m,) or nu.shape != (m,):
        raise DimensionMismatch("measures must live on the full 2^n cube")
    from .subsets import all_spin_states

    X = all_spin_states(n)
    up = (X > 0).astype(np.float64)
    lhs = float(w @ np.abs(mu @ up - nu @ up))
    Pm = kernel_mu.dense()
    Pn = kernel_nu.dense()
    idx = np.arange(m)
    inner = np.zeros(m)
    for i in range(n):
        fl = flip_index(idx, i, n)
        inner += w[i] * np.abs(Pm[idx, fl] - Pn[idx, fl])
    rhs = float((n / eps) * (nu @ inner))
    return TransferReport(lhs=lhs, rhs=rhs, verdict=lhs <= rhs + tol, epsilon=eps)
