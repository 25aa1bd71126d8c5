"""Entropic independence, its tangent reformulation, and the fold boundary.

The 2-fold of a uniform density is the canonical instance that is 1/2-
fractionally log-concave but fails every alpha = 1 notion: the tangent test
produces an explicit violating point, the dual sweep a violating marginal,
and the k<->(k-1) walk is not even irreducible.
"""

import numpy as np

import entropywalks as ew

uni = ew.uniform_density(4, 2)
fold = ew.r_fold(uni, 2)
print("base: uniform on C(4,2); fold: n =", fold.n, "k =", fold.k,
      "support", fold.size)

for alpha in (1.0, 0.5):
    tangent = ew.tangent_check(fold, alpha, seed=0)
    dual = ew.entropic_independence_certify(fold, alpha, mesh=128, seed=0)
    print(f"\nalpha = {alpha}: tangent -> {tangent.verdict} "
          f"(margin {tangent.margin:.4f}); dual sweep -> {dual.verdict} "
          f"(margin {dual.margin:.4f})")
    if tangent.witness:
        print("  violating z:", np.round(tangent.witness["z"], 3))

kb = ew.kappa_closed_form(4, 2, 0.5)
print("\ncontraction constants for the 4<->2 walk at alpha=1/2:")
print("  general form:", kb.general, "| binomial form:", kb.integer_form)

rep = ew.contraction_coefficient(fold, 2, trials=512, seed=1, alpha=0.5)
print("measured sup KL ratio:", round(rep.coefficient, 6),
      "<= 1 - kappa =", round(1 - rep.kappa_bound, 6))

K_identity = ew.down_up_kernel(fold, 3)
print("\nk<->(k-1) kernel equals the identity:",
      bool(np.array_equal(K_identity.dense(), np.eye(fold.size))))
gap = ew.spectrum_report(ew.down_up_kernel(fold, 2)).gap
print("k<->(k-2) kernel spectral gap:", round(gap, 4))

nu = ew.make_density(fold.n, fold.k, [(fold.sets[0], 1.0)])
tp = ew.telescope_profile(nu, fold, alpha=0.5)
print("\ntelescoping profile of a vertex measure:")
print("  level KLs:", np.round(tp.kl_levels, 4))
print("  deltas sum to KL(nu||mu):",
      np.isclose(tp.deltas.sum(), tp.kl_levels[-1]))
