"""Curie-Weiss scaling: exact gaps and mixing times across sizes.

J = ((1 - delta)/n) 11^T keeps ||J||_op = 1 - delta fixed while n grows;
the spectral gap should scale like delta/n and the mixing time like
n log n / delta. Both are computed exactly here and reported as bounded
ratios plus fitted exponents.
"""

import entropywalks as ew
from entropywalks.runner import scale_study

rows, summary = scale_study([8, 10, 12], delta=0.5, seed=0, walk_runs=20_000)
hdr = ("n", "gap", "t_mix", "gap*n/delta", "tmix/(n ln n/delta)", "emp TV")
print(("{:>5} " * len(hdr)).format(*hdr))
for r in rows:
    print(f"{r['n']:>5} {r['gap']:>8.4f} {r['tmix_exact']:>6} "
          f"{r['gap_n_over_delta']:>10.3f} {r['tmix_over_nlogn']:>12.3f} "
          f"{r['tv_empirical']:>8.3f}")

print("\nfitted gap exponent (target -1):", round(summary["gap_exponent"], 3))
print("fitted t_mix exponent over n^b log n (target 1):",
      round(summary["tmix_exponent"], 3))

model = ew.curie_weiss(10, 0.5)
K = ew.glauber_kernel(model, force_dense=False)
rho0 = (1 - model.op_norm) / model.n
bound = ew.mlsi_mixing_bound(rho0, K.stationary, "worst", 0.25)
from entropywalks.runner import magnetization_representatives

t = max(ew.mixing_time(K, r, 0.25) for r in magnetization_representatives(10))
print(f"\nn=10 worst-start t_mix = {t}; MLSI mixing bound with "
      f"rho_0 = (1-||J||)/n: {bound} (must dominate)")
