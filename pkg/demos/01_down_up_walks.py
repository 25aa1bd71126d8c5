"""Down-up walks on subset densities: kernels, spectra, and sampling.

Builds a small density on 2-subsets, assembles the exact k<->1 down-up
kernel, inspects its spectrum, and checks a long seeded walk against the
stationary law.
"""

import numpy as np

import entropywalks as ew

mu = ew.make_density(4, 2, [((0, 1), 3.0), ((0, 2), 1.0), ((1, 2), 1.0),
                            ((1, 3), 2.0), ((2, 3), 1.0)])
print("support:", mu.sets)
print("probabilities:", np.round(mu.probs, 4))
print("element marginals p = mu D_{k->1}:", np.round(ew.marginal_vector(mu), 4))

K = ew.down_up_kernel(mu, 1)
print("\nk<->1 down-up kernel (rows sum to 1):")
print(np.round(K.dense(), 3))
print("stationarity residual:", K.stationarity_residual())
print("detailed balance residual:", K.detailed_balance_residual())

sr = ew.spectrum_report(K)
print("eigenvalues:", np.round(sr.eigenvalues, 4))
print("spectral gap:", round(sr.gap, 4), "| min eigenvalue >= 0:",
      sr.min_eigenvalue >= -1e-9)

traj = ew.simulate_walk(mu, ell=1, start=(0, 1), steps=200_000, seed=7)
occ = ew.occupancy(np.array(traj.states[1:]), mu)
print("\n200k-step occupancy:", np.round(occ, 4))
print("TV(occupancy, stationary):", round(ew.tv_distance(occ, mu.probs), 5))

print("\nexact mixing time from the worst start:",
      ew.mixing_time_worst(K, 0.25))
