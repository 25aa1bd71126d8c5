"""entropywalks: down-up walks, Glauber dynamics, and numerical certificates
for entropic independence, fractional log-concavity, and modified
log-Sobolev inequalities on enumerable instances."""

from . import errors
from .certify import (
    Certificate,
    DualSolution,
    InfluenceBundle,
    dobrushin_matrix,
    entropic_independence_certify,
    flc_check,
    hessian_at_ones,
    hessian_log_gen,
    influence_bundle,
    marginal_transfer_check,
    min_entropy_dual,
    root_concavity_probe,
    tangent_check,
    weighted_contraction_check,
)
from .divergence import (
    ContractionReport,
    KappaBounds,
    MlsiEstimate,
    TelescopeProfile,
    contraction_coefficient,
    divergences,
    entropy_functional,
    kappa_closed_form,
    kl_divergence,
    mixing_time,
    mixing_time_worst,
    mlsi_estimate,
    mlsi_mixing_bound,
    mlsi_ratio,
    telescope_profile,
    tv_distance,
)
from .ising import (
    AlphaProfile,
    IsingModel,
    alpha_profile,
    curie_weiss,
    exchange_check,
    exchange_log_ratio,
    ising_from_file,
    ising_to_file,
    make_ising,
    make_rank_one,
    psd_shift,
    rank_one_contraction_check,
    rank_one_flc_certify,
    warm_start_probe,
)
from .kernels import (
    SpectrumReport,
    TransitionKernel,
    dirichlet_form,
    down_operator,
    down_up_kernel,
    glauber_conductance_form,
    glauber_kernel,
    spectral_gap,
    spectrum_report,
    up_operator,
)
from .sampling import (
    Trajectory,
    glauber_chain_sample,
    glauber_throughput,
    occupancy,
    simulate_walk,
    subset_chain_sample,
)
from .subsets import (
    SubsetDensity,
    condition_on,
    density_from_file,
    density_to_file,
    down_project,
    external_field,
    gen_poly_eval,
    homogenize,
    make_density,
    marginal_vector,
    r_fold,
    uniform_density,
)

__version__ = "0.1.0"
