"""Bayesian community detection for networks with node covariates."""

from .core import (
    BlockCounts,
    CovariateSet,
    DataError,
    Hyperparams,
    Network,
    block_counts,
    canonicalize,
    cluster_sizes,
    node_counts,
    num_clusters,
)
from .metrics import bic_approx, bic_exact, confusion, nmi
from .prior import (
    ClusterCenters,
    ClusterStats,
    crp_expected_clusters,
    crp_log_pmf,
    log_cohesion,
    log_g,
    prior_gibbs_aux_step,
    prior_gibbs_collapsed_step,
    sample_prior,
)
from .sampler import (
    ChainTrace,
    FitResult,
    SamplerState,
    crp_init,
    exact_posterior,
    log_joint,
    resample_centers,
    resample_edge_probs,
    run_chain,
    update_node_label,
)
from .simulate import Dataset, make_dataset, replicate_seed, sample_sbm

__version__ = "0.1.0"

__all__ = [
    "BlockCounts",
    "ChainTrace",
    "ClusterCenters",
    "ClusterStats",
    "CovariateSet",
    "DataError",
    "Dataset",
    "FitResult",
    "Hyperparams",
    "Network",
    "SamplerState",
    "bic_approx",
    "bic_exact",
    "block_counts",
    "canonicalize",
    "cluster_sizes",
    "confusion",
    "crp_expected_clusters",
    "crp_init",
    "crp_log_pmf",
    "exact_posterior",
    "log_cohesion",
    "log_g",
    "log_joint",
    "make_dataset",
    "nmi",
    "node_counts",
    "num_clusters",
    "prior_gibbs_aux_step",
    "prior_gibbs_collapsed_step",
    "replicate_seed",
    "resample_centers",
    "resample_edge_probs",
    "run_chain",
    "sample_prior",
    "sample_sbm",
    "update_node_label",
]
