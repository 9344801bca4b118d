"""Partition-comparison and model-quality measures.

NMI here is the symmetric-uncertainty variant 2*I(X,Y)/(H(X)+H(Y)).  The
conditional BIC scores a labelling by -2 times the log marginal likelihood
of the block model given the labels, with uniform priors on the edge
probabilities and the label proportions; an approximate variant plugs in
maximum-likelihood estimates plus a degrees-of-freedom penalty.
"""

from __future__ import annotations

import numpy as np
from scipy.special import betaln, gammaln

from .core import Network, block_counts, canonicalize, cluster_sizes


def confusion(z1, z2) -> np.ndarray:
    """Co-occurrence table between two labelings of the same nodes."""
    z1 = canonicalize(z1)
    z2 = canonicalize(z2)
    if z1.shape != z2.shape:
        raise ValueError("labelings must have the same length")
    k1, k2 = z1.max() + 1, z2.max() + 1
    return np.bincount(z1 * k2 + z2, minlength=k1 * k2).reshape(k1, k2)


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def nmi(z1, z2) -> float:
    """Symmetric uncertainty between two partitions, in [0, 1].

    Relabel-invariant and symmetric; two single-cluster partitions count as
    identical (1.0) even though both entropies vanish.
    """
    table = confusion(z1, z2).astype(float)
    n = table.sum()
    joint = table / n
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    hx, hy = _entropy(px), _entropy(py)
    if hx == 0.0 and hy == 0.0:
        return 1.0
    mi = hx + hy - _entropy(joint.ravel())
    val = 2.0 * mi / (hx + hy)
    return float(min(max(val, 0.0), 1.0))


def _log_multivariate_beta(v: np.ndarray) -> float:
    return float(gammaln(v).sum() - gammaln(v.sum()))


def bic_exact(net: Network, labels) -> float:
    """-2 log of the marginal block-model likelihood given the labels.

    Integrates the edge probabilities (uniform Beta priors) and the label
    proportions (uniform Dirichlet) in closed form.  Lower is better.
    """
    if net.mask is not None:
        raise ValueError("bic is defined for fully observed networks")
    z = canonicalize(labels)
    bc = block_counts(net, z)
    iu = np.triu_indices(bc.M.shape[0])
    edge_term = float(betaln(bc.M[iu] + 1.0, bc.N[iu] - bc.M[iu] + 1.0).sum())
    size_term = _log_multivariate_beta(cluster_sizes(z) + 1.0)
    return -2.0 * (edge_term + size_term)


def bic_penalty_df(K: int) -> float:
    """Degrees of freedom of (edge probabilities, proportions) for K blocks."""
    return 0.5 * K * (K + 1) + (K - 1)


def bic_approx(net: Network, labels) -> float:
    """Plug-in BIC: -2 max log likelihood + df * log(number of dyads)."""
    if net.mask is not None:
        raise ValueError("bic is defined for fully observed networks")
    z = canonicalize(labels)
    bc = block_counts(net, z)
    n = net.n
    K = bc.M.shape[0]
    iu = np.triu_indices(K)
    M, N = bc.M[iu].astype(float), bc.N[iu].astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        eta = np.where(N > 0, M / np.maximum(N, 1), 0.0)
        ll = np.where(M > 0, M * np.log(eta), 0.0) + np.where(
            N - M > 0, (N - M) * np.log1p(-eta), 0.0
        )
    sizes = cluster_sizes(z).astype(float)
    ll_sizes = (sizes * np.log(sizes / n)).sum()
    dyads = n * (n - 1) / 2
    return float(-2.0 * (ll.sum() + ll_sizes) + bic_penalty_df(K) * np.log(dyads))
