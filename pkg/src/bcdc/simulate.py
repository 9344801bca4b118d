"""Synthetic-data generators for the benchmark designs.

Every generator is deterministic given its seed and returns self-describing
metadata next to the data, so a stored replicate can be regenerated or
audited.  Designs:

* continuous: 2-block planted partition with one informative and one noise
  Gaussian feature,
* categorical1 / categorical2: 3- and 2-block planted partitions with one
  informative and one noise categorical feature,
* mixed: K = n/50 blocks, one Gaussian plus one binary feature, neither
  separating the blocks on its own,
* sparse: 800-node 3-block graph with average degree around 5.8 and
  100-dimensional covariates,
* homophily: 3-block planted partition plus an extra edge-probability bonus
  for sharing a two-level covariate, giving 2K ground-truth classes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CovariateSet, Network, canonicalize


@dataclass(frozen=True)
class Dataset:
    network: Network
    covariates: CovariateSet | None
    truth: np.ndarray
    meta: dict


def replicate_seed(seed: int, *indices: int) -> int:
    """Stable per-replicate seed derived by a counter-based mix."""
    ss = np.random.SeedSequence([int(seed), *[int(i) for i in indices]])
    return int(ss.generate_state(1)[0])


def split_sizes(n: int, ratios) -> np.ndarray:
    """Split n into integer block sizes proportional to ratios.

    Floors the exact shares and hands leftovers to the largest remainders.
    """
    ratios = np.asarray(ratios, dtype=float)
    exact = n * ratios / ratios.sum()
    sizes = np.floor(exact).astype(np.int64)
    for _ in range(n - int(sizes.sum())):
        k = int(np.argmax(exact - sizes))
        sizes[k] += 1
    return sizes


def block_labels(sizes) -> np.ndarray:
    return np.repeat(np.arange(len(sizes)), sizes)


def planted_connectivity(K: int, p: float, r: float) -> np.ndarray:
    """Within-block probability p, between-block probability r*p."""
    if not (0 <= r <= 1 and 0 <= p <= 1):
        raise ValueError("need p in [0,1] and r in [0,1]")
    return np.where(np.eye(K, dtype=bool), p, r * p)


def sample_network(dyad_probs: np.ndarray, rng) -> Network:
    """Independent Bernoulli dyads from a symmetric probability matrix."""
    n = dyad_probs.shape[0]
    u = rng.random((n, n))
    upper = np.triu(u < dyad_probs, k=1)
    return Network(upper | upper.T)


def sample_sbm(labels, edge_prob: np.ndarray, seed) -> Network:
    """Planted block model draw: P_ij = edge_prob[z_i, z_j]."""
    z = np.asarray(labels)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sample_network(edge_prob[np.ix_(z, z)], rng)


def expected_average_degree(sizes, edge_prob: np.ndarray) -> float:
    sizes = np.asarray(sizes, dtype=float)
    n = sizes.sum()
    total = 0.0
    K = len(sizes)
    for k in range(K):
        total += sizes[k] * (sizes[k] - 1) * edge_prob[k, k]
        for l in range(K):
            if l != k:
                total += sizes[k] * sizes[l] * edge_prob[k, l]
    return float(total / n)


# ---------------------------------------------------------------------------
# covariate designs
# ---------------------------------------------------------------------------

def gen_continuous(labels, mu: float, seed) -> CovariateSet:
    """Two Gaussian features: a signed signal on the first axis plus noise.

    Block 0 has mean (+mu, 0), block 1 has mean (-mu, 0); unit covariance.
    """
    z = np.asarray(labels)
    if z.max() + 1 != 2:
        raise ValueError("continuous design requires exactly 2 blocks")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = rng.standard_normal((z.shape[0], 2))
    x[:, 0] += mu * np.where(z == 0, 1.0, -1.0)
    return CovariateSet.continuous_only(x)


def gen_categorical_design1(labels, seed) -> CovariateSet:
    """Signal feature equal to the block label; noise uniform on 3 levels."""
    z = np.asarray(labels)
    if z.max() + 1 != 3:
        raise ValueError("categorical design 1 requires exactly 3 blocks")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    noise = rng.integers(0, 3, size=z.shape[0])
    return CovariateSet.categorical_only(np.column_stack([z, noise]), (3, 3))


def gen_categorical_design2(labels, seed) -> CovariateSet:
    """Block-specific 4-level distributions drawn from Dirichlet(1)."""
    z = np.asarray(labels)
    if z.max() + 1 != 2:
        raise ValueError("categorical design 2 requires exactly 2 blocks")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    thetas = rng.dirichlet(np.ones(4), size=2)
    signal = np.array([rng.choice(4, p=thetas[zi]) for zi in z])
    noise = rng.integers(0, 4, size=z.shape[0])
    return CovariateSet.categorical_only(np.column_stack([signal, noise]), (4, 4))


def gen_mixed(labels, seed) -> CovariateSet:
    """One Gaussian feature keyed to block parity, one binary half-split.

    Blocks with odd 0-based label have Gaussian mean +1, even have -1; the
    binary feature splits the first half of the blocks from the second.
    """
    z = np.asarray(labels)
    K = z.max() + 1
    if K % 2:
        raise ValueError("mixed design requires an even number of blocks")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cont = (2.0 * (z % 2) - 1.0 + rng.standard_normal(z.shape[0])).reshape(-1, 1)
    half = np.where(z < K // 2, 0, 1)
    return CovariateSet(cont, half.reshape(-1, 1), (2,))


SPARSE_CONNECTIVITY = 0.01 * np.array(
    [[1.6, 1.2, 0.16], [1.2, 1.6, 0.02], [0.16, 0.02, 1.2]]
)


def sparse_centers(dim: int = 100) -> np.ndarray:
    mu = np.zeros((3, dim))
    mu[0, :2] = (0.0, 2.0)
    mu[1, :2] = (-1.0, -0.8)
    mu[2, :2] = (1.0, -0.8)
    return mu


def gen_sparse_highdim(seed, scale: float = 1.0):
    """Sparse 3-block graph with 100-dimensional covariates.

    800 nodes split 3:4:5 at scale 1; a smaller scale shrinks n while
    preserving the ratios.  Returns (network, covariates, truth).
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = int(round(800 * scale))
    sizes = split_sizes(n, (3, 4, 5))
    z = block_labels(sizes)
    net = sample_sbm(z, SPARSE_CONNECTIVITY, rng)
    mu = sparse_centers()
    x = mu[z] + rng.standard_normal((n, 100))
    return net, CovariateSet.continuous_only(x), z


HOMOPHILY_P = 0.3
HOMOPHILY_R = 0.7


def homophily_edge_probs(labels, levels, beta: float) -> np.ndarray:
    """Dyad probabilities: planted block term plus beta when levels match."""
    z = np.asarray(labels)
    x = np.asarray(levels)
    K = z.max() + 1
    base = planted_connectivity(K, HOMOPHILY_P, HOMOPHILY_R)[np.ix_(z, z)]
    probs = base + beta * (x[:, None] == x[None, :])
    return np.clip(probs, 0.0, 1.0)


def gen_homophily(labels, beta: float, seed):
    """Planted blocks plus a same-covariate connection bonus.

    The two-level covariate is uniform and independent of the blocks, so the
    covariate effect is separated from the block effect; the refined ground
    truth pairs (block, level) into 2K classes.  Returns (network,
    covariates).
    """
    if not -0.21 <= beta <= 0.7:
        raise ValueError("beta would push dyad probabilities outside [0, 1]")
    z = np.asarray(labels)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = rng.integers(0, 2, size=z.shape[0])
    net = sample_network(homophily_edge_probs(z, x, beta), rng)
    return net, CovariateSet.categorical_only(x.reshape(-1, 1), (2,))


def refined_labels(labels, levels) -> np.ndarray:
    """(block, level) pairs as dense labels; the homophily ground truth."""
    z = np.asarray(labels)
    x = np.asarray(levels)
    return canonicalize(z * (x.max() + 1) + x)


# ---------------------------------------------------------------------------
# full dataset assembly
# ---------------------------------------------------------------------------

DESIGNS = ("continuous", "categorical1", "categorical2", "mixed", "sparse", "homophily")


def make_dataset(design: str, seed: int, **params) -> Dataset:
    """Network + covariates + ground truth for one replicate of a design."""
    rng = np.random.default_rng(seed)
    meta = {"design": design, "seed": int(seed)}
    if design == "continuous":
        n = int(params.get("n", 150))
        p = float(params.get("p", 0.1))
        r = float(params.get("r", 0.3))
        mu = float(params.get("mu", 1.0))
        sizes = split_sizes(n, (2, 1))
        z = block_labels(sizes)
        net = sample_sbm(z, planted_connectivity(2, p, r), rng)
        x = gen_continuous(z, mu, rng)
        meta.update(n=n, K=2, p=p, r=r, mu=mu)
    elif design == "categorical1":
        n = int(params.get("n", 150))
        p = float(params.get("p", 0.1))
        r = float(params.get("r", 0.3))
        sizes = split_sizes(n, (1, 1, 1))
        z = block_labels(sizes)
        net = sample_sbm(z, planted_connectivity(3, p, r), rng)
        x = gen_categorical_design1(z, rng)
        meta.update(n=n, K=3, p=p, r=r)
    elif design == "categorical2":
        n = int(params.get("n", 150))
        p = float(params.get("p", 0.1))
        r = float(params.get("r", 0.3))
        sizes = split_sizes(n, (2, 1))
        z = block_labels(sizes)
        net = sample_sbm(z, planted_connectivity(2, p, r), rng)
        x = gen_categorical_design2(z, rng)
        meta.update(n=n, K=2, p=p, r=r)
    elif design == "mixed":
        n = int(params.get("n", 300))
        K = int(params.get("K", max(2, n // 50)))
        p = float(params.get("p", 0.3))
        r = float(params.get("r", 0.35))
        sizes = split_sizes(n, np.ones(K))
        z = block_labels(sizes)
        net = sample_sbm(z, planted_connectivity(K, p, r), rng)
        x = gen_mixed(z, rng)
        meta.update(n=n, K=K, p=p, r=r)
    elif design == "sparse":
        scale = float(params.get("scale", 1.0))
        net, x, z = gen_sparse_highdim(rng, scale=scale)
        meta.update(n=net.n, K=3, scale=scale)
    elif design == "homophily":
        n = int(params.get("n", 600))
        beta = float(params.get("beta", 0.2))
        sizes = split_sizes(n, (1, 1, 1))
        z = block_labels(sizes)
        net, x = gen_homophily(z, beta, rng)
        z = refined_labels(z, x.cat[:, 0])
        meta.update(n=n, K=3, beta=beta, classes=int(z.max() + 1))
    else:
        raise ValueError(f"unknown design {design!r}; choose from {DESIGNS}")
    return Dataset(network=net, covariates=x, truth=z, meta=meta)
