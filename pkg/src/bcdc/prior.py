"""Covariate-dependent random partition prior.

A cluster S is scored by cohesion(S) * g(S | x) where the cohesion is the
Dirichlet-process one, alpha * (|S|-1)!, and g marginalizes a per-node
covariate kernel over a conjugate center prior:

* continuous block: spherical Gaussian kernel N(x; center, s2*I) with
  center prior N(0, tau2*I),
* categorical block: per-feature multinomial kernel with independent
  Dirichlet(gamma) priors on the probability vectors.

Both admit closed-form marginals (Gaussian evidence and
Dirichlet-multinomial); mixed covariates multiply the two blocks.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .core import CovariateSet, Hyperparams, canonicalize, cluster_sizes, num_clusters

_PROB_FLOOR = 1e-300  # guards log of a categorical center entry


def log_cohesion(size: int, alpha: float) -> float:
    """log of the cluster-size weight alpha*(size-1)!; empty sets score 1."""
    if size < 0:
        raise ValueError("size must be >= 0")
    if size == 0:
        return 0.0
    return float(np.log(alpha) + gammaln(size))


# ---------------------------------------------------------------------------
# cluster centers and kernel densities
# ---------------------------------------------------------------------------

class ClusterCenters:
    """Stacked centers for L clusters.

    ``cont`` is (L, p); ``cat[r]`` is (L, arities[r]) of probability rows.
    Mutable: the sampler appends/drops rows as communities are born and die.
    """

    def __init__(self, cont: np.ndarray, cat: list[np.ndarray]):
        self.cont = np.atleast_2d(np.asarray(cont, dtype=float))
        self.cat = [np.atleast_2d(np.asarray(c, dtype=float)) for c in cat]

    @property
    def L(self) -> int:
        return self.cont.shape[0]

    @classmethod
    def empty(cls, x: CovariateSet) -> "ClusterCenters":
        return cls(np.zeros((0, x.p)), [np.zeros((0, a)) for a in x.arities])

    def append(self, cont_row: np.ndarray, cat_rows: list[np.ndarray]):
        self.cont = np.vstack([self.cont, cont_row.reshape(1, -1)])
        self.cat = [np.vstack([c, row.reshape(1, -1)]) for c, row in zip(self.cat, cat_rows)]

    def drop(self, k: int):
        self.cont = np.delete(self.cont, k, axis=0)
        self.cat = [np.delete(c, k, axis=0) for c in self.cat]

    def permute(self, order: np.ndarray):
        self.cont = self.cont[order]
        self.cat = [c[order] for c in self.cat]

    def row(self, k: int) -> tuple[np.ndarray, list[np.ndarray]]:
        return self.cont[k], [c[k] for c in self.cat]


_EMPTY = np.zeros(0)
_GAMMA_ALPHAS: dict = {}


def _gamma_alpha(a: int, gamma: float) -> np.ndarray:
    got = _GAMMA_ALPHAS.get((a, gamma))
    if got is None:
        got = _GAMMA_ALPHAS[(a, gamma)] = np.full(a, gamma)
    return got


def draw_prior_center(x: CovariateSet, hp: Hyperparams, rng) -> tuple[np.ndarray, list[np.ndarray]]:
    """One fresh center from the prior: N(0, tau2*I) and Dirichlet(gamma)."""
    cont = np.sqrt(hp.tau2) * rng.standard_normal(x.p) if x.p else _EMPTY
    cat = []
    for a in x.arities:
        g = rng.standard_gamma(_gamma_alpha(a, hp.gamma))
        cat.append(g / g.sum())
    return cont, cat


def log_kernel_matrix(x: CovariateSet, centers: ClusterCenters, hp: Hyperparams) -> np.ndarray:
    """(n, L) matrix of log kernel densities q(x_i | center_k)."""
    n, L = x.n, centers.L
    out = np.zeros((n, L))
    if x.p:
        sq = (
            (x.cont**2).sum(axis=1)[:, None]
            - 2.0 * x.cont @ centers.cont.T
            + (centers.cont**2).sum(axis=1)[None, :]
        )
        out += -0.5 * x.p * np.log(2 * np.pi * hp.s2) - sq / (2 * hp.s2)
    for r in range(x.R):
        probs = np.maximum(centers.cat[r], _PROB_FLOOR)
        out += np.log(probs)[:, x.cat[:, r]].T
    return out


def log_kernel_point(
    x: CovariateSet, i: int, cont_center: np.ndarray, cat_center: list[np.ndarray], hp: Hyperparams
) -> float:
    """log q(x_i | center) for a single node and a single center."""
    val = 0.0
    if x.p:
        diff = x.cont[i] - cont_center
        val += -0.5 * x.p * np.log(2 * np.pi * hp.s2) - diff @ diff / (2 * hp.s2)
    for r in range(x.R):
        val += np.log(max(cat_center[r][x.cat[i, r]], _PROB_FLOOR))
    return float(val)


def log_q(x: CovariateSet, i: int, centers: ClusterCenters, k: int, hp: Hyperparams) -> float:
    cont_c, cat_c = centers.row(k)
    return log_kernel_point(x, i, cont_c, cat_c, hp)


def log_center_prior(centers: ClusterCenters, hp: Hyperparams) -> float:
    """Sum of log prior densities of all L centers."""
    L = centers.L
    val = 0.0
    p = centers.cont.shape[1]
    if p:
        val += L * (-0.5 * p * np.log(2 * np.pi * hp.tau2))
        val += -(centers.cont**2).sum() / (2 * hp.tau2)
    for c in centers.cat:
        a = c.shape[1]
        const = gammaln(a * hp.gamma) - a * gammaln(hp.gamma)
        val += L * const + (hp.gamma - 1.0) * np.log(np.maximum(c, _PROB_FLOOR)).sum()
    return float(val)


# ---------------------------------------------------------------------------
# marginal cluster score g(S | x)
# ---------------------------------------------------------------------------

def _log_gaussian_evidence(m: int, total: np.ndarray, sumsq: float, hp: Hyperparams) -> float:
    # integral of prod_i N(x_i; xi, s2 I) dN(xi; 0, tau2 I), per-coordinate conjugacy
    if m == 0:
        return 0.0
    d = total.shape[0]
    s2, t2 = hp.s2, hp.tau2
    val = -0.5 * m * d * np.log(2 * np.pi * s2)
    val += -0.5 * d * np.log(1.0 + m * t2 / s2)
    val += -0.5 * (sumsq / s2 - t2 * (total**2).sum() / (s2 * (s2 + m * t2)))
    return float(val)


def _log_dirmult_evidence(counts: np.ndarray, gamma: float) -> float:
    # Dirichlet-multinomial marginal for one categorical feature
    m = counts.sum()
    if m == 0:
        return 0.0
    a = counts.shape[0]
    return float(
        gammaln(a * gamma)
        - gammaln(a * gamma + m)
        + (gammaln(gamma + counts) - gammaln(gamma)).sum()
    )


def log_g(members, x: CovariateSet, hp: Hyperparams) -> float:
    """log marginal score of the node set ``members``; empty sets score 1."""
    idx = np.asarray(members, dtype=np.int64)
    if idx.size == 0:
        return 0.0
    val = 0.0
    if x.p:
        pts = x.cont[idx]
        val += _log_gaussian_evidence(idx.size, pts.sum(axis=0), float((pts**2).sum()), hp)
    for r in range(x.R):
        counts = np.bincount(x.cat[idx, r], minlength=x.arities[r])
        val += _log_dirmult_evidence(counts, hp.gamma)
    return val


# ---------------------------------------------------------------------------
# conjugate posteriors of cluster centers
# ---------------------------------------------------------------------------

def gaussian_center_posterior(m, total, hp: Hyperparams):
    """Mean and per-coordinate variance of a continuous center given its
    cluster: N(tau2*sum/(m*tau2+s2), s2*tau2/(m*tau2+s2) I).

    ``m`` may be a scalar or an (L,) vector with ``total`` of shape (L, p).
    """
    m = np.asarray(m, dtype=float)
    total = np.asarray(total, dtype=float)
    denom = m * hp.tau2 + hp.s2
    if total.ndim == 2:
        return hp.tau2 * total / denom[:, None], hp.s2 * hp.tau2 / denom
    return hp.tau2 * total / denom, hp.s2 * hp.tau2 / denom


def categorical_center_posterior(counts, gamma: float) -> np.ndarray:
    """Dirichlet parameters of a categorical center given per-code counts."""
    return gamma + np.asarray(counts, dtype=float)


def draw_posterior_centers(x: CovariateSet, labels, L: int, hp: Hyperparams, rng) -> ClusterCenters:
    """Draw all L cluster centers from their conjugate posteriors."""
    z = np.asarray(labels)
    sizes = cluster_sizes(z, L)
    cont = np.zeros((L, x.p))
    if x.p:
        total = np.zeros((L, x.p))
        np.add.at(total, z, x.cont)
        mean, var = gaussian_center_posterior(sizes, total, hp)
        cont = mean + np.sqrt(var)[:, None] * rng.standard_normal((L, x.p))
    cat = []
    for r in range(x.R):
        a = x.arities[r]
        counts = np.bincount(z * a + x.cat[:, r], minlength=L * a).reshape(L, a)
        g = rng.standard_gamma(categorical_center_posterior(counts, hp.gamma))
        cat.append(g / g.sum(axis=1, keepdims=True))
    return ClusterCenters(cont, cat)


# ---------------------------------------------------------------------------
# incremental sufficient statistics and posterior predictives
# ---------------------------------------------------------------------------

class ClusterStats:
    """Per-cluster sufficient statistics of the covariates.

    Supports O(p + R) node moves and vectorized posterior-predictive
    evaluation over all clusters plus the would-be new cluster.
    """

    def __init__(self, x: CovariateSet, labels=None, L: int | None = None):
        self.x = x
        L = 0 if labels is None else (num_clusters(labels) if L is None else L)
        self.m = np.zeros(L, dtype=np.int64)
        self.cont_sum = np.zeros((L, x.p))
        self.cat_counts = [np.zeros((L, a), dtype=np.int64) for a in x.arities]
        if labels is not None:
            z = np.asarray(labels)
            self.m = cluster_sizes(z, L).astype(np.int64)
            if x.p:
                np.add.at(self.cont_sum, z, x.cont)
            for r in range(x.R):
                np.add.at(self.cat_counts[r], (z, x.cat[:, r]), 1)

    @property
    def L(self) -> int:
        return self.m.shape[0]

    def add(self, i: int, k: int):
        if k == self.L:
            self.m = np.append(self.m, 0)
            self.cont_sum = np.vstack([self.cont_sum, np.zeros(self.x.p)])
            self.cat_counts = [
                np.vstack([c, np.zeros(c.shape[1], dtype=np.int64)]) for c in self.cat_counts
            ]
        self.m[k] += 1
        if self.x.p:
            self.cont_sum[k] += self.x.cont[i]
        for r in range(self.x.R):
            self.cat_counts[r][k, self.x.cat[i, r]] += 1

    def remove(self, i: int, k: int) -> bool:
        """Remove node i from cluster k; returns True if the cluster emptied."""
        self.m[k] -= 1
        if self.x.p:
            self.cont_sum[k] -= self.x.cont[i]
        for r in range(self.x.R):
            self.cat_counts[r][k, self.x.cat[i, r]] -= 1
        if self.m[k] == 0:
            self.m = np.delete(self.m, k)
            self.cont_sum = np.delete(self.cont_sum, k, axis=0)
            self.cat_counts = [np.delete(c, k, axis=0) for c in self.cat_counts]
            return True
        return False

    def log_predictive(self, i: int, hp: Hyperparams) -> np.ndarray:
        """(L+1,) log posterior-predictive densities of x_i, new cluster last.

        Entry k equals log g(S_k + {i}) - log g(S_k); the last entry is
        log g({i}).
        """
        x = self.x
        m_ext = np.append(self.m, 0).astype(float)
        out = np.zeros(m_ext.shape[0])
        if x.p:
            denom = m_ext * hp.tau2 + hp.s2
            mean = hp.tau2 * np.vstack([self.cont_sum, np.zeros(x.p)]) / denom[:, None]
            var = hp.s2 + hp.s2 * hp.tau2 / denom
            sq = ((x.cont[i][None, :] - mean) ** 2).sum(axis=1)
            out += -0.5 * x.p * np.log(2 * np.pi * var) - sq / (2 * var)
        for r in range(x.R):
            code = x.cat[i, r]
            hits = np.append(self.cat_counts[r][:, code], 0).astype(float)
            out += np.log(hp.gamma + hits) - np.log(x.arities[r] * hp.gamma + m_ext)
        return out


# ---------------------------------------------------------------------------
# prior-only Gibbs steps
# ---------------------------------------------------------------------------

def _gumbel_free_pick(log_w: np.ndarray, rng) -> int:
    """Sample an index proportionally to exp(log_w), max-subtracted."""
    w = np.exp(log_w - log_w.max())
    csum = np.cumsum(w)
    return int(np.searchsorted(csum, rng.random() * csum[-1], side="right"))


def collapsed_log_weights(
    i: int, stats: ClusterStats, hp: Hyperparams, log_cohesion_fn=None
) -> np.ndarray:
    """(L+1,) unnormalized log weights of the collapsed label update.

    ``stats`` must exclude node i.  Entry k combines the size weight
    (alpha for the new-cluster slot) with the marginal-score ratio
    g(S_k + {i}) / g(S_k).
    """
    if log_cohesion_fn is None:
        with np.errstate(divide="ignore"):
            log_psi = np.log(np.append(stats.m, hp.alpha).astype(float))
    else:
        sizes = np.append(stats.m, 0)
        log_psi = np.array(
            [log_cohesion_fn(s + 1, hp.alpha) - log_cohesion_fn(s, hp.alpha) for s in sizes]
        )
    return log_psi + stats.log_predictive(i, hp)


def prior_gibbs_collapsed_step(
    i: int, stats: ClusterStats, hp: Hyperparams, rng
) -> int:
    """Sample a label in 0..L for node i (L means a new cluster)."""
    return _gumbel_free_pick(collapsed_log_weights(i, stats, hp), rng)


def aux_log_weights(
    i: int,
    sizes: np.ndarray,
    x: CovariateSet,
    centers: ClusterCenters,
    fresh_center: tuple[np.ndarray, list[np.ndarray]],
    hp: Hyperparams,
) -> np.ndarray:
    """(L+1,) log weights of the auxiliary-variable label update."""
    with np.errstate(divide="ignore"):
        log_psi = np.log(np.append(sizes, hp.alpha).astype(float))
    logq = np.array(
        [log_q(x, i, centers, k, hp) for k in range(centers.L)]
        + [log_kernel_point(x, i, fresh_center[0], fresh_center[1], hp)]
    )
    return log_psi + logq


def prior_gibbs_aux_step(
    i: int,
    sizes: np.ndarray,
    x: CovariateSet,
    centers: ClusterCenters,
    hp: Hyperparams,
    rng,
):
    """Draw a fresh center from the prior, then a label in 0..L.

    Returns (label, fresh_center); the caller adopts the fresh center iff
    label == L.
    """
    fresh = draw_prior_center(x, hp, rng)
    label = _gumbel_free_pick(aux_log_weights(i, sizes, x, centers, fresh, hp), rng)
    return label, fresh


def crp_partition(n: int, alpha: float, rng) -> np.ndarray:
    """Sequential draw of a partition of n items with concentration alpha."""
    z = np.zeros(n, dtype=np.int64)
    sizes = [1]
    for i in range(1, n):
        w = np.array(sizes + [alpha], dtype=float)
        k = int(np.searchsorted(np.cumsum(w), rng.random() * w.sum(), side="right"))
        if k == len(sizes):
            sizes.append(1)
        else:
            sizes[k] += 1
        z[i] = k
    return z


def sample_prior(n: int, x: CovariateSet | None, hp: Hyperparams, iters: int, seed: int) -> np.ndarray:
    """Gibbs chain over the partition prior; returns an (iters, n) label matrix.

    Uses the collapsed update and starts from a sequential CRP draw.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    if x is None:
        x = CovariateSet.empty(n)
    rng = np.random.default_rng(seed)
    z = crp_partition(n, hp.alpha, rng)
    stats = ClusterStats(x, z)
    out = np.empty((iters, n), dtype=np.int64)
    for t in range(iters):
        for i in range(n):
            emptied = stats.remove(i, z[i])
            if emptied:
                z[z > z[i]] -= 1
            k = prior_gibbs_collapsed_step(i, stats, hp, rng)
            stats.add(i, k)
            z[i] = k
        z = canonicalize(z)
        # stats rows must track the relabeling
        stats = ClusterStats(x, z)
        out[t] = z
    return out


# ---------------------------------------------------------------------------
# exact CRP pmf (covariate-free special case; used by tests and oracles)
# ---------------------------------------------------------------------------

def crp_log_pmf(labels, alpha: float) -> float:
    """Exact log probability of a set partition under the CRP."""
    sizes = cluster_sizes(labels)
    n = int(sizes.sum())
    L = sizes.shape[0]
    return float(
        L * np.log(alpha)
        + gammaln(sizes).sum()
        + gammaln(alpha)
        - gammaln(alpha + n)
    )


def crp_expected_clusters(n: int, alpha: float) -> float:
    return float(sum(alpha / (alpha + i) for i in range(n)))
