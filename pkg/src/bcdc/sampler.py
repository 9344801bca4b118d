"""Posterior Gibbs sampler over (labels, centers, edge probabilities).

One iteration is a systematic sweep: every node label in index order, then
all cluster centers, then all block edge probabilities.  Label updates can
create a new community (fresh center and edge-probability row drawn from
their priors) or annihilate a singleton, which is how the number of
communities is inferred.  Block counts are maintained incrementally; a full
recompute is available for consistency checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .core import (
    BlockCounts,
    CovariateSet,
    Hyperparams,
    Network,
    block_counts,
    canonicalize,
    cluster_sizes,
)
from .prior import (
    ClusterCenters,
    categorical_center_posterior,
    crp_partition,
    draw_prior_center,
    gaussian_center_posterior,
    log_cohesion,
    log_g,
    log_center_prior,
    log_kernel_matrix,
    log_kernel_point,
)

_EDGE_PROB_EPS = 1e-12  # keeps log / log1p finite

_TRIU_CACHE: dict = {}
_LOG_BETA_NORM: dict = {}


def _triu(L: int):
    got = _TRIU_CACHE.get(L)
    if got is None:
        got = _TRIU_CACHE[L] = np.triu_indices(L)
    return got


def _log_beta_norm(beta: float) -> float:
    got = _LOG_BETA_NORM.get(beta)
    if got is None:
        got = _LOG_BETA_NORM[beta] = float(betaln(beta, beta))
    return got


@dataclass
class SamplerState:
    """Mutable chain state; the count caches are confined to one chain.

    ``counts`` holds row-booked accumulators: every node move books its
    block deltas in the moved node's cluster row only, so the symmetric
    matrices are ``R + R.T`` with the diagonal taken from ``R`` (see
    :meth:`block_counts`).
    """

    labels: np.ndarray            # (n,) dense 0-based cluster labels
    sizes: np.ndarray             # (L,)
    centers: ClusterCenters
    edge_prob: np.ndarray         # (L, L) symmetric block connectivity
    counts: BlockCounts
    log_ep: np.ndarray = field(default=None, repr=False)
    log_1m_ep: np.ndarray = field(default=None, repr=False)
    logq: np.ndarray = field(default=None, repr=False)  # (n, L) kernel cache

    @property
    def L(self) -> int:
        return self.sizes.shape[0]

    def refresh_edge_prob_logs(self):
        ep = np.clip(self.edge_prob, _EDGE_PROB_EPS, 1.0 - _EDGE_PROB_EPS)
        self.edge_prob = ep
        self.log_ep = np.log(ep)
        self.log_1m_ep = np.log1p(-ep)

    def block_counts(self) -> BlockCounts:
        """Symmetric edge/dyad count matrices from the row accumulators."""
        return BlockCounts(M=_sym(self.counts.M), N=_sym(self.counts.N))


def _sym(rows: np.ndarray) -> np.ndarray:
    out = rows + rows.T
    np.fill_diagonal(out, rows.diagonal())
    return out


@dataclass
class ChainTrace:
    """Recorded post-burn-in samples plus the configuration that made them."""

    iteration: np.ndarray         # (k,)
    num_clusters: np.ndarray      # (k,)
    log_joint: np.ndarray         # (k,)
    labels: np.ndarray            # (k, n)
    config: dict


@dataclass
class FitResult:
    point_estimate: np.ndarray    # labels of the best traced sample
    best_index: int               # row of the trace holding the point estimate
    cluster_histogram: dict       # num_clusters -> count over retained samples
    trace: ChainTrace


def crp_init(n: int, alpha: float, seed: int) -> np.ndarray:
    """Initial partition drawn sequentially from the CRP."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return crp_partition(n, alpha, np.random.default_rng(seed))


def label_log_weights(log_psi, logq_row, edges_to, dyads_to, log_ep_rows, log_1m_ep_rows):
    """Unnormalized log weights of a label update.

    ``log_ep_rows`` has one row per candidate; the likelihood term is the
    Bernoulli profile of the node's observed edges into every current
    cluster.
    """
    return (
        log_psi
        + logq_row
        + log_ep_rows @ edges_to
        + log_1m_ep_rows @ (dyads_to - edges_to)
    )


def _pick(log_w: np.ndarray, rng) -> int:
    w = np.exp(log_w - log_w.max())
    csum = np.cumsum(w)
    return int(np.searchsorted(csum, rng.random() * csum[-1], side="right"))


def _drop_cluster(state: SamplerState, c: int):
    state.sizes = np.delete(state.sizes, c)
    state.centers.drop(c)
    for name in ("edge_prob", "log_ep", "log_1m_ep"):
        m = getattr(state, name)
        setattr(state, name, np.delete(np.delete(m, c, axis=0), c, axis=1))
    state.counts.M = np.delete(np.delete(state.counts.M, c, axis=0), c, axis=1)
    state.counts.N = np.delete(np.delete(state.counts.N, c, axis=0), c, axis=1)
    state.logq = np.delete(state.logq, c, axis=1)
    state.labels[state.labels > c] -= 1


def _grow_square(m: np.ndarray, row: np.ndarray, diag) -> np.ndarray:
    L = m.shape[0]
    out = np.empty((L + 1, L + 1), dtype=m.dtype)
    out[:L, :L] = m
    out[L, :L] = row
    out[:L, L] = row
    out[L, L] = diag
    return out


def _append_cluster(state, x, hp, rng, center, row, diag=None, logq_col=None):
    state.sizes = np.append(state.sizes, 0)
    state.centers.append(*center)
    if diag is None:
        diag = rng.beta(hp.beta, hp.beta)
    state.edge_prob = _grow_square(state.edge_prob, row, diag)
    state.refresh_edge_prob_logs()
    state.counts.M = _grow_square(state.counts.M, np.zeros(len(row), dtype=np.int64), 0)
    state.counts.N = _grow_square(state.counts.N, np.zeros(len(row), dtype=np.int64), 0)
    if logq_col is None:
        logq_col = _kernel_column(x, center, hp)
    state.logq = np.hstack([state.logq, logq_col[:, None]])


def _kernel_column(x: CovariateSet, center, hp) -> np.ndarray:
    cont_c, cat_c = center
    col = np.zeros(x.n)
    if x.p:
        diff = x.cont - cont_c[None, :]
        col += -0.5 * x.p * np.log(2 * np.pi * hp.s2) - (diff**2).sum(axis=1) / (2 * hp.s2)
    for r in range(x.R):
        col += np.log(np.maximum(cat_c[r], 1e-300))[x.cat[:, r]]
    return col


def _apply_counts(counts: BlockCounts, k: int, edges_to, dyads_to, sign: int):
    # row-only accumulation: every node move books its block deltas in the
    # moved node's cluster row; symmetrize() recovers the full matrices
    L = edges_to.shape[0]
    counts.M[k, :L] += sign * edges_to
    counts.N[k, :L] += sign * dyads_to


def update_node_label(state: SamplerState, net: Network, x: CovariateSet,
                      hp: Hyperparams, rng, i: int):
    """Resample node i's label over existing clusters plus one candidate.

    If i currently forms a singleton community, that community's parameters
    carry over as the candidate (required for the move to leave the
    posterior invariant); otherwise the candidate's center and edge
    probabilities are fresh prior draws.
    """
    z = state.labels
    c = z[i]
    state.sizes[c] -= 1
    z[i] = -1
    died = state.sizes[c] == 0
    if died:
        cand_center = state.centers.row(c)
        cand_center = (cand_center[0].copy(), [v.copy() for v in cand_center[1]])
        cand_row = np.delete(state.edge_prob[c], c)
        cand_diag = state.edge_prob[c, c]
        cand_logq_col = state.logq[:, c].copy()
        _drop_cluster(state, c)
    L = state.L

    edges_to = np.bincount(z[net.edge_neighbors(i)], minlength=L)
    dn = net.dyad_neighbors(i)
    dyads_to = state.sizes.copy() if dn is None else np.bincount(z[dn], minlength=L)
    if not died:
        _apply_counts(state.counts, c, edges_to, dyads_to, -1)
        cand_center = draw_prior_center(x, hp, rng)
        cand_row = np.clip(
            rng.beta(hp.beta, hp.beta, size=L), _EDGE_PROB_EPS, 1 - _EDGE_PROB_EPS
        )
        cand_diag = None  # drawn lazily at birth
        cand_logq_col = None

    cand_logq_i = (
        cand_logq_col[i]
        if died
        else log_kernel_point(x, i, cand_center[0], cand_center[1], hp)
    )
    log_alpha = np.log(hp.alpha) if hp.alpha > 0 else -np.inf
    non_edges = dyads_to - edges_to
    log_w = np.empty(L + 1)
    log_w[:L] = (
        np.log(state.sizes)
        + state.logq[i]
        + state.log_ep @ edges_to
        + state.log_1m_ep @ non_edges
    )
    log_w[L] = (
        log_alpha + cand_logq_i + np.log(cand_row) @ edges_to + np.log1p(-cand_row) @ non_edges
    )
    k = _pick(log_w, rng)

    if k == L:
        _append_cluster(state, x, hp, rng, cand_center, cand_row, cand_diag, cand_logq_col)
    z[i] = k
    state.sizes[k] += 1
    _apply_counts(state.counts, k, edges_to, dyads_to, +1)


def _label_sums(z, L: int, x_cont: np.ndarray) -> np.ndarray:
    p = x_cont.shape[1]
    if p <= 8:
        return np.column_stack(
            [np.bincount(z, weights=x_cont[:, j], minlength=L) for j in range(p)]
        )
    onehot = np.zeros((x_cont.shape[0], L))
    onehot[np.arange(x_cont.shape[0]), z] = 1.0
    return onehot.T @ x_cont


def resample_centers(state: SamplerState, x: CovariateSet, hp: Hyperparams, rng):
    """Redraw every cluster center from its conjugate posterior."""
    z, L = state.labels, state.L
    cont = np.zeros((L, x.p))
    if x.p:
        mean, var = gaussian_center_posterior(state.sizes, _label_sums(z, L, x.cont), hp)
        cont = mean + np.sqrt(var)[:, None] * rng.standard_normal((L, x.p))
    cat = []
    for r in range(x.R):
        a = x.arities[r]
        hits = np.bincount(z * a + x.cat[:, r], minlength=L * a).reshape(L, a)
        g = rng.standard_gamma(categorical_center_posterior(hits, hp.gamma))
        cat.append(g / g.sum(axis=1, keepdims=True))
    state.centers = ClusterCenters(cont, cat)
    state.logq = log_kernel_matrix(x, state.centers, hp)


def resample_edge_probs(state: SamplerState, hp: Hyperparams, rng):
    """Redraw the symmetric block connectivity from its Beta posteriors."""
    L = state.L
    iu = _triu(L)
    bc = state.block_counts()
    M, N = bc.M[iu], bc.N[iu]
    vals = rng.beta(M + hp.beta, N - M + hp.beta)
    ep = np.empty((L, L))
    ep[iu] = vals
    ep.T[iu] = vals
    state.edge_prob = ep
    state.refresh_edge_prob_logs()


def log_joint(state: SamplerState, net: Network, x: CovariateSet, hp: Hyperparams) -> float:
    """log of the joint density of (adjacency, labels, centers, edge probs).

    The partition prior's normalizing constant is omitted; it is the same
    for every state of the same data, so comparisons are unaffected.
    """
    L = state.L
    iu = _triu(L)
    bc = state.block_counts()
    M, N = bc.M[iu], bc.N[iu]
    lik = float((M * state.log_ep[iu] + (N - M) * state.log_1m_ep[iu]).sum())
    partition = float(L * np.log(hp.alpha) + gammaln(state.sizes).sum()) if hp.alpha > 0 else -np.inf
    kern = float(state.logq[np.arange(len(state.labels)), state.labels].sum())
    centers = log_center_prior(state.centers, hp)
    ep_prior = float(
        ((hp.beta - 1.0) * (state.log_ep[iu] + state.log_1m_ep[iu])).sum()
        - len(iu[0]) * _log_beta_norm(hp.beta)
    )
    return lik + partition + kern + centers + ep_prior


def initial_state(net: Network, x: CovariateSet, hp: Hyperparams, rng,
                  init_labels=None) -> SamplerState:
    z = canonicalize(init_labels if init_labels is not None else crp_partition(net.n, hp.alpha, rng))
    sizes = cluster_sizes(z)
    bc = block_counts(net, z)
    state = SamplerState(
        labels=z,
        sizes=sizes,
        centers=ClusterCenters.empty(x),
        edge_prob=np.full((len(sizes), len(sizes)), 0.5),
        counts=BlockCounts(M=np.triu(bc.M), N=np.triu(bc.N)),
    )
    state.refresh_edge_prob_logs()
    resample_centers(state, x, hp, rng)
    resample_edge_probs(state, hp, rng)
    return state


def canonicalize_state(state: SamplerState):
    """Relabel by first appearance and permute all per-cluster arrays."""
    canon = canonicalize(state.labels)
    if np.array_equal(canon, state.labels):
        return
    old_to_new = np.empty(state.L, dtype=np.int64)
    old_to_new[state.labels] = canon
    order = np.empty(state.L, dtype=np.int64)
    order[old_to_new] = np.arange(state.L)
    state.labels = canon
    state.sizes = state.sizes[order]
    state.centers.permute(order)
    ix = np.ix_(order, order)
    state.edge_prob = state.edge_prob[ix]
    state.log_ep = state.log_ep[ix]
    state.log_1m_ep = state.log_1m_ep[ix]
    state.counts.M = state.counts.M[ix]
    state.counts.N = state.counts.N[ix]
    state.logq = state.logq[:, order]


def check_counts(state: SamplerState, net: Network) -> bool:
    """Debug recompute: cached block counts match a from-scratch computation."""
    fresh = block_counts(net, state.labels)
    cached = state.block_counts()
    return bool(np.array_equal(fresh.M, cached.M) and np.array_equal(fresh.N, cached.N))


def run_chain(net: Network, x: CovariateSet | None, hp: Hyperparams, iters: int,
              burn_in: int | None = None, thin: int = 1, seed: int = 0,
              scan: str = "systematic") -> FitResult:
    """Run the sampler and summarize the retained samples.

    Records every ``thin``-th post-burn-in sweep; the point estimate is the
    retained sample with the highest log joint.  ``burn_in`` defaults to
    ``iters // 2``.  Fully deterministic given the seed.
    """
    if x is None:
        x = CovariateSet.empty(net.n)
    if x.n != net.n:
        raise ValueError("covariates and network disagree on n")
    if burn_in is None:
        burn_in = iters // 2
    if not iters > burn_in >= 0:
        raise ValueError("need iters > burn_in >= 0")
    if thin < 1:
        raise ValueError("thin must be >= 1")
    if scan not in ("systematic", "random"):
        raise ValueError("scan must be 'systematic' or 'random'")

    rng = np.random.default_rng(seed)
    state = initial_state(net, x, hp, rng)
    n = net.n
    kept_iter, kept_L, kept_lj, kept_z = [], [], [], []
    for t in range(1, iters + 1):
        order = range(n) if scan == "systematic" else rng.permutation(n)
        for i in order:
            update_node_label(state, net, x, hp, rng, i)
        resample_centers(state, x, hp, rng)
        resample_edge_probs(state, hp, rng)
        canonicalize_state(state)
        if t > burn_in and (t - burn_in - 1) % thin == 0:
            kept_iter.append(t)
            kept_L.append(state.L)
            kept_lj.append(log_joint(state, net, x, hp))
            kept_z.append(state.labels.copy())

    trace = ChainTrace(
        iteration=np.array(kept_iter),
        num_clusters=np.array(kept_L),
        log_joint=np.array(kept_lj),
        labels=np.vstack(kept_z),
        config={"iters": iters, "burn_in": burn_in, "thin": thin, "seed": seed, "scan": scan},
    )
    best = int(np.argmax(trace.log_joint))
    hist_vals, hist_counts = np.unique(trace.num_clusters, return_counts=True)
    return FitResult(
        point_estimate=trace.labels[best].copy(),
        best_index=best,
        cluster_histogram={int(v): int(c) for v, c in zip(hist_vals, hist_counts)},
        trace=trace,
    )


# ---------------------------------------------------------------------------
# exact posterior over partitions (small-n oracle)
# ---------------------------------------------------------------------------

def set_partitions(n: int):
    """Yield every set partition of range(n) as a canonical label array."""
    z = np.zeros(n, dtype=np.int64)

    def rec(i, used):
        if i == n:
            yield z.copy()
            return
        for k in range(used + 1):
            z[i] = k
            yield from rec(i + 1, max(used, k + 1))

    yield from rec(1, 1) if n > 1 else iter([z.copy()])


def exact_posterior(net: Network, x: CovariateSet | None, hp: Hyperparams,
                    log_cohesion_fn=log_cohesion) -> dict:
    """Exact posterior probability of every partition, for n <= 8.

    Centers are integrated through the marginal cluster score and edge
    probabilities through Beta integrals, leaving a finite enumeration.
    """
    n = net.n
    if n > 8:
        raise ValueError("exact enumeration is limited to n <= 8")
    if x is None:
        x = CovariateSet.empty(n)
    keys, logps = [], []
    for z in set_partitions(n):
        L = int(z.max()) + 1
        val = 0.0
        for k in range(L):
            members = np.flatnonzero(z == k)
            val += log_cohesion_fn(members.size, hp.alpha) + log_g(members, x, hp)
        bc = block_counts(net, z)
        iu = np.triu_indices(L)
        val += float(
            (betaln(bc.M[iu] + hp.beta, bc.N[iu] - bc.M[iu] + hp.beta)).sum()
            - len(iu[0]) * betaln(hp.beta, hp.beta)
        )
        keys.append(tuple(int(v) for v in z))
        logps.append(val)
    logps = np.array(logps)
    probs = np.exp(logps - logsumexp(logps))
    return dict(zip(keys, probs))
