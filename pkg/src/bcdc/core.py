"""Core data model: networks, node covariates, partitions and block counts.

Conventions used throughout the package:

* cluster labels are dense 0-based integers ``0..L-1`` (file formats are
  1-based, see :mod:`bcdc.io`),
* categorical covariate codes are dense 0-based integers ``0..arity-1``,
* the adjacency matrix is symmetric boolean with a zero diagonal,
* an observation mask of ``None`` means "every dyad observed".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised when input data violates a structural requirement."""


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------

def canonicalize(labels) -> np.ndarray:
    """Relabel clusters by first appearance in node-index order.

    Accepts any integer labelling and returns an equivalent dense labelling
    ``0..L-1``.  Idempotent, and preserves the co-membership structure.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("labels must be a nonempty 1-d integer array")
    _, first_pos, inverse = np.unique(labels, return_index=True, return_inverse=True)
    # np.unique sorts by label value; re-rank by first occurrence instead
    order = np.argsort(np.argsort(first_pos, kind="stable"), kind="stable")
    return order[inverse]


def num_clusters(labels) -> int:
    return int(np.max(labels)) + 1


def cluster_sizes(labels, L: int | None = None) -> np.ndarray:
    labels = np.asarray(labels)
    return np.bincount(labels, minlength=L if L is not None else num_clusters(labels))


def comembership(labels) -> np.ndarray:
    """n x n boolean matrix with True where two nodes share a cluster."""
    z = np.asarray(labels)
    return z[:, None] == z[None, :]


# ---------------------------------------------------------------------------
# networks
# ---------------------------------------------------------------------------

@dataclass
class Network:
    """Undirected simple graph, optionally with an observation mask.

    ``adj`` is a symmetric boolean matrix with zero diagonal.  ``mask`` marks
    which dyads have an observed edge status; wherever ``mask`` is 0 the
    adjacency entry is ignored.  Neighbour lists are precomputed because the
    sampler touches them once per node per sweep.
    """

    adj: np.ndarray
    mask: np.ndarray | None = None
    _edge_nbrs: list = field(init=False, repr=False)
    _dyad_nbrs: list | None = field(init=False, repr=False)

    def __post_init__(self):
        adj = np.asarray(self.adj)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise DataError("adjacency must be square")
        adj = adj.astype(bool)
        if adj.diagonal().any():
            raise DataError("self-loops are not allowed")
        if not np.array_equal(adj, adj.T):
            raise DataError("adjacency must be symmetric")
        self.adj = adj
        if self.mask is not None:
            mask = np.asarray(self.mask).astype(bool)
            if mask.shape != adj.shape:
                raise DataError("mask shape must match adjacency")
            if not np.array_equal(mask, mask.T):
                raise DataError("mask must be symmetric")
            np.fill_diagonal(mask, False)
            self.mask = mask
        eff = self.adj if self.mask is None else (self.adj & self.mask)
        self._edge_nbrs = [np.flatnonzero(eff[i]) for i in range(self.n)]
        if self.mask is None:
            self._dyad_nbrs = None
        else:
            self._dyad_nbrs = [np.flatnonzero(self.mask[i]) for i in range(self.n)]

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    def edge_neighbors(self, i: int) -> np.ndarray:
        """Nodes j with an observed edge to i."""
        return self._edge_nbrs[i]

    def dyad_neighbors(self, i: int) -> np.ndarray | None:
        """Nodes j with an observed dyad at i, or None meaning "all j != i"."""
        return None if self._dyad_nbrs is None else self._dyad_nbrs[i]

    def num_edges(self) -> int:
        eff = self.adj if self.mask is None else (self.adj & self.mask)
        return int(eff.sum()) // 2


# ---------------------------------------------------------------------------
# covariates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CovariateSet:
    """Per-node features: a continuous block and a categorical block.

    ``cont`` is (n, p) float; ``cat`` is (n, R) int codes with ``arities[r]``
    categories for feature r.  Either block may be empty; with both empty the
    model degenerates to the covariate-free special case.
    """

    cont: np.ndarray
    cat: np.ndarray
    arities: tuple[int, ...] = ()

    def __post_init__(self):
        cont = np.atleast_2d(np.asarray(self.cont, dtype=float))
        cat = np.atleast_2d(np.asarray(self.cat, dtype=np.int64))
        object.__setattr__(self, "cont", cont)
        object.__setattr__(self, "cat", cat)
        object.__setattr__(self, "arities", tuple(int(a) for a in self.arities))
        if cat.shape[1] != len(self.arities):
            raise DataError("one arity required per categorical feature")
        for r, a in enumerate(self.arities):
            if a < 1:
                raise DataError("categorical arity must be >= 1")
            col = cat[:, r]
            if col.size and (col.min() < 0 or col.max() >= a):
                raise DataError(f"categorical codes out of range for feature {r}")
        if cont.shape[0] != cat.shape[0]:
            raise DataError("continuous and categorical blocks disagree on n")

    @classmethod
    def empty(cls, n: int) -> "CovariateSet":
        return cls(np.zeros((n, 0)), np.zeros((n, 0), dtype=np.int64), ())

    @classmethod
    def continuous_only(cls, x) -> "CovariateSet":
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return cls(x, np.zeros((x.shape[0], 0), dtype=np.int64), ())

    @classmethod
    def categorical_only(cls, codes, arities) -> "CovariateSet":
        codes = np.atleast_2d(np.asarray(codes, dtype=np.int64))
        return cls(np.zeros((codes.shape[0], 0)), codes, tuple(arities))

    @property
    def n(self) -> int:
        return self.cont.shape[0]

    @property
    def p(self) -> int:
        return self.cont.shape[1]

    @property
    def R(self) -> int:
        return self.cat.shape[1]

    @property
    def is_empty(self) -> bool:
        return self.p == 0 and self.R == 0


# ---------------------------------------------------------------------------
# hyperparameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Hyperparams:
    """Model hyperparameters.

    alpha: concentration of the partition prior (0 disables cluster births).
    beta:  symmetric Beta prior parameter for block edge probabilities.
    s2:    within-cluster variance of the Gaussian covariate kernel.
    tau2:  prior variance of continuous cluster centers.
    gamma: Dirichlet concentration for categorical cluster centers.
    """

    alpha: float = 10.0
    beta: float = 1.0
    s2: float = 1.0
    tau2: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        for name in ("beta", "s2", "tau2", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


# ---------------------------------------------------------------------------
# sufficient-statistic counts
# ---------------------------------------------------------------------------

@dataclass
class BlockCounts:
    """Symmetric per-block edge counts M and dyad counts N.

    Diagonal entries count unordered within-block pairs once; off-diagonal
    entries count all cross-block pairs.
    """

    M: np.ndarray
    N: np.ndarray


def block_counts(net: Network, labels) -> BlockCounts:
    """Edge/dyad counts for every cluster pair, restricted to observed dyads."""
    z = np.asarray(labels)
    L = num_clusters(z)
    onehot = np.zeros((net.n, L))
    onehot[np.arange(net.n), z] = 1.0
    adj = (net.adj if net.mask is None else (net.adj & net.mask)).astype(float)
    M = onehot.T @ adj @ onehot
    if net.mask is None:
        sizes = cluster_sizes(z, L).astype(float)
        N = np.outer(sizes, sizes)
        np.fill_diagonal(N, sizes * (sizes - 1) / 2)
    else:
        N = onehot.T @ net.mask.astype(float) @ onehot
        np.fill_diagonal(N, np.diagonal(N) / 2)
    M = M.copy()
    np.fill_diagonal(M, np.diagonal(M) / 2)
    return BlockCounts(M=np.rint(M).astype(np.int64), N=np.rint(N).astype(np.int64))


def node_counts(net: Network, labels, i: int, L: int | None = None):
    """Per-cluster observed edge and dyad counts from node i.

    ``labels[i]`` is ignored: the counts are with respect to the partition of
    the remaining nodes, whose labels must already be dense.
    """
    z = np.asarray(labels)
    if L is None:
        L = num_clusters(np.delete(z, i)) if z.size > 1 else 0
    edges_to = np.bincount(z[net.edge_neighbors(i)], minlength=L)
    dn = net.dyad_neighbors(i)
    if dn is None:
        dyads_to = cluster_sizes(np.delete(z, i), L)
    else:
        dyads_to = np.bincount(z[dn], minlength=L)
    return edges_to, dyads_to
