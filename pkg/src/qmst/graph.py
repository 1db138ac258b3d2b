"""Minimum spanning trees over distance matrices and tree comparison metrics.

Kruskal with union-find and a deterministic tie-break keeps trees
reproducible across rolling windows.  The two graph distances (an
affinity-matrix distance and the total effective-resistance perturbation)
operate on the binary adjacencies of two graphs over the same node set.
"""

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .errors import DataError

__all__ = [
    "QMst",
    "TreeMetrics",
    "build_mst",
    "tree_metrics",
    "deltacon0",
    "resistance_distance",
    "effective_resistance",
    "write_tree_json",
    "load_tree_json",
    "write_tree_dot",
]


@dataclass(frozen=True)
class QMst:
    """Spanning tree over labeled nodes: edge list, adjacency, degrees."""

    assets: tuple
    edges: tuple
    adjacency: np.ndarray
    degrees: np.ndarray
    q: float = None
    s: int = None

    @property
    def n_nodes(self):
        return len(self.assets)

    @property
    def total_weight(self):
        return float(sum(w for _, _, w in self.edges))


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        elif self.rank[ra] == self.rank[rb] and ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def build_mst(d):
    """Minimum spanning tree of a distance matrix (Kruskal, union-find).

    Ties are broken by (weight, min(i, j), max(i, j)) lexicographic order,
    so equal-weight inputs always produce the same tree.
    """
    values = d.values if hasattr(d, "values") else np.asarray(d, dtype=np.float64)
    assets = tuple(getattr(d, "assets", None) or (f"n{i}" for i in range(values.shape[0])))
    n = values.shape[0]
    if values.shape != (n, n) or n < 2:
        raise DataError("distance matrix must be square with at least 2 nodes")
    if np.any(~np.isfinite(values)) or np.any(values < 0):
        raise DataError("distances must be finite and non-negative")
    iu, ju = np.triu_indices(n, 1)
    w = values[iu, ju]
    order = np.lexsort((ju, iu, w))
    uf = _UnionFind(n)
    edges = []
    adjacency = np.zeros((n, n), dtype=np.uint8)
    for k in order:
        i, j = int(iu[k]), int(ju[k])
        if uf.union(i, j):
            edges.append((i, j, float(w[k])))
            adjacency[i, j] = adjacency[j, i] = 1
            if len(edges) == n - 1:
                break
    if len(edges) != n - 1:
        raise DataError("distance matrix produced a disconnected graph")
    degrees = adjacency.sum(axis=0).astype(np.int64)
    return QMst(
        assets=assets,
        edges=tuple(edges),
        adjacency=adjacency,
        degrees=degrees,
        q=getattr(d, "q", None),
        s=getattr(d, "s", None),
    )


@dataclass(frozen=True)
class TreeMetrics:
    k_max: int
    k_argmax: str
    avg_path_len: float


def _hop_distances(adjacency):
    g = csr_matrix(adjacency)
    return shortest_path(g, method="D", unweighted=True, directed=False)


def tree_metrics(t):
    """Maximum node degree (ties to the lexicographically smallest label)
    and the mean hop distance over unordered node pairs."""
    k_max = int(t.degrees.max())
    tied = [t.assets[i] for i in np.nonzero(t.degrees == k_max)[0]]
    hops = _hop_distances(t.adjacency)
    iu = np.triu_indices(t.n_nodes, 1)
    return TreeMetrics(
        k_max=k_max,
        k_argmax=min(tied),
        avg_path_len=float(hops[iu].mean()),
    )


def _check_adjacency_pair(a1, a2):
    a1 = np.asarray(a1)
    a2 = np.asarray(a2)
    if a1.shape != a2.shape or a1.ndim != 2 or a1.shape[0] != a1.shape[1]:
        raise DataError(f"adjacency shapes differ or are not square: {a1.shape} vs {a2.shape}")
    for a in (a1, a2):
        if not np.array_equal(a, a.T):
            raise DataError("adjacency must be symmetric")
        if not np.isin(a, (0, 1)).all():
            raise DataError("adjacency must be binary")
    return a1.astype(np.float64), a2.astype(np.float64)


def _affinity(a, eps):
    n = a.shape[0]
    deg = a.sum(axis=0)
    m = np.eye(n) + (eps * eps) * np.diag(deg) - eps * a
    s = np.linalg.inv(m)
    # m is an M-matrix for this eps, so s is non-negative up to round-off
    tiny = s.min()
    if tiny < -1e-12:
        raise AssertionError(f"affinity matrix has negative entry {tiny}")
    return np.clip(s, 0.0, None)


def deltacon0(a1, a2):
    """Affinity-based distance between two graphs on the same node set.

    Affinities are S = (I + eps^2 D - eps A)^-1 with
    eps = 1 / (1 + max degree); the distance is the root Euclidean
    distance between the elementwise square roots of the two affinity
    matrices.
    """
    a1, a2 = _check_adjacency_pair(a1, a2)
    kmax = max(a1.sum(axis=0).max(), a2.sum(axis=0).max())
    eps = 1.0 / (1.0 + kmax)
    s1 = _affinity(a1, eps)
    s2 = _affinity(a2, eps)
    diff = np.sqrt(s1) - np.sqrt(s2)
    return float(np.sqrt(np.sum(diff * diff)))


def effective_resistance(adjacency):
    """Pairwise effective resistances of a connected unweighted graph."""
    a = np.asarray(adjacency, dtype=np.float64)
    ncomp, _ = connected_components(csr_matrix(a), directed=False)
    if ncomp != 1:
        raise DataError(f"graph is disconnected ({ncomp} components)")
    lap = np.diag(a.sum(axis=0)) - a
    pinv = np.linalg.pinv(lap)
    dg = np.diagonal(pinv)
    return dg[:, None] + dg[None, :] - 2.0 * pinv


def resistance_distance(a1, a2):
    """Sum over unordered pairs of |R1_ij - R2_ij| between two graphs."""
    a1, a2 = _check_adjacency_pair(a1, a2)
    r1 = effective_resistance(a1)
    r2 = effective_resistance(a2)
    iu = np.triu_indices(a1.shape[0], 1)
    return float(np.abs(r1 - r2)[iu].sum())


def write_tree_json(path, tree):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree_json_dict(tree), fh, sort_keys=True)
        fh.write("\n")


def tree_json_dict(tree):
    d = {
        "assets": list(tree.assets),
        "edges": [{"i": i, "j": j, "w": w} for i, j, w in tree.edges],
    }
    if tree.q is not None:
        d["q"] = tree.q
    if tree.s is not None:
        d["s"] = tree.s
    return d


def load_tree_json(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    assets = tuple(d["assets"])
    n = len(assets)
    adjacency = np.zeros((n, n), dtype=np.uint8)
    edges = []
    for e in d["edges"]:
        i, j, w = int(e["i"]), int(e["j"]), float(e["w"])
        adjacency[i, j] = adjacency[j, i] = 1
        edges.append((i, j, w))
    return QMst(
        assets=assets,
        edges=tuple(edges),
        adjacency=adjacency,
        degrees=adjacency.sum(axis=0).astype(np.int64),
        q=d.get("q"),
        s=d.get("s"),
    )


def write_tree_dot(path, tree, sectors=None):
    """Graph-description text (DOT): node statements with labels, the
    sector as the node color key, and weighted edge statements."""
    lines = ["graph tree {"]
    for idx, a in enumerate(tree.assets):
        attrs = [f'label="{a}"']
        if sectors is not None:
            attrs.append(f'color="{sectors[idx]}"')
        lines.append(f'  n{idx} [{", ".join(attrs)}];')
    for i, j, w in tree.edges:
        lines.append(f"  n{i} -- n{j} [weight={w!r}];")
    lines.append("}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
