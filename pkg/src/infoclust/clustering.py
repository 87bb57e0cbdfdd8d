"""Spectral, k-means and average-linkage hierarchical clustering of influence graphs."""
from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .influence import InfluenceGraph
from .infotransfer import TransferMatrix

DEGREE_FLOOR = 1e-12


@dataclass
class ClusterLabels:
    """Cluster id per node; ids are renumbered in order of first appearance."""

    labels: list
    k: int
    method: str
    seed: int | None = None
    wcss: float | None = None
    warning: str | None = None
    nodes: list = field(default_factory=list)

    def to_csv(self, comment: str | None = None) -> str:
        out = io.StringIO()
        if comment:
            out.write(f"# {comment}\n")
        out.write("node,label\n")
        nodes = self.nodes or [str(i) for i in range(len(self.labels))]
        for node, lbl in zip(nodes, self.labels):
            out.write(f"{node},{lbl}\n")
        return out.getvalue()

    def groups(self) -> list:
        """Member index lists, one per cluster id."""
        return [[i for i, l in enumerate(self.labels) if l == c] for c in range(self.k)]


def canonical_labels(labels) -> list:
    mapping = {}
    for lbl in labels:
        mapping.setdefault(int(lbl), len(mapping))
    return [mapping[int(lbl)] for lbl in labels]


# -- symmetrization ----------------------------------------------------------

def _transfer_array(src) -> np.ndarray:
    if isinstance(src, InfluenceGraph):
        T = np.array(src.transfer, dtype=float)
        T[src.dist == src.sentinel] = 0.0
        return T
    if isinstance(src, TransferMatrix):
        return np.array(src.T, dtype=float)
    return np.array(src, dtype=float)


def symmetrize_affinity(src) -> np.ndarray:
    """``W = (|T| + |T|^T) / 2`` with a zero diagonal; missing transfers count as 0.

    Accepts a :class:`TransferMatrix`, an :class:`InfluenceGraph` (sub-threshold
    transfers dropped) or a square array of transfers.
    """
    T = np.abs(_transfer_array(src))
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"expected a square matrix, got {T.shape}")
    T[~np.isfinite(T)] = 0.0
    W = 0.5 * (T + T.T)
    np.fill_diagonal(W, 0.0)
    return W


def symmetrize_distance(g) -> np.ndarray:
    """Elementwise ``min(d[i, j], d[j, i])`` with a zero diagonal."""
    D = np.array(g.dist if isinstance(g, InfluenceGraph) else g, dtype=float)
    S = np.minimum(D, D.T)
    np.fill_diagonal(S, 0.0)
    return S


# -- k-means -----------------------------------------------------------------

def _sq_dists(X, C):
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(X, k, rng):
    n = len(X)
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    while len(centers) < k:
        total = d2.sum()
        if total <= 0:
            break
        idx = rng.choice(n, p=d2 / total)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X, C, max_iter=300):
    """Lloyd iterations from centers ``C``; returns (labels, centers, wcss history)."""
    history = []
    labels = None
    C = C.copy()
    slack = 1e-12 * float((X ** 2).sum()) + 1e-300
    for _ in range(max_iter):
        D = _sq_dists(X, C)
        new_labels = np.argmin(D, axis=1)  # first minimum: ties go to the lowest index
        wcss = float(D[np.arange(len(X)), new_labels].sum())
        if history:
            assert wcss <= history[-1] + slack, "k-means WCSS increased"
        history.append(wcss)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        own = D[np.arange(len(X)), labels].copy()
        for c in range(len(C)):
            members = labels == c
            if members.any():
                C[c] = X[members].mean(axis=0)
            elif own.max() > 0:
                # empty cluster takes the point farthest from its own center
                far = int(np.argmax(own))
                C[c] = X[far]
                own[far] = 0.0
    return labels, C, history


def kmeans_cluster(points, k: int, seed: int = 0, restarts: int = 30,
                   max_iter: int = 300) -> ClusterLabels:
    """k-means++ seeded Lloyd iterations; best WCSS over ``restarts`` runs.

    Run ``r`` draws from ``default_rng(seed + r)``. Ties in WCSS go to the
    lowest run index.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n = len(X)
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in [1, {n}]")
    best = None
    for r in range(max(1, restarts)):
        rng = np.random.default_rng(seed + r)
        C = _kmeans_pp(X, k, rng)
        labels, C, history = _lloyd(X, C, max_iter)
        if best is None or history[-1] < best[1]:
            best = (labels, history[-1])
    labels, wcss = best
    labels = canonical_labels(labels)
    k_eff = len(set(labels))
    warning = None
    if k_eff < k:
        warning = f"only {k_eff} distinct cluster(s) found for k={k}: points are degenerate"
        warnings.warn(warning, stacklevel=2)
    return ClusterLabels(labels, k_eff, "kmeans", seed, wcss, warning)


# -- spectral ----------------------------------------------------------------

def normalized_laplacian(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    deg = W.sum(axis=1)
    deg = np.where(deg > 0, deg, DEGREE_FLOOR)
    inv_sqrt = 1.0 / np.sqrt(deg)
    return np.eye(len(W)) - inv_sqrt[:, None] * W * inv_sqrt[None, :]


def _check_affinity(W, k):
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValueError(f"affinity must be square, got {W.shape}")
    if not np.allclose(W, W.T, rtol=0, atol=1e-12 * max(1.0, np.abs(W).max(initial=0))):
        raise ValueError("affinity must be symmetric")
    if (W < 0).any():
        raise ValueError("affinity must be nonnegative")
    if not 2 <= k <= len(W):
        raise ValueError(f"k={k} must lie in [2, {len(W)}]")
    if not W.any():
        raise ValueError("affinity is all zero: nothing to cluster")
    return W


def spectral_embedding(W, k: int, normalize_rows: bool = True) -> np.ndarray:
    """Rows of the ``k`` lowest eigenvectors of ``I - D^-1/2 W D^-1/2``."""
    W = _check_affinity(W, k)
    _, V = np.linalg.eigh(normalized_laplacian(W))
    E = V[:, :k].copy()
    # fix eigenvector signs so repeated runs give identical embeddings
    pivot = np.argmax(np.abs(E), axis=0)
    E *= np.where(E[pivot, np.arange(k)] < 0, -1.0, 1.0)
    if normalize_rows:
        norms = np.linalg.norm(E, axis=1, keepdims=True)
        E = np.divide(E, norms, out=np.zeros_like(E), where=norms > 0)
    return E


def spectral_clustering(W, k: int, seed: int = 0, restarts: int = 30) -> ClusterLabels:
    E = spectral_embedding(W, k)
    out = kmeans_cluster(E, k, seed, restarts)
    out.method = "spectral"
    return out


def embedding_kmeans(W, k: int, seed: int = 0, restarts: int = 30) -> ClusterLabels:
    """k-means on the raw (not row-normalized) spectral embedding."""
    E = spectral_embedding(W, k, normalize_rows=False)
    return kmeans_cluster(E, k, seed, restarts)


# -- hierarchical ------------------------------------------------------------

@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    new_id: int
    size: int


@dataclass
class Dendrogram:
    """Agglomeration record; leaves are ids ``0..G-1``, merge ``s`` creates ``G+s``."""

    merges: list
    leaves: list

    def members(self, cid: int) -> list:
        G = len(self.leaves)
        if cid < G:
            return [cid]
        m = self.merges[cid - G]
        return self.members(m.left) + self.members(m.right)

    def cut(self, k: int) -> ClusterLabels:
        """Labels after undoing the last ``k - 1`` merges."""
        G = len(self.leaves)
        if not 1 <= k <= G:
            raise ValueError(f"k={k} must lie in [1, {G}]")
        roots = set(range(G))
        for m in self.merges[:G - k]:
            roots -= {m.left, m.right}
            roots.add(m.new_id)
        labels = [0] * G
        for c, root in enumerate(sorted(roots, key=lambda r: min(self.members(r)))):
            for leaf in self.members(root):
                labels[leaf] = c
        return ClusterLabels(labels, k, "hierarchical", nodes=list(self.leaves))

    def to_linkage_matrix(self) -> np.ndarray:
        """SciPy-compatible ``(G-1, 4)`` linkage matrix."""
        return np.array([[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float)

    def to_json(self, comment: str | None = None) -> str:
        doc = {
            "leaves": list(self.leaves),
            "merges": [{"left": m.left, "right": m.right, "height": m.height,
                        "new_id": m.new_id, "size": m.size} for m in self.merges],
        }
        if comment:
            doc["comment"] = comment
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Dendrogram":
        doc = json.loads(text)
        merges = [Merge(m["left"], m["right"], m["height"], m["new_id"], m["size"])
                  for m in doc["merges"]]
        return cls(merges, doc["leaves"])

    def to_newick(self, comment: str | None = None) -> str:
        """Newick tree; each branch length is parent height minus child height."""
        G = len(self.leaves)
        heights = {i: 0.0 for i in range(G)}
        for m in self.merges:
            heights[m.new_id] = m.height

        def label(s):
            s = str(s)
            if any(ch in s for ch in " ()[]':;,"):
                return "'" + s.replace("'", "''") + "'"
            return s

        def render(cid, parent_h):
            blen = repr(float(parent_h - heights[cid]))
            if cid < G:
                return f"{label(self.leaves[cid])}:{blen}"
            m = self.merges[cid - G]
            return f"({render(m.left, heights[cid])},{render(m.right, heights[cid])}):{blen}"

        if not self.merges:
            body = label(self.leaves[0]) if self.leaves else ""
        else:
            root = self.merges[-1]
            body = (f"({render(root.left, root.height)},"
                    f"{render(root.right, root.height)})")
        prefix = f"[{comment}]" if comment else ""
        return prefix + body + ";\n"


def hierarchical_cluster(dist_sym, leaves=None, linkage: str = "average") -> Dendrogram:
    """Average-linkage agglomeration; ties go to the lowest ``(left, right)`` id pair."""
    if linkage != "average":
        raise ValueError(f"unsupported linkage {linkage!r}; only 'average' is implemented")
    D = np.asarray(dist_sym, dtype=float)
    G = len(D)
    if D.ndim != 2 or D.shape != (G, G):
        raise ValueError(f"distance matrix must be square, got {D.shape}")
    if not np.array_equal(D, D.T) or (D < 0).any() or np.diag(D).any():
        raise ValueError("distances must be symmetric, nonnegative, with a zero diagonal")
    leaves = list(leaves) if leaves is not None else [str(i) for i in range(G)]
    members = {a: [a] for a in range(G)}

    def average(a, b):
        # exactly rounded sum, so the result does not depend on member order
        block = D[np.ix_(members[a], members[b])]
        return math.fsum(block.ravel().tolist()) / block.size

    # avg[(a, b)] with a < b: average distance between active clusters a and b
    avg = {(a, b): float(D[a, b]) for a in range(G) for b in range(a + 1, G)}
    merges = []
    for step in range(G - 1):
        d, a, b = min((d, a, b) for (a, b), d in avg.items())
        new = G + step
        members[new] = members.pop(a) + members.pop(b)
        merges.append(Merge(a, b, d, new, len(members[new])))
        avg = {key: v for key, v in avg.items() if a not in key and b not in key}
        for c in members:
            if c != new:
                avg[(c, new)] = average(c, new)
    return Dendrogram(merges, leaves)
