"""Independent reference computations used by the tests."""
import itertools
import math

import numpy as np


def wcss(X, labels):
    labels = np.asarray(labels)
    return sum(((X[labels == c] - X[labels == c].mean(axis=0)) ** 2).sum()
               for c in set(labels.tolist()))


def best_bipartition(X):
    """Minimum WCSS over every split of the rows into two nonempty sets."""
    n = len(X)
    best = np.inf
    for mask in range(1, 2 ** (n - 1)):
        labels = np.array([(mask >> i) & 1 for i in range(n)])
        best = min(best, wcss(X, labels))
    return best


def two_blobs(n, sep, rng):
    lab = rng.integers(0, 2, n)
    u = rng.standard_normal(2)
    return rng.standard_normal((n, 2)) + sep * lab[:, None] * u / np.linalg.norm(u)


def naive_average_linkage(D):
    """Recompute every cluster distance from raw members at each step.

    Averages use exactly rounded sums so that they are independent of
    summation order.
    """
    G = len(D)
    clusters = {i: [i] for i in range(G)}
    merges = []
    for step in range(G - 1):
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            pairs = [D[i, j] for i in clusters[a] for j in clusters[b]]
            d = math.fsum(pairs) / len(pairs)
            if best is None or d < best[0]:
                best = (d, a, b)
        d, a, b = best
        clusters[G + step] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, d))
    return merges


def mc_conditional_entropy(A, sigma, S, y, n, rng):
    """Half log-det of the residual covariance of y(t+1) regressed on y(t).

    State samples are drawn from N(0, S); the standard error is about
    ``sqrt(len(y) / (2 n))``.
    """
    L = np.linalg.cholesky(S)
    Z = L @ rng.standard_normal((len(S), n))
    Znext = A @ Z + sigma * rng.standard_normal(Z.shape)
    Y, Yn = Z[y], Znext[y]
    B = np.linalg.lstsq(Y.T, Yn.T, rcond=None)[0]
    R = Yn - B.T @ Y
    return 0.5 * np.linalg.slogdet(R @ R.T / n)[1]
