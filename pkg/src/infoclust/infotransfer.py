"""Information transfer between state subspaces of linear(ized) stochastic systems.

The transfer from ``x1`` to ``y`` over one step is the conditional entropy
of ``y(t+1)`` given ``y(t)`` under the true dynamics minus the same entropy
when ``x1`` is held fixed over the step. All entropies are Gaussian and
reported in nats without the ``(2 pi e)`` constant, which cancels.
"""
from __future__ import annotations

import hashlib
import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, cholesky

from .errors import ConvergenceError, InfoclustError, NumericalDomainError
from .koopman import fit_frozen, fit_koopman, snapshots
from .simulate import TimeSeries
from .statespace import (LinearModel, SubspacePartition, check_covariance, covariance_step,
                         schur_complement, spectral_radius, steady_state_covariance)

STEADY = "steady"


@dataclass(frozen=True)
class TransferValue:
    value: float
    t: Union[int, str] = STEADY

    def __float__(self):
        return float(self.value)


@dataclass
class TransferMatrix:
    """Directed transfers between labelled variable groups.

    ``T[i, j]`` is the transfer from group ``i`` to group ``j``; the diagonal
    is NaN (undefined). Pairs that failed keep NaN and an entry in
    ``annotations`` keyed ``"i,j"``.
    """

    groups: list
    T: np.ndarray
    provenance: dict = field(default_factory=dict)
    annotations: dict = field(default_factory=dict)

    @property
    def labels(self) -> list:
        return [g[0] for g in self.groups]

    def to_json(self) -> str:
        rows = [[None if (i == j or not np.isfinite(v)) else float(v)
                 for j, v in enumerate(row)] for i, row in enumerate(self.T)]
        doc = {
            "groups": [{"label": lbl, "indices": list(idx)} for lbl, idx in self.groups],
            "transfer": rows,
            "provenance": self.provenance,
            "annotations": self.annotations,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TransferMatrix":
        doc = json.loads(text)
        groups = [(g["label"], tuple(g["indices"])) for g in doc["groups"]]
        T = np.array([[np.nan if v is None else v for v in row] for row in doc["transfer"]],
                     dtype=float).reshape(len(groups), len(groups))
        return cls(groups, T, doc.get("provenance", {}), doc.get("annotations", {}))


def conditional_entropy_term(Ayx, Sschur, noise_var: float) -> float:
    """``0.5 * log det(Ayx Sschur Ayx^T + noise_var I)`` via a Cholesky factor."""
    Ayx = np.atleast_2d(np.asarray(Ayx, dtype=float))
    Sschur = np.atleast_2d(np.asarray(Sschur, dtype=float))
    if not noise_var > 0:
        raise NumericalDomainError(f"noise_var must be positive, got {noise_var}")
    M = Ayx @ Sschur @ Ayx.T
    M = 0.5 * (M + M.T) + noise_var * np.eye(Ayx.shape[0])
    try:
        L = cholesky(M, lower=True)
    except LinAlgError:
        raise NumericalDomainError("determinant argument is not positive definite") from None
    return float(np.sum(np.log(np.diag(L))))


def _entropy_terms(A, p: SubspacePartition, S, noise_var):
    """Numerator and denominator entropies of the closed-form linear transfer."""
    x, y, x2 = list(p.x), list(p.y), list(p.x2)
    h_full = conditional_entropy_term(A[np.ix_(y, x)], schur_complement(S, x, y, "Sigma_y"),
                                      noise_var)
    if x2:
        h_frozen = conditional_entropy_term(A[np.ix_(y, x2)],
                                            schur_complement(S, x2, y, "Sigma_y"), noise_var)
    else:
        h_frozen = 0.5 * len(y) * math.log(noise_var)
    return h_full, h_frozen


def linear_transfer(m: LinearModel, p: SubspacePartition, S, t: Union[int, str] = STEADY
                    ) -> TransferValue:
    """Closed-form one-step transfer ``x1 -> y`` at covariance ``S``."""
    p.check(m.n)
    h_full, h_frozen = _entropy_terms(m.A, p, np.asarray(S, dtype=float), m.sigma ** 2)
    return TransferValue(h_full - h_frozen, t)


def steady_state_transfer(m: LinearModel, p: SubspacePartition, S0=None, tol: float = 1e-8,
                          max_iter: int = 10_000) -> TransferValue:
    """Iterate the covariance recursion until successive transfers differ by < ``tol``."""
    p.check(m.n)
    rho = m.spectral_radius()
    if rho >= 1.0:
        raise ConvergenceError(f"spectral radius {rho:.6g} >= 1: no steady state")
    S = np.eye(m.n) if S0 is None else check_covariance(S0)
    prev = linear_transfer(m, p, S, 0).value
    for t in range(1, max_iter + 1):
        S = covariance_step(m, S)
        cur = linear_transfer(m, p, S, t).value
        if abs(cur - prev) < tol:
            return TransferValue(cur, STEADY)
        prev = cur
    raise ConvergenceError(f"transfer did not converge in {max_iter} steps", last=(prev, cur))


def pinned_covariance(S, frozen: Sequence[int]) -> np.ndarray:
    """Covariance with the ``frozen`` coordinates held at a fixed value (zero variance)."""
    S = np.array(S, dtype=float)
    idx = list(frozen)
    S[idx, :] = 0.0
    S[:, idx] = 0.0
    return S


def frozen_transfer_step(A, A_frozen, p: SubspacePartition, S, noise_var: float) -> float:
    """One-step data-driven transfer at covariance ``S``.

    The full entropy uses the fitted operator ``A``; the frozen entropy uses
    the frozen fit's ``y <- (x1, x2)`` block with ``x1`` pinned in ``S``.
    With exact operators this equals :func:`linear_transfer`.
    """
    x, y = list(p.x), list(p.y)
    h = conditional_entropy_term(A[np.ix_(y, x)], schur_complement(S, x, y, "Sigma_y"), noise_var)
    Sf = pinned_covariance(S, p.x1)
    hf = conditional_entropy_term(A_frozen[np.ix_(y, x)],
                                  schur_complement(Sf, x, y, "Sigma_y (frozen)"), noise_var)
    return h - hf


def _resolve_noise(lam, noise_var):
    nv = lam if noise_var is None else noise_var
    if not nv > 0:
        raise NumericalDomainError("noise_var must be positive (it defaults to lambda; set it "
                                   "explicitly when lambda is 0)")
    return float(nv)


def _iterate_pair(A, A_frozen, p, S0, noise_var, tol, max_iter):
    n = A.shape[0]
    rho = spectral_radius(A)
    if rho >= 1.0:
        raise ConvergenceError(f"fitted operator has spectral radius {rho:.6g} >= 1")
    model = LinearModel(A, math.sqrt(noise_var))
    S = np.eye(n) if S0 is None else check_covariance(S0)
    prev = frozen_transfer_step(A, A_frozen, p, S, noise_var)
    for _ in range(max_iter):
        S = covariance_step(model, S)
        cur = frozen_transfer_step(A, A_frozen, p, S, noise_var)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise ConvergenceError(f"transfer did not converge in {max_iter} steps", last=(prev, cur))


def transfer_from_data(ts: TimeSeries, p: SubspacePartition, lam: float = 0.05,
                       noise_var: float | None = None, S0=None, tol: float = 1e-8,
                       max_iter: int = 10_000, clamp_frozen: bool = False) -> TransferValue:
    """Steady-state transfer ``x1 -> y`` estimated from one trajectory.

    Fits the one-step operator and the ``x1``-frozen operator by ridge
    regression, propagates the covariance of the fitted model from ``S0``
    with noise variance ``noise_var`` (defaults to ``lam``) and returns the
    entropy difference once it stops changing.
    """
    n = ts.n_vars
    p.check(n)
    if ts.n_steps - 1 < n:
        warnings.warn(f"only {ts.n_steps - 1} snapshot pairs for {n} variables; "
                      "the fit is poorly determined", stacklevel=2)
    nv = _resolve_noise(lam, noise_var)
    A = fit_koopman(snapshots(ts), lam)
    A_frozen = fit_frozen(ts, p.x1, lam, clamp=clamp_frozen)
    return TransferValue(_iterate_pair(A, A_frozen, p, S0, nv, tol, max_iter), STEADY)


def data_digest(ts: TimeSeries) -> str:
    h = hashlib.sha256()
    h.update("\x1f".join(ts.names).encode())
    h.update(np.ascontiguousarray(ts.data, dtype="<f8").tobytes())
    return h.hexdigest()


def _check_groups(groups, n):
    groups = [(str(lbl), tuple(int(i) for i in idx)) for lbl, idx in groups]
    seen = set()
    for lbl, idx in groups:
        if not idx:
            raise ValueError(f"group {lbl!r} is empty")
        if seen & set(idx):
            raise ValueError(f"group {lbl!r} overlaps another group")
        seen |= set(idx)
        if max(idx) >= n or min(idx) < 0:
            raise IndexError(f"group {lbl!r} has an index out of range for {n} variables")
    return groups


def _fill_matrix(groups, n, pair_value, workers):
    G = len(groups)
    T = np.full((G, G), np.nan)
    notes = {}
    pairs = [(i, j) for i in range(G) for j in range(G) if i != j]

    def run(ij):
        i, j = ij
        p = SubspacePartition.complement(n, groups[i][1], groups[j][1])
        try:
            return ij, pair_value(i, p), None
        except InfoclustError as err:
            return ij, np.nan, f"{err.code}: {err}"

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, pairs))
    else:
        results = [run(ij) for ij in pairs]
    for (i, j), v, note in results:
        T[i, j] = v
        if note:
            notes[f"{i},{j}"] = note
    return T, notes


def transfer_matrix(ts: TimeSeries, groups, lam: float = 0.05, noise_var: float | None = None,
                    S0=None, tol: float = 1e-8, max_iter: int = 100_000,
                    clamp_frozen: bool = False, workers: int | None = None,
                    seed: int | None = None) -> TransferMatrix:
    """All ordered group pairs; remaining variables condition each pair.

    The full fit and its steady-state covariance are computed once and shared
    by every pair; each source group gets its own frozen fit. Entries are
    evaluated at the converged covariance and checked for stationarity
    against one further step of the recursion (``tol``).
    """
    n = ts.n_vars
    groups = _check_groups(groups, n)
    nv = _resolve_noise(lam, noise_var)
    A = fit_koopman(snapshots(ts), lam)
    model = LinearModel(A, math.sqrt(nv))
    S = steady_state_covariance(model, S0, tol=1e-10 * max(1.0, nv), max_iter=max_iter)
    S_next = covariance_step(model, S)
    frozen_fits = {}

    def frozen_fit(i):
        if i not in frozen_fits:
            frozen_fits[i] = fit_frozen(ts, groups[i][1], lam, clamp=clamp_frozen)
        return frozen_fits[i]

    # frozen fits are built up front so threaded evaluation only reads shared state
    for i in range(len(groups)):
        frozen_fit(i)

    def pair_value(i, p):
        Af = frozen_fits[i]
        v = frozen_transfer_step(A, Af, p, S, nv)
        v_next = frozen_transfer_step(A, Af, p, S_next, nv)
        if abs(v_next - v) >= tol:
            raise ConvergenceError(f"transfer not stationary at the converged covariance "
                                   f"({v} vs {v_next})", last=(v, v_next))
        return v_next

    T, notes = _fill_matrix(groups, n, pair_value, workers)
    provenance = {
        "mode": "data", "lambda": lam, "noise_var": nv, "tol": tol,
        "clamp_frozen": clamp_frozen, "seed": seed, "data_digest": data_digest(ts),
        "names": list(ts.names),
    }
    return TransferMatrix(groups, T, provenance, notes)


def model_transfer_matrix(m: LinearModel, groups, S0=None, tol: float = 1e-8,
                          max_iter: int = 100_000, workers: int | None = None) -> TransferMatrix:
    """Closed-form steady-state transfers between groups of a known model."""
    groups = _check_groups(groups, m.n)
    S = steady_state_covariance(m, S0, tol=1e-10 * max(1.0, m.sigma ** 2), max_iter=max_iter)
    S_next = covariance_step(m, S)

    def pair_value(_, p):
        v = linear_transfer(m, p, S).value
        v_next = linear_transfer(m, p, S_next).value
        if abs(v_next - v) >= tol:
            raise ConvergenceError("transfer not stationary at the converged covariance",
                                   last=(v, v_next))
        return v_next

    T, notes = _fill_matrix(groups, m.n, pair_value, workers)
    provenance = {"mode": "model", "sigma": m.sigma, "tol": tol, "names": list(m.names)}
    return TransferMatrix(groups, T, provenance, notes)
