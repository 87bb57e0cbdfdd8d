"""Regularized one-step operator fits (DMD with identity observables) and frozen fits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import SingularBlockError
from .simulate import TimeSeries

RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SnapshotPair:
    """``Yp`` holds z_0..z_{M-1}, ``Yf`` holds z_1..z_M (column-aligned)."""

    Yp: np.ndarray
    Yf: np.ndarray

    def __post_init__(self):
        if self.Yp.shape != self.Yf.shape:
            raise ValueError(f"snapshot shapes differ: {self.Yp.shape} vs {self.Yf.shape}")
        if self.Yp.ndim != 2 or self.Yp.shape[1] < 1:
            raise ValueError("need at least one snapshot pair")
        if not (np.all(np.isfinite(self.Yp)) and np.all(np.isfinite(self.Yf))):
            raise ValueError("snapshots contain NaN or Inf")

    @property
    def m(self) -> int:
        return self.Yp.shape[1]


@dataclass(frozen=True)
class FrozenDataset:
    """Inputs ``Z`` and targets ``Zfrozen`` where the frozen rows do not advance."""

    Z: np.ndarray
    Zfrozen: np.ndarray
    frozen: tuple

    def as_pair(self) -> SnapshotPair:
        return SnapshotPair(self.Z, self.Zfrozen)


def _data(ts) -> np.ndarray:
    return ts.data if isinstance(ts, TimeSeries) else np.asarray(ts, dtype=float)


def snapshots(ts) -> SnapshotPair:
    Z = _data(ts)
    if Z.ndim != 2 or Z.shape[1] < 2:
        raise ValueError("need at least 2 time steps to form snapshot pairs")
    return SnapshotPair(Z[:, :-1], Z[:, 1:])


def fit_koopman(sp: SnapshotPair, lam: float = 0.0) -> np.ndarray:
    """Ridge solution ``K = Yf Yp^T (Yp Yp^T + lam I)^-1``.

    Minimizes ``||K Yp - Yf||_F^2 + lam ||K||_F^2``; for ``lam = 0`` and
    full-row-rank ``Yp`` this is ordinary least squares.

    Raises:
        SingularBlockError: ``lam = 0`` and ``Yp Yp^T`` is rank deficient.
    """
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    Yp, Yf = sp.Yp, sp.Yf
    n = Yp.shape[0]
    G = Yp @ Yp.T + lam * np.eye(n)
    scale = max(np.abs(np.diag(G)).max(), np.finfo(float).tiny)
    if lam == 0 and np.linalg.matrix_rank(Yp, tol=RANK_RTOL * np.sqrt(scale) * max(Yp.shape)) < n:
        raise SingularBlockError(
            "Yp Yp^T is rank deficient; use a positive regularization lambda", block="Yp Yp^T")
    try:
        factor = cho_factor(G)
    except LinAlgError:
        raise SingularBlockError(
            "normal equations are not positive definite; use a larger lambda",
            block="Yp Yp^T + lambda I") from None
    # K G = Yf Yp^T  <=>  G K^T = Yp Yf^T (G symmetric)
    return cho_solve(factor, Yp @ Yf.T).T


def freeze_dataset(ts, frozen: Sequence[int]) -> FrozenDataset:
    """Targets advance one step except at ``frozen`` rows, which repeat the input."""
    Z = _data(ts)
    frozen = tuple(int(i) for i in frozen)
    n = Z.shape[0]
    if not frozen:
        raise ValueError("frozen set must be nonempty")
    if len(set(frozen)) >= n:
        raise ValueError("cannot freeze every variable: nothing would evolve")
    if min(frozen) < 0 or max(frozen) >= n:
        raise IndexError(f"frozen indices {frozen} out of range for {n} variables")
    if Z.shape[1] < 2:
        raise ValueError("need at least 2 time steps")
    inputs = Z[:, :-1].copy()
    targets = Z[:, 1:].copy()
    targets[list(frozen)] = inputs[list(frozen)]
    return FrozenDataset(inputs, targets, frozen)


def fit_frozen(ts, frozen: Sequence[int], lam: float = 0.0, clamp: bool = False) -> np.ndarray:
    """Frozen-dynamics operator; ``clamp`` replaces the fitted frozen rows by identity rows."""
    fd = freeze_dataset(ts, frozen)
    K = fit_koopman(fd.as_pair(), lam)
    if clamp:
        idx = list(fd.frozen)
        K[idx] = 0.0
        K[idx, idx] = 1.0
    return K


def standardize(ts: TimeSeries) -> TimeSeries:
    """Zero-mean, unit-variance rows; constant rows are only centred."""
    Z = ts.data
    mu = Z.mean(axis=1, keepdims=True)
    sd = Z.std(axis=1, keepdims=True)
    sd[sd == 0] = 1.0
    meta = dict(ts.meta, standardized=True)
    return TimeSeries((Z - mu) / sd, ts.names, ts.dt, meta)
