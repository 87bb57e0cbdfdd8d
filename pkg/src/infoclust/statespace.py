"""Block algebra and covariance propagation for z(t+1) = A z(t) + sigma xi(t)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, SingularBlockError

COND_CAP = 1e12
SYM_TOL = 1e-10
ROLES = ("x1", "x2", "y")


def _frozen_array(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class LinearModel:
    """One-step linear stochastic dynamics.

    Args:
        A: (N, N) dynamics matrix.
        sigma: noise scale (standard deviation per coordinate).
        names: N variable labels; defaults to ``z0 .. z{N-1}``.
        meta: free-form provenance (generator parameters, warnings).
    """

    A: np.ndarray
    sigma: float = 1.0
    names: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = _frozen_array(self.A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        names = tuple(self.names) or tuple(f"z{i}" for i in range(A.shape[0]))
        if len(names) != A.shape[0]:
            raise ValueError(f"{len(names)} names for {A.shape[0]} states")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def spectral_radius(self) -> float:
        return spectral_radius(self.A)


def spectral_radius(A) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(A, dtype=float)))))


@dataclass(frozen=True)
class SubspacePartition:
    """Source ``x1``, conditioning ``x2`` (may be empty) and target ``y`` index sets."""

    x1: tuple
    x2: tuple
    y: tuple

    def __init__(self, x1: Sequence[int], x2: Sequence[int], y: Sequence[int]):
        object.__setattr__(self, "x1", tuple(int(i) for i in x1))
        object.__setattr__(self, "x2", tuple(int(i) for i in x2))
        object.__setattr__(self, "y", tuple(int(i) for i in y))
        if not self.x1 or not self.y:
            raise ValueError("x1 and y must be nonempty")
        everything = self.x1 + self.x2 + self.y
        if len(set(everything)) != len(everything):
            raise ValueError(f"index sets overlap: {self}")
        if min(everything) < 0:
            raise IndexError(f"negative index in {self}")

    @classmethod
    def complement(cls, n: int, source: Sequence[int], target: Sequence[int]):
        """Partition where every index outside source and target conditions."""
        used = set(source) | set(target)
        return cls(source, [i for i in range(n) if i not in used], target)

    @property
    def x(self) -> tuple:
        return self.x1 + self.x2

    def check(self, n: int) -> None:
        top = max(self.x1 + self.x2 + self.y)
        if top >= n:
            raise IndexError(f"index {top} out of range for {n} variables")

    def order(self) -> list:
        return list(self.x1 + self.x2 + self.y)


@dataclass(frozen=True)
class BlockView:
    """The 3x3 block split of a matrix by ``(x1, x2, y)``.

    ``view["y", "x1"]`` is the y-rows / x1-columns block; ``view["y", "x"]``
    stacks x1 and x2 columns.
    """

    M: np.ndarray
    partition: SubspacePartition

    def _idx(self, role):
        if role == "x":
            return list(self.partition.x)
        if role not in ROLES:
            raise KeyError(role)
        return list(getattr(self.partition, role))

    def __getitem__(self, key):
        r, c = key
        return self.M[np.ix_(self._idx(r), self._idx(c))]

    def assemble(self) -> np.ndarray:
        return np.block([[self[r, c] for c in ROLES] for r in ROLES])


def partition_blocks(A, p: SubspacePartition) -> BlockView:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got {A.shape}")
    p.check(A.shape[0])
    return BlockView(A, p)


def check_covariance(S, tol: float = SYM_TOL) -> np.ndarray:
    """Validate symmetry and positive semidefiniteness; returns a float copy."""
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"covariance must be square, got {S.shape}")
    if np.max(np.abs(S - S.T), initial=0.0) > tol * max(1.0, np.max(np.abs(S), initial=0.0)):
        raise ValueError("covariance is not symmetric")
    if S.size and np.linalg.eigvalsh(S).min() < -tol * max(1.0, np.abs(S).max()):
        raise ValueError("covariance is not positive semidefinite")
    return S


def _sym(S):
    return 0.5 * (S + S.T)


def schur_complement(S, keep: Sequence[int], condition: Sequence[int], name: str = "") -> np.ndarray:
    """``S[k,k] - S[k,c] S[c,c]^-1 S[c,k]``: covariance of ``keep`` given ``condition``."""
    S = np.asarray(S, dtype=float)
    keep, condition = list(keep), list(condition)
    Skk = S[np.ix_(keep, keep)]
    if not condition:
        return _sym(Skk)
    Scc = S[np.ix_(condition, condition)]
    label = name or f"S[{condition}]"
    cond = np.linalg.cond(Scc) if Scc.size else 1.0
    if not np.isfinite(cond) or cond > COND_CAP:
        raise SingularBlockError(
            f"conditioning block {label} is singular (condition number {cond:.3g})", block=label)
    Skc = S[np.ix_(keep, condition)]
    return _sym(Skk - Skc @ np.linalg.solve(Scc, Skc.T))


def covariance_step(m: LinearModel, S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.shape != m.A.shape:
        raise ValueError(f"covariance shape {S.shape} does not match A {m.A.shape}")
    return _sym(m.A @ S @ m.A.T) + m.sigma ** 2 * np.eye(m.n)


def steady_state_covariance(m: LinearModel, S0=None, tol: float = 1e-10,
                            max_iter: int = 100_000) -> np.ndarray:
    """Fixed point of :func:`covariance_step` by direct iteration.

    Raises:
        ConvergenceError: if ``A`` is not strictly stable or ``max_iter``
            steps do not bring the Frobenius residual below ``tol``.
    """
    rho = m.spectral_radius()
    if rho >= 1.0:
        raise ConvergenceError(f"spectral radius {rho:.6g} >= 1: no steady state", residual=np.inf)
    S = np.eye(m.n) if S0 is None else check_covariance(S0)
    residual = np.inf
    for _ in range(max_iter):
        S_next = covariance_step(m, S)
        residual = np.linalg.norm(S_next - S)
        S = S_next
        if residual <= tol:
            return S
    raise ConvergenceError(
        f"covariance did not converge in {max_iter} steps (residual {residual:.3g})", residual=residual)
