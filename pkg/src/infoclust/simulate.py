"""Trajectory generation and the two synthetic benchmark systems."""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field

import numpy as np

from .statespace import LinearModel, check_covariance, spectral_radius


@dataclass
class TimeSeries:
    """Samples with one row per variable and one column per time step.

    Args:
        data: (N, M+1) array, columns are z_0 .. z_M.
        names: N variable labels.
        dt: sampling interval, provenance only.
        meta: free-form provenance.
    """

    data: np.ndarray
    names: tuple = ()
    dt: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError(f"data must be 2-D, got shape {self.data.shape}")
        if self.data.shape[1] < 2:
            raise ValueError("a time series needs at least 2 time steps")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("time series contains NaN or Inf")
        self.names = tuple(self.names) or tuple(f"z{i}" for i in range(self.data.shape[0]))
        if len(self.names) != self.data.shape[0]:
            raise ValueError(f"{len(self.names)} names for {self.data.shape[0]} variables")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def n_vars(self) -> int:
        return self.data.shape[0]

    @property
    def n_steps(self) -> int:
        return self.data.shape[1]

    def index_of(self, names) -> list:
        lookup = {n: i for i, n in enumerate(self.names)}
        try:
            return [lookup[n] for n in names]
        except KeyError as err:
            raise KeyError(f"unknown variable {err.args[0]!r}") from None


def simulate_linear(m: LinearModel, S0=None, steps: int = 1000, seed: int = 0,
                    x0=None) -> TimeSeries:
    """Sample one trajectory of ``z(t+1) = A z(t) + sigma xi(t)``.

    ``z(0)`` is drawn from N(0, S0) (identity by default) unless ``x0`` is
    given. Unstable ``A`` is allowed.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = m.n
    rng = np.random.default_rng(seed)
    if x0 is None:
        S0 = np.eye(n) if S0 is None else check_covariance(S0)
        if S0.shape != (n, n):
            raise ValueError(f"S0 shape {S0.shape} does not match {n} states")
        z0 = rng.multivariate_normal(np.zeros(n), S0, method="eigh")
    else:
        z0 = np.asarray(x0, dtype=float)
        if z0.shape != (n,):
            raise ValueError(f"x0 shape {z0.shape} does not match {n} states")
    noise = m.sigma * rng.standard_normal((steps, n))
    Z = np.empty((steps + 1, n))
    Z[0] = z0
    At = m.A.T
    for t in range(steps):
        Z[t + 1] = Z[t] @ At + noise[t]
    meta = {"seed": int(seed), "steps": int(steps), "sigma": m.sigma, **m.meta}
    return TimeSeries(Z.T, m.names, dt=m.meta.get("dt"), meta=meta)


def make_three_state() -> LinearModel:
    A = 0.9 * np.array([[0.0, 0.0, 0.0],
                        [2.0, 0.0, 0.8],
                        [2.0, 1.0, 0.0]])
    return LinearModel(A, 1.0, ("x1", "x2", "x3"), meta={"system": "three-state"})


@dataclass(frozen=True)
class OscillatorNetwork:
    """Damped oscillators ``theta'' = -(L + anchor I) theta - damping theta'``."""

    laplacian: np.ndarray
    damping: float = 0.5
    dt: float = 0.01
    anchor: float = 0.1

    def __post_init__(self):
        if not self.damping > 0 or not self.dt > 0:
            raise ValueError("damping and dt must be positive")

    @property
    def n_osc(self) -> int:
        return self.laplacian.shape[0]

    def continuous(self) -> np.ndarray:
        """2N x 2N generator in (theta_1, dtheta_1, ..., theta_N, dtheta_N) order."""
        n = self.n_osc
        K = self.laplacian + self.anchor * np.eye(n)
        Ac = np.zeros((2 * n, 2 * n))
        pos, vel = np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)
        Ac[pos, vel] = 1.0
        Ac[np.ix_(vel, pos)] = -K
        Ac[vel, vel] = -self.damping
        return Ac

    def discrete(self) -> np.ndarray:
        return np.eye(2 * self.n_osc) + self.dt * self.continuous()


def two_community_weights(n_per_community: int, intra_w: float, inter_w: float) -> np.ndarray:
    """Two cliques of ``n_per_community`` nodes joined by one bridge edge."""
    n = n_per_community
    W = np.zeros((2 * n, 2 * n))
    for c in range(2):
        block = slice(c * n, (c + 1) * n)
        W[block, block] = intra_w
    np.fill_diagonal(W, 0.0)
    # bridge between the last node of community 0 and the first of community 1
    W[n - 1, n] = W[n, n - 1] = inter_w
    return W


def graph_laplacian(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    return np.diag(W.sum(axis=1)) - W


def make_oscillator_network(n_per_community: int = 6, intra_w: float = 6.0,
                            inter_w: float = 0.05, damping: float = 0.5,
                            dt: float = 0.01, sigma: float = 0.01,
                            anchor: float = 0.1) -> LinearModel:
    """Forward-Euler discretization of a two-community oscillator network.

    ``anchor`` adds a small restoring stiffness to every oscillator; without
    it the Laplacian's zero mode gives the discrete map an eigenvalue of
    exactly one and no steady-state covariance exists.
    """
    if n_per_community < 2:
        raise ValueError("need at least 2 oscillators per community")
    if not (intra_w > 0 and inter_w >= 0):
        raise ValueError("intra_w must be positive and inter_w nonnegative")
    if inter_w >= intra_w:
        warnings.warn("inter_w >= intra_w: community structure will be weak", stacklevel=2)
    W = two_community_weights(n_per_community, intra_w, inter_w)
    net = OscillatorNetwork(graph_laplacian(W), damping, dt, anchor)
    A = net.discrete()
    rho = spectral_radius(A)
    names = []
    for k in range(1, net.n_osc + 1):
        names += [f"theta{k}", f"dtheta{k}"]
    meta = {
        "system": "oscillator", "n_per_community": n_per_community, "intra_w": intra_w,
        "inter_w": inter_w, "damping": damping, "dt": dt, "anchor": anchor,
        "spectral_radius": rho,
    }
    if rho >= 1.0:
        meta["warning"] = f"unstable discretization: spectral radius {rho:.6g} >= 1 (reduce dt)"
    return LinearModel(A, sigma, tuple(names), meta=meta)


def oscillator_groups(m: LinearModel) -> list:
    """Per-oscillator ``(theta_k, dtheta_k)`` groups labelled ``osc1 .. oscN``."""
    return [(f"osc{k // 2 + 1}", (k, k + 1)) for k in range(0, m.n, 2)]


def make_hub_system(hub_self: float = 0.5, hub_drive: float = 0.12, leaf_self: float = 0.1,
                    within: float = 0.3, between: float = 0.12, sigma: float = 1.0) -> LinearModel:
    """Six-node star-driver system: ``hub`` drives every leaf and nothing drives it.

    Leaves form two groups, ``{leaf1, leaf2}`` and ``{leaf3, leaf4, leaf5}``,
    coupled ``within`` inside a group and ``between`` across groups, so the
    leaves influence one another more strongly than the hub drives them.
    """
    groups = [(1, 2), (3, 4, 5)]
    A = np.zeros((6, 6))
    A[0, 0] = hub_self
    A[1:, 0] = hub_drive
    for i in range(1, 6):
        A[i, i] = leaf_self
        for j in range(1, 6):
            if i != j:
                same = any(i in g and j in g for g in groups)
                A[i, j] = within if same else between
    names = ("hub",) + tuple(f"leaf{k}" for k in range(1, 6))
    m = LinearModel(A, sigma, names, meta={"system": "hub"})
    if m.spectral_radius() >= 1.0:
        raise ValueError(f"hub system is unstable (spectral radius {m.spectral_radius():.4g})")
    return m


def write_csv(ts: TimeSeries, path=None, comment: str | None = None) -> str:
    """Header of variable names, then one row per time step (17 significant digits)."""
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write(",".join(ts.names) + "\n")
    for row in ts.data.T:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
