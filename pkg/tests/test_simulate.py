import numpy as np
import pytest

from infoclust.simulate import (TimeSeries, make_hub_system, make_oscillator_network,
                                make_three_state, oscillator_groups, simulate_linear, write_csv)
from infoclust.statespace import LinearModel


def test_same_seed_bit_identical():
    m = make_three_state()
    a = simulate_linear(m, steps=200, seed=7)
    b = simulate_linear(m, steps=200, seed=7)
    assert a.data.tobytes() == b.data.tobytes()
    assert not np.array_equal(a.data, simulate_linear(m, steps=200, seed=8).data)


def test_shape_and_recursion():
    m = make_three_state()
    ts = simulate_linear(m, steps=50, seed=1)
    assert ts.data.shape == (3, 51)
    assert ts.names == ("x1", "x2", "x3")
    # the residual of the recursion is the injected noise: check its scale loosely
    resid = ts.data[:, 1:] - m.A @ ts.data[:, :-1]
    assert 0.5 < resid.std() < 1.5


def test_fixed_initial_state():
    m = LinearModel(0.5 * np.eye(2), sigma=1e-300)
    ts = simulate_linear(m, steps=3, x0=[1.0, 2.0])
    np.testing.assert_allclose(ts.data[:, 3], [0.125, 0.25])


def test_empirical_covariance_near_steady_state():
    from infoclust.statespace import steady_state_covariance
    m = make_three_state()
    ts = simulate_linear(m, steps=200_000, seed=3)
    S = steady_state_covariance(m)
    np.testing.assert_allclose(np.cov(ts.data), S, rtol=0.05, atol=0.05)


def test_timeseries_rejects_bad_data():
    with pytest.raises(ValueError):
        TimeSeries(np.array([[1.0, np.nan]]))
    with pytest.raises(ValueError):
        TimeSeries(np.array([[1.0]]))
    with pytest.raises(ValueError):
        TimeSeries(np.zeros((2, 3)), names=("a",))
    with pytest.raises(KeyError):
        TimeSeries(np.zeros((2, 3)), names=("a", "b")).index_of(["c"])


def test_oscillator_network_structure():
    m = make_oscillator_network()
    assert m.n == 24
    assert m.meta["spectral_radius"] < 1
    groups = oscillator_groups(m)
    assert groups[0] == ("osc1", (0, 1)) and groups[-1] == ("osc12", (22, 23))
    # only one bridge couples the communities: osc6 <-> osc7 velocity rows
    A = m.A
    cross = A[np.ix_(range(12), range(12, 24))]
    assert np.count_nonzero(cross) == 1


def test_oscillator_unstable_flagged():
    m = make_oscillator_network(intra_w=10.0)
    assert "warning" in m.meta


def test_hub_system():
    m = make_hub_system()
    assert m.spectral_radius() < 1
    assert np.all(m.A[0, 1:] == 0) and np.all(m.A[1:, 0] > 0)
    with pytest.raises(ValueError):
        make_hub_system(within=0.9)


def test_write_csv_roundtrip(tmp_path):
    ts = simulate_linear(make_three_state(), steps=10, seed=0)
    text = write_csv(ts, tmp_path / "ts.csv", comment="hello")
    assert text.startswith("# hello\nx1,x2,x3\n")
    back = np.loadtxt(tmp_path / "ts.csv", delimiter=",", skiprows=2).T
    assert back.tobytes() == ts.data.tobytes()


def test_oscillator_light_coupling_is_stable():
    m = make_oscillator_network(intra_w=1.0, inter_w=0.05)
    assert m.spectral_radius() < 1 and "warning" not in m.meta
