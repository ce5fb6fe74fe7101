import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mflqr.errors import LeaderlessMode, SingularGain
from mflqr.gains import (GainSchedule, compute_gains, consensus_coefficients,
                         consensus_follower_action, consensus_leader_action, follower_action,
                         leader_action)
from mflqr.model import CostModel, SystemModel
from mflqr.riccati import solve, solve_are

from conftest import example1_cost, example1_model, random_problem


def _scalar_schedule(Ld, L11, L12, L21, L22):
    L_bar = np.array([[L11, L12], [L21, L22]], dtype=float)
    return GainSchedule(np.array([[Ld]], dtype=float), L_bar, None, 1, 1)


def test_stationary_deviation_gain_example1():
    m, c = example1_model(), example1_cost(None)
    g = compute_gains(solve(m, c), m, c)
    M = (51.1 + np.sqrt(51.1**2 + 4 * 63875)) / 2
    expected = -(0.2 * M) / (0.04 * M + 50)
    assert g.L_dev[0, 0] == pytest.approx(-0.91389, abs=1e-4)
    assert g.L_dev[0, 0] == pytest.approx(expected, rel=1e-12)


def test_terminal_gains_are_zero():
    m, c = example1_model(), example1_cost(80)
    g = compute_gains(solve(m, c), m, c)
    assert np.array_equal(g.dev(80), np.zeros((1, 1)))
    assert np.array_equal(g.bar(80), np.zeros((2, 2)))
    assert g.L_dev.shape == (80, 1, 1)


def test_no_actuation_gives_zero_gains():
    m = SystemModel(A0=1.0, B0=0.0, D0=0.05, A=1.0, B=0.0, D=0.01, E=0.01, n=4)
    c = example1_cost(10)
    g = compute_gains(solve(m, c), m, c)
    assert not np.any(g.L_dev) and not np.any(g.L_bar)


def test_leader_action_examples():
    g = _scalar_schedule(-0.9, -0.5, -0.1, -0.05, -0.8)
    assert leader_action(g, 1, [0.0], [0.0])[0] == 0.0
    assert leader_action(g, 1, [30.0], [10.0])[0] == pytest.approx(-16.0, abs=1e-12)


def test_follower_action_examples():
    g = _scalar_schedule(-0.9, -0.5, -0.1, -0.05, -0.8)
    assert follower_action(g, 1, [2.0], [30.0], [1.0])[0] == pytest.approx(-3.2, abs=1e-12)
    assert follower_action(g, 1, [0.0], [0.0], [0.0])[0] == 0.0
    g0 = _scalar_schedule(-0.9, -0.5, -0.1, 0.0, -0.8)
    assert follower_action(g0, 1, [3.0], [123.0], [3.0])[0] == pytest.approx(-0.8 * 3.0, abs=1e-12)


def test_follower_action_vectorized_matches_single(rng):
    model, cost = random_problem(rng, d_x=2, T=5)
    g = compute_gains(solve(model, cost), model, cost)
    X = rng.normal(size=(6, 2))
    x0, xbar = rng.normal(size=2), X.mean(0)
    stacked = follower_action(g, 2, X, x0, xbar)
    for i in range(6):
        np.testing.assert_allclose(stacked[i], follower_action(g, 2, X[i], x0, xbar), rtol=1e-14, atol=1e-15)


def test_leaderless_leader_action_unavailable():
    m = SystemModel(A0=1.0, B0=0.0, D0=0.0, A=1.0, B=0.2, D=0.01, E=0.01, n=5)
    c = CostModel(Q0=0.0, R0=0.0, Q=0.1, P=50.0, R=50.0, H=1.0, T=10)
    g = compute_gains(solve(m, c), m, c)
    assert g.leaderless and g.L_bar.shape == (10, 1, 2)
    with pytest.raises(LeaderlessMode):
        leader_action(g, 1, [1.0], [0.0])
    u = follower_action(g, 1, [1.0], [2.0], [0.5])
    assert u.shape == (1,)


def test_consensus_gamma_example():
    g = _scalar_schedule(-0.9, -0.5, -0.1, -0.05, -0.8)
    cf = consensus_coefficients(g, 100)
    assert cf.gamma[0][0, 0] == pytest.approx(-0.009, abs=1e-15)


def test_consensus_singular():
    g = _scalar_schedule(0.0, -0.5, -0.1, -0.05, -0.8)
    with pytest.raises(SingularGain):
        consensus_coefficients(g, 10)
    m, c = example1_model(), example1_cost(20)
    g = compute_gains(solve(m, c), m, c)
    with pytest.raises(SingularGain) as exc:
        consensus_coefficients(g, 100)
    assert exc.value.t == 20
    consensus_coefficients(g, 100, times=range(1, 20))


def _check_consensus(g, n, rng, times):
    cf = consensus_coefficients(g, n, times)
    for t in times:
        X = rng.normal(size=(n, g.d_x))
        x0 = rng.normal(size=g.d_x)
        xbar = X.mean(0)
        if not g.leaderless:
            np.testing.assert_allclose(consensus_leader_action(cf, t, x0, X),
                                       leader_action(g, t, x0, xbar), rtol=0, atol=1e-11)
        for i in range(n):
            np.testing.assert_allclose(consensus_follower_action(cf, t, i, x0, X),
                                       follower_action(g, t, X[i], x0, xbar), rtol=0, atol=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([1, 2]), st.sampled_from([1, 3, 10]))
def test_consensus_equivalence(seed, d, n):
    r = np.random.default_rng(seed)
    model, cost = random_problem(r, d_x=d, n=n, T=6)
    g = compute_gains(solve(model, cost), model, cost)
    _check_consensus(g, n, r, list(range(1, 6)))


def test_consensus_stationary(rng):
    m, c = example1_model(n=7), example1_cost(None)
    g = compute_gains(solve(m, c), m, c)
    _check_consensus(g, 7, rng, [None])


def test_gain_schedule_carries_no_follower_index(rng):
    m, c = example1_model(n=5), example1_cost(10)
    g = compute_gains(solve(m, c), m, c)
    x0, xbar = rng.normal(size=1), rng.normal(size=1)
    a = follower_action(g, 3, [1.5], x0, xbar)
    b = follower_action(g, 3, np.array([1.5]), x0, xbar)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("beta", [0.5, 0.9])
def test_discounted_gains_match_scaled_problem(beta):
    m = example1_model()
    c = example1_cost(None, beta=beta)
    g = compute_gains(solve(m, c), m, c)
    s = np.sqrt(beta)
    M, _ = solve_are(s * np.eye(1), s * 0.2 * np.eye(1), [[51.1]], [[50.0]], 1.0)
    scaled = -(s * 0.2 * M) / ((s * 0.2) ** 2 * M + 50.0) * s
    assert g.L_dev[0, 0] == pytest.approx(scaled[0, 0], abs=1e-9)


def test_to_dict_layout():
    m, c = example1_model(), example1_cost(3)
    d = compute_gains(solve(m, c), m, c).to_dict()
    assert d["horizon"] == 3 and len(d["steps"]) == 3
    assert set(d["steps"][0]) == {"t", "L_dev", "L_bar", "L11", "L12", "L21", "L22"}
