import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mflqr.errors import DimensionMismatch, NotPSD
from mflqr.model import (CostModel, Dims, Distribution, NoiseModel, SystemModel, build_augmented,
                         check_detectable, check_stabilizable, constant_sequence,
                         matrix_sqrt_psd, validate)

from conftest import EXAMPLE1_DYNAMICS, EXAMPLE1_WEIGHTS, example1_cost, example1_model


def test_dims_positive():
    Dims(1, 1, 1)
    with pytest.raises(DimensionMismatch):
        Dims(0, 1, 1)
    with pytest.raises(DimensionMismatch):
        Dims(1, 1, 0)


def test_validate_example1_infinite_all_pass():
    report = validate(example1_model(), example1_cost(T=None))
    assert report.ok
    assert all(c.passed for c in report.checks)
    assert not report.leaderless


def test_validate_r_zero_fails_pd():
    cost = CostModel(**{**EXAMPLE1_WEIGHTS, "R": 0.0}, T=5)
    report = validate(example1_model(), cost)
    assert not report.ok
    assert report["pd:R"].passed is False
    assert report["pd:R"].witness == 0.0


def test_validate_negative_deviation_weight():
    cost = CostModel(**{**EXAMPLE1_WEIGHTS, "Q": -2.0, "P": 0.0, "H": 0.0}, T=5)
    report = validate(example1_model(), cost)
    assert report["psd:Q+P+H"].witness == pytest.approx(-2.0)
    assert not report["psd:Q+P+H"].passed


def test_validate_records_asymmetry():
    Q = np.array([[1.0, 0.5], [0.0, 1.0]])
    model = SystemModel(A0=np.eye(2), B0=np.eye(2), D0=0 * np.eye(2), A=np.eye(2), B=np.eye(2),
                        D=0 * np.eye(2), E=0 * np.eye(2), n=2)
    cost = CostModel(Q0=np.eye(2), R0=np.eye(2), Q=Q, P=np.eye(2), R=np.eye(2), H=np.eye(2), T=3)
    report = validate(model, cost)
    assert not report["symmetric:Q"].passed
    assert report["symmetric:Q"].witness == pytest.approx(0.5)


def test_validate_tiny_asymmetry_is_symmetrized():
    Q = np.array([[1.0, 0.5 + 1e-14], [0.5, 1.0]])
    cost = CostModel(Q0=np.eye(2), R0=np.eye(2), Q=Q, P=np.eye(2), R=np.eye(2), H=np.eye(2), T=3)
    assert np.array_equal(cost.Q, cost.Q.T)


def test_validate_dimension_mismatch():
    model = SystemModel(**{**EXAMPLE1_DYNAMICS, "A": np.eye(2)}, n=3)
    with pytest.raises(DimensionMismatch):
        validate(model, example1_cost(5))


def test_time_varying_length_must_match_T():
    model = SystemModel(**{**EXAMPLE1_DYNAMICS, "A": constant_sequence(1.0, 4)}, n=3)
    with pytest.raises(DimensionMismatch):
        validate(model, example1_cost(5))
    validate(model, example1_cost(4))


def test_detectability_discrepancy_recorded():
    # Q = 0 but P + H > 0: the Q-only pair is not detectable, the Q+P+H pair is
    cost = CostModel(**{**EXAMPLE1_WEIGHTS, "Q": 0.0}, T=None)
    report = validate(example1_model(), cost)
    assert report["detectable:deviation"].passed
    assert not report["detectable:deviation-with-Q"].passed
    assert not report["detectable:deviation-with-Q"].required
    assert report.ok


def test_leaderless_flagged_not_failed():
    model = SystemModel(A0=1.0, B0=0.0, D0=0.0, A=1.0, B=0.2, D=0.01, E=0.01, n=5)
    cost = CostModel(Q0=0.0, R0=0.0, Q=0.1, P=50.0, R=50.0, H=1.0, T=10)
    report = validate(model, cost)
    assert report.leaderless
    assert report.ok
    aug = build_augmented(model, cost)
    assert aug.B_ctrl.shape == (2, 1)
    assert aug.R_ctrl.shape == (1, 1)


@pytest.mark.parametrize("A,B,ok,witness", [
    (1.0, 0.2, True, None),
    (2.0, 0.0, False, 2.0),
    (0.5, 0.0, True, None),
])
def test_check_stabilizable(A, B, ok, witness):
    assert check_stabilizable([[A]], [[B]]) == (ok, witness)


@pytest.mark.parametrize("A,C,ok,witness", [
    (1.0, np.sqrt(51.1), True, None),
    (1.1, 0.0, False, 1.1),
    (0.0, 0.0, True, None),
])
def test_check_detectable(A, C, ok, witness):
    assert check_detectable([[A]], [[C]]) == (ok, witness)


def test_pbh_multivariable():
    A = np.diag([1.5, 0.3])
    assert check_stabilizable(A, np.array([[1.0], [0.0]]))[0]
    ok, w = check_stabilizable(A, np.array([[0.0], [1.0]]))
    assert not ok and w == pytest.approx(1.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 100.0), st.booleans())
def test_pbh_scale_invariant(seed, c, neg):
    r = np.random.default_rng(seed)
    A = r.normal(size=(3, 3))
    B = r.normal(size=(3, 1)) * (r.random() < 0.7)
    c = -c if neg else c
    assert check_stabilizable(A, B)[0] == check_stabilizable(A, c * B)[0]


def test_matrix_sqrt_examples():
    np.testing.assert_array_equal(matrix_sqrt_psd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-15)
    with pytest.raises(NotPSD):
        matrix_sqrt_psd(np.diag([1.0, -1.0]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_matrix_sqrt_property(seed, d):
    G = np.random.default_rng(seed).normal(size=(d + 1, d))
    S = G.T @ G
    X = matrix_sqrt_psd(S)
    assert np.linalg.norm(X @ X - S) / np.linalg.norm(S) < 1e-10
    assert np.max(np.abs(X - X.T)) <= 1e-12 * max(1.0, np.abs(X).max())
    assert np.linalg.eigvalsh(X).min() >= -1e-10 * np.linalg.norm(X, 2)


def test_build_augmented_example1():
    aug = build_augmented(example1_model(), example1_cost())
    np.testing.assert_allclose(aug.A_bar, [[1.0, 0.05], [0.01, 1.01]], rtol=0, atol=1e-15)
    np.testing.assert_array_equal(aug.B_bar, np.diag([0.3, 0.2]))
    np.testing.assert_array_equal(aug.Q_bar, [[51.0, -50.0], [-50.0, 50.1]])
    np.testing.assert_array_equal(aug.R_bar, np.diag([100.0, 50.0]))
    assert aug.Q_dev[0, 0] == pytest.approx(51.1, abs=1e-13)


def test_build_augmented_degenerate_blocks():
    model = SystemModel(A0=0.9, B0=1.0, D0=0.0, A=1.1, B=1.0, D=0.0, E=0.0, n=2)
    cost = CostModel(Q0=2.0, R0=1.0, Q=3.0, P=0.0, R=1.0, H=0.0, T=2)
    aug = build_augmented(model, cost)
    np.testing.assert_array_equal(aug.Q_bar, np.diag([2.0, 3.0]))
    np.testing.assert_array_equal(aug.A_bar, np.diag([0.9, 1.1]))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 3))
def test_build_augmented_shapes_and_symmetry(seed, d_x, d_u):
    from conftest import random_problem
    model, cost = random_problem(np.random.default_rng(seed), d_x=d_x, d_u=d_u)
    aug = build_augmented(model, cost)
    assert aug.A_bar.shape == (2 * d_x, 2 * d_x)
    assert aug.B_bar.shape == (2 * d_x, 2 * d_u)
    assert aug.R_bar.shape == (2 * d_u, 2 * d_u)
    assert np.array_equal(aug.Q_bar, aug.Q_bar.T)
    assert np.array_equal(aug.Q_dev, aug.Q_dev.T)


def test_distribution_validation():
    with pytest.raises(ValueError):
        NoiseModel(Distribution.uniform(0.0, 1.0), Distribution.zero(1))
    NoiseModel(Distribution.uniform(-1.0, 1.0), Distribution.zero(1))
    with pytest.raises(NotPSD):
        Distribution.gaussian([[1.0, 0.0], [0.0, -1.0]])
    d = Distribution.uniform(0.0, 20.0)
    assert d.expectation()[0] == 10.0
    assert d.covariance()[0, 0] == pytest.approx(400 / 12)


def test_cost_beta_range():
    with pytest.raises(ValueError):
        CostModel(**EXAMPLE1_WEIGHTS, T=None, beta=1.5)
    with pytest.raises(ValueError):
        CostModel(**EXAMPLE1_WEIGHTS, T=None, beta=0.0)
