import numpy as np
import pytest

from mflqr.model import CostModel, Distribution, NoiseModel, SystemModel

EXAMPLE1_DYNAMICS = dict(A0=1.0, B0=0.3, D0=0.05, A=1.0, B=0.2, D=0.01, E=0.01)
EXAMPLE1_WEIGHTS = dict(Q0=1.0, R0=100.0, Q=0.1, P=50.0, R=50.0, H=1.0)


def example1_model(n=100, noisy=True, seed=0):
    noise = (NoiseModel(Distribution.gaussian(0.1), Distribution.gaussian(0.2), seed)
             if noisy else NoiseModel.noiseless(1, seed))
    return SystemModel(**EXAMPLE1_DYNAMICS, n=n, noise=noise, x0_init=30.0,
                       follower_init=Distribution.uniform(0.0, 20.0))


def example1_cost(T=80, beta=1.0):
    return CostModel(**EXAMPLE1_WEIGHTS, T=T, beta=beta)


def _psd(rng, d, scale=1.0):
    G = rng.normal(size=(d, d))
    return scale * G.T @ G / d


def random_problem(rng, d_x=1, d_u=None, n=3, T=10, beta=1.0, noisy=False, time_varying=False):
    """A random model satisfying the symmetry / definiteness assumptions."""
    d_u = d_x if d_u is None else d_u

    def dyn():
        return dict(
            A0=np.eye(d_x) * rng.uniform(0.6, 1.2) + 0.2 * rng.normal(size=(d_x, d_x)),
            B0=rng.uniform(0.2, 1.0) * rng.choice([-1, 1]) * np.eye(d_x, d_u) + 0.1 * rng.normal(size=(d_x, d_u)),
            D0=0.2 * rng.normal(size=(d_x, d_x)),
            A=np.eye(d_x) * rng.uniform(0.6, 1.2) + 0.2 * rng.normal(size=(d_x, d_x)),
            B=rng.uniform(0.2, 1.0) * rng.choice([-1, 1]) * np.eye(d_x, d_u) + 0.1 * rng.normal(size=(d_x, d_u)),
            D=0.2 * rng.normal(size=(d_x, d_x)),
            E=0.2 * rng.normal(size=(d_x, d_x)),
        )

    def wts():
        return dict(
            Q0=_psd(rng, d_x, rng.uniform(0, 2)), Q=_psd(rng, d_x, rng.uniform(0, 2)),
            P=_psd(rng, d_x, rng.uniform(0, 5)), H=_psd(rng, d_x, rng.uniform(0, 2)),
            R0=_psd(rng, d_u) + rng.uniform(0.1, 2) * np.eye(d_u),
            R=_psd(rng, d_u) + rng.uniform(0.1, 2) * np.eye(d_u),
        )

    if time_varying:
        steps_d = [dyn() for _ in range(T)]
        steps_w = [wts() for _ in range(T)]
        d = {k: np.array([s[k] for s in steps_d]) for k in steps_d[0]}
        w = {k: np.array([s[k] for s in steps_w]) for k in steps_w[0]}
    else:
        d, w = dyn(), wts()
    if noisy:
        noise = NoiseModel(Distribution.gaussian(_psd(rng, d_x, 0.3) + 0.01 * np.eye(d_x)),
                           Distribution.gaussian(_psd(rng, d_x, 0.3) + 0.01 * np.eye(d_x)),
                           int(rng.integers(0, 2**32)))
    else:
        noise = NoiseModel.noiseless(d_x)
    model = SystemModel(**d, n=n, noise=noise,
                        x0_init=Distribution.gaussian(np.eye(d_x), mean=rng.normal(size=d_x)),
                        follower_init=Distribution.gaussian(np.eye(d_x), mean=rng.normal(size=d_x)))
    cost = CostModel(**w, T=T, beta=beta)
    return model, cost


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
