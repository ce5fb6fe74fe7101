"""Brute-force centralized LQR over the stacked state of all agents.

Used to certify the structured (two small Riccati equations) solution on
small instances. Deliberately shares no solver code with ``riccati``/``gains``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import TooLarge
from .gains import GainSchedule
from .model import CostModel, SystemModel, is_leaderless

MAX_STATE = 200


@dataclass(frozen=True)
class CentralizedProblem:
    """Stacked system ``z = (x^0, x^1, ..., x^n)``, ``v = (u^0, u^1, ..., u^n)``.

    Matrices are 3-d ``(T, ., .)`` for time-varying problems. In leaderless
    mode the leader control is absent and ``v = (u^1, ..., u^n)``.
    """

    A_c: np.ndarray
    B_c: np.ndarray
    Q_c: np.ndarray
    R_c: np.ndarray
    n: int
    d_x: int
    d_u: int
    leaderless: bool = False

    def at(self, t):
        pick = lambda M: M[t - 1] if M.ndim == 3 else M  # noqa: E731
        return pick(self.A_c), pick(self.B_c), pick(self.Q_c), pick(self.R_c)


def _stack_step(model, cost, n, t, leaderless):
    A0, B0, D0, A, B, D, E = model.at(t)
    Q0, R0, Q, P, R, H = cost.at(t)
    d_x, d_u = model.d_x, model.d_u
    N = (n + 1) * d_x
    Ac = np.zeros((N, N))
    Ac[:d_x, :d_x] = A0
    for j in range(1, n + 1):
        Ac[:d_x, j * d_x:(j + 1) * d_x] = D0 / n
    for i in range(1, n + 1):
        r = slice(i * d_x, (i + 1) * d_x)
        Ac[r, :d_x] = E
        for j in range(1, n + 1):
            Ac[r, j * d_x:(j + 1) * d_x] = D / n + (A if i == j else 0.0)

    Bc = np.zeros((N, (n + 1) * d_u))
    Rc = np.zeros(((n + 1) * d_u, (n + 1) * d_u))
    Bc[:d_x, :d_u] = B0
    Rc[:d_u, :d_u] = R0
    for i in range(1, n + 1):
        Bc[i * d_x:(i + 1) * d_x, i * d_u:(i + 1) * d_u] = B
        Rc[i * d_u:(i + 1) * d_u, i * d_u:(i + 1) * d_u] = R / n
    if leaderless:
        Bc, Rc = Bc[:, d_u:], Rc[d_u:, d_u:]

    # x0'Q0x0 + (1/n) sum_i [xi'Q xi + (xi-x0)'P(xi-x0)]
    #   + (1/n) sum_i xi'H xi - (1/n^2) sum_ij xi'H xj
    Qc = np.zeros((N, N))
    Qc[:d_x, :d_x] = Q0 + P
    for i in range(1, n + 1):
        r = slice(i * d_x, (i + 1) * d_x)
        Qc[:d_x, r] = -P / n
        Qc[r, :d_x] = -P / n
        for j in range(1, n + 1):
            c = slice(j * d_x, (j + 1) * d_x)
            Qc[r, c] = -H / n**2 + ((Q + P + H) / n if i == j else 0.0)
    return Ac, Bc, 0.5 * (Qc + Qc.T), Rc


def build_centralized(model: SystemModel, cost: CostModel, n: int = None) -> CentralizedProblem:
    n = model.n if n is None else n
    if (n + 1) * model.d_x > MAX_STATE:
        raise TooLarge(f"centralized state dimension {(n + 1) * model.d_x} exceeds {MAX_STATE}")
    leaderless = is_leaderless(model, cost)
    if model.time_varying or cost.time_varying:
        steps = [_stack_step(model, cost, n, t, leaderless) for t in range(1, cost.T + 1)]
        mats = [np.array([s[k] for s in steps]) for k in range(4)]
    else:
        mats = _stack_step(model, cost, n, 1, leaderless)
    return CentralizedProblem(*mats, n=n, d_x=model.d_x, d_u=model.d_u, leaderless=leaderless)


def solve_centralized(cp: CentralizedProblem, T=None, beta=1.0):
    """Optimal centralized feedback ``v = K_t z``.

    Finite ``T``: array ``(T, M, N)`` from the textbook backward recursion.
    ``T is None``: stationary ``K`` for the beta-discounted infinite horizon.
    """
    if T is None:
        A, B, Q, R = cp.at(1)
        s = np.sqrt(beta)
        X = scipy.linalg.solve_discrete_are(s * A, s * B, Q, R)
        return -np.linalg.solve(R + s * s * B.T @ X @ B, s * s * B.T @ X @ A)
    N = cp.A_c.shape[-1]
    M = cp.B_c.shape[-1]
    K = np.zeros((T, M, N))
    X = np.zeros((N, N))
    for t in range(T, 0, -1):
        A, B, Q, R = cp.at(t)
        K[t - 1] = -np.linalg.solve(R + B.T @ X @ B, B.T @ X @ A)
        Acl = A + B @ K[t - 1]
        X = Q + K[t - 1].T @ R @ K[t - 1] + Acl.T @ X @ Acl
        X = 0.5 * (X + X.T)
    return K


def _assemble_step(g: GainSchedule, t, n):
    d_x, d_u = g.d_x, g.d_u
    L11, L12, L21, L22 = g.blocks(t)
    Ld = g.dev(t)
    N = (n + 1) * d_x
    K = np.zeros(((n + 1) * d_u, N))
    if not g.leaderless:
        K[:d_u, :d_x] = L11
        for j in range(1, n + 1):
            K[:d_u, j * d_x:(j + 1) * d_x] = L12 / n
    for i in range(1, n + 1):
        r = slice(i * d_u, (i + 1) * d_u)
        K[r, :d_x] = L21
        for j in range(1, n + 1):
            K[r, j * d_x:(j + 1) * d_x] = (L22 - Ld) / n + (Ld if i == j else 0.0)
    return K[d_u:] if g.leaderless else K


def assemble_meanfield_as_centralized(gains: GainSchedule, n: int):
    """Per-agent strategies expanded into one feedback matrix on the stacked state."""
    if gains.stationary:
        return _assemble_step(gains, None, n)
    return np.array([_assemble_step(gains, t, n) for t in range(1, gains.T + 1)])


def compare(K_central, K_mf) -> float:
    K_central = np.asarray(K_central)
    K_mf = np.asarray(K_mf)
    if K_central.shape != K_mf.shape:
        raise ValueError(f"shape mismatch {K_central.shape} vs {K_mf.shape}")
    return float(np.max(np.abs(K_central - K_mf), initial=0.0))


def stacked_noise_cov(model: SystemModel, n: int = None):
    n = model.n if n is None else n
    return scipy.linalg.block_diag(model.noise.leader.covariance(),
                                   *[model.noise.follower.covariance()] * n)


def stacked_initial(model: SystemModel, n: int = None):
    """Mean and covariance of the stacked initial state."""
    n = model.n if n is None else n
    mean = np.concatenate([model.x0_init.expectation()]
                          + [model.follower_init.expectation()] * n)
    cov = scipy.linalg.block_diag(model.x0_init.covariance(),
                                  *[model.follower_init.covariance()] * n)
    return mean, cov


def expected_cost(cp: CentralizedProblem, K, init_mean, init_cov, noise_cov, T=None, beta=1.0):
    """Exact expected cost of the linear strategy ``v = K_t z``.

    Finite ``T``: ``K`` is ``(T, M, N)`` (or one matrix reused every step).
    ``T is None``: stationary ``K`` over the discounted infinite horizon,
    summed in closed form through a discrete Lyapunov equation.
    """
    m = np.asarray(init_mean, dtype=float)
    S = np.asarray(init_cov, dtype=float) + np.outer(m, m)
    W = np.asarray(noise_cov, dtype=float)
    K = np.asarray(K, dtype=float)
    if T is None:
        A, B, Q, R = cp.at(1)
        F = A + B @ K
        if beta >= 1.0 and np.any(W):
            return float("inf")
        if max(abs(np.linalg.eigvals(np.sqrt(beta) * F))) >= 1.0:
            return float("inf")
        rhs = S + (beta / (1.0 - beta)) * W if beta < 1.0 else S
        G = scipy.linalg.solve_discrete_lyapunov(np.sqrt(beta) * F, rhs)
        return float(np.trace((Q + K.T @ R @ K) @ G))
    total = 0.0
    for t in range(1, T + 1):
        A, B, Q, R = cp.at(t)
        Kt = K[t - 1] if K.ndim == 3 else K
        total += beta ** (t - 1) * float(np.trace((Q + Kt.T @ R @ Kt) @ S))
        F = A + B @ Kt
        S = F @ S @ F.T + W
    return total
