"""Feedback gains, per-agent control laws and the consensus-form rewrite."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import LeaderlessMode, SingularGain
from .model import CostModel, SystemModel, build_augmented
from .riccati import RiccatiSolution, inner_solve

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class GainSchedule:
    """Deviation gains ``L_dev`` and augmented gains ``L_bar``.

    Finite horizon: arrays indexed by ``t-1`` for ``t = 1..T``. Stationary:
    single matrices (``T is None``). In leaderless mode ``L_bar`` only has the
    follower-average row (``d_u x 2 d_x``).
    """

    L_dev: np.ndarray
    L_bar: np.ndarray
    T: Optional[int]
    d_x: int
    d_u: int
    leaderless: bool = False

    @property
    def stationary(self) -> bool:
        return self.T is None

    def _check_t(self, t):
        if not self.stationary and not 1 <= t <= self.T:
            raise IndexError(f"t={t} outside schedule 1..{self.T}")

    def dev(self, t):
        self._check_t(t)
        return self.L_dev if self.stationary else self.L_dev[t - 1]

    def bar(self, t):
        self._check_t(t)
        return self.L_bar if self.stationary else self.L_bar[t - 1]

    def blocks(self, t):
        """``(L11, L12, L21, L22)``; the leader row is ``None`` when leaderless."""
        Lb = self.bar(t)
        d_x, d_u = self.d_x, self.d_u
        if self.leaderless:
            return None, None, Lb[:, :d_x], Lb[:, d_x:]
        return Lb[:d_u, :d_x], Lb[:d_u, d_x:], Lb[d_u:, :d_x], Lb[d_u:, d_x:]

    def times(self):
        return [None] if self.stationary else list(range(1, self.T + 1))

    def to_dict(self):
        def mat(M):
            return [[float(v) for v in row] for row in M]

        steps = []
        for t in self.times():
            L11, L12, L21, L22 = self.blocks(t if t is not None else 1)
            step = {"t": t, "L_dev": mat(self.dev(t or 1)), "L_bar": mat(self.bar(t or 1)),
                    "L21": mat(L21), "L22": mat(L22)}
            if not self.leaderless:
                step["L11"] = mat(L11)
                step["L12"] = mat(L12)
            steps.append(step)
        return {"horizon": self.T if self.T is not None else "infinite",
                "d_x": self.d_x, "d_u": self.d_u, "leaderless": self.leaderless,
                "steps": steps}


def _gain(M_next, A, B, R):
    return -inner_solve(M_next, A, B, R)


def compute_gains(riccati: RiccatiSolution, model: SystemModel, cost: CostModel) -> GainSchedule:
    d_x, d_u = model.d_x, model.d_u
    leaderless = riccati.leaderless
    if riccati.stationary:
        aug = build_augmented(model, cost, 1, leaderless)
        beta = riccati.beta
        L_dev = _gain(riccati.M_dev, aug.A_dev, aug.B_dev, aug.R_dev / beta)
        L_bar = _gain(riccati.M_bar, aug.A_bar, aug.B_ctrl, aug.R_ctrl / beta)
        return GainSchedule(L_dev, L_bar, None, d_x, d_u, leaderless)
    T = riccati.T
    rows = d_u if leaderless else 2 * d_u
    L_dev = np.zeros((T, d_u, d_x))
    L_bar = np.zeros((T, rows, 2 * d_x))
    for t in range(1, T + 1):
        aug = build_augmented(model, cost, t, leaderless)
        L_dev[t - 1] = _gain(riccati.dev(t + 1), aug.A_dev, aug.B_dev, aug.R_dev)
        L_bar[t - 1] = _gain(riccati.bar(t + 1), aug.A_bar, aug.B_ctrl, aug.R_ctrl)
    L_dev.setflags(write=False)
    L_bar.setflags(write=False)
    return GainSchedule(L_dev, L_bar, T, d_x, d_u, leaderless)


def leader_action(g: GainSchedule, t, x0, xbar):
    if g.leaderless:
        raise LeaderlessMode("leaderless model has no leader control channel")
    L11, L12, _, _ = g.blocks(t)
    return L11 @ np.asarray(x0, dtype=float) + L12 @ np.asarray(xbar, dtype=float)


def follower_action(g: GainSchedule, t, xi, x0, xbar):
    """Control of a follower from its own state, the leader state and the mean-field.

    ``xi`` may be a single state or an ``(n, d_x)`` stack of follower states.
    """
    _, _, L21, L22 = g.blocks(t)
    Ld = g.dev(t)
    xi = np.asarray(xi, dtype=float)
    shared = L21 @ np.asarray(x0, dtype=float) + (L22 - Ld) @ np.asarray(xbar, dtype=float)
    return xi @ Ld.T + shared


@dataclass(frozen=True)
class ConsensusForm:
    """Pairwise consensus coefficients, one entry per requested time.

    ``alpha`` and ``beta_c`` are ``None`` in leaderless mode.
    """

    times: tuple
    n: int
    alpha: Optional[np.ndarray]
    beta_c: Optional[np.ndarray]
    gamma: np.ndarray
    mu: np.ndarray
    lam: np.ndarray

    def index(self, t):
        return self.times.index(t)


def _rcond(M):
    if M.shape[0] != M.shape[1]:
        return 0.0
    s = np.linalg.svd(M, compute_uv=False)
    return 0.0 if s[0] == 0.0 else float(s[-1] / s[0])


def consensus_coefficients(g: GainSchedule, n: int, times=None) -> ConsensusForm:
    if times is None:
        times = g.times()
    alpha, beta_c, gamma, mu, lam = [], [], [], [], []
    for t in times:
        tt = 1 if t is None else t
        L11, L12, L21, L22 = g.blocks(tt)
        Ld = g.dev(tt)
        rc = _rcond(Ld)
        if rc < RCOND_MIN:
            raise SingularGain("L_dev", t, rc)
        if not g.leaderless:
            rc = _rcond(L11)
            if rc < RCOND_MIN:
                raise SingularGain("L11", t, rc)
            alpha.append(L11 / n)
            beta_c.append(-np.linalg.solve(L11, L12))
        gamma.append(Ld / n)
        mu.append(-np.linalg.solve(Ld, L22 + L21 - Ld))
        lam.append(L21 / n)
    stack = lambda xs: np.array(xs) if xs else None  # noqa: E731
    return ConsensusForm(tuple(times), n, stack(alpha), stack(beta_c),
                         stack(gamma), stack(mu), stack(lam))


def consensus_leader_action(cf: ConsensusForm, t, x0, X):
    """Leader control written as a sum over pairwise (leader, follower) terms."""
    if cf.alpha is None:
        raise LeaderlessMode("leaderless model has no leader control channel")
    k = cf.index(t)
    a, b = cf.alpha[k], cf.beta_c[k]
    X = np.asarray(X, dtype=float)
    return sum(a @ (x0 - b @ xi) for xi in X)


def consensus_follower_action(cf: ConsensusForm, t, i, x0, X):
    """Control of follower ``i`` (0-based row of ``X``) in consensus form."""
    k = cf.index(t)
    c, m, l = cf.gamma[k], cf.mu[k], cf.lam[k]
    X = np.asarray(X, dtype=float)
    xi = X[i]
    return sum(c @ (xi - m @ xj) for xj in X) + sum(l @ (x0 - xj) for xj in X)
