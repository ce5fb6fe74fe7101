"""Seeded closed-loop simulation of the leader and followers, and cost accounting."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .errors import Diverged
from .gains import GainSchedule
from .model import AugmentedSystem, CostModel, SystemModel, build_augmented

DIVERGENCE_CAP = 1e12
LEADER_ID = 0


@dataclass(frozen=True)
class SimulationTrace:
    """States for ``t = 1..T+1``; actions, noises and stage costs for ``t = 1..T``.

    Row ``k`` of every array corresponds to time ``t = k+1``.
    """

    x0: np.ndarray        # (T+1, d_x)
    X: np.ndarray         # (T+1, n, d_x)
    u0: np.ndarray        # (T, d_u)
    U: np.ndarray         # (T, n, d_u)
    w0: np.ndarray        # (T, d_x)
    W: np.ndarray         # (T, n, d_x)
    stage_cost: Optional[np.ndarray] = None
    beta: float = 1.0
    seed: int = 0

    @property
    def T(self) -> int:
        return self.u0.shape[0]

    @property
    def n(self) -> int:
        return self.X.shape[1]

    @property
    def xbar(self) -> np.ndarray:
        return self.X.mean(axis=1)

    @property
    def mean_abs_dev(self) -> np.ndarray:
        """(1/n) sum_i |x^i_t - x^0_t| (Euclidean norm), for t = 1..T+1."""
        return np.linalg.norm(self.X - self.x0[:, None, :], axis=-1).mean(axis=1)

    def to_csv(self) -> str:
        T = self.T
        d_x, d_u = self.x0.shape[1], self.u0.shape[1]
        header = (["t"] + [f"x0_{k + 1}" for k in range(d_x)] + [f"u0_{k + 1}" for k in range(d_u)]
                  + [f"xbar_{k + 1}" for k in range(d_x)] + ["mean_abs_dev", "stage_cost"])
        xbar, mad = self.xbar, self.mean_abs_dev
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k in range(T):
            sc = "" if self.stage_cost is None else _fmt(self.stage_cost[k])
            w.writerow([k + 1, *map(_fmt, self.x0[k]), *map(_fmt, self.u0[k]),
                        *map(_fmt, xbar[k]), _fmt(mad[k]), sc])
        return buf.getvalue()

    def followers_csv(self) -> str:
        """Wide per-follower table: one column per (follower, coordinate)."""
        n, d_x = self.X.shape[1:]
        header = ["t"] + [f"x0_{k + 1}" for k in range(d_x)] + [
            f"x{i + 1}_{k + 1}" for i in range(n) for k in range(d_x)]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k in range(self.T + 1):
            w.writerow([k + 1, *map(_fmt, self.x0[k]), *map(_fmt, self.X[k].ravel())])
        return buf.getvalue()

    def to_json(self) -> str:
        data = {"T": self.T, "n": self.n, "seed": self.seed, "beta": self.beta,
                "x0": self.x0.tolist(), "X": self.X.tolist(), "u0": self.u0.tolist(),
                "U": self.U.tolist(), "w0": self.w0.tolist(), "W": self.W.tolist(),
                "xbar": self.xbar.tolist(),
                "stage_cost": None if self.stage_cost is None else self.stage_cost.tolist()}
        return json.dumps(data)


def _fmt(v) -> str:
    return repr(float(v))


def sample_initial(model: SystemModel, seeds):
    """Leader ``(R, d_x)`` and follower ``(R, n, d_x)`` initial states, one row per seed."""
    z, u = rng.draws(np.asarray(seeds), 0, np.arange(0, model.n + 1), model.d_x, rng.INIT)
    x0 = model.x0_init.transform(z[:, LEADER_ID], u[:, LEADER_ID])
    X = model.follower_init.transform(z[:, 1:], u[:, 1:])
    return x0, X


def sample_noise(model: SystemModel, seeds, times):
    """Leader noise ``(R, len(times), d_x)`` and follower noise ``(R, len(times), n, d_x)``.

    Each (agent, t) entry depends only on ``(seed, agent, t)``.
    """
    z, u = rng.draws(np.asarray(seeds), np.asarray(times), np.arange(0, model.n + 1), model.d_x)
    w0 = model.noise.leader.transform(z[:, :, LEADER_ID], u[:, :, LEADER_ID])
    W = model.noise.follower.transform(z[:, :, 1:], u[:, :, 1:])
    return w0, W


def _rollout(model, gains, T, seeds, x0=None, X=None):
    if T < 1:
        raise ValueError("T must be >= 1")
    if not gains.stationary and T > gains.T:
        raise ValueError(f"gain schedule covers {gains.T} steps, asked for T={T}")
    if gains.stationary and model.time_varying:
        raise ValueError("stationary gains need time-invariant dynamics")
    d_x, d_u, n = model.d_x, model.d_u, model.n
    R = len(seeds)

    x0_init, X_init = sample_initial(model, seeds)
    xs0 = np.zeros((R, T + 1, d_x))
    Xs = np.zeros((R, T + 1, n, d_x))
    us0 = np.zeros((R, T, d_u))
    Us = np.zeros((R, T, n, d_u))
    ws0, Ws = sample_noise(model, seeds, np.arange(1, T + 1))
    xs0[:, 0] = x0_init if x0 is None else np.asarray(x0, dtype=float)
    Xs[:, 0] = X_init if X is None else np.asarray(X, dtype=float).reshape(n, d_x)

    for k in range(T):
        t = k + 1
        A0, B0, D0, A, B, D, E = model.at(t)
        x0_t, X_t = xs0[:, k], Xs[:, k]
        xbar = X_t.mean(axis=1)
        L11, L12, L21, L22 = gains.blocks(t)
        Ld = gains.dev(t)
        if not gains.leaderless:
            us0[:, k] = x0_t @ L11.T + xbar @ L12.T
        shared = x0_t @ L21.T + xbar @ (L22 - Ld).T
        Us[:, k] = X_t @ Ld.T + shared[:, None, :]
        xs0[:, k + 1] = x0_t @ A0.T + us0[:, k] @ B0.T + xbar @ D0.T + ws0[:, k]
        drift = xbar @ D.T + x0_t @ E.T
        Xs[:, k + 1] = X_t @ A.T + Us[:, k] @ B.T + drift[:, None, :] + Ws[:, k]
        peak = max(float(np.max(np.abs(xs0[:, k + 1]))), float(np.max(np.abs(Xs[:, k + 1]))))
        if not np.isfinite(peak) or peak > DIVERGENCE_CAP:
            raise Diverged(t + 1, peak)
    return xs0, Xs, us0, Us, ws0, Ws


def simulate(model: SystemModel, gains: GainSchedule, T: int, seed: Optional[int] = None,
             cost: Optional[CostModel] = None, x0=None, X=None) -> SimulationTrace:
    """Roll the network forward under the per-agent linear strategies in ``gains``.

    ``seed`` defaults to the model's noise seed. Explicit initial states
    ``x0`` / ``X`` override the model's initial distributions.
    """
    seed = model.noise.seed if seed is None else int(seed)
    arrays = [a[0] for a in _rollout(model, gains, T, [seed], x0, X)]
    for arr in arrays:
        arr.setflags(write=False)
    beta = 1.0 if cost is None else cost.beta
    stage = None if cost is None else _stage_costs(*arrays[:4], cost)
    return SimulationTrace(*arrays, stage, beta, seed)


def simulate_costs(model: SystemModel, gains: GainSchedule, T: int, seeds, cost: CostModel,
                   chunk: int = 2000) -> np.ndarray:
    """Realized (direct-form) cost for each seed; run ``r`` is the path
    ``simulate(model, gains, T, seeds[r])`` would produce."""
    seeds = list(seeds)
    out = []
    for i in range(0, len(seeds), chunk):
        xs0, Xs, us0, Us, _, _ = _rollout(model, gains, T, seeds[i:i + chunk])
        stage = _stage_costs(xs0, Xs, us0, Us, cost)
        disc = cost.beta ** np.arange(T) if cost.infinite else np.ones(T)
        out.append(stage @ disc)
    return np.concatenate(out)


def _quad(x, M):
    """x^T M x over the last axis."""
    return np.einsum("...i,ij,...j->...", x, M, x)


def _stage_costs(x0, X, u0, U, cost):
    """Undiscounted stage costs term by term (pairwise H sum included); any
    leading batch axes are kept."""
    T = u0.shape[-2]
    n = X.shape[-2]
    out = np.zeros(u0.shape[:-2] + (T,))
    for k in range(T):
        Q0, R0, Q, P, R, H = cost.at(k + 1)
        x0k, Xk, u0k, Uk = x0[..., k, :], X[..., k, :, :], u0[..., k, :], U[..., k, :, :]
        leader = _quad(x0k, Q0) + _quad(u0k, R0)
        followers = np.sum(_quad(Xk, Q) + _quad(Xk - x0k[..., None, :], P) + _quad(Uk, R), axis=-1) / n
        diffs = Xk[..., :, None, :] - Xk[..., None, :, :]
        pairwise = np.sum(_quad(diffs, H), axis=(-1, -2)) / (2.0 * n * n)
        out[..., k] = leader + followers + pairwise
    return out


def stage_costs_direct(trace: SimulationTrace, cost: CostModel) -> np.ndarray:
    return _stage_costs(trace.x0, trace.X, trace.u0, trace.U, cost)


def _discounts(trace, cost):
    if cost.infinite:
        return cost.beta ** np.arange(trace.T)
    return np.ones(trace.T)


def evaluate_cost_direct(trace: SimulationTrace, cost: CostModel) -> float:
    """Realized cost of the sample path, evaluated from the original cost expression."""
    return float(np.sum(_discounts(trace, cost) * stage_costs_direct(trace, cost)))


def evaluate_cost_decomposed(trace: SimulationTrace, cost: CostModel, aug=None) -> float:
    """Realized cost from the leader / mean-field quadratic plus follower deviations.

    ``aug`` is an AugmentedSystem, a sequence of them (one per time step), or
    ``None`` to use the cost weights alone (only ``Q_bar``, ``R_bar``,
    ``Q_dev`` and ``R_dev`` are read).
    """
    n = trace.n
    xbar = trace.xbar
    ubar = trace.U.mean(axis=1)
    disc = _discounts(trace, cost)
    total = 0.0
    for k in range(trace.T):
        a = _aug_at(aug, cost, k + 1)
        s = np.concatenate([trace.x0[k], xbar[k]])
        v = np.concatenate([trace.u0[k], ubar[k]])
        dx = trace.X[k] - xbar[k]
        du = trace.U[k] - ubar[k]
        stage = (_quad(s, a.Q_bar) + _quad(v, a.R_bar)
                 + (np.sum(_quad(dx, a.Q_dev)) + np.sum(_quad(du, a.R_dev))) / n)
        total += disc[k] * stage
    return float(total)


def _aug_at(aug, cost, t) -> AugmentedSystem:
    if isinstance(aug, AugmentedSystem):
        return aug
    if aug is not None:
        return aug[t - 1]
    Q0, R0, Q, P, R, H = cost.at(t)
    d_u = R.shape[0]
    zu = np.zeros((d_u, d_u))
    return AugmentedSystem(
        A_bar=None, B_bar=None, A_dev=None, B_dev=None,
        Q_bar=np.block([[Q0 + P, -P], [-P, Q + P]]),
        R_bar=np.block([[R0, zu], [zu, R]]),
        Q_dev=Q + P + H, R_dev=R)


def augmented_sequence(model: SystemModel, cost: CostModel, T: int):
    return [build_augmented(model, cost, t) for t in range(1, T + 1)]


def deviation_residual(trace: SimulationTrace, model: SystemModel) -> float:
    """Largest violation of the decoupled deviation dynamics on the trace."""
    X = trace.X
    dx = X - X.mean(axis=1, keepdims=True)
    du = trace.U - trace.U.mean(axis=1, keepdims=True)
    dw = trace.W - trace.W.mean(axis=1, keepdims=True)
    worst = 0.0
    for k in range(trace.T):
        _, _, _, A, B, _, _ = model.at(k + 1)
        r = dx[k + 1] - dx[k] @ A.T - du[k] @ B.T - dw[k]
        worst = max(worst, float(np.max(np.abs(r), initial=0.0)))
    return worst
