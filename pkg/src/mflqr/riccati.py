"""Backward Riccati recursions and value-iteration ARE solver."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NotConverged, SingularInnerMatrix
from .model import CostModel, SystemModel, build_augmented, is_leaderless

COND_LIMIT = 1e14
ARE_TOL = 1e-11
ARE_MAX_ITER = 100_000


def _sym(M):
    return 0.5 * (M + M.T)


def inner_solve(M_next, A, B, R):
    """Return ``(B^T M B + R)^{-1} B^T M A`` using a Cholesky solve."""
    BtM = B.T @ M_next
    S = _sym(BtM @ B + R)
    if S.size and np.linalg.cond(S) > COND_LIMIT:
        raise SingularInnerMatrix(f"B^T M B + R is singular (cond={np.linalg.cond(S):.3e})")
    try:
        factor = scipy.linalg.cho_factor(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnerMatrix(f"B^T M B + R is not positive definite: {exc}") from None
    return scipy.linalg.cho_solve(factor, BtM @ A)


def backward_step(M_next, A, B, Qstage, Rstage):
    """One step of the Riccati difference equation, symmetrized."""
    M_next = np.asarray(M_next, dtype=float)
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    AtM = A.T @ M_next
    X = inner_solve(M_next, A, B, Rstage)
    return _sym(AtM @ A - AtM @ B @ X + Qstage)


@dataclass(frozen=True)
class AREDiagnostics:
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class RiccatiSolution:
    """Value matrices for the deviation and augmented systems.

    Finite horizon: ``M_dev[k]`` is the matrix at time ``t = k+1`` for
    ``t = 1..T+1``. Infinite horizon: single stationary matrices.
    """

    M_dev: np.ndarray
    M_bar: np.ndarray
    T: Optional[int]
    beta: float = 1.0
    leaderless: bool = False
    dev_diagnostics: Optional[AREDiagnostics] = None
    bar_diagnostics: Optional[AREDiagnostics] = None
    solver_dims: tuple = ()

    @property
    def stationary(self) -> bool:
        return self.T is None

    def dev(self, t):
        return self.M_dev if self.stationary else self.M_dev[t - 1]

    def bar(self, t):
        return self.M_bar if self.stationary else self.M_bar[t - 1]


def solve_finite(model: SystemModel, cost: CostModel) -> RiccatiSolution:
    if cost.T is None:
        raise ValueError("solve_finite needs a finite horizon")
    T = cost.T
    leaderless = is_leaderless(model, cost)
    d_x = model.d_x
    M_dev = np.zeros((T + 1, d_x, d_x))
    M_bar = np.zeros((T + 1, 2 * d_x, 2 * d_x))
    for t in range(T, 0, -1):
        aug = build_augmented(model, cost, t, leaderless)
        M_dev[t - 1] = backward_step(M_dev[t], aug.A_dev, aug.B_dev, aug.Q_dev, aug.R_dev)
        M_bar[t - 1] = backward_step(M_bar[t], aug.A_bar, aug.B_ctrl, aug.Q_bar, aug.R_ctrl)
    M_dev.setflags(write=False)
    M_bar.setflags(write=False)
    return RiccatiSolution(M_dev, M_bar, T, 1.0, leaderless,
                           solver_dims=(M_dev.shape[-1], M_bar.shape[-1]))


def solve_are(A, B, Qstage, Rstage, beta=1.0, tol=ARE_TOL, max_iter=ARE_MAX_ITER):
    """Stationary solution of the beta-discounted ARE.

    The discounted problem on ``(A, B)`` is solved as the undiscounted one on
    ``(sqrt(beta) A, sqrt(beta) B)`` by value iteration from zero.
    Returns ``(M, AREDiagnostics)``.
    """
    if not (0.0 < beta <= 1.0):
        raise ValueError(f"beta={beta} outside (0, 1]")
    s = np.sqrt(beta)
    A = s * np.asarray(A, dtype=float)
    B = s * np.asarray(B, dtype=float)
    Qstage = np.asarray(Qstage, dtype=float)
    Rstage = np.asarray(Rstage, dtype=float)
    M = np.zeros_like(A)
    diff = np.inf
    for k in range(1, max_iter + 1):
        M_new = backward_step(M, A, B, Qstage, Rstage)
        if not np.all(np.isfinite(M_new)):
            raise NotConverged(k, float("inf"))
        diff = float(np.max(np.abs(M_new - M), initial=0.0))
        scale = max(1.0, float(np.max(np.abs(M), initial=0.0)))
        M = M_new
        if diff < tol * scale:
            # polish down to the floating-point floor while the step keeps shrinking
            while k < max_iter:
                M_new = backward_step(M, A, B, Qstage, Rstage)
                step = float(np.max(np.abs(M_new - M), initial=0.0))
                if step >= diff or step == 0.0:
                    break
                M, diff, k = M_new, step, k + 1
            residual = float(np.max(np.abs(backward_step(M, A, B, Qstage, Rstage) - M), initial=0.0))
            return M, AREDiagnostics(k, residual, True)
    raise NotConverged(max_iter, diff)


def solve_infinite(model: SystemModel, cost: CostModel, **kwargs) -> RiccatiSolution:
    if cost.T is not None:
        raise ValueError("solve_infinite needs an infinite horizon")
    leaderless = is_leaderless(model, cost)
    aug = build_augmented(model, cost, 1, leaderless)
    M_dev, dd = solve_are(aug.A_dev, aug.B_dev, aug.Q_dev, aug.R_dev, cost.beta, **kwargs)
    M_bar, db = solve_are(aug.A_bar, aug.B_ctrl, aug.Q_bar, aug.R_ctrl, cost.beta, **kwargs)
    return RiccatiSolution(M_dev, M_bar, None, cost.beta, leaderless, dd, db,
                           solver_dims=(M_dev.shape[-1], M_bar.shape[-1]))


def solve(model: SystemModel, cost: CostModel) -> RiccatiSolution:
    return solve_infinite(model, cost) if cost.infinite else solve_finite(model, cost)
