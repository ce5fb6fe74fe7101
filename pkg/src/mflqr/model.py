"""System and cost models, augmented matrices and assumption checks.

Matrices are stored as numpy arrays. A time-varying matrix is a 3-d array of
shape ``(T, rows, cols)`` whose entry ``k`` is the matrix at time ``t = k+1``;
a constant matrix is 2-d and is broadcast over every time step.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NotPSD

SYM_TOL = 1e-12
RANK_TOL = 1e-10
PSD_TOL = 1e-10


def as_matrix(value, rows=None, cols=None) -> np.ndarray:
    """Promote a scalar / nested list to a float 2-d array (or 3-d sequence)."""
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1) if cols == 1 else arr.reshape(1, -1)
    if arr.ndim not in (2, 3):
        raise DimensionMismatch(f"expected a matrix or matrix sequence, got ndim={arr.ndim}")
    arr.setflags(write=False)
    return arr


def as_vector(value, dim=None) -> np.ndarray:
    arr = np.atleast_1d(np.array(value, dtype=float)).ravel()
    if dim is not None and arr.shape != (dim,):
        raise DimensionMismatch(f"expected a vector of length {dim}, got shape {arr.shape}")
    return arr


def constant_sequence(matrix, T: int) -> np.ndarray:
    """Broadcast a constant matrix into a length-T time-varying sequence."""
    m = as_matrix(matrix)
    out = np.repeat(m[None, :, :], T, axis=0)
    out.setflags(write=False)
    return out


def at(matrix: np.ndarray, t: int) -> np.ndarray:
    """Matrix at time ``t`` (1-based); constant matrices ignore ``t``."""
    if matrix.ndim == 3:
        return matrix[t - 1]
    return matrix


def _frame(matrix: np.ndarray):
    return matrix.shape[-2:]


def _symmetrize(W: np.ndarray) -> np.ndarray:
    return 0.5 * (W + np.swapaxes(W, -1, -2))


@dataclass(frozen=True)
class Dims:
    d_x: int
    d_u: int
    n: int
    T: Optional[int] = None

    def __post_init__(self):
        if self.d_x < 1 or self.d_u < 1 or self.n < 1:
            raise DimensionMismatch(f"dimensions must be positive: {self}")
        if self.T is not None and self.T < 1:
            raise DimensionMismatch(f"horizon must be positive, got T={self.T}")


@dataclass(frozen=True)
class Distribution:
    """A distribution over R^d.

    ``kind`` is one of ``gaussian`` (``mean`` + ``cov``), ``uniform``
    (per-coordinate ``low``/``high``), ``zero`` or ``fixed`` (point mass at
    ``mean``).
    """

    kind: str
    dim: int
    mean: Optional[np.ndarray] = None
    cov: Optional[np.ndarray] = None
    low: Optional[np.ndarray] = None
    high: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "uniform", "zero", "fixed"):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if self.kind == "gaussian":
            cov = as_matrix(self.cov)
            if cov.shape == (1, 1) and self.dim > 1:
                cov = as_matrix(cov[0, 0] * np.eye(self.dim))
            if cov.shape != (self.dim, self.dim):
                raise DimensionMismatch(f"covariance shape {cov.shape} != ({self.dim}, {self.dim})")
            if np.max(np.abs(cov - cov.T), initial=0.0) > SYM_TOL * max(1.0, np.abs(cov).max()):
                raise NotPSD("covariance is not symmetric")
            object.__setattr__(self, "cov", as_matrix(_symmetrize(cov)))
            object.__setattr__(self, "_sqrt", matrix_sqrt_psd(self.cov))
        if self.kind == "uniform":
            low = np.broadcast_to(as_vector(self.low), (self.dim,)).copy()
            high = np.broadcast_to(as_vector(self.high), (self.dim,)).copy()
            if np.any(high < low):
                raise ValueError("uniform distribution needs low <= high")
            object.__setattr__(self, "low", low)
            object.__setattr__(self, "high", high)
        mean = np.zeros(self.dim) if self.mean is None else as_vector(self.mean)
        mean = np.broadcast_to(mean, (self.dim,)).copy()
        object.__setattr__(self, "mean", mean)

    @classmethod
    def zero(cls, dim):
        return cls("zero", dim)

    @classmethod
    def fixed(cls, value):
        v = as_vector(value)
        return cls("fixed", v.size, mean=v)

    @classmethod
    def gaussian(cls, cov, dim=None, mean=None):
        c = as_matrix(cov)
        return cls("gaussian", dim or c.shape[0], mean=mean, cov=c)

    @classmethod
    def uniform(cls, low, high, dim=None):
        lo = as_vector(low)
        return cls("uniform", dim or lo.size, low=lo, high=as_vector(high))

    @property
    def is_zero_mean(self) -> bool:
        if self.kind == "uniform":
            return bool(np.allclose(self.low + self.high, 0.0, atol=1e-15))
        return bool(np.all(self.mean == 0.0))

    def expectation(self) -> np.ndarray:
        if self.kind == "uniform":
            return 0.5 * (self.low + self.high)
        return self.mean.copy()

    def covariance(self) -> np.ndarray:
        if self.kind == "gaussian":
            return np.array(self.cov)
        if self.kind == "uniform":
            return np.diag((self.high - self.low) ** 2 / 12.0)
        return np.zeros((self.dim, self.dim))

    def transform(self, standard_normal: np.ndarray, uniform01: np.ndarray) -> np.ndarray:
        """Map standard draws of shape ``(..., dim)`` onto this distribution."""
        k = standard_normal.shape[:-1]
        if self.kind == "gaussian":
            return self.mean + standard_normal @ self._sqrt.T
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * uniform01
        return np.broadcast_to(self.mean, k + (self.dim,)).copy()


@dataclass(frozen=True)
class NoiseModel:
    leader: Distribution
    follower: Distribution
    seed: int = 0

    def __post_init__(self):
        for name in ("leader", "follower"):
            dist = getattr(self, name)
            if dist.kind == "fixed" or not dist.is_zero_mean:
                raise ValueError(f"{name} noise must be zero-mean")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def noiseless(cls, d_x, seed=0):
        return cls(Distribution.zero(d_x), Distribution.zero(d_x), seed)


@dataclass(frozen=True)
class SystemModel:
    A0: np.ndarray
    B0: np.ndarray
    D0: np.ndarray
    A: np.ndarray
    B: np.ndarray
    D: np.ndarray
    E: np.ndarray
    n: int
    noise: Optional[NoiseModel] = None
    x0_init: Optional[Distribution] = None
    follower_init: Optional[Distribution] = None

    def __post_init__(self):
        for name in ("A0", "B0", "D0", "A", "B", "D", "E"):
            object.__setattr__(self, name, as_matrix(getattr(self, name)))
        if self.noise is None:
            object.__setattr__(self, "noise", NoiseModel.noiseless(self.d_x))
        if self.x0_init is None:
            object.__setattr__(self, "x0_init", Distribution.zero(self.d_x))
        elif not isinstance(self.x0_init, Distribution):
            object.__setattr__(self, "x0_init", Distribution.fixed(self.x0_init))
        if self.follower_init is None:
            object.__setattr__(self, "follower_init", Distribution.zero(self.d_x))

    @property
    def d_x(self) -> int:
        return _frame(self.A)[0]

    @property
    def d_u(self) -> int:
        return _frame(self.B)[1]

    @property
    def time_varying(self) -> bool:
        return any(getattr(self, k).ndim == 3 for k in ("A0", "B0", "D0", "A", "B", "D", "E"))

    def at(self, t):
        """Dynamics matrices (A0, B0, D0, A, B, D, E) at time t."""
        return tuple(at(getattr(self, k), t) for k in ("A0", "B0", "D0", "A", "B", "D", "E"))


@dataclass(frozen=True)
class CostModel:
    Q0: np.ndarray
    R0: np.ndarray
    Q: np.ndarray
    P: np.ndarray
    R: np.ndarray
    H: np.ndarray
    T: Optional[int] = None
    beta: float = 1.0
    asymmetry: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.T is not None and self.T < 1:
            raise ValueError(f"horizon must be positive, got T={self.T}")
        if not (0.0 < self.beta <= 1.0):
            raise ValueError(f"discount factor beta={self.beta} outside (0, 1]")
        if self.T is not None and self.beta != 1.0:
            raise ValueError("discounting is only defined for the infinite horizon")
        asym = {}
        for name in ("Q0", "R0", "Q", "P", "R", "H"):
            W = as_matrix(getattr(self, name))
            asym[name] = float(np.max(np.abs(W - np.swapaxes(W, -1, -2)), initial=0.0))
            if asym[name] <= SYM_TOL * max(1.0, float(np.abs(W).max(initial=0.0))):
                W = as_matrix(_symmetrize(W))
            object.__setattr__(self, name, W)
        object.__setattr__(self, "asymmetry", asym)

    @property
    def infinite(self) -> bool:
        return self.T is None

    @property
    def time_varying(self) -> bool:
        return any(getattr(self, k).ndim == 3 for k in ("Q0", "R0", "Q", "P", "R", "H"))

    def at(self, t):
        """Weights (Q0, R0, Q, P, R, H) at time t."""
        return tuple(at(getattr(self, k), t) for k in ("Q0", "R0", "Q", "P", "R", "H"))


def is_leaderless(model: SystemModel, cost: CostModel) -> bool:
    """Leader has no actuation, no cost and no coupling to the followers."""
    return all(not np.any(m) for m in (model.B0, model.D0, cost.Q0, cost.R0))


def check_dims(model: SystemModel, cost: CostModel) -> Dims:
    d_x, d_u = model.d_x, model.d_u
    expected = {
        "A0": (d_x, d_x), "B0": (d_x, d_u), "D0": (d_x, d_x),
        "A": (d_x, d_x), "B": (d_x, d_u), "D": (d_x, d_x), "E": (d_x, d_x),
    }
    mats = {k: getattr(model, k) for k in expected}
    for k in ("Q0", "Q", "P", "H"):
        expected[k] = (d_x, d_x)
        mats[k] = getattr(cost, k)
    for k in ("R0", "R"):
        expected[k] = (d_u, d_u)
        mats[k] = getattr(cost, k)
    for k, shape in expected.items():
        if _frame(mats[k]) != shape:
            raise DimensionMismatch(f"{k} has shape {_frame(mats[k])}, expected {shape}")
        if mats[k].ndim == 3:
            if cost.T is None:
                raise DimensionMismatch(f"{k} is time-varying but the horizon is infinite")
            if mats[k].shape[0] != cost.T:
                raise DimensionMismatch(f"{k} has {mats[k].shape[0]} time steps, expected T={cost.T}")
    noise = model.noise
    for name, dist in (("leader noise", noise.leader), ("follower noise", noise.follower),
                       ("x0_init", model.x0_init), ("follower_init", model.follower_init)):
        if dist.dim != d_x:
            raise DimensionMismatch(f"{name} has dimension {dist.dim}, expected {d_x}")
    return Dims(d_x, d_u, model.n, cost.T)


def matrix_sqrt_psd(S) -> np.ndarray:
    """Symmetric square root of a symmetric PSD matrix via eigendecomposition."""
    S = _symmetrize(np.asarray(S, dtype=float))
    w, V = np.linalg.eigh(S)
    scale = float(np.max(np.abs(w), initial=0.0))
    if w.size and w.min() < -PSD_TOL * scale:
        raise NotPSD(f"matrix has eigenvalue {w.min():.6g} < 0")
    X = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T
    return _symmetrize(X)


def _numerical_rank(M: np.ndarray) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def check_stabilizable(A, B):
    """Discrete-time PBH stabilizability test.

    Returns ``(ok, witness)`` where ``witness`` is the first eigenvalue on or
    outside the unit circle at which ``[lambda I - A, B]`` loses rank.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    k = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - 1e-12:
            continue
        if _numerical_rank(np.hstack([lam * np.eye(k) - A, B])) < k:
            return False, lam.real if lam.imag == 0 else lam
    return True, None


def check_detectable(A, C):
    """Dual PBH test: ``(A, C)`` detectable iff ``(A^T, C^T)`` stabilizable."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = np.asarray(C, dtype=float).reshape(-1, A.shape[0])
    return check_stabilizable(A.T, C.T)


@dataclass(frozen=True)
class AugmentedSystem:
    """Leader / mean-field system and the deviation-cost weights at one time.

    ``B_bar`` and ``R_bar`` always carry both control channels; ``B_ctrl`` and
    ``R_ctrl`` drop the leader channel in leaderless mode and are what the
    Riccati solver uses.
    """

    A_bar: np.ndarray
    B_bar: np.ndarray
    Q_bar: np.ndarray
    R_bar: np.ndarray
    Q_dev: np.ndarray
    R_dev: np.ndarray
    A_dev: np.ndarray
    B_dev: np.ndarray
    leaderless: bool = False

    @property
    def B_ctrl(self):
        d_u = self.R_dev.shape[0]
        return self.B_bar[:, d_u:] if self.leaderless else self.B_bar

    @property
    def R_ctrl(self):
        d_u = self.R_dev.shape[0]
        return self.R_bar[d_u:, d_u:] if self.leaderless else self.R_bar


def build_augmented(model: SystemModel, cost: CostModel, t: int = 1,
                    leaderless: Optional[bool] = None) -> AugmentedSystem:
    A0, B0, D0, A, B, D, E = model.at(t)
    Q0, R0, Q, P, R, H = cost.at(t)
    d_x, d_u = model.d_x, model.d_u
    zx = np.zeros((d_x, d_u))
    zu = np.zeros((d_u, d_u))
    if leaderless is None:
        leaderless = is_leaderless(model, cost)
    return AugmentedSystem(
        A_bar=np.block([[A0, D0], [E, A + D]]),
        B_bar=np.block([[B0, zx], [zx, B]]),
        Q_bar=np.block([[Q0 + P, -P], [-P, Q + P]]),
        R_bar=np.block([[R0, zu], [zu, R]]),
        Q_dev=Q + P + H,
        R_dev=np.array(R),
        A_dev=np.array(A),
        B_dev=np.array(B),
        leaderless=leaderless,
    )


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    witness: object = None
    required: bool = True
    note: str = ""

    def __str__(self):
        status = "PASS" if self.passed else ("FAIL" if self.required else "WARN")
        text = f"[{status}] {self.name}"
        if self.witness is not None:
            text += f" (witness: {self.witness})"
        if self.note:
            text += f" - {self.note}"
        return text


@dataclass(frozen=True)
class ValidationReport:
    checks: Sequence[Check]
    leaderless: bool = False

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.required)

    @property
    def failures(self):
        return [c for c in self.checks if c.required and not c.passed]

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self):
        lines = [str(c) for c in self.checks]
        if self.leaderless:
            lines.insert(0, "leaderless model: leader control channel removed")
        return "\n".join(lines)


def _min_eig(S):
    return float(np.linalg.eigvalsh(_symmetrize(S)).min())


def _times(model, cost):
    if cost.T is None or not (model.time_varying or cost.time_varying):
        return [1]
    return list(range(1, cost.T + 1))


def validate(model: SystemModel, cost: CostModel) -> ValidationReport:
    """Check symmetry, (semi)definiteness and, for the infinite horizon,
    stabilizability / detectability of the two reduced systems."""
    check_dims(model, cost)
    leaderless = is_leaderless(model, cost)
    checks = []
    for name, asym in cost.asymmetry.items():
        scale = max(1.0, float(np.abs(getattr(cost, name)).max(initial=0.0)))
        checks.append(Check(f"symmetric:{name}", asym <= SYM_TOL * scale,
                            None if asym <= SYM_TOL * scale else asym))

    times = _times(model, cost)

    def definiteness(label, getter, strict):
        for t in times:
            S = getter(t)
            lam = _min_eig(S)
            scale = max(1.0, float(np.abs(S).max(initial=0.0)))
            bad = lam <= SYM_TOL * scale if strict else lam < -PSD_TOL * scale
            if bad:
                w = lam if len(times) == 1 else (t, lam)
                return Check(label, False, w)
        return Check(label, True)

    checks.append(definiteness("psd:Q+P+H", lambda t: build_augmented(model, cost, t).Q_dev, False))
    checks.append(definiteness("psd:Q_bar", lambda t: build_augmented(model, cost, t).Q_bar, False))
    if leaderless:
        checks.append(Check("pd:R0", True, note="skipped: leaderless model"))
    else:
        checks.append(definiteness("pd:R0", lambda t: cost.at(t)[1], True))
    checks.append(definiteness("pd:R", lambda t: cost.at(t)[4], True))

    if cost.infinite:
        aug = build_augmented(model, cost, 1, leaderless)
        sb = np.sqrt(cost.beta)
        ok, w = check_stabilizable(sb * aug.A_dev, sb * aug.B_dev)
        checks.append(Check("stabilizable:deviation", ok, w))
        ok, w = check_stabilizable(sb * aug.A_bar, sb * aug.B_ctrl)
        checks.append(Check("stabilizable:augmented", ok, w))
        psd_ok = all(c.passed for c in checks if c.name.startswith("psd:"))
        if psd_ok:
            ok, w = check_detectable(sb * aug.A_dev, matrix_sqrt_psd(aug.Q_dev))
            checks.append(Check("detectable:deviation", ok, w,
                                note="pair uses (Q+P+H)^1/2, the deviation stage weight"))
            try:
                ok, w = check_detectable(sb * aug.A_dev, matrix_sqrt_psd(cost.Q))
            except NotPSD:
                ok, w = False, _min_eig(cost.Q)
            checks.append(Check("detectable:deviation-with-Q", ok, w, required=False,
                                note="alternative pair using Q^1/2 alone; informational"))
            ok, w = check_detectable(sb * aug.A_bar, matrix_sqrt_psd(aug.Q_bar))
            checks.append(Check("detectable:augmented", ok, w))
    return ValidationReport(tuple(checks), leaderless)
