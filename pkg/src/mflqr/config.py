"""Strict JSON experiment configuration.

Layout (scalars are promoted to 1x1 matrices; ``{"sequence": [...]}`` gives a
time-varying matrix with one entry per step)::

    {
      "n": 100,
      "horizon": {"T": 80}            # or {"infinite": true, "beta": 0.9}
      "seed": 0, "num_runs": 1,
      "model": {
        "A0": 1, "B0": 0.3, "D0": 0.05, "A": 1, "B": 0.2, "D": 0.01, "E": 0.01,
        "x0_init": 30,                # vector, or a distribution
        "follower_init": {"kind": "uniform", "low": 0, "high": 20},
        "noise": {"leader": {"kind": "gaussian", "cov": 0.1},
                  "follower": {"kind": "gaussian", "cov": 0.2}}
      },
      "cost": {"Q0": 1, "R0": 100, "Q": 0.1, "P": 50, "R": 50, "H": 1},
      "output": {"dir": "out"},
      "flags": {"leaderless": false, "consensus_form": true, "oracle_n": 3}
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import numpy as np

from .errors import ConfigError
from .model import CostModel, Distribution, NoiseModel, SystemModel, as_matrix

TOP_KEYS = {"n", "horizon", "seed", "num_runs", "model", "cost", "output", "flags"}
MODEL_KEYS = {"A0", "B0", "D0", "A", "B", "D", "E", "x0_init", "follower_init", "noise"}
COST_KEYS = {"Q0", "R0", "Q", "P", "R", "H"}
LEADER_KEYS = {"B0", "D0", "Q0", "R0"}
FLAG_KEYS = {"leaderless", "consensus_form", "oracle_n"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: SystemModel
    cost: CostModel
    n: int
    seed: int = 0
    num_runs: int = 1
    out_dir: Optional[str] = None
    leaderless: bool = False
    consensus_form: bool = False
    oracle_n: Optional[int] = None
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def T(self):
        return self.cost.T

    @property
    def infinite(self):
        return self.cost.infinite

    def with_seed(self, seed):
        noise = replace(self.model.noise, seed=seed)
        return replace(self, seed=seed, model=replace(self.model, noise=noise))


def _ptr(*parts):
    return "/" + "/".join(str(p) for p in parts)


def _require(obj, key, path):
    if key not in obj:
        raise ConfigError(_ptr(*path, key), f"missing required key {key!r}")
    return obj[key]


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(_ptr(*path), "expected an object")
    for k in obj:
        if k not in allowed:
            raise ConfigError(_ptr(*path, k), f"unknown key {k!r}")


def _matrix(value, path, T):
    if isinstance(value, dict):
        _check_keys(value, {"sequence"}, path)
        seq = _require(value, "sequence", path)
        if T is None or not isinstance(seq, list) or len(seq) != T:
            raise ConfigError(_ptr(*path, "sequence"),
                              f"time-varying sequence must have exactly T={T} entries")
        try:
            return as_matrix([as_matrix(m) for m in seq])
        except ValueError as exc:
            raise ConfigError(_ptr(*path, "sequence"), str(exc)) from None
    try:
        m = as_matrix(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(_ptr(*path), f"not a matrix: {exc}") from None
    if m.ndim != 2 or not np.all(np.isfinite(m)):
        raise ConfigError(_ptr(*path), "expected a finite matrix")
    return m


def _distribution(value, dim, path, zero_mean):
    if not isinstance(value, dict):
        if zero_mean:
            raise ConfigError(_ptr(*path), "expected a distribution object")
        try:
            return Distribution.fixed(np.broadcast_to(np.asarray(value, dtype=float).ravel(), (dim,)))
        except ValueError as exc:
            raise ConfigError(_ptr(*path), str(exc)) from None
    kind = _require(value, "kind", path)
    allowed = {"gaussian": {"kind", "cov"}, "uniform": {"kind", "low", "high"}, "zero": {"kind"}}
    if not zero_mean:
        allowed["gaussian"] = allowed["gaussian"] | {"mean"}
    if kind not in allowed:
        raise ConfigError(_ptr(*path, "kind"), f"unknown distribution kind {kind!r}")
    _check_keys(value, allowed[kind], path)
    try:
        if kind == "gaussian":
            dist = Distribution.gaussian(_require(value, "cov", path), dim=dim, mean=value.get("mean"))
        elif kind == "uniform":
            dist = Distribution.uniform(_require(value, "low", path), _require(value, "high", path), dim=dim)
        else:
            dist = Distribution.zero(dim)
    except ValueError as exc:
        raise ConfigError(_ptr(*path), str(exc)) from None
    if zero_mean and not dist.is_zero_mean:
        raise ConfigError(_ptr(*path), "noise must be zero-mean (uniform needs low = -high)")
    return dist


def _int(obj, key, path, default=None, minimum=None):
    if key not in obj:
        if default is None:
            raise ConfigError(_ptr(*path, key), f"missing required key {key!r}")
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(_ptr(*path, key), "expected an integer")
    if minimum is not None and v < minimum:
        raise ConfigError(_ptr(*path, key), f"must be >= {minimum}")
    return v


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    _check_keys(data, TOP_KEYS, ())
    n = _int(data, "n", ())
    if n < 1:
        raise ConfigError("/n", "follower count must be >= 1")
    seed = _int(data, "seed", (), default=0, minimum=0)
    if seed >= 2**64:
        raise ConfigError("/seed", "seed must fit in 64 bits")
    num_runs = _int(data, "num_runs", (), default=1, minimum=1)

    horizon = _require(data, "horizon", ())
    _check_keys(horizon, {"T", "infinite", "beta"}, ("horizon",))
    infinite = horizon.get("infinite", False)
    if not isinstance(infinite, bool):
        raise ConfigError("/horizon/infinite", "expected a boolean")
    if infinite == ("T" in horizon):
        raise ConfigError("/horizon", "give exactly one of 'T' or 'infinite': true")
    beta = horizon.get("beta", 1.0)
    if isinstance(beta, bool) or not isinstance(beta, (int, float)) or not 0.0 < beta <= 1.0:
        raise ConfigError("/horizon/beta", f"beta={beta!r} outside (0, 1]")
    if not infinite and beta != 1.0:
        raise ConfigError("/horizon/beta", "discounting needs an infinite horizon")
    T = None if infinite else _int(horizon, "T", ("horizon",), minimum=1)

    flags = data.get("flags", {})
    _check_keys(flags, FLAG_KEYS, ("flags",))
    leaderless = flags.get("leaderless", False)
    consensus = flags.get("consensus_form", False)
    for k, v in (("leaderless", leaderless), ("consensus_form", consensus)):
        if not isinstance(v, bool):
            raise ConfigError(_ptr("flags", k), "expected a boolean")
    oracle_n = flags.get("oracle_n")
    if oracle_n is not None:
        oracle_n = _int(flags, "oracle_n", ("flags",), minimum=1)

    mdata = _require(data, "model", ())
    cdata = _require(data, "cost", ())
    _check_keys(mdata, MODEL_KEYS, ("model",))
    _check_keys(cdata, COST_KEYS, ("cost",))

    mats = {}
    for k in ("A", "B", "D", "E", "A0"):
        mats[k] = _matrix(_require(mdata, k, ("model",)), ("model", k), T)
    for k in ("Q", "P", "R", "H"):
        mats[k] = _matrix(_require(cdata, k, ("cost",)), ("cost", k), T)
    d_x = mats["A"].shape[-1]
    d_u = mats["B"].shape[-1]
    zeros = {"B0": np.zeros((d_x, d_u)), "D0": np.zeros((d_x, d_x)),
             "Q0": np.zeros((d_x, d_x)), "R0": np.zeros((d_u, d_u))}
    for k in LEADER_KEYS:
        section, src = ("model", mdata) if k in MODEL_KEYS else ("cost", cdata)
        if k in src:
            mats[k] = _matrix(src[k], (section, k), T)
            if leaderless and np.any(mats[k]):
                raise ConfigError(_ptr(section, k), "must be zero for a leaderless model")
        elif leaderless:
            mats[k] = as_matrix(zeros[k])
        else:
            raise ConfigError(_ptr(section, k), f"missing required key {k!r}")

    noise_data = mdata.get("noise", {})
    _check_keys(noise_data, {"leader", "follower"}, ("model", "noise"))
    zero = {"kind": "zero"}
    leader_noise = _distribution(noise_data.get("leader", zero), d_x, ("model", "noise", "leader"), True)
    follower_noise = _distribution(noise_data.get("follower", zero), d_x, ("model", "noise", "follower"), True)
    x0_init = _distribution(mdata.get("x0_init", 0.0), d_x, ("model", "x0_init"), False)
    f_init = _distribution(mdata.get("follower_init", 0.0), d_x, ("model", "follower_init"), False)

    try:
        model = SystemModel(
            A0=mats["A0"], B0=mats["B0"], D0=mats["D0"], A=mats["A"], B=mats["B"],
            D=mats["D"], E=mats["E"], n=n,
            noise=NoiseModel(leader_noise, follower_noise, seed),
            x0_init=x0_init, follower_init=f_init)
        cost = CostModel(Q0=mats["Q0"], R0=mats["R0"], Q=mats["Q"], P=mats["P"],
                         R=mats["R"], H=mats["H"], T=T, beta=float(beta))
    except ValueError as exc:
        raise ConfigError("", str(exc)) from None

    out = data.get("output", {})
    _check_keys(out, {"dir"}, ("output",))
    out_dir = out.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("/output/dir", "expected a string path")

    return ExperimentConfig(model, cost, n, seed, num_runs, out_dir, leaderless,
                            consensus, oracle_n, raw=data)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def example1_text(infinite=False) -> str:
    name = "example1_infinite.json" if infinite else "example1.json"
    return resources.files("mflqr").joinpath("data", name).read_text(encoding="utf-8")
