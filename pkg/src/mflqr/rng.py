"""Counter-based random streams (Philox4x32-10), vectorized over counters.

Every draw is a pure function of ``(seed, t, agent, block, purpose)`` so the
noise an agent sees at a given time does not depend on the number of agents
or on the order in which they are processed.
"""
from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)

NOISE = 0
INIT = 1


def philox4x32(counter, key, rounds=10):
    """Philox4x32 bijection.

    ``counter`` is an array of shape ``(..., 4)`` of 32-bit words and ``key``
    an array of shape ``(..., 2)`` broadcastable against it; returns uint32
    words of the counter's shape.
    """
    c = np.asarray(counter, dtype=np.uint64) & _MASK
    k = np.asarray(key, dtype=np.uint64) & _MASK
    c0, c1, c2, c3 = (c[..., i] for i in range(4))
    k0, k1 = k[..., 0], k[..., 1]
    for _ in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT, p0 & _MASK
        hi1, lo1 = p1 >> _SHIFT, p1 & _MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0)
        k0 = (k0 + np.uint64(_W0)) & _MASK
        k1 = (k1 + np.uint64(_W1)) & _MASK
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def _keys(seeds):
    out = []
    for seed in seeds:
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        out.append((seed & 0xFFFFFFFF, seed >> 32))
    return np.array(out, dtype=np.uint64).reshape(-1, 2)


def uniform_words(seed, t, agents, n_blocks, purpose=NOISE):
    """Raw words of shape ``(len(t), len(agents), 4 * n_blocks)``, or
    ``(len(agents), 4 * n_blocks)`` for a scalar ``t``. An array of seeds
    adds a leading seed axis."""
    scalar_seed = np.ndim(seed) == 0
    scalar_t = np.ndim(t) == 0
    keys = _keys(np.atleast_1d(seed))
    times = np.atleast_1d(np.asarray(t, dtype=np.uint64))
    agents = np.asarray(agents, dtype=np.uint64).ravel()
    blocks = np.arange(n_blocks, dtype=np.uint64)
    ctr = np.empty((times.size, agents.size, n_blocks, 4), dtype=np.uint64)
    ctr[..., 0] = blocks
    ctr[..., 1] = times[:, None, None]
    ctr[..., 2] = agents[None, :, None]
    ctr[..., 3] = np.uint64(purpose)
    words = philox4x32(ctr[None], keys[:, None, None, None, :])
    words = words.reshape(len(keys), times.size, agents.size, 4 * n_blocks)
    if scalar_t:
        words = words[:, 0]
    return words[0] if scalar_seed else words


def _to_open01(words):
    return (words.astype(np.float64) + 0.5) * 2.0**-32


def draws(seed, t, agents, dim, purpose=NOISE):
    """Standard normal and uniform(0,1) draws, each of shape ``(len(agents), dim)``
    (with a leading time axis when ``t`` is an array).

    Normals come from Box-Muller on the first words of each block pair,
    uniforms from separate blocks, so the two never share bits.
    """
    n_norm_blocks = (dim + 1) // 2
    n_unif_blocks = (dim + 3) // 4
    words = uniform_words(seed, t, agents, n_norm_blocks + n_unif_blocks, purpose)
    u = _to_open01(words)
    lead = u.shape[:-1]
    nw = u[..., : 4 * n_norm_blocks].reshape(lead + (n_norm_blocks, 4))
    r = np.sqrt(-2.0 * np.log(nw[..., 0]))
    theta = 2.0 * np.pi * nw[..., 1]
    normals = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1).reshape(lead + (-1,))
    uniforms = u[..., 4 * n_norm_blocks:]
    return normals[..., :dim], uniforms[..., :dim]


def stream_normals(seed, t, agent, size, purpose=NOISE):
    """``size`` standard normals from the single stream keyed by ``(seed, t, agent)``,
    taken from successive block counters."""
    blocks = (size + 1) // 2
    words = uniform_words(seed, t, [agent], blocks, purpose)[0]
    u = _to_open01(words).reshape(blocks, 4)
    r = np.sqrt(-2.0 * np.log(u[:, 0]))
    theta = 2.0 * np.pi * u[:, 1]
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1).ravel()[:size]
