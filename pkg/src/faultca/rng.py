"""Counter-based random bits (Philox4x64-10).

Every draw is a pure function of ``(seed, counter)``, so simulations give the
same fault pattern regardless of evaluation order or thread count. The scalar
kernel is numba-compiled for the simulation loop; ``philox4x64`` is the
vectorized numpy twin used everywhere else.
"""

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0
ROUNDS = 10

# counter word 3 separates independent streams
STREAM_TRANSIENT = 0
STREAM_MANUFACTURING = 1


@njit(cache=True, inline="always")
def _mulhi(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    return hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)


@njit(cache=True)
def philox_scalar(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block for a single counter; returns four uint64."""
    x0 = np.uint64(c0)
    x1 = np.uint64(c1)
    x2 = np.uint64(c2)
    x3 = np.uint64(c3)
    key0 = np.uint64(k0)
    key1 = np.uint64(k1)
    for r in range(ROUNDS):
        if r > 0:
            key0 = key0 + _W0
            key1 = key1 + _W1
        hi0 = _mulhi(_M0, x0)
        lo0 = _M0 * x0
        hi1 = _mulhi(_M1, x2)
        lo1 = _M1 * x2
        x0, x1, x2, x3 = hi1 ^ x1 ^ key0, lo1, hi0 ^ x3 ^ key1, lo0
    return x0, x1, x2, x3


@njit(cache=True, inline="always")
def to_unit(x):
    """Map a uint64 to a double in [0, 1) using its top 53 bits."""
    return float(x >> _S11) * _INV53


def _mulhi_np(a, b):
    a_lo = a & _LO32
    a_hi = a >> _S32
    b_lo = b & _LO32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    return hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)


def philox4x64(counter, key):
    """Vectorized Philox4x64-10.

    ``counter`` is broadcastable to ``(..., 4)`` and ``key`` to ``(..., 2)``;
    returns a uint64 array of shape ``(..., 4)``.
    """
    counter = np.asarray(counter, dtype=np.uint64)
    key = np.asarray(key, dtype=np.uint64)
    shape = np.broadcast_shapes(counter.shape[:-1], key.shape[:-1])
    x = [np.array(np.broadcast_to(counter[..., i], shape), dtype=np.uint64) for i in range(4)]
    k0 = np.array(np.broadcast_to(key[..., 0], shape), dtype=np.uint64)
    k1 = np.array(np.broadcast_to(key[..., 1], shape), dtype=np.uint64)
    with np.errstate(over="ignore"):
        for r in range(ROUNDS):
            if r > 0:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0 = _mulhi_np(_M0, x[0])
            lo0 = _M0 * x[0]
            hi1 = _mulhi_np(_M1, x[2])
            lo1 = _M1 * x[2]
            x = [hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0]
    return np.stack(x, axis=-1)


def seed_key(seed):
    """Split a nonnegative integer seed (< 2**128) into the two key words."""
    seed = int(seed)
    if seed < 0 or seed >= 1 << 128:
        raise ValueError(f"seed must be in [0, 2**128), got {seed}")
    return np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(seed >> 64)


def uniforms(seed, vertex, time, replicate, stream):
    """Uniform doubles keyed by (seed, replicate, vertex, time, stream).

    Replicates are grouped four to a Philox block: replicate ``r`` reads word
    ``r % 4`` of the block with counter ``(vertex, time, r // 4, stream)``.
    Arguments broadcast against each other.
    """
    vertex, time, replicate = np.broadcast_arrays(
        np.asarray(vertex, dtype=np.uint64),
        np.asarray(time, dtype=np.uint64),
        np.asarray(replicate, dtype=np.uint64),
    )
    ctr = np.stack(
        [vertex, time, replicate // np.uint64(4), np.full(vertex.shape, stream, dtype=np.uint64)],
        axis=-1,
    )
    k0, k1 = seed_key(seed)
    words = philox4x64(ctr, np.array([k0, k1], dtype=np.uint64))
    lane = (replicate % np.uint64(4)).astype(np.intp)
    picked = np.take_along_axis(words, lane[..., None], axis=-1)[..., 0]
    return (picked >> _S11).astype(np.float64) * _INV53
