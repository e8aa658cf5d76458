"""Counter-based normal variates (Philox4x32-10).

A draw is a pure function of ``(seed, path, step, tag)``: the 64-bit master
seed is the Philox key, the counter words are ``(step_lo, step_hi, path,
tag)``. One block of four 32-bit words yields two uniforms and, through
Box-Muller, the two standard normals that drive the price (channel 0) and the
volatility (channel 1) at that step. No generator state is shared, so results
do not depend on how paths are scheduled across workers.
"""

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_TWO_PI = 2.0 * np.pi
_INV53 = 1.0 / 9007199254740992.0  # 2**-53

TAG_SDE = 0
TAG_SAMPLING = 1


@nb.njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32; all arguments are uint64 holding 32-bit words."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _SH32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _SH32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


@nb.njit(cache=True, nogil=True)
def split_seed(seed):
    s = np.uint64(seed)
    return s & _MASK32, (s >> _SH32) & _MASK32


@nb.njit(cache=True, nogil=True)
def normal_pair(k0, k1, path, step, tag):
    """Two independent N(0,1) draws for ``(path, step, tag)`` under key (k0, k1)."""
    st = np.uint64(step)
    r0, r1, r2, r3 = philox4x32(st & _MASK32, st >> _SH32, np.uint64(path) & _MASK32,
                                np.uint64(tag) & _MASK32, k0, k1)
    # 53-bit uniforms in (0, 1)
    u1 = (float((r0 >> np.uint64(5)) * np.uint64(67108864) + (r1 >> np.uint64(6))) + 0.5) * _INV53
    u2 = (float((r2 >> np.uint64(5)) * np.uint64(67108864) + (r3 >> np.uint64(6))) + 0.5) * _INV53
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = _TWO_PI * u2
    return rad * np.cos(ang), rad * np.sin(ang)


@nb.njit(cache=True, nogil=True)
def _fill_normals(seed, path, step0, count, tag, out):
    k0, k1 = split_seed(seed)
    for i in range(count):
        n1, n2 = normal_pair(k0, k1, path, step0 + i, tag)
        out[i, 0] = n1
        out[i, 1] = n2


def normals(seed: int, path: int, steps, tag: int = TAG_SDE) -> np.ndarray:
    """Array of shape ``(len(steps), 2)`` of the noise used at the given steps.

    ``steps`` is either an int (steps ``0..steps-1``) or a ``(start, stop)`` pair.
    """
    if isinstance(steps, tuple):
        start, stop = steps
    else:
        start, stop = 0, int(steps)
    out = np.empty((stop - start, 2))
    _fill_normals(np.uint64(seed % 2**64), path, start, stop - start, tag, out)
    return out


def raw_block(counter, key) -> np.ndarray:
    """Raw Philox4x32-10 output block, for known-answer testing."""
    c = [np.uint64(x) for x in counter]
    k = [np.uint64(x) for x in key]
    return np.array(philox4x32(c[0], c[1], c[2], c[3], k[0], k[1]), dtype=np.uint64)


def uniform_stream(seed: int, count: int, tag: int = TAG_SAMPLING) -> np.ndarray:
    """``count`` uniforms in (0, 1) keyed by seed; used for inverse-CDF sampling."""
    out = np.empty((count + 1) // 2 * 2)
    _fill_uniforms(np.uint64(seed % 2**64), tag, out)
    return out[:count]


@nb.njit(cache=True, nogil=True)
def _fill_uniforms(seed, tag, out):
    k0, k1 = split_seed(seed)
    for i in range(out.shape[0] // 2):
        st = np.uint64(i)
        r0, r1, r2, r3 = philox4x32(st & _MASK32, st >> _SH32, np.uint64(0),
                                    np.uint64(tag), k0, k1)
        out[2 * i] = (float((r0 >> np.uint64(5)) * np.uint64(67108864) + (r1 >> np.uint64(6))) + 0.5) * _INV53
        out[2 * i + 1] = (float((r2 >> np.uint64(5)) * np.uint64(67108864) + (r3 >> np.uint64(6))) + 0.5) * _INV53
