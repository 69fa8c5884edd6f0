"""Counter-based random numbers.

Every draw is a pure function of an integer key tuple, so a sample's value
does not depend on which thread produced it or in what order.
"""
import numba
import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@numba.njit(cache=True)
def hash4(seed, a, b, c, d):
    """64-bit hash of a 5-word key (splitmix64 finalizer chained per word)."""
    z = _mix(np.uint64(seed) + _GOLDEN)
    z = _mix(z ^ (np.uint64(a) + _GOLDEN))
    z = _mix(z ^ (np.uint64(b) + _GOLDEN))
    z = _mix(z ^ (np.uint64(c) + _GOLDEN))
    z = _mix(z ^ (np.uint64(d) + _GOLDEN))
    return z


@numba.njit(cache=True)
def uniform(seed, a, b, c, d):
    """Uniform double in [0, 1) keyed by (seed, a, b, c, d)."""
    return float(hash4(seed, a, b, c, d) >> _S11) * _INV53


def uniform_array(seed, a, b, c, d):
    """Vectorised convenience wrapper; arguments broadcast like numpy arrays."""
    keys = np.broadcast_arrays(*(np.asarray(k, dtype=np.int64) for k in (a, b, c, d)))
    out = np.empty(keys[0].shape)
    flat = [k.ravel() for k in keys]
    _fill(np.int64(seed), flat[0], flat[1], flat[2], flat[3], out.ravel())
    return out


@numba.njit(cache=True)
def _fill(seed, a, b, c, d, out):
    for i in range(out.size):
        out[i] = uniform(seed, a[i], b[i], c[i], d[i])


def seed_to_int(seed):
    """Fold an arbitrary Python int into the signed 64-bit range."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed - (1 << 64) if seed >= (1 << 63) else seed
