"""Counter-based random numbers.

Every sample is a pure function of ``(seed, pixel_x, pixel_y, sample, bounce,
dimension)``, so results never depend on how pixels are scheduled.
"""
import numpy as np
from numba import njit

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def mix64(z):
    """SplitMix64 finaliser."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def path_key(seed, px, py, sample, bounce):
    h = mix64(np.uint64(seed) + _GOLDEN)
    h = mix64(h ^ (np.uint64(px) + _GOLDEN))
    h = mix64(h ^ (np.uint64(py) * _M1 + _GOLDEN))
    h = mix64(h ^ (np.uint64(sample) * _M2 + _GOLDEN))
    return mix64(h ^ (np.uint64(bounce) + np.uint64(0x632BE59BD9B4E019)))


@njit(cache=True)
def uniform(key, dim):
    """Uniform double in [0, 1) for dimension ``dim`` of ``key``."""
    x = mix64(key ^ ((np.uint64(dim) + np.uint64(1)) * _GOLDEN))
    return np.float64(x >> _S11) * _INV53
