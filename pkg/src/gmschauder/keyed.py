"""Counter-based standard normals keyed on ``(master seed, path id, node index)``.

Each draw is a pure function of its key: the key is hashed with the SplitMix64
finalizer, the top 53 bits become a uniform in (0, 1), and the normal is the
inverse CDF of that uniform. Draws can therefore be produced in any order, in
any batch shape, and on any worker without changing their values.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype.kind in "iu":
        return arr.astype(np.uint64) if arr.dtype.kind == "u" else (arr.astype(np.int64)).view(np.uint64)
    return np.asarray([int(v) & _MASK for v in np.ravel(arr)], dtype=np.uint64).reshape(arr.shape)


def key_hash(seed: int, path_ids, nodes) -> np.ndarray:
    """64-bit hash for every broadcast combination of ``path_ids`` and flat ``nodes``."""
    with np.errstate(over="ignore"):
        s = _mix(np.atleast_1d(np.uint64(int(seed) & _MASK)) + _GOLDEN)
        p = _mix(s + _u64(path_ids) * _GOLDEN)
        return _mix(p + _u64(nodes) * _GOLDEN + _GOLDEN)


def keyed_uniform(seed: int, path_ids, nodes) -> np.ndarray:
    """Uniforms in the open interval (0, 1)."""
    bits = key_hash(seed, path_ids, nodes) >> np.uint64(11)
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def keyed_normal(seed: int, path_ids, nodes) -> np.ndarray:
    """Standard normal draw for each broadcast ``(path id, flat node index)`` key."""
    return ndtri(keyed_uniform(seed, path_ids, nodes))
