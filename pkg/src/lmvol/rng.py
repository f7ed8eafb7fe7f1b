"""Counter-based random streams.

Every variate is a pure function of ``(seed, stream index, step index)``:
stream ``p`` is a Philox4x64 generator keyed by ``seed + 2**64 * p`` and step
``j`` reads the ``j``-th 64-bit output.  Normals come from the inverse normal
CDF applied to ``(top 53 bits + 0.5) / 2**53``, which never hits 0 or 1.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int) -> np.random.Philox:
    if index < 0:
        raise ValueError("stream index must be nonnegative")
    return np.random.Philox(key=(int(seed) & _MASK64) | (int(index) << 64))


def raw(seed: int, index: int, n: int) -> np.ndarray:
    return stream(seed, index).random_raw(n)


def uniforms(seed: int, index: int, n: int) -> np.ndarray:
    r = raw(seed, index, n)
    return ((r >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: int, index: int, n: int) -> np.ndarray:
    return ndtri(uniforms(seed, index, n))


def rademacher(seed: int, index: int, n: int) -> np.ndarray:
    r = raw(seed, index, n)
    return np.where((r >> np.uint64(63)) == 1, 1.0, -1.0)


def block(seed: int, first: int, count: int, n: int, kind: str = "normal") -> np.ndarray:
    """Variates for streams ``first .. first+count-1`` laid out as (n, count)."""
    draw = standard_normals if kind == "normal" else rademacher
    out = np.empty((n, count))
    for k in range(count):
        out[:, k] = draw(seed, first + k, n)
    return out
