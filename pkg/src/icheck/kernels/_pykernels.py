"""Reference kernels in numpy; same signatures as the compiled module.

Databases are rows of 64-bit words; bit ``i`` of the row is the truth
value of the i-th tracked ground atom.
"""

import numpy as np

BACKEND = "python"


def violations(dbs, pos, neg):
    """1 where some conjunction (pos bits set, neg bits clear) holds."""
    dbs = np.asarray(dbs, dtype=np.uint64)
    out = np.zeros(dbs.shape[0], dtype=bool)
    for p, q in zip(pos, neg):
        hit = np.all((dbs & p) == p, axis=1) & np.all((dbs & q) == 0, axis=1)
        out |= hit
    return out.astype(np.uint8)


def expand(idx, positions, words):
    """Scatter bit b of each index to bit ``positions[b]`` of a fresh row."""
    idx = np.asarray(idx, dtype=np.uint64)
    out = np.zeros((idx.shape[0], words), dtype=np.uint64)
    for b, p in enumerate(positions):
        bit = (idx >> np.uint64(b)) & np.uint64(1)
        out[:, p >> 6] |= bit << np.uint64(p & 63)
    return out


def permute(dbs, src):
    """Row j-th bit of the result is bit ``src[j]`` of the input."""
    dbs = np.asarray(dbs, dtype=np.uint64)
    out = np.zeros_like(dbs)
    for j, s in enumerate(src):
        bit = (dbs[:, s >> 6] >> np.uint64(s & 63)) & np.uint64(1)
        out[:, j >> 6] |= bit << np.uint64(j & 63)
    return out
