"""Counter-based normal variates (Philox4x32-10 + Box-Muller).

Every variate is a pure function of ``(seed, chain, step, purpose)`` so chains
can be evaluated in any order, or in parallel, and still reproduce bit for bit.
"""

import numpy as np

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = np.uint32(0x9E3779B9)
PHILOX_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# purpose tags (fourth counter word)
INIT = 0
STEP = 1
AUX = 2


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    Parameters
    ----------
    counter : array_like of uint32, shape (..., 4)
    key : array_like of uint32, shape (2,)

    Returns
    -------
    ndarray of uint32, shape (..., 4)
    """
    ctr = np.asarray(counter, dtype=np.uint32)
    c0 = ctr[..., 0].astype(np.uint64)
    c1 = ctr[..., 1].astype(np.uint32)
    c2 = ctr[..., 2].astype(np.uint64)
    c3 = ctr[..., 3].astype(np.uint32)
    k0, k1 = (np.uint32(k) for k in np.asarray(key, dtype=np.uint32))
    with np.errstate(over="ignore"):
        for r in range(rounds):
            if r:
                k0 = np.uint32(k0 + PHILOX_W0)
                k1 = np.uint32(k1 + PHILOX_W1)
            p0 = PHILOX_M0 * c0
            p1 = PHILOX_M1 * c2
            hi0 = (p0 >> _SHIFT32).astype(np.uint32)
            hi1 = (p1 >> _SHIFT32).astype(np.uint32)
            n0 = hi1 ^ c1 ^ k0
            n2 = hi0 ^ c3 ^ k1
            c1 = (p1 & _MASK32).astype(np.uint32)
            c3 = (p0 & _MASK32).astype(np.uint32)
            c0 = n0.astype(np.uint64)
            c2 = n2.astype(np.uint64)
    return np.stack(
        [c0.astype(np.uint32), c1, c2.astype(np.uint32), c3], axis=-1
    )


def seed_key(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint32)


def _uniform(bits):
    # strictly inside (0, 1)
    return (bits.astype(np.float64) + 0.5) * (1.0 / 4294967296.0)


def normals(seed, chains, step, dim, purpose=STEP):
    """Standard normals of shape ``(len(chains), dim)``.

    Row ``i`` depends only on ``(seed, chains[i], step, purpose)``.
    """
    chains = np.asarray(chains, dtype=np.uint32).reshape(-1)
    nblocks = (dim + 3) // 4
    ctr = np.empty((chains.size, nblocks, 4), dtype=np.uint32)
    ctr[..., 0] = chains[:, None]
    ctr[..., 1] = np.uint32(step & 0xFFFFFFFF)
    ctr[..., 2] = np.arange(nblocks, dtype=np.uint32)[None, :]
    ctr[..., 3] = np.uint32(purpose)
    bits = philox4x32(ctr, seed_key(seed))
    u = _uniform(bits)
    # Box-Muller on word pairs (0, 1) and (2, 3)
    rad = np.sqrt(-2.0 * np.log(u[..., 0::2]))
    ang = 2.0 * np.pi * u[..., 1::2]
    z = np.empty_like(u)
    z[..., 0::2] = rad * np.cos(ang)
    z[..., 1::2] = rad * np.sin(ang)
    return z.reshape(chains.size, nblocks * 4)[:, :dim]


def uniforms(seed, chains, step, dim, purpose=AUX):
    """Uniform(0, 1) variates with the same counter addressing as :func:`normals`."""
    chains = np.asarray(chains, dtype=np.uint32).reshape(-1)
    nblocks = (dim + 3) // 4
    ctr = np.empty((chains.size, nblocks, 4), dtype=np.uint32)
    ctr[..., 0] = chains[:, None]
    ctr[..., 1] = np.uint32(step & 0xFFFFFFFF)
    ctr[..., 2] = np.arange(nblocks, dtype=np.uint32)[None, :]
    ctr[..., 3] = np.uint32(purpose)
    bits = philox4x32(ctr, seed_key(seed))
    return _uniform(bits).reshape(chains.size, nblocks * 4)[:, :dim]
