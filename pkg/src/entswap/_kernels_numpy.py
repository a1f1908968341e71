"""Pure-numpy state-vector kernels.

Every kernel works in place on a C-contiguous ``(batch, 2**n)`` complex128
array. Row ``r`` is an independent register; qubit ``q`` is bit ``q`` of the
column index (qubit 0 is the least-significant bit).
"""
from functools import lru_cache

import numpy as np


def _split(psi: np.ndarray, q: int) -> np.ndarray:
    # (batch, high, bit q, low) view; psi must be contiguous
    b, d = psi.shape
    step = 1 << q
    return psi.reshape(b, d // (2 * step), 2, step)


def apply_1q(psi: np.ndarray, q: int, mats: np.ndarray) -> None:
    """Apply the 2x2 matrix ``mats[r]`` to qubit ``q`` of row ``r``."""
    v = _split(psi, q)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :].copy()
    m = mats[:, :, :, None, None]
    v[:, :, 0, :] = m[:, 0, 0] * a0 + m[:, 0, 1] * a1
    v[:, :, 1, :] = m[:, 1, 0] * a0 + m[:, 1, 1] * a1


@lru_cache(maxsize=256)
def _cnot_pairs(dim: int, c: int, t: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(dim)
    lo = idx[((idx >> c) & 1 == 1) & ((idx >> t) & 1 == 0)]
    return lo, lo | (1 << t)


def apply_cnot(psi: np.ndarray, c: int, t: int) -> None:
    lo, hi = _cnot_pairs(psi.shape[1], c, t)
    psi[:, lo], psi[:, hi] = psi[:, hi], psi[:, lo]


def prob_one(psi: np.ndarray, q: int) -> np.ndarray:
    """Per-row probability that qubit ``q`` reads 1 in the Z basis."""
    v = _split(psi, q)[:, :, 1, :]
    return np.sum(v.real**2 + v.imag**2, axis=(1, 2))


def collapse(psi: np.ndarray, q: int, bits: np.ndarray) -> np.ndarray:
    """Project row ``r`` onto qubit ``q`` == ``bits[r]`` and renormalize.

    Returns the per-row probability of the kept branch. Rows whose branch has
    zero weight are left as all-zero.
    """
    v = _split(psi, q)
    keep0 = (np.asarray(bits) == 0)[:, None, None]
    v[:, :, 0, :] *= keep0
    v[:, :, 1, :] *= ~keep0
    p = np.sum(psi.real**2 + psi.imag**2, axis=1)
    scale = np.zeros_like(p)
    np.divide(1.0, np.sqrt(p), out=scale, where=p > 0.0)
    psi *= scale[:, None]
    return p


def measure_z(psi: np.ndarray, q: int, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample qubit ``q`` of every row with uniforms ``u`` and collapse.

    Returns ``(bits, norms)`` where ``norms`` is each row's squared norm
    before the measurement.
    """
    v = _split(psi, q)
    w1 = v[:, :, 1, :]
    p1 = np.sum(w1.real**2 + w1.imag**2, axis=(1, 2))
    total = np.sum(psi.real**2 + psi.imag**2, axis=1)
    bits = (u * total < p1).astype(np.int64)
    kept = np.where(bits == 1, p1, total - p1)
    keep0 = (bits == 0)[:, None, None]
    scale = np.zeros_like(kept)
    np.divide(1.0, np.sqrt(kept), out=scale, where=kept > 0.0)
    v[:, :, 0, :] *= (keep0 * scale[:, None, None])
    v[:, :, 1, :] *= (~keep0 * scale[:, None, None])
    return bits, total


def norms(psi: np.ndarray) -> np.ndarray:
    return np.sum(psi.real**2 + psi.imag**2, axis=1)
