"""Numba-compiled twins of :mod:`entswap._kernels_numpy`.

Same contracts, explicit loops. Amplitude pairs differing in bit ``q`` are
visited as ``base + j`` / ``base + step + j`` so the inner loop runs over
contiguous memory.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def apply_1q(psi, q, mats):
    b, d = psi.shape
    step = 1 << q
    for r in range(b):
        m00 = mats[r, 0, 0]
        m01 = mats[r, 0, 1]
        m10 = mats[r, 1, 0]
        m11 = mats[r, 1, 1]
        for base in range(0, d, 2 * step):
            for j in range(base, base + step):
                a0 = psi[r, j]
                a1 = psi[r, j + step]
                psi[r, j] = m00 * a0 + m01 * a1
                psi[r, j + step] = m10 * a0 + m11 * a1


@njit(cache=True)
def apply_cnot(psi, c, t):
    b, d = psi.shape
    cmask = 1 << c
    tstep = 1 << t
    for r in range(b):
        for base in range(0, d, 2 * tstep):
            for i in range(base, base + tstep):
                if i & cmask:
                    tmp = psi[r, i]
                    psi[r, i] = psi[r, i + tstep]
                    psi[r, i + tstep] = tmp


@njit(cache=True)
def prob_one(psi, q):
    b, d = psi.shape
    step = 1 << q
    out = np.zeros(b)
    for r in range(b):
        acc = 0.0
        for base in range(step, d, 2 * step):
            for j in range(base, base + step):
                a = psi[r, j]
                acc += a.real * a.real + a.imag * a.imag
        out[r] = acc
    return out


@njit(cache=True)
def _scale_branches(psi, r, step, s0, s1):
    d = psi.shape[1]
    for base in range(0, d, 2 * step):
        for j in range(base, base + step):
            psi[r, j] *= s0
            psi[r, j + step] *= s1


@njit(cache=True)
def collapse(psi, q, bits):
    b, d = psi.shape
    step = 1 << q
    out = np.zeros(b)
    for r in range(b):
        p0 = 0.0
        p1 = 0.0
        for base in range(0, d, 2 * step):
            for j in range(base, base + step):
                a = psi[r, j]
                p0 += a.real * a.real + a.imag * a.imag
                a = psi[r, j + step]
                p1 += a.real * a.real + a.imag * a.imag
        kept = p1 if bits[r] != 0 else p0
        scale = 1.0 / np.sqrt(kept) if kept > 0.0 else 0.0
        if bits[r] != 0:
            _scale_branches(psi, r, step, 0.0, scale)
        else:
            _scale_branches(psi, r, step, scale, 0.0)
        out[r] = kept
    return out


@njit(cache=True)
def measure_z(psi, q, u):
    b, d = psi.shape
    step = 1 << q
    bits = np.zeros(b, dtype=np.int64)
    totals = np.zeros(b)
    for r in range(b):
        p0 = 0.0
        p1 = 0.0
        for base in range(0, d, 2 * step):
            for j in range(base, base + step):
                a = psi[r, j]
                p0 += a.real * a.real + a.imag * a.imag
                a = psi[r, j + step]
                p1 += a.real * a.real + a.imag * a.imag
        tot = p0 + p1
        if u[r] * tot < p1:
            scale = 1.0 / np.sqrt(p1) if p1 > 0.0 else 0.0
            _scale_branches(psi, r, step, 0.0, scale)
            bits[r] = 1
        else:
            scale = 1.0 / np.sqrt(p0) if p0 > 0.0 else 0.0
            _scale_branches(psi, r, step, scale, 0.0)
        totals[r] = tot
    return bits, totals


@njit(cache=True)
def norms(psi):
    b, d = psi.shape
    out = np.zeros(b)
    for r in range(b):
        acc = 0.0
        for i in range(d):
            a = psi[r, i]
            acc += a.real * a.real + a.imag * a.imag
        out[r] = acc
    return out
