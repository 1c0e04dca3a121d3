"""Numba kernels for the training hot path.

The tuning protocol trains thousands of small networks; at those sizes the
numpy implementation is dominated by intermediate-array traffic, not BLAS.
These kernels fuse the element-wise parts of one descent step into single
passes. tanh and the matmuls stay in numpy (SIMD / BLAS beat numba there).

Everything here is an exact re-expression of the reference math in
`mlp._loss_and_grads`; `fastmath` stays off so results are reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def surrogate_dz(z, y, gamma, n_pos, n_neg, eps, dz):
    """Fill dz with d(-surrogate MCC)/dz and return the surrogate value."""
    n = z.shape[0]
    n_f = float(n)
    tp = 0.0
    m_pos = 0.0
    for i in range(n):
        x = gamma * z[i]
        if x >= 0.0:
            s = 1.0 / (1.0 + np.exp(-x))
        else:
            e = np.exp(x)
            s = e / (1.0 + e)
        dz[i] = s  # stash s, rescaled below
        tp += s * y[i]
        m_pos += s
    numerator = tp * n_f - n_pos * m_pos
    product = n_pos * n_neg * m_pos * (n_f - m_pos) + eps
    inv_sqrt = product**-0.5
    d_m_pos = -n_pos * inv_sqrt - 0.5 * numerator * inv_sqrt**3 * n_pos * n_neg * (
        n_f - 2.0 * m_pos
    )
    for i in range(n):
        s = dz[i]
        d_s = n_f * inv_sqrt * y[i] + d_m_pos
        dz[i] = -d_s * gamma * s * (1.0 - s)
    return numerator * inv_sqrt


@njit(cache=True)
def backward_output(dz, w_out, act, da, gb):
    """da = (dz outer w_out) * (1 - act^2), gb = column sums of da."""
    n, h = act.shape
    for j in range(h):
        gb[j] = 0.0
    for i in range(n):
        d = dz[i]
        for j in range(h):
            a = act[i, j]
            v = d * w_out[j, 0] * (1.0 - a * a)
            da[i, j] = v
            gb[j] += v


@njit(cache=True)
def backward_hidden(da, act, gb):
    """In place: da *= (1 - act^2); gb = column sums of the result."""
    n, h = act.shape
    for j in range(h):
        gb[j] = 0.0
    for i in range(n):
        for j in range(h):
            a = act[i, j]
            v = da[i, j] * (1.0 - a * a)
            da[i, j] = v
            gb[j] += v
