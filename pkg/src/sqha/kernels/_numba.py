"""Compiled kernels (numba)."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def band_factor(ab, w):
    """LU of a band matrix without pivoting. ab[w+i-j, j] = A[i, j].

    Factors come back row-major, r[i, w+j-i] = (L or U)[i, j], so that both
    substitution sweeps read contiguous memory.
    """
    n = ab.shape[1]
    r = np.zeros((n, 2 * w + 1), dtype=ab.dtype)
    for i in range(n):
        for j in range(max(0, i - w), min(n, i + w + 1)):
            r[i, w + j - i] = ab[w + i - j, j]
    for k in range(n - 1):
        piv = r[k, w]
        for i in range(k + 1, min(k + w + 1, n)):
            l = r[i, w + k - i] / piv
            r[i, w + k - i] = l
            for j in range(k + 1, min(k + w + 1, n)):
                r[i, w + j - i] -= l * r[k, w + j - k]
    return r


@njit(cache=True, nogil=True)
def band_solve(lu, w, b):
    """Forward and back substitution with factors from band_factor."""
    n = b.shape[0]
    y = b.copy()
    for i in range(n):
        acc = y[i]
        for k in range(max(0, i - w), i):
            acc -= lu[i, w + k - i] * y[k]
        y[i] = acc
    for i in range(n - 1, -1, -1):
        acc = y[i]
        for j in range(i + 1, min(i + w + 1, n)):
            acc -= lu[i, w + j - i] * y[j]
        y[i] = acc / lu[i, w]
    return y


@njit(cache=True, nogil=True)
def band_matvec(ab, w, x):
    n = x.shape[0]
    y = np.empty_like(x)
    d = ab[w]
    for i in range(n):
        y[i] = d[i] * x[i]
    for k in range(1, w + 1):
        up = ab[w - k]
        lo = ab[w + k]
        for i in range(n - k):
            y[i] += up[i + k] * x[i + k]
            y[i + k] += lo[i] * x[i]
    return y


@njit(cache=True, nogil=True)
def convolve_valid(signal, kernel):
    """'valid' mode convolution, output length len(signal) - len(kernel) + 1."""
    m = kernel.shape[0]
    n = signal.shape[0] - m + 1
    out = np.zeros(n)
    # axpy per kernel tap: the inner loop vectorizes without reassociation
    for k in range(m):
        c = kernel[m - 1 - k]
        for i in range(n):
            out[i] += c * signal[i + k]
    return out


@njit(cache=True, nogil=True)
def cubic_interp(values, x0, dx, q):
    """4-point Lagrange interpolation of uniformly sampled values at positions q."""
    n = values.shape[0]
    out = np.empty(q.shape[0])
    for k in range(q.shape[0]):
        s = (q[k] - x0) / dx
        i = int(np.floor(s))
        if i < 1:
            i = 1
        elif i > n - 3:
            i = n - 3
        t = s - i
        wm = -t * (t - 1.0) * (t - 2.0) / 6.0
        w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
        w1 = -(t + 1.0) * t * (t - 2.0) / 2.0
        w2 = (t + 1.0) * t * (t - 1.0) / 6.0
        out[k] = wm * values[i - 1] + w0 * values[i] + w1 * values[i + 1] + w2 * values[i + 2]
    return out
