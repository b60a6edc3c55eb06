"""Pure-numpy fallbacks with the same signatures as the compiled kernels."""
import numpy as np
from scipy.linalg import solve_banded


def band_factor(ab, w):
    # solve_banded factors on every call, so the "factor" is the matrix itself
    return np.array(ab, copy=True)


def band_solve(lu, w, b):
    return solve_banded((w, w), lu, b, check_finite=False)


def band_matvec(ab, w, x):
    y = ab[w] * x
    for k in range(1, w + 1):
        y[:-k] += ab[w - k, k:] * x[k:]
        y[k:] += ab[w + k, :-k] * x[:-k]
    return y


def convolve_valid(signal, kernel):
    return np.convolve(signal, kernel, mode="valid")


def cubic_interp(values, x0, dx, q):
    n = values.shape[0]
    s = (np.asarray(q, dtype=float) - x0) / dx
    i = np.clip(np.floor(s).astype(np.int64), 1, n - 3)
    t = s - i
    wm = -t * (t - 1.0) * (t - 2.0) / 6.0
    w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w1 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w2 = (t + 1.0) * t * (t - 1.0) / 6.0
    return wm * values[i - 1] + w0 * values[i] + w1 * values[i + 1] + w2 * values[i + 2]
