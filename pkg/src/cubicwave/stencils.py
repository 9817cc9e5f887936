"""High-order finite-difference operators on uniform grids.

Interior points use centered 7-point 6th-order stencils; the three points
nearest each boundary use biased/one-sided 7-point (first derivative) or
8-point (second derivative) closures of the same order, generated with
Fornberg's algorithm.
"""

from __future__ import annotations

import numpy as np


def fd_weights(x0: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at x0 on nodes x.

    Fornberg's recursion; returns an array w with sum(w * f(x)) approximating
    f^(m)(x0) at order len(x) - m.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if m >= n:
        raise ValueError(f"need at least {m + 1} nodes for derivative order {m}")
    c = np.zeros((n, m + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def closure_rows(npts: int, deriv: int, nrows: int) -> np.ndarray:
    """Left-boundary closure matrix: weights (x h^deriv) for the first nrows
    grid points, each using the leftmost npts nodes."""
    offsets = np.arange(npts, dtype=float)
    return np.array([fd_weights(float(i), offsets, deriv) for i in range(nrows)])


# 6th-order first derivative: centered 7-point interior, 3 closure rows/side.
_D1_LEFT = closure_rows(7, 1, 3)
_D1_RIGHT = -_D1_LEFT[::-1, ::-1]

# 6th-order second derivative: centered 7-point interior, 8-point closures.
_D2_CENT = fd_weights(3.0, np.arange(7, dtype=float), 2)
_D2_LEFT = closure_rows(8, 2, 3)
_D2_RIGHT = _D2_LEFT[::-1, ::-1]


def diff1(f: np.ndarray, h: float) -> np.ndarray:
    """6th-order first derivative of samples f on a uniform grid of spacing h."""
    f = np.asarray(f)
    if f.shape[-1] < 7:
        raise ValueError("need at least 7 grid points for the 6th-order stencil")
    out = np.empty_like(f, dtype=float)
    out[..., 3:-3] = (
        45.0 * (f[..., 4:-2] - f[..., 2:-4])
        - 9.0 * (f[..., 5:-1] - f[..., 1:-5])
        + (f[..., 6:] - f[..., :-6])
    ) / (60.0 * h)
    out[..., :3] = f[..., :7] @ _D1_LEFT.T / h
    out[..., -3:] = f[..., -7:] @ _D1_RIGHT.T / h
    return out


def diff2(f: np.ndarray, h: float) -> np.ndarray:
    """6th-order second derivative of samples f on a uniform grid of spacing h."""
    f = np.asarray(f)
    if f.shape[-1] < 8:
        raise ValueError("need at least 8 grid points for the 6th-order stencil")
    out = np.empty_like(f, dtype=float)
    acc = _D2_CENT[3] * f[..., 3:-3]
    for k in (1, 2, 3):
        acc = acc + _D2_CENT[3 + k] * (f[..., 3 + k : f.shape[-1] - 3 + k] + f[..., 3 - k : -3 - k])
    out[..., 3:-3] = acc / h**2
    out[..., :3] = f[..., :8] @ _D2_LEFT.T / h**2
    out[..., -3:] = f[..., -8:] @ _D2_RIGHT.T / h**2
    return out


def diff1_nonuniform(x: np.ndarray, v: np.ndarray, width: int = 5) -> np.ndarray:
    """First derivative dv/dx on arbitrarily spaced nodes x.

    Sliding window of `width` nodes per output point (one-sided at the ends),
    with Fornberg weights per window.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(x)
    if n < width:
        raise ValueError(f"need at least {width} samples")
    half = width // 2
    out = np.empty(n)
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        w = fd_weights(x[i], x[lo : lo + width], 1)
        out[i] = w @ v[lo : lo + width]
    return out
