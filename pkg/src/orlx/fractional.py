"""Bilinear fractional operators by direct quadrature on the finest cells.

``y`` runs over cell-center offsets ``m h`` (``h = 2**-L``) with the singular
offset ``m = 0`` omitted; ``f(x - y)`` and ``g(x + y)`` are read from cells and
vanish outside the box.  Every operator below is a weighted sum over offsets of
``F_m(x) = f(x - m h) g(x + m h)``, so they differ only in the offset kernel.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.signal import fftconvolve

from .dyadic import GridFunction

__all__ = [
    "bi_fractional_direct",
    "bm_fractional_direct",
    "less_singular_fractional",
    "bi_fractional_dyadic",
    "dyadic_kernel",
]


def _check_alpha(alpha: float, n: int, upper: int) -> None:
    if not 0 < alpha < upper * n:
        raise ValueError(f"alpha must lie in (0, {upper * n})")


def _offsets(n: int, N: int):
    M = (N - 1) // 2
    for m in itertools.product(range(-M, M + 1), repeat=n):
        if any(m):
            yield m


def _shift(a: np.ndarray, m) -> np.ndarray:
    """``out[x] = a[x - m]`` with zero fill."""
    out = np.zeros_like(a)
    src, dst = [], []
    for s, N in zip(m, a.shape):
        if s >= 0:
            dst.append(slice(s, N))
            src.append(slice(0, N - s))
        else:
            dst.append(slice(0, N + s))
            src.append(slice(-s, N))
    out[tuple(dst)] = a[tuple(src)]
    return out


def _offset_sum(f: GridFunction, g: GridFunction, weight) -> np.ndarray:
    """``sum_m weight(m) F_m``, skipping zero weights."""
    a, b = np.abs(f.values), np.abs(g.values)
    out = np.zeros(a.shape)
    for m in _offsets(f.grid.n, f.grid.N):
        w = weight(m)
        if w:
            out += w * _shift(a, m) * _shift(b, tuple(-s for s in m))
    return out


def bi_fractional_direct(f: GridFunction, g: GridFunction, alpha: float) -> GridFunction:
    """``BI_alpha(f,g)(x) = int f(x-y) g(x+y) |y|^(alpha-n) dy`` by the midpoint rule."""
    n, N = f.grid.n, f.grid.N
    _check_alpha(alpha, n, 1)
    h = 1.0 / N
    vals = _offset_sum(f, g, lambda m: (h * np.sqrt(sum(s * s for s in m))) ** (alpha - n) * h**n)
    return GridFunction(f.grid, vals)


def bm_fractional_direct(f: GridFunction, g: GridFunction, alpha: float) -> GridFunction:
    """``BM_alpha``: max over dyadic radii ``r = 2**j h`` of ``(2r)^(alpha-n) int_{[-r,r]^n} F dy``."""
    n, N = f.grid.n, f.grid.N
    _check_alpha(alpha, n, 1)
    h = 1.0 / N
    a, b = np.abs(f.values), np.abs(g.values)
    J = max(N.bit_length() - 1, 1)
    buckets = np.zeros((J,) + a.shape)
    for m in _offsets(n, N):
        R = max(abs(s) for s in m)
        j = (R - 1).bit_length()
        buckets[j] += _shift(a, m) * _shift(b, tuple(-s for s in m))
    cum = np.cumsum(buckets, axis=0) * h**n
    radii = (2.0 ** np.arange(J)) * h
    scale = (2 * radii) ** (alpha - n)
    return GridFunction(f.grid, np.max(cum * scale.reshape((-1,) + (1,) * n), axis=0))


def dyadic_kernel(m, L: int, n: int, alpha: float) -> float:
    """``sum_{k=0..kmax} 2**(k(n-alpha))`` over levels whose side ``2**-k`` is at least ``|m| h``."""
    r2 = sum(s * s for s in m)
    kmax = -1
    for k in range(L + 1):
        if 4 ** (L - k) >= r2:
            kmax = k
    if kmax < 0:
        return 0.0
    return float(sum(2.0 ** (k * (n - alpha)) for k in range(kmax + 1)))


def bi_fractional_dyadic(f: GridFunction, g: GridFunction, alpha: float) -> GridFunction:
    """Dyadic model: ``sum_{Q ∋ x} |Q|^(alpha/n - 1) int_{|y| <= side(Q)} f(x-y) g(x+y) dy``.

    The sum runs over standard-grid cubes inside the box; for a fixed ``x``
    there is one cube per level, so the sum is a kernel over offsets.
    """
    n, N, L = f.grid.n, f.grid.N, f.grid.L
    _check_alpha(alpha, n, 1)
    h = 1.0 / N
    return GridFunction(f.grid, _offset_sum(f, g, lambda m: dyadic_kernel(m, L, n, alpha) * h**n))


def less_singular_fractional(f: GridFunction, g: GridFunction, alpha: float) -> GridFunction:
    """``I_alpha(f,g)(x) = int int f(y) g(z) (|x-y| + |x-z|)^(alpha-2n) dy dz``.

    Computed as a ``2n``-dimensional FFT convolution of ``f (x) g`` with the
    kernel, read on the diagonal; the ``y = z = x`` cell is omitted.
    """
    n, N = f.grid.n, f.grid.N
    _check_alpha(alpha, n, 2)
    if N ** (2 * n) > 2**22:
        raise ValueError("grid too large for the 2n-dimensional convolution")
    h = 1.0 / N
    a, b = np.abs(f.values), np.abs(g.values)
    prod = np.multiply.outer(a, b)
    ax = np.arange(-(N - 1), N) * h
    mesh = np.meshgrid(*([ax] * (2 * n)), indexing="ij")
    d1 = np.sqrt(sum(c**2 for c in mesh[:n]))
    d2 = np.sqrt(sum(c**2 for c in mesh[n:]))
    dist = d1 + d2
    kern = np.divide(1.0, dist ** (2 * n - alpha), out=np.zeros_like(dist), where=dist > 0)
    conv = fftconvolve(prod, kern, mode="full") * h ** (2 * n)
    idx = np.arange(N) + N - 1
    if n == 1:
        out = conv[idx, idx]
    else:
        out = conv[np.ix_(idx, idx, idx, idx)]
        out = np.einsum("ijij->ij", out)
    return GridFunction(f.grid, np.maximum(out, 0.0))
