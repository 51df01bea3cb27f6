"""Localized Luxemburg norms on cubes and the Hölder inequalities built on them.

``||f||_{Phi,Q}`` is the root ``lam`` of ``avg_Q Phi(|f| / lam) = 1``.  The
solver works on many cubes at once: values of all cubes are stacked into one
vector with an integer group id per entry, group averages come from
``np.bincount``, and each group runs its own bracketed root search in
``x = log(lam)``.
"""

from __future__ import annotations

import functools
from collections.abc import Sequence

import numpy as np

from .dyadic import Cube, GridFunction, Partition
from .young import TOL_REL, YoungFunction

__all__ = [
    "MAX_ITER",
    "orlicz_norm",
    "orlicz_norms",
    "luxemburg_groups",
    "indicator_norm_formula",
    "holder_pair",
    "gen_holder",
    "inverse_product_constant",
    "LuxemburgError",
]

MAX_ITER = 200
KAPPA_GRID = np.logspace(-8, 12, 801)


class LuxemburgError(ArithmeticError):
    """Raised when the norm root search fails to bracket or converge."""


def _inverse_table(phi: YoungFunction, counts: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(counts, return_inverse=True)
    return np.asarray(phi.inverse(uniq), dtype=float)[inv]


def luxemburg_groups(phi: YoungFunction, vals: np.ndarray, ids: np.ndarray, counts: np.ndarray,
                     maxes: np.ndarray, tol: float = TOL_REL) -> np.ndarray:
    """Luxemburg norms of many groups of equal-measure cells.

    ``vals`` holds ``|f|`` per entry, ``ids`` the group of each entry,
    ``counts`` the number of entries per group and ``maxes`` the group maxima.
    Groups with zero maximum get norm 0.
    """
    G = len(counts)
    out = np.zeros(G)
    active = maxes > 0
    if not active.any():
        return out
    logm = np.log(np.where(active, maxes, 1.0))
    lo = logm - np.log(_inverse_table(phi, counts))
    hi = logm - np.log(float(phi.inverse(1.0)))
    lo = np.minimum(lo, hi)

    def resid(x):
        scale = np.exp(-x)[ids]
        s = np.bincount(ids, weights=np.asarray(phi(vals * scale), dtype=float), minlength=G)
        with np.errstate(divide="ignore"):
            return np.log(s / counts)

    g_lo = resid(lo)
    g_hi = resid(hi)
    # the defining average is nonincreasing in lam: positive at lo, negative at hi
    slack = 1e-12
    if np.any(active & ((g_lo < -slack) | (g_hi > slack))):
        raise LuxemburgError("norm bracket failed: defining average is not monotone on the bracket")
    x = np.where(g_hi >= -slack, hi, lo)
    done = ~active | (np.abs(g_lo) <= slack) | (g_hi >= -slack) | (hi - lo <= tol)
    x = np.where(np.abs(g_lo) <= slack, lo, x)
    side = np.zeros(G, dtype=int)
    for _ in range(MAX_ITER):
        if done.all():
            break
        # Illinois regula falsi, falling back to the midpoint when the secant leaves the bracket
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = lo - g_lo * (hi - lo) / (g_hi - g_lo)
        mid = 0.5 * (lo + hi)
        ok = np.isfinite(xs) & (xs > lo) & (xs < hi)
        xn = np.where(ok, xs, mid)
        xn = np.where(done, x, xn)
        gn = resid(xn)
        pos = gn > 0
        upd = ~done
        # Illinois: halve the stale endpoint when the same side moves twice
        halve_hi = upd & pos & (side == 1)
        halve_lo = upd & ~pos & (side == -1)
        g_hi = np.where(halve_hi, 0.5 * g_hi, g_hi)
        g_lo = np.where(halve_lo, 0.5 * g_lo, g_lo)
        lo = np.where(upd & pos, xn, lo)
        g_lo = np.where(upd & pos, gn, g_lo)
        hi = np.where(upd & ~pos, xn, hi)
        g_hi = np.where(upd & ~pos, gn, g_hi)
        side = np.where(upd, np.where(pos, 1, -1), side)
        x = np.where(upd, xn, x)
        done |= upd & ((np.abs(gn) <= 1e-14) | (hi - lo <= tol))
    else:
        if not done.all():
            raise LuxemburgError(f"norm root search did not converge in {MAX_ITER} iterations")
    out[active] = np.exp(x[active])
    return out


def orlicz_norm(f: GridFunction, Q: Cube, phi: YoungFunction) -> float:
    """``||f||_{phi,Q}``; 0 when ``f`` vanishes on ``Q``."""
    if Q.ncells == 0:
        raise ValueError("zero-measure cube")
    a = np.abs(f.values[Q.slices()]).ravel()
    res = luxemburg_groups(phi, a, np.zeros(a.size, dtype=np.intp), np.array([float(a.size)]),
                           np.array([a.max()]))
    return float(res[0])


def _stack(values: np.ndarray, parts: Sequence[Partition]):
    a = np.abs(values)
    flat = a.ravel()
    ids, counts, maxes = [], [], []
    off = 0
    for P in parts:
        ids.append(P.flat_labels().ravel() + off)
        counts.append(P.counts.ravel())
        maxes.append(P.maxes(a).ravel())
        off += P.size
    return (np.tile(flat, len(parts)), np.concatenate(ids), np.concatenate(counts),
            np.concatenate(maxes))


def orlicz_norms(values: np.ndarray, parts: Sequence[Partition], phi: YoungFunction) -> list[np.ndarray]:
    """Norms of every cube of every partition, one array (partition-shaped) per partition."""
    vals, ids, counts, maxes = _stack(np.asarray(values, dtype=float), parts)
    res = luxemburg_groups(phi, vals, ids, counts, maxes)
    out, off = [], 0
    for P in parts:
        out.append(res[off:off + P.size].reshape(P.shape))
        off += P.size
    return out


def indicator_norm_formula(frac: float, phibar: YoungFunction) -> float:
    """``||chi_E||_{phibar,Q} = 1 / phibar^{-1}(|Q|/|E|)`` for ``frac = |E|/|Q|``."""
    if not 0 < frac <= 1:
        raise ValueError("frac must lie in (0, 1]")
    return float(1.0 / phibar.inverse(1.0 / frac))


def holder_pair(f: GridFunction, g: GridFunction, Q: Cube, phi: YoungFunction) -> tuple[float, float]:
    """``(avg_Q |fg|, 2 ||f||_{phi,Q} ||g||_{conj phi,Q})``."""
    lhs = float(np.abs(f.values[Q.slices()] * g.values[Q.slices()]).mean())
    rhs = 2.0 * orlicz_norm(f, Q, phi) * orlicz_norm(g, Q, phi.conjugate())
    return lhs, rhs


def inverse_product_constant(phi: YoungFunction, psi: YoungFunction, theta: YoungFunction,
                             t: np.ndarray | None = None) -> float:
    """Smallest ``kappa`` with ``phi^{-1} psi^{-1} <= kappa theta^{-1}`` on a sampled grid."""
    if t is None:
        return _kappa(phi, psi, theta)
    t = np.asarray(t, dtype=float)
    r = phi.inverse(t) * psi.inverse(t) / theta.inverse(t)
    return float(np.max(r))


@functools.lru_cache(maxsize=256)
def _kappa(phi: YoungFunction, psi: YoungFunction, theta: YoungFunction) -> float:
    return inverse_product_constant(phi, psi, theta, KAPPA_GRID)


def gen_holder(f: GridFunction, g: GridFunction, Q: Cube, phi: YoungFunction, psi: YoungFunction,
               theta: YoungFunction) -> tuple[float, float]:
    """``(||fg||_{theta,Q}, 2 kappa ||f||_{phi,Q} ||g||_{psi,Q})`` with the sampled constant ``kappa``."""
    kappa = inverse_product_constant(phi, psi, theta)
    lhs = orlicz_norm(f * g, Q, theta)
    rhs = 2.0 * kappa * orlicz_norm(f, Q, phi) * orlicz_norm(g, Q, psi)
    return lhs, rhs
