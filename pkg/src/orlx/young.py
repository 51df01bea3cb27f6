"""Young functions: evaluation, inversion, conjugation and growth classes.

Every Young function is an immutable value.  The closed-form catalog
(``Power``, ``LogBump``, ``Oscillatory``) is closed under the two
operations the extrapolation machinery needs: outer rescaling
``t -> phi(t**(1/r))`` and convex conjugation, the latter realized as a
tabulated ``NumericConjugate``.

All evaluators accept scalars or arrays and broadcast like numpy ufuncs.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import CubicHermiteSpline

__all__ = [
    "YoungFunction",
    "Power",
    "LogBump",
    "Oscillatory",
    "OuterRescale",
    "NumericConjugate",
    "BpVerdict",
    "BpResult",
    "evaluate",
    "inverse",
    "conjugate",
    "bp_test",
    "rescale_outer",
    "is_a_young",
    "check_young",
    "from_descriptor",
    "dual_exponent",
]

EPS_CONVEX = 1e-9
TOL_REL = 1e-10

CONJ_SAMPLES = 512
CONJ_RANGE = (1e-6, 1e6)

BP_TRUNCATION = 1e8
BP_MARGIN = 0.05


def dual_exponent(p: float) -> float:
    """Hoelder dual ``p' = p/(p-1)``; infinity for ``p == 1``."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


class BpVerdict(str, enum.Enum):
    IN_BP = "InBp"
    NOT_IN_BP = "NotInBp"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class BpResult:
    verdict: BpVerdict
    p: float
    certificate: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.verdict is BpVerdict.IN_BP

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value, "p": self.p, "certificate": self.certificate}


@dataclass(frozen=True)
class YoungFunction:
    """Base class.  Subclasses implement ``_raw``; normalization divides by ``_raw(1)``."""

    normalized: bool = field(default=False, kw_only=True)

    # -- evaluation -------------------------------------------------------

    def _raw(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _scale(self) -> float:
        if not self.normalized:
            return 1.0
        return float(self._raw(np.array([1.0]))[0])

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < 0):
            raise ValueError("Young functions are defined on [0, inf)")
        with np.errstate(over="ignore", invalid="ignore"):
            out = self._raw(np.atleast_1d(arr))
        if self.normalized:
            out = out / self._scale()
        if np.any(np.isinf(out) & np.isfinite(np.atleast_1d(arr))):
            raise OverflowError(f"{self.describe()} overflows on the given input")
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    # -- derived operations ----------------------------------------------

    def inverse(self, y):
        """Solve ``phi(t) = y`` by geometric bracketing and bisection in log t."""
        arr = np.asarray(y, dtype=float)
        if np.any(arr < 0):
            raise ValueError("inverse needs y >= 0")
        flat = np.atleast_1d(arr).ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            out[pos] = _bisect_inverse(self, flat[pos])
        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    def conjugate(self) -> YoungFunction:
        return _numeric_conjugate(self)

    def rescale_outer(self, r: float) -> YoungFunction:
        """Return ``psi`` with ``psi(t) = self(t**(1/r))``."""
        if not 0 < r <= 1:
            raise ValueError("rescale_outer needs 0 < r <= 1")
        if r == 1:
            return self
        return OuterRescale(self, r, normalized=self.normalized)

    def bp_test(self, p: float) -> BpResult:
        return _numeric_bp(self, p)

    def upper_exponent(self) -> float | None:
        """Exponent ``q`` with ``phi(t) <= C t**q`` for large t, when known."""
        return None

    # -- serialization ----------------------------------------------------

    variant: str = field(default="", init=False, repr=False, compare=False)

    def params(self) -> dict:
        raise NotImplementedError

    def to_descriptor(self) -> dict:
        d: dict[str, Any] = {"variant": self.variant, "params": self.params()}
        if self.normalized:
            d["normalized"] = True
        return d

    def describe(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.params().items() if not isinstance(v, dict))
        return f"{type(self).__name__}({inner})"


@dataclass(frozen=True)
class Power(YoungFunction):
    """``t**p``, ``p >= 1`` (``p = 1`` is the degenerate linear case, without a finite conjugate)."""

    p: float
    variant: str = field(default="power", init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"Power needs p >= 1, got {self.p}")

    def _raw(self, t):
        return t**self.p

    def inverse(self, y):
        arr = np.asarray(y, dtype=float)
        if np.any(arr < 0):
            raise ValueError("inverse needs y >= 0")
        out = arr ** (1.0 / self.p)
        return float(out) if arr.ndim == 0 else out

    def conjugate(self) -> YoungFunction:
        if self.p == 1:
            raise ValueError("Power{1} has no finite conjugate")
        return Power(dual_exponent(self.p), normalized=self.normalized)

    def rescale_outer(self, r: float) -> YoungFunction:
        if not 0 < r <= 1:
            raise ValueError("rescale_outer needs 0 < r <= 1")
        return Power(self.p / r, normalized=self.normalized)

    def bp_test(self, p: float) -> BpResult:
        _check_p(p)
        if self.p < p:
            return BpResult(BpVerdict.IN_BP, p, {"analytic": f"integral of t^({self.p}-{p}-1) converges"})
        return BpResult(BpVerdict.NOT_IN_BP, p, {"analytic": f"exponent {self.p} >= {p}: integral diverges"})

    def upper_exponent(self):
        return self.p

    def params(self):
        return {"p": self.p}


@dataclass(frozen=True)
class LogBump(YoungFunction):
    """``t**p * log(e + t)**(p - 1 + delta)``."""

    p: float
    delta: float
    variant: str = field(default="logbump", init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.p > 1 or not self.delta > 0:
            raise ValueError("LogBump needs p > 1 and delta > 0")

    def _raw(self, t):
        return t**self.p * np.log(math.e + t) ** (self.p - 1 + self.delta)

    def bp_test(self, p: float) -> BpResult:
        _check_p(p)
        if self.p < p:
            return BpResult(BpVerdict.IN_BP, p, {"analytic": "power exponent below p"})
        if self.p > p:
            return BpResult(BpVerdict.NOT_IN_BP, p, {"analytic": "power exponent above p"})
        # q == p: integrand is log(e+t)^(p-1+delta)/t with p-1+delta > 0 > -1.
        return BpResult(
            BpVerdict.NOT_IN_BP,
            p,
            {"analytic": f"log exponent {self.p - 1 + self.delta} > -1: integral of log^k(t)/t diverges"},
        )

    def upper_exponent(self):
        return None

    def params(self):
        return {"p": self.p, "delta": self.delta}


@dataclass(frozen=True)
class Oscillatory(YoungFunction):
    """``t**(s + a*sin(log(log(e**e + t))))`` with ``0 < a < s - 1``."""

    s: float
    a: float
    variant: str = field(default="oscillatory", init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 < self.a < self.s - 1:
            raise ValueError("Oscillatory needs 0 < a < s - 1")

    def exponent(self, t):
        return self.s + self.a * np.sin(np.log(np.log(math.e**math.e + t)))

    def _raw(self, t):
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = np.exp(self.exponent(tp) * np.log(tp))
        return out

    def bp_test(self, p: float) -> BpResult:
        _check_p(p)
        if self.s + self.a < p:
            return BpResult(BpVerdict.IN_BP, p, {"analytic": f"phi(t) <= t^{self.s + self.a}, exponent < p"})
        if self.s - self.a >= p:
            return BpResult(BpVerdict.NOT_IN_BP, p, {"analytic": f"phi(t) >= t^{self.s - self.a} for t >= 1"})
        # s - a < p <= s + a: with u = log t the integrand is exp(u*(s - p + a*sin(log u))),
        # whose exponent stays near u*(s + a - p) >= 0 on windows of log u around pi/2 + 2*pi*k.
        # Those windows have length comparable to u, so the integral diverges.
        return BpResult(
            BpVerdict.NOT_IN_BP,
            p,
            {
                "analytic": "s + a >= p: exponent peaks at s + a infinitely often on growing windows",
                "divergence_witness": "u*(s+a-p) >= 0 near log(log t) = pi/2 + 2*pi*k",
            },
        )

    def upper_exponent(self):
        return self.s + self.a

    def params(self):
        return {"s": self.s, "a": self.a}


@dataclass(frozen=True)
class OuterRescale(YoungFunction):
    """``t -> base(t**(1/r))``."""

    base: YoungFunction
    r: float
    variant: str = field(default="rescale", init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("OuterRescale needs r > 0")

    def _raw(self, t):
        return self.base(t ** (1.0 / self.r))

    def inverse(self, y):
        # psi^{-1}(y) = base^{-1}(c*y)^r composes exactly.
        arr = np.asarray(y, dtype=float) * self._scale()
        out = np.asarray(self.base.inverse(arr), dtype=float) ** self.r
        return float(out) if out.ndim == 0 else out

    def rescale_outer(self, r: float) -> YoungFunction:
        if not 0 < r <= 1:
            raise ValueError("rescale_outer needs 0 < r <= 1")
        if r == 1:
            return self
        return OuterRescale(self.base, self.r * r, normalized=self.normalized)

    def bp_test(self, p: float) -> BpResult:
        _check_p(p)
        # With u = t^(1/r): int psi(t) t^-p dt/t = r * int base(u) u^(-p r) du/u.
        q = p * self.r
        if q <= 1:
            return BpResult(
                BpVerdict.NOT_IN_BP,
                p,
                {"analytic": f"reduces to base in B_{q} with q <= 1; Young functions grow at least linearly"},
            )
        inner = self.base.bp_test(q)
        return BpResult(inner.verdict, p, {"reduced_to": inner.to_dict()})

    def upper_exponent(self):
        q = self.base.upper_exponent()
        return None if q is None else q / self.r

    def params(self):
        return {"base": self.base.to_descriptor(), "r": self.r}

    def describe(self):
        return f"OuterRescale({self.base.describe()}, r={self.r})"


@dataclass(frozen=True, eq=False)
class NumericConjugate(YoungFunction):
    """Tabulated complementary function ``sup_t (s t - base(t))``.

    Nodes are log-spaced in ``CONJ_RANGE``; between nodes the table is a cubic
    Hermite spline in log-log coordinates whose slopes come from the maximizer
    ``t*(s)`` (the conjugate's derivative).  Outside the table the end slopes
    extend it as power laws.
    """

    base: YoungFunction
    variant: str = field(default="conjugate", init=False, repr=False, compare=False)
    s_nodes: np.ndarray = field(init=False, repr=False)
    values: np.ndarray = field(init=False, repr=False)
    maximizers: np.ndarray = field(init=False, repr=False)
    _spline: Any = field(init=False, repr=False)

    def __post_init__(self):
        s = np.geomspace(*CONJ_RANGE, CONJ_SAMPLES)
        t_star = _legendre_maximizer(self.base, s)
        vals = s * t_star - self.base(t_star)
        if np.any(vals <= 0) or np.any(np.diff(vals) <= 0):
            raise ValueError(f"conjugate of {self.base.describe()} is not increasing; input not convex?")
        slopes = s * t_star / vals
        object.__setattr__(self, "s_nodes", s)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "maximizers", t_star)
        object.__setattr__(self, "_spline", CubicHermiteSpline(np.log(s), np.log(vals), slopes))

    def __hash__(self):
        return hash(("conjugate", self.base))

    def __eq__(self, other):
        return isinstance(other, NumericConjugate) and other.base == self.base

    def _raw(self, t):
        out = np.zeros_like(t)
        pos = t > 0
        x = np.log(t[pos])
        x0, x1 = math.log(self.s_nodes[0]), math.log(self.s_nodes[-1])
        y = np.empty_like(x)
        mid = (x >= x0) & (x <= x1)
        y[mid] = self._spline(x[mid])
        lo = x < x0
        hi = x > x1
        if np.any(lo):
            k0 = self.s_nodes[0] * self.maximizers[0] / self.values[0]
            y[lo] = math.log(self.values[0]) + k0 * (x[lo] - x0)
        if np.any(hi):
            k1 = self.s_nodes[-1] * self.maximizers[-1] / self.values[-1]
            y[hi] = math.log(self.values[-1]) + k1 * (x[hi] - x1)
        out[pos] = np.exp(y)
        return out

    def conjugate(self) -> YoungFunction:
        return self.base

    def params(self):
        return {"base": self.base.to_descriptor()}

    def describe(self):
        return f"NumericConjugate({self.base.describe()})"


# -- numerics -------------------------------------------------------------


@functools.lru_cache(maxsize=256)
def _numeric_conjugate(phi: YoungFunction) -> YoungFunction:
    return NumericConjugate(phi)


def _check_p(p: float) -> None:
    if not p > 1:
        raise ValueError(f"B_p needs p > 1, got {p}")


def _bisect_inverse(phi: YoungFunction, y: np.ndarray) -> np.ndarray:
    lo = np.ones_like(y)
    hi = np.ones_like(y)
    for _ in range(2100):
        grow = phi(hi) < y
        if not grow.any():
            break
        hi[grow] *= 2.0
    else:
        raise OverflowError("inverse: bracket growth failed, y beyond representable range")
    for _ in range(2100):
        shrink = phi(lo) > y
        if not shrink.any():
            break
        lo[shrink] *= 0.5
    else:
        raise ValueError("inverse: bracket shrink failed")
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(200):
        mid = 0.5 * (llo + lhi)
        below = phi(np.exp(mid)) < y
        llo = np.where(below, mid, llo)
        lhi = np.where(below, lhi, mid)
        if np.all(lhi - llo < 1e-15):
            break
    t = np.exp(0.5 * (llo + lhi))
    err = np.abs(phi(t) - y)
    if np.any(err > TOL_REL * np.maximum(y, 1.0) * 1e3):
        raise ArithmeticError("inverse: bisection did not reach tolerance")
    return t


def _legendre_maximizer(phi: YoungFunction, s: np.ndarray) -> np.ndarray:
    """Maximizer of the concave map ``t -> s t - phi(t)`` for each slope in ``s``.

    Bisection on the sign of the forward-difference slope ``phi'(t) - s``.
    """
    h = 1e-7

    def slope(t):
        return (phi(t * (1 + h)) - phi(t)) / (t * h)

    lo = np.ones_like(s)
    hi = np.ones_like(s)
    for _ in range(4000):
        m = slope(hi) < s
        if not m.any():
            break
        hi[m] *= 2.0
    else:
        raise ValueError("conjugate: slope never reaches s; phi(t)/t not superlinear")
    for _ in range(4000):
        m = slope(lo) > s
        if not m.any():
            break
        lo[m] *= 0.5
    else:
        raise ValueError("conjugate: slope bounded below away from 0")
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(200):
        mid = 0.5 * (llo + lhi)
        below = slope(np.exp(mid)) < s
        llo = np.where(below, mid, llo)
        lhi = np.where(below, lhi, mid)
        if np.all(lhi - llo < 1e-14):
            break
    t = np.exp(0.5 * (llo + lhi))
    # concavity check: the objective must not increase away from the maximizer
    obj = s * t - phi(t)
    for fac in (0.5, 2.0):
        other = s * (t * fac) - phi(t * fac)
        if np.any(other > obj + 1e-9 * np.abs(obj) + 1e-300):
            raise ValueError("conjugate: objective not concave; input is not convex")
    return t


def _numeric_bp(phi: YoungFunction, p: float, T: float = BP_TRUNCATION) -> BpResult:
    """Integrate on [1, T] in log t and bound the tail by a power fitted on the last decade."""
    _check_p(p)
    from scipy.integrate import quad

    logT = math.log(T)

    def integrand(u):
        return float(phi(math.exp(u))) * math.exp(-p * u)

    partial, _ = quad(integrand, 0.0, logT, limit=400)
    tt = np.geomspace(T / 10, T, 64)
    gamma, logc = np.polyfit(np.log(tt), np.log(phi(tt)), 1)
    cert = {"partial_integral": partial, "T": T, "fitted_gamma": float(gamma), "fitted_c": float(math.exp(logc))}
    if abs(gamma - p) <= BP_MARGIN:
        return BpResult(BpVerdict.INCONCLUSIVE, p, cert)
    if gamma < p:
        cert["tail_bound"] = float(math.exp(logc) * T ** (gamma - p) / (p - gamma))
        return BpResult(BpVerdict.IN_BP, p, cert)
    cert["divergence_witness"] = f"phi(t)/t^p grows like t^{gamma - p:.3f} on [T/10, T]"
    return BpResult(BpVerdict.NOT_IN_BP, p, cert)


# -- functional interface -------------------------------------------------


def evaluate(phi: YoungFunction, t):
    return phi(t)


def inverse(phi: YoungFunction, y):
    return phi.inverse(y)


def conjugate(phi: YoungFunction) -> YoungFunction:
    return phi.conjugate()


def bp_test(phi: YoungFunction, p: float) -> BpResult:
    return phi.bp_test(p)


def rescale_outer(phi0: YoungFunction, r: float) -> YoungFunction:
    return phi0.rescale_outer(r)


def _discrete_convex(x: np.ndarray, y: np.ndarray, eps: float = EPS_CONVEX) -> tuple[bool, bool]:
    slopes = np.diff(y) / np.diff(x)
    monotone = bool(np.all(np.diff(y) >= -eps * np.abs(y[1:])))
    scale = np.maximum(np.abs(slopes[1:]), np.abs(slopes[:-1]))
    convex = bool(np.all(np.diff(slopes) >= -eps * scale - 1e-300))
    return monotone, convex


def is_a_young(phi: YoungFunction, a: float, lo: float = 1e-4, hi: float = 1e4, num: int = 400) -> bool:
    """True iff ``u -> phi(u**(1/a))`` is nondecreasing and discretely convex on a log grid."""
    if not a > 1:
        raise ValueError("a-Young needs a > 1")
    u = np.geomspace(lo, hi, num)
    monotone, convex = _discrete_convex(u, phi(u ** (1.0 / a)))
    return monotone and convex


def check_young(phi: YoungFunction, lo: float = 1e-4, hi: float = 1e4, num: int = 400) -> dict:
    """Sampled check of the Young-function axioms; returns a dict of booleans."""
    t = np.geomspace(lo, hi, num)
    y = phi(t)
    monotone, convex = _discrete_convex(t, y)
    superlinear = bool(y[-1] / t[-1] > float(phi(hi / 2)) / (hi / 2))
    return {
        "zero_at_zero": float(phi(0.0)) == 0.0,
        "monotone": monotone,
        "convex": convex,
        "superlinear": superlinear,
    }


_VARIANTS = {
    "power": lambda p, n: Power(float(p["p"]), normalized=n),
    "logbump": lambda p, n: LogBump(float(p["p"]), float(p["delta"]), normalized=n),
    "oscillatory": lambda p, n: Oscillatory(float(p["s"]), float(p["a"]), normalized=n),
    "rescale": lambda p, n: OuterRescale(from_descriptor(p["base"]), float(p["r"]), normalized=n),
    "conjugate": lambda p, n: NumericConjugate(from_descriptor(p["base"]), normalized=n),
}


def from_descriptor(desc: dict | str) -> YoungFunction:
    """Build a Young function from ``{"variant": ..., "params": {...}}`` (dict or JSON text)."""
    if isinstance(desc, str):
        import json

        desc = json.loads(desc)
    if not isinstance(desc, dict) or "variant" not in desc:
        raise ValueError(f"malformed Young descriptor: {desc!r}")
    variant = desc["variant"]
    if variant not in _VARIANTS:
        raise ValueError(f"unknown Young variant {variant!r}")
    try:
        return _VARIANTS[variant](desc.get("params", {}), bool(desc.get("normalized", False)))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed params for {variant!r}: {exc}") from exc
