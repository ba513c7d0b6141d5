"""Normal-mixture limit law of ``Z1 + s|Z2|`` and its upper critical values.

``Psi(x, s) = sqrt(2/pi) * int_0^inf Phi(x - s t) exp(-t^2/2) dt``.
The integral is evaluated with composite Gauss-Legendre rules on ``[0, T]``,
split at the point ``t = x/s`` where the integrand changes fastest, and each
piece is refined by halving its panels until two successive estimates agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr, ndtri

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Truncation point ``T`` of the t-integral and the Gauss-Legendre order per panel."""

    truncation: float = 10.0
    nodes: int = 64
    tol: float = 1e-12
    max_panels: int = 4096

    def __post_init__(self) -> None:
        if self.truncation < 8.0:
            raise ValueError("truncation must be >= 8")
        if self.nodes < 64:
            raise ValueError("nodes must be >= 64")


DEFAULT_QUADRATURE = QuadratureSpec()


@dataclass(frozen=True)
class CriticalQuery:
    alpha: float
    s: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.s >= 0.0 or not math.isfinite(self.s):
            raise ValueError(f"s must be finite and >= 0, got {self.s}")


def std_normal_cdf(x: float) -> float:
    return float(ndtr(x))


def std_normal_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def std_normal_quantile(alpha: float) -> float:
    """Upper-tail critical value ``z`` with ``1 - Phi(z) = alpha``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(-ndtri(alpha))


@lru_cache(maxsize=8)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _composite(f, a: float, b: float, panels: int, order: int) -> float:
    x, w = _gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    t = mid[:, None] + half[:, None] * x[None, :]
    return float(np.sum(half * (f(t) @ w)))


def _adaptive(f, a: float, b: float, q: QuadratureSpec) -> float:
    if b <= a:
        return 0.0
    panels = 1
    prev = _composite(f, a, b, panels, q.nodes)
    while panels < q.max_panels:
        panels *= 2
        cur = _composite(f, a, b, panels, q.nodes)
        if abs(cur - prev) < q.tol:
            return cur
        prev = cur
    raise ConvergenceError(f"quadrature on [{a}, {b}] did not settle at {q.max_panels} panels")


def _integrate(f, x: float, s: float, q: QuadratureSpec) -> float:
    T = q.truncation
    cuts = [0.0, T]
    if s > 0.0 and 0.0 < x / s < T:
        cuts.insert(1, x / s)
    return _SQRT_2_OVER_PI * sum(_adaptive(f, lo, hi, q) for lo, hi in zip(cuts, cuts[1:]))


def psi_cdf(x: float, s: float, q: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """``P(Z1 + s|Z2| <= x)`` for independent standard normals ``Z1, Z2``."""
    if s < 0.0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return std_normal_cdf(x)
    val = _integrate(lambda t: ndtr(x - s * t) * np.exp(-0.5 * t * t), x, s, q)
    return min(max(val, 0.0), 1.0)


def psi_sf(x: float, s: float, q: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Upper tail ``1 - Psi(x, s)``, integrated directly to keep small tails accurate."""
    if s < 0.0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return float(ndtr(-x))
    val = _integrate(lambda t: ndtr(s * t - x) * np.exp(-0.5 * t * t), x, s, q)
    return min(max(val, 0.0), 1.0)


def psi_pdf(x: float, s: float, q: QuadratureSpec = DEFAULT_QUADRATURE) -> float:
    """Density ``d/dx Psi(x, s)``."""
    if s == 0.0:
        return std_normal_pdf(x)
    return _integrate(
        lambda t: _INV_SQRT_2PI * np.exp(-0.5 * (x - s * t) ** 2 - 0.5 * t * t), x, s, q
    )


def psi_critical(
    query: CriticalQuery,
    q: QuadratureSpec = DEFAULT_QUADRATURE,
    *,
    xtol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Upper-``alpha`` critical value of ``Psi(., s)`` by Newton's method on a kept bracket."""
    alpha, s = query.alpha, query.s
    z = std_normal_quantile(alpha)
    if s == 0.0:
        return z

    def g(x: float) -> float:
        return psi_sf(x, s, q) - alpha

    lo, hi = -10.0, z * (1.0 + s) + 10.0
    g_lo, g_hi = g(lo), g(hi)
    grow = 0
    while g_lo < 0.0:
        lo -= 10.0 * (1.0 + s)
        g_lo = g(lo)
        grow += 1
        if grow > 50:
            raise ConvergenceError(f"no lower bracket for alpha={alpha}, s={s}")
    while g_hi > 0.0:
        hi += 10.0 * (1.0 + s)
        g_hi = g(hi)
        grow += 1
        if grow > 50:
            raise ConvergenceError(f"no upper bracket for alpha={alpha}, s={s}")

    # g is decreasing in x: g(lo) >= 0 >= g(hi)
    x = min(max(z * math.sqrt(1.0 + s * s) + s * math.sqrt(2.0 / math.pi), lo), hi)
    for _ in range(max_iter):
        gx = g(x)
        if gx == 0.0:
            return x
        if gx > 0.0:
            lo = x
        else:
            hi = x
        dens = psi_pdf(x, s, q)
        step_ok = dens > 0.0
        if step_ok:
            x_new = x + gx / dens
            step_ok = lo < x_new < hi
        if not step_ok:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= xtol * max(1.0, abs(x)) or hi - lo <= xtol * max(1.0, abs(x)):
            return x_new
        x = x_new
    raise ConvergenceError(f"critical value did not converge for alpha={alpha}, s={s}")


@lru_cache(maxsize=4096)
def _cached_critical(alpha: float, s_key: float) -> float:
    return psi_critical(CriticalQuery(alpha, s_key))


def critical_value(alpha: float, s: float) -> float:
    """Memoised ``psi_critical`` with the default quadrature; ``s`` keyed at 1e-12."""
    return _cached_critical(float(alpha), round(float(s), 12))
