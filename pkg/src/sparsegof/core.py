"""Pearson statistic, its linear/quadratic decomposition, and moment formulas.

Everything here is a pure function of immutable value objects. Sums of
reciprocal probabilities go through :func:`math.fsum` because for sparse
models the terms span many orders of magnitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

PROB_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when a model, count vector or weight vector breaks its invariants."""


def _readonly(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"expected a one-dimensional vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class CellModel:
    """Null cell probabilities ``p_1..p_k``.

    Inputs are validated, never renormalized: a probability vector whose sum
    is off by more than ``1e-9`` is rejected.
    """

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = _readonly(self.probs, np.float64)
        object.__setattr__(self, "probs", p)
        if p.size < 2:
            raise ValidationError(f"need at least 2 cells, got {p.size}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite")
        if np.any(p <= 0.0):
            bad = int(np.flatnonzero(p <= 0.0)[0])
            raise ValidationError(f"cell probabilities must be positive (cell {bad} has {p[bad]!r})")
        total = math.fsum(p)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(
                f"probabilities sum to {total!r}, off by {1.0 - total:+.3g} (tolerance {PROB_TOL:g})"
            )

    @property
    def k(self) -> int:
        return int(self.probs.size)

    @property
    def is_equiprobable(self) -> bool:
        return bool(np.all(self.probs == self.probs[0]))


@dataclass(frozen=True)
class CountVector:
    """Observed cell frequencies; ``n`` is derived from the counts."""

    counts: np.ndarray
    n: int = field(init=False)

    def __post_init__(self) -> None:
        raw = np.asarray(self.counts)
        if raw.dtype.kind == "f":
            if not np.all(np.isfinite(raw)) or np.any(raw != np.round(raw)):
                raise ValidationError("counts must be integers")
        c = _readonly(raw, np.int64)
        if np.any(c < 0):
            bad = int(np.flatnonzero(c < 0)[0])
            raise ValidationError(f"counts must be nonnegative (cell {bad} has {c[bad]})")
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "n", int(c.sum()))

    @property
    def k(self) -> int:
        return int(self.counts.size)


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative cell weights summing to ``k``."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = _readonly(self.weights, np.float64)
        object.__setattr__(self, "weights", w)
        k = w.size
        if k < 1:
            raise ValidationError("weight vector is empty")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValidationError("weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - k) > PROB_TOL * k:
            raise ValidationError(f"weights sum to {total!r}, expected {k}")

    @property
    def k(self) -> int:
        return int(self.weights.size)

    @classmethod
    def ones(cls, k: int) -> "WeightVector":
        return cls(np.ones(k))


@dataclass(frozen=True)
class StatReport:
    x2: float
    s_n1: float
    s_n2: float
    sigma_n1_sq: float
    sigma_n2_sq: float
    sigma_n_sq: float
    k: int
    n: int
    s_n2_bar: Optional[float] = None
    sigma_n2_bar_sq: Optional[float] = None


@dataclass(frozen=True)
class Variances:
    sigma_n1_sq: float
    sigma_n2_sq: float
    sigma_n_sq: float
    sigma_n2_bar_sq: Optional[float] = None


@dataclass(frozen=True)
class AlternativeShift:
    """Expected location shifts of ``S_n1 - (k-1)`` and ``S_n2`` under an alternative."""

    s_n1_shift: float
    s_n2_shift: float


@dataclass(frozen=True)
class ConditionDiagnostics:
    """Finite-n magnitudes of the quantities that must vanish for the normal limits.

    No pass/fail verdict: the underlying conditions are statements about limits.
    """

    c3_value: float
    c4_term1: float
    c4_term2: float
    c4_value: float
    c44_term1: Optional[float] = None
    c44_term2: Optional[float] = None
    c44_value: Optional[float] = None


def _check_pair(model: CellModel, counts: CountVector) -> None:
    if model.k != counts.k:
        raise ValidationError(f"dimension mismatch: model has {model.k} cells, counts have {counts.k}")
    if counts.n == 0:
        raise ValidationError("total count n must be positive")


def _check_weights(model: CellModel, w: WeightVector) -> None:
    if w.k != model.k:
        raise ValidationError(f"dimension mismatch: model has {model.k} cells, weights have {w.k}")


def pearson_statistic(model: CellModel, counts: CountVector) -> float:
    """Pearson's ``sum (o_i - e_i)^2 / e_i`` with ``e_i = n p_i``."""
    _check_pair(model, counts)
    e = counts.n * model.probs
    d = counts.counts - e
    return math.fsum(d * d / e)


def decompose(model: CellModel, counts: CountVector) -> tuple[float, float]:
    """Split Pearson's statistic into ``(S_n1, S_n2)``.

    ``S_n2`` is the linear term ``sum (o_i - e_i)/e_i`` and ``S_n1`` is the
    remainder, so ``X^2 = S_n1 + S_n2``.
    """
    x2 = pearson_statistic(model, counts)
    if model.is_equiprobable:
        # sum(o_i - e_i) = 0 with a common e_i: exactly zero, not rounding noise
        return x2, 0.0
    e = counts.n * model.probs
    s_n2 = math.fsum((counts.counts - e) / e)
    return x2 - s_n2, s_n2


def weighted_s2(model: CellModel, counts: CountVector, w: WeightVector) -> float:
    """Weighted linear term ``sum c_i (o_i - e_i)/e_i``."""
    _check_pair(model, counts)
    _check_weights(model, w)
    e = counts.n * model.probs
    return math.fsum(w.weights * (counts.counts - e) / e)


def _inv_power_sum(probs: np.ndarray, j: int, weights: Optional[np.ndarray] = None) -> float:
    # sum c_i^(j+1) / p_i^j (plain 1/p_i^j when weights is None)
    terms = probs ** (-float(j))
    if weights is not None:
        terms = terms * weights ** (j + 1)
    return math.fsum(terms)


def variances(model: CellModel, n: int, w: Optional[WeightVector] = None) -> Variances:
    """Null variances of ``S_n1``, ``S_n2``, ``X^2`` and (optionally) the weighted ``S_n2``."""
    if n < 1:
        raise ValidationError("n must be at least 1")
    k = model.k
    s1 = 2.0 * (k - 1) * (n - 1) / n
    s2 = 0.0 if model.is_equiprobable else max((_inv_power_sum(model.probs, 1) - k * k) / n, 0.0)
    s2bar = None
    if w is not None:
        _check_weights(model, w)
        s2bar = max((_inv_power_sum(model.probs, 1, w.weights) - k * k) / n, 0.0)
    return Variances(sigma_n1_sq=s1, sigma_n2_sq=s2, sigma_n_sq=s1 + s2, sigma_n2_bar_sq=s2bar)


def alternative_shift(null: CellModel, alt: CellModel, n: int) -> AlternativeShift:
    if null.k != alt.k:
        raise ValidationError(f"dimension mismatch: null has {null.k} cells, alternative has {alt.k}")
    d = alt.probs - null.probs
    return AlternativeShift(
        s_n1_shift=(n - 1) * math.fsum(d * d / null.probs),
        s_n2_shift=math.fsum(d / null.probs),
    )


def beta_moment(model: CellModel, w: WeightVector, j: int) -> float:
    """Moment gap ``sum c_i^(j+1)/p_i^j - k^(j+1)``; zero iff ``c_i = k p_i``."""
    if j < 1:
        raise ValidationError("j must be >= 1")
    _check_weights(model, w)
    k = model.k
    return max(_inv_power_sum(model.probs, j, w.weights) - float(k) ** (j + 1), 0.0)


def condition_diagnostics(
    model: CellModel, n: int, w: Optional[WeightVector] = None
) -> ConditionDiagnostics:
    if n < 1:
        raise ValidationError("n must be at least 1")
    k = model.k
    var = variances(model, n, w)
    c3 = _inv_power_sum(model.probs, 2) / (float(n) ** 2 * float(k) ** 2)

    def branch(num: float, sig2: float) -> tuple[float, float, float]:
        t1 = max(num, 0.0) / (float(n) ** 3 * sig2 * sig2) if sig2 > 0.0 else 0.0
        t2 = sig2 / k
        return t1, t2, min(t1, t2)

    c4 = branch(_inv_power_sum(model.probs, 3) - float(k) ** 4, var.sigma_n2_sq)
    c44: tuple[Optional[float], ...] = (None, None, None)
    if w is not None:
        c44 = branch(_inv_power_sum(model.probs, 3, w.weights) - float(k) ** 4, var.sigma_n2_bar_sq)
    return ConditionDiagnostics(c3, *c4, *c44)


def stat_report(model: CellModel, counts: CountVector, w: Optional[WeightVector] = None) -> StatReport:
    """All statistics and null variances for one dataset."""
    s_n1, s_n2 = decompose(model, counts)
    var = variances(model, counts.n, w)
    return StatReport(
        x2=s_n1 + s_n2,
        s_n1=s_n1,
        s_n2=s_n2,
        sigma_n1_sq=var.sigma_n1_sq,
        sigma_n2_sq=var.sigma_n2_sq,
        sigma_n_sq=var.sigma_n_sq,
        k=model.k,
        n=counts.n,
        s_n2_bar=None if w is None else weighted_s2(model, counts, w),
        sigma_n2_bar_sq=var.sigma_n2_bar_sq,
    )


def batch_statistics(
    probs: np.ndarray, counts: np.ndarray, n: int, weights: Sequence[np.ndarray] = ()
) -> dict[str, np.ndarray]:
    """Vectorised statistics for a ``(replicates, k)`` block of count vectors.

    Used by the simulation engine; skips the per-object validation above.
    ``s_n2_bar`` has one row per entry of ``weights``.
    """
    expected = n * probs
    d = counts - expected
    lin = d / expected
    x2 = np.einsum("rk,rk->r", d, lin)
    s_n2 = np.zeros(len(lin)) if np.all(probs == probs[0]) else lin.sum(axis=1)
    out = {"x2": x2, "s_n1": x2 - s_n2, "s_n2": s_n2}
    if len(weights):
        out["s_n2_bar"] = np.stack([lin @ w for w in weights])
    return out
