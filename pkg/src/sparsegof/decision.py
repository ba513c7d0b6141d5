"""Rejection regions, one-sided p-values and Bonferroni combination."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import CellModel, CountVector, StatReport, ValidationError, WeightVector, stat_report, variances
from .limit_dist import critical_value, psi_sf, std_normal_quantile

PEARSON = "pearson_R"
DSQ = "dsq_R0"
ABS_COMBO = "abs_combo_Rc"
WEIGHTED_COMBO = "weighted_combo_Rc_bar"
TEST_KINDS = (PEARSON, DSQ, ABS_COMBO, WEIGHTED_COMBO)


@dataclass(frozen=True)
class TestSpec:
    """One rejection region: its kind, the ``|S_n2|`` multiplier ``c``, weights and level."""

    __test__ = False  # keep pytest from collecting this class

    kind: str
    c: float = 0.0
    alpha: float = 0.05
    weights: Optional[WeightVector] = None

    def __post_init__(self) -> None:
        if self.kind not in TEST_KINDS:
            raise ValidationError(f"unknown test kind {self.kind!r}")
        if not self.c >= 0.0 or not math.isfinite(self.c):
            raise ValidationError("c must be finite and >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.kind == WEIGHTED_COMBO and self.weights is None:
            raise ValidationError("weighted_combo_Rc_bar needs a weight vector")
        if self.kind == DSQ and self.c != 0.0:
            raise ValidationError("dsq_R0 is the c = 0 region")

    @property
    def label(self) -> str:
        if self.kind == PEARSON:
            return "R"
        if self.kind == DSQ:
            return "R0"
        name = "Rbar" if self.kind == WEIGHTED_COMBO else "R"
        return f"{name}{self.c:g}"


@dataclass(frozen=True)
class TestReport:
    __test__ = False

    kind: str
    c: float
    statistic: float
    standardized: float
    s_ratio: float
    critical_value: float
    p_value: float
    reject: bool


@dataclass(frozen=True)
class Calibration:
    """Sample-independent part of a test: centre, scale, limit-law shape and cutoff."""

    center: float
    scale: float
    s_ratio: float
    critical_value: float


def calibrate(spec: TestSpec, model: CellModel, n: int) -> Calibration:
    """Centre ``k-1``, scale, ``s`` ratio and critical value for ``spec`` at sample size ``n``.

    These depend on the model, ``n`` and ``alpha`` only, so simulations compute
    them once per configuration.
    """
    if spec.weights is not None and spec.weights.k != model.k:
        raise ValidationError("weight vector length does not match the model")
    w = spec.weights if spec.kind == WEIGHTED_COMBO else None
    var = variances(model, n, w)
    center = float(model.k - 1)
    if spec.kind == PEARSON:
        scale = math.sqrt(var.sigma_n_sq)
        s_ratio = 0.0
    else:
        scale = math.sqrt(var.sigma_n1_sq)
        lin_var = var.sigma_n2_bar_sq if spec.kind == WEIGHTED_COMBO else var.sigma_n2_sq
        s_ratio = spec.c * math.sqrt(lin_var) / scale if scale > 0.0 else 0.0
    if scale <= 0.0:
        raise ValidationError("degenerate null variance (need k >= 2 and n >= 2)")
    crit = std_normal_quantile(spec.alpha) if s_ratio == 0.0 else critical_value(spec.alpha, s_ratio)
    return Calibration(center, scale, s_ratio, crit)


def raw_statistic(spec: TestSpec, stats: StatReport) -> float:
    if spec.kind == PEARSON:
        return stats.x2
    if spec.kind == DSQ:
        return stats.s_n1
    if spec.kind == ABS_COMBO:
        return stats.s_n1 + spec.c * abs(stats.s_n2)
    return stats.s_n1 + spec.c * abs(stats.s_n2_bar)


def run_test(spec: TestSpec, model: CellModel, counts: CountVector) -> TestReport:
    w = spec.weights if spec.kind == WEIGHTED_COMBO else None
    stats = stat_report(model, counts, w)
    cal = calibrate(spec, model, counts.n)
    statistic = raw_statistic(spec, stats)
    z = (statistic - cal.center) / cal.scale
    return TestReport(
        kind=spec.kind,
        c=spec.c,
        statistic=statistic,
        standardized=z,
        s_ratio=cal.s_ratio,
        critical_value=cal.critical_value,
        p_value=psi_sf(z, cal.s_ratio),
        reject=z > cal.critical_value,
    )


@dataclass(frozen=True)
class BonferroniResult:
    reject_overall: bool
    threshold: float
    rejected: tuple[int, ...]


def bonferroni(reports: Sequence[TestReport], alpha: float) -> BonferroniResult:
    """Reject the overall null when any component p-value falls below ``alpha/m``."""
    if not reports:
        raise ValidationError("need at least one report")
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must lie in (0, 1)")
    threshold = alpha / len(reports)
    hits = tuple(i for i, r in enumerate(reports) if r.p_value < threshold)
    return BonferroniResult(reject_overall=bool(hits), threshold=threshold, rejected=hits)
