"""Goodness-of-fit tests for sparse multinomial data.

Pearson's statistic, its split into a quadratic part ``S_n1`` and a linear
part ``S_n2``, the combination tests ``S_n1 + c|S_n2|`` (optionally with a
weighted linear part), their normal-mixture limit law, and a seeded Monte
Carlo harness for size and power.
"""
from .core import (
    AlternativeShift,
    CellModel,
    ConditionDiagnostics,
    CountVector,
    StatReport,
    ValidationError,
    Variances,
    WeightVector,
    alternative_shift,
    beta_moment,
    condition_diagnostics,
    decompose,
    pearson_statistic,
    stat_report,
    variances,
    weighted_s2,
)
from .decision import TestReport, TestSpec, bonferroni, run_test
from .families import FamilySpec, SamplerSeed, build_model, sample_counts, topk0_weights
from .limit_dist import (
    CriticalQuery,
    QuadratureSpec,
    psi_cdf,
    psi_critical,
    std_normal_cdf,
    std_normal_quantile,
)
from .sim import StudyConfig, ecdf_vs_theory, estimate_size_power, standard_panel

__version__ = "0.1.0"
