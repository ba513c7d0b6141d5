"""Seeded Monte Carlo estimates of size and power, and ECDF-versus-limit diagnostics.

Replicate ``i`` always draws from the stream ``SamplerSeed(seed, i)``, and
replicates are processed in fixed blocks whose results land in index order,
so the output does not depend on the number of worker threads.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import ValidationError, batch_statistics
from .decision import ABS_COMBO, DSQ, PEARSON, WEIGHTED_COMBO, TestSpec, calibrate
from .families import AliasTable, FamilySpec, build_model, sample_block
from .limit_dist import psi_cdf

DEFAULT_REPLICATES = 10_000
ECDF_GRID_POINTS = 512
_BLOCK_CELLS = 2_000_000


@dataclass(frozen=True)
class StudyConfig:
    n: int
    null_spec: FamilySpec
    true_spec: FamilySpec
    tests: tuple[TestSpec, ...]
    replicates: int = DEFAULT_REPLICATES
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "tests", tuple(self.tests))
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.n < 2:
            raise ValidationError("n must be >= 2")
        if self.null_spec.k != self.true_spec.k:
            raise ValidationError("null and true models must have the same number of cells")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TestFrequency:
    __test__ = False

    label: str
    kind: str
    c: float
    alpha: float
    rejections: int
    frequency: float
    std_error: float


@dataclass(frozen=True)
class SizePowerReport:
    config: StudyConfig
    replicates: int
    results: tuple[TestFrequency, ...]

    def frequency(self, label: str) -> float:
        for r in self.results:
            if r.label == label:
                return r.frequency
        raise KeyError(label)

    @property
    def is_size(self) -> bool:
        return self.config.null_spec == self.config.true_spec


@dataclass(frozen=True)
class EcdfReport:
    c: float
    s_ratio: float
    values: np.ndarray
    grid: np.ndarray
    empirical: np.ndarray
    theoretical: np.ndarray
    sup_distance: float = field(default=0.0)


def standard_panel(alpha: float = 0.05, cs: Sequence[float] = (1.0, 3.0, 5.0)) -> tuple[TestSpec, ...]:
    """The five-test panel R, R0, R1, R3, R5 used for the size/power tables."""
    return (TestSpec(PEARSON, alpha=alpha), TestSpec(DSQ, alpha=alpha)) + tuple(
        TestSpec(ABS_COMBO, c=c, alpha=alpha) for c in cs
    )


def worker_count() -> int:
    env = os.environ.get("GOF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _blocks(replicates: int, k: int) -> list[tuple[int, int]]:
    size = max(1, min(replicates, _BLOCK_CELLS // max(k, 1)))
    return [(a, min(a + size, replicates)) for a in range(0, replicates, size)]


def _standardized(config: StudyConfig, tests: Sequence[TestSpec], threads: Optional[int]) -> tuple[np.ndarray, list]:
    """``(len(tests), replicates)`` standardized statistics plus each test's calibration."""
    null = build_model(config.null_spec)
    truth = build_model(config.true_spec)
    n = config.n
    cals = [calibrate(t, null, n) for t in tests]
    table = AliasTable(truth.probs)
    weighted = [i for i, t in enumerate(tests) if t.kind == WEIGHTED_COMBO]
    weight_rows = [tests[i].weights.weights for i in weighted]
    out = np.empty((len(tests), config.replicates))

    def run(block: tuple[int, int]) -> None:
        a, b = block
        st = batch_statistics(null.probs, sample_block(table, n, config.seed, a, b), n, weight_rows)
        for t_idx, (spec, cal) in enumerate(zip(tests, cals)):
            if spec.kind == PEARSON:
                stat = st["x2"]
            elif spec.kind == DSQ:
                stat = st["s_n1"]
            elif spec.kind == ABS_COMBO:
                stat = st["s_n1"] + spec.c * np.abs(st["s_n2"])
            else:
                stat = st["s_n1"] + spec.c * np.abs(st["s_n2_bar"][weighted.index(t_idx)])
            out[t_idx, a:b] = (stat - cal.center) / cal.scale

    blocks = _blocks(config.replicates, null.k)
    workers = threads if threads is not None else worker_count()
    if workers <= 1 or len(blocks) == 1:
        for blk in blocks:
            run(blk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, blocks))
    return out, cals


def estimate_size_power(config: StudyConfig, threads: Optional[int] = None) -> SizePowerReport:
    """Rejection frequency of every test when data come from ``true_spec``.

    With ``null_spec == true_spec`` the frequencies estimate size, otherwise power.
    """
    z, cals = _standardized(config, config.tests, threads)
    R = config.replicates
    results = []
    for spec, cal, row in zip(config.tests, cals, z):
        hits = int(np.count_nonzero(row > cal.critical_value))
        freq = hits / R
        results.append(
            TestFrequency(
                label=spec.label,
                kind=spec.kind,
                c=spec.c,
                alpha=spec.alpha,
                rejections=hits,
                frequency=freq,
                std_error=math.sqrt(freq * (1.0 - freq) / R),
            )
        )
    return SizePowerReport(config=config, replicates=R, results=tuple(results))


def sup_distance(values: np.ndarray, cdf) -> float:
    """Kolmogorov distance between the ECDF of ``values`` and a continuous ``cdf``."""
    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    f = np.array([cdf(v) for v in x])
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(0, m) / m
    return float(max(upper.max(), lower.max(), 0.0))


def ecdf_vs_theory(config: StudyConfig, combo_c: float, threads: Optional[int] = None) -> EcdfReport:
    """Empirical CDF of the standardized ``S_n1 + c|S_n2|`` under H0 against ``Psi(., s)``."""
    if config.null_spec != config.true_spec:
        raise ValidationError("the ECDF diagnostic runs under the null: null_spec must equal true_spec")
    spec = TestSpec(DSQ) if combo_c == 0.0 else TestSpec(ABS_COMBO, c=combo_c)
    z, cals = _standardized(config, [spec], threads)
    s = cals[0].s_ratio
    values = np.sort(z[0])
    grid = np.linspace(values[0] - 0.5, values[-1] + 0.5, ECDF_GRID_POINTS)
    empirical = np.searchsorted(values, grid, side="right") / values.size
    theoretical = np.array([psi_cdf(g, s) for g in grid])
    values.setflags(write=False)
    return EcdfReport(
        c=combo_c,
        s_ratio=s,
        values=values,
        grid=grid,
        empirical=empirical,
        theoretical=theoretical,
        sup_distance=sup_distance(values, lambda v: psi_cdf(v, s)),
    )
