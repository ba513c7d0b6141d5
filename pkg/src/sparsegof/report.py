"""JSON/CSV layouts for test, simulation and ECDF results."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict
from typing import Sequence

from .core import ConditionDiagnostics, StatReport
from .decision import BonferroniResult, TestReport
from .sim import EcdfReport, SizePowerReport

SIG_DIGITS = 6


def num(x, full: bool = False):
    """Round to 6 significant digits unless ``full``; ints and None pass through."""
    if x is None or isinstance(x, (bool, int)) or full:
        return x
    if not math.isfinite(x):
        return x
    return float(f"{x:.{SIG_DIGITS}g}")


def _round_all(obj, full: bool):
    if isinstance(obj, dict):
        return {k: _round_all(v, full) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_all(v, full) for v in obj]
    if isinstance(obj, float):
        return num(obj, full)
    return obj


def test_dict(r: TestReport) -> dict:
    return {
        "kind": r.kind,
        "c": r.c,
        "statistic": r.statistic,
        "standardized": r.standardized,
        "s_ratio": r.s_ratio,
        "critical_value": r.critical_value,
        "p_value": r.p_value,
        "reject": r.reject,
    }


def test_from_dict(d: dict) -> TestReport:
    return TestReport(
        kind=d["kind"],
        c=float(d["c"]),
        statistic=float(d["statistic"]),
        standardized=float(d["standardized"]),
        s_ratio=float(d["s_ratio"]),
        critical_value=float(d["critical_value"]),
        p_value=float(d["p_value"]),
        reject=bool(d["reject"]),
    )


def dataset_dict(
    config: dict,
    stats: StatReport,
    tests: Sequence[TestReport],
    diagnostics: ConditionDiagnostics,
    full: bool = False,
) -> dict:
    """The fixed report layout ``{config, statistics, variances, tests, diagnostics}``."""
    out = {
        "config": config,
        "statistics": {
            "k": stats.k,
            "n": stats.n,
            "x2": stats.x2,
            "s_n1": stats.s_n1,
            "s_n2": stats.s_n2,
            "s_n2_bar": stats.s_n2_bar,
        },
        "variances": {
            "sigma_n1_sq": stats.sigma_n1_sq,
            "sigma_n2_sq": stats.sigma_n2_sq,
            "sigma_n_sq": stats.sigma_n_sq,
            "sigma_n2_bar_sq": stats.sigma_n2_bar_sq,
        },
        "tests": [test_dict(t) for t in tests],
        "diagnostics": asdict(diagnostics),
    }
    return _round_all(out, full)


def bonferroni_dict(b: BonferroniResult, alpha: float, test_kind: str, full: bool = False) -> dict:
    return _round_all(
        {
            "test": test_kind,
            "alpha": alpha,
            "threshold": b.threshold,
            "reject_overall": b.reject_overall,
            "rejected_periods": list(b.rejected),
        },
        full,
    )


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def tests_csv(rows: Sequence[tuple[str, TestReport]], full: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dataset", "kind", "c", "statistic", "standardized", "s_ratio", "critical_value", "p_value", "reject"])
    for name, r in rows:
        w.writerow(
            [name, r.kind, num(r.c, full), num(r.statistic, full), num(r.standardized, full),
             num(r.s_ratio, full), num(r.critical_value, full), num(r.p_value, full), int(r.reject)]
        )
    return buf.getvalue()


SIZE_POWER_COLUMNS = ["n", "k", "null", "true", "test", "alpha", "replicates", "rejections", "frequency", "std_error"]


def size_power_rows(rep: SizePowerReport, full: bool = False) -> list[dict]:
    cfg = rep.config
    return [
        {
            "n": cfg.n,
            "k": cfg.null_spec.k,
            "null": cfg.null_spec.label,
            "true": cfg.true_spec.label,
            "test": r.label,
            "alpha": r.alpha,
            "replicates": rep.replicates,
            "rejections": r.rejections,
            "frequency": num(r.frequency, full),
            "std_error": num(r.std_error, full),
        }
        for r in rep.results
    ]


def size_power_csv(reports: Sequence[SizePowerReport], full: bool = False) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SIZE_POWER_COLUMNS, lineterminator="\n")
    w.writeheader()
    for rep in reports:
        w.writerows(size_power_rows(rep, full))
    return buf.getvalue()


def size_power_json(reports: Sequence[SizePowerReport], seed: int, full: bool = False) -> dict:
    return {"seed": seed, "rows": [row for rep in reports for row in size_power_rows(rep, full)]}


def ecdf_csv(rep: EcdfReport, full: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "empirical", "theoretical"])
    for x, e, t in zip(rep.grid, rep.empirical, rep.theoretical):
        w.writerow([num(float(x), full), num(float(e), full), num(float(t), full)])
    return buf.getvalue()


def ecdf_json(rep: EcdfReport, full: bool = False, include_values: bool = False) -> dict:
    out = {
        "c": rep.c,
        "s_ratio": rep.s_ratio,
        "replicates": int(rep.values.size),
        "sup_distance": rep.sup_distance,
        "grid": rep.grid.tolist(),
        "empirical": rep.empirical.tolist(),
        "theoretical": rep.theoretical.tolist(),
    }
    if include_values:
        out["values"] = rep.values.tolist()
    return _round_all(out, full)

