"""Command-line front end: ``sparsegof {test,simulate,critical,check,ecdf}``."""
from __future__ import annotations

import argparse
import re
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import report
from .core import ValidationError, WeightVector, condition_diagnostics, stat_report
from .decision import ABS_COMBO, DSQ, PEARSON, WEIGHTED_COMBO, TestSpec, bonferroni, run_test
from .families import FamilySpec, build_model, topk0_weights, weights_for_cells
from .ingest import (
    Dataset,
    IngestError,
    PeriodRule,
    digit_cells,
    ingest_counts,
    ingest_events,
    model_dataset,
    read_cell_list,
    read_mapping,
    read_model,
)
from .limit_dist import ConvergenceError, CriticalQuery, psi_critical
from .sim import DEFAULT_REPLICATES, StudyConfig, ecdf_vs_theory, estimate_size_power

_LABEL = re.compile(r"^R(bar)?(\d+(?:\.\d+)?)?$")


def parse_family(text: str, k: int) -> FamilySpec:
    """``equiprobable`` or ``family1:0.2`` style family strings."""
    name, _, param = text.partition(":")
    name = name.strip()
    if name == "equiprobable":
        return FamilySpec("equiprobable", k)
    if not param:
        raise ValidationError(f"family {name!r} needs a parameter, e.g. {name}:0.2")
    try:
        value = float(param)
    except ValueError:
        raise ValidationError(f"bad family parameter {param!r}") from None
    return FamilySpec(name, k, value)


def parse_tests(text: str, alpha: float, weights: Optional[WeightVector]) -> list[TestSpec]:
    """Comma list of labels: ``R`` (Pearson), ``R0``, ``R<c>`` and ``Rbar<c>``."""
    specs = []
    for raw in text.split(","):
        label = raw.strip()
        m = _LABEL.match(label)
        if not m or (m.group(1) and m.group(2) is None):
            raise ValidationError(f"unknown test label {label!r}")
        bar, c = m.group(1), m.group(2)
        if c is None:
            specs.append(TestSpec(PEARSON, alpha=alpha))
        elif bar:
            if weights is None:
                raise ValidationError(f"{label} needs weights (--weight-h, --weight-prefix, --weights-file or a weight column)")
            specs.append(TestSpec(WEIGHTED_COMBO, c=float(c), alpha=alpha, weights=weights))
        elif float(c) == 0.0:
            specs.append(TestSpec(DSQ, alpha=alpha))
        else:
            specs.append(TestSpec(ABS_COMBO, c=float(c), alpha=alpha))
    return specs


def _add_weight_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("top-k0 weights")
    g.add_argument("--weight-h", type=float, help="weight the first round(h*k) cells by k/k0")
    g.add_argument("--weight-prefix", help="weight cells whose id starts with any of these comma-separated prefixes")
    g.add_argument("--weights-file", type=Path, help="CSV with a cell_id column listing the weighted cells")


def _add_output_flags(p: argparse.ArgumentParser, default_format: str) -> None:
    p.add_argument("--format", choices=("csv", "json"), default=default_format)
    p.add_argument("--output", type=Path, help="write here instead of stdout")
    p.add_argument("--full-precision", action="store_true", help="do not round numbers to 6 significant digits")


def _select_weights(args, cell_ids: Sequence[str], fallback: Optional[WeightVector]) -> Optional[WeightVector]:
    k = len(cell_ids)
    if args.weights_file is not None:
        wanted = set(read_cell_list(args.weights_file))
        unknown = wanted.difference(cell_ids)
        if unknown:
            raise IngestError(f"{args.weights_file}: unknown cell(s) {', '.join(sorted(unknown)[:5])}")
        return weights_for_cells(k, [i for i, c in enumerate(cell_ids) if c in wanted])
    if args.weight_prefix:
        prefixes = tuple(x for x in args.weight_prefix.split(",") if x)
        return weights_for_cells(k, [i for i, c in enumerate(cell_ids) if c.startswith(prefixes)])
    if args.weight_h is not None:
        return topk0_weights(k, args.weight_h)
    return fallback


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.write_text(text, encoding="utf-8")


def _datasets(args) -> list[Dataset]:
    if args.counts is not None:
        return [ingest_counts(args.counts, args.model, equiprobable=args.equiprobable)]
    if args.model is not None:
        ids, probs, w = read_model(args.model)
        base = model_dataset(ids, probs, w, args.model)
    elif args.digits is not None:
        ids = digit_cells(args.digits)
        base = model_dataset(ids, np.full(len(ids), 1.0 / len(ids)), None, "digits")
    else:
        raise ValidationError("--events needs --model or --digits to define the cells")
    mapping = read_mapping(args.mapping) if args.mapping is not None else None
    periods = PeriodRule.parse(args.period) if args.period else None
    out = []
    for label, counts in ingest_events(args.events, ids, mapping, periods):
        if counts.n == 0:
            raise IngestError(f"{args.events}: period {label} has no events")
        out.append(Dataset(ids, base.model, counts, base.weights, label))
    return out


def cmd_test(args) -> int:
    datasets = _datasets(args)
    weights = _select_weights(args, datasets[0].cell_ids, datasets[0].weights)
    labels = args.tests or ("R,R0,R1,R2" + (",Rbar1" if weights is not None else ""))
    specs = parse_tests(labels, args.alpha, weights)
    full = args.full_precision

    per_dataset = []
    for ds in datasets:
        reports = [run_test(s, ds.model, ds.counts) for s in specs]
        per_dataset.append((ds, reports))

    if args.format == "csv":
        rows = [(ds.label, r) for ds, reps in per_dataset for r in reps]
        text = report.tests_csv(rows, full)
        if args.bonferroni:
            text += "\n" + _bonferroni_csv(per_dataset, specs, args.alpha, full)
        _emit(text, args.output)
        return 0

    docs = []
    for ds, reps in per_dataset:
        cfg = {"dataset": ds.label, "alpha": args.alpha, "k": ds.model.k, "n": ds.counts.n,
               "tests": [s.label for s in specs]}
        stats = stat_report(ds.model, ds.counts, weights)
        diag = condition_diagnostics(ds.model, ds.counts.n, weights)
        docs.append(report.dataset_dict(cfg, stats, reps, diag, full))
    if len(docs) == 1 and not args.bonferroni:
        doc = docs[0]
    else:
        doc = {"periods": docs}
        if args.bonferroni:
            doc["bonferroni"] = [
                report.bonferroni_dict(bonferroni([reps[i] for _, reps in per_dataset], args.alpha), args.alpha, s.label, full)
                for i, s in enumerate(specs)
            ]
    _emit(report.to_json(doc), args.output)
    return 0


def _bonferroni_csv(per_dataset, specs, alpha, full) -> str:
    lines = ["test,alpha,threshold,reject_overall,rejected_periods"]
    names = [ds.label for ds, _ in per_dataset]
    for i, s in enumerate(specs):
        b = bonferroni([reps[i] for _, reps in per_dataset], alpha)
        hit = ";".join(names[j] for j in b.rejected)
        lines.append(f"{s.label},{alpha},{report.num(b.threshold, full)},{int(b.reject_overall)},{hit}")
    return "\n".join(lines) + "\n"


def _study(args, tests) -> StudyConfig:
    null = parse_family(args.null, args.k)
    truth = parse_family(args.true, args.k) if args.true else null
    return StudyConfig(n=args.n, null_spec=null, true_spec=truth, tests=tuple(tests),
                       replicates=args.replicates, seed=args.seed)


def cmd_simulate(args) -> int:
    weights = None
    if args.weight_h is not None:
        weights = topk0_weights(args.k, args.weight_h)
    tests = parse_tests(args.tests, args.alpha, weights)
    rep = estimate_size_power(_study(args, tests))
    if args.format == "csv":
        _emit(report.size_power_csv([rep], args.full_precision), args.output)
    else:
        _emit(report.to_json(report.size_power_json([rep], args.seed, args.full_precision)), args.output)
    return 0


def cmd_ecdf(args) -> int:
    if args.true and args.true != args.null:
        raise ValidationError("ecdf runs under the null; drop --true or set it equal to --null")
    rep = ecdf_vs_theory(_study(args, ()), args.c)
    if args.format == "csv":
        _emit(report.ecdf_csv(rep, args.full_precision), args.output)
        print(f"sup_distance={report.num(rep.sup_distance, args.full_precision)} s_ratio={report.num(rep.s_ratio, args.full_precision)}",
              file=sys.stderr)
    else:
        _emit(report.to_json(report.ecdf_json(rep, args.full_precision)), args.output)
    return 0


def cmd_critical(args) -> int:
    value = psi_critical(CriticalQuery(args.alpha, args.s))
    _emit(f"{report.num(value, args.full_precision)!r}\n", args.output)
    return 0


def cmd_check(args) -> int:
    if args.model is not None:
        ids, probs, w = read_model(args.model)
        ds = model_dataset(ids, probs, w, args.model)
        model, cell_ids, fallback = ds.model, ds.cell_ids, ds.weights
    else:
        if args.family is None or args.k is None:
            raise ValidationError("check needs --model or --family with --k")
        model = build_model(parse_family(args.family, args.k))
        cell_ids, fallback = tuple(str(i) for i in range(model.k)), None
    weights = _select_weights(args, cell_ids, fallback)
    diag = asdict(condition_diagnostics(model, args.n, weights))
    diag = {k: report.num(v, args.full_precision) for k, v in diag.items()}
    if args.format == "csv":
        text = ",".join(diag) + "\n" + ",".join("" if v is None else repr(v) for v in diag.values()) + "\n"
    else:
        text = report.to_json({"k": model.k, "n": args.n, "diagnostics": diag})
    _emit(text, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsegof", description="Goodness-of-fit tests for sparse multinomial data.")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run tests on observed counts or events")
    src = t.add_mutually_exclusive_group(required=True)
    src.add_argument("--counts", type=Path, help="CSV with cell_id,count[,p[,weight]]")
    src.add_argument("--events", type=Path, help="CSV with label[,date], one event per row")
    t.add_argument("--model", type=Path, help="CSV with cell_id,p[,weight]")
    t.add_argument("--equiprobable", action="store_true", help="uniform null over the cells in --counts")
    t.add_argument("--digits", type=int, help="cells are the zero-padded digit strings of this width (uniform null)")
    t.add_argument("--mapping", type=Path, help="CSV with label,cell_id mapping raw event labels")
    t.add_argument("--period", action="append", metavar="DATE",
                   help="period boundary (ISO date); repeat, periods are [b_i, b_i+1)")
    t.add_argument("--tests", help="comma list of R, R0, R<c>, Rbar<c> (default R,R0,R1,R2[,Rbar1])")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--bonferroni", action="store_true", help="combine periods at level alpha/m")
    _add_weight_flags(t)
    _add_output_flags(t, "json")
    t.set_defaults(func=cmd_test)

    for name, func, fmt in (("simulate", cmd_simulate, "csv"), ("ecdf", cmd_ecdf, "csv")):
        s = sub.add_parser(name, help="Monte Carlo size/power" if name == "simulate" else "ECDF vs limit law under H0")
        s.add_argument("--n", type=int, required=True)
        s.add_argument("--k", type=int, required=True)
        s.add_argument("--null", required=True, help="equiprobable, family1:r, family2:r', family3:r")
        s.add_argument("--true", help="data-generating family (default: the null)")
        s.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--alpha", type=float, default=0.05)
        if name == "simulate":
            s.add_argument("--tests", default="R,R0,R1,R3,R5")
            s.add_argument("--weight-h", type=float, help="top-k0 weights on the first round(h*k) cells for Rbar tests")
        else:
            s.add_argument("--c", type=float, default=1.0, help="multiplier of |S_n2|")
        _add_output_flags(s, fmt)
        s.set_defaults(func=func)

    c = sub.add_parser("critical", help="upper-alpha critical value of Z1 + s|Z2|")
    c.add_argument("--alpha", type=float, default=0.05)
    c.add_argument("--s", type=float, required=True)
    c.add_argument("--output", type=Path)
    c.add_argument("--full-precision", action="store_true")
    c.set_defaults(func=cmd_critical)

    k = sub.add_parser("check", help="finite-n magnitudes of the normal-limit conditions")
    k.add_argument("--model", type=Path)
    k.add_argument("--family")
    k.add_argument("--k", type=int)
    k.add_argument("--n", type=int, required=True)
    _add_weight_flags(k)
    _add_output_flags(k, "json")
    k.set_defaults(func=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConvergenceError, OSError, ValueError) as exc:
        print(f"sparsegof {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
