"""Command line entry point: ``crfdspam {synth,extract,evaluate,compare,importance}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, kernels
from .classifiers import DEFAULT_SPECS, ClassifierSpec, parse_specs
from .data import FEATURE_NAMES, validate_dataset
from .evaluation import (
    CRFD_SCOPES,
    FEATURE_MODES,
    MetricsRecord,
    compare_feature_sets,
    cross_validate_matrix,
    dumps,
    improvement_markdown,
    metrics_table,
)
from .features import build_matrix
from .importance import averaged_importance, select_top_k
from .ingest import IngestError, atomic_write_text, derive_business_stats, load_dataset, tag_reviewers, write_dataset
from .synth import REFERENCE_SUMMARY, generate, summarize
from .transform import apply_scalers, fit_scalers, tables_to_json

log = logging.getLogger("crfdspam")


class UsageError(Exception):
    pass


def _spec_list(text: str) -> list[ClassifierSpec]:
    try:
        return parse_specs(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="reviews file (.csv or .jsonl)")
    p.add_argument("--profiles", required=True, help="reviewer profiles file (.csv or .jsonl)")
    p.add_argument("--group-by-reviewer", action="store_true", help="one row per reviewer instead of per review")
    p.add_argument("--reference-date", type=float, default=None,
                   help="day used for reviewer expertise (default: latest review)")


def _add_eval(p: argparse.ArgumentParser, with_mode: bool = True) -> None:
    if with_mode:
        p.add_argument("--mode", choices=FEATURE_MODES, default="cumulative")
    p.add_argument("--crfd-scope", choices=CRFD_SCOPES, default="train_only",
                   help="fit transforms per training fold, or once on the full dataset")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--algorithms", type=_spec_list, default=None,
                   help="comma list such as cart:depth=10,knn:k=5,log_reg,lda,gaussian_nb")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "md"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="crfdspam", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic reviews/profiles dataset")
    p.add_argument("--reviewers", type=int, default=2000)
    p.add_argument("--fake-ratio", type=float, default=0.13)
    p.add_argument("--zipf-exponent", type=float, default=1.2)
    p.add_argument("--min-reviews", type=int, default=1)
    p.add_argument("--max-reviews", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("extract", help="write the labeled feature matrix as CSV")
    _add_input(p)
    p.add_argument("--mode", choices=FEATURE_MODES, default="basic")
    p.add_argument("--tables", default=None, help="also write fitted frequency tables (JSON)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("evaluate", help="cross-validate one feature mode")
    _add_input(p)
    _add_eval(p)

    p = sub.add_parser("compare", help="basic vs cumulative features")
    _add_input(p)
    _add_eval(p, with_mode=False)

    p = sub.add_parser("importance", help="Gini importance and top-k retraining")
    _add_input(p)
    _add_eval(p)
    p.add_argument("--top-k", type=int, default=3)
    p.add_argument("--csv", default=None, help="feature,importance CSV (default: next to --out)")
    return parser


def _load(args):
    for path in (args.input, args.profiles):
        if not Path(path).is_file():
            raise UsageError(f"missing input file: {path}")
    d = derive_business_stats(tag_reviewers(load_dataset(args.input, args.profiles)))
    problems = validate_dataset(d)
    if problems:
        shown = "; ".join(f"{v.instance_id}: {v.rule}" for v in problems[:5])
        raise ValueError(f"{len(problems)} invariant violation(s): {shown}")
    return d


def _config(args) -> dict:
    cfg = {}
    for key, value in sorted(vars(args).items()):
        if key == "algorithms" and value is not None:
            value = [s.name for s in value]
        cfg[key] = value
    return cfg


def _emit(args, text: str, started: float) -> None:
    if args.out is None:
        sys.stdout.write(text)
        return
    atomic_write_text(args.out, text)
    meta = {
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "elapsed_ms": round((time.perf_counter() - started) * 1000.0, 1),
        "kernel_backend": kernels.BACKEND,
        "version": __version__,
    }
    atomic_write_text(f"{args.out}.meta.json", json.dumps(meta, indent=2) + "\n")
    log.info("wrote %s", args.out)


def _check_eval_args(args) -> list[ClassifierSpec]:
    if args.folds < 2:
        raise UsageError("--folds must be at least 2")
    specs = list(args.algorithms) if args.algorithms else list(DEFAULT_SPECS)
    for s in specs:
        try:
            s.check()
        except ValueError as exc:
            raise UsageError(f"--algorithms: {exc}") from None
    return specs


def cmd_synth(args, started):
    d = generate(
        n_reviewers=args.reviewers,
        reviews_per_reviewer_range=(args.min_reviews, args.max_reviews),
        fake_ratio=args.fake_ratio,
        zipf_exponent=args.zipf_exponent,
        seed=args.seed,
    )
    reviews_path, profiles_path = write_dataset(d, args.out)
    print(f"wrote {len(d.reviews)} reviews to {reviews_path} and {len(d.profiles)} profiles to {profiles_path}")
    print(f"{'feature':<22}{'mean':>12}{'std':>12}   reference mean/std")
    for name, mean, std in summarize(d):
        ref_mean, ref_std = REFERENCE_SUMMARY[name]
        print(f"{name:<22}{mean:>12.2f}{std:>12.2f}   {ref_mean}/{ref_std}")


def cmd_extract(args, started):
    d = _load(args)
    m = build_matrix(d, args.reference_date, args.group_by_reviewer)
    scalers = fit_scalers(m, args.mode)
    if args.tables:
        if args.mode != "cumulative":
            raise UsageError("--tables requires --mode cumulative")
        atomic_write_text(args.tables, tables_to_json(scalers, m.feature_names) + "\n")
    out_m = apply_scalers(m, scalers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance_id", "label", *m.feature_names])
    for iid, label, row in zip(out_m.ids, out_m.y, out_m.X):
        w.writerow([iid, int(label), *(repr(float(v)) for v in row)])
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    else:
        atomic_write_text(args.out, buf.getvalue())


def cmd_evaluate(args, started):
    specs = _check_eval_args(args)
    d = _load(args)
    m = build_matrix(d, args.reference_date, args.group_by_reviewer)
    report = cross_validate_matrix(m, args.mode, specs, args.folds, args.seed, args.crfd_scope)
    if args.format == "md":
        text = report.to_markdown() + "\n"
    else:
        text = dumps({"config": _config(args), "report": report.to_dict()})
    _emit(args, text, started)


def cmd_compare(args, started):
    specs = _check_eval_args(args)
    d = _load(args)
    m = build_matrix(d, args.reference_date, args.group_by_reviewer)
    basic = cross_validate_matrix(m, "basic", specs, args.folds, args.seed, args.crfd_scope)
    cumulative = cross_validate_matrix(m, "cumulative", specs, args.folds, args.seed, args.crfd_scope)
    rows = compare_feature_sets(basic, cumulative)
    if args.format == "md":
        text = "\n\n".join(
            ["## Basic features", basic.to_markdown(), "## Cumulative features", cumulative.to_markdown(),
             "## Comparison", improvement_markdown(rows)]
        ) + "\n"
    else:
        text = dumps({
            "config": _config(args),
            "basic": basic.to_dict(),
            "cumulative": cumulative.to_dict(),
            "comparison": [r.__dict__ for r in rows],
        })
    _emit(args, text, started)


def cmd_importance(args, started):
    if args.algorithms is None:
        args.algorithms = [ClassifierSpec("cart", {"max_depth": 10}), ClassifierSpec("cart", {"max_depth": 5})]
    specs = _check_eval_args(args)
    if any(s.algorithm != "cart" for s in specs):
        raise UsageError("importance needs cart models only (--algorithms cart:depth=...)")
    if not 1 <= args.top_k <= len(FEATURE_NAMES):
        raise UsageError(f"--top-k must be in [1, {len(FEATURE_NAMES)}]")
    d = _load(args)
    m = build_matrix(d, args.reference_date, args.group_by_reviewer)
    full = cross_validate_matrix(m, args.mode, specs, args.folds, args.seed, args.crfd_scope, keep_models=True)

    entries = []
    for res in full.results:
        if res.error:
            entries.append({"algorithm": res.spec.name, "label": res.spec.label, "error": res.error})
            continue
        ranking = averaged_importance(full.models[res.spec.name], m.feature_names)
        names, sub = select_top_k(ranking, m, args.top_k)
        reduced = cross_validate_matrix(sub, args.mode, [res.spec], args.folds, args.seed, args.crfd_scope)
        entries.append({
            "algorithm": res.spec.name,
            "label": res.spec.label,
            "ranking": [[n, v] for n, v in ranking],
            "selected": names,
            "all_features": res.to_dict()["mean"],
            "selected_features": reduced.results[0].to_dict()["mean"],
            "error": reduced.results[0].error,
        })

    if args.format == "md":
        rows = []
        for e in entries:
            if "ranking" not in e:
                continue
            sel = e["selected_features"]
            rows.append((e["label"], (", ".join(e["selected"]),), MetricsRecord(**sel) if sel else None, e["error"]))
            rows.append((e["label"], ("all",), MetricsRecord(**e["all_features"]), None))
        lines = ["## Feature importance", ""]
        for e in entries:
            if "ranking" in e:
                lines.append(f"{e['label']}: " + ", ".join(f"{n}={v:.3f}" for n, v in e["ranking"]))
        lines += ["", metrics_table(rows, extra_headers=("Selected Features",))]
        text = "\n".join(lines) + "\n"
    else:
        text = dumps({"config": _config(args), "flags": full.flags, "importance": entries})
    _emit(args, text, started)

    csv_path = args.csv or (None if args.out is None else str(Path(args.out).with_suffix("")) + ".importance.csv")
    if csv_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["algorithm", "feature", "importance"])
        for e in entries:
            for n, v in e.get("ranking", []):
                w.writerow([e["label"], n, repr(v)])
        atomic_write_text(csv_path, buf.getvalue())


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "importance": cmd_importance,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        COMMANDS[args.command](args, started)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"crfdspam {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, ValueError, OSError) as exc:
        print(f"crfdspam {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
