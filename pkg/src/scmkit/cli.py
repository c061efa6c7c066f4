"""Command line pipeline: estimate, run placebo inference and write artifacts.

Usage::

    scmkit --data panel.csv --treated BW --t0 2010 --exclude RP --out-dir out/

Every artifact is rendered in memory first and then written through a
temporary file and ``os.replace``; a failing run leaves no partial output.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import SCMError
from .estimator import SCFit, estimate, resolve_v
from .inference import InferenceReport, run_inference
from .panel import StudySpec, ValidatedStudy, load_long_csv, validate
from .robustness import in_time_placebo_study, leave_one_out
from .svg import Series, emit_bar_svg, emit_svg

log = logging.getLogger("scmkit")

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2


def _num(v: float) -> str:
    """Full precision (17 significant digits); 'inf' for the ratio sentinel."""
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.17g}"
    return "0" if s == "-0" else s


def _csv(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(str(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def _id_list(text: str) -> list[str]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of unit ids")
    return items


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="scmkit",
        description="Synthetic control estimation with placebo permutation inference.",
    )
    p.add_argument("--data", required=True, metavar="PATH", help="long-format CSV with header unit,time,value")
    p.add_argument("--treated", required=True, metavar="ID", help="treated unit id")
    p.add_argument("--t0", required=True, type=int, metavar="YEAR", help="last untreated period")
    pool = p.add_mutually_exclusive_group()
    pool.add_argument("--donors", type=_id_list, metavar="A,B,C", help="explicit donor pool")
    pool.add_argument(
        "--exclude",
        type=_id_list,
        metavar="A,B",
        help="drop these units from the default pool (all units except the treated one)",
    )
    p.add_argument(
        "--mspe-cutoff",
        type=_positive_float,
        default=10.0,
        metavar="R",
        help="flag placebos whose pre-MSPE is at least R times the treated pre-MSPE (default 10)",
    )
    p.add_argument("--v-mode", choices=("uniform", "nested"), default="uniform", help="predictor weighting")
    p.add_argument("--placebo-t0", type=int, metavar="YEAR", help="also run an in-time placebo at this t0")
    p.add_argument("--leave-one-out", action="store_true", help="refit excluding each positive-weight donor")
    p.add_argument(
        "--placebo-pool-includes-treated",
        action="store_true",
        help="let the treated unit serve as a donor in placebo runs (default: excluded)",
    )
    p.add_argument("--out-dir", required=True, metavar="DIR", help="directory for artifacts")
    p.add_argument("--seed", type=int, default=0, metavar="N", help="recorded in the summary; estimation is deterministic")
    p.add_argument("--jobs", type=_positive_int, default=1, metavar="N", help="threads for placebo refits")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


# --- artifact rendering ---------------------------------------------------


def _weights_csv(fit: SCFit) -> str:
    rows = [(u, _num(w), f"{w:.3f}") for u, w in zip(fit.donors, fit.weights.w)]
    return _csv(("unit", "weight", "weight_display"), rows)


def _path_csv(fit: SCFit) -> str:
    rows = [(t, _num(a), _num(s)) for t, a, s in zip(fit.times, fit.actual, fit.synthetic)]
    return _csv(("time", "actual", "synthetic"), rows)


def _gaps_csv(fit: SCFit) -> str:
    return _csv(("time", "gap"), [(t, _num(g)) for t, g in zip(fit.times, fit.gaps)])


def _placebo_gaps_csv(report: InferenceReport) -> str:
    filtered = set(report.filtered_out)
    rows = []
    for f in (report.treated_fit, *report.placebo_fits):
        flag = int(f.unit in filtered)
        rows.extend((f.unit, t, _num(g), flag) for t, g in zip(f.times, f.gaps))
    return _csv(("unit", "time", "gap", "filtered"), rows)


def _ratios_csv(report: InferenceReport) -> str:
    fits = {f.unit: f for f in (report.treated_fit, *report.placebo_fits)}
    rows = []
    for rank, (unit, ratio) in enumerate(report.ratio_table, start=1):
        f = fits[unit]
        rows.append((unit, _num(f.pre_rmspe), _num(f.post_rmspe), _num(ratio), rank))
    return _csv(("unit", "pre_rmspe", "post_rmspe", "ratio", "rank"), rows)


def _path_svg(fit: SCFit, outcome: str, title: str) -> str:
    return emit_svg(
        [
            Series(fit.unit, fit.times, fit.actual, "treated"),
            Series(f"synthetic {fit.unit}", fit.times, fit.synthetic, "synthetic"),
        ],
        title=title,
        x_label="period",
        y_label=outcome,
        vline=fit.t0 + 0.5,
    )


def _gaps_svg(report: InferenceReport, outcome: str, title: str) -> str:
    filtered = set(report.filtered_out)
    series = [Series(f.unit, f.times, f.gaps, "placebo") for f in report.placebo_fits if f.unit not in filtered]
    t = report.treated_fit
    series.append(Series(t.unit, t.times, t.gaps, "treated"))
    return emit_svg(series, title=title, x_label="period", y_label=f"gap in {outcome}", vline=t.t0 + 0.5, hline=0.0)


def _ratios_svg(report: InferenceReport, title: str) -> str:
    labels = [u for u, _ in report.ratio_table]
    values = [r for _, r in report.ratio_table]
    return emit_bar_svg(labels, values, highlight=report.treated_fit.unit, title=title, y_label="post/pre RMSPE")


def _fmt_periods(times: Sequence[int]) -> str:
    return f"{times[0]}-{times[-1]}" if len(times) > 1 else str(times[0])


def _summary(
    args: argparse.Namespace,
    study: ValidatedStudy,
    v_diag,
    report: InferenceReport,
    in_time: tuple[ValidatedStudy, InferenceReport] | None,
    loo: list[tuple[str, SCFit]] | None,
) -> str:
    fit = report.treated_fit
    sol = fit.weights
    p = report.p_value
    lines = [
        "synthetic control study",
        f"data: {Path(args.data).name}",
        f"outcome: {study.dataset.outcome_name}",
        f"treated: {study.treated}",
        f"t0 (last untreated period): {study.t0}",
        f"pre periods: {_fmt_periods(study.pre_times)} ({len(study.pre_times)})",
        f"post periods: {_fmt_periods(study.post_times)} ({len(study.post_times)})",
        f"donors ({len(study.donors)}): {', '.join(study.donors)}",
    ]
    if study.dropped_units:
        lines.append(f"dropped donors ({len(study.dropped_units)}):")
        lines.extend(f"  {u}: {reason}" for u, reason in study.dropped_units)
    else:
        lines.append("dropped donors (0): none")
    lines += [
        f"v mode: {study.spec.v_mode}",
        f"v weights: {' '.join(_num(v) for v in v_diag)}",
        f"solver: iterations={sol.iterations} converged={'yes' if sol.converged else 'no'} "
        f"objective={_num(sol.objective)}",
        "weights (support):",
    ]
    lines.extend(f"  {u}: {w:.3f}" for u, w in zip(fit.donors, sol.w) if w > 0)
    lines += [
        f"pre rmspe: {_num(fit.pre_rmspe)}",
        f"post rmspe: {_num(fit.post_rmspe)}",
        f"rmspe ratio: {_num(fit.ratio)}",
        f"rank of treated ratio: {report.rank_of(study.treated)} of {report.n_units}",
        f"p-value: {report.p_count}/{report.n_units} = {p.numerator}/{p.denominator} = {report.p_value_float:.6f}",
        f"mspe cutoff: {_num(report.mspe_cutoff)}",
        f"filtered from gap plot: {', '.join(report.filtered_out) if report.filtered_out else 'none'}",
        f"placebo donor pools include treated: {'yes' if report.placebo_pool_includes_treated else 'no'}",
        f"seed: {args.seed}",
    ]
    if in_time is not None:
        pstudy, prep = in_time
        pf = prep.treated_fit
        lines += [
            "in-time placebo:",
            f"  placebo t0: {pstudy.t0}",
            f"  pre periods: {_fmt_periods(pstudy.pre_times)}; post periods: {_fmt_periods(pstudy.post_times)}",
            f"  pre rmspe: {_num(pf.pre_rmspe)}; post rmspe: {_num(pf.post_rmspe)}; ratio: {_num(pf.ratio)}",
            f"  p-value: {prep.p_count}/{prep.n_units} = {prep.p_value_float:.6f}",
        ]
    if loo is not None:
        lines.append("leave-one-out:")
        if not loo:
            lines.append("  no donor with positive weight")
        for unit, f in loo:
            lines.append(
                f"  without {unit}: pre rmspe {_num(f.pre_rmspe)}; post rmspe {_num(f.post_rmspe)}; "
                f"ratio {_num(f.ratio)}"
            )
    return "\n".join(lines) + "\n"


def _write_atomic(out_dir: Path, artifacts: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in artifacts.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out_dir)
            staged.append((tmp, out_dir / name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except BaseException:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)


def build_artifacts(args: argparse.Namespace) -> dict[str, str]:
    """Run the full pipeline and render every artifact as text."""
    dataset = load_long_csv(args.data)
    if args.donors is not None:
        donors = tuple(args.donors)
    else:
        excluded = set(args.exclude or ())
        donors = tuple(u for u in dataset.units if u != args.treated and u not in excluded)
    spec = StudySpec(
        treated=args.treated,
        t0=args.t0,
        donors=donors,
        mspe_cutoff=args.mspe_cutoff,
        v_mode=args.v_mode,
        placebo_t0=args.placebo_t0,
        placebo_pool_includes_treated=args.placebo_pool_includes_treated,
    )
    study = validate(dataset, spec)
    v = resolve_v(study)
    fit = estimate(study, v)
    report = run_inference(study, treated_fit=fit, jobs=args.jobs)
    outcome = dataset.outcome_name

    artifacts = {
        "weights.csv": _weights_csv(fit),
        "path.csv": _path_csv(fit),
        "gaps.csv": _gaps_csv(fit),
        "placebo_gaps.csv": _placebo_gaps_csv(report),
        "ratios.csv": _ratios_csv(report),
    }

    in_time = None
    if args.placebo_t0 is not None:
        pstudy = in_time_placebo_study(study, args.placebo_t0)
        prep = run_inference(pstudy, jobs=args.jobs)
        in_time = (pstudy, prep)
        artifacts["in_time_path.csv"] = _path_csv(prep.treated_fit)
        artifacts["in_time_ratios.csv"] = _ratios_csv(prep)
        artifacts["in_time_path.svg"] = _path_svg(
            prep.treated_fit, outcome, f"{study.treated}: placebo treatment after {pstudy.t0}"
        )

    loo = None
    if args.leave_one_out:
        loo = leave_one_out(study, fit)
        rows = []
        for unit, f in loo:
            rows.extend((unit, t, _num(s), _num(g)) for t, s, g in zip(f.times, f.synthetic, f.gaps))
        artifacts["leave_one_out.csv"] = _csv(("excluded", "time", "synthetic", "gap"), rows)
        series = [Series(study.treated, fit.times, fit.actual, "treated"),
                  Series("synthetic (all donors)", fit.times, fit.synthetic, "synthetic")]
        series += [Series(f"without {u}", f.times, f.synthetic, "placebo") for u, f in loo]
        artifacts["leave_one_out.svg"] = emit_svg(
            series, title=f"{study.treated}: leave-one-out", x_label="period", y_label=outcome, vline=fit.t0 + 0.5
        )

    artifacts["summary.txt"] = _summary(args, study, v.diag, report, in_time, loo)
    artifacts["path.svg"] = _path_svg(fit, outcome, f"{study.treated} and synthetic {study.treated}")
    artifacts["gaps_placebo.svg"] = _gaps_svg(report, outcome, f"{study.treated} gap and placebo gaps")
    artifacts["ratios.svg"] = _ratios_svg(report, "Post/pre-treatment RMSPE ratios")
    return artifacts


def run_study(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        artifacts = build_artifacts(args)
        _write_atomic(Path(args.out_dir), artifacts)
    except FileNotFoundError as exc:
        print(f"scmkit: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SCMError as exc:
        print(f"scmkit: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"scmkit: error: cannot write artifacts: {exc}", file=sys.stderr)
        return EXIT_DATA
    log.info("wrote %d artifacts to %s", len(artifacts), args.out_dir)
    return EXIT_OK


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(message)s")
    sys.exit(run_study())


if __name__ == "__main__":
    main()
