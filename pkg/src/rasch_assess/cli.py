"""Command-line pipeline: validate, calibrate, report, simulate.

Exit codes: 0 success, 1 data/validation problem, 2 usage error,
3 quality gate failed under --strict (non-convergence or misfitting items).
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
from pathlib import Path

from .catalog import default_catalog, load_catalog
from .engine import CalibrationConfig, calibrate
from .errors import RaschAssessError, ValidationError
from .fit import DEFAULT_BAND, fit_statistics
from .ingest import LIKERT_MAX, build_coded_matrix, parse_responses, parse_targets
from .oracle import SimulationSpec, simulate
from .report import rank_items, render, report_from_json

_EXIT_OK = 0
_EXIT_DATA = 1
_EXIT_USAGE = 2
_EXIT_STRICT = 3


def _use_color(stream) -> bool:
    return stream.isatty() and not os.environ.get("RASCH_ASSESS_NO_COLOR")


def _status(label: str, ok: bool, detail: str, out) -> None:
    tag = "ok" if ok else "ERROR"
    if _use_color(out):
        tag = f"\x1b[32m{tag}\x1b[0m" if ok else f"\x1b[31m{tag}\x1b[0m"
    print(f"{label}: {tag} {detail}".rstrip(), file=out)


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RaschAssessError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_catalog_arg(path: str | None):
    if path is None:
        return default_catalog()
    return load_catalog(_read_text(path))


def _parse_band(text: str) -> tuple[float, float]:
    try:
        low, high = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH got {text!r}") from None
    if not low < 1 < high:
        raise argparse.ArgumentTypeError(f"band must straddle 1.0, got {text!r}")
    return low, high


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rasch-assess",
        description="Calibrate success-factor assessments and rank factors by implementation difficulty.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_inputs(p):
        p.add_argument("--factors", help="catalog CSV (id,group,name); built-in catalog when omitted")
        p.add_argument("--responses", required=True, help="responses CSV (respondent_id,factor_id,score)")
        p.add_argument("--targets", required=True, help="targets CSV (factor_id,target)")

    p_validate = sub.add_parser("validate", help="check input files and report findings")
    add_inputs(p_validate)

    p_cal = sub.add_parser("calibrate", help="run the full pipeline and write a JSON report")
    add_inputs(p_cal)
    p_cal.add_argument("--tol", type=float, default=1e-4, help="convergence tolerance in logits")
    p_cal.add_argument("--max-iter", type=int, default=1000, help="maximum estimation sweeps")
    p_cal.add_argument("--fit-band", type=_parse_band, default=DEFAULT_BAND, metavar="LOW,HIGH",
                       help="acceptability band for infit/outfit (default 0.5,2.0)")
    p_cal.add_argument("--strict", action="store_true",
                       help="exit 3 when calibration fails to converge or any item misfits")
    p_cal.add_argument("--out", required=True, help="output JSON report path")

    p_rep = sub.add_parser("report", help="render a stored JSON report")
    p_rep.add_argument("--input", required=True, help="JSON report written by calibrate")
    p_rep.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")

    p_sim = sub.add_parser("simulate", help="write a synthetic responses CSV (targets implied all 5)")
    p_sim.add_argument("--true-logits", required=True, help="CSV (factor_id,logit) of true difficulties")
    p_sim.add_argument("--persons", type=int, required=True, help="number of simulated respondents")
    p_sim.add_argument("--seed", type=int, required=True, help="random seed")
    p_sim.add_argument("--thresholds", type=_parse_floats, default=(-1.0, -0.3, 0.3, 1.0),
                       metavar="T1,..,TM", help="true step thresholds (default -1,-0.3,0.3,1)")
    p_sim.add_argument("--person-range", type=_parse_floats, default=(-2.0, 2.0), metavar="LO,HI",
                       help="uniform range for simulated person measures")
    p_sim.add_argument("--out", required=True, help="output responses CSV path")
    return parser


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        os.unlink(tmp)
        raise


def _cmd_validate(args) -> int:
    out = sys.stdout
    failed = False
    catalog = None
    try:
        catalog = _load_catalog_arg(args.factors)
        _status("factors", True, f"({len(catalog)} factors)", out)
    except RaschAssessError as exc:
        _status("factors", False, str(exc), out)
        failed = True
    if catalog is not None:
        try:
            records = parse_responses(_read_text(args.responses), catalog)
            n_answers = sum(len(r.answers) for r in records)
            _status("responses", True, f"({len(records)} respondents, {n_answers} answers)", out)
        except RaschAssessError as exc:
            _status("responses", False, str(exc), out)
            failed = True
        try:
            parse_targets(_read_text(args.targets), catalog)
            _status("targets", True, f"({len(catalog)} targets)", out)
        except RaschAssessError as exc:
            _status("targets", False, str(exc), out)
            failed = True
    else:
        print("responses: skipped (catalog failed)", file=out)
        print("targets: skipped (catalog failed)", file=out)
    return _EXIT_DATA if failed else _EXIT_OK


def _cmd_calibrate(args) -> int:
    catalog = _load_catalog_arg(args.factors)
    records = parse_responses(_read_text(args.responses), catalog)
    targets = parse_targets(_read_text(args.targets), catalog)
    matrix = build_coded_matrix(records, targets, catalog)
    config = CalibrationConfig(tolerance=args.tol, max_iterations=args.max_iter)
    result = calibrate(matrix, config)
    fits = fit_statistics(matrix, result)
    report = rank_items(result, fits, catalog, matrix=matrix, band=args.fit_band)
    _atomic_write(args.out, render(report, "json") + "\n")
    print(f"report written to {args.out}", file=sys.stderr)
    if not result.converged:
        print(f"warning: calibration did not converge in {result.iterations} sweeps", file=sys.stderr)
        if args.strict:
            return _EXIT_STRICT
    misfits = [row.factor.id for row in report.rows if row.fit_flag == "misfit"]
    if misfits and args.strict:
        print(f"misfitting items: {', '.join(misfits)}", file=sys.stderr)
        return _EXIT_STRICT
    return _EXIT_OK


def _cmd_report(args) -> int:
    report = report_from_json(_read_text(args.input))
    sys.stdout.write(render(report, args.format) + "\n")
    return _EXIT_OK


def _cmd_simulate(args) -> int:
    text = _read_text(args.true_logits)
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["factor_id", "logit"]:
        raise ValidationError(f"true-logits header must be 'factor_id,logit', got {header}")
    ids, logits = [], []
    for row in reader:
        if not row:
            continue
        if len(row) != 2:
            raise ValidationError(f"line {reader.line_num}: expected 2 fields")
        ids.append(row[0].strip())
        try:
            logits.append(float(row[1]))
        except ValueError:
            raise ValidationError(f"line {reader.line_num}: logit {row[1]!r} is not a number") from None
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate factor ids in true-logits file")
    if len(args.person_range) != 2 or not args.person_range[0] < args.person_range[1]:
        raise ValidationError(f"--person-range must be LO,HI with LO < HI, got {args.person_range}")
    spec = SimulationSpec(
        difficulties=tuple(logits),
        thresholds=args.thresholds,
        seed=args.seed,
        n_persons=args.persons,
        person_range=(args.person_range[0], args.person_range[1]),
        item_ids=tuple(ids),
    )
    matrix = simulate(spec)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["respondent_id", "factor_id", "score"])
    for n, pid in enumerate(matrix.person_ids):
        for i, fid in enumerate(matrix.item_ids):
            coded = int(matrix.cells[n, i])
            if coded >= 0:
                writer.writerow([pid, fid, LIKERT_MAX - coded])
    _atomic_write(args.out, buf.getvalue())
    print(f"synthetic responses written to {args.out}", file=sys.stderr)
    return _EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "calibrate": _cmd_calibrate,
    "report": _cmd_report,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return _EXIT_USAGE if exc.code not in (0, None) else _EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except RaschAssessError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
