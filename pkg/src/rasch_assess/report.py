"""Difficulty ranking and report rendering (markdown, CSV, JSON, Wright map).

Items are ordered hardest-to-implement first by unrounded difficulty; display
values are rounded to two decimals (ties half-away-from-zero) only after the
order is fixed. The JSON form keeps full precision and round-trips losslessly
so it can feed the ``report`` CLI subcommand later.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .catalog import FactorCatalog, FactorGroup, SuccessFactor
from .engine import CalibrationResult
from .errors import ValidationError
from .fit import DEFAULT_BAND, FitReport, flag_fit
from .ingest import CODING_RULE, CodedMatrix

__all__ = [
    "RankedItem",
    "PersonRow",
    "RankingReport",
    "rank_items",
    "render",
    "wright_map",
    "report_from_json",
]

_COLUMNS = ["Rank", "Group", "Success Factor", "Logit", "Error", "Infit", "Outfit"]


@dataclass(frozen=True)
class RankedItem:
    rank: int
    factor: SuccessFactor
    logit: float
    se: float
    infit: float
    outfit: float
    fit_flag: str


@dataclass(frozen=True)
class PersonRow:
    person_id: str
    measure: float | None
    se: float | None
    infit: float | None
    outfit: float | None
    extreme: bool


@dataclass(frozen=True)
class RankingReport:
    rows: tuple[RankedItem, ...]
    persons: tuple[PersonRow, ...]
    thresholds: tuple[float, ...]
    meta: dict
    delta_summary: dict


def rank_items(
    result: CalibrationResult,
    fits: FitReport,
    catalog: FactorCatalog,
    matrix: CodedMatrix | None = None,
    band: tuple[float, float] = DEFAULT_BAND,
) -> RankingReport:
    """Order calibrated items hardest first and attach fit and catalog data.

    Ties on difficulty break by standard error, then group, name, and id, so
    the order is a deterministic total order. Pass the coded matrix to fill
    the per-factor mean coded delta summary.
    """
    ranked = []
    for item in result.items:
        if item.extreme:
            continue
        if item.item_id not in catalog:
            raise ValidationError(f"calibrated item {item.item_id!r} is not in the catalog")
        factor = catalog[item.item_id]
        stat = fits.item_stats.get(item.item_id)
        if stat is None:
            raise ValidationError(f"no fit statistics for calibrated item {item.item_id!r}")
        ranked.append((item, factor, stat))
    ranked.sort(
        key=lambda t: (
            -t[0].difficulty,
            t[0].se,
            t[1].group.value,
            t[1].name,
            t[1].id,
        )
    )
    rows = tuple(
        RankedItem(
            rank=k + 1,
            factor=factor,
            logit=item.difficulty,
            se=item.se,
            infit=stat.infit_mnsq,
            outfit=stat.outfit_mnsq,
            fit_flag=flag_fit(stat, band).classification,
        )
        for k, (item, factor, stat) in enumerate(ranked)
    )
    persons = tuple(
        PersonRow(
            person_id=p.person_id,
            measure=p.measure,
            se=p.se,
            infit=(s := fits.person_stats.get(p.person_id)) and s.infit_mnsq,
            outfit=s and s.outfit_mnsq,
            extreme=p.extreme,
        )
        for p in result.persons
    )
    delta_summary = {}
    if matrix is not None:
        obs = matrix.observed_mask
        for i, iid in enumerate(matrix.item_ids):
            col = matrix.cells[:, i]
            seen = obs[:, i]
            delta_summary[iid] = float(col[seen].mean()) if seen.any() else None
    meta = {
        "converged": result.converged,
        "iterations": result.iterations,
        "excluded": {
            "persons": list(result.excluded_persons),
            "items": list(result.excluded_items),
        },
        "category_collapse": result.category_collapse,
        "tolerance": result.config.tolerance,
        "fit_band": [band[0], band[1]],
        "coding_rule": CODING_RULE,
    }
    return RankingReport(
        rows=rows,
        persons=persons,
        thresholds=result.thresholds,
        meta=meta,
        delta_summary=delta_summary,
    )


def _fmt2(value: float) -> str:
    d = Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    if d == 0:
        d = abs(d)  # no negative zero in reports
    return f"{d:.2f}"


def _row_cells(row: RankedItem) -> list[str]:
    return [
        str(row.rank),
        row.factor.group.value,
        row.factor.name,
        _fmt2(row.logit),
        _fmt2(row.se),
        _fmt2(row.infit),
        _fmt2(row.outfit),
    ]


def render(report: RankingReport, format: str = "markdown") -> str:
    """Render the ranked table; formats: markdown, csv, json."""
    if format == "markdown":
        lines = ["| " + " | ".join(_COLUMNS) + " |"]
        lines.append("|" + "|".join(" --- " for _ in _COLUMNS) + "|")
        for row in report.rows:
            lines.append("| " + " | ".join(_row_cells(row)) + " |")
        return "\n".join(lines)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_COLUMNS)
        for row in report.rows:
            writer.writerow(_row_cells(row))
        return buf.getvalue().rstrip("\n")
    if format == "json":
        payload = {
            "items": [
                {
                    "rank": row.rank,
                    "factor_id": row.factor.id,
                    "group": row.factor.group.value,
                    "name": row.factor.name,
                    "logit": row.logit,
                    "se": row.se,
                    "infit": row.infit,
                    "outfit": row.outfit,
                    "fit_flag": row.fit_flag,
                }
                for row in report.rows
            ],
            "persons": [
                {
                    "person_id": p.person_id,
                    "measure": p.measure,
                    "se": p.se,
                    "infit": p.infit,
                    "outfit": p.outfit,
                    "extreme": p.extreme,
                }
                for p in report.persons
            ],
            "thresholds": list(report.thresholds),
            "delta_summary": report.delta_summary,
            "meta": _meta_to_json(report.meta),
        }
        return json.dumps(payload, indent=2, allow_nan=False)
    raise ValueError(f"unknown format {format!r} (expected markdown, csv, or json)")


def _meta_to_json(meta: dict) -> dict:
    out = dict(meta)
    collapse = out.get("category_collapse")
    if collapse is not None:
        out["category_collapse"] = {str(k): v for k, v in collapse.items()}
    return out


def report_from_json(text: str) -> RankingReport:
    """Parse a JSON report back into a :class:`RankingReport`; inverse of
    ``render(report, "json")``."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"report is not valid JSON: {exc}") from None
    try:
        rows = tuple(
            RankedItem(
                rank=item["rank"],
                factor=SuccessFactor(
                    id=item["factor_id"],
                    name=item["name"],
                    group=FactorGroup(item["group"]),
                ),
                logit=item["logit"],
                se=item["se"],
                infit=item["infit"],
                outfit=item["outfit"],
                fit_flag=item["fit_flag"],
            )
            for item in payload["items"]
        )
        persons = tuple(
            PersonRow(
                person_id=p["person_id"],
                measure=p["measure"],
                se=p["se"],
                infit=p["infit"],
                outfit=p["outfit"],
                extreme=p["extreme"],
            )
            for p in payload["persons"]
        )
        meta = dict(payload["meta"])
        collapse = meta.get("category_collapse")
        if collapse is not None:
            meta["category_collapse"] = {int(k): v for k, v in collapse.items()}
        return RankingReport(
            rows=rows,
            persons=persons,
            thresholds=tuple(payload["thresholds"]),
            meta=meta,
            delta_summary=dict(payload["delta_summary"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"report JSON is missing or mistypes a field: {exc}") from None


_BIN = 0.25


def wright_map(result: CalibrationResult) -> str:
    """Shared-axis text chart: person measures as ``#`` counts on the left,
    item ids on the right, binned at 0.25 logits, highest bin first."""
    measures = [p.measure for p in result.persons if not p.extreme and p.measure is not None]
    difficulties = [(i.difficulty, i.item_id) for i in result.items if not i.extreme]
    values = measures + [d for d, _ in difficulties]
    if not values:
        return "(nothing to map: no non-extreme persons or items)"
    top = math.ceil(max(values) / _BIN)
    bottom = math.floor(min(values) / _BIN)

    def to_bin(v):
        return min(max(int(round(v / _BIN)), bottom), top)

    person_counts = {}
    for m in measures:
        b = to_bin(m)
        person_counts[b] = person_counts.get(b, 0) + 1
    item_bins = {}
    for d, iid in difficulties:
        item_bins.setdefault(to_bin(d), []).append(iid)

    width = max([person_counts.get(b, 0) for b in range(bottom, top + 1)] + [len("persons")])
    lines = [f"{'logit':>6}  {'persons':<{width}}  items"]
    for b in range(top, bottom - 1, -1):
        marks = "#" * person_counts.get(b, 0)
        names = ", ".join(sorted(item_bins.get(b, [])))
        lines.append(f"{b * _BIN:6.2f}  {marks:<{width}}  {names}".rstrip())
    notes = []
    if result.excluded_persons:
        notes.append("excluded persons: " + ", ".join(result.excluded_persons))
    if result.excluded_items:
        notes.append("excluded items: " + ", ".join(result.excluded_items))
    if not measures:
        notes.append("no non-extreme persons to plot")
    if notes:
        lines.append("")
        lines.extend(notes)
    return "\n".join(lines)
