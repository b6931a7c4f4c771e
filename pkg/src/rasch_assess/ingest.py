"""Assessment ingestion: responses/targets CSV parsing, delta coding, and
assembly of the coded persons x items matrix.

Team members rate the current state of each success factor on a 5-point
Likert scale; the organization supplies a target rating per factor. The gap
``target - current`` is coded into ordinal improvement-potential categories
0..4, with every non-positive gap (target already met or exceeded) collapsed
into category 0.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .catalog import FactorCatalog
from .errors import InsufficientDataError, ValidationError

__all__ = [
    "LIKERT_MIN",
    "LIKERT_MAX",
    "TOP_CATEGORY",
    "CODING_RULE",
    "RespondentRecord",
    "TargetProfile",
    "CodedMatrix",
    "parse_responses",
    "parse_targets",
    "compute_delta",
    "code_delta",
    "build_coded_matrix",
]

LIKERT_MIN = 1
LIKERT_MAX = 5
TOP_CATEGORY = LIKERT_MAX - LIKERT_MIN  # delta range is 0..4 after coding

# recorded in report metadata so consumers can tell which coding produced a file
CODING_RULE = "collapse-nonpositive-v1"


def _check_likert(value: int, what: str) -> int:
    if not LIKERT_MIN <= value <= LIKERT_MAX:
        raise ValidationError(f"{what} {value} out of range {LIKERT_MIN}..{LIKERT_MAX}")
    return value


@dataclass(frozen=True)
class RespondentRecord:
    """One team member's current-state view; answers may omit factors."""

    respondent_id: str
    answers: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class TargetProfile:
    """The organization's target rating for every factor in the catalog."""

    targets: dict[str, int]

    def __getitem__(self, factor_id: str) -> int:
        return self.targets[factor_id]


def compute_delta(current: int, target: int) -> int:
    """Improvement gap ``target - current``; negative when the current state
    already exceeds the target."""
    _check_likert(current, "current score")
    _check_likert(target, "target score")
    return target - current


def code_delta(delta: int) -> int:
    """Code a gap into ordinal categories 0..4: non-positive gaps collapse
    into the single over-compliance category 0."""
    if not -TOP_CATEGORY <= delta <= TOP_CATEGORY:
        raise ValidationError(f"delta {delta} out of range -{TOP_CATEGORY}..{TOP_CATEGORY}")
    return max(delta, 0)


def _extreme_fixed_point(cells: np.ndarray, top: int):
    """Indices of persons/items that are non-estimable: every observed cell at
    the same scale end (or no observed cells), re-checked against the
    surviving rows/columns until stable."""
    n, i = cells.shape
    person_ok = np.ones(n, dtype=bool)
    item_ok = np.ones(i, dtype=bool)
    while True:
        changed = False
        for axis, ok in ((1, person_ok), (0, item_ok)):
            sub = cells[np.ix_(person_ok, item_ok)]
            if axis == 0:
                sub = sub.T
            # rows of `sub` correspond to the True entries of `ok`
            obs = sub >= 0
            any_obs = obs.any(axis=1)
            all_min = ((sub == 0) | ~obs).all(axis=1)
            all_max = ((sub == top) | ~obs).all(axis=1)
            keep = any_obs & ~all_min & ~all_max
            if not keep.all():
                idx = np.flatnonzero(ok)
                ok[idx[~keep]] = False
                changed = True
                break  # re-slice before checking the other axis
        if not changed:
            return ~person_ok, ~item_ok


class CodedMatrix:
    """Persons x items grid of coded categories; -1 marks a missing cell.

    Immutable after construction. Extreme persons/items (all observed cells
    at 0 or all at the top category, evaluated to a fixed point so exclusions
    cascade) are identified up front so downstream stages exclude the same
    entities deterministically.
    """

    def __init__(self, person_ids, item_ids, cells, top_category: int = TOP_CATEGORY):
        self.person_ids = tuple(str(p) for p in person_ids)
        self.item_ids = tuple(str(i) for i in item_ids)
        if len(set(self.person_ids)) != len(self.person_ids):
            raise ValidationError("duplicate person ids")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise ValidationError("duplicate item ids")
        if top_category < 1:
            raise ValidationError("top_category must be >= 1")
        cells = np.asarray(cells, dtype=np.int64)
        if cells.shape != (len(self.person_ids), len(self.item_ids)):
            raise ValidationError(
                f"cell grid shape {cells.shape} does not match "
                f"{len(self.person_ids)} persons x {len(self.item_ids)} items"
            )
        if cells.size and (cells.min() < -1 or cells.max() > top_category):
            raise ValidationError(f"cell values must be -1 (missing) or 0..{top_category}")
        self.top_category = int(top_category)
        self._cells = cells.copy()
        self._cells.setflags(write=False)
        ext_p, ext_i = _extreme_fixed_point(self._cells, self.top_category)
        self.extreme_person_ids = tuple(str(p) for p in np.array(self.person_ids)[ext_p])
        self.extreme_item_ids = tuple(str(i) for i in np.array(self.item_ids)[ext_i])

    @classmethod
    def from_rows(cls, person_ids, item_ids, rows, top_category: int = TOP_CATEGORY):
        """Build from nested sequences where ``None`` marks a missing cell."""
        cells = np.array(
            [[-1 if v is None else int(v) for v in row] for row in rows], dtype=np.int64
        ).reshape(len(tuple(person_ids)), len(tuple(item_ids)))
        return cls(person_ids, item_ids, cells, top_category)

    @property
    def cells(self) -> np.ndarray:
        return self._cells

    @property
    def n_persons(self) -> int:
        return len(self.person_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def observed_mask(self) -> np.ndarray:
        return self._cells >= 0

    def estimable(self) -> bool:
        """True when at least 2 non-extreme persons and 2 non-extreme items
        carry observations, the precondition for calibration."""
        return (
            self.n_persons - len(self.extreme_person_ids) >= 2
            and self.n_items - len(self.extreme_item_ids) >= 2
        )


def _read_rows(source: str, expected_header: list[str], what: str):
    reader = csv.reader(io.StringIO(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError(f"{what} CSV is empty") from None
    if header != expected_header:
        raise ValidationError(
            f"{what} header must be {','.join(expected_header)!r}, got {','.join(header)!r}"
        )
    for row in reader:
        if row:
            yield reader.line_num, row


def _parse_int(text: str, line: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"line {line}: {what} {text!r} is not an integer") from None


def parse_responses(source: str, catalog: FactorCatalog) -> list[RespondentRecord]:
    """Parse long-format responses CSV (``respondent_id,factor_id,score``).

    Respondents keep first-appearance order; each (respondent, factor) pair
    may appear at most once.
    """
    answers: dict[str, dict[str, int]] = {}
    for line, row in _read_rows(source, ["respondent_id", "factor_id", "score"], "responses"):
        if len(row) != 3:
            raise ValidationError(f"line {line}: expected 3 fields, got {len(row)}")
        rid, fid, score_text = (f.strip() for f in row)
        if not rid or not fid or not score_text:
            raise ValidationError(f"line {line}: blank field")
        if fid not in catalog:
            raise ValidationError(f"line {line}: unknown factor id {fid!r}")
        score = _parse_int(score_text, line, "score")
        try:
            _check_likert(score, "score")
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        per = answers.setdefault(rid, {})
        if fid in per:
            raise ValidationError(
                f"line {line}: duplicate answer for respondent {rid!r}, factor {fid!r}"
            )
        per[fid] = score
    return [RespondentRecord(rid, factor_scores) for rid, factor_scores in answers.items()]


def parse_targets(source: str, catalog: FactorCatalog) -> TargetProfile:
    """Parse targets CSV (``factor_id,target``); must cover the whole catalog."""
    targets: dict[str, int] = {}
    for line, row in _read_rows(source, ["factor_id", "target"], "targets"):
        if len(row) != 2:
            raise ValidationError(f"line {line}: expected 2 fields, got {len(row)}")
        fid, target_text = (f.strip() for f in row)
        if not fid or not target_text:
            raise ValidationError(f"line {line}: blank field")
        if fid not in catalog:
            raise ValidationError(f"line {line}: unknown factor id {fid!r}")
        if fid in targets:
            raise ValidationError(f"line {line}: duplicate target for factor {fid!r}")
        target = _parse_int(target_text, line, "target")
        try:
            _check_likert(target, "target")
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        targets[fid] = target
    missing = [fid for fid in catalog.ids if fid not in targets]
    if missing:
        raise ValidationError(f"targets missing for factors: {', '.join(missing)}")
    return TargetProfile(targets)


def build_coded_matrix(
    records, targets: TargetProfile, catalog: FactorCatalog
) -> CodedMatrix:
    """Assemble the coded matrix: rows follow record order, columns follow
    catalog order, and unanswered factors become missing cells."""
    records = list(records)
    ids = [r.respondent_id for r in records]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate respondent ids across records")
    col = {fid: i for i, fid in enumerate(catalog.ids)}
    cells = np.full((len(records), len(catalog)), -1, dtype=np.int64)
    for n, record in enumerate(records):
        for fid, score in record.answers.items():
            if fid not in col:
                raise ValidationError(
                    f"respondent {record.respondent_id!r} answers unknown factor {fid!r}"
                )
            cells[n, col[fid]] = code_delta(compute_delta(score, targets[fid]))
    matrix = CodedMatrix(ids, catalog.ids, cells)
    if not matrix.estimable():
        raise InsufficientDataError(
            "insufficient data: calibration needs at least 2 non-extreme persons "
            f"and 2 non-extreme items (extreme persons: {list(matrix.extreme_person_ids)}, "
            f"extreme items: {list(matrix.extreme_item_ids)})"
        )
    return matrix
