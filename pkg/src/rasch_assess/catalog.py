"""Success-factor item bank: factor identities, groups, and catalog CSV I/O."""

from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass

from .errors import ValidationError

__all__ = [
    "FactorGroup",
    "SuccessFactor",
    "FactorCatalog",
    "slugify",
    "default_catalog",
    "load_catalog",
    "serialize_catalog",
]


class FactorGroup(enum.Enum):
    """The six organizational areas a success factor belongs to."""

    CUSTOMER = "Customer"
    MANAGEMENT = "Management"
    ORGANIZATION = "Organization"
    PROCESS = "Process"
    TEAM = "Team"
    TOOLS = "Tools"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "FactorGroup":
        try:
            return cls(text.strip().capitalize())
        except ValueError:
            valid = ", ".join(g.value for g in cls)
            raise ValidationError(f"unknown group {text!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class SuccessFactor:
    id: str
    name: str
    group: FactorGroup

    def __post_init__(self):
        if not self.id:
            raise ValidationError("factor id must be non-empty")
        if not self.name:
            raise ValidationError("factor name must be non-empty")


class FactorCatalog:
    """Ordered, immutable collection of success factors with unique ids."""

    def __init__(self, factors):
        factors = tuple(factors)
        seen = set()
        for f in factors:
            if f.id in seen:
                raise ValidationError(f"duplicate factor id {f.id!r}")
            seen.add(f.id)
        self._factors = factors
        self._by_id = {f.id: f for f in factors}

    def __iter__(self):
        return iter(self._factors)

    def __len__(self) -> int:
        return len(self._factors)

    def __contains__(self, factor_id: str) -> bool:
        return factor_id in self._by_id

    def __eq__(self, other) -> bool:
        return isinstance(other, FactorCatalog) and self._factors == other._factors

    def __getitem__(self, factor_id: str) -> SuccessFactor:
        try:
            return self._by_id[factor_id]
        except KeyError:
            raise KeyError(f"factor id {factor_id!r} not in catalog") from None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(f.id for f in self._factors)


def slugify(name: str) -> str:
    """Derive a stable machine id from a factor name: lowercase with runs of
    non-alphanumerics collapsed to single hyphens."""
    return re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")


# (group, name) pairs for the built-in assessment, hardest first. The long
# management-style name is kept verbatim so report rows match the published
# wording.
_DEFAULT_FACTORS = (
    (FactorGroup.PROCESS, "Measurement model"),
    (FactorGroup.ORGANIZATION, "Training"),
    (FactorGroup.ORGANIZATION, "Agile champions"),
    (FactorGroup.ORGANIZATION, "New mindset/roles"),
    (FactorGroup.MANAGEMENT, "Changes in management style and decentralized decision making"),
    (FactorGroup.TEAM, "Distributed teams"),
    (FactorGroup.ORGANIZATION, "Knowledge sharing"),
    (FactorGroup.TEAM, "Technical activities/skills"),
    (FactorGroup.ORGANIZATION, "Business goals"),
    (FactorGroup.PROCESS, "Lightweight documentation"),
    (FactorGroup.PROCESS, "Process is compatible with the organizational context"),
    (FactorGroup.TEAM, "Ability to build trustworthy relationships"),
    (FactorGroup.TEAM, "Team involvement"),
    (FactorGroup.ORGANIZATION, "Incentives/motivation to adopt agile methods"),
    (FactorGroup.ORGANIZATION, "Communication flow in the organization"),
    (FactorGroup.MANAGEMENT, "Management buy-in"),
    (FactorGroup.ORGANIZATION, "Coaching/mentoring"),
    (FactorGroup.TEAM, "Collaboration"),
    (FactorGroup.TOOLS, "Tool set"),
    (FactorGroup.ORGANIZATION, "Cultural changes"),
    (FactorGroup.MANAGEMENT, "Changes in mind set of project managers"),
    (FactorGroup.TEAM, "Self-organized teams"),
    (FactorGroup.CUSTOMER, "Customer involvement"),
)


def default_catalog() -> FactorCatalog:
    """The built-in 23-factor assessment catalog."""
    return FactorCatalog(
        SuccessFactor(id=slugify(name), name=name, group=group)
        for group, name in _DEFAULT_FACTORS
    )


_HEADER = ["id", "group", "name"]


def load_catalog(source: str) -> FactorCatalog:
    """Parse catalog CSV text (header ``id,group,name``)."""
    reader = csv.reader(io.StringIO(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ValidationError("catalog CSV is empty") from None
    if header != _HEADER:
        raise ValidationError(f"catalog header must be {','.join(_HEADER)!r}, got {','.join(header)!r}")

    factors = []
    seen = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != 3:
            raise ValidationError(f"line {line}: expected 3 fields, got {len(row)}")
        fid, group_text, name = (field.strip() for field in row)
        if not fid or not group_text or not name:
            raise ValidationError(f"line {line}: blank field")
        if fid in seen:
            raise ValidationError(f"line {line}: duplicate factor id {fid!r} (first seen on line {seen[fid]})")
        seen[fid] = line
        try:
            group = FactorGroup.parse(group_text)
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        factors.append(SuccessFactor(id=fid, name=name, group=group))
    return FactorCatalog(factors)


def serialize_catalog(catalog: FactorCatalog) -> str:
    """Render a catalog as CSV text; inverse of :func:`load_catalog`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_HEADER)
    for f in catalog:
        writer.writerow([f.id, f.group.value, f.name])
    return buf.getvalue()
