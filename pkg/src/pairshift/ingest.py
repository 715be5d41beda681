"""Couple-level microdata to per-(country, wave) contingency tables.

Two input formats are supported. Microdata CSV has one row per couple with
header ``country,wave_year,male_age,male_edu,female_edu[,weight]``; the
weight column is optional and defaults to 1.0. Aggregated-table CSV has one
row per occupied cell with header
``country,wave_year,male_edu,female_edu,count``. Both use UTF-8, commas and
a ``.`` decimal point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, DomainError, FormatError
from .market import DEFAULT_LEVELS, ContingencyTable

MICRODATA_COLUMNS = ("country", "wave_year", "male_age", "male_edu", "female_edu")
TABLE_COLUMNS = ("country", "wave_year", "male_edu", "female_edu", "count")

# Example collapsing map for three-level analyses; real studies supply their
# own via TabulationConfig or the CLI --edu-map flag.
DEFAULT_EDU_MAP = {
    "LTHS": "below-high-school",
    "HS": "high-school",
    "COL": "college-plus",
    "below-high-school": "below-high-school",
    "high-school": "high-school",
    "college-plus": "college-plus",
}


@dataclass(frozen=True)
class CoupleRecord:
    """One couple: country, wave, male partner's age, both education codes."""

    country: str
    wave_year: int
    male_age: int
    male_edu: str
    female_edu: str
    weight: float = 1.0

    def __post_init__(self):
        if not 1900 <= self.wave_year <= 2100:
            raise DataError(f"wave_year {self.wave_year} outside [1900, 2100]")
        if not 15 <= self.male_age <= 99:
            raise DataError(f"male_age {self.male_age} outside [15, 99]")
        if not self.weight >= 0:
            raise DataError(f"weight {self.weight} must be nonnegative")


@dataclass(frozen=True)
class TabulationConfig:
    """Sample filters and the education collapsing map."""

    age_min: int = 30
    age_max: int = 34
    edu_map: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_EDU_MAP))
    levels: tuple[str, ...] = DEFAULT_LEVELS
    countries: tuple[str, ...] | None = None
    waves: tuple[int, ...] | None = None
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "edu_map", dict(self.edu_map))
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.countries is not None:
            object.__setattr__(self, "countries", tuple(self.countries))
        if self.waves is not None:
            object.__setattr__(self, "waves", tuple(int(w) for w in self.waves))
        if self.age_min > self.age_max:
            raise DomainError(f"age_min {self.age_min} > age_max {self.age_max}")
        if len(self.levels) < 2 or len(set(self.levels)) != len(self.levels):
            raise DomainError(f"levels must be >= 2 unique labels, got {self.levels}")
        stray = set(self.edu_map.values()) - set(self.levels)
        if stray:
            raise DomainError(f"edu_map targets outside levels: {sorted(stray)}")


@dataclass(frozen=True)
class TabulationSummary:
    """Bookkeeping for one tabulation pass; filtered records are not errors."""

    records_in: int = 0
    tabulated: int = 0
    filtered_age: int = 0
    filtered_country: int = 0
    filtered_wave: int = 0
    unmapped: int = 0


@dataclass(frozen=True)
class WavePanel:
    """Per-(country, wave) tables sharing one level list, waves ascending."""

    entries: dict[tuple[str, int], ContingencyTable]
    config: TabulationConfig | None = None
    summary: TabulationSummary | None = None

    def __post_init__(self):
        ordered = dict(sorted(self.entries.items()))
        level_sets = {table.levels for table in ordered.values()}
        if len(level_sets) > 1:
            raise DomainError(f"tables use mixed level lists: {sorted(level_sets)}")
        object.__setattr__(self, "entries", ordered)

    def countries(self) -> list[str]:
        return sorted({country for country, _ in self.entries})

    def waves(self, country: str) -> list[int]:
        return [w for c, w in self.entries if c == country]


@dataclass(frozen=True)
class ParseResult:
    """Parsed records plus per-row problems collected in permissive mode."""

    records: list[CoupleRecord]
    row_errors: list[tuple[int, str]]
    warnings: list[str]


def parse_microdata(stream: IO[str], config: TabulationConfig) -> ParseResult:
    """Read microdata CSV into couple records.

    Malformed rows are collected with their line numbers; under
    ``config.strict`` the first one aborts with a DataError. A missing or
    wrong header is always a FormatError.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise FormatError("input is empty, expected a microdata header")
    fields = [name.strip() for name in reader.fieldnames]
    missing = [col for col in MICRODATA_COLUMNS if col not in fields]
    if missing:
        raise FormatError(f"missing required column(s): {', '.join(missing)}")
    extra = [col for col in fields if col not in MICRODATA_COLUMNS + ("weight",)]
    if extra:
        raise FormatError(f"unexpected column(s): {', '.join(extra)}")
    has_weight = "weight" in fields

    records: list[CoupleRecord] = []
    row_errors: list[tuple[int, str]] = []
    warnings: list[str] = []
    for row in reader:
        line = reader.line_num
        try:
            records.append(_parse_row(row, has_weight))
        except DataError as exc:
            if config.strict:
                raise DataError(f"line {line}: {exc}") from exc
            row_errors.append((line, str(exc)))
    if not records and not row_errors:
        warnings.append("no data rows found")
    return ParseResult(records, row_errors, warnings)


def _parse_row(row: Mapping[str, str | None], has_weight: bool) -> CoupleRecord:
    def num(column: str, kind):
        raw = row.get(column)
        if raw is None or raw.strip() == "":
            raise DataError(f"missing value for {column}")
        try:
            return kind(raw.strip())
        except ValueError:
            raise DataError(f"non-numeric {column}: {raw.strip()!r}") from None

    def text(column: str) -> str:
        raw = row.get(column)
        if raw is None or raw.strip() == "":
            raise DataError(f"missing value for {column}")
        return raw.strip()

    weight = 1.0
    if has_weight:
        raw_weight = row.get("weight")
        if raw_weight is not None and raw_weight.strip() != "":
            weight = num("weight", float)
    return CoupleRecord(
        country=text("country"),
        wave_year=num("wave_year", int),
        male_age=num("male_age", int),
        male_edu=text("male_edu"),
        female_edu=text("female_edu"),
        weight=weight,
    )


def tabulate(records: Iterable[CoupleRecord], config: TabulationConfig) -> WavePanel:
    """Fold records into per-(country, wave) tables, applying the sample filters.

    Only the male partner's age filters the sample; each passing record adds
    its weight to the cell given by the collapsed education codes. Unmapped
    codes raise under ``config.strict`` and are counted otherwise. Groups
    that end up with zero total weight are dropped.
    """
    index = {label: i for i, label in enumerate(config.levels)}
    k = len(config.levels)
    cells: dict[tuple[str, int], np.ndarray] = {}
    records_in = tabulated = by_age = by_country = by_wave = unmapped = 0
    for record in records:
        records_in += 1
        if not config.age_min <= record.male_age <= config.age_max:
            by_age += 1
            continue
        if config.countries is not None and record.country not in config.countries:
            by_country += 1
            continue
        if config.waves is not None and record.wave_year not in config.waves:
            by_wave += 1
            continue
        male_level = config.edu_map.get(record.male_edu)
        female_level = config.edu_map.get(record.female_edu)
        if male_level is None or female_level is None:
            bad = record.male_edu if male_level is None else record.female_edu
            if config.strict:
                raise DataError(f"unmapped education code: {bad!r}")
            unmapped += 1
            continue
        key = (record.country, record.wave_year)
        if key not in cells:
            cells[key] = np.zeros((k, k))
        cells[key][index[male_level], index[female_level]] += record.weight
        tabulated += 1
    entries = {
        key: ContingencyTable(config.levels, counts)
        for key, counts in cells.items()
        if counts.sum() > 0
    }
    summary = TabulationSummary(records_in, tabulated, by_age, by_country,
                                by_wave, unmapped)
    return WavePanel(entries, config, summary)


def write_tables_csv(panel: WavePanel, stream: IO[str]) -> None:
    """Write a panel as aggregated-table CSV, one row per occupied cell."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TABLE_COLUMNS)
    for (country, wave), table in sorted(panel.entries.items()):
        for i, male_level in enumerate(table.levels):
            for j, female_level in enumerate(table.levels):
                count = table.counts[i, j]
                if count != 0:
                    writer.writerow([country, wave, male_level, female_level,
                                     repr(float(count))])


def read_tables_csv(stream: IO[str],
                    levels: Sequence[str] | None = None) -> WavePanel:
    """Read aggregated-table CSV back into a panel.

    Level order is taken from `levels` when given, otherwise the sorted set
    of labels appearing in the file. Repeated cells accumulate.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise FormatError("input is empty, expected an aggregated-table header")
    fields = [name.strip() for name in reader.fieldnames]
    missing = [col for col in TABLE_COLUMNS if col not in fields]
    if missing:
        raise FormatError(f"missing required column(s): {', '.join(missing)}")

    raw: list[tuple[str, int, str, str, float]] = []
    seen_labels: set[str] = set()
    for row in reader:
        line = reader.line_num
        try:
            country = (row.get("country") or "").strip()
            wave = int((row.get("wave_year") or "").strip())
            male_level = (row.get("male_edu") or "").strip()
            female_level = (row.get("female_edu") or "").strip()
            count = float((row.get("count") or "").strip())
        except ValueError as exc:
            raise DataError(f"line {line}: {exc}") from None
        if not country or not male_level or not female_level:
            raise DataError(f"line {line}: empty country or education label")
        if count < 0:
            raise DataError(f"line {line}: negative count {count!r}")
        raw.append((country, wave, male_level, female_level, count))
        seen_labels.update((male_level, female_level))

    if levels is None:
        levels = tuple(sorted(seen_labels))
    else:
        levels = tuple(levels)
        stray = seen_labels - set(levels)
        if stray:
            raise DataError(f"labels outside the configured levels: {sorted(stray)}")
    if len(levels) < 2:
        raise DataError(f"need at least 2 education levels, found {levels}")

    index = {label: i for i, label in enumerate(levels)}
    k = len(levels)
    cells: dict[tuple[str, int], np.ndarray] = {}
    for country, wave, male_level, female_level, count in raw:
        key = (country, wave)
        if key not in cells:
            cells[key] = np.zeros((k, k))
        cells[key][index[male_level], index[female_level]] += count
    entries = {key: ContingencyTable(levels, counts)
               for key, counts in cells.items() if counts.sum() > 0}
    return WavePanel(entries)


def read_edu_map(stream: IO[str]) -> tuple[dict[str, str], tuple[str, ...]]:
    """Read a ``code,level`` CSV; level order follows first appearance."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None or \
            [f.strip() for f in reader.fieldnames] != ["code", "level"]:
        raise FormatError("education map needs the header: code,level")
    mapping: dict[str, str] = {}
    levels: list[str] = []
    for row in reader:
        code = (row.get("code") or "").strip()
        level = (row.get("level") or "").strip()
        if not code or not level:
            raise DataError(f"line {reader.line_num}: empty code or level")
        if code in mapping:
            raise DataError(f"duplicate education code: {code!r}")
        mapping[code] = level
        if level not in levels:
            levels.append(level)
    if len(levels) < 2:
        raise DataError("education map must define at least 2 levels")
    return mapping, tuple(levels)
