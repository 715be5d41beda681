"""Command-line surface: tabulate, decompose and report subcommands.

Exit codes: 0 success, 1 usage, 2 I/O, 3 data, 4 convergence. All outputs
are deterministic: identical inputs and configuration produce byte-identical
CSVs.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import ConvergenceError, DataError, DomainError, FormatError, PairshiftError
from .ingest import (
    DEFAULT_EDU_MAP,
    TabulationConfig,
    WavePanel,
    parse_microdata,
    read_edu_map,
    read_tables_csv,
    tabulate,
    write_tables_csv,
)
from .market import (
    AVAILABILITY,
    DEFAULT_LEVELS,
    PREFERENCE,
    CounterfactualConfig,
    HomogamyDecomposition,
    PathIndependent,
    Scheme,
    Sequential,
    Shapley,
    decompose_homogamy_change,
    long_horizon_decompose,
)

COMPONENTS = ("preference", "availability", "interaction", "total")

SCHEME_NAMES: dict[str, Scheme] = {
    "sequential-xy": Sequential((PREFERENCE, AVAILABILITY)),
    "sequential-yx": Sequential((AVAILABILITY, PREFERENCE)),
    "path-independent": PathIndependent(),
    "shapley": Shapley(),
}

RESULT_COLUMNS = ("country", "period", "scheme", "component", "value")

CONFIG_KEYS = {
    "input", "output", "scheme", "horizon", "age_min", "age_max", "edu_map",
    "ipf_tol", "ipf_max_iter", "zero_adjust", "strict", "countries", "waves",
    "figures",
}


class UsageError(PairshiftError):
    """Bad command line or config file; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def scheme_label(scheme: Scheme) -> str:
    for name, candidate in SCHEME_NAMES.items():
        if candidate == scheme:
            return name
    raise DomainError(f"unknown scheme: {scheme!r}")


def _fmt(value: float) -> str:
    return format(value, ".12g")


def read_config_file(path: str) -> dict[str, str]:
    """Read ``key = value`` lines; '#' starts a comment, blank lines skipped."""
    values: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path} line {number}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path} line {number}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _merged(args: argparse.Namespace, key: str, default, convert):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    config: dict[str, str] = getattr(args, "_config_values", {})
    if key in config:
        raw = config[key]
        try:
            return convert(raw)
        except ValueError:
            raise UsageError(f"config key {key}: bad value {raw!r}") from None
    return default


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(lowered)


def _parse_list(raw: str) -> tuple[str, ...]:
    return tuple(item.strip() for item in raw.split(",") if item.strip())


def _open_output(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="pairshift",
        description="Decompose changes in the share of educationally "
                    "homogamous couples into preference, availability and "
                    "interaction components.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--input", action="append", metavar="PATH",
                       help="input file (repeatable for report)")
        p.add_argument("--output", metavar="PATH",
                       help="output CSV path (default: stdout)")
        p.add_argument("--config", metavar="PATH",
                       help="key = value config file, overridden by flags")

    p_tab = sub.add_parser("tabulate",
                           help="microdata CSV to aggregated couple tables")
    add_common(p_tab)
    p_tab.add_argument("--age-min", dest="age_min", type=int, metavar="N")
    p_tab.add_argument("--age-max", dest="age_max", type=int, metavar="N")
    p_tab.add_argument("--edu-map", dest="edu_map", metavar="PATH",
                       help="code,level CSV collapsing raw education codes")
    p_tab.add_argument("--countries", type=_parse_list, metavar="A,B")
    p_tab.add_argument("--waves", type=_parse_list, metavar="Y1,Y2")
    p_tab.add_argument("--strict", action="store_true", default=None,
                       help="abort on malformed rows or unmapped codes")

    p_dec = sub.add_parser("decompose",
                           help="aggregated tables to per-period components")
    add_common(p_dec)
    p_dec.add_argument("--scheme", choices=sorted(SCHEME_NAMES),
                       help="sequential-xy switches preferences first, "
                            "sequential-yx availability first; "
                            "path-independent reports the joint effect "
                            "separately; shapley splits it evenly")
    p_dec.add_argument("--horizon", choices=("short", "long", "both"),
                       help="wave-pair rows, whole-period rows, or both")
    p_dec.add_argument("--ipf-tol", dest="ipf_tol", type=float, metavar="X")
    p_dec.add_argument("--ipf-max-iter", dest="ipf_max_iter", type=int, metavar="N")
    p_dec.add_argument("--zero-adjust", dest="zero_adjust", type=float, metavar="X")

    p_rep = sub.add_parser("report",
                           help="side-by-side scheme comparison of results")
    add_common(p_rep)
    p_rep.add_argument("--figures", metavar="DIR",
                       help="also render one component chart per country")
    return parser


def cmd_tabulate(args: argparse.Namespace) -> int:
    inputs = args.input or []
    if len(inputs) != 1:
        raise UsageError("tabulate needs exactly one --input")
    edu_map_path = _merged(args, "edu_map", None, str)
    if edu_map_path is not None:
        with open(edu_map_path, encoding="utf-8", newline="") as handle:
            edu_map, levels = read_edu_map(handle)
    else:
        edu_map, levels = dict(DEFAULT_EDU_MAP), DEFAULT_LEVELS
    raw_waves = _merged(args, "waves", None, _parse_list)
    try:
        waves = tuple(int(w) for w in raw_waves) if raw_waves else None
    except ValueError:
        raise UsageError(f"--waves must be integers, got {raw_waves}") from None
    config = TabulationConfig(
        age_min=_merged(args, "age_min", 30, int),
        age_max=_merged(args, "age_max", 34, int),
        edu_map=edu_map,
        levels=levels,
        countries=_merged(args, "countries", None, _parse_list),
        waves=waves,
        strict=_merged(args, "strict", False, _parse_bool),
    )
    with open(inputs[0], encoding="utf-8", newline="") as handle:
        parsed = parse_microdata(handle, config)
    panel = tabulate(parsed.records, config)

    stream, close = _open_output(_merged(args, "output", None, str))
    try:
        write_tables_csv(panel, stream)
    finally:
        if close:
            stream.close()

    summary = panel.summary
    print(
        f"records read={summary.records_in} tabulated={summary.tabulated} "
        f"filtered_age={summary.filtered_age} "
        f"filtered_country={summary.filtered_country} "
        f"filtered_wave={summary.filtered_wave} unmapped={summary.unmapped} "
        f"row_errors={len(parsed.row_errors)}",
        file=sys.stderr,
    )
    for line, message in parsed.row_errors:
        print(f"  line {line}: {message}", file=sys.stderr)
    for warning in parsed.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def decompose_panel(panel: WavePanel, scheme: Scheme, config: CounterfactualConfig,
                    horizon: str) -> list[tuple[str, str, HomogamyDecomposition]]:
    """Per-country consecutive-pair decompositions, plus long-horizon sums.

    Returns (country, period string, decomposition) triples; the long row is
    the component-wise sum of the short ones and is skipped under
    horizon="both" when only one pair exists, where it would duplicate it.
    """
    out: list[tuple[str, str, HomogamyDecomposition]] = []
    for country in panel.countries():
        waves = panel.waves(country)
        if len(waves) < 2:
            raise DataError(f"country {country!r} has fewer than 2 waves: {waves}")
        parts: list[HomogamyDecomposition] = []
        for wave_from, wave_to in zip(waves, waves[1:]):
            try:
                part = decompose_homogamy_change(
                    panel.entries[(country, wave_from)],
                    panel.entries[(country, wave_to)],
                    scheme, config, period=(wave_from, wave_to),
                )
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"{country} {wave_from}-{wave_to}: {exc}",
                    deviation=exc.deviation, iterations=exc.iterations,
                ) from exc
            parts.append(part)
        if horizon in ("short", "both"):
            out.extend(
                (country, f"{p.period[0]}-{p.period[1]}", p) for p in parts
            )
        if horizon == "long" or (horizon == "both" and len(parts) > 1):
            whole = long_horizon_decompose(parts)
            out.append((country, f"{whole.period[0]}-{whole.period[1]}", whole))
    return out


def cmd_decompose(args: argparse.Namespace) -> int:
    inputs = args.input or []
    if len(inputs) != 1:
        raise UsageError("decompose needs exactly one --input")
    scheme_name = _merged(args, "scheme", "path-independent", str)
    if scheme_name not in SCHEME_NAMES:
        raise UsageError(f"unknown scheme {scheme_name!r}")
    horizon = _merged(args, "horizon", "short", str)
    if horizon not in ("short", "long", "both"):
        raise UsageError(f"unknown horizon {horizon!r}")
    config = CounterfactualConfig(
        ipf_tol=_merged(args, "ipf_tol", 1e-10, float),
        ipf_max_iter=_merged(args, "ipf_max_iter", 10_000, int),
        zero_adjust=_merged(args, "zero_adjust", 0.5, float),
    )

    with open(inputs[0], encoding="utf-8", newline="") as handle:
        panel = read_tables_csv(handle)
    results = decompose_panel(panel, SCHEME_NAMES[scheme_name], config, horizon)

    adjusted = sum(
        1 for table in panel.entries.values() if (table.counts == 0).any()
    )
    rows = []
    for country, period, part in results:
        values = {
            "preference": part.preference,
            "availability": part.availability,
            "interaction": part.interaction,
            "total": part.total,
        }
        for component in COMPONENTS:
            rows.append((country, period, scheme_name, component,
                         _fmt(values[component])))
    rows.sort(key=lambda row: (row[0], row[1], row[3]))

    stream, close = _open_output(_merged(args, "output", None, str))
    try:
        stream.write("# association_model=odds_ratio_ipf\n")
        stream.write(f"# scheme={scheme_name}\n")
        stream.write(f"# horizon={horizon}\n")
        stream.write(f"# ipf_tol={config.ipf_tol:g}\n")
        stream.write(f"# ipf_max_iter={config.ipf_max_iter}\n")
        stream.write(f"# zero_adjust={config.zero_adjust:g}\n")
        stream.write(f"# zero_adjusted_tables={adjusted}\n")
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        writer.writerows(rows)
    finally:
        if close:
            stream.close()
    return 0


def _read_results(path: str) -> dict[str, dict[tuple[str, str, str], float]]:
    def data_lines(handle: IO[str]) -> Iterable[str]:
        for line in handle:
            if not line.startswith("#"):
                yield line

    by_scheme: dict[str, dict[tuple[str, str, str], float]] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(data_lines(handle))
        if reader.fieldnames is None:
            raise FormatError(f"{path}: empty results file")
        fields = [name.strip() for name in reader.fieldnames]
        missing = [col for col in RESULT_COLUMNS if col not in fields]
        if missing:
            raise FormatError(f"{path}: missing column(s): {', '.join(missing)}")
        for row in reader:
            try:
                scheme = (row.get("scheme") or "").strip()
                key = ((row.get("country") or "").strip(),
                       (row.get("period") or "").strip(),
                       (row.get("component") or "").strip())
                value = float((row.get("value") or "").strip())
            except ValueError as exc:
                raise DataError(f"{path} line {reader.line_num}: {exc}") from None
            if not scheme or not all(key):
                raise DataError(f"{path} line {reader.line_num}: incomplete row")
            if key in by_scheme.setdefault(scheme, {}):
                raise DataError(
                    f"{path} line {reader.line_num}: duplicate row for "
                    f"scheme {scheme!r}, {key}"
                )
            by_scheme[scheme][key] = value
    return by_scheme


def cmd_report(args: argparse.Namespace) -> int:
    inputs = args.input or []
    if not inputs:
        raise UsageError("report needs at least one --input")
    by_scheme: dict[str, dict[tuple[str, str, str], float]] = {}
    for path in inputs:
        for scheme, values in _read_results(path).items():
            bucket = by_scheme.setdefault(scheme, {})
            overlap = set(bucket) & set(values)
            if overlap:
                raise DataError(
                    f"scheme {scheme!r} appears twice for {sorted(overlap)[0]}"
                )
            bucket.update(values)

    schemes = sorted(by_scheme)
    key_sets = {scheme: set(values) for scheme, values in by_scheme.items()}
    reference = key_sets[schemes[0]]
    for scheme in schemes[1:]:
        if key_sets[scheme] != reference:
            extra = sorted(key_sets[scheme] ^ reference)
            raise DataError(
                f"schemes cover different (country, period, component) sets; "
                f"first mismatch: {extra[0]}"
            )

    zero = 1e-12
    rows = []
    for key in sorted(reference):
        values = [by_scheme[scheme][key] for scheme in schemes]
        gap = max(values) - min(values)
        signs = {1 if v > zero else -1 if v < -zero else 0 for v in values}
        disagree = 1 if (1 in signs and -1 in signs) else 0
        rows.append(list(key) + [_fmt(v) for v in values]
                    + [_fmt(gap), str(disagree)])

    stream, close = _open_output(_merged(args, "output", None, str))
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["country", "period", "component", *schemes,
                         "max_abs_gap", "sign_disagree"])
        writer.writerows(rows)
    finally:
        if close:
            stream.close()

    figures_dir = _merged(args, "figures", None, str)
    if figures_dir is not None:
        from .figures import render_report_figures

        written = render_report_figures(schemes, by_scheme, figures_dir)
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config_path = getattr(args, "config", None)
        args._config_values = read_config_file(config_path) if config_path else {}
        handler = {
            "tabulate": cmd_tabulate,
            "decompose": cmd_decompose,
            "report": cmd_report,
        }[args.command]
        return handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PairshiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))
