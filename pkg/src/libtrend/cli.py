"""``libtrend`` command line: scan, analyze, purge, validate.

``scan`` is the expensive phase (parse + hash) and persists its result as
``versions.json``; ``analyze`` and ``purge`` reuse that file when present
so the analytics can be re-run cheaply.  All data outputs are a pure
function of corpus bytes and config: fixed schemas, LF endings, no
timestamps, written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import catalog as catalog_mod
from . import corpus as corpus_mod
from . import permissions as perm_mod
from . import series as series_mod
from .catalog import Catalog, LibraryInstance
from .errors import DsmSyntaxError, DuplicateField, LibtrendError, MissingFile
from .dsm import parse_class_file
from .hashing import VersionGroup, VersionKey, canonicalize, fingerprint, group_versions
from .permissions import DANGEROUS, PermissionMap
from .series import LibraryShare

VERSIONS_FILENAME = "versions.json"


@dataclass
class RunConfig:
    corpus_root: Path | None = None
    catalog_path: Path | None = None
    permission_map_path: Path | None = None
    danger_config: frozenset[str] = field(default_factory=frozenset)
    equivalence_classes: list[frozenset[str]] = field(default_factory=list)
    state_mode: str = series_mod.RELEASED_IN_MONTH
    min_libraries: int = 5
    output_dir: Path = Path("out")
    strict: bool = False
    figures: bool = True
    emit_canonical: Path | None = None
    stats_table: Path | None = None
    versions_path: Path | None = None

    def load_catalog(self) -> Catalog:
        if self.catalog_path is not None:
            return catalog_mod.load_catalog_file(self.catalog_path)
        return catalog_mod.load_default_catalog()

    def load_permission_map(self) -> PermissionMap:
        if self.permission_map_path is not None:
            return perm_mod.load_permission_map_file(self.permission_map_path)
        data = resources.files("libtrend").joinpath("data/permission_map_core.tsv")
        return perm_mod.load_permission_map(data.read_bytes())


def load_run_config(path: Path) -> RunConfig:
    obj = json.loads(path.read_text("utf-8"))
    cfg = RunConfig()
    paths = {
        "corpus_root": "corpus_root",
        "catalog_path": "catalog_path",
        "permission_map_path": "permission_map_path",
        "output_dir": "output_dir",
        "stats_table": "stats_table",
    }
    for key, attr in paths.items():
        if obj.get(key) is not None:
            setattr(cfg, attr, Path(obj[key]))
    if "danger_config" in obj:
        cfg.danger_config = frozenset(obj["danger_config"])
    if "equivalence_classes" in obj:
        cfg.equivalence_classes = [frozenset(c) for c in obj["equivalence_classes"]]
    if "state_mode" in obj:
        if obj["state_mode"] not in series_mod.STATE_MODES:
            raise LibtrendError(f"unknown state_mode {obj['state_mode']!r} in {path}")
        cfg.state_mode = obj["state_mode"]
    if "min_libraries" in obj:
        cfg.min_libraries = int(obj["min_libraries"])
        if cfg.min_libraries < 1:
            raise LibtrendError(f"min_libraries must be >= 1 in {path}")
    if "strict" in obj:
        cfg.strict = bool(obj["strict"])
    if "figures" in obj:
        cfg.figures = bool(obj["figures"])
    return cfg


def _write_atomic(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(data)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _fraction(value: float) -> str:
    return f"{value:.6f}"


# ---------------------------------------------------------------------------
# scan


def _collect_instances(
    config: RunConfig, index: corpus_mod.CorpusIndex, cat: Catalog
) -> tuple[list[LibraryInstance], list[str]]:
    instances: list[LibraryInstance] = []
    diagnostics: list[str] = []
    for app_id in sorted(index.apps):
        units = []
        for source in index.class_sources[app_id]:
            try:
                units.append(parse_class_file(source.read_bytes()))
            except DsmSyntaxError as exc:
                if config.strict:
                    raise DsmSyntaxError(exc.line, f"{source}: {exc.hint}") from exc
                diagnostics.append(f"skipping {source}: {exc}")
            except DuplicateField as exc:
                if config.strict:
                    raise DuplicateField(f"{source}: {exc}") from exc
                diagnostics.append(f"skipping {source}: {exc}")
        instances.extend(catalog_mod.extract_instances(app_id, units, cat))
    return instances, diagnostics


def versions_to_json(groups: list[VersionGroup]) -> str:
    records = [
        {
            "key": g.key.serialized(),
            "library_id": g.key.library_id,
            "content_hash": g.key.content_hash,
            "member_apps": sorted(g.member_apps),
            "api_calls": sorted(g.api_calls),
        }
        for g in sorted(groups, key=lambda g: g.key)
    ]
    return json.dumps({"versions": records}, indent=2, sort_keys=True) + "\n"


def groups_from_json(text: str) -> list[VersionGroup]:
    obj = json.loads(text)
    out = []
    for record in obj["versions"]:
        out.append(
            VersionGroup(
                key=VersionKey(record["library_id"], record["content_hash"]),
                member_apps=frozenset(record["member_apps"]),
                api_calls=frozenset(record["api_calls"]),
            )
        )
    return out


def cmd_scan(config: RunConfig) -> int:
    if config.corpus_root is None:
        raise MissingFile("scan requires --corpus")
    index = corpus_mod.load_corpus(config.corpus_root, strict=config.strict)
    cat = config.load_catalog()
    instances, diagnostics = _collect_instances(config, index, cat)
    for line in (*index.diagnostics, *diagnostics):
        print(line, file=sys.stderr)
    groups = group_versions(instances)
    _write_atomic(config.output_dir / VERSIONS_FILENAME, versions_to_json(groups))
    if config.emit_canonical is not None:
        config.emit_canonical.mkdir(parents=True, exist_ok=True)
        emitted = set()
        for instance in instances:
            key = fingerprint(instance)
            if key not in emitted:
                (config.emit_canonical / key.serialized()).write_bytes(canonicalize(instance))
                emitted.add(key)
    print(
        f"scanned {len(index.apps)} apps: {len(instances)} library instances, "
        f"{len(groups)} versions",
        file=sys.stderr,
    )
    return 0


# ---------------------------------------------------------------------------
# analyze


def _apps_by_library(groups: list[VersionGroup]) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {}
    for group in groups:
        out.setdefault(group.key.library_id, set()).update(group.member_apps)
    return out


def _shares_from_groups(
    groups: list[VersionGroup], index: corpus_mod.CorpusIndex
) -> list[LibraryShare]:
    apps_of = _apps_by_library(groups)
    totals = {}
    for library_id, apps in apps_of.items():
        totals[library_id] = sum(index.apps[a].installs_floor for a in apps)
    return series_mod.shares_from_totals(
        {lib: len(apps) for lib, apps in apps_of.items()}, totals
    )


def _load_groups(config: RunConfig) -> tuple[list[VersionGroup], corpus_mod.CorpusIndex]:
    """Reuse a scan product when one exists, otherwise scan in-process."""
    if config.corpus_root is None:
        raise MissingFile("this command requires --corpus")
    index = corpus_mod.load_corpus(config.corpus_root, strict=config.strict)
    versions_path = config.versions_path or (config.output_dir / VERSIONS_FILENAME)
    if versions_path.is_file():
        return groups_from_json(versions_path.read_text("utf-8")), index
    cat = config.load_catalog()
    instances, diagnostics = _collect_instances(config, index, cat)
    for line in (*index.diagnostics, *diagnostics):
        print(line, file=sys.stderr)
    return group_versions(instances), index


def _market_share_csv(shares: list[LibraryShare], names: dict[str, str]) -> str:
    rows = [
        [
            s.library_id,
            names.get(s.library_id, s.library_id),
            str(s.app_count),
            str(s.install_floor_total),
            _fraction(s.share),
        ]
        for s in shares
    ]
    rows.append(
        [
            "TOTAL",
            "TOTALS",
            str(sum(s.app_count for s in shares)),
            str(sum(s.install_floor_total for s in shares)),
            _fraction(sum(s.share for s in shares)),
        ]
    )
    return _csv_text(
        ["library_id", "display_name", "app_count", "installs_floor_total", "share"], rows
    )


def load_stats_table(path: Path) -> tuple[dict[str, str], dict[str, int], dict[str, int]]:
    """Read a published-style totals table: id, name, app count, installs."""
    if not path.is_file():
        raise MissingFile(f"stats table {path} does not exist")
    names: dict[str, str] = {}
    app_counts: dict[str, int] = {}
    installs: dict[str, int] = {}
    for number, raw in enumerate(path.read_text("utf-8").split("\n"), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 4:
            raise LibtrendError(f"stats table line {number}: expected 4 columns")
        library_id, name, apps, installs_text = (c.strip() for c in columns)
        names[library_id] = name
        app_counts[library_id] = int(apps.replace(",", ""))
        installs[library_id] = int(installs_text.replace(",", ""))
    return names, app_counts, installs


def _analyze_replay(config: RunConfig) -> int:
    names, app_counts, installs = load_stats_table(config.stats_table)
    shares = series_mod.shares_from_totals(app_counts, installs)
    _write_atomic(config.output_dir / "market_share.csv", _market_share_csv(shares, names))
    if config.figures:
        from . import plots

        plots.render_market_share(shares, names, config.output_dir / "fig_market_share.png")
    return 0


def cmd_analyze(config: RunConfig) -> int:
    if config.stats_table is not None:
        return _analyze_replay(config)
    groups, index = _load_groups(config)
    cat = config.load_catalog()
    pmap = config.load_permission_map()
    dangerous = config.danger_config or perm_mod.default_danger_config()
    equiv = config.equivalence_classes or perm_mod.default_equivalence_classes()

    caps = {g.key: perm_mod.capability_set(set(g.api_calls), pmap) for g in groups}
    unmapped = set()
    for g in groups:
        unmapped |= perm_mod.unmapped_calls(set(g.api_calls), pmap)
    if unmapped:
        print(f"{len(unmapped)} API calls not in the permission map", file=sys.stderr)

    dated = series_mod.date_versions(groups, index)
    states = series_mod.monthly_states(dated, caps, config.state_mode)
    shares = _shares_from_groups(groups, index)
    names = {e.library_id: e.display_name for e in cat.entries}

    metrics = sorted({p for state in states for p in state.permissions})
    metrics.append(DANGEROUS)
    count_table: dict[str, list[series_mod.SeriesPoint]] = {}
    percent_table: dict[str, list[series_mod.SeriesPoint]] = {}
    weighted_table: dict[str, list[series_mod.SeriesPoint]] = {}
    for metric in metrics:
        counts, fractions = series_mod.permission_series(
            states, metric, config.min_libraries, dangerous
        )
        count_table[metric] = counts
        percent_table[metric] = fractions
        weighted_table[metric] = series_mod.weighted_series(
            states, shares, metric, config.min_libraries, dangerous
        )

    def as_rows(table: dict[str, list[series_mod.SeriesPoint]], counts: bool) -> list[list[str]]:
        rows = [
            [p.month, p.metric, str(int(p.value)) if counts else _fraction(p.value),
             str(p.denominator)]
            for points in table.values()
            for p in points
        ]
        # month-major ordering, metrics alphabetical with DANGEROUS last
        order = {m: i for i, m in enumerate(metrics)}
        rows.sort(key=lambda r: (r[0], order[r[1]]))
        return rows

    count_rows = as_rows(count_table, counts=True)
    percent_rows = as_rows(percent_table, counts=False)
    weighted_rows = as_rows(weighted_table, counts=False)

    out = config.output_dir
    _write_atomic(
        out / "series_counts.csv",
        _csv_text(["month", "metric", "count", "denominator"], count_rows),
    )
    _write_atomic(
        out / "series_percent.csv",
        _csv_text(["month", "metric", "fraction", "denominator"], percent_rows),
    )
    _write_atomic(
        out / "series_weighted.csv",
        _csv_text(["month", "metric", "fraction", "denominator"], weighted_rows),
    )
    _write_atomic(out / "market_share.csv", _market_share_csv(shares, names))

    cap_rows = []
    for version in dated:
        vcaps = caps[version.key]
        cap_rows.append(
            [
                version.key.library_id,
                version.key.content_hash,
                version.date.isoformat(),
                str(version.supporting_apps),
                str(perm_mod.permission_count(vcaps, equiv)),
                "|".join(sorted(vcaps)),
            ]
        )
    _write_atomic(
        out / "capabilities.csv",
        _csv_text(
            [
                "library_id",
                "version_hash",
                "date",
                "supporting_apps",
                "permission_count",
                "permissions",
            ],
            cap_rows,
        ),
    )

    if config.figures:
        from . import plots

        plots.render_series(
            count_table,
            "Libraries able to use permission",
            "libraries",
            out / "fig_series_counts.png",
        )
        plots.render_series(
            percent_table,
            "Percent of libraries able to use permission",
            "% of libraries",
            out / "fig_series_percent.png",
            percent=True,
        )
        plots.render_series(
            weighted_table,
            "Percent of library installs able to use permission",
            "% of installs",
            out / "fig_series_weighted.png",
            percent=True,
        )
        plots.render_market_share(shares, names, out / "fig_market_share.png")
    return 0


# ---------------------------------------------------------------------------
# purge


def cmd_purge(config: RunConfig, missing_list_path: Path) -> int:
    if not missing_list_path.is_file():
        raise MissingFile(f"missing-app list {missing_list_path} does not exist")
    missing_ids = {
        line.strip()
        for line in missing_list_path.read_text("utf-8").split("\n")
        if line.strip() and not line.lstrip().startswith("#")
    }
    groups, index = _load_groups(config)
    report = series_mod.purge_from_app_sets(_apps_by_library(groups), index, missing_ids)
    for app_id in report.unknown_ids:
        print(f"missing-app id not in corpus: {app_id}", file=sys.stderr)
    rows = [
        [r.library_id, str(r.missing), str(r.original), _fraction(r.removed_fraction)]
        for r in report.rows
    ]
    rows.append(
        [
            "OVERALL_APPS",
            str(report.overall_missing),
            str(report.overall_total),
            _fraction(report.overall_fraction),
        ]
    )
    rows.append(["OVERALL_MEAN", "", "", _fraction(report.mean_fraction)])
    _write_atomic(
        config.output_dir / "purge_table.csv",
        _csv_text(["library_id", "missing", "original", "removed_fraction"], rows),
    )
    if config.figures:
        from . import plots

        cat = config.load_catalog()
        names = {e.library_id: e.display_name for e in cat.entries}
        plots.render_purge(report, names, config.output_dir / "fig_purge.png")
    return 0


# ---------------------------------------------------------------------------
# validate


def cmd_validate(config: RunConfig) -> int:
    if config.corpus_root is None:
        raise MissingFile("validate requires --corpus")
    index = corpus_mod.load_corpus(config.corpus_root, strict=config.strict)
    report = corpus_mod.validate_corpus(index)
    for line in report.lines():
        print(line)
    if report.is_clean:
        print("corpus clean")
        return 0
    return 1


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="libtrend",
        description="Longitudinal permission-usage analysis of embedded ad libraries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="JSON run config; flags override it")
        p.add_argument("--corpus", type=Path, help="corpus root directory")
        p.add_argument("--catalog", type=Path, help="catalog TSV (default: bundled)")
        p.add_argument("--perm-map", type=Path, help="permission map TSV (default: bundled)")
        p.add_argument(
            "--state-mode",
            choices=series_mod.STATE_MODES,
            help="monthly state semantics (default: released-in-month)",
        )
        p.add_argument("--min-libraries", type=int, help="fraction-series threshold (default 5)")
        p.add_argument("--strict", action="store_true", help="abort on the first bundle error")
        p.add_argument("--out", type=Path, help="output directory (default ./out)")
        p.add_argument(
            "--figures",
            action=argparse.BooleanOptionalAction,
            default=None,
            help="render PNG figures next to the CSV outputs (default on)",
        )

    p_scan = sub.add_parser("scan", help="parse, match and hash the corpus")
    common(p_scan)
    p_scan.add_argument(
        "--emit-canonical", type=Path, help="debug-dump canonical streams into this directory"
    )

    p_analyze = sub.add_parser("analyze", help="emit series and market-share tables")
    common(p_analyze)
    p_analyze.add_argument(
        "--versions", type=Path, help="versions.json from a previous scan (default: <out>/)"
    )
    p_analyze.add_argument(
        "--stats-table",
        type=Path,
        help="metadata-only replay from a published totals table (skips the corpus)",
    )

    p_purge = sub.add_parser("purge", help="correlate removed apps with their libraries")
    common(p_purge)
    p_purge.add_argument("missing_list", type=Path, help="file with one removed app_id per line")
    p_purge.add_argument(
        "--versions", type=Path, help="versions.json from a previous scan (default: <out>/)"
    )

    p_validate = sub.add_parser("validate", help="report corpus hygiene problems")
    common(p_validate)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    if args.corpus is not None:
        cfg.corpus_root = args.corpus
    if args.catalog is not None:
        cfg.catalog_path = args.catalog
    if args.perm_map is not None:
        cfg.permission_map_path = args.perm_map
    if args.state_mode is not None:
        cfg.state_mode = args.state_mode
    if args.min_libraries is not None:
        if args.min_libraries < 1:
            raise LibtrendError("--min-libraries must be >= 1")
        cfg.min_libraries = args.min_libraries
    if args.strict:
        cfg.strict = True
    if args.out is not None:
        cfg.output_dir = args.out
    if args.figures is not None:
        cfg.figures = args.figures
    if getattr(args, "emit_canonical", None) is not None:
        cfg.emit_canonical = args.emit_canonical
    if getattr(args, "stats_table", None) is not None:
        cfg.stats_table = args.stats_table
    if getattr(args, "versions", None) is not None:
        cfg.versions_path = args.versions
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "scan":
            return cmd_scan(config)
        if args.command == "analyze":
            return cmd_analyze(config)
        if args.command == "purge":
            return cmd_purge(config, args.missing_list)
        if args.command == "validate":
            return cmd_validate(config)
        raise AssertionError(args.command)
    except (LibtrendError, OSError) as exc:
        print(f"libtrend: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
