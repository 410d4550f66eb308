"""On-disk corpus format: a root directory of per-app bundles.

Each bundle is one directory holding ``meta.json`` plus disassembled class
files under ``classes/**/*.dsm``.  Loading is lenient by default: bundles
that fail to parse are collected as diagnostics instead of aborting the
whole run.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from .errors import BadInstallBound, EmptyCorpus, MalformedMeta, MalformedRange

# Android Market opened late 2008; anything older is a metadata glitch.
EARLIEST_PLAUSIBLE_DATE = date(2008, 9, 1)

_RANGE_RE = re.compile(r"^\s*([0-9][0-9,]*)\s*(?:--|–|-)\s*([0-9][0-9,]*)\s*$")


@dataclass(frozen=True)
class AppMeta:
    """Identity and store metadata for one app."""

    app_id: str
    release_date: date
    installs_floor: int
    installs_ceiling: int | None = None
    removed: bool = False
    title: str | None = None


@dataclass(frozen=True)
class CorpusIndex:
    """Immutable index over all loadable bundles of a corpus root.

    ``diagnostics`` records bundles that were skipped in lenient mode and
    app ids that appeared more than once (first occurrence wins).
    """

    apps: dict[str, AppMeta]
    class_sources: dict[str, tuple[Path, ...]]
    diagnostics: tuple[str, ...] = ()
    duplicate_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class ValidationReport:
    duplicate_ids: tuple[str, ...]
    zero_class_apps: tuple[str, ...]
    date_outliers: tuple[str, ...]

    @property
    def is_clean(self) -> bool:
        return not (self.duplicate_ids or self.zero_class_apps or self.date_outliers)

    def lines(self) -> list[str]:
        out = []
        for app_id in self.duplicate_ids:
            out.append(f"duplicate-id: {app_id}")
        for app_id in self.zero_class_apps:
            out.append(f"zero-classes: {app_id}")
        for entry in self.date_outliers:
            out.append(f"date-outlier: {entry}")
        return out


def parse_install_range(text: str) -> tuple[int, int]:
    """Parse a store install bucket like ``"1,000 - 5,000"`` to (floor, ceiling).

    The floor is always the numerically smaller endpoint; downstream install
    accounting uses it as the conservative estimate.
    """
    m = _RANGE_RE.match(text)
    if m is None:
        raise MalformedRange(f"not an install range: {text!r}")
    a = int(m.group(1).replace(",", ""))
    b = int(m.group(2).replace(",", ""))
    return (min(a, b), max(a, b))


def _require_int(obj: dict, key: str) -> int:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedMeta(f"{key} must be an integer, got {value!r}")
    if value < 0:
        raise MalformedMeta(f"{key} must be non-negative, got {value}")
    return value


def parse_app_meta(text: str | bytes) -> AppMeta:
    """Parse one ``meta.json`` document into an AppMeta."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedMeta(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedMeta("metadata must be a JSON object")

    try:
        app_id = obj["app_id"]
        raw_date = obj["release_date"]
    except KeyError as exc:
        raise MalformedMeta(f"missing required key {exc.args[0]!r}") from exc
    if not isinstance(app_id, str) or not app_id:
        raise MalformedMeta("app_id must be a nonempty string")
    if not isinstance(raw_date, str):
        raise MalformedMeta("release_date must be a string")
    try:
        release = date.fromisoformat(raw_date)
    except ValueError as exc:
        raise MalformedMeta(f"release_date not ISO-8601: {raw_date!r}") from exc

    ceiling = None
    if "installs_floor" in obj:
        floor = _require_int(obj, "installs_floor")
        if "installs_ceiling" in obj and obj["installs_ceiling"] is not None:
            ceiling = _require_int(obj, "installs_ceiling")
    elif "installs_range" in obj:
        if not isinstance(obj["installs_range"], str):
            raise MalformedMeta("installs_range must be a string")
        floor, ceiling = parse_install_range(obj["installs_range"])
    else:
        raise MalformedMeta("missing required key 'installs_floor'")
    if ceiling is not None and ceiling < floor:
        raise BadInstallBound(f"installs_ceiling {ceiling} < installs_floor {floor}")

    removed = obj.get("removed", False)
    if not isinstance(removed, bool):
        raise MalformedMeta("removed must be a boolean")
    title = obj.get("title")
    if title is not None and not isinstance(title, str):
        raise MalformedMeta("title must be a string")

    return AppMeta(
        app_id=app_id,
        release_date=release,
        installs_floor=floor,
        installs_ceiling=ceiling,
        removed=removed,
        title=title,
    )


def render_app_meta(meta: AppMeta) -> str:
    """Serialize an AppMeta back to the metadata schema (round-trips)."""
    obj: dict[str, object] = {
        "app_id": meta.app_id,
        "release_date": meta.release_date.isoformat(),
        "installs_floor": meta.installs_floor,
    }
    if meta.installs_ceiling is not None:
        obj["installs_ceiling"] = meta.installs_ceiling
    if meta.removed:
        obj["removed"] = True
    if meta.title is not None:
        obj["title"] = meta.title
    return json.dumps(obj, sort_keys=True)


def load_corpus(root: str | Path, strict: bool = False) -> CorpusIndex:
    """Index every app bundle under ``root``.

    Bundle enumeration is sorted, so the result is independent of directory
    order.  In lenient mode malformed bundles become diagnostics; in strict
    mode the first bundle error aborts the load.
    """
    root = Path(root)
    if not root.is_dir():
        raise EmptyCorpus(f"corpus root {root} is not a directory")

    apps: dict[str, AppMeta] = {}
    class_sources: dict[str, tuple[Path, ...]] = {}
    diagnostics: list[str] = []
    duplicates: list[str] = []

    for bundle in sorted(p for p in root.iterdir() if p.is_dir()):
        meta_path = bundle / "meta.json"
        try:
            if not meta_path.is_file():
                raise MalformedMeta(f"bundle {bundle.name}: missing meta.json")
            meta = parse_app_meta(meta_path.read_bytes())
        except (MalformedMeta, BadInstallBound, MalformedRange) as exc:
            if strict:
                raise type(exc)(f"bundle {bundle.name}: {exc}") from exc
            diagnostics.append(f"bundle {bundle.name}: {exc}")
            continue
        if meta.app_id in apps:
            message = f"bundle {bundle.name}: duplicate app_id {meta.app_id!r}"
            if strict:
                raise MalformedMeta(message)
            duplicates.append(meta.app_id)
            diagnostics.append(message)
            continue
        classes_dir = bundle / "classes"
        if classes_dir.is_dir():
            sources = tuple(sorted(classes_dir.rglob("*.dsm")))
        else:
            sources = ()
        apps[meta.app_id] = meta
        class_sources[meta.app_id] = sources

    if not apps:
        raise EmptyCorpus(f"no valid app bundle under {root}")
    return CorpusIndex(
        apps=apps,
        class_sources=class_sources,
        diagnostics=tuple(diagnostics),
        duplicate_ids=tuple(dict.fromkeys(duplicates)),
    )


def validate_corpus(index: CorpusIndex, today: date | None = None) -> ValidationReport:
    """Report corpus hygiene problems without mutating the index."""
    today = today or date.today()
    zero_class = tuple(
        app_id for app_id in sorted(index.apps) if not index.class_sources.get(app_id)
    )
    outliers = []
    for app_id in sorted(index.apps):
        released = index.apps[app_id].release_date
        if released < EARLIEST_PLAUSIBLE_DATE:
            outliers.append(f"{app_id} released {released.isoformat()} (pre-Android)")
        elif released > today:
            outliers.append(f"{app_id} released {released.isoformat()} (in the future)")
    return ValidationReport(
        duplicate_ids=index.duplicate_ids,
        zero_class_apps=zero_class,
        date_outliers=tuple(outliers),
    )
