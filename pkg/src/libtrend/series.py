"""Longitudinal analytics: version dating, monthly series, market share.

Every version is dated by *terminus ad quem*: the earliest release date of
any app embedding it, which is a provable upper bound on the library's
release date.  Months are calendar YYYY-MM buckets of that date.  Install
accounting always uses store-bucket floors, the conservative estimate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from fractions import Fraction
from typing import Iterable, NamedTuple

from .catalog import LibraryInstance
from .corpus import CorpusIndex
from .errors import MissingAppMeta, NoSeriesData
from .hashing import VersionGroup, VersionKey
from .permissions import DANGEROUS, CapabilitySet, DangerConfig

log = logging.getLogger(__name__)

RELEASED_IN_MONTH = "released-in-month"
CARRY_FORWARD = "carry-forward"
STATE_MODES = (RELEASED_IN_MONTH, CARRY_FORWARD)


@dataclass(frozen=True)
class DatedVersion:
    key: VersionKey
    date: date
    supporting_apps: int


@dataclass(frozen=True)
class MonthlyLibraryState:
    library_id: str
    month: str
    permissions: CapabilitySet


@dataclass(frozen=True)
class SeriesPoint:
    month: str
    metric: str
    value: float
    denominator: int


@dataclass(frozen=True)
class LibraryShare:
    library_id: str
    app_count: int
    install_floor_total: int
    share: float


@dataclass(frozen=True)
class PurgeRow:
    library_id: str
    missing: int
    original: int
    removed_fraction: float


@dataclass(frozen=True)
class PurgeReport:
    rows: tuple[PurgeRow, ...]
    overall_missing: int
    overall_total: int
    overall_fraction: float  # missing apps with any library / apps with any library
    mean_fraction: float  # unweighted mean of per-library fractions
    unknown_ids: tuple[str, ...]


class SnapshotDelta(NamedTuple):
    snapshot_fraction: float
    series_fraction: float
    delta: float


def month_of(d: date) -> str:
    return f"{d.year:04d}-{d.month:02d}"


def _next_month(month: str) -> str:
    year, mon = int(month[:4]), int(month[5:7])
    if mon == 12:
        return f"{year + 1:04d}-01"
    return f"{year:04d}-{mon + 1:02d}"


def month_range(first: str, last: str) -> list[str]:
    out = [first]
    while out[-1] < last:
        out.append(_next_month(out[-1]))
    return out


def date_versions(groups: list[VersionGroup], index: CorpusIndex) -> list[DatedVersion]:
    """Assign each version the earliest release date among its host apps."""
    out = []
    for group in groups:
        dates = []
        for app_id in group.member_apps:
            meta = index.apps.get(app_id)
            if meta is None:
                raise MissingAppMeta(app_id)
            dates.append(meta.release_date)
        out.append(
            DatedVersion(key=group.key, date=min(dates), supporting_apps=len(group.member_apps))
        )
    out.sort(key=lambda v: v.key)
    return out


def monthly_states(
    dated: list[DatedVersion],
    caps: dict[VersionKey, CapabilitySet],
    mode: str = RELEASED_IN_MONTH,
) -> list[MonthlyLibraryState]:
    """Per-library monthly permission state.

    ``released-in-month``: the union over exactly the versions dated to that
    month (so a library has no state in months without a release).
    ``carry-forward``: from a library's first release through the corpus-wide
    last month, months without a release reuse the most recent union.
    """
    if mode not in STATE_MODES:
        raise ValueError(f"unknown state mode {mode!r}")
    released: dict[tuple[str, str], set[str]] = {}
    for version in dated:
        slot = released.setdefault((version.key.library_id, month_of(version.date)), set())
        slot |= caps[version.key]
    if not released:
        return []

    out: list[MonthlyLibraryState] = []
    if mode == RELEASED_IN_MONTH:
        for (library_id, month), perms in released.items():
            out.append(MonthlyLibraryState(library_id, month, frozenset(perms)))
    else:
        months = sorted({month for _, month in released})
        last_month = months[-1]
        libraries = sorted({library_id for library_id, _ in released})
        for library_id in libraries:
            first = min(month for lib, month in released if lib == library_id)
            current: frozenset[str] | None = None
            for month in month_range(first, last_month):
                fresh = released.get((library_id, month))
                if fresh is not None:
                    current = frozenset(fresh)
                assert current is not None
                out.append(MonthlyLibraryState(library_id, month, current))
    out.sort(key=lambda s: (s.library_id, s.month))
    return out


def _contains_metric(perms: CapabilitySet, metric: str, dangerous: DangerConfig | None) -> bool:
    if metric == DANGEROUS:
        if dangerous is None:
            raise ValueError("DANGEROUS series needs a danger config")
        return bool(perms & dangerous)
    return metric in perms


def _by_month(states: Iterable[MonthlyLibraryState]) -> dict[str, list[MonthlyLibraryState]]:
    grouped: dict[str, list[MonthlyLibraryState]] = {}
    for state in states:
        grouped.setdefault(state.month, []).append(state)
    return grouped


def permission_series(
    states: list[MonthlyLibraryState],
    metric: str,
    min_libraries: int = 5,
    dangerous: DangerConfig | None = None,
) -> tuple[list[SeriesPoint], list[SeriesPoint]]:
    """Monthly count and fraction of libraries able to use ``metric``.

    Count points cover every month with data; fraction points are emitted
    only for months with at least ``min_libraries`` libraries.
    """
    counts: list[SeriesPoint] = []
    fractions: list[SeriesPoint] = []
    for month, month_states in sorted(_by_month(states).items()):
        denominator = len(month_states)
        count = sum(
            1 for s in month_states if _contains_metric(s.permissions, metric, dangerous)
        )
        counts.append(SeriesPoint(month, metric, count, denominator))
        if denominator >= min_libraries:
            fractions.append(SeriesPoint(month, metric, count / denominator, denominator))
    return counts, fractions


def library_installs(instances: list[LibraryInstance], index: CorpusIndex) -> list[LibraryShare]:
    """Per-library app counts, install floors, and share of the corpus total.

    An app counts once per library no matter how many versions it ships; the
    corpus total is the sum over libraries, so an app hosting two libraries
    contributes its floor to both.
    """
    apps_of: dict[str, set[str]] = {}
    for instance in instances:
        apps_of.setdefault(instance.library_id, set()).add(instance.app_id)
    totals: dict[str, int] = {}
    for library_id, apps in apps_of.items():
        total = 0
        for app_id in apps:
            meta = index.apps.get(app_id)
            if meta is None:
                raise MissingAppMeta(app_id)
            total += meta.installs_floor
        totals[library_id] = total
    return shares_from_totals(
        {lib: len(apps) for lib, apps in apps_of.items()}, totals
    )


def shares_from_totals(
    app_counts: dict[str, int], install_totals: dict[str, int]
) -> list[LibraryShare]:
    """Build a share table from already-aggregated per-library totals."""
    grand = sum(install_totals.values())
    out = [
        LibraryShare(
            library_id=library_id,
            app_count=app_counts[library_id],
            install_floor_total=install_totals[library_id],
            share=install_totals[library_id] / grand if grand else 0.0,
        )
        for library_id in install_totals
    ]
    out.sort(key=lambda s: (-s.install_floor_total, s.library_id))
    return out


def top_share(shares: list[LibraryShare], n: int) -> float:
    """Combined install share of the n largest libraries."""
    if n < 1:
        raise ValueError("n must be >= 1")
    totals = sorted((s.install_floor_total for s in shares), reverse=True)
    grand = sum(totals)
    if grand == 0:
        return 0.0
    return sum(totals[:n]) / grand


def weighted_series(
    states: list[MonthlyLibraryState],
    shares: list[LibraryShare],
    metric: str,
    min_libraries: int = 5,
    dangerous: DangerConfig | None = None,
) -> list[SeriesPoint]:
    """Install-weighted monthly fraction of libraries able to use ``metric``.

    Weights are each library's install-floor total, held constant across
    months.  A library without a share gets weight zero (and a diagnostic).
    """
    weights = {s.library_id: s.install_floor_total for s in shares}
    missing = {s.library_id for s in states} - weights.keys()
    for library_id in sorted(missing):
        log.warning("no install share for %s; weighting it zero", library_id)
    out: list[SeriesPoint] = []
    for month, month_states in sorted(_by_month(states).items()):
        denominator = len(month_states)
        if denominator < min_libraries:
            continue
        total = sum(weights.get(s.library_id, 0) for s in month_states)
        hit = sum(
            weights.get(s.library_id, 0)
            for s in month_states
            if _contains_metric(s.permissions, metric, dangerous)
        )
        out.append(SeriesPoint(month, metric, hit / total if total else 0.0, denominator))
    return out


def purge_analysis(
    instances: list[LibraryInstance],
    index: CorpusIndex,
    missing_ids: set[str],
) -> PurgeReport:
    """Correlate store removals with the libraries the removed apps embedded."""
    apps_of: dict[str, set[str]] = {}
    for instance in instances:
        apps_of.setdefault(instance.library_id, set()).add(instance.app_id)
    return purge_from_app_sets(apps_of, index, missing_ids)


def purge_from_app_sets(
    apps_of: dict[str, set[str]],
    index: CorpusIndex,
    missing_ids: set[str],
) -> PurgeReport:
    unknown = tuple(sorted(missing_ids - index.apps.keys()))
    removed = missing_ids & index.apps.keys()
    rows = []
    for library_id, apps in apps_of.items():
        gone = len(apps & removed)
        rows.append(
            PurgeRow(
                library_id=library_id,
                missing=gone,
                original=len(apps),
                removed_fraction=gone / len(apps),
            )
        )
    rows.sort(key=lambda r: (-r.removed_fraction, r.library_id))
    any_library = set().union(*apps_of.values()) if apps_of else set()
    overall_missing = len(any_library & removed)
    overall_total = len(any_library)
    return PurgeReport(
        rows=tuple(rows),
        overall_missing=overall_missing,
        overall_total=overall_total,
        overall_fraction=overall_missing / overall_total if overall_total else 0.0,
        mean_fraction=sum(r.removed_fraction for r in rows) / len(rows) if rows else 0.0,
        unknown_ids=unknown,
    )


def compare_snapshot(
    snapshot: dict[str, CapabilitySet],
    series_month: str,
    states: list[MonthlyLibraryState],
    permissions: Iterable[str] | None = None,
) -> dict[str, SnapshotDelta]:
    """Per-permission prevalence in an undated snapshot vs the dated series.

    Deltas are computed in exact rational arithmetic before conversion, so
    e.g. 15% against 7% yields exactly 0.08.
    """
    month_states = [s for s in states if s.month == series_month]
    if not month_states:
        raise NoSeriesData(series_month)
    if permissions is None:
        seen: set[str] = set()
        for caps in snapshot.values():
            seen |= caps
        for state in month_states:
            seen |= state.permissions
        permissions = sorted(seen)
    out: dict[str, SnapshotDelta] = {}
    for perm in permissions:
        snap = Fraction(
            sum(1 for caps in snapshot.values() if perm in caps), len(snapshot)
        ) if snapshot else Fraction(0)
        ser = Fraction(
            sum(1 for s in month_states if perm in s.permissions), len(month_states)
        )
        out[perm] = SnapshotDelta(float(snap), float(ser), float(snap - ser))
    return out
