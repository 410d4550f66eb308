"""Ad-library catalog: package-name prefixes and per-app instance extraction.

A catalog maps stable library ids to the dotted package prefixes that
identify them.  Matching is longest-prefix on dot boundaries, which is what
disambiguates nested namespaces such as ``com.google.ads`` versus
``com.google.analytics``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dsm import ClassUnit
from .errors import DuplicatePrefix, MalformedRow

_DOTTED_RE = re.compile(r"[A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*")

DEFAULT_CATALOG_RESOURCE = "data/catalog/appendix1.tsv"


@dataclass(frozen=True)
class CatalogEntry:
    library_id: str
    display_name: str
    package_prefixes: tuple[str, ...]


@dataclass(frozen=True)
class Catalog:
    entries: tuple[CatalogEntry, ...]

    def display_name(self, library_id: str) -> str:
        for entry in self.entries:
            if entry.library_id == library_id:
                return entry.display_name
        return library_id

    def prefix_index(self) -> dict[str, str]:
        return {
            prefix: entry.library_id
            for entry in self.entries
            for prefix in entry.package_prefixes
        }


def load_catalog(text: str | bytes) -> Catalog:
    """Parse the catalog TSV: ``library_id<TAB>display_name<TAB>prefix[,prefix...]``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    entries: list[CatalogEntry] = []
    claimed: dict[str, str] = {}
    for number, raw in enumerate(text.split("\n"), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != 3:
            raise MalformedRow(f"catalog line {number}: expected 3 tab-separated columns")
        library_id, display_name, prefix_list = (c.strip() for c in columns)
        if not library_id or not display_name:
            raise MalformedRow(f"catalog line {number}: empty library_id or display_name")
        prefixes = tuple(p.strip() for p in prefix_list.split(","))
        if not all(prefixes):
            raise MalformedRow(f"catalog line {number}: empty package prefix")
        for prefix in prefixes:
            if _DOTTED_RE.fullmatch(prefix) is None:
                raise MalformedRow(f"catalog line {number}: invalid prefix {prefix!r}")
            owner = claimed.get(prefix)
            if owner is not None and owner != library_id:
                raise DuplicatePrefix(
                    f"prefix {prefix!r} claimed by both {owner!r} and {library_id!r}"
                )
            claimed[prefix] = library_id
        entries.append(CatalogEntry(library_id, display_name, prefixes))
    return Catalog(tuple(entries))


def load_catalog_file(path: str | Path) -> Catalog:
    return load_catalog(Path(path).read_bytes())


def load_default_catalog() -> Catalog:
    """The bundled catalog transcribing the published 66-library table."""
    data = resources.files(__package__).joinpath(DEFAULT_CATALOG_RESOURCE).read_bytes()
    return load_catalog(data)


def match_package(class_name: str, catalog: Catalog) -> str | None:
    """Library owning the longest dot-boundary prefix of class_name, if any."""
    index = catalog.prefix_index()
    segments = class_name.split(".")
    for k in range(len(segments), 0, -1):
        hit = index.get(".".join(segments[:k]))
        if hit is not None:
            return hit
    return None


@dataclass(frozen=True)
class LibraryInstance:
    """All classes of one app that matched one catalog library."""

    app_id: str
    library_id: str
    matched_prefix: str
    classes: tuple[ClassUnit, ...]


def extract_instances(
    app_id: str, classes: list[ClassUnit], catalog: Catalog
) -> list[LibraryInstance]:
    """Partition an app's classes into per-library instances.

    Unmatched classes are dropped; output is canonically sorted so it does
    not depend on the input class order.
    """
    index = catalog.prefix_index()

    def matching_prefix(class_name: str) -> str | None:
        segments = class_name.split(".")
        for k in range(len(segments), 0, -1):
            prefix = ".".join(segments[:k])
            if prefix in index:
                return prefix
        return None

    by_library: dict[str, list[ClassUnit]] = {}
    for unit in classes:
        prefix = matching_prefix(unit.class_name)
        if prefix is not None:
            by_library.setdefault(index[prefix], []).append(unit)
    out = []
    for library_id in sorted(by_library):
        members = tuple(sorted(by_library[library_id], key=lambda c: c.class_name))
        # With a multi-prefix catalog entry the first class's prefix is reported.
        reported = matching_prefix(members[0].class_name)
        assert reported is not None
        out.append(
            LibraryInstance(
                app_id=app_id,
                library_id=library_id,
                matched_prefix=reported,
                classes=members,
            )
        )
    return out
