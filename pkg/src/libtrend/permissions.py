"""API-to-permission mapping and capability classification.

The mapping is consumed as data (one API per row) rather than re-derived
from the Android framework.  Capability sets follow the maximal rule: for
an API gated by any one of several permissions, all alternatives count as
capabilities, since static analysis cannot tell which branch runs.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dsm import ApiSignature, is_api_signature
from .errors import DuplicateApi, EmptyGroup, MalformedRow, OverlappingEquivClasses

_PERM_RE = re.compile(r"[A-Z_]+")

# Descriptor wildcard: a map row `pkg.Class.method(...)` matches a call with
# any argument list, which is how signature-less mapping sources are carried.
WILDCARD_DESCRIPTOR = "(...)"

CapabilitySet = frozenset[str]
DangerConfig = frozenset[str]

DANGEROUS = "DANGEROUS"


@dataclass(frozen=True)
class PermissionMap:
    rows: dict[ApiSignature, tuple[frozenset[str], ...]]

    def groups_for(self, api: ApiSignature) -> tuple[frozenset[str], ...] | None:
        hit = self.rows.get(api)
        if hit is not None:
            return hit
        head = api.partition("(")[0]
        return self.rows.get(head + WILDCARD_DESCRIPTOR)


def load_permission_map(text: str | bytes) -> PermissionMap:
    """Parse ``api<TAB>group(;group)*`` rows, where group = ``perm(|perm)*``."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    rows: dict[str, tuple[frozenset[str], ...]] = {}
    for number, raw in enumerate(text.split("\n"), 1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        columns = raw.rstrip("\r").split("\t")
        if len(columns) != 2:
            raise MalformedRow(f"mapping line {number}: expected 2 tab-separated columns")
        api, groups_text = columns[0].strip(), columns[1].strip()
        if not is_api_signature(api):
            raise MalformedRow(f"mapping line {number}: bad API signature {api!r}")
        if api in rows:
            raise DuplicateApi(f"mapping line {number}: {api} listed twice")
        groups = []
        for chunk in groups_text.split(";"):
            names = [p for p in (n.strip() for n in chunk.split("|")) if p]
            if not names:
                raise EmptyGroup(f"mapping line {number}: empty permission group")
            for name in names:
                if _PERM_RE.fullmatch(name) is None:
                    raise MalformedRow(f"mapping line {number}: bad permission {name!r}")
            groups.append(frozenset(names))
        rows[api] = tuple(groups)
    return PermissionMap(rows)


def load_permission_map_file(path: str | Path) -> PermissionMap:
    return load_permission_map(Path(path).read_bytes())


def capability_set(api_calls: set[ApiSignature], pmap: PermissionMap) -> CapabilitySet:
    """Every permission any mapped call might use; unmapped calls contribute nothing."""
    caps: set[str] = set()
    for api in api_calls:
        groups = pmap.groups_for(api)
        if groups is not None:
            for group in groups:
                caps |= group
    return frozenset(caps)


def unmapped_calls(api_calls: set[ApiSignature], pmap: PermissionMap) -> set[ApiSignature]:
    """Calls the mapping does not cover; kept as a diagnostics tally."""
    return {api for api in api_calls if pmap.groups_for(api) is None}


def classify_dangerous(caps: CapabilitySet, dangerous: DangerConfig) -> tuple[frozenset[str], bool]:
    subset = frozenset(caps & dangerous)
    return subset, bool(subset)


def permission_count(caps: CapabilitySet, equiv: list[frozenset[str]]) -> int:
    """Count permissions, merging each equivalence class into one unit."""
    claimed: set[str] = set()
    for cls in equiv:
        if claimed & cls:
            raise OverlappingEquivClasses("equivalence classes must be disjoint")
        claimed |= cls
    classes_hit = sum(1 for cls in equiv if caps & cls)
    loose = len(caps - claimed)
    return classes_hit + loose


def _data_json(name: str):
    return json.loads(resources.files(__package__).joinpath(f"data/{name}").read_text("utf-8"))


def default_danger_config() -> DangerConfig:
    """Bundled dangerous-permission taxonomy (personal data, monitoring, cost, system state)."""
    return frozenset(_data_json("danger_default.json"))


def default_equivalence_classes() -> list[frozenset[str]]:
    """Bundled permission families counted as single units."""
    return [frozenset(cls) for cls in _data_json("equiv_default.json")]
