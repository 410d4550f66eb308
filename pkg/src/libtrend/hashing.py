"""Content-hash identification of library versions.

APK assembly renumbers virtual registers per app, so two apps embedding the
same library release rarely agree byte-for-byte.  The canonical stream
collapses every register-shaped operand to a fixed token before hashing;
what remains (names, descriptors, field presence, instruction structure)
identifies the release.  ProGuard-fragmented variants hash differently on
purpose and stand as independent versions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .catalog import LibraryInstance
from .dsm import REGISTER_RE, ApiSignature, ClassUnit, extract_api_invocations
from .errors import HashCollisionSuspected

RECORD_SEPARATOR = b"\x1e"
REGISTER_TOKEN = "R"


@dataclass(frozen=True, order=True)
class VersionKey:
    library_id: str
    content_hash: str

    def serialized(self) -> str:
        return f"{self.library_id}:{self.content_hash}"


@dataclass(frozen=True)
class VersionGroup:
    key: VersionKey
    member_apps: frozenset[str]
    api_calls: frozenset[ApiSignature]


def _normalize_operand(token: str) -> str:
    return REGISTER_TOKEN if REGISTER_RE.fullmatch(token) else token


def _class_record(unit: ClassUnit) -> str:
    lines = [unit.class_name, unit.super_name or ""]
    for f in unit.fields:
        lines.append(f"{f.name} {f.descriptor}")
    for m in unit.methods:
        lines.append(f"{m.name} {m.descriptor}")
        for instr in m.body:
            lines.append(
                " ".join((instr.opcode, *(_normalize_operand(op) for op in instr.operands)))
            )
    return "\n".join(lines)


def canonicalize(instance: LibraryInstance) -> bytes:
    """Deterministic byte stream of an instance, invariant under register names."""
    ordered = sorted(instance.classes, key=lambda unit: unit.class_name)
    return RECORD_SEPARATOR.join(_class_record(unit).encode("utf-8") for unit in ordered)


def fingerprint(instance: LibraryInstance) -> VersionKey:
    digest = hashlib.sha256(canonicalize(instance)).hexdigest()
    return VersionKey(instance.library_id, digest)


def group_versions(instances: list[LibraryInstance]) -> list[VersionGroup]:
    """Group instances sharing a version key; one group per distinct key.

    All members of a key must agree on the canonical stream byte-for-byte
    (anything else means the hash lied, which is worth crashing over), so
    the group's API call set is computed once from the first member.
    """
    streams: dict[VersionKey, bytes] = {}
    members: dict[VersionKey, set[str]] = {}
    calls: dict[VersionKey, frozenset[ApiSignature]] = {}
    for instance in instances:
        stream = canonicalize(instance)
        key = VersionKey(instance.library_id, hashlib.sha256(stream).hexdigest())
        if key in streams:
            if streams[key] != stream:
                raise HashCollisionSuspected(
                    f"instances of {key.serialized()} differ in canonical bytes"
                )
            members[key].add(instance.app_id)
        else:
            streams[key] = stream
            members[key] = {instance.app_id}
            api: set[ApiSignature] = set()
            for unit in instance.classes:
                api |= extract_api_invocations(unit)
            calls[key] = frozenset(api)
    return [
        VersionGroup(key=key, member_apps=frozenset(members[key]), api_calls=calls[key])
        for key in sorted(streams)
    ]
