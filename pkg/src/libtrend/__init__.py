"""Longitudinal permission-usage analysis of embedded ad libraries.

The pipeline: load a corpus of per-app disassembly bundles, partition each
app's classes into catalog-library instances, hash register-normalized
canonical content to identify versions, date each version by its earliest
host app, map framework invocations to permission capabilities, and emit
monthly usage series plus install-weighted market share.
"""

from .catalog import (
    Catalog,
    CatalogEntry,
    LibraryInstance,
    extract_instances,
    load_catalog,
    load_default_catalog,
    match_package,
)
from .corpus import (
    AppMeta,
    CorpusIndex,
    ValidationReport,
    load_corpus,
    parse_app_meta,
    parse_install_range,
    render_app_meta,
    validate_corpus,
)
from .dsm import (
    ApiSignature,
    ClassUnit,
    FieldDecl,
    Instruction,
    MethodDecl,
    extract_api_invocations,
    parse_class_file,
    render_class_file,
)
from .hashing import VersionGroup, VersionKey, canonicalize, fingerprint, group_versions
from .permissions import (
    DANGEROUS,
    CapabilitySet,
    DangerConfig,
    PermissionMap,
    capability_set,
    classify_dangerous,
    default_danger_config,
    default_equivalence_classes,
    load_permission_map,
    permission_count,
)
from .series import (
    CARRY_FORWARD,
    RELEASED_IN_MONTH,
    DatedVersion,
    LibraryShare,
    MonthlyLibraryState,
    PurgeReport,
    PurgeRow,
    SeriesPoint,
    SnapshotDelta,
    compare_snapshot,
    date_versions,
    library_installs,
    monthly_states,
    permission_series,
    purge_analysis,
    top_share,
    weighted_series,
)

__version__ = "0.1.0"

__all__ = [
    "AppMeta",
    "ApiSignature",
    "CARRY_FORWARD",
    "CapabilitySet",
    "Catalog",
    "CatalogEntry",
    "ClassUnit",
    "CorpusIndex",
    "DANGEROUS",
    "DangerConfig",
    "DatedVersion",
    "FieldDecl",
    "Instruction",
    "LibraryInstance",
    "LibraryShare",
    "MethodDecl",
    "MonthlyLibraryState",
    "PermissionMap",
    "PurgeReport",
    "PurgeRow",
    "RELEASED_IN_MONTH",
    "SeriesPoint",
    "SnapshotDelta",
    "ValidationReport",
    "VersionGroup",
    "VersionKey",
    "canonicalize",
    "capability_set",
    "classify_dangerous",
    "compare_snapshot",
    "date_versions",
    "default_danger_config",
    "default_equivalence_classes",
    "extract_api_invocations",
    "extract_instances",
    "fingerprint",
    "group_versions",
    "library_installs",
    "load_catalog",
    "load_corpus",
    "load_default_catalog",
    "load_permission_map",
    "match_package",
    "monthly_states",
    "parse_app_meta",
    "parse_class_file",
    "parse_install_range",
    "permission_count",
    "permission_series",
    "purge_analysis",
    "render_app_meta",
    "render_class_file",
    "top_share",
    "validate_corpus",
    "weighted_series",
]
