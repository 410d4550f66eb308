from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import pytest

from libtrend.corpus import AppMeta, CorpusIndex


def write_bundle(
    root: Path,
    app_id: str,
    release_date: str,
    installs_floor: int,
    classes: dict[str, str] | None = None,
    removed: bool = False,
    bundle_name: str | None = None,
) -> Path:
    bundle = root / (bundle_name or app_id)
    bundle.mkdir(parents=True)
    meta = {"app_id": app_id, "release_date": release_date, "installs_floor": installs_floor}
    if removed:
        meta["removed"] = True
    (bundle / "meta.json").write_text(json.dumps(meta), encoding="utf-8")
    if classes:
        (bundle / "classes").mkdir()
        for name, text in classes.items():
            (bundle / "classes" / f"{name}.dsm").write_text(text, encoding="utf-8")
    return bundle


def index_of(*metas: AppMeta) -> CorpusIndex:
    return CorpusIndex(
        apps={m.app_id: m for m in metas},
        class_sources={m.app_id: () for m in metas},
    )


def meta(app_id: str, released: str, floor: int = 1000, removed: bool = False) -> AppMeta:
    return AppMeta(
        app_id=app_id,
        release_date=date.fromisoformat(released),
        installs_floor=floor,
        removed=removed,
    )


@pytest.fixture
def corpus_root(tmp_path: Path) -> Path:
    root = tmp_path / "corpus"
    root.mkdir()
    return root
