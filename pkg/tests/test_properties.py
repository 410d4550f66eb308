from __future__ import annotations

import random
import tempfile
from datetime import date, timedelta
from pathlib import Path

from hypothesis import given, settings
from hypothesis import strategies as st

from libtrend.catalog import LibraryInstance
from libtrend.cli import main
from libtrend.corpus import AppMeta, load_corpus, parse_app_meta, render_app_meta
from libtrend.dsm import (
    REGISTER_RE,
    ClassUnit,
    FieldDecl,
    Instruction,
    MethodDecl,
    extract_api_invocations,
    parse_class_file,
    render_class_file,
)
from libtrend.errors import DsmSyntaxError, DuplicateField, LibtrendError
from libtrend.hashing import VersionKey, canonicalize, fingerprint
from libtrend.permissions import DANGEROUS, PermissionMap, capability_set
from libtrend.series import (
    DatedVersion,
    MonthlyLibraryState,
    monthly_states,
    permission_series,
    shares_from_totals,
    top_share,
    weighted_series,
)

CASES = settings(max_examples=200, deadline=None)

ident = st.from_regex(r"[a-z][a-z0-9]{0,5}", fullmatch=True)
dotted = st.lists(ident, min_size=2, max_size=4).map(".".join)
api_sig = st.builds(
    lambda cls, m: f"{cls}.{m}()",
    st.lists(ident, min_size=2, max_size=3).map(".".join),
    ident,
)
register = st.from_regex(r"[vp][0-9]{1,2}", fullmatch=True)
descriptor = st.sampled_from(["I", "J", "Z", "Ljava/lang/String;", "()V", "(I)V"])

plain_instr = st.builds(
    Instruction,
    st.sampled_from(["move", "const", "nop", "goto", "return"]),
    st.lists(register | st.from_regex(r"[0-9]{1,4}", fullmatch=True), max_size=3).map(tuple),
)
invoke_instr = st.builds(
    lambda api, regs: Instruction("invoke", (api, *regs)),
    api_sig,
    st.lists(register, max_size=2),
)
instruction = plain_instr | invoke_instr

method = st.builds(
    MethodDecl,
    ident,
    st.sampled_from(["()V", "(I)V", "(Ljava/lang/String;)Z"]),
    st.lists(instruction, max_size=5).map(tuple),
    st.just(()),
)
field_decl = st.builds(FieldDecl, ident, st.sampled_from(["I", "J", "Ljava/lang/String;"]))


@st.composite
def class_unit(draw, name: str | None = None) -> ClassUnit:
    fields = draw(
        st.lists(field_decl, max_size=4, unique_by=lambda f: (f.name, f.descriptor))
    )
    return ClassUnit(
        class_name=name or draw(dotted),
        super_name=draw(st.none() | dotted),
        fields=tuple(fields),
        methods=tuple(draw(st.lists(method, max_size=3))),
    )


@st.composite
def library_instance(draw) -> LibraryInstance:
    names = draw(st.lists(dotted, min_size=1, max_size=3, unique=True))
    units = tuple(sorted((draw(class_unit(n)) for n in names), key=lambda u: u.class_name))
    return LibraryInstance(draw(ident), draw(ident), "x", units)


def _rename_instance(instance: LibraryInstance, seed: int) -> LibraryInstance:
    registers = sorted(
        {
            op
            for unit in instance.classes
            for m in unit.methods
            for instr in m.body
            for op in instr.operands
            if REGISTER_RE.fullmatch(op)
        }
    )
    targets = random.Random(seed).sample(range(10**6), len(registers))
    mapping = {reg: f"v{t}" for reg, t in zip(registers, targets)}

    def remap(unit: ClassUnit) -> ClassUnit:
        methods = tuple(
            MethodDecl(
                m.name,
                m.descriptor,
                tuple(
                    Instruction(i.opcode, tuple(mapping.get(op, op) for op in i.operands))
                    for i in m.body
                ),
                m.flags,
            )
            for m in unit.methods
        )
        return ClassUnit(unit.class_name, unit.super_name, unit.fields, methods)

    return LibraryInstance(
        instance.app_id,
        instance.library_id,
        instance.matched_prefix,
        tuple(remap(u) for u in instance.classes),
    )


@CASES
@given(library_instance(), st.integers(0, 2**32))
def test_renaming_never_changes_fingerprint(instance, seed):
    renamed = _rename_instance(instance, seed)
    assert fingerprint(renamed) == fingerprint(instance)
    assert canonicalize(renamed) == canonicalize(instance)


@CASES
@given(class_unit())
def test_render_parse_round_trip(unit):
    assert parse_class_file(render_class_file(unit)) == unit


@CASES
@given(st.text(max_size=300))
def test_parse_is_total(text):
    try:
        parse_class_file(text)
    except (DsmSyntaxError, DuplicateField):
        pass


@CASES
@given(class_unit(), st.randoms(use_true_random=False))
def test_extraction_invariant_under_method_reordering(unit, rng):
    shuffled = list(unit.methods)
    rng.shuffle(shuffled)
    reordered = ClassUnit(unit.class_name, unit.super_name, unit.fields, tuple(shuffled))
    calls = extract_api_invocations(unit)
    assert calls == extract_api_invocations(reordered)
    operands = {op for m in unit.methods for i in m.body for op in i.operands}
    assert calls <= operands


app_meta = st.builds(
    AppMeta,
    app_id=st.from_regex(r"[a-z][a-z0-9.]{0,10}", fullmatch=True),
    release_date=st.dates(date(2008, 9, 1), date(2013, 12, 31)),
    installs_floor=st.integers(0, 10**9),
    installs_ceiling=st.none() | st.integers(10**9, 10**10),
    removed=st.booleans(),
    title=st.none() | st.text(min_size=1, max_size=12),
)


@CASES
@given(app_meta)
def test_meta_round_trip(meta):
    assert parse_app_meta(render_app_meta(meta)) == meta


# -- capability set algebra ---------------------------------------------------

perm_name = st.from_regex(r"[A-Z_]{1,8}", fullmatch=True)
api_pool = st.lists(api_sig, min_size=1, max_size=8, unique=True)


@st.composite
def pmap_and_calls(draw):
    apis = draw(api_pool)
    rows = {}
    for api in apis:
        groups = draw(
            st.lists(
                st.frozensets(perm_name, min_size=1, max_size=3), min_size=1, max_size=2
            )
        )
        rows[api] = tuple(groups)
    pmap = PermissionMap(rows)
    universe = apis + draw(st.lists(api_sig, max_size=3))
    a = set(draw(st.lists(st.sampled_from(universe), max_size=6)))
    b = set(draw(st.lists(st.sampled_from(universe), max_size=6)))
    return pmap, a, b


@CASES
@given(pmap_and_calls())
def test_capability_monotone_and_homomorphic(bundle):
    pmap, a, b = bundle
    assert capability_set(a | b, pmap) == capability_set(a, pmap) | capability_set(b, pmap)
    assert capability_set(a, pmap) <= capability_set(a | b, pmap)


# -- series properties ---------------------------------------------------------

months = st.sampled_from([f"2012-{m:02d}" for m in range(1, 13)])


@st.composite
def state_table(draw) -> list[MonthlyLibraryState]:
    libraries = draw(st.lists(ident, min_size=1, max_size=8, unique=True))
    perms = draw(st.lists(perm_name, min_size=1, max_size=5, unique=True))
    states = []
    for library in libraries:
        for month in draw(st.lists(months, min_size=1, max_size=3, unique=True)):
            states.append(
                MonthlyLibraryState(
                    library, month, frozenset(draw(st.lists(st.sampled_from(perms), max_size=4)))
                )
            )
    return states


@CASES
@given(state_table(), perm_name)
def test_fraction_only_at_threshold(states, metric):
    by_month: dict[str, int] = {}
    for s in states:
        by_month[s.month] = by_month.get(s.month, 0) + 1
    counts, fractions = permission_series(states, metric, min_libraries=5)
    assert {p.month for p in counts} == set(by_month)
    assert {p.month for p in fractions} == {m for m, n in by_month.items() if n >= 5}
    for p in fractions:
        assert p.denominator >= 5
        assert 0.0 <= p.value <= 1.0
    for p in counts:
        assert p.value <= p.denominator


@CASES
@given(state_table(), perm_name, st.integers(1, 10**9))
def test_uniform_weights_match_unweighted_exactly(states, metric, weight):
    libraries = {s.library_id for s in states}
    shares = shares_from_totals(
        {lib: 1 for lib in libraries}, {lib: weight for lib in libraries}
    )
    _, fractions = permission_series(states, metric)
    weighted = weighted_series(states, shares, metric)
    assert [(p.month, p.value) for p in weighted] == [
        (p.month, p.value) for p in fractions
    ]


@CASES
@given(state_table())
def test_dangerous_count_bounds_individual_counts(states):
    perms = {p for s in states for p in s.permissions}
    danger = frozenset(p for p in perms if p > "M")
    d_counts, _ = permission_series(states, DANGEROUS, dangerous=danger)
    by_month = {p.month: p.value for p in d_counts}
    for perm in danger:
        counts, _ = permission_series(states, perm)
        for p in counts:
            assert by_month[p.month] >= p.value


@CASES
@given(st.dictionaries(ident, st.integers(0, 10**12), min_size=1, max_size=30))
def test_top_share_monotone_reaching_one(totals):
    shares = shares_from_totals({lib: 1 for lib in totals}, totals)
    grand = sum(totals.values())
    values = [top_share(shares, n) for n in range(1, len(totals) + 2)]
    assert all(a <= b for a, b in zip(values, values[1:]))
    if grand:
        assert values[len(totals) - 1] == 1.0
        ranked = sorted(totals.values(), reverse=True)
        for n in range(1, len(totals) + 1):
            assert top_share(shares, n) == sum(ranked[:n]) / grand


@st.composite
def dated_versions(draw):
    libraries = draw(st.lists(ident, min_size=1, max_size=5, unique=True))
    out = []
    caps = {}
    counter = 0
    for library in libraries:
        for _ in range(draw(st.integers(1, 4))):
            key = VersionKey(library, f"{counter:064x}")
            counter += 1
            released = draw(st.dates(date(2011, 1, 1), date(2012, 12, 31)))
            out.append(DatedVersion(key, released, 1))
            caps[key] = frozenset(draw(st.lists(perm_name, max_size=3)))
    return out, caps


@CASES
@given(dated_versions())
def test_carry_forward_changes_only_at_releases(bundle):
    dated, caps = bundle
    released = monthly_states(dated, caps, "released-in-month")
    fresh = {(s.library_id, s.month) for s in released}
    carried = monthly_states(dated, caps, "carry-forward")
    by_library: dict[str, list[MonthlyLibraryState]] = {}
    for s in carried:
        by_library.setdefault(s.library_id, []).append(s)
    for library, seq in by_library.items():
        seq.sort(key=lambda s: s.month)
        for prev, cur in zip(seq, seq[1:]):
            if cur.permissions != prev.permissions:
                assert (library, cur.month) in fresh


# -- dating monotonicity --------------------------------------------------------


@CASES
@given(
    st.lists(st.dates(date(2010, 1, 1), date(2013, 1, 1)), min_size=1, max_size=6),
    st.dates(date(2010, 1, 1), date(2013, 1, 1)),
)
def test_adding_an_app_never_increases_version_date(dates, extra):
    from libtrend.series import date_versions
    from libtrend.hashing import VersionGroup

    from conftest import index_of, meta

    metas = [meta(f"a{i}", d.isoformat()) for i, d in enumerate(dates)]
    metas.append(meta("extra", extra.isoformat()))
    index = index_of(*metas)
    key_apps = frozenset(m.app_id for m in metas[:-1])
    before = date_versions(
        [VersionGroup(VersionKey("lib", "0" * 64), key_apps, frozenset())], index
    )[0]
    after = date_versions(
        [VersionGroup(VersionKey("lib", "0" * 64), key_apps | {"extra"}, frozenset())], index
    )[0]
    assert after.date <= before.date
    assert after.supporting_apps == before.supporting_apps + 1


# -- whole-pipeline determinism --------------------------------------------------

CATALOG_TEXT = "liba\tLibrary A\tcom.liba\nlibb\tLibrary B\tcom.libb\n"
MAP_TEXT = (
    "com.api.Net.fetch()\tINTERNET\n"
    "com.api.Gps.locate()\tACCESS_FINE_LOCATION|ACCESS_COARSE_LOCATION\n"
    "com.api.Tasks.list()\tGET_TASKS\n"
)
APIS = ["com.api.Net.fetch()", "com.api.Gps.locate()", "com.api.Tasks.list()"]


@st.composite
def corpus_model(draw):
    n_apps = draw(st.integers(1, 4))
    apps = []
    for i in range(n_apps):
        classes = {}
        for j in range(draw(st.integers(0, 2))):
            prefix = draw(st.sampled_from(["com.liba", "com.libb", "com.other"]))
            calls = draw(st.lists(st.sampled_from(APIS), max_size=2))
            body = "".join(f"invoke {api} v{k}\n" for k, api in enumerate(calls))
            classes[f"c{j}"] = (
                f".class {prefix}.Cls{j}\n.method m ()V\n{body}.end method\n.end class\n"
            )
        apps.append(
            {
                "app_id": f"app{i}",
                "date": draw(st.dates(date(2011, 1, 1), date(2012, 12, 31))).isoformat(),
                "floor": draw(st.sampled_from([0, 1000, 5000, 10000])),
                "classes": classes,
            }
        )
    ordering = draw(st.permutations(range(n_apps)))
    return apps, ordering


def _materialize(base: Path, apps, order) -> Path:
    root = base / "corpus"
    root.mkdir()
    for idx in order:
        app = apps[idx]
        bundle = root / app["app_id"]
        (bundle / "classes").mkdir(parents=True)
        (bundle / "meta.json").write_text(
            '{"app_id":"%s","release_date":"%s","installs_floor":%d}'
            % (app["app_id"], app["date"], app["floor"])
        )
        for name, text in app["classes"].items():
            (bundle / "classes" / f"{name}.dsm").write_text(text)
    return root


@CASES
@given(corpus_model())
def test_scan_analyze_bytes_independent_of_input_order(model):
    apps, ordering = model
    outputs = []
    for order in (range(len(apps)), ordering):
        with tempfile.TemporaryDirectory() as tmp:
            base = Path(tmp)
            root = _materialize(base, apps, order)
            cat = base / "cat.tsv"
            cat.write_text(CATALOG_TEXT)
            pmap = base / "map.tsv"
            pmap.write_text(MAP_TEXT)
            out = base / "out"
            argv = [
                "--corpus", str(root), "--catalog", str(cat), "--perm-map", str(pmap),
                "--out", str(out), "--no-figures", "--min-libraries", "1",
            ]
            assert main(["scan", *argv]) == 0
            assert main(["analyze", *argv]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert outputs[0] == outputs[1]
