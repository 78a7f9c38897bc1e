from __future__ import annotations

import json

import pytest
from branch_matrix import CASES, case_id, run_case
from conftest import V1_PRIME, V2_PRIME, after

from wssync.errors import UnknownTarget
from wssync.esql import AttributeTerm, FromItem, parse_view, print_view
from wssync.kbfile import healthcare, load_document
from wssync.model import AttributeRef, ExtentRelation, RelationRef, parse_event
from wssync.sync import (
    FAILURE_MESSAGE,
    DroppedComponent,
    Failed,
    FailedWithFallback,
    Rewritten,
    RewriteKind,
    attribute_replaces,
    classify_extent,
    classify_ws,
    extent_rank,
    fallback_web_service,
    find_attribute,
    find_relation,
    fresh_alias,
    linking_join,
    relation_replaces,
    rewrite_view_for_attribute,
    rewrite_view_for_relation,
    search_affected,
    substitute_attribute,
    substitute_relation,
    synchronize,
    ve_compatible,
)

E = ExtentRelation
A = AttributeRef.parse
R = RelationRef.parse


def toy_kb(view_texts: list[str], pcs=(), jcs=()) -> object:
    """Two sources with relations R(K, A, B) and T(K); S2 mirrors S1.R."""
    rel = lambda name, attrs: {"name": name, "attributes": [{"name": n, "type": t} for n, t in attrs]}  # noqa: E731
    kab = [("K", "Number"), ("A", "String"), ("B", "Number")]
    doc = {
        "sources": [
            {"id": "S1", "relations": [rel("R", kab), rel("T", [("K", "Number")])]},
            {"id": "S2", "relations": [rel("R", kab), rel("Q", [("K", "Number"), ("X", "String"), ("Y", "Number")])]},
            {"id": "S3", "relations": [rel("R", kab)]},
        ],
        "join_constraints": list(jcs),
        "pc_constraints": list(pcs),
        "views": [{"id": parse_view(t).name, "text": t} for t in view_texts],
    }
    return load_document(doc)


def pc(left, theta, right, projection=("K", "A", "B")):
    return {
        "left": {"relation": left, "projection": list(projection)},
        "theta": theta,
        "right": {"relation": right, "projection": list(projection)},
    }


# -- golden cases --------------------------------------------------------------


def test_doctor_name_deletion(kb):
    report = synchronize(kb.meta, kb.views, parse_event("delete-attribute S1.Doctor.Name"))
    outcome = report.per_view["V1"]
    assert isinstance(outcome, Rewritten)
    assert outcome.new == parse_view(V1_PRIME)
    assert print_view(outcome.new) == V1_PRIME
    assert outcome.extent is E.EQUIVALENT and outcome.dropped == ()
    assert report.per_ws == {"WS1": E.EQUIVALENT}
    assert kb.views.view("V1") == outcome.new
    assert kb.meta.current_type(A("S1.Doctor.Name")) is None


def test_hospital_deletion(kb):
    report = synchronize(kb.meta, kb.views, parse_event("delete-relation S1.Hospital"))
    outcome = report.per_view["V2"]
    assert outcome == Rewritten(parse_view(V2_PRIME), E.SUBSET, ())
    assert ve_compatible(E.SUBSET, outcome.extent)
    assert report.per_ws == {"WS1": E.SUBSET}


def test_unreferenced_target(kb):
    report = synchronize(kb.meta, kb.views, parse_event("delete-attribute S3.Service.IdS"))
    assert report.per_view == {} and report.per_ws == {}
    assert not report.failed


def test_unknown_target_leaves_stores_alone(kb):
    before = kb.meta.sources
    with pytest.raises(UnknownTarget):
        synchronize(kb.meta, kb.views, parse_event("delete-attribute S1.Doctor.Salary"))
    assert kb.meta.sources == before


def test_failure_with_fallback(kb):
    report = synchronize(kb.meta, kb.views, parse_event("delete-attribute S2.Patient.Med_Resp"))
    assert report.per_view == {"V4": Failed()}
    assert report.per_view["V4"].message == "Web service can't be synchronized" == FAILURE_MESSAGE
    assert report.per_ws == {"WS2": FailedWithFallback("WS3")}
    assert not kb.views.is_valid("V4")
    assert report.to_dict()["web_services"]["WS2"] == {"status": "failed", "fallback": "WS3"}


def test_reports_are_deterministic():
    dumps = []
    for _ in range(2):
        kb = healthcare()
        report = synchronize(kb.meta, kb.views, parse_event("delete-relation S1.Hospital"))
        dumps.append(json.dumps(report.to_dict(), ensure_ascii=False, sort_keys=True))
    assert dumps[0] == dumps[1]


@pytest.mark.parametrize("target, expected", [("S1.Doctor.Name", {"WS1"}), ("S1.Hospital", {"WS1"}), ("S3.Service.IdS", set())])
def test_search_affected(kb, target, expected):
    ref = A(target) if target.count(".") == 2 else R(target)
    assert search_affected(kb.meta, kb.views, ref) == expected


# -- branch fidelity -----------------------------------------------------------


@pytest.mark.parametrize("case", CASES, ids=[case_id(c) for c in CASES])
def test_branch_matrix(case):
    expected, observed = run_case(case)
    assert observed == expected


# -- relations -----------------------------------------------------------------


def test_rewrite_relation_hospital(meta, views):
    after(meta, "delete-relation S1.Hospital")
    assert rewrite_view_for_relation(meta, views.view("V2"), R("S1.Hospital")).new == parse_view(V2_PRIME)


def test_rewrite_relation_indispensable_fails():
    kb = toy_kb(["CREATE VIEW V AS SELECT X.K FROM S1.R X;"], pcs=[pc("S1.R", "≡", "S2.R")])
    after(kb.meta, "delete-relation S1.R")
    assert rewrite_view_for_relation(kb.meta, kb.views.view("V"), R("S1.R")) == Failed()


def test_dropping_a_relation_cascades():
    text = (
        "CREATE VIEW V VE='≈' AS SELECT Y.K, X.A (AD=true), X.B (AD=true) "
        "FROM S1.T Y, S1.R X (RD=true) WHERE (X.K = Y.K) (CD=true) AND (X.B > 3) (CD=true) AND (Y.K < 9);"
    )
    kb = toy_kb([text])
    after(kb.meta, "delete-relation S1.R")
    outcome = rewrite_view_for_relation(kb.meta, kb.views.view("V"), R("S1.R"))
    assert print_view(outcome.new) == "CREATE VIEW V' VE='≈' AS\nSELECT Y.K\nFROM S1.T Y\nWHERE (Y.K < 9);"
    assert [d.kind for d in outcome.dropped] == ["relation", "select", "select", "clause", "clause"]
    assert outcome.extent is E.INDIFFERENT


def test_dropping_a_relation_fails_on_indispensable_clause():
    text = "CREATE VIEW V VE='≈' AS SELECT Y.K FROM S1.T Y, S1.R X (RD=true) WHERE X.K = Y.K;"
    kb = toy_kb([text])
    after(kb.meta, "delete-relation S1.R")
    assert rewrite_view_for_relation(kb.meta, kb.views.view("V"), R("S1.R")) == Failed()


def test_find_relation_hospital(meta, views):
    after(meta, "delete-relation S1.Hospital")
    assert find_relation(meta, views.view("V2"), R("S1.Hospital")) == (R("S2.Hospital"), E.SUPERSET)


def test_find_relation_without_pc(meta):
    view = parse_view("CREATE VIEW V AS SELECT G.IdP FROM S1.Diagnostic G (RR=true);")
    after(meta, "delete-relation S1.Diagnostic")
    assert find_relation(meta, view, R("S1.Diagnostic")) is None
    assert rewrite_view_for_relation(meta, view, R("S1.Diagnostic")) == Failed()


def test_find_relation_prefers_equivalent():
    text = "CREATE VIEW V VE='⊆' AS SELECT X.K FROM S1.R X (RR=true);"
    kb = toy_kb([text], pcs=[pc("S1.R", "⊇", "S2.R"), pc("S1.R", "≡", "S3.R")])
    after(kb.meta, "delete-relation S1.R")
    assert find_relation(kb.meta, kb.views.view("V"), R("S1.R")) == (R("S3.R"), E.EQUIVALENT)


def test_find_relation_tie_breaks_by_reference():
    text = "CREATE VIEW V AS SELECT X.K FROM S1.R X (RR=true);"
    kb = toy_kb([text], pcs=[pc("S1.R", "≡", "S3.R"), pc("S1.R", "≡", "S2.R")])
    after(kb.meta, "delete-relation S1.R")
    assert find_relation(kb.meta, kb.views.view("V"), R("S1.R")) == (R("S2.R"), E.EQUIVALENT)


def test_relation_replaces(meta, views):
    after(meta, "delete-relation S1.Hospital")
    assert relation_replaces(meta, views.view("V2"), R("S1.Hospital"), R("S2.Hospital"), E.SUPERSET)


def test_relation_replaces_needs_counterparts(meta, views):
    after(meta, "delete-relation S1.Doctor")
    for theta in (E.EQUIVALENT, E.SUBSET, E.SUPERSET):
        assert not relation_replaces(meta, views.view("V1"), R("S1.Doctor"), R("S1.Patient"), theta)


def test_relation_replaces_vacuous_coverage():
    text = "CREATE VIEW V AS SELECT Y.K FROM S1.T Y, S1.R X (RR=true);"
    kb = toy_kb([text], pcs=[pc("S1.R", "≡", "S2.R")])
    after(kb.meta, "delete-relation S1.R")
    assert relation_replaces(kb.meta, kb.views.view("V"), R("S1.R"), R("S2.R"), E.EQUIVALENT)


def test_relation_substitution_follows_join_constraints():
    text = "CREATE VIEW V VE='≈' AS SELECT X.K, X.A (AR=true) FROM S1.R X (RR=true) WHERE (X.B > 1) (CR=true);"
    jcs = [{"left": "S1.R", "right": "S2.Q", "equalities": [["A", "X"], ["B", "Y"]]}]
    pcs = [pc("S1.R", "⊆", "S2.Q", ("K",))]
    kb = toy_kb([text], pcs=pcs, jcs=jcs)
    after(kb.meta, "delete-relation S1.R")
    outcome = rewrite_view_for_relation(kb.meta, kb.views.view("V"), R("S1.R"))
    assert print_view(outcome.new) == (
        "CREATE VIEW V' VE='≈' AS\nSELECT X2.K, X2.X (AD=false, AR=true)\n"
        "FROM S2.Q X2 (RD=false, RR=true)\nWHERE (X2.Y > 1) (CD=false, CR=true);"
    )
    assert outcome.extent is E.SUPERSET


def test_self_join_substitutes_every_alias():
    text = (
        "CREATE VIEW V AS SELECT X.K, Z.B FROM S1.R X (RR=true), S1.R Z (RR=true), S1.T X2 "
        "WHERE X.A = Z.A AND X.K = X2.K;"
    )
    kb = toy_kb([text], pcs=[pc("S1.R", "≡", "S2.R")])
    report = synchronize(kb.meta, kb.views, parse_event("delete-relation S1.R"))
    new = report.per_view["V"].new
    assert [(str(f.relation), f.alias) for f in new.from_] == [("S2.R", "X3"), ("S2.R", "Z2"), ("S1.T", "X2")]
    assert print_view(new).splitlines()[-1] == "WHERE (X3.A = Z2.A) AND (X3.K = X2.K);"


def test_substitute_relation_hospital(views):
    v2 = views.view("V2")
    out = substitute_relation(v2, R("S1.Hospital"), R("S2.Hospital"))
    expected = parse_view(V2_PRIME)
    assert (out.select, out.from_, out.where) == (expected.select, expected.from_, expected.where)


def test_substitute_relation_identity(views):
    v1 = views.view("V1")
    out = substitute_relation(v1, R("S1.Doctor"), R("S1.Doctor"))
    assert out.from_ == (FromItem(R("S1.Doctor"), "D2", v1.from_[0].params),)
    assert [s.attribute for s in out.select] == [AttributeTerm("D2", "IdD"), AttributeTerm("D2", "Name")]
    assert [s.params for s in out.select] == [s.params for s in v1.select]


def test_substitute_relation_with_mapping():
    view = parse_view("CREATE VIEW V AS SELECT X.A, X.B FROM S1.R X WHERE X.A = \"a\" AND X.K > 1;")
    out = substitute_relation(view, R("S1.R"), R("S2.Q"), {"A": "X", "B": "Y"})
    assert print_view(out) == 'CREATE VIEW V VE=\'≡\' AS\nSELECT X2.X, X2.Y\nFROM S2.Q X2\nWHERE (X2.X = "a");'


# -- attributes ----------------------------------------------------------------


def test_rewrite_attribute_doctor_name(meta, views):
    after(meta, "delete-attribute S1.Doctor.Name")
    assert rewrite_view_for_attribute(meta, views.view("V1"), A("S1.Doctor.Name")).new == parse_view(V1_PRIME)


def test_rewrite_attribute_indispensable_fails(meta):
    view = parse_view("CREATE VIEW V AS SELECT D.IdD, D.Name FROM S1.Doctor D;")
    after(meta, "delete-attribute S1.Doctor.Name")
    assert rewrite_view_for_attribute(meta, view, A("S1.Doctor.Name")) == Failed()


def test_rewrite_attribute_cannot_empty_select(meta):
    view = parse_view("CREATE VIEW V VE='≈' AS SELECT D.Name (AD=true) FROM S1.Doctor D;")
    after(meta, "delete-attribute S1.Doctor.Name")
    assert rewrite_view_for_attribute(meta, view, A("S1.Doctor.Name")) == Failed()


def test_find_attribute_doctor_name(meta, views):
    after(meta, "delete-attribute S1.Doctor.Name")
    assert find_attribute(meta, A("S1.Doctor.Name"), views.view("V1")) == A("S2.Doctor.Name")


def test_find_attribute_without_join(meta):
    view = parse_view("CREATE VIEW V VE='≈' AS SELECT P.IdP, P.Tel (AR=true) FROM S1.Patient P;")
    after(meta, "delete-attribute S1.Patient.Tel")
    assert find_attribute(meta, A("S1.Patient.Tel"), view) is None


def test_find_attribute_prefers_pc_backed(meta):
    view = parse_view("CREATE VIEW V VE='≈' AS SELECT P.IdP, P.Name (AR=true) FROM S1.Patient P;")
    after(meta, "delete-attribute S1.Patient.Name")
    assert find_attribute(meta, A("S1.Patient.Name"), view) == A("S2.Patient.Name")


def test_join_only_candidate_under_indifferent_ve(meta):
    # With S2 gone only S3.Doctor.Name remains, and no PC backs S1.Doctor-S3.Doctor.
    after(meta, "delete-attribute S1.Doctor.Name")
    meta.replace_schemas([s for s in meta.sources if s.source_id != "S2"])
    strict = parse_view("CREATE VIEW V VE='⊇' AS SELECT D.IdD, D.Name (AR=true) FROM S1.Doctor D;")
    loose = parse_view("CREATE VIEW V VE='≈' AS SELECT D.IdD, D.Name (AR=true) FROM S1.Doctor D;")
    assert find_attribute(meta, A("S1.Doctor.Name"), strict) is None
    assert find_attribute(meta, A("S1.Doctor.Name"), loose) == A("S3.Doctor.Name")
    outcome = rewrite_view_for_attribute(meta, loose, A("S1.Doctor.Name"))
    assert outcome.extent is E.INDIFFERENT
    assert print_view(outcome.new).splitlines()[-1] == "WHERE (D.Speciality = D2.Speciality);"


@pytest.mark.parametrize(
    "a, b, expected",
    [
        ("S1.Doctor.Name", "S2.Doctor.Name", True),
        ("S1.Patient.Age", "S1.Patient.Name", False),
        ("S1.Hospital.Localization", "S3.Hospital.Localization", True),
        ("S1.Patient.Tel", "S2.Patient.Tel", False),
    ],
)
def test_attribute_replaces(meta, a, b, expected):
    assert attribute_replaces(meta, A(a), A(b)) is expected


def test_linking_join_avoids_the_deleted_attribute(meta):
    after(meta, "delete-attribute S1.Doctor.Name")
    link = linking_join(meta, A("S1.Doctor.Name"), A("S2.Doctor.Name"))
    assert (link.r_attribute, link.s_attribute, link.theta) == ("IdD", "IdD", E.SUBSET)


def test_substitute_attribute_doctor_name(meta, views):
    after(meta, "delete-attribute S1.Doctor.Name")
    outcome = substitute_attribute(meta, views.view("V1"), A("S1.Doctor.Name"), A("S2.Doctor.Name"))
    assert outcome.new == parse_view(V1_PRIME)


def test_substitute_attribute_drops_where_only_clause(meta):
    view = parse_view("CREATE VIEW V VE='⊇' AS SELECT D.IdD FROM S1.Doctor D WHERE (D.Name = \"x\") (CD=true, CR=false);")
    after(meta, "delete-attribute S1.Doctor.Name")
    outcome = substitute_attribute(meta, view, A("S1.Doctor.Name"), A("S2.Doctor.Name"))
    assert print_view(outcome.new) == "CREATE VIEW V' VE='⊇' AS\nSELECT D.IdD\nFROM S1.Doctor D;"
    assert outcome.dropped == (DroppedComponent("clause", '(D.Name = "x") (CD=true, CR=false)'),)
    assert outcome.extent is E.SUPERSET


def test_substitute_attribute_fails_on_rigid_clause(meta):
    view = parse_view("CREATE VIEW V AS SELECT D.Name (AR=true) FROM S1.Doctor D WHERE D.Name <> \"x\";")
    after(meta, "delete-attribute S1.Doctor.Name")
    assert substitute_attribute(meta, view, A("S1.Doctor.Name"), A("S2.Doctor.Name")) == Failed()


def test_where_only_occurrence_is_replaced():
    text = "CREATE VIEW V AS SELECT X.K FROM S1.R X WHERE (X.A = \"a\") (CR=true);"
    jcs = [{"left": "S1.R", "right": "S2.R", "equalities": [["A", "A"]]}]
    kb = toy_kb([text], pcs=[pc("S1.R", "≡", "S2.R")], jcs=jcs)
    report = synchronize(kb.meta, kb.views, parse_event("delete-attribute S1.R.A"))
    assert print_view(report.per_view["V"].new).splitlines()[-2:] == [
        "FROM S1.R X, S2.R X2",
        'WHERE (X2.A = "a") (CD=false, CR=true) AND (X.K = X2.K);',
    ]


# -- extents and services ------------------------------------------------------


@pytest.mark.parametrize(
    "kind, theta, dropped, expected",
    [
        (RewriteKind.RELATION_SUBSTITUTION, E.SUPERSET, (), E.SUBSET),
        (RewriteKind.RELATION_SUBSTITUTION, E.SUBSET, (), E.SUPERSET),
        (RewriteKind.RELATION_SUBSTITUTION, E.EQUIVALENT, (), E.EQUIVALENT),
        (RewriteKind.NONE, None, (), E.EQUIVALENT),
        (RewriteKind.ATTRIBUTE_SUBSTITUTION, None, (), E.INDIFFERENT),
        (RewriteKind.ATTRIBUTE_SUBSTITUTION, E.SUBSET, (), E.EQUIVALENT),
        (RewriteKind.ATTRIBUTE_SUBSTITUTION, E.SUPERSET, (), E.SUBSET),
        (RewriteKind.NONE, None, (DroppedComponent("clause", "c"),), E.SUPERSET),
        (RewriteKind.NONE, None, (DroppedComponent("select", "s"),), E.INDIFFERENT),
        (RewriteKind.RELATION_SUBSTITUTION, E.SUPERSET, (DroppedComponent("clause", "c"),), E.INDIFFERENT),
    ],
)
def test_classify_extent(kind, theta, dropped, expected):
    assert classify_extent(kind, theta, dropped) is expected


@pytest.mark.parametrize(
    "ve, extent, ok",
    [
        (E.SUPERSET, E.EQUIVALENT, True),
        (E.EQUIVALENT, E.SUBSET, False),
        (E.INDIFFERENT, E.SUPERSET, True),
        (E.SUBSET, E.SUPERSET, False),
        (E.SUPERSET, E.INDIFFERENT, False),
    ],
)
def test_ve_compatible(ve, extent, ok):
    assert ve_compatible(ve, extent) is ok


@pytest.mark.parametrize(
    "extents, expected",
    [
        ([E.EQUIVALENT, E.EQUIVALENT], E.EQUIVALENT),
        ([E.EQUIVALENT, E.SUPERSET], E.SUPERSET),
        ([E.SUPERSET, E.SUBSET], E.INDIFFERENT),
        ([E.SUBSET, E.EQUIVALENT], E.SUBSET),
        ([E.INDIFFERENT], E.INDIFFERENT),
    ],
)
def test_classify_ws(extents, expected):
    assert classify_ws(extents) is expected


def test_extent_rank_order():
    assert [extent_rank(e, E.SUBSET) for e in (E.EQUIVALENT, E.SUBSET, E.SUPERSET, E.INDIFFERENT)] == [0, 1, 2, 3]


def test_fallback_chain(meta, views):
    assert fallback_web_service(meta, views, "WS1") == "WS2"
    assert fallback_web_service(meta, views, "WS3") is None
    views.mark_invalid("V4")
    assert fallback_web_service(meta, views, "WS1") == "WS3"
    assert fallback_web_service(meta, views, "WS2") == "WS3"


def test_fresh_alias():
    assert fresh_alias("D", {"D"}) == "D2"
    assert fresh_alias("D", {"D", "D2"}) == "D3"
