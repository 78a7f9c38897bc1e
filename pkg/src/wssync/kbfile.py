"""JSON knowledge-base documents: loading into the two stores and dumping back.

The document layout is described by ``data/kb.schema.json``.  Type-integrity
constraints are not written separately; one is derived for every relation
from the attribute types in ``sources``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from wssync.errors import WsSyncError
from wssync.esql import parse_condition, print_clause
from wssync.model import ExtentRelation, RelationRef, RelationSchema, SourceSchema, TypeDomain, WebService
from wssync.wsmkb import JoinConstraint, MetaKnowledgeBase, PCConstraint, PCSide, ReplacementRule, TypeIntegrityConstraint
from wssync.wsvkb import ViewKnowledgeBase, ViewRecord


class KbLoadError(WsSyncError):
    """A knowledge-base document failed to load; ``location`` points at the offending entry."""

    def __init__(self, message: str, location: str = "") -> None:
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


@dataclass
class KnowledgeBase:
    meta: MetaKnowledgeBase
    views: ViewKnowledgeBase
    view_notes: dict[str, str]

    def summary(self) -> dict[str, int]:
        out = self.meta.summary()
        out["views"] = len(self.views.records)
        return out


def schema() -> dict:
    return json.loads(resources.files("wssync.data").joinpath("kb.schema.json").read_text("utf-8"))


def healthcare_document() -> dict:
    return json.loads(resources.files("wssync.data").joinpath("healthcare.json").read_text("utf-8"))


def healthcare() -> KnowledgeBase:
    """The shipped healthcare case-study knowledge base."""
    return load_document(healthcare_document())


def load_path(path: str | Path) -> KnowledgeBase:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise KbLoadError(f"no such file: {path}") from None
    except OSError as exc:
        raise KbLoadError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise KbLoadError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None
    return load_document(doc)


def _location(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def load_document(doc: dict) -> KnowledgeBase:
    """Validate ``doc`` against the schema and register everything it declares."""
    validator = jsonschema.Draft202012Validator(schema())
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is not None:
        raise KbLoadError(error.message, _location(error.absolute_path))

    meta = MetaKnowledgeBase()
    views = ViewKnowledgeBase(meta)

    def step(location: str, fn, *args):
        try:
            return fn(*args)
        except KbLoadError:
            raise
        except (WsSyncError, ValueError, KeyError) as exc:
            raise KbLoadError(str(exc), location) from None

    for i, src in enumerate(doc["sources"]):
        loc = f"/sources/{i}"
        relations = tuple(
            step(
                f"{loc}/relations/{j}",
                RelationSchema,
                rel["name"],
                tuple((a["name"], TypeDomain(a["type"])) for a in rel["attributes"]),
            )
            for j, rel in enumerate(src["relations"])
        )
        source = step(loc, SourceSchema, src["id"], relations)
        if meta.source(source.source_id) is not None:
            raise KbLoadError(f"duplicate source id {source.source_id}", loc)
        step(loc, meta.register, source)
        for j, rel in enumerate(src["relations"]):
            tc = TypeIntegrityConstraint.from_schema(source, rel["name"], rel.get("label"))
            step(f"{loc}/relations/{j}", meta.register, tc)

    for i, jc in enumerate(doc.get("join_constraints", [])):
        loc = f"/join_constraints/{i}"
        constraint = step(
            loc,
            lambda: JoinConstraint(
                RelationRef.parse(jc["left"]), RelationRef.parse(jc["right"]), jc["equalities"], jc.get("id")
            ),
        )
        step(loc, meta.register, constraint)

    for i, pc in enumerate(doc.get("pc_constraints", [])):
        loc = f"/pc_constraints/{i}"

        def side(d):
            return PCSide(RelationRef.parse(d["relation"]), d["projection"], parse_condition(d.get("selection", "")))

        constraint = step(
            loc, lambda: PCConstraint(side(pc["left"]), ExtentRelation(pc["theta"]), side(pc["right"]), pc.get("id"))
        )
        step(loc, meta.register, constraint)

    services = doc.get("web_services", [])
    for i, ws in enumerate(services):
        loc = f"/web_services/{i}"
        item = step(loc, WebService, ws["id"], ws["sources"], ws["views"], ws.get("replacements", []))
        step(loc, meta.register, item)

    notes = {}
    for i, v in enumerate(doc.get("views", [])):
        loc = f"/views/{i}"
        record = step(loc, ViewRecord.from_text, v["text"], v["id"])
        step(loc, views.add_view, record)
        if "note" in v:
            notes[v["id"]] = v["note"]

    for i, ws in enumerate(services):
        loc = f"/web_services/{i}"
        if ws.get("replacements"):
            step(loc, meta.register, ReplacementRule(ws["id"], ws["replacements"]))
        step(loc, views.map_web_service, ws["id"], ws["views"])

    return KnowledgeBase(meta, views, notes)


def dump_document(kb: KnowledgeBase) -> dict:
    """Serialize both stores back into a schema-valid document."""
    meta = kb.meta
    labels = {tc.relation: tc.label for tc in meta.type_constraints}
    doc: dict = {
        "sources": [
            {
                "id": s.source_id,
                "relations": [
                    {
                        "name": r.name,
                        **({"label": labels[RelationRef(s.source_id, r.name)]}
                           if labels.get(RelationRef(s.source_id, r.name)) else {}),
                        "attributes": [{"name": n, "type": t.value} for n, t in r.attributes],
                    }
                    for r in s.relations
                ],
            }
            for s in meta.sources
        ],
        "join_constraints": [
            {
                **({"id": jc.label} if jc.label else {}),
                "left": str(jc.left),
                "right": str(jc.right),
                "equalities": [list(e) for e in jc.equalities],
            }
            for jc in meta.join_constraints
        ],
        "pc_constraints": [],
        "web_services": [],
        "views": [],
    }
    for pc in meta.pc_constraints:
        def side(s: PCSide) -> dict:
            out = {"relation": str(s.relation), "projection": list(s.projection)}
            if s.selection:
                out["selection"] = " AND ".join(print_clause(c) for c in s.selection)
            return out

        doc["pc_constraints"].append(
            {**({"id": pc.label} if pc.label else {}), "left": side(pc.left), "theta": pc.theta.symbol, "right": side(pc.right)}
        )
    for ws in meta.web_services:
        doc["web_services"].append(
            {
                "id": ws.ws_id,
                "sources": sorted(ws.source_ids),
                "views": list(kb.views.views_of(ws.ws_id) or ws.view_ids),
                "replacements": meta.replacement_chain(ws.ws_id),
            }
        )
    for rec in kb.views.records:
        entry = {"id": rec.view_id, "text": rec.text}
        if rec.view_id in kb.view_notes:
            entry["note"] = kb.view_notes[rec.view_id]
        doc["views"].append(entry)
    return doc
