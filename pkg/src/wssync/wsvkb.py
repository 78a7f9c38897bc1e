"""Web services View Knowledge Base: E-SQL view definitions and the service-to-view map."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from wssync.errors import DanglingReference, DuplicateId, UnknownView, ValidationError
from wssync.esql import ViewDefinition, parse_view, print_view
from wssync.model import AttributeRef, RelationRef
from wssync.wsmkb import MetaKnowledgeBase

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ViewRecord:
    view_id: str
    definition: ViewDefinition
    text: str = ""

    @classmethod
    def from_text(cls, text: str, view_id: str | None = None) -> ViewRecord:
        definition = parse_view(text)
        return cls(view_id or definition.name, definition, text)


def validate_view(view: ViewDefinition, meta: MetaKnowledgeBase) -> None:
    """Raise ValidationError unless every relation and attribute of ``view`` exists."""
    view.check()
    aliases = view.aliases
    for rel in aliases.values():
        if not meta.has_relation(rel):
            raise ValidationError(f"view {view.name}: unknown relation {rel}")
    terms = [s.attribute for s in view.select] + [t for c in view.where for t in c.attribute_terms]
    for term in terms:
        ref = aliases[term.alias].attribute(term.attribute)
        if meta.current_type(ref) is None:
            raise ValidationError(f"view {view.name}: unknown attribute {ref} (written {term})")


class ViewKnowledgeBase:
    """Stores parsed views by id and which web services call them (the WSVKB)."""

    def __init__(self, meta: MetaKnowledgeBase) -> None:
        self.meta = meta
        self._records: dict[str, ViewRecord] = {}
        self._ws_views: dict[str, tuple[str, ...]] = {}
        self._invalid: set[str] = set()

    def copy(self, meta: MetaKnowledgeBase | None = None) -> ViewKnowledgeBase:
        new = ViewKnowledgeBase(meta or self.meta)
        new._records = dict(self._records)
        new._ws_views = dict(self._ws_views)
        new._invalid = set(self._invalid)
        return new

    __copy__ = copy

    @property
    def records(self) -> tuple[ViewRecord, ...]:
        return tuple(self._records.values())

    @property
    def ws_views(self) -> dict[str, tuple[str, ...]]:
        return dict(self._ws_views)

    def add_view(self, record: ViewRecord) -> ViewKnowledgeBase:
        if record.view_id in self._records:
            raise DuplicateId(f"view {record.view_id} is already registered")
        try:
            validate_view(record.definition, self.meta)
        except ValidationError:
            raise
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
        if not record.text:
            record = ViewRecord(record.view_id, record.definition, print_view(record.definition))
        self._records[record.view_id] = record
        return self

    def map_web_service(self, ws_id: str, view_ids) -> ViewKnowledgeBase:
        view_ids = tuple(view_ids)
        missing = [v for v in view_ids if v not in self._records]
        if missing:
            raise DanglingReference(f"web service {ws_id} calls unknown views {missing}")
        self._ws_views[ws_id] = view_ids
        self._check_sources(ws_id)
        return self

    def _check_sources(self, ws_id: str) -> None:
        # The service-to-source map and the service-to-view map are kept
        # separately; a mismatch is reported but tolerated.
        try:
            declared = self.meta.web_service(ws_id).source_ids
        except KeyError:
            return
        used = {rel.source_id for v in self._ws_views[ws_id] for rel in self.view(v).aliases.values()}
        if not used <= declared:
            log.warning("web service %s uses sources %s not declared for it", ws_id, sorted(used - declared))

    def source_mismatches(self) -> dict[str, list[str]]:
        out = {}
        for ws_id, views in self._ws_views.items():
            try:
                declared = self.meta.web_service(ws_id).source_ids
            except KeyError:
                continue
            used = {rel.source_id for v in views for rel in self.view(v).aliases.values()}
            if not used <= declared:
                out[ws_id] = sorted(used - declared)
        return out

    def record(self, view_id: str) -> ViewRecord:
        try:
            return self._records[view_id]
        except KeyError:
            raise UnknownView(f"no view {view_id}") from None

    def view(self, view_id: str) -> ViewDefinition:
        return self.record(view_id).definition

    def replace_definition(self, view_id: str, definition: ViewDefinition) -> None:
        self.record(view_id)
        self._records[view_id] = ViewRecord(view_id, definition, print_view(definition))
        self._invalid.discard(view_id)

    def mark_invalid(self, view_id: str) -> None:
        self.record(view_id)
        self._invalid.add(view_id)

    def is_valid(self, view_id: str) -> bool:
        self.record(view_id)
        return view_id not in self._invalid

    def views_referencing(self, target: AttributeRef | RelationRef) -> set[str]:
        out = set()
        for view_id, rec in self._records.items():
            view = rec.definition
            if isinstance(target, RelationRef):
                if view.aliases_of(target):
                    out.add(view_id)
                continue
            aliases = set(view.aliases_of(target.relation))
            if not aliases:
                continue
            terms = [s.attribute for s in view.select] + [t for c in view.where for t in c.attribute_terms]
            if any(t.alias in aliases and t.attribute == target.attribute_name for t in terms):
                out.add(view_id)
        return out

    def web_services_of_view(self, view_id: str) -> set[str]:
        self.record(view_id)
        return {ws for ws, views in self._ws_views.items() if view_id in views}

    def views_of(self, ws_id: str) -> tuple[str, ...]:
        return self._ws_views.get(ws_id, ())
