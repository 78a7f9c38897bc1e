"""Domain vocabulary: sources, relations, typed attributes, web services and change events.

Every value here is an immutable dataclass, so schemas and events can be shared
freely between the knowledge bases, the engine and the oracle.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable
from dataclasses import dataclass, field, replace
from typing import Union

from wssync.errors import InvariantViolation, UnknownTarget


class TypeDomain(enum.Enum):
    NUMBER = "Number"
    STRING = "String"
    DATE = "Date"

    @classmethod
    def parse(cls, text: str) -> TypeDomain:
        try:
            return cls(text)
        except ValueError:
            raise InvariantViolation(f"unknown type domain {text!r}") from None


class ExtentRelation(enum.Enum):
    """How the extent of a rewritten view or service compares with the original."""

    EQUIVALENT = "≡"
    SUPERSET = "⊇"
    SUBSET = "⊆"
    INDIFFERENT = "≈"

    @property
    def symbol(self) -> str:
        return self.value

    @classmethod
    def from_symbol(cls, symbol: str) -> ExtentRelation:
        return cls(symbol)

    def inverse(self) -> ExtentRelation:
        if self is ExtentRelation.SUBSET:
            return ExtentRelation.SUPERSET
        if self is ExtentRelation.SUPERSET:
            return ExtentRelation.SUBSET
        return self

    def meet(self, other: ExtentRelation) -> ExtentRelation:
        """Compose two rewrite steps: ≡ is neutral, ≈ absorbs, ⊇ with ⊆ gives ≈."""
        if self is ExtentRelation.EQUIVALENT:
            return other
        if other is ExtentRelation.EQUIVALENT or other is self:
            return self
        return ExtentRelation.INDIFFERENT


def _require_names(owner: str, **names: str) -> None:
    for label, value in names.items():
        if not isinstance(value, str) or not value:
            raise InvariantViolation(f"{owner}.{label} must be a nonempty string, got {value!r}")


@dataclass(frozen=True, order=True)
class RelationRef:
    source_id: str
    relation_name: str

    def __post_init__(self) -> None:
        _require_names("RelationRef", source_id=self.source_id, relation_name=self.relation_name)

    def __str__(self) -> str:
        return f"{self.source_id}.{self.relation_name}"

    def attribute(self, name: str) -> AttributeRef:
        return AttributeRef(self.source_id, self.relation_name, name)

    @classmethod
    def parse(cls, dotted: str) -> RelationRef:
        parts = dotted.split(".")
        if len(parts) != 2:
            raise ValueError(f"expected Source.Relation, got {dotted!r}")
        return cls(*parts)


@dataclass(frozen=True, order=True)
class AttributeRef:
    source_id: str
    relation_name: str
    attribute_name: str

    def __post_init__(self) -> None:
        _require_names(
            "AttributeRef",
            source_id=self.source_id,
            relation_name=self.relation_name,
            attribute_name=self.attribute_name,
        )

    def __str__(self) -> str:
        return f"{self.source_id}.{self.relation_name}.{self.attribute_name}"

    @property
    def relation(self) -> RelationRef:
        return RelationRef(self.source_id, self.relation_name)

    @classmethod
    def parse(cls, dotted: str) -> AttributeRef:
        parts = dotted.split(".")
        if len(parts) != 3:
            raise ValueError(f"expected Source.Relation.Attribute, got {dotted!r}")
        return cls(*parts)


@dataclass(frozen=True)
class RelationSchema:
    name: str
    attributes: tuple[tuple[str, TypeDomain], ...]

    def __post_init__(self) -> None:
        _require_names("RelationSchema", name=self.name)
        object.__setattr__(self, "attributes", tuple((n, t) for n, t in self.attributes))
        if not self.attributes:
            raise InvariantViolation(f"relation {self.name} must have at least one attribute")
        names = [n for n, _ in self.attributes]
        if len(set(names)) != len(names):
            raise InvariantViolation(f"relation {self.name} has duplicate attribute names")
        for attr_name, domain in self.attributes:
            _require_names("RelationSchema.attribute", name=attr_name)
            if not isinstance(domain, TypeDomain):
                raise InvariantViolation(f"{self.name}.{attr_name}: {domain!r} is not a TypeDomain")

    @property
    def attribute_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.attributes)

    def type_of(self, attribute_name: str) -> TypeDomain | None:
        for n, t in self.attributes:
            if n == attribute_name:
                return t
        return None


@dataclass(frozen=True)
class SourceSchema:
    source_id: str
    relations: tuple[RelationSchema, ...]

    def __post_init__(self) -> None:
        _require_names("SourceSchema", source_id=self.source_id)
        object.__setattr__(self, "relations", tuple(self.relations))
        if not self.relations:
            raise InvariantViolation(f"source {self.source_id} must have at least one relation")
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise InvariantViolation(f"source {self.source_id} has duplicate relation names")

    def relation(self, name: str) -> RelationSchema | None:
        for rel in self.relations:
            if rel.name == name:
                return rel
        return None


@dataclass(frozen=True)
class WebService:
    ws_id: str
    source_ids: frozenset[str]
    view_ids: tuple[str, ...]
    replacements: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        _require_names("WebService", ws_id=self.ws_id)
        object.__setattr__(self, "source_ids", frozenset(self.source_ids))
        object.__setattr__(self, "view_ids", tuple(self.view_ids))
        object.__setattr__(self, "replacements", tuple(self.replacements))
        if not self.view_ids:
            raise InvariantViolation(f"web service {self.ws_id} must call at least one view")
        if self.ws_id in self.replacements:
            raise InvariantViolation(f"web service {self.ws_id} cannot replace itself")


@dataclass(frozen=True)
class DeleteAttribute:
    target: AttributeRef

    def __str__(self) -> str:
        return f"delete-attribute {self.target}"


@dataclass(frozen=True)
class DeleteRelation:
    target: RelationRef

    def __str__(self) -> str:
        return f"delete-relation {self.target}"


ChangeEvent = Union[DeleteAttribute, DeleteRelation]


def parse_event(text: str) -> ChangeEvent:
    """Parse ``delete-attribute S.R.A`` or ``delete-relation S.R``."""
    parts = text.split()
    if len(parts) != 2:
        raise ValueError(f"expected '<kind> <dotted path>', got {text!r}")
    kind, path = parts
    if kind == "delete-attribute":
        return DeleteAttribute(AttributeRef.parse(path))
    if kind == "delete-relation":
        return DeleteRelation(RelationRef.parse(path))
    raise ValueError(f"unknown change kind {kind!r}")


def schema_index(schemas: Iterable[SourceSchema]) -> dict[str, SourceSchema]:
    return {s.source_id: s for s in schemas}


def lookup_attribute_type(schemas: Iterable[SourceSchema], ref: AttributeRef) -> TypeDomain | None:
    """Current type of ``ref`` in ``schemas``, or None when it does not exist."""
    for source in schemas:
        if source.source_id == ref.source_id:
            rel = source.relation(ref.relation_name)
            return rel.type_of(ref.attribute_name) if rel else None
    return None


def relation_exists(schemas: Iterable[SourceSchema], ref: RelationRef) -> bool:
    for source in schemas:
        if source.source_id == ref.source_id:
            return source.relation(ref.relation_name) is not None
    return False


def apply_change(schemas: Iterable[SourceSchema], event: ChangeEvent) -> tuple[SourceSchema, ...]:
    """Return the schemas as they stand after ``event``, in the input order.

    A relation whose last attribute is deleted disappears with it.  A source
    left without any relation is dropped as well, since an empty source cannot
    satisfy its own invariant.
    """
    schemas = tuple(schemas)
    rel_ref = event.target if isinstance(event, DeleteRelation) else event.target.relation
    index = schema_index(schemas)
    source = index.get(rel_ref.source_id)
    relation = source.relation(rel_ref.relation_name) if source else None
    if relation is None:
        raise UnknownTarget(f"no relation {rel_ref} in the registered schemas")

    if isinstance(event, DeleteAttribute):
        name = event.target.attribute_name
        if relation.type_of(name) is None:
            raise UnknownTarget(f"no attribute {event.target} in the registered schemas")
        kept = tuple((n, t) for n, t in relation.attributes if n != name)
        new_relations = tuple(
            (replace(r, attributes=kept) if r.name == relation.name else r)
            for r in source.relations
            if not (r.name == relation.name and not kept)
        )
    else:
        new_relations = tuple(r for r in source.relations if r.name != relation.name)

    out = []
    for s in schemas:
        if s.source_id != source.source_id:
            out.append(s)
        elif new_relations:
            out.append(SourceSchema(s.source_id, new_relations))
    return tuple(out)
