"""Keep E-SQL views over evolving information sources synchronized."""

from wssync.esql import ViewDefinition, parse_view, parse_views, print_view
from wssync.kbfile import KnowledgeBase, healthcare, load_document, load_path
from wssync.model import (
    AttributeRef,
    DeleteAttribute,
    DeleteRelation,
    ExtentRelation,
    RelationRef,
    TypeDomain,
    apply_change,
    parse_event,
)
from wssync.sync import FAILURE_MESSAGE, Failed, Rewritten, SyncReport, Unchanged, synchronize
from wssync.wsmkb import MetaKnowledgeBase
from wssync.wsvkb import ViewKnowledgeBase, ViewRecord

__version__ = "0.1.0"
