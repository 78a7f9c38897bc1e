from __future__ import annotations

import pytest

from wssync.kbfile import healthcare
from wssync.model import apply_change, parse_event

V1_PRIME = """CREATE VIEW V1' VE='⊇' AS
SELECT D.IdD, D2.Name (AD=false, AR=true)
FROM S1.Doctor D (RD=false, RR=true), S2.Doctor D2 (RD=false, RR=true)
WHERE (D.Speciality = "Cardiologist") (CD=false, CR=true) AND (D.IdD = D2.IdD);"""

V2_PRIME = """CREATE VIEW V2' VE='⊆' AS
SELECT H2.IdH, H2.Name (AD=false, AR=true)
FROM S2.Hospital H2 (RD=false, RR=true)
WHERE (H2.Localization = "Tunis") (CD=false, CR=true);"""


@pytest.fixture
def kb():
    return healthcare()


@pytest.fixture
def meta(kb):
    return kb.meta


@pytest.fixture
def views(kb):
    return kb.views


def after(meta, event_text: str):
    """Move ``meta`` to its post-event schemas, as the engine does before rewriting."""
    event = parse_event(event_text)
    meta.replace_schemas(apply_change(meta.sources, event))
    return event
