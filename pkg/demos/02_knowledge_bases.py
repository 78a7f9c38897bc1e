"""Tour the shipped healthcare knowledge base.

The meta store holds schemas and the constraints that say what may stand in
for what; the view store holds the E-SQL views and which web service calls
which view.
"""

from __future__ import annotations

from wssync import AttributeRef, RelationRef, healthcare

kb = healthcare()
meta, views = kb.meta, kb.views
print("loaded:", kb.summary())

name = AttributeRef.parse("S1.Doctor.Name")
print(f"\n{name} is typed {meta.attribute_type(name).value}")
print("join partners of the same type:", sorted(map(str, meta.candidate_substitute_attributes(name))))

hospital = RelationRef.parse("S1.Hospital")
for other, theta in sorted(meta.candidate_substitute_relations(hospital)):
    print(f"containment: {hospital} {theta.symbol} {other}")

print("\nviews using S1.Doctor.Name:", sorted(views.views_referencing(name)))
print("services calling V3:", sorted(views.web_services_of_view("V3")))
for ws in ("WS1", "WS2", "WS3"):
    print(f"{ws} may be replaced by {meta.replacement_chain(ws) or 'nothing'}")
