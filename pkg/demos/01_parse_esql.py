"""Parse an E-SQL view, look at its evolution parameters, and print it back.

Every SELECT item, FROM item and WHERE clause can say whether it may be
dropped (dispensable) or swapped for an equivalent (replaceable) when its
source changes.  The view as a whole states which extent change it tolerates.
"""

from __future__ import annotations

from wssync.esql import parse_view, print_view

TEXT = """
-- cardiologists, with their names if some source still has them
CREATE VIEW Cardio VE='⊇' AS
SELECT D.IdD, D.Name (AD=false, AR=true)
FROM S1.Doctor D (RD=false, RR=true)
WHERE (D.Speciality = "Cardiologist") (CD=false, CR=true)
"""

view = parse_view(TEXT)
print(f"view {view.name} accepts extent {view.ve.symbol} ({view.ve.name.lower()})")

for item in view.select:
    p = item.params
    print(f"  select {item.attribute}: dispensable={p.dispensable} replaceable={p.replaceable}")
for item in view.from_:
    print(f"  from {item.relation} as {item.alias}: {item.params}")
for clause in view.where:
    print(f"  where {clause.lhs} {clause.comparator} {clause.rhs}: {clause.params}")

# Printing is canonical: defaults are omitted, VE is always explicit, and the
# result parses back to the same tree.
text = print_view(view)
print()
print(text)
assert parse_view(text) == view
