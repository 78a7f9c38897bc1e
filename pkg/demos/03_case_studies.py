"""Delete a source attribute, then a source relation, and watch the views adapt.

Both runs start from a fresh copy of the healthcare knowledge base.
"""

from __future__ import annotations

from wssync import healthcare, parse_event, print_view, synchronize
from wssync.sync import FailedWithFallback, Rewritten


def run(event_text: str) -> None:
    kb = healthcare()
    event = parse_event(event_text)
    before = {r.view_id: r.definition for r in kb.views.records}
    print(f"== {event}")
    report = synchronize(kb.meta, kb.views, event)
    for view_id, outcome in sorted(report.per_view.items()):
        print(f"-- {view_id} before:")
        print(print_view(before[view_id]))
        if isinstance(outcome, Rewritten):
            print(f"-- after, extent {outcome.extent.symbol}:")
            print(print_view(outcome.new))
        else:
            print(f"-- {outcome.message}")
    for ws_id, status in sorted(report.per_ws.items()):
        if isinstance(status, FailedWithFallback):
            print(f"{ws_id}: not synchronized, fall back to {status.chosen}")
        else:
            print(f"{ws_id}: synchronized with extent {status.symbol}")
    print()


# The doctor's name disappears from S1.  S2 has a doctor relation that
# contains S1's (a partial containment on IdD, Name, Speciality) and a join
# constraint on Name, so V1 keeps S1.Doctor and borrows Name from S2.
run("delete-attribute S1.Doctor.Name")

# S1 drops its hospital table.  S2's hospital table contains S1's, so V2 moves
# over wholesale; the result may have more rows, which V2's VE='⊆' accepts.
run("delete-relation S1.Hospital")

# A view whose deleted column is dispensable but whose VE rules out the
# resulting change cannot be synchronized, and its service falls back.
run("delete-attribute S2.Patient.Med_Resp")
