"""Cross-check the engine against exhaustive search on random small universes.

For each generated instance the oracle lists every legal rewrite of every
affected view; the engine's answer must be one of them and must be the best
ranked.
"""

from __future__ import annotations

from wssync.esql import print_view
from wssync.oracle import enumerate_choices, generate_instance, run_trials
from wssync.sync import Rewritten, synchronize

inst = generate_instance(42)
print("sources:", [s.source_id for s in inst.sources], "event:", inst.event)
meta, views = inst.build()
before = meta.copy()
originals = {r.view_id: r.definition for r in views.records}
report = synchronize(meta, views, inst.event)

for view_id, outcome in sorted(report.per_view.items()):
    choices = enumerate_choices(before, originals[view_id], inst.event)
    legal = [c for c in choices if isinstance(c.outcome, Rewritten)]
    print(f"\n{view_id}: oracle found {len(legal)} legal rewrite(s); engine says {type(outcome).__name__}")
    if isinstance(outcome, Rewritten):
        print(print_view(outcome.new))

summary = run_trials(500, seed=0)
print(f"\n{summary.agreed}/{summary.trials} agree, {summary.ve_violations} VE violations, "
      f"{summary.rewritten} rewritten and {summary.failed} failed views")
