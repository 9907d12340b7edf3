"""The bicycle knowledge base under three selection strategies.

Fifo reaches a finite model quickly, a hand-written script takes a longer
detour and still stops, and Dfs keeps inventing new bicycles and wheels.
"""

from pathlib import Path

from rchase.engine import Choice, Dfs, Fifo, Script, check_dagger_violation, run_chase
from rchase.model import Constant, KnowledgeBase, Null, format_facts, parse_facts, parse_rules

DATA = Path(__file__).resolve().parent.parent / "data"
kb = KnowledgeBase(parse_rules((DATA / "k1.rls").read_text()),
                   parse_facts((DATA / "k1.fct").read_text()))

fifo = run_chase(kb, Fifo(), 100)
print(f"fifo: {fifo.status.value} after {len(fifo.steps)} steps")
print(format_facts(fifo.facts))

n = Null
detour = Script([
    Choice.of("r1", {"x": Constant("b")}),
    Choice.of("r3", {"x": n("n0_0")}),
    Choice.of("r1", {"x": n("n1_0")}),
    Choice.of("r2", {"x": n("n1_0"), "y": n("n2_0")}),
    Choice.of("r2", {"x": Constant("b"), "y": n("n0_0")}),
    Choice.of("r4", {"x": n("n0_0"), "y": n("n1_0")}),
])
scripted = run_chase(kb, detour, 100)
print(f"script: {scripted.status.value} after {len(scripted.steps)} steps, "
      f"{len(scripted.facts)} facts")

dfs = run_chase(kb, Dfs(), 50)
print(f"dfs: {dfs.status.value} after {len(dfs.steps)} steps, {len(dfs.facts)} facts")
for step in dfs.steps[:6]:
    print(f"  {step.index}: {step.trigger}")

# Dfs starves the trigger that would close the first wheel
k, trigger = check_dagger_violation(dfs)
print(f"dfs leaves {trigger} (active at step {k}) pending too long")
print(f"fifo violation: {check_dagger_violation(fifo)}")
