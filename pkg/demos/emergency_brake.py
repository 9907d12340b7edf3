"""Every fair restricted derivation of the emergency-brake knowledge base
terminates, but only because the brake eventually becomes real. This walks
through scripted runs, the bounded derivation tree and the breadth-first
decision procedure."""

from pathlib import Path

from rchase.engine import Choice, Fifo, Script, run_chase
from rchase.model import KnowledgeBase, parse_facts, parse_rules
from rchase.termination import decide_bf, explore, leaf_depths

DATA = Path(__file__).resolve().parent.parent / "data"
kb = KnowledgeBase(parse_rules((DATA / "k2.rls").read_text()),
                   parse_facts((DATA / "k2.fct").read_text()))

for k in range(1, 5):
    d = run_chase(kb, Script([Choice.of("r1")] * k + [Choice.of("r2")], then=Fifo()), 100)
    print(f"{k} growth steps before the brake: {len(d.facts)} facts, {d.status.value}")

tree = explore(kb, 6)
print("saturated leaves by depth:", dict(sorted(leaf_depths(tree, "saturated").items())))
print("open leaves by depth:", dict(sorted(leaf_depths(tree, "open").items())))

# delaying the brake forever is unfair, and the decider prunes such prefixes
print("K2:", decide_bf(kb, 20))

bicycle = KnowledgeBase(parse_rules((DATA / "k1.rls").read_text()),
                        parse_facts((DATA / "k1.fct").read_text()))
print("K1:", decide_bf(bicycle, 12))
