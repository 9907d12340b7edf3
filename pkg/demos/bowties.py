"""The branching database where the head sits on a diamond: one machine
step turns it into a bow tie whose maximal paths are the four tapes it
represents."""

from pathlib import Path

from rchase.model import KnowledgeBase, parse_facts
from rchase.tmred import compile_ruleset, parse_machine
from rchase.validate import (bowtie, config_paths, extract_configs, read_tape, simulation_layers,
                             source_tape, state_atoms)

DATA = Path(__file__).resolve().parent.parent / "data"
m = parse_machine((DATA / "ex54.tm").read_text())
kb = KnowledgeBase(compile_ruleset(m), parse_facts((DATA / "ex54.fct").read_text()))

for i, d in enumerate(simulation_layers(kb, 3)):
    print(f"layer {i}: {len(d.facts)} facts")
    for a in state_atoms(d.facts):
        if a in d.database:
            continue
        tie = bowtie(d.facts, a)
        w = a.args[1]
        paths = config_paths(d.facts, a)
        print(f"  {a}: center {tie.center[0]} -> {tie.center[1]}, "
              f"{len(extract_configs(d.facts, a))} configurations")
        for p in paths:
            print(f"    tape {read_tape(d.facts, p, w)}  copied from {source_tape(d, p, w)}")
