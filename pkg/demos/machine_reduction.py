"""Compile a Turing machine into rules and watch the chase simulate it.

Each machine step is replayed as the exact block of triggers that carries
one wild frontier to the next; whenever the machine leaves qloop, a fresh
brake takes over.
"""

from pathlib import Path

from rchase.model import KnowledgeBase
from rchase.termination import explore
from rchase.tmred import (compile_ruleset, encode_config, moves_from, parse_machine, run_machine,
                          start_config)
from rchase.validate import check_wild_frontier, simulate_run

DATA = Path(__file__).resolve().parent.parent / "data"
m = parse_machine((DATA / "ex44.tm").read_text())
rules = compile_ruleset(m)
c0 = start_config("0")
print(f"{len(rules)} rules, {len(encode_config(c0))} database facts")

run = run_machine(m, c0, 4, count_state=m.qloop)
moves = [next(mv for mv, s in moves_from(m, a) if s == b) for a, b in zip(run.trace, run.trace[1:])]
for d, wit in simulate_run(m, c0, moves):
    ok = check_wild_frontier(d.facts, wit.rho, wit.brake, wit.cells)
    print(f"after {len(d.steps):2} chase steps: {str(wit.rho):16} brake {str(wit.brake):8} "
          f"wild frontier: {ok}")

# a machine with no transitions: every derivation of its rules stops
halting = parse_machine((DATA / "halt.tm").read_text())
tree = explore(KnowledgeBase(compile_ruleset(halting), encode_config(start_config("01"))), 40)
print("halting machine:", tree.summary())
