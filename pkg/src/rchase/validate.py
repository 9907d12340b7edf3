"""Checkers for the structures the machine simulation builds: wild frontiers,
state atoms and their configurations, consistency, bow ties and the
configurations a bow tie represents. Also the exact trigger script that
advances a wild frontier by one machine step."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Mapping
from dataclasses import dataclass

from .engine import Derivation, Fifo, advance, chase_step, restricted_null
from .matching import Trigger, active_triggers, find_homomorphisms
from .model import Atom, Constant, FactSet, KnowledgeBase, Rule, Variable, atom_key, term_key
from .tmred import (BLANK, BRAKE, END, END_RULE, F, LEFT, R, RIGHT, Configuration, Machine,
                    Move, br_set, cell_constants, compile_ruleset, copy_rule_id, encode_config, is_letter_pred,
                    is_state_pred, letter_of, letter_pred, state_of, state_pred, successor,
                    transition_rule_id)


@dataclass(frozen=True)
class CheckReport:
    checker: str
    passed: bool
    witness: dict
    violated: str | None = None

    def as_dict(self) -> dict:
        return {"checker": self.checker, "passed": self.passed,
                "witness": {k: str(v) if not isinstance(v, (list, tuple)) else [str(x) for x in v]
                            for k, v in self.witness.items()},
                "first_violated": self.violated}


def brakes(f: FactSet) -> set:
    return {a.args[0] for a in f.with_predicate(BRAKE)}


# ------------------------------------------------------------ wild frontier

@dataclass(frozen=True)
class WildFrontierWitness:
    rho: Configuration
    brake: object
    cells: tuple  # x_1 .. x_{n+1}


def wild_frontier_problem(f: FactSet, rho: Configuration, w, cells) -> str | None:
    """The first violated condition, or None when ``cells`` and ``w`` form a
    wild frontier of ``rho`` in ``f``."""
    cells = list(cells)
    if len(cells) != rho.n + 1:
        raise ValueError(f"expected {rho.n + 1} cells, got {len(cells)}")
    if Atom("Real", (w,)) in f:
        return f"Real({w}) is present"
    required = []
    for i in range(1, rho.n + 1):
        required += [Atom(R, (cells[i - 1], cells[i], w)),
                     Atom(letter_pred(rho.letter(i)), (cells[i - 1], w))]
    required += [Atom(state_pred(rho.q), (cells[rho.p - 1], w)),
                 Atom(END, (cells[rho.n], w)), Atom(letter_pred(BLANK), (cells[rho.n], w))]
    for x in cells:
        required += br_set(x, w)
    for a in required:
        if a not in f:
            return f"{a} is missing"
    required = set(required)
    first = set(cells)
    for a in f.sorted():
        if a.args and a.args[0] in first and a not in required:
            if a.arity < 2 or a.args[1] != w:
                return f"{a} has {a.args[0]} first but not {w} second"
    return None


def check_wild_frontier(f: FactSet, rho: Configuration, w, cells) -> bool:
    return wild_frontier_problem(f, rho, w, cells) is None


def wild_frontier_report(f: FactSet, witness: WildFrontierWitness) -> CheckReport:
    problem = wild_frontier_problem(f, witness.rho, witness.brake, witness.cells)
    return CheckReport("wild-frontier", problem is None,
                       {"configuration": witness.rho, "brake": witness.brake,
                        "cells": witness.cells}, problem)


def database_witness(c: Configuration, prefix: str = "c", brake: str = "w1") -> WildFrontierWitness:
    return WildFrontierWitness(c, Constant(brake), tuple(cell_constants(c, prefix)))


def transition_script(rules: Mapping, witness: WildFrontierWitness, move: Move,
                      first_step: int) -> tuple:
    """Triggers that carry a wild frontier of ``witness.rho`` through ``move``.

    The transition rule fires first, then the left copies, then the right
    copies, then the tape-extension rule. Nulls are predicted from the step
    numbering, so the list is exact for a derivation with ``first_step``
    steps. Returns the triggers and the witness for the successor.
    """
    rho, w = witness.rho, witness.brake
    n, p = rho.n, rho.p

    def cell(i):
        return witness.cells[i - 1]

    if move.state != rho.q or move.read != rho.letter(p):
        raise ValueError(f"{move} does not apply to {rho}")
    if move.direction == LEFT and p < 2:
        raise ValueError("a left move needs p >= 2")
    triggers, new = [], {}
    step = first_step

    def fire(rule_id, binding):
        nonlocal step
        rule = rules[rule_id]
        triggers.append(Trigger.of(rule, {v: binding[v.name] for v in rule.universals}))
        out = {v.name: restricted_null(step, i) for i, v in enumerate(rule.existentials)}
        step += 1
        return out

    if move.direction == RIGHT:
        out = fire(transition_rule_id(move, rho.letter(p + 1)),
                   {"x": cell(p), "y": cell(p + 1), "w": w})
        new[p], new[p + 1] = out["nx"], out["ny"]
        nw = out.get("nw", w)
        for i in range(1, p):
            out = fire(copy_rule_id("L", rho.letter(p - i)),
                       {"nx": new[p - i + 1], "nw": nw, "x": cell(p - i + 1),
                        "y": cell(p - i), "w": w})
            new[p - i] = out["ny"]
        for i in range(1, n - p + 1):
            out = fire(copy_rule_id("R", rho.letter(p + i + 1)),
                       {"nx": new[p + i], "nw": nw, "x": cell(p + i),
                        "y": cell(p + i + 1), "w": w})
            new[p + i + 1] = out["ny"]
    else:
        out = fire(transition_rule_id(move, rho.letter(p - 1)),
                   {"x": cell(p), "y": cell(p - 1), "w": w})
        new[p], new[p - 1] = out["nx"], out["ny"]
        nw = out.get("nw", w)
        for i in range(1, p - 1):
            out = fire(copy_rule_id("L", rho.letter(p - i - 1)),
                       {"nx": new[p - i], "nw": nw, "x": cell(p - i),
                        "y": cell(p - i - 1), "w": w})
            new[p - i - 1] = out["ny"]
        for i in range(1, n - p + 2):
            out = fire(copy_rule_id("R", rho.letter(p + i)),
                       {"nx": new[p - 1 + i], "nw": nw, "x": cell(p - 1 + i),
                        "y": cell(p + i), "w": w})
            new[p + i] = out["ny"]
    out = fire(END_RULE, {"nx": new[n + 1], "nw": nw, "x": cell(n + 1), "w": w})
    new[n + 2] = out["ny"]
    cells = tuple(new[i] for i in range(1, n + 3))
    return triggers, WildFrontierWitness(successor(rho, move), nw, cells)


def replay_transition(d: Derivation, witness: WildFrontierWitness, move: Move) -> tuple:
    """Apply the script for ``move`` to ``d``; returns (derivation, new witness)."""
    rules = {r.id: r for r in d.rules}
    triggers, after = transition_script(rules, witness, move, len(d.steps))
    for t in triggers:
        d = chase_step(d, t)
    return d, after


def simulate_run(m: Machine, rho0: Configuration, moves) -> list:
    """Start from the database of ``rho0`` and replay one script per move.

    Returns (derivation, witness) after every block, starting with the
    database.
    """
    kb = KnowledgeBase(compile_ruleset(m), encode_config(rho0))
    blocks = [(Derivation.start(kb), database_witness(rho0))]
    for mv in moves:
        blocks.append(replay_transition(*blocks[-1], mv))
    return blocks


# ------------------------------------------------------------- state atoms

def state_atoms(f: FactSet) -> list:
    stop = brakes(f)
    found = [a for p in f.predicates() if is_state_pred(p)
             for a in f.with_predicate(p) if a.arity == 2 and a.args[0] not in stop]
    return sorted(found, key=atom_key)


def precedes(d: Derivation, a: Atom, b: Atom) -> bool:
    return any(a in s.support and b in s.output for s in d.steps)


def rule_move(rule: Rule) -> Move | None:
    """Read the machine transition a compiled transition rule implements,
    from the shape of the rule alone."""
    body_states = [a for a in rule.body if is_state_pred(a.predicate)]
    head_states = [a for a in rule.head if is_state_pred(a.predicate)]
    if len(body_states) != 1 or len(head_states) != 1:
        return None
    x, y2 = body_states[0].args[0], head_states[0].args[0]
    reads = [a for a in rule.body if is_letter_pred(a.predicate) and a.args[0] == x]
    x2s = [a.args[1] for a in rule.head if a.predicate == F and a.args[0] == x]
    if len(reads) != 1 or len(x2s) != 1:
        return None
    x2 = x2s[0]
    writes = [a for a in rule.head if is_letter_pred(a.predicate) and a.args[0] == x2]
    links = {a.args[:2] for a in rule.head if a.predicate == R}
    if (x2, y2) in links:
        direction = RIGHT
    elif (y2, x2) in links:
        direction = LEFT
    else:
        return None
    if len(writes) != 1:
        return None
    return Move(state_of(body_states[0].predicate), letter_of(reads[0].predicate),
                state_of(head_states[0].predicate), letter_of(writes[0].predicate), direction)


def _parent_state(step) -> Atom:
    x = step.trigger.bindings().get("x")
    found = [a for a in step.support if is_state_pred(a.predicate) and a.args[0] == x]
    if len(found) != 1:
        raise ValueError(f"step {step.index} has no unique state atom in its support")
    return found[0]


def conf_of(d: Derivation, a: Atom, rho0: Configuration) -> Configuration:
    """The configuration a state atom stands for: database atoms stand for
    ``rho0``, generated ones for the successor of their parent's
    configuration under the transition of the rule that produced them."""
    if not is_state_pred(a.predicate) or a not in d.facts or a.args[0] in brakes(d.facts):
        raise ValueError(f"{a} is not a state atom of the derivation")
    moves = []
    while a not in d.database:
        step = d.provenance.get(a)
        if step is None:
            raise ValueError(f"no provenance for {a}")
        mv = rule_move(step.trigger.rule)
        if mv is None:
            raise ValueError(f"{a} was produced by {step.trigger.rule_id}, not a transition rule")
        moves.append(mv)
        a = _parent_state(step)
    conf = rho0
    for mv in reversed(moves):
        if conf.q != mv.state or conf.letter(conf.p) != mv.read:
            raise ValueError(f"transition {mv} does not apply to {conf}")
        conf = successor(conf, mv)
    return conf


# ------------------------------------------------------------- consistency

def _r_graph(f: FactSet):
    stop = brakes(f)
    succ, pred = defaultdict(set), defaultdict(set)
    for a in f.with_predicate(R):
        u, v = a.args[0], a.args[1]
        if u not in stop and v not in stop:
            succ[u].add(v)
            pred[v].add(u)
    return succ, pred


def _path_lengths(start, adjacency, limit: int) -> dict:
    """Every length i >= 1 of a walk from ``start`` to each term (bounded)."""
    lengths = defaultdict(set)
    layer = {start}
    for i in range(1, limit + 1):
        layer = {v for u in layer for v in adjacency.get(u, ())}
        if not layer:
            break
        for v in layer:
            lengths[v].add(i)
    return lengths


def associated_atoms(f: FactSet, a: Atom) -> tuple:
    """The atoms over the head cell, the cells R-reachable from it or from
    which it is R-reachable, and the brake in last position only. Also
    returns the forward and backward walk lengths."""
    x, w = a.args
    succ, pred = _r_graph(f)
    limit = len(succ) + len(pred) + 1
    forward = _path_lengths(x, succ, limit)
    backward = _path_lengths(x, pred, limit)
    allowed = {x} | set(forward) | set(backward)
    atoms = [b for b in f.sorted() if b.args
             and all(t in allowed for t in b.args[:-1])
             and (b.args[-1] in allowed or b.args[-1] == w)]
    return atoms, forward, backward


def consistency_problem(f: FactSet, a: Atom, conf: Configuration) -> str | None:
    x, w = a.args
    atoms, forward, backward = associated_atoms(f, a)
    n, p = conf.n, conf.p
    states = [b for b in atoms if is_state_pred(b.predicate)]
    if states != [a]:
        return f"state atoms {states} instead of just {a}"
    if state_of(a.predicate) != conf.q:
        return f"{a} does not carry the state {conf.q}"
    letters = [b for b in atoms if is_letter_pred(b.predicate)]
    at_head = [b for b in letters if x in b.args]
    if at_head != [Atom(letter_pred(conf.letter(p)), (x, w))]:
        return f"letters at the head cell are {at_head}, expected {conf.letter(p)}"
    for b in letters:
        cell, last = b.args
        for i in forward.get(cell, ()):
            if last != w or p + i > n + 1 or conf.letter(p + i) != letter_of(b.predicate):
                return f"{b} is {i} cells right of the head and disagrees with {conf}"
        for i in backward.get(cell, ()):
            if last != w or p - i < 1 or conf.letter(p - i) != letter_of(b.predicate):
                return f"{b} is {i} cells left of the head and disagrees with {conf}"
    ends = [b for b in atoms if b.predicate == END]
    if len(ends) > 1:
        return f"several End atoms {ends}"
    for b in ends:
        cell, last = b.args
        offsets = set(forward.get(cell, ())) | ({0} if cell == x else set())
        if last != w or n + 1 - p not in offsets:
            return f"{b} is not at the end of {conf}"
    return None


def check_consistency(d: Derivation, a: Atom, rho0: Configuration) -> bool:
    return consistency_problem(d.facts, a, conf_of(d, a, rho0)) is None


def consistency_report(d: Derivation, a: Atom, rho0: Configuration) -> CheckReport:
    conf = conf_of(d, a, rho0)
    problem = consistency_problem(d.facts, a, conf)
    return CheckReport("consistency", problem is None,
                       {"state_atom": a, "configuration": conf}, problem)


# ---------------------------------------------------------------- bow ties

class UnionFind:
    def __init__(self, items=()):
        self.parent = {}
        self.size = {}
        for x in items:
            self.add(x)

    def add(self, x):
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]

    def component(self, x) -> set:
        root = self.find(x)
        return {y for y in self.parent if self.find(y) == root}


@dataclass(frozen=True)
class BowTie:
    center: tuple
    left: frozenset
    right: frozenset
    edges: frozenset

    @property
    def vertices(self) -> frozenset:
        return self.left | self.right


def r_component(f: FactSet, term) -> tuple:
    """Weakly connected component of ``term`` over R-edges between non-brakes."""
    stop = brakes(f)
    vertices = {t for t in f.terms() if t not in stop}
    edges = {(a.args[0], a.args[1]) for a in f.with_predicate(R)
             if a.args[0] not in stop and a.args[1] not in stop}
    uf = UnionFind(vertices)
    for u, v in edges:
        uf.union(u, v)
    comp = uf.component(term)
    return comp, {(u, v) for u, v in edges if u in comp}


def _part(vertices: set, edges: set, keep, drop) -> set:
    uf = UnionFind(v for v in vertices if v != drop)
    for u, v in edges:
        if drop not in (u, v):
            uf.union(u, v)
    return uf.component(keep)


def _is_in_tree(part: set, edges: set, root, inverted: bool) -> bool:
    inner = [(u, v) for u, v in edges if u in part and v in part]
    if len(inner) != len(part) - 1:
        return False
    degree = defaultdict(int)
    for u, v in inner:
        degree[u if inverted else v] += 1
    return degree[root] == 0 and all(degree[t] == 1 for t in part if t != root)


def bowtie(f: FactSet, a: Atom) -> BowTie | None:
    """The bow tie around the cell of ``a``, or None if its component is not
    one. Only edges at that cell are tried as the center."""
    x0 = a.args[0]
    if x0 in brakes(f):
        return None
    vertices, edges = r_component(f, x0)
    # two trees joined by the center: no edge may cross between the parts
    if len(edges) != len(vertices) - 1:
        return None
    for x, y in sorted((e for e in edges if x0 in e),
                       key=lambda e: (term_key(e[0]), term_key(e[1]))):
        if x == y:
            continue
        left = _part(vertices, edges, x, y)
        right = _part(vertices, edges, y, x)
        if left & right or left | right != vertices:
            continue
        if _is_in_tree(left, edges, x, inverted=True) and _is_in_tree(right, edges, y, inverted=False):
            return BowTie((x, y), frozenset(left), frozenset(right), frozenset(edges))
    return None


def check_bowtie(f: FactSet, a: Atom) -> bool:
    return bowtie(f, a) is not None


def maximal_paths(tie: BowTie) -> list:
    succ, pred = defaultdict(list), defaultdict(set)
    for u, v in tie.edges:
        succ[u].append(v)
        pred[v].add(u)
    for u in succ:
        succ[u].sort(key=term_key)
    sources = sorted((v for v in tie.vertices if not pred[v]), key=term_key)
    paths = []

    def walk(path):
        nxt = succ.get(path[-1], [])
        if not nxt:
            paths.append(tuple(path))
        for v in nxt:
            walk(path + [v])

    for s in sources:
        walk([s])
    return paths


def config_set(f: FactSet, a: Atom, path) -> FactSet:
    w = a.args[1]
    on_path = set(path)
    kept = [b for b in f if (b.predicate in (R, END) or is_letter_pred(b.predicate))
            and b.args[-1] == w and all(t in on_path for t in b.args[:-1])]
    atoms = [a] + [b for x in path for b in br_set(x, w)] + kept
    return FactSet(atoms)


def extract_configs(f: FactSet, a: Atom) -> list:
    """One fact set per maximal path of the bow tie of ``a``."""
    tie = bowtie(f, a)
    if tie is None:
        raise ValueError(f"the component of {a} is not a bow tie")
    return [config_set(f, a, path) for path in maximal_paths(tie)]


def config_paths(f: FactSet, a: Atom) -> list:
    tie = bowtie(f, a)
    if tie is None:
        raise ValueError(f"the component of {a} is not a bow tie")
    return maximal_paths(tie)


def read_tape(f: FactSet, path, w) -> str:
    """Letters along ``path`` under brake ``w``; each cell needs exactly one."""
    out = []
    for x in path:
        found = [letter_of(b.predicate) for b in f if is_letter_pred(b.predicate)
                 and b.args == (x, w)]
        if len(found) != 1:
            raise ValueError(f"cell {x} carries letters {sorted(found)}")
        out.append(found[0])
    return "".join(out)


def path_configuration(f: FactSet, a: Atom, path) -> Configuration:
    """The configuration spelled by a path through the bow tie of ``a``.

    A final End cell plays the role of the extra encoded cell, so it is
    not part of the tape. The result may break the blank-suffix rules when
    the database did not encode a proper configuration.
    """
    x, w = a.args
    cells = list(path)
    if Atom(END, (cells[-1], w)) in f and len(cells) > 1:
        cells = cells[:-1]
    tape = tuple(read_tape(f, cells, w))
    return Configuration(len(cells), tape, cells.index(x) + 1, state_of(a.predicate))


def embeds_into_encoding(s: FactSet, conf: Configuration) -> bool:
    """Whether ``s`` maps homomorphically into the database of ``conf``."""
    renaming = {t: Variable(f"v{i}") for i, t in enumerate(sorted(s.terms(), key=term_key))}
    pattern = [Atom(b.predicate, tuple(renaming[t] for t in b.args)) for b in s]
    return bool(find_homomorphisms(pattern, encode_config(conf)))


def source_tape(d: Derivation, path, w) -> str:
    """Letters the cells of ``path`` were copied from, one step earlier.

    For each cell, the step that produced its letter read a letter at the
    cell's F-predecessor; that read letter is reported. Cells added by the
    tape-extension rule have no predecessor and are skipped.
    """
    out = []
    for y in path:
        preds = [b.args[0] for b in d.facts.with_predicate(F)
                 if b.args[1] == y and b.args[2] != y]
        if not preds:
            continue
        if len(preds) != 1:
            raise ValueError(f"cell {y} has several predecessors {preds}")
        u = preds[0]
        letters = [b for b in d.facts if is_letter_pred(b.predicate) and b.args == (y, w)]
        step = d.provenance.get(letters[0]) if len(letters) == 1 else None
        if step is None:
            raise ValueError(f"no unique generated letter at {y}")
        read = [b for b in step.support if is_letter_pred(b.predicate) and b.args[0] == u]
        if len(read) != 1:
            raise ValueError(f"step {step.index} does not read a unique letter at {u}")
        out.append(letter_of(read[0].predicate))
    return "".join(out)


# -------------------------------------------------------------- simulation

def simulation_layers(kb: KnowledgeBase, steps: int, max_copies: int = 10_000) -> list:
    """Advance a simulation one machine step at a time, without brakes.

    Each layer fires every active transition trigger (canonical order) and
    then runs the copy and tape-extension rules to saturation with Fifo.
    Brake rules are left out so no overseer becomes real. Returns the
    derivation after each layer, starting with the database.
    """
    moving = [r for r in kb.rules if rule_move(r) is not None]
    copying = [r for r in kb.rules if r.id == END_RULE or r.id.startswith("copy")]
    d = Derivation.start(KnowledgeBase(moving + copying, kb.database))
    layers = [d]
    for _ in range(steps):
        for t in active_triggers(moving, d.facts):
            if t in active_triggers(moving, d.facts):
                d = chase_step(d, t)
        d = _saturate(d, copying, max_copies)
        layers.append(d)
    return layers


def _saturate(d: Derivation, rules: list, budget: int) -> Derivation:
    restricted = Derivation(KnowledgeBase(rules, d.database), d.facts, d.steps, d.sizes)
    done = advance(restricted, Fifo(), budget)
    return Derivation(d.kb, done.facts, done.steps, done.sizes, done.status)
