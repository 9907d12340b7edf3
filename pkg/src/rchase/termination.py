"""Bounded exploration of all restricted chase derivations, the breadth-first
semi-decider for universal termination, and database internalization."""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .engine import Derivation, chase_step
from .matching import active_triggers, is_obsolete
from .model import Atom, FactSet, KnowledgeBase, Rule, RuleError, atom_key

SATURATED = "saturated"
OPEN = "open"
INNER = "inner"


@dataclass
class Node:
    depth: int
    trigger: object  # None at the root
    parent: int  # -1 at the root
    kind: str = INNER
    children: list = field(default_factory=list)


@dataclass
class DerivationTree:
    """Every restricted derivation of a KB up to a depth bound.

    ``nodes[0]`` is the root (the database). A node's children follow the
    canonical order of the active triggers of its fact set.
    """

    kb: KnowledgeBase
    depth: int
    nodes: list

    def leaves(self) -> list:
        return [n for n in self.nodes if n.kind != INNER]

    def path(self, index: int) -> list:
        triggers = []
        while self.nodes[index].parent >= 0:
            triggers.append(self.nodes[index].trigger)
            index = self.nodes[index].parent
        return triggers[::-1]

    def derivation(self, index: int) -> Derivation:
        d = Derivation.start(self.kb)
        for t in self.path(index):
            d = chase_step(d, t)
        return d

    def count(self, kind: str) -> int:
        return sum(1 for n in self.nodes if n.kind == kind)

    def summary(self) -> dict:
        per_depth = {}
        for n in self.leaves():
            row = per_depth.setdefault(n.depth, {SATURATED: 0, OPEN: 0})
            row[n.kind] += 1
        return {
            "depth_bound": self.depth,
            "nodes": len(self.nodes),
            "saturated_leaves": self.count(SATURATED),
            "open_leaves": self.count(OPEN),
            "leaves_by_depth": {str(k): per_depth[k] for k in sorted(per_depth)},
        }


def _grow(d: Derivation, depth: int, bound: int, nodes: list, parent: int, trigger):
    index = len(nodes)
    node = Node(depth, trigger, parent)
    nodes.append(node)
    if parent >= 0:
        nodes[parent].children.append(index)
    active = active_triggers(d.rules, d.facts)
    if not active:
        node.kind = SATURATED
    elif depth == bound:
        node.kind = OPEN
    else:
        for t in active:
            _grow(chase_step(d, t), depth + 1, bound, nodes, index, t)


def _subtree(kb: KnowledgeBase, first, depth: int) -> list:
    nodes = []
    _grow(chase_step(Derivation.start(kb), first), 1, depth, nodes, -1, first)
    return nodes


def explore(kb: KnowledgeBase, depth: int, workers: int = 1) -> DerivationTree:
    """Depth-first construction of the full derivation tree up to ``depth``.

    With ``workers > 1`` the subtrees below the root are built in separate
    processes and spliced back in canonical order, so the result does not
    depend on the worker count.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    root = Derivation.start(kb)
    first = active_triggers(kb.rules, kb.database)
    if workers <= 1 or depth == 0 or len(first) < 2:
        nodes = []
        _grow(root, 0, depth, nodes, -1, None)
        return DerivationTree(kb, depth, nodes)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_subtree, [kb] * len(first), first, [depth] * len(first)))
    nodes = [Node(0, None, -1)]
    for part in parts:
        offset = len(nodes)
        nodes[0].children.append(offset)
        for n in part:
            n.parent = 0 if n.parent < 0 else n.parent + offset
            n.children = [c + offset for c in n.children]
            nodes.append(n)
    return DerivationTree(kb, depth, nodes)


# ---------------------------------------------------------------- decider

@dataclass(frozen=True)
class AcceptedAt:
    round: int


@dataclass(frozen=True)
class Undecided:
    budget: int
    resource_exhausted: bool = False


@dataclass
class _Prefix:
    derivation: Derivation
    active: list  # active triggers of the last fact set
    pending: list  # (k, |active(F_k)|, trigger) not yet seen obsolete
    key: tuple


def decide_bf(kb: KnowledgeBase, max_rounds: int, max_frontier: int = 200_000):
    """Semi-decide termination of every derivation that satisfies the
    breadth-first condition.

    Rounds are numbered from 1, where the only prefix is the database. Round
    i extends every surviving prefix by one step and drops each prefix
    F_1..F_i with a trigger active for some F_k that is still not obsolete
    for F_i although i - k exceeds |active(F_k)|. An empty round accepts.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    start = Derivation.start(kb)
    active = active_triggers(kb.rules, kb.database)
    frontier = [_Prefix(start, active, [(1, len(active), t) for t in active], ())]
    for i in range(2, max_rounds + 1):
        candidates, seen = [], set()
        for prefix in frontier:
            for t in prefix.active:
                child = chase_step(prefix.derivation, t)
                key = prefix.key + (frozenset(child.steps[-1].new),)
                if key in seen:
                    continue
                seen.add(key)
                candidates.append((prefix, child, key))
                if len(candidates) > max_frontier:
                    return Undecided(i, resource_exhausted=True)
        survivors = []
        for prefix, child, key in candidates:
            facts = child.facts
            pending, violated = [], False
            for k, count, t in prefix.pending:
                if is_obsolete(t, facts):
                    continue
                if i - k > count:
                    violated = True
                    break
                pending.append((k, count, t))
            if violated:
                continue
            active = active_triggers(kb.rules, facts)
            pending.extend((i, len(active), t) for t in active)
            survivors.append(_Prefix(child, active, pending, key))
        if not survivors:
            return AcceptedAt(i)
        frontier = survivors
    return Undecided(max_rounds)


# --------------------------------------------------------- internalization

def primed(predicate: str) -> str:
    return predicate + "'"


def prime_atom(a: Atom) -> Atom:
    return Atom(primed(a.predicate), a.args)


def internalize(kb: KnowledgeBase, rule_id: str = "init") -> list:
    """Move the database into the rules so any database yields the same chase.

    Every predicate gets a primed copy, every rule body is conjoined with the
    primed database, and one body-less rule asserts that primed database.
    """
    if not len(kb.database):
        raise RuleError("cannot internalize an empty database: the added rule would have no head")
    facts = [prime_atom(a) for a in sorted(kb.database, key=atom_key)]
    ids = {r.id for r in kb.rules}
    while rule_id in ids:
        rule_id += "_"
    rules = [Rule(r.id, [prime_atom(a) for a in r.body] + facts, [prime_atom(a) for a in r.head])
             for r in kb.rules]
    rules.append(Rule(rule_id, [], facts))
    return rules


def internalized_kb(kb: KnowledgeBase, database=()) -> KnowledgeBase:
    return KnowledgeBase(internalize(kb), FactSet(database))


def verdict_report(verdict) -> dict:
    if isinstance(verdict, AcceptedAt):
        return {"verdict": "accepted", "round": verdict.round}
    return {"verdict": "undecided", "budget": verdict.budget,
            "resource_exhausted": verdict.resource_exhausted}


def leaf_depths(tree: DerivationTree, kind: str) -> Counter:
    return Counter(n.depth for n in tree.nodes if n.kind == kind)
