"""Restricted and oblivious chase derivations, selection strategies, the
breadth-first fairness check, and trace/DOT export."""

from __future__ import annotations

import hashlib
import json
import random
from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum

from .matching import Trigger, active_triggers, is_loaded, is_obsolete, loaded_triggers
from .model import Atom, Constant, FactSet, KnowledgeBase, Null, apply_substitution, atom_key

TRACE_FORMAT = "rchase-trace"
TRACE_VERSION = 1


class Status(str, Enum):
    RUNNING = "running"
    SATURATED = "saturated"
    BUDGET_EXHAUSTED = "budget_exhausted"
    SCRIPT_EXHAUSTED = "script_exhausted"


class InactiveTriggerError(ValueError):
    pass


class NotLoadedError(InactiveTriggerError):
    pass


class ObsoleteTriggerError(InactiveTriggerError):
    pass


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class Step:
    index: int
    trigger: Trigger
    support: tuple
    output: tuple  # the instantiated head
    new: tuple  # the part of the output not present before the step


class Derivation:
    """A finite chase derivation F_0 = D, F_1, ..., F_k.

    Treated as a value: stepping returns a new derivation and leaves the old
    one usable, so branches can be explored independently.
    """

    def __init__(self, kb: KnowledgeBase, facts: FactSet, steps: tuple, sizes: tuple,
                 status: Status = Status.RUNNING, fired: frozenset = frozenset(),
                 oblivious: bool = False):
        self.kb = kb
        self.facts = facts
        self.steps = steps
        self.sizes = sizes
        self.status = status
        self.fired = fired
        self.oblivious = oblivious
        self._provenance = None

    @classmethod
    def start(cls, kb: KnowledgeBase, oblivious: bool = False) -> Derivation:
        return cls(kb, kb.database, (), (len(kb.database),), oblivious=oblivious)

    @property
    def database(self) -> FactSet:
        return self.kb.database

    @property
    def rules(self) -> tuple:
        return self.kb.rules

    def __len__(self) -> int:
        return len(self.steps)

    def fact_set(self, i: int) -> FactSet:
        """F_i, for 0 <= i <= len(self)."""
        if i == len(self.steps):
            return self.facts
        return self.facts.prefix(self.sizes[i])

    def fact_sets(self) -> list:
        return [self.fact_set(i) for i in range(len(self.steps) + 1)]

    @property
    def provenance(self) -> dict:
        """Each non-database fact mapped to the step that first emitted it."""
        if self._provenance is None:
            prov = {}
            for s in self.steps:
                for a in s.new:
                    prov.setdefault(a, s)
            self._provenance = prov
        return self._provenance

    def triggers(self) -> list:
        return [s.trigger for s in self.steps]

    def with_status(self, status: Status) -> Derivation:
        return Derivation(self.kb, self.facts, self.steps, self.sizes, status,
                          self.fired, self.oblivious)

    def _extended(self, step: Step, fired: frozenset) -> Derivation:
        facts = self.facts.extended(step.new)
        return Derivation(self.kb, facts, self.steps + (step,), self.sizes + (len(facts),),
                          self.status, fired, self.oblivious)

    def __repr__(self) -> str:
        return f"<Derivation {len(self.steps)} steps, {len(self.facts)} facts, {self.status.value}>"


def restricted_null(step: int, pos: int) -> Null:
    return Null(f"n{step}_{pos}")


def skolem_null(t: Trigger, pos: int) -> Null:
    """Null determined by the rule, the existential and the frontier bindings."""
    var = t.rule.existentials[pos]
    sub = t.substitution
    frontier = ",".join(f"{v.name}={sub[v]}" for v in t.rule.frontier)
    digest = hashlib.sha1(f"{t.rule_id}|{var.name}|{frontier}".encode()).hexdigest()[:12]
    return Null(f"{t.rule_id}_{var.name}_{digest}")


def trigger_output(t: Trigger, f: FactSet, step: int) -> list:
    """The head of ``t`` with existentials mapped to nulls named ``n{step}_{pos}``."""
    if not is_loaded(t, f):
        raise NotLoadedError(f"trigger {t} is not loaded")
    if is_obsolete(t, f):
        raise ObsoleteTriggerError(f"trigger {t} is obsolete")
    return _instantiate(t, lambda pos: restricted_null(step, pos))


def _instantiate(t: Trigger, namer) -> list:
    sub = t.substitution
    for pos, v in enumerate(t.rule.existentials):
        sub[v] = namer(pos)
    return apply_substitution(sub, t.rule.head)


def _make_step(d: Derivation, t: Trigger, output: list) -> Step:
    new = tuple(dict.fromkeys(a for a in output if a not in d.facts))
    return Step(len(d.steps), t, tuple(t.support()), tuple(output), new)


def _check_known(d: Derivation, t: Trigger):
    if d.kb.rule(t.rule_id) != t.rule:
        raise ValueError(f"trigger {t} uses a rule that is not part of the knowledge base")


def chase_step(d: Derivation, t: Trigger) -> Derivation:
    """Apply an active trigger; the original derivation is left untouched."""
    if d.oblivious:
        raise ValueError("chase_step applies to restricted derivations; use oblivious_step")
    _check_known(d, t)
    output = trigger_output(t, d.facts, len(d.steps))
    return d._extended(_make_step(d, t, output), d.fired)


def oblivious_step(d: Derivation, t: Trigger) -> Derivation:
    _check_known(d, t)
    if not is_loaded(t, d.facts):
        raise NotLoadedError(f"trigger {t} is not loaded")
    if t in d.fired:
        raise InactiveTriggerError(f"trigger {t} has already fired")
    output = _instantiate(t, lambda pos: skolem_null(t, pos))
    return d._extended(_make_step(d, t, output), d.fired | {t})


# -------------------------------------------------------------- strategies

class _Mode:
    """What counts as applicable, and how to apply it."""

    def __init__(self, oblivious: bool):
        self.oblivious = oblivious

    def candidates(self, d: Derivation) -> list:
        if self.oblivious:
            return [t for t in loaded_triggers(d.rules, d.facts) if t not in d.fired]
        return active_triggers(d.rules, d.facts)

    def still_applicable(self, d: Derivation, t: Trigger) -> bool:
        if self.oblivious:
            return t not in d.fired
        return not is_obsolete(t, d.facts)

    def apply(self, d: Derivation, t: Trigger) -> Derivation:
        return oblivious_step(d, t) if self.oblivious else chase_step(d, t)


class _Exhausted(Exception):
    pass


@dataclass(frozen=True)
class Fifo:
    """Apply triggers in the order they were discovered; discovery order
    within one step is the canonical trigger order."""

    def picker(self, mode: _Mode):
        queue, seen = deque(), set()

        def pick(d: Derivation):
            for t in loaded_triggers(d.rules, d.facts):
                if t not in seen:
                    seen.add(t)
                    if mode.still_applicable(d, t):
                        queue.append(t)
            while queue:
                t = queue.popleft()
                if mode.still_applicable(d, t):
                    return t
            return None

        return pick


@dataclass(frozen=True)
class Dfs:
    """Always apply the trigger whose support contains the most recently
    derived fact; ties go to the canonical order."""

    def picker(self, mode: _Mode):
        def pick(d: Derivation):
            best, best_rank = None, None
            for t in mode.candidates(d):
                rank = max((d.facts.position(a) for a in t.support()), default=-1)
                if best is None or rank > best_rank:
                    best, best_rank = t, rank
            return best

        return pick


@dataclass(frozen=True)
class Random:
    seed: int = 0

    def picker(self, mode: _Mode):
        rng = random.Random(self.seed)

        def pick(d: Derivation):
            options = mode.candidates(d)
            return rng.choice(options) if options else None

        return pick


@dataclass(frozen=True)
class Choice:
    """A script entry: a rule id plus some variable bindings (by name).

    It resolves to the first applicable trigger of that rule, in canonical
    order, agreeing with every given binding.
    """

    rule_id: str
    bindings: tuple = ()

    @classmethod
    def of(cls, rule_id: str, bindings: Mapping | None = None) -> Choice:
        return cls(rule_id, tuple(sorted((bindings or {}).items())))

    def matches(self, t: Trigger) -> bool:
        if t.rule_id != self.rule_id:
            return False
        have = t.bindings()
        return all(have.get(name) == term for name, term in self.bindings)

    def __str__(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in self.bindings)
        return f"{self.rule_id}[{inner}]"


def choice_for(t: Trigger) -> Choice:
    """The descriptor of ``t``: its rule id and sorted frontier bindings."""
    sub = t.substitution
    return Choice.of(t.rule_id, {v.name: sub[v] for v in t.rule.frontier})


@dataclass(frozen=True)
class Script:
    """Follow ``choices`` (Choice or Trigger values) in order, then hand over
    to ``then`` if given."""

    choices: tuple
    then: object = None

    def __init__(self, choices: Iterable, then=None):
        object.__setattr__(self, "choices", tuple(choices))
        object.__setattr__(self, "then", then)

    def picker(self, mode: _Mode):
        position = 0
        fallback = None

        def pick(d: Derivation):
            nonlocal position, fallback
            if position < len(self.choices):
                wanted = self.choices[position]
                position += 1
                options = mode.candidates(d)
                for t in options:
                    if (t == wanted) if isinstance(wanted, Trigger) else wanted.matches(t):
                        return t
                raise ScriptError(
                    f"script entry {position} ({wanted}) matches no applicable trigger")
            if self.then is None:
                if mode.candidates(d):
                    raise _Exhausted
                return None
            if fallback is None:
                fallback = self.then.picker(mode)
            return fallback(d)

        return pick


def advance(d: Derivation, strategy, max_steps: int) -> Derivation:
    """Continue ``d`` with ``strategy`` for at most ``max_steps`` more steps."""
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    mode = _Mode(d.oblivious)
    pick = strategy.picker(mode)
    for _ in range(max_steps):
        try:
            t = pick(d)
        except _Exhausted:
            return d.with_status(Status.SCRIPT_EXHAUSTED)
        if t is None:
            return d.with_status(Status.SATURATED)
        d = mode.apply(d, t)
    if mode.candidates(d):
        return d.with_status(Status.BUDGET_EXHAUSTED)
    return d.with_status(Status.SATURATED)


def run_chase(kb: KnowledgeBase, strategy, max_steps: int) -> Derivation:
    return advance(Derivation.start(kb), strategy, max_steps)


def run_oblivious(kb: KnowledgeBase, strategy, max_steps: int) -> Derivation:
    return advance(Derivation.start(kb, oblivious=True), strategy, max_steps)


# ------------------------------------------------------ breadth-first check

def check_dagger_violation(d: Derivation):
    """Earliest (k, trigger) such that the trigger is active for F_k and is
    still not obsolete more than |active(F_k)| steps later, or None.

    Obsolescence is monotone, so it suffices to test the fact set exactly
    one step past the allowed window.
    """
    last = len(d.steps)
    for k in range(last + 1):
        fk = d.fact_set(k)
        active = active_triggers(d.rules, fk)
        deadline = k + len(active) + 1
        if deadline > last:
            continue
        fj = d.fact_set(deadline)
        for t in active:
            if not is_obsolete(t, fj):
                return k, t
    return None


# ------------------------------------------------------------------ export

def trace_records(d: Derivation) -> list:
    return [{
        "index": s.index,
        "rule": s.trigger.rule_id,
        "bindings": {name: str(term) for name, term in s.trigger.bindings().items()},
        "emitted": [str(a) for a in s.output],
        "new": [str(a) for a in s.new],
    } for s in d.steps]


def write_trace(d: Derivation, path) -> None:
    header = {"format": TRACE_FORMAT, "version": TRACE_VERSION, "status": d.status.value,
              "steps": len(d.steps), "oblivious": d.oblivious}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in trace_records(d):
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _dot_id(t) -> str:
    return json.dumps(str(t))


def to_dot(facts: Iterable[Atom], name: str = "facts") -> str:
    """Binary atoms become labelled edges, unary atoms node labels, and
    everything else a box node linked to its arguments by position."""
    facts = sorted(facts, key=atom_key)
    labels = {}
    for a in facts:
        for t in a.args:
            labels.setdefault(t, [])
        if a.arity == 1:
            labels[a.args[0]].append(a.predicate)
    lines = [f"digraph {json.dumps(name)} {{"]
    for t in sorted(labels, key=lambda t: (isinstance(t, Null), str(t))):
        text = str(t) + ("\\n" + " ".join(labels[t]) if labels[t] else "")
        shape = "ellipse" if isinstance(t, Constant) else "circle"
        lines.append(f'  {_dot_id(t)} [label="{text}", shape={shape}];')
    hyper = 0
    for a in facts:
        if a.arity == 2:
            lines.append(f"  {_dot_id(a.args[0])} -> {_dot_id(a.args[1])} "
                         f"[label={json.dumps(a.predicate)}];")
        elif a.arity != 1:
            node = f'"atom{hyper}"'
            hyper += 1
            lines.append(f"  {node} [label={json.dumps(a.predicate)}, shape=box];")
            for i, t in enumerate(a.args):
                lines.append(f"  {node} -> {_dot_id(t)} [label=\"{i + 1}\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"
