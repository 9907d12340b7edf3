"""Terms, atoms, rules, fact sets and knowledge bases, plus the text formats.

Rule files look like::

    % the bicycle example
    Bicycle(?x) -> HasPart(?x, !y), Wheel(!y) .
    spare: Wheel(?x) -> IsPartOf(?x, !y), Bicycle(!y) .
    -> P(c) .

``?x`` is a universal variable, ``!y`` an existential one, lowercase
identifiers are constants and ``_:id`` is a labelled null (accepted in fact
files only when ``allow_nulls`` is set, so chase results can be read back).
"""

from __future__ import annotations

import re
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field


@dataclass(frozen=True, slots=True, repr=False)
class Constant:
    name: str

    def __str__(self) -> str:
        return self.name

    __repr__ = __str__


@dataclass(frozen=True, slots=True, repr=False)
class Null:
    id: str

    def __str__(self) -> str:
        return "_:" + self.id

    __repr__ = __str__


@dataclass(frozen=True, slots=True, repr=False)
class Variable:
    name: str
    existential: bool = False

    def __str__(self) -> str:
        return ("!" if self.existential else "?") + self.name

    __repr__ = __str__


Term = Constant | Null | Variable
Substitution = dict  # Variable -> Constant | Null

_DIGITS = re.compile(r"(\d+)")


def _natural(text: str) -> tuple:
    parts = _DIGITS.split(text)
    return tuple(int(p) if i % 2 else p for i, p in enumerate(parts))


def term_key(t: Term) -> tuple:
    """Total order on terms: constants, then nulls, then variables; numbers
    inside names compare numerically so ``n2_0`` sorts before ``n10_0``."""
    if isinstance(t, Constant):
        return (0, _natural(t.name))
    if isinstance(t, Null):
        return (1, _natural(t.id))
    return (2, t.existential, _natural(t.name))


@dataclass(frozen=True, slots=True, repr=False)
class Atom:
    predicate: str
    args: tuple

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(map(str, self.args))})"

    __repr__ = __str__

    def is_ground(self) -> bool:
        return not any(isinstance(t, Variable) for t in self.args)


def atom(predicate: str, *args: Term) -> Atom:
    return Atom(predicate, tuple(args))


def atom_key(a: Atom) -> tuple:
    return (a.predicate, tuple(term_key(t) for t in a.args))


def variables_of(atoms: Iterable[Atom]) -> list:
    """Variables in order of first occurrence."""
    seen = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Variable):
                seen.setdefault(t, None)
    return list(seen)


class RuleError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    id: str
    body: tuple
    head: tuple
    universals: tuple = field(init=False, compare=False, repr=False)
    frontier: tuple = field(init=False, compare=False, repr=False)
    existentials: tuple = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.head:
            raise RuleError(f"rule {self.id}: head must be non-empty")
        for a in self.body + self.head:
            for t in a.args:
                if isinstance(t, Null):
                    raise RuleError(f"rule {self.id}: null {t} in rule")
        body_vars = variables_of(self.body)
        for v in body_vars:
            if v.existential:
                raise RuleError(f"rule {self.id}: existential {v} in body")
        names = {v.name for v in body_vars}
        head_vars = variables_of(self.head)
        for v in head_vars:
            if not v.existential and v not in body_vars:
                raise RuleError(
                    f"rule {self.id}: {v} occurs in the head only and is not existential")
            if v.existential and v.name in names:
                raise RuleError(
                    f"rule {self.id}: {v.name} is used both universally and existentially")
        object.__setattr__(self, "universals", tuple(body_vars))
        object.__setattr__(
            self, "frontier", tuple(v for v in body_vars if v in head_vars))
        object.__setattr__(
            self, "existentials", tuple(v for v in head_vars if v.existential))

    def __str__(self) -> str:
        body = ", ".join(map(str, self.body))
        head = ", ".join(map(str, self.head))
        return f"{self.id}: {body} -> {head} ." if body else f"{self.id}: -> {head} ."


class FactSet:
    """An immutable set of ground atoms that remembers insertion order and
    keeps two indexes: by predicate and by (predicate, position, term)."""

    __slots__ = ("_facts", "_by_pred", "_by_pos", "_arity", "_hash")

    def __init__(self, facts: Iterable[Atom] = ()):
        self._facts = {}
        self._by_pred = defaultdict(set)
        self._by_pos = defaultdict(set)
        self._arity = {}
        self._hash = None
        for a in facts:
            self._add(a)

    def _add(self, a: Atom) -> bool:
        if a in self._facts:
            return False
        if not a.is_ground():
            raise ValueError(f"fact {a} contains a variable")
        known = self._arity.setdefault(a.predicate, a.arity)
        if known != a.arity:
            raise ValueError(
                f"predicate {a.predicate} used with arity {a.arity} and {known}")
        self._facts[a] = len(self._facts)
        self._by_pred[a.predicate].add(a)
        for i, t in enumerate(a.args):
            self._by_pos[(a.predicate, i, t)].add(a)
        return True

    def extended(self, atoms: Iterable[Atom]) -> FactSet:
        """A new fact set holding these facts plus ``atoms``."""
        new = FactSet.__new__(FactSet)
        new._facts = dict(self._facts)
        new._by_pred = defaultdict(set, {k: set(v) for k, v in self._by_pred.items()})
        new._by_pos = defaultdict(set, {k: set(v) for k, v in self._by_pos.items()})
        new._arity = dict(self._arity)
        new._hash = None
        for a in atoms:
            new._add(a)
        return new

    def prefix(self, size: int) -> FactSet:
        """The fact set formed by the first ``size`` inserted facts."""
        return FactSet(a for a, i in self._facts.items() if i < size)

    def position(self, a: Atom) -> int:
        return self._facts[a]

    def with_predicate(self, predicate: str) -> set:
        return self._by_pred.get(predicate, set())

    def lookup(self, predicate: str, pos: int, term: Term) -> set:
        return self._by_pos.get((predicate, pos, term), set())

    def arity_of(self, predicate: str):
        return self._arity.get(predicate)

    def predicates(self) -> set:
        return {p for p, s in self._by_pred.items() if s}

    def terms(self) -> set:
        return {t for a in self._facts for t in a.args}

    def nulls(self) -> set:
        return {t for t in self.terms() if isinstance(t, Null)}

    def sorted(self) -> list:
        return sorted(self._facts, key=atom_key)

    def __contains__(self, a) -> bool:
        return a in self._facts

    def __iter__(self):
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def __eq__(self, other) -> bool:
        if isinstance(other, FactSet):
            return self._facts.keys() == other._facts.keys()
        if isinstance(other, (set, frozenset)):
            return self._facts.keys() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._facts))
        return self._hash

    def __le__(self, other) -> bool:
        return all(a in other for a in self._facts)

    def __repr__(self) -> str:
        return "FactSet({" + ", ".join(map(str, self.sorted())) + "})"


@dataclass(frozen=True)
class KnowledgeBase:
    rules: tuple
    database: FactSet

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not isinstance(self.database, FactSet):
            object.__setattr__(self, "database", FactSet(self.database))
        if self.database.nulls():
            raise ValueError("the database must not contain nulls")
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate rule ids")
        arity = {p: self.database.arity_of(p) for p in self.database.predicates()}
        for r in self.rules:
            for a in r.body + r.head:
                if arity.setdefault(a.predicate, a.arity) != a.arity:
                    raise ValueError(
                        f"predicate {a.predicate} used with conflicting arities")

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(f"unknown rule id {rule_id!r}")


def apply_substitution(s: Mapping, atoms: Iterable[Atom]) -> list:
    return [Atom(a.predicate, tuple(s.get(t, t) for t in a.args)) for a in atoms]


# ---------------------------------------------------------------- parsing

class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


_TOKEN = re.compile(r"""
    (?P<space>[ \t\r\f]+)
  | (?P<newline>\n)
  | (?P<comment>%[^\n]*)
  | (?P<arrow>->)
  | (?P<null>_:[A-Za-z0-9_]+)
  | (?P<uvar>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<evar>![A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_']*)
  | (?P<punct>[(),.:])
""", re.VERBOSE)


def _tokenize(text: str) -> list:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "newline":
            line, line_start = line + 1, m.end()
        elif kind not in ("space", "comment"):
            value = m.group()
            if kind == "punct":
                kind = value
            tokens.append((kind, value, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_variables: bool, allow_nulls: bool):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allow_variables = allow_variables
        self.allow_nulls = allow_nulls
        self.arity = {}

    def peek(self, offset: int = 0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def error(self, message: str, token=None):
        token = token or self.peek()
        return ParseError(message, token[2], token[3])

    def expect(self, kind: str):
        token = self.peek()
        if token[0] != kind:
            shown = token[1] or "end of input"
            raise self.error(f"expected {kind!r}, found {shown!r}")
        self.i += 1
        return token

    def at(self, kind: str) -> bool:
        return self.peek()[0] == kind

    def term(self) -> Term:
        token = self.peek()
        kind, value = token[0], token[1]
        if kind in ("uvar", "evar"):
            if not self.allow_variables:
                raise self.error(f"variable {value} not allowed here")
            self.i += 1
            return Variable(value[1:], existential=kind == "evar")
        if kind == "null":
            if not self.allow_nulls:
                raise self.error(f"null {value} not allowed here")
            self.i += 1
            return Null(value[2:])
        if kind == "ident":
            if value[0].isupper():
                raise self.error(f"{value} is not a term (constants start lowercase)")
            self.i += 1
            return Constant(value)
        raise self.error(f"expected a term, found {value or 'end of input'!r}")

    def atom(self) -> Atom:
        token = self.expect("ident")
        args = []
        if self.at("("):
            self.i += 1
            if not self.at(")"):
                args.append(self.term())
                while self.at(","):
                    self.i += 1
                    args.append(self.term())
            self.expect(")")
        name = token[1]
        known = self.arity.setdefault(name, len(args))
        if known != len(args):
            raise self.error(
                f"predicate {name} used with arity {len(args)}, earlier {known}", token)
        return Atom(name, tuple(args))

    def atoms(self) -> list:
        result = [self.atom()]
        while self.at(","):
            self.i += 1
            result.append(self.atom())
        return result


def parse_rules(text: str) -> list:
    p = _Parser(text, allow_variables=True, allow_nulls=False)
    rules, ids = [], set()
    while not p.at("eof"):
        start = p.peek()
        label = None
        if p.at("ident") and p.peek(1)[0] == ":":
            label = p.peek()[1]
            p.i += 2
        body = [] if p.at("arrow") else p.atoms()
        p.expect("arrow")
        head = p.atoms()
        p.expect(".")
        rule_id = label or f"r{len(rules) + 1}"
        if rule_id in ids:
            raise p.error(f"duplicate rule id {rule_id}", start)
        ids.add(rule_id)
        try:
            rules.append(Rule(rule_id, body, head))
        except RuleError as exc:
            raise ParseError(str(exc), start[2], start[3]) from None
    return rules


def parse_facts(text: str, allow_nulls: bool = False) -> FactSet:
    p = _Parser(text, allow_variables=False, allow_nulls=allow_nulls)
    facts = []
    while not p.at("eof"):
        facts.extend(p.atoms())
        p.expect(".")
    return FactSet(facts)


def parse_atom(text: str) -> Atom:
    """A single ground atom, nulls allowed; used for command-line arguments."""
    p = _Parser(text, allow_variables=False, allow_nulls=True)
    a = p.atom()
    if p.at("."):
        p.i += 1
    p.expect("eof")
    return a


def format_rules(rules: Iterable[Rule]) -> str:
    return "".join(str(r) + "\n" for r in rules)


def format_facts(facts: Iterable[Atom]) -> str:
    return "".join(f"{a} .\n" for a in sorted(facts, key=atom_key))


# ------------------------------------------------------------ isomorphism

def isomorphic_eq(a: Iterable[Atom], b: Iterable[Atom]) -> bool:
    """True iff a bijection on nulls, fixing constants, maps ``a`` onto ``b``."""
    a, b = FactSet(a), FactSet(b)
    if len(a) != len(b) or len(a.nulls()) != len(b.nulls()):
        return False
    ground_a = {x for x in a if not any(isinstance(t, Null) for t in x.args)}
    ground_b = {x for x in b if not any(isinstance(t, Null) for t in x.args)}
    if ground_a != ground_b:
        return False

    def signature(fs, n):
        return sorted((x.predicate, i) for x in fs for i, t in enumerate(x.args) if t == n)

    sig_b = defaultdict(int)
    for n in b.nulls():
        sig_b[tuple(signature(b, n))] += 1
    sig_a = defaultdict(int)
    for n in a.nulls():
        sig_a[tuple(signature(a, n))] += 1
    if sig_a != sig_b:
        return False

    pending = sorted((x for x in a if x not in ground_a), key=atom_key)
    mapping, used = {}, set()

    def candidates(x):
        return [y for y in b.with_predicate(x.predicate) if y not in ground_b]

    def extend(i):
        if i == len(pending):
            return True
        x = pending[i]
        for y in candidates(x):
            added = []
            ok = True
            for s, t in zip(x.args, y.args):
                if isinstance(s, Null):
                    if s in mapping:
                        ok = mapping[s] == t
                    elif isinstance(t, Null) and t not in used:
                        mapping[s] = t
                        used.add(t)
                        added.append(s)
                    else:
                        ok = False
                else:
                    ok = s == t
                if not ok:
                    break
            if ok and extend(i + 1):
                return True
            for s in added:
                used.discard(mapping.pop(s))
        return False

    return extend(0)
