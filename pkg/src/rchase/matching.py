"""Matching rule bodies and heads into fact sets, and the trigger predicates
built on top of it (loaded, obsolete, active)."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field

from .model import Atom, FactSet, Rule, Variable, apply_substitution, term_key, variables_of


@dataclass(frozen=True, slots=True)
class Trigger:
    """A rule together with an assignment of its universal variables."""

    rule_id: str
    sigma: tuple  # ((Variable, term), ...) in the rule's variable order
    rule: Rule = field(compare=False, repr=False)

    @classmethod
    def of(cls, rule: Rule, mapping: Mapping) -> Trigger:
        missing = [v for v in rule.universals if v not in mapping]
        if missing:
            raise ValueError(
                f"trigger for {rule.id} leaves {', '.join(map(str, missing))} unbound")
        return cls(rule.id, tuple((v, mapping[v]) for v in rule.universals), rule)

    @property
    def substitution(self) -> dict:
        return dict(self.sigma)

    def bindings(self) -> dict:
        """Variable name to term."""
        return {v.name: t for v, t in self.sigma}

    def support(self) -> list:
        return apply_substitution(self.substitution, self.rule.body)

    def __str__(self) -> str:
        inner = ", ".join(f"{v.name}={t}" for v, t in self.sigma)
        return f"{self.rule_id}[{inner}]"


def _unify(pattern: Atom, fact: Atom, sub: dict):
    out = None
    for s, t in zip(pattern.args, fact.args):
        if isinstance(s, Variable):
            bound = (sub if out is None else out).get(s)
            if bound is None:
                if out is None:
                    out = dict(sub)
                out[s] = t
            elif bound != t:
                return None
        elif s != t:
            return None
    return sub if out is None else out


def _candidates(a: Atom, f: FactSet, sub: dict):
    best = None
    for i, t in enumerate(a.args):
        if isinstance(t, Variable):
            t = sub.get(t)
            if t is None:
                continue
        found = f.lookup(a.predicate, i, t)
        if best is None or len(found) < len(best):
            best = found
            if not best:
                break
    return f.with_predicate(a.predicate) if best is None else best


def iter_homomorphisms(pattern: list, f: FactSet, sub: dict) -> Iterator[dict]:
    """Unordered stream of extensions of ``sub`` mapping ``pattern`` into ``f``.

    Backtracking join that always expands the atom with the fewest
    candidate facts under the current bindings.
    """
    if not pattern:
        yield sub
        return
    best_i, best = 0, None
    for i, a in enumerate(pattern):
        cands = _candidates(a, f, sub)
        if best is None or len(cands) < len(best):
            best_i, best = i, cands
            if not cands:
                return
    chosen = pattern[best_i]
    rest = pattern[:best_i] + pattern[best_i + 1:]
    for fact in tuple(best):
        if fact.arity != chosen.arity:
            continue
        extended = _unify(chosen, fact, sub)
        if extended is not None:
            yield from iter_homomorphisms(rest, f, extended)


def find_homomorphisms(pattern: Iterable[Atom], f: FactSet, partial: Mapping | None = None) -> list:
    """All substitutions extending ``partial`` that map ``pattern`` into ``f``,
    sorted by the bindings of the pattern's variables in first-occurrence order."""
    pattern = list(pattern)
    sub = dict(partial or {})
    order = variables_of(pattern)
    found = {tuple(s.get(v) for v in order): s for s in iter_homomorphisms(pattern, f, sub)}
    return [found[k] for k in sorted(found, key=lambda k: tuple(term_key(t) for t in k))]


def has_homomorphism(pattern: Iterable[Atom], f: FactSet, partial: Mapping | None = None) -> bool:
    return next(iter_homomorphisms(list(pattern), f, dict(partial or {})), None) is not None


def is_loaded(t: Trigger, f: FactSet) -> bool:
    return all(a in f for a in t.support())


def is_obsolete(t: Trigger, f: FactSet) -> bool:
    return has_homomorphism(t.rule.head, f, t.substitution)


def is_active(t: Trigger, f: FactSet) -> bool:
    return is_loaded(t, f) and not is_obsolete(t, f)


def loaded_triggers(rules: Iterable[Rule], f: FactSet) -> list:
    """Every loaded trigger, ordered by rule position then by bindings."""
    return [Trigger.of(r, s) for r in rules for s in find_homomorphisms(r.body, f)]


def active_triggers(rules: Iterable[Rule], f: FactSet) -> list:
    return [t for t in loaded_triggers(rules, f) if not is_obsolete(t, f)]
