import itertools

import pytest
from hypothesis import given, settings, strategies as st

from rchase.model import (Atom, Constant, FactSet, KnowledgeBase, Null, ParseError, Rule,
                          RuleError, Variable, apply_substitution, atom, format_facts,
                          format_rules, isomorphic_eq, parse_atom, parse_facts, parse_rules)

from oracles import DATA

b, t = Constant("b"), Constant("t")
X, Y = Variable("x"), Variable("y")


def test_parse_bicycle_rule():
    [r] = parse_rules("Bicycle(?x) -> HasPart(?x,!y), Wheel(!y) .")
    assert r.id == "r1"
    assert r.frontier == (X,)
    assert r.existentials == (Variable("y", existential=True),)


def test_parse_empty_body_rule():
    [r] = parse_rules("-> P(c) .")
    assert r.body == () and r.head == (atom("P", Constant("c")),)
    assert r.universals == ()


def test_head_only_universal_is_rejected():
    with pytest.raises(ParseError, match="head only"):
        parse_rules("P(?x) -> Q(?y) .")


def test_labels_and_default_ids():
    rules = parse_rules("% comment\nfirst: P(?x) -> Q(?x) .\nQ(?x) -> P(?x) .")
    assert [r.id for r in rules] == ["first", "r2"]


def test_duplicate_label_is_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_rules("a: P(?x) -> Q(?x) . a: Q(?x) -> P(?x) .")


def test_arity_conflict_across_rules():
    with pytest.raises((ParseError, RuleError)):
        KnowledgeBase(parse_rules("P(?x) -> Q(?x) . P(?x, ?y) -> Q(?x) ."), FactSet())


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as info:
        parse_rules("P(?x) ->\n  Q(?x .")
    assert info.value.line == 2


def test_uppercase_term_is_rejected():
    with pytest.raises(ParseError):
        parse_facts("P(Alice) .")


def test_parse_facts_examples():
    assert parse_facts("Bicycle(b).") == {atom("Bicycle", b)}
    assert len(parse_facts("")) == 0
    with pytest.raises(ParseError):
        parse_facts("P(?x).")


def test_nulls_need_permission():
    with pytest.raises(ParseError):
        parse_facts("P(_:n0_0) .")
    assert Null("n0_0") in parse_facts("P(_:n0_0) .", allow_nulls=True).terms()
    assert parse_atom("P(_:n1_0, a)").args == (Null("n1_0"), Constant("a"))


def test_apply_substitution_examples():
    assert apply_substitution({X: b}, [atom("Bicycle", X)]) == [atom("Bicycle", b)]
    atoms = [atom("HasPart", X, Y)]
    assert apply_substitution({}, atoms) == atoms
    assert apply_substitution({X: t, Y: b}, atoms) == [atom("HasPart", t, b)]


def test_apply_substitution_leaves_unmapped_variables():
    assert apply_substitution({X: b}, [atom("E", X, Y)]) == [atom("E", b, Y)]


def test_rule_invariants():
    with pytest.raises(RuleError):
        Rule("r", [atom("P", X)], [])
    with pytest.raises(RuleError):
        Rule("r", [atom("P", Null("n"))], [atom("Q", Null("n"))])
    with pytest.raises(RuleError):
        Rule("r", [atom("P", Variable("y", existential=True))], [atom("Q", X)])


def test_knowledge_base_rejects_nulls():
    with pytest.raises(ValueError, match="nulls"):
        KnowledgeBase([], FactSet([atom("P", Null("n0_0"))]))


def test_factset_indexes_agree():
    f = FactSet([atom("E", b, t), atom("E", t, b), atom("P", b)])
    assert f.with_predicate("E") == {atom("E", b, t), atom("E", t, b)}
    assert f.lookup("E", 0, b) == {atom("E", b, t)}
    assert f.arity_of("E") == 2
    g = f.extended([atom("P", t), atom("P", b)])
    assert len(g) == 4 and len(f) == 3
    assert g.prefix(3) == f
    assert g.position(atom("P", t)) == 3


def test_isomorphic_eq_examples():
    n1, n2, n9 = Null("n1"), Null("n2"), Null("n9")
    assert isomorphic_eq({atom("Wheel", n1)}, {atom("Wheel", n2)})
    assert not isomorphic_eq({atom("Wheel", n1), atom("Wheel", n2)}, {atom("Wheel", n1)})
    left = {atom("Bicycle", b), atom("HasPart", b, Null("n0_0")),
            atom("IsPartOf", Null("n0_0"), b), atom("Wheel", Null("n0_0"))}
    right = {atom("Bicycle", b), atom("HasPart", b, n9), atom("IsPartOf", n9, b),
             atom("Wheel", n9)}
    assert isomorphic_eq(left, right)


def test_isomorphism_fixes_constants():
    assert not isomorphic_eq({atom("P", b)}, {atom("P", t)})
    assert not isomorphic_eq({atom("P", Null("n"))}, {atom("P", b)})


def test_data_files_round_trip():
    for path in sorted(DATA.glob("*.rls")):
        rules = parse_rules(path.read_text())
        assert parse_rules(format_rules(rules)) == rules
    for path in sorted(DATA.glob("*.fct")):
        facts = parse_facts(path.read_text())
        assert parse_facts(format_facts(facts)) == facts


# --- property tests ------------------------------------------------------

names = st.sampled_from(["P", "Q", "E", "HasPart"])
consts = st.sampled_from([Constant(c) for c in "abc"])
nulls = st.sampled_from([Null(f"n{i}") for i in range(4)])


@st.composite
def rules(draw):
    xs = [Variable(v) for v in "xyz"]
    body = [Atom(p, tuple(draw(st.sampled_from(xs + [Constant("a")])) for _ in range(2)))
            for p in draw(st.lists(st.sampled_from(["E", "F"]), min_size=0, max_size=3))]
    universals = [v for a in body for v in a.args if isinstance(v, Variable)]
    pool = universals + [Variable("e", existential=True), Constant("b")]
    head = [Atom(p, tuple(draw(st.sampled_from(pool)) for _ in range(2)))
            for p in draw(st.lists(st.sampled_from(["G", "H"]), min_size=1, max_size=3))]
    return Rule("r", body, head)


@settings(max_examples=200, deadline=None)
@given(st.lists(rules(), min_size=1, max_size=4))
def test_print_parse_round_trip(rs):
    rs = [Rule(f"r{i}", r.body, r.head) for i, r in enumerate(rs)]
    assert parse_rules(format_rules(rs)) == rs


ground = st.builds(lambda p, x, y: Atom(p, (x, y)), st.sampled_from(["E", "F"]),
                   st.one_of(consts, nulls), st.one_of(consts, nulls))


def _brute_isomorphic(a, b):
    na = sorted({t for x in a for t in x.args if isinstance(t, Null)}, key=str)
    nb = sorted({t for x in b for t in x.args if isinstance(t, Null)}, key=str)
    if len(na) != len(nb) or len(a) != len(b):
        return False
    for perm in itertools.permutations(nb):
        m = dict(zip(na, perm))
        if {Atom(x.predicate, tuple(m.get(t, t) for t in x.args)) for x in a} == set(b):
            return True
    return False


@settings(max_examples=300, deadline=None)
@given(st.frozensets(ground, max_size=6), st.frozensets(ground, max_size=6),
       st.permutations([Null(f"n{i}") for i in range(4)]))
def test_isomorphic_eq_matches_brute_force(a, b, perm):
    assert isomorphic_eq(a, b) == _brute_isomorphic(a, b)
    renamed = {Atom(x.predicate, tuple(perm[int(t.id[1:])] if isinstance(t, Null) else t
                                       for t in x.args)) for x in a}
    assert isomorphic_eq(a, renamed)
    assert isomorphic_eq(renamed, a)


@settings(max_examples=200, deadline=None)
@given(st.lists(ground, max_size=8))
def test_substitution_composition(atoms):
    xs = [Variable(v) for v in "xyz"]
    pattern = [Atom(a.predicate, tuple(xs[int(t.id[1:]) % 3] if isinstance(t, Null) else t
                                       for t in a.args)) for a in atoms]
    s1 = {xs[0]: xs[1]}
    s2 = {xs[1]: Constant("a"), xs[2]: Constant("c")}
    composed = {v: apply_substitution(s2, [Atom("_", (s1.get(v, v),))])[0].args[0]
                for v in xs}
    once = apply_substitution(s2, apply_substitution(s1, pattern))
    assert once == apply_substitution(composed, pattern)
