"""End-to-end acceptance checks, one per criterion, each with its runtime
bound. Every check prints a PASS or FAIL line; run this file directly to
get just those lines."""

import random
import sys
import time

import pytest

from rchase.engine import (Choice, Derivation, Dfs, Fifo, Random, Script, Status, chase_step,
                           check_dagger_violation, run_chase, run_oblivious)
from rchase.matching import Trigger, active_triggers, find_homomorphisms, is_obsolete, \
    loaded_triggers
from rchase.model import (Atom, Constant, FactSet, KnowledgeBase, Null, RuleError, isomorphic_eq,
                          parse_facts)
from rchase.termination import AcceptedAt, Undecided, decide_bf, explore, internalize, \
    internalized_kb, prime_atom
from rchase.tmred import (compile_ruleset, encode_config, moves_from, parse_machine, run_machine,
                          start_config)
from rchase.validate import (check_bowtie, check_wild_frontier, config_paths, extract_configs,
                             simulate_run, simulation_layers, source_tape, state_atoms)

from oracles import (DATA, all_configurations, dagger_free_prefixes, load_kb, naive_homomorphisms,
                     naive_obsolete, random_facts, random_kb, random_pattern)

# accepting round for K2, frozen from the brute-force oracle below
K2_ACCEPTING_ROUND = 5

b = Constant("b")


def _null(name):
    return Null(name)


def criterion_1():
    kb = load_kb("k1")
    fifo = run_chase(kb, Fifo(), 100)
    model = parse_facts("Bicycle(b) . HasPart(b,_:t) . IsPartOf(_:t,b) . Wheel(_:t) .",
                        allow_nulls=True)
    assert fifo.status is Status.SATURATED, fifo.status
    assert len(fifo.fact_sets()) == 3, len(fifo.fact_sets())
    assert isomorphic_eq(fifo.facts, model)
    middle = Script([
        Choice.of("r1", {"x": b}), Choice.of("r3", {"x": _null("n0_0")}),
        Choice.of("r1", {"x": _null("n1_0")}),
        Choice.of("r2", {"x": _null("n1_0"), "y": _null("n2_0")}),
        Choice.of("r2", {"x": b, "y": _null("n0_0")}),
        Choice.of("r4", {"x": _null("n0_0"), "y": _null("n1_0")})])
    scripted = run_chase(kb, middle, 100)
    assert scripted.status is Status.SATURATED and len(scripted.fact_sets()) == 7
    dfs = run_chase(kb, Dfs(), 50)
    assert dfs.status is Status.BUDGET_EXHAUSTED and len(dfs.steps) == 50
    assert active_triggers(kb.rules, dfs.facts)
    return "Fifo 3 fact sets, script 7 fact sets, Dfs 50 steps still active"


def criterion_2():
    kb = load_kb("k2")
    c = Constant("c")
    for k in (1, 2, 3):
        d = run_chase(kb, Script([Choice.of("r1")] * k + [Choice.of("r2")], then=Fifo()), 100)
        assert d.status is Status.SATURATED
        ts = [_null(f"t{i}") for i in range(1, k + 1)]
        expected = set(kb.database) | {Atom("E", (c, ts[0])), Atom("Real", (b,))}
        expected |= {Atom("E", (ts[i], ts[i + 1])) for i in range(k - 1)}
        expected |= {Atom("E", (t, b)) for t in ts} | {Atom("Real", (t,)) for t in ts}
        assert isomorphic_eq(d.facts, expected), k
    return "k = 1, 2, 3 saturate with the expected model"


def criterion_3():
    longest = dagger_free_prefixes(load_kb("k2"), 30)
    assert longest + 2 == K2_ACCEPTING_ROUND, longest
    verdict = decide_bf(load_kb("k2"), 20)
    assert verdict == AcceptedAt(K2_ACCEPTING_ROUND) and verdict.round <= 8, verdict
    assert decide_bf(load_kb("k1"), 12) == Undecided(12)
    return f"K2 accepted at round {verdict.round}, K1 undecided at 12"


def criterion_4():
    m = parse_machine((DATA / "ex44.tm").read_text())
    c0 = start_config("0")
    assert len(compile_ruleset(m)) == 21
    assert len(encode_config(c0)) == 17
    trace = run_machine(m, c0, 4).trace
    moves = [next(mv for mv, s in moves_from(m, a) if s == nxt)
             for a, nxt in zip(trace, trace[1:])]
    blocks = simulate_run(m, c0, moves)
    fresh = []
    for i, (d, wit) in enumerate(blocks[1:], 1):
        assert wit.rho == trace[i]
        assert check_wild_frontier(d.facts, wit.rho, wit.brake, wit.cells), i
        fresh.append(wit.brake != blocks[i - 1][1].brake)
    assert fresh == [c.q == m.qloop for c in trace[:4]], fresh
    return f"4 blocks with wild frontiers, fresh brakes {fresh}"


def criterion_5():
    m = parse_machine((DATA / "halt.tm").read_text())
    rules = compile_ruleset(m)
    configs = all_configurations(m, 3)
    for c in configs:
        tree = explore(KnowledgeBase(rules, encode_config(c)), 40)
        assert tree.count("open") == 0, c
    return f"{len(configs)} configurations, zero open leaves at depth 40"


def criterion_6():
    fragment = KnowledgeBase([r for r in load_kb("k1").rules if not r.existentials],
                             parse_facts("HasPart(b,t) ."))
    assert len({run_oblivious(fragment, Random(s), 100).facts for s in range(20)}) == 1
    rng = random.Random(11)
    kbs = []
    while len(kbs) < 10:
        # keep KBs whose oblivious chase saturates and invents at least one null
        kb = random_kb(rng, 3, facts=6)
        d = run_oblivious(kb, Fifo(), 200)
        if d.status is Status.SATURATED and d.facts.nulls():
            kbs.append(kb)
    for kb in kbs:
        results = [run_oblivious(kb, Random(s), 200) for s in range(20)]
        assert all(d.status is Status.SATURATED for d in results)
        assert len({d.facts for d in results}) == 1
    return "datalog fragment and 10 random KBs with nulls, 20 seeds each, identical results"


def criterion_7():
    rng = random.Random(5)
    runs = 0
    while runs < 20:
        kb = random_kb(rng, rng.randint(1, 4), facts=6)
        d = run_chase(kb, Fifo(), 30)
        if len(d.steps) < 3:
            continue
        runs += 1
        # a violation of any prefix is also found on the whole derivation
        assert check_dagger_violation(d) is None, kb
    d = run_chase(load_kb("k1"), Dfs(), 50)
    assert check_dagger_violation(d) is not None
    return "20 Fifo runs clean, K1 Dfs run violates"


def criterion_8():
    m = parse_machine((DATA / "ex54.tm").read_text())
    kb = KnowledgeBase(compile_ruleset(m), parse_facts((DATA / "ex54.fct").read_text()))
    layers = simulation_layers(kb, 3)
    counts = {}
    for d in layers[1:]:
        for a in state_atoms(d.facts):
            if a not in d.database:
                assert check_bowtie(d.facts, a), a
                counts.setdefault(a, []).append(len(extract_configs(d.facts, a)))
    first = layers[1]
    [a] = [x for x in state_atoms(first.facts) if x not in first.database]
    sets = extract_configs(first.facts, a)
    assert len(sets) == 4
    tapes = sorted(source_tape(first, p, a.args[1]) for p in config_paths(first.facts, a))
    assert tapes == ["10011", "1001B", "11011", "1101B"], tapes
    assert all(s == sorted(s, reverse=True) for s in counts.values())
    later = [series[0] for x, series in counts.items() if x != a]
    assert later and max(later) <= len(sets)
    return f"bow ties in 3 layers, 4 configurations traced to {tapes}, then {later}"


def _shift(t):
    if isinstance(t, Null):
        s, p = t.id[1:].split("_")
        return Null(f"n{int(s) + 1}_{p}")
    return t


def criterion_9():
    scripts = {"k1": Dfs(), "k2": Script([Choice.of("r1")] * 5 + [Choice.of("r2")])}
    for name, strategy in scripts.items():
        kb = load_kb(name)
        original = run_chase(kb, strategy, 6)
        assert len(original.steps) == 6
        for extra in ((), (Atom("Q", (Constant("e"),)),)):
            ikb = internalized_kb(kb, extra)
            d = chase_step(Derivation.start(ikb), active_triggers(ikb.rules, ikb.database)[0])
            for step in original.steps:
                sub = {v: _shift(t) for v, t in step.trigger.substitution.items()}
                d = chase_step(d, Trigger.of(ikb.rule(step.trigger.rule_id), sub))
            for i in range(7):
                expected = {prime_atom(Atom(a.predicate, tuple(map(_shift, a.args))))
                            for a in original.fact_set(i)} | set(extra)
                assert set(d.fact_set(i + 1)) == expected, (name, extra, i)
        try:
            internalize(KnowledgeBase(kb.rules, FactSet()))
        except RuleError:
            pass
        else:
            raise AssertionError("empty database was not rejected")
    return "K1 and K2, D' empty and {Q(e)}, 6 steps match; empty D rejected"


def criterion_10():
    rng = random.Random(2024)
    for _ in range(200):
        f = random_facts(rng, rng.randint(0, 30))
        pattern = random_pattern(rng, rng.randint(1, 3))
        assert find_homomorphisms(pattern, f) == naive_homomorphisms(pattern, f)
        kb = random_kb(rng, 2, facts=0)
        for t in loaded_triggers(kb.rules, f):
            assert is_obsolete(t, f) == naive_obsolete(t, f)
    return "200 instances agree"


CRITERIA = [
    (1, "bicycle KB under Fifo, script and Dfs", criterion_1, 1.0),
    (2, "emergency brake scripts", criterion_2, 1.0),
    (3, "breadth-first semi-decider", criterion_3, 30.0),
    (4, "reduction replay with wild frontiers", criterion_4, 5.0),
    (5, "halting machine explores to saturation", criterion_5, 60.0),
    (6, "oblivious order independence", criterion_6, 10.0),
    (7, "breadth-first discipline", criterion_7, 10.0),
    (8, "bow ties and configurations", criterion_8, 5.0),
    (9, "internalization replay", criterion_9, 1.0),
    (10, "matching agrees with naive oracles", criterion_10, 30.0),
]


def evaluate(number, title, check, bound):
    start = time.perf_counter()
    try:
        detail = check()
        ok, error = True, None
    except AssertionError as exc:
        ok, error, detail = False, exc, f"assertion failed: {exc!r}"
    elapsed = time.perf_counter() - start
    within = elapsed < bound
    verdict = "PASS" if ok and within else "FAIL"
    line = (f"{verdict} criterion {number}: {title}: {detail} "
            f"[{elapsed:.2f}s, bound {bound:.0f}s]")
    return ok, within, line, error


@pytest.mark.parametrize("number,title,check,bound", CRITERIA, ids=[f"c{c[0]}" for c in CRITERIA])
def test_criterion(number, title, check, bound, capsys):
    ok, within, line, error = evaluate(number, title, check, bound)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line
    assert within, line


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    for _, _, line, _ in results:
        print(line)
    sys.exit(0 if all(ok and within for ok, within, _, _ in results) else 1)
