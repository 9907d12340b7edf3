"""Command-line entry point: ``rchase <group> <command> [flags]``.

Exit status is 0 on success, 1 on a domain error or a failed check, and 2
on a usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .engine import (Choice, Derivation, Dfs, Fifo, Random, Script, check_dagger_violation,
                     run_chase, run_oblivious, to_dot, write_trace)
from .model import (FactSet, KnowledgeBase, format_facts, format_rules, parse_atom, parse_facts,
                    parse_rules)
from .termination import AcceptedAt, decide_bf, explore, internalize, verdict_report
from .tmred import (compile_ruleset, encode_config, moves_from, parse_machine, run_machine,
                    start_config)
from .validate import (bowtie, consistency_report, config_paths, read_tape,
                       simulate_run, simulation_layers, state_atoms, wild_frontier_report)

STRATEGIES = ("fifo", "dfs", "random")


class CliError(Exception):
    """A domain problem reported as a one-line diagnostic with exit status 1."""


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _kb(args) -> KnowledgeBase:
    rules = parse_rules(_read(args.rules))
    facts = parse_facts(_read(args.facts)) if args.facts else FactSet()
    return KnowledgeBase(rules, facts)


def _script(path: str) -> list:
    """One entry per line: a rule id followed by ``var=term`` bindings."""
    entries = []
    for raw in _read(path).splitlines():
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        rule_id, *pairs = line.split()
        bindings = {}
        for pair in pairs:
            name, sep, term = pair.partition("=")
            if not sep or not name:
                raise CliError(f"bad binding {pair!r} in {path}")
            bindings[name.lstrip("?")] = parse_atom(f"T({term})").args[0]
        entries.append(Choice.of(rule_id, bindings))
    return entries


def _strategy(args):
    base = {"fifo": Fifo(), "dfs": Dfs(), "random": Random(args.seed)}[args.strategy]
    if getattr(args, "script", None):
        return Script(_script(args.script), then=base)
    return base


def _report(path: str | None, payload: dict) -> None:
    if path:
        _write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _finish_derivation(d: Derivation, args) -> None:
    if args.trace:
        try:
            write_trace(d, args.trace)
        except OSError as exc:
            raise CliError(f"cannot write {args.trace}: {exc.strerror}") from None
    if args.dot:
        _write(args.dot, to_dot(d.facts))


def cmd_chase_run(args, oblivious: bool = False) -> int:
    kb = _kb(args)
    runner = run_oblivious if oblivious else run_chase
    d = runner(kb, _strategy(args), args.max_steps)
    print(f"status: {d.status.value}")
    print(f"steps: {len(d.steps)}")
    print(f"facts: {len(d.facts)}")
    sys.stdout.write(format_facts(d.facts))
    _finish_derivation(d, args)
    _report(args.report, {"status": d.status.value, "steps": len(d.steps),
                          "facts": [str(a) for a in d.facts.sorted()]})
    return 0


def cmd_chase_explore(args) -> int:
    tree = explore(_kb(args), args.depth, workers=args.workers)
    summary = tree.summary()
    print(f"nodes: {summary['nodes']}")
    print(f"saturated leaves: {summary['saturated_leaves']}")
    print(f"open leaves: {summary['open_leaves']}")
    for depth, row in summary["leaves_by_depth"].items():
        print(f"  depth {depth}: {row['saturated']} saturated, {row['open']} open")
    _report(args.report, summary)
    return 0


def cmd_chase_decide(args) -> int:
    verdict = decide_bf(_kb(args), args.max_rounds)
    if isinstance(verdict, AcceptedAt):
        print(f"accepted at round {verdict.round}")
    else:
        reason = " (frontier limit reached)" if verdict.resource_exhausted else ""
        print(f"undecided at round {verdict.budget}{reason}")
    _report(args.report, verdict_report(verdict))
    return 0


def cmd_tm_compile(args) -> int:
    rules = compile_ruleset(parse_machine(_read(args.machine)))
    _write(args.output, format_rules(rules))
    if args.output:
        print(f"{len(rules)} rules written to {args.output}")
    return 0


def cmd_tm_encode(args) -> int:
    m = parse_machine(_read(args.machine))
    facts = encode_config(start_config(args.word, m.start))
    _write(args.output, format_facts(facts))
    if args.output:
        print(f"{len(facts)} facts written to {args.output}")
    return 0


def cmd_tm_run(args) -> int:
    m = parse_machine(_read(args.machine))
    run = run_machine(m, start_config(args.word, m.start), args.max_steps,
                      count_state=m.qloop, policy=args.policy, seed=args.seed)
    for i, c in enumerate(run.trace):
        print(f"{i}: {c}")
    print(f"halted: {'yes' if run.halted else 'no'}")
    print(f"{m.qloop} visits: {run.occurrences}")
    _report(args.report, {"trace": [str(c) for c in run.trace], "halted": run.halted,
                          "qloop_visits": run.occurrences})
    return 0


def _first_run_moves(m, c0, steps: int) -> list:
    run = run_machine(m, c0, steps)
    return [next(mv for mv, s in moves_from(m, a) if s == b)
            for a, b in zip(run.trace, run.trace[1:])]


def cmd_check_wild(args) -> int:
    m = parse_machine(_read(args.machine))
    c0 = start_config(args.word, m.start)
    blocks = simulate_run(m, c0, _first_run_moves(m, c0, args.steps))
    reports = [wild_frontier_report(d.facts, wit) for d, wit in blocks]
    for (d, wit), rep in zip(blocks, reports):
        verdict = "PASS" if rep.passed else f"FAIL ({rep.violated})"
        print(f"after {len(d.steps)} steps: {wit.rho} brake {wit.brake}: {verdict}")
    _report(args.report, {"reports": [r.as_dict() for r in reports]})
    return 0 if all(r.passed for r in reports) else 1


def _layers(args):
    m = parse_machine(_read(args.machine))
    if args.facts:
        database = parse_facts(_read(args.facts))
    else:
        if args.word is None:
            raise CliError("give --facts or --word")
        database = encode_config(start_config(args.word, m.start))
    return m, simulation_layers(KnowledgeBase(compile_ruleset(m), database), args.steps)


def cmd_check_bowtie(args) -> int:
    _, layers = _layers(args)
    entries, ok = [], True
    for i, d in enumerate(layers):
        for a in state_atoms(d.facts):
            if a in d.database:
                continue
            tie = bowtie(d.facts, a)
            ok &= tie is not None
            entry = {"layer": i, "state_atom": str(a), "passed": tie is not None}
            line = f"layer {i}: {a}: {'PASS' if tie else 'FAIL'}"
            if tie is not None:
                w = a.args[1]
                tapes = []
                for path in config_paths(d.facts, a):
                    try:
                        tapes.append(read_tape(d.facts, path, w))
                    except ValueError as exc:
                        tapes.append(f"<{exc}>")
                entry["tapes"] = tapes
                line += f" center {tie.center[0]}->{tie.center[1]}, tapes {' '.join(tapes)}"
            print(line)
            entries.append(entry)
    _report(args.report, {"checker": "bowtie", "entries": entries})
    return 0 if ok else 1


def cmd_check_consistency(args) -> int:
    m = parse_machine(_read(args.machine))
    c0 = start_config(args.word, m.start)
    layers = simulation_layers(KnowledgeBase(compile_ruleset(m), encode_config(c0)), args.steps)
    d = layers[-1]
    reports = [consistency_report(d, a, c0) for a in state_atoms(d.facts)]
    for a, rep in zip(state_atoms(d.facts), reports):
        verdict = "PASS" if rep.passed else f"FAIL ({rep.violated})"
        print(f"{a} ~ {rep.witness['configuration']}: {verdict}")
    _report(args.report, {"reports": [r.as_dict() for r in reports]})
    return 0 if all(r.passed for r in reports) else 1


def cmd_check_dagger(args) -> int:
    d = run_chase(_kb(args), _strategy(args), args.max_steps)
    found = check_dagger_violation(d)
    if found is None:
        print(f"no breadth-first violation in {len(d.steps)} steps ({d.status.value})")
    else:
        k, t = found
        print(f"violation: {t} active at step {k} is not obsolete in time")
    _report(args.report, {"steps": len(d.steps), "status": d.status.value,
                          "violation": None if found is None else
                          {"step": found[0], "trigger": str(found[1])}})
    return 0 if found is None else 1


def cmd_internalize(args) -> int:
    rules = internalize(_kb(args))
    _write(args.output, format_rules(rules))
    return 0


def _parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="rchase", description=__doc__.splitlines()[0])
    groups = top.add_subparsers(dest="group", required=True)

    def kb_flags(p, facts_required=False):
        p.add_argument("--rules", required=True)
        p.add_argument("--facts", required=facts_required)

    def out_flags(p):
        p.add_argument("--report", help="write a JSON report here")

    def run_flags(p):
        p.add_argument("--strategy", choices=STRATEGIES, default="fifo")
        p.add_argument("--script", help="rule choices to follow before the strategy")
        p.add_argument("--max-steps", type=_natural, default=1000)
        p.add_argument("--seed", type=int, default=0)

    chase = groups.add_parser("chase").add_subparsers(dest="command", required=True)
    for name, func in (("run", cmd_chase_run),
                       ("oblivious", lambda a: cmd_chase_run(a, oblivious=True))):
        p = chase.add_parser(name)
        kb_flags(p)
        run_flags(p)
        p.add_argument("--trace")
        p.add_argument("--dot")
        out_flags(p)
        p.set_defaults(func=func)
    p = chase.add_parser("explore")
    kb_flags(p)
    p.add_argument("--depth", type=_natural, required=True)
    p.add_argument("--workers", type=_positive, default=1)
    out_flags(p)
    p.set_defaults(func=cmd_chase_explore)
    p = chase.add_parser("decide-bf")
    kb_flags(p)
    p.add_argument("--max-rounds", type=_positive, default=20)
    out_flags(p)
    p.set_defaults(func=cmd_chase_decide)

    tm = groups.add_parser("tm").add_subparsers(dest="command", required=True)
    p = tm.add_parser("compile")
    p.add_argument("--machine", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_tm_compile)
    p = tm.add_parser("encode")
    p.add_argument("--machine", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_tm_encode)
    p = tm.add_parser("run")
    p.add_argument("--machine", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--max-steps", type=_natural, default=20)
    p.add_argument("--policy", choices=("first", "random"), default="first")
    p.add_argument("--seed", type=int, default=0)
    out_flags(p)
    p.set_defaults(func=cmd_tm_run)

    check = groups.add_parser("check").add_subparsers(dest="command", required=True)
    p = check.add_parser("wild-frontier")
    p.add_argument("--machine", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--steps", type=_natural, default=4)
    out_flags(p)
    p.set_defaults(func=cmd_check_wild)
    p = check.add_parser("bowtie")
    p.add_argument("--machine", required=True)
    p.add_argument("--facts")
    p.add_argument("--word")
    p.add_argument("--steps", type=_natural, default=3)
    out_flags(p)
    p.set_defaults(func=cmd_check_bowtie)
    p = check.add_parser("consistency")
    p.add_argument("--machine", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--steps", type=_natural, default=3)
    out_flags(p)
    p.set_defaults(func=cmd_check_consistency)
    p = check.add_parser("dagger")
    kb_flags(p)
    run_flags(p)
    out_flags(p)
    p.set_defaults(func=cmd_check_dagger)

    transform = groups.add_parser("transform").add_subparsers(dest="command", required=True)
    p = transform.add_parser("internalize")
    kb_flags(p, facts_required=True)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_internalize)
    return top


def _natural(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ValueError) as exc:
        # parse, rule, machine, script and trigger errors are all ValueErrors
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
