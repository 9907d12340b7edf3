"""Restricted chase for existential rules, with the machinery for studying
its termination: exhaustive exploration, a breadth-first semi-decider, and
a compiler from Turing machines to rule sets plus structural checkers."""

from .engine import (Choice, Derivation, Dfs, Fifo, Random, Script, Status, chase_step,
                     check_dagger_violation, run_chase, run_oblivious)
from .matching import Trigger, active_triggers, find_homomorphisms, is_obsolete
from .model import (Atom, Constant, FactSet, KnowledgeBase, Null, ParseError, Rule, RuleError,
                    Variable, isomorphic_eq, parse_facts, parse_rules)
from .termination import AcceptedAt, Undecided, decide_bf, explore, internalize
from .tmred import Configuration, Machine, compile_ruleset, encode_config, parse_machine

__all__ = [
    "AcceptedAt", "Atom", "Choice", "Configuration", "Constant", "Derivation", "Dfs", "FactSet",
    "Fifo", "KnowledgeBase", "Machine", "Null", "ParseError", "Random", "Rule", "RuleError",
    "Script", "Status", "Trigger", "Undecided", "Variable", "active_triggers", "chase_step",
    "check_dagger_violation", "compile_ruleset", "decide_bf", "encode_config", "explore",
    "find_homomorphisms", "internalize", "is_obsolete", "isomorphic_eq", "parse_facts",
    "parse_machine", "parse_rules", "run_chase", "run_oblivious",
]
