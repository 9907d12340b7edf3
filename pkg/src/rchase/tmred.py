"""Non-deterministic Turing machines and their compilation into rule sets
whose restricted chase simulates runs, with brakes that a run through the
designated loop state keeps replacing.

Machine files::

    states: q0 qloop
    qloop: qloop
    gamma: 0 1
    delta: q0,0 -> qloop,1,R
    delta: qloop,B -> q0,1,L

``start:`` may name the initial state (default ``q0``). Lines starting with
``%`` or ``#`` are comments.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .model import Atom, Constant, FactSet, Rule, Variable

BLANK = "B"
LEFT, RIGHT = "L", "R"

# fixed predicates of the compiled rule sets
F, R, C_L, C_R = "F", "R", "C_L", "C_R"
REAL, BRAKE, END, NEXT_BRAKE = "Real", "Brake", "End", "nextBr"
LETTER_PREFIX, STATE_PREFIX = "sym_", "st_"


def letter_pred(a: str) -> str:
    return LETTER_PREFIX + a


def state_pred(q: str) -> str:
    return STATE_PREFIX + q


def is_letter_pred(p: str) -> bool:
    return p.startswith(LETTER_PREFIX)


def is_state_pred(p: str) -> bool:
    return p.startswith(STATE_PREFIX)


def letter_of(p: str) -> str:
    return p[len(LETTER_PREFIX):]


def state_of(p: str) -> str:
    return p[len(STATE_PREFIX):]


class MachineError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Move:
    """One entry of the transition relation: in ``state`` reading ``read``,
    switch to ``target``, write ``write`` and move the head by ``direction``."""

    state: str
    read: str
    target: str
    write: str
    direction: str


@dataclass(frozen=True, eq=False)
class Machine:
    states: tuple
    gamma: tuple
    moves: tuple  # of Move
    qloop: str
    start: str = "q0"
    _delta: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "gamma", tuple(self.gamma))
        object.__setattr__(self, "moves", tuple(sorted(set(self.moves))))
        if self.start not in self.states:
            raise MachineError(f"initial state {self.start} is not a state")
        if self.qloop not in self.states:
            raise MachineError(f"qloop state {self.qloop} is not a state")
        if not {"0", "1"} <= set(self.gamma):
            raise MachineError("the alphabet must contain 0 and 1")
        if BLANK in self.gamma:
            raise MachineError("the blank B may not be part of the alphabet")
        delta = {}
        for m in self.moves:
            if m.state not in self.states or m.target not in self.states:
                raise MachineError(f"unknown state in {m}")
            if m.read not in self.symbols:
                raise MachineError(f"unknown read symbol in {m}")
            if m.write not in self.gamma:
                raise MachineError(f"machines write letters of the alphabet, not {m.write!r}")
            if m.direction not in (LEFT, RIGHT):
                raise MachineError(f"direction must be L or R in {m}")
            delta.setdefault((m.state, m.read), []).append(m)
        object.__setattr__(self, "_delta", delta)

    @property
    def symbols(self) -> tuple:
        return self.gamma + (BLANK,)

    def delta(self, state: str, symbol: str) -> list:
        return self._delta.get((state, symbol), [])


def parse_machine(text: str) -> Machine:
    states, gamma, moves = None, None, []
    qloop, start = None, "q0"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%")[0].split("#")[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise MachineError(f"line {lineno}: expected 'key: value'")
        key, value = key.strip(), value.strip()
        if key == "states":
            states = value.split()
        elif key == "gamma":
            gamma = value.split()
        elif key == "qloop":
            qloop = value
        elif key == "start":
            start = value
        elif key == "delta":
            lhs, arrow, rhs = value.partition("->")
            left = [s.strip() for s in lhs.split(",")]
            right = [s.strip() for s in rhs.split(",")]
            if not arrow or len(left) != 2 or len(right) != 3:
                raise MachineError(f"line {lineno}: expected 'delta: q,a -> q2,b,R|L'")
            moves.append(Move(left[0], left[1], right[0], right[1], right[2]))
        else:
            raise MachineError(f"line {lineno}: unknown key {key!r}")
    if states is None or gamma is None or qloop is None:
        raise MachineError("a machine needs 'states:', 'gamma:' and 'qloop:' lines")
    return Machine(tuple(states), tuple(gamma), tuple(moves), qloop, start)


def format_machine(m: Machine) -> str:
    lines = [f"states: {' '.join(m.states)}", f"start: {m.start}", f"qloop: {m.qloop}",
             f"gamma: {' '.join(m.gamma)}"]
    lines += [f"delta: {x.state},{x.read} -> {x.target},{x.write},{x.direction}" for x in m.moves]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True, order=True)
class Configuration:
    """Tape of ``n`` cells (``tape[i-1]`` is cell i), head position ``p``
    counted from 1, and state ``q``."""

    n: int
    tape: tuple
    p: int
    q: str

    def letter(self, i: int) -> str:
        """Cell i, where the cell just past the tape reads as a blank."""
        return BLANK if i == self.n + 1 else self.tape[i - 1]

    def problems(self, m: Machine | None = None) -> list:
        out = []
        if self.n < 1 or len(self.tape) != self.n:
            out.append("tape length must equal n >= 1")
            return out
        if not 1 <= self.p <= self.n:
            out.append("head outside the tape")
        if self.tape[-1] != BLANK:
            out.append("last cell must be blank")
        for i in range(self.n - 1):
            if self.tape[i] == BLANK and self.tape[i + 1] != BLANK:
                out.append("blanks must form a suffix")
                break
        if m is not None:
            if self.q not in m.states:
                out.append(f"unknown state {self.q}")
            if any(a not in m.symbols for a in self.tape):
                out.append("tape symbol outside the alphabet")
        return out

    def is_valid(self, m: Machine | None = None) -> bool:
        return not self.problems(m)

    def __str__(self) -> str:
        cells = "".join(f"[{a}]" if i + 1 == self.p else a for i, a in enumerate(self.tape))
        return f"{self.q}:{cells}"


def start_config(word: str, start: str = "q0") -> Configuration:
    bad = [ch for ch in word if ch not in "01"]
    if bad:
        raise MachineError(f"words are over 0 and 1, got {bad[0]!r}")
    return Configuration(len(word) + 1, tuple(word) + (BLANK,), 1, start)


def successor(c: Configuration, move: Move) -> Configuration:
    tape = list(c.tape)
    tape[c.p - 1] = move.write
    tape.append(BLANK)
    p = c.p + 1 if move.direction == RIGHT else c.p - 1
    return Configuration(c.n + 1, tuple(tape), p, move.target)


def moves_from(m: Machine, c: Configuration) -> list:
    """(move, successor) pairs in canonical order; left moves at cell 1 are dropped."""
    problems = c.problems(m)
    if problems:
        raise MachineError(f"invalid configuration {c}: {problems[0]}")
    return [(mv, successor(c, mv)) for mv in m.delta(c.q, c.letter(c.p))
            if mv.direction == RIGHT or c.p >= 2]


def next_configs(m: Machine, c: Configuration) -> frozenset:
    return frozenset(succ for _, succ in moves_from(m, c))


@dataclass(frozen=True)
class Run:
    trace: tuple
    occurrences: int
    halted: bool


def run_machine(m: Machine, c0: Configuration, max_steps: int, count_state: str | None = None,
                policy: str = "first", seed: int = 0) -> Run:
    """Follow one run for at most ``max_steps`` steps.

    ``policy`` picks among successors: ``"first"`` takes the canonical first,
    ``"random"`` draws with ``random.Random(seed)``.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    if policy not in ("first", "random"):
        raise ValueError(f"unknown policy {policy!r}")
    rng = random.Random(seed)
    trace = [c0]
    for _ in range(max_steps):
        options = sorted(next_configs(m, trace[-1]))
        if not options:
            break
        trace.append(options[0] if policy == "first" else rng.choice(options))
    halted = not next_configs(m, trace[-1])
    occurrences = sum(1 for c in trace if c.q == count_state)
    return Run(tuple(trace), occurrences, halted)


# ------------------------------------------------------------ compilation

def _v(name: str) -> Variable:
    return Variable(name)


def _e(name: str) -> Variable:
    return Variable(name, existential=True)


def br_set(x, w) -> list:
    return [Atom(F, (x, w, w)), Atom(R, (x, w, w)), Atom(REAL, (x,)), Atom(BRAKE, (w,))]


def _dedup(atoms: list) -> list:
    return list(dict.fromkeys(atoms))


def _a(p: str, *args) -> Atom:
    return Atom(p, args)


def transition_rule_id(move: Move, neighbour: str) -> str:
    return f"move_{move.state}_{move.read}_{move.target}_{move.write}_{move.direction}_{neighbour}"


def copy_rule_id(direction: str, a: str) -> str:
    return f"copy{direction}_{a}"


BRAKE_RULE, NEXT_BRAKE_RULE, END_RULE = "brake", "next_brake", "end"


def _transition_rule(m: Machine, mv: Move, c: str) -> Rule:
    x, y, w = _v("x"), _v("y"), _v("w")
    x2, y2 = _e("nx"), _e("ny")
    looping = mv.state == m.qloop
    w2 = _e("nw") if looping else w
    if mv.direction == RIGHT:
        body = [_a(state_pred(mv.state), x, w), _a(letter_pred(mv.read), x, w),
                _a(R, x, y, w), _a(letter_pred(c), y, w)]
        cells = [_a(C_L, x2, w2), _a(C_R, y2, w2), _a(R, x2, y2, w2)]
    else:
        body = [_a(state_pred(mv.state), x, w), _a(letter_pred(mv.read), x, w),
                _a(R, y, x, w), _a(letter_pred(c), y, w)]
        cells = [_a(C_L, y2, w2), _a(C_R, x2, w2), _a(R, y2, x2, w2)]
    body += br_set(x, w) + br_set(y, w)
    head = [_a(state_pred(mv.target), y2, w2), _a(letter_pred(c), y2, w2),
            _a(letter_pred(mv.write), x2, w2)] + cells
    head += [_a(F, x, x2, w2), _a(F, y, y2, w2)] + br_set(x2, w2) + br_set(y2, w2)
    if looping:
        head.append(_a(NEXT_BRAKE, w, w2))
    return Rule(transition_rule_id(mv, c), _dedup(body), _dedup(head))


def compile_ruleset(m: Machine) -> list:
    """The rule set simulating ``m``: brake rules, one rule per transition and
    neighbouring letter, copy rules per letter, and the tape-extension rule."""
    x, y, w = _v("x"), _v("y"), _v("w")
    x1, w1 = _v("nx"), _v("nw")
    y1 = _e("ny")
    rules = []
    head = [_a(letter_pred(a), w, w) for a in m.symbols]
    head += [_a(state_pred(q), w, w) for q in m.states]
    head += [_a(F, w, w, w), _a(R, w, w, w), _a(C_L, w, w), _a(C_R, w, w), _a(REAL, w),
             _a(NEXT_BRAKE, w, w)]
    rules.append(Rule(BRAKE_RULE, [_a(BRAKE, w)], head))
    rules.append(Rule(NEXT_BRAKE_RULE, br_set(x, w) + [_a(NEXT_BRAKE, w, w1)], br_set(x, w1)))
    for mv in m.moves:
        for c in m.symbols:
            rules.append(_transition_rule(m, mv, c))
    for a in m.symbols:
        body = [_a(C_R, x1, w1), _a(F, x, x1, w1), _a(R, x, y, w), _a(letter_pred(a), y, w)]
        body += br_set(x, w) + br_set(x1, w1) + br_set(y, w)
        head = [_a(F, y, y1, w1), _a(R, x1, y1, w1), _a(letter_pred(a), y1, w1),
                _a(C_R, y1, w1)] + br_set(y1, w1)
        rules.append(Rule(copy_rule_id("R", a), _dedup(body), _dedup(head)))
    for a in m.symbols:
        body = [_a(C_L, x1, w1), _a(F, x, x1, w1), _a(R, y, x, w), _a(letter_pred(a), y, w)]
        body += br_set(x, w) + br_set(x1, w1) + br_set(y, w)
        head = [_a(F, y, y1, w1), _a(R, y1, x1, w1), _a(letter_pred(a), y1, w1),
                _a(C_L, y1, w1)] + br_set(y1, w1)
        rules.append(Rule(copy_rule_id("L", a), _dedup(body), _dedup(head)))
    body = [_a(C_R, x1, w1), _a(F, x, x1, w1), _a(END, x, w)] + br_set(x, w) + br_set(x1, w1)
    head = [_a(R, x1, y1, w1), _a(letter_pred(BLANK), y1, w1), _a(END, y1, w1)] + br_set(y1, w1)
    rules.append(Rule(END_RULE, _dedup(body), _dedup(head)))
    return rules


def cell_constants(c: Configuration, prefix: str = "c") -> list:
    return [Constant(f"{prefix}{i}") for i in range(1, c.n + 2)]


def encode_config(c: Configuration, prefix: str = "c", brake: str = "w1") -> FactSet:
    """The database describing ``c``: cells c1..c(n+1) chained by R, one
    letter per cell, the state on the head cell, and an End cell, all
    overseen by the brake w1."""
    cells = cell_constants(c, prefix)
    w = Constant(brake)
    facts = []
    for i in range(1, c.n + 1):
        facts += [_a(R, cells[i - 1], cells[i], w), _a(letter_pred(c.tape[i - 1]), cells[i - 1], w)]
    facts += [_a(state_pred(c.q), cells[c.p - 1], w), _a(letter_pred(BLANK), cells[c.n], w),
              _a(END, cells[c.n], w)]
    for x in cells:
        facts += br_set(x, w)
    return FactSet(facts)
