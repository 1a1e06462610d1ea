"""Regular expressions over labels, traces, and the automata behind them.

Expressions compile to epsilon-NFAs (Thompson construction); inclusion is
decided by determinizing the right-hand side over the union alphabet,
complementing, and testing emptiness of the product with the left-hand
side.  Traces are the concatenation-only sublanguage and get direct
sequence operations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .terms import Label


class AutomatonTooLarge(Exception):
    pass


# ---------------------------------------------------------------------------
# Expression tree.  Hole is a channel-variable awaiting substitution; every
# automaton operation requires a ground (hole-free) expression.

@dataclass(frozen=True)
class Atom:
    label: Label


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Concat:
    left: "Regex"
    right: "Regex"


@dataclass(frozen=True)
class Alt:
    left: "Regex"
    right: "Regex"


@dataclass(frozen=True)
class Star:
    inner: "Regex"


@dataclass(frozen=True)
class Hole:
    name: str


Regex = object

EPSILON = Epsilon()


@dataclass(frozen=True)
class Trace:
    labels: tuple = ()

    def append(self, label: Label) -> "Trace":
        return Trace(self.labels + (label,))

    def __len__(self):
        return len(self.labels)


def concat_all(parts) -> Regex:
    parts = list(parts)
    if not parts:
        return EPSILON
    out = parts[0]
    for p in parts[1:]:
        out = Concat(out, p)
    return out


def alt_all(parts) -> Regex:
    parts = list(parts)
    if not parts:
        raise ValueError("empty alternation")
    out = parts[0]
    for p in parts[1:]:
        out = Alt(out, p)
    return out


def trace_to_regex(tr: Trace) -> Regex:
    return concat_all(Atom(l) for l in tr.labels)


def regex_to_trace(e: Regex) -> Optional[Trace]:
    """Inverse embedding; None when e is not concatenation-only."""
    if isinstance(e, Epsilon):
        return Trace()
    if isinstance(e, Atom):
        return Trace((e.label,))
    if isinstance(e, Concat):
        left = regex_to_trace(e.left)
        right = regex_to_trace(e.right)
        if left is None or right is None:
            return None
        return Trace(left.labels + right.labels)
    return None


def regex_labels(e: Regex) -> set:
    if isinstance(e, Atom):
        return {e.label}
    if isinstance(e, (Concat, Alt)):
        return regex_labels(e.left) | regex_labels(e.right)
    if isinstance(e, Star):
        return regex_labels(e.inner)
    return set()


def regex_holes(e: Regex) -> set:
    if isinstance(e, Hole):
        return {e.name}
    if isinstance(e, (Concat, Alt)):
        return regex_holes(e.left) | regex_holes(e.right)
    if isinstance(e, Star):
        return regex_holes(e.inner)
    return set()


def is_ground(e: Regex) -> bool:
    return not regex_holes(e)


def substitute_holes(e: Regex, name: str, replacement: Regex) -> Regex:
    if isinstance(e, Hole):
        return replacement if e.name == name else e
    if isinstance(e, Concat):
        return Concat(substitute_holes(e.left, name, replacement),
                      substitute_holes(e.right, name, replacement))
    if isinstance(e, Alt):
        return Alt(substitute_holes(e.left, name, replacement),
                   substitute_holes(e.right, name, replacement))
    if isinstance(e, Star):
        return Star(substitute_holes(e.inner, name, replacement))
    return e


def render_regex(e: Regex) -> str:
    def prec(n):
        if isinstance(n, Alt):
            return 0
        if isinstance(n, Concat):
            return 1
        return 2

    def go(n, outer):
        if isinstance(n, Atom):
            s = n.label.name
        elif isinstance(n, Epsilon):
            s = "%e"
        elif isinstance(n, Hole):
            s = n.name
        elif isinstance(n, Concat):
            # Right operand gets parentheses at equal precedence so that
            # the parser's left associativity reproduces this tree shape.
            s = f"{go(n.left, 1)} . {go(n.right, 2)}"
        elif isinstance(n, Alt):
            s = f"{go(n.left, 0)} | {go(n.right, 1)}"
        elif isinstance(n, Star):
            s = f"{go(n.inner, 3)}*"
        else:
            raise TypeError(n)
        if prec(n) < outer:
            return f"({s})"
        return s

    return go(e, 0)


# ---------------------------------------------------------------------------
# Thompson construction.

class Nfa:
    def __init__(self):
        self.n = 0
        self.eps: dict = {}
        self.step: dict = {}  # (state, Label) -> set of states
        self.start = 0
        self.accept = 0

    def new_state(self):
        s = self.n
        self.n += 1
        return s

    def add_eps(self, a, b):
        self.eps.setdefault(a, set()).add(b)

    def add_step(self, a, label, b):
        self.step.setdefault((a, label), set()).add(b)


def compile_regex(e: Regex) -> Nfa:
    if not is_ground(e):
        raise ValueError(f"regex has unsubstituted variables: {sorted(regex_holes(e))}")
    nfa = Nfa()

    def build(n):
        if isinstance(n, Atom):
            a, b = nfa.new_state(), nfa.new_state()
            nfa.add_step(a, n.label, b)
            return a, b
        if isinstance(n, Epsilon):
            a, b = nfa.new_state(), nfa.new_state()
            nfa.add_eps(a, b)
            return a, b
        if isinstance(n, Concat):
            a1, b1 = build(n.left)
            a2, b2 = build(n.right)
            nfa.add_eps(b1, a2)
            return a1, b2
        if isinstance(n, Alt):
            a, b = nfa.new_state(), nfa.new_state()
            a1, b1 = build(n.left)
            a2, b2 = build(n.right)
            nfa.add_eps(a, a1)
            nfa.add_eps(a, a2)
            nfa.add_eps(b1, b)
            nfa.add_eps(b2, b)
            return a, b
        if isinstance(n, Star):
            a, b = nfa.new_state(), nfa.new_state()
            a1, b1 = build(n.inner)
            nfa.add_eps(a, a1)
            nfa.add_eps(a, b)
            nfa.add_eps(b1, a1)
            nfa.add_eps(b1, b)
            return a, b
        raise TypeError(n)

    nfa.start, nfa.accept = build(e)
    return nfa


def _eps_closure(nfa: Nfa, states) -> frozenset:
    seen = set(states)
    stack = list(states)
    while stack:
        s = stack.pop()
        for t in nfa.eps.get(s, ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


def _advance(nfa: Nfa, states: frozenset, label: Label) -> frozenset:
    nxt = set()
    for s in states:
        nxt |= nfa.step.get((s, label), set())
    return _eps_closure(nfa, nxt)


def _live_states(nfa: Nfa) -> frozenset:
    """States from which the accept state is reachable (incl. via eps)."""
    back: dict = {}
    for a, targets in nfa.eps.items():
        for b in targets:
            back.setdefault(b, set()).add(a)
    for (a, _), targets in nfa.step.items():
        for b in targets:
            back.setdefault(b, set()).add(a)
    seen = {nfa.accept}
    stack = [nfa.accept]
    while stack:
        s = stack.pop()
        for t in back.get(s, ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return frozenset(seen)


@dataclass(frozen=True)
class Dfa:
    alphabet: tuple
    transitions: tuple  # transitions[state] is a tuple indexed like alphabet
    accepting: frozenset
    start: int = 0

    def accepts(self, labels) -> bool:
        idx = {l: i for i, l in enumerate(self.alphabet)}
        state = self.start
        for l in labels:
            if l not in idx:
                return False
            state = self.transitions[state][idx[l]]
        return state in self.accepting


def determinize(nfa: Nfa, alphabet: Iterable[Label], max_states: int = 100_000) -> Dfa:
    """Subset construction, total over the given alphabet."""
    alphabet = tuple(sorted(set(alphabet), key=lambda l: l.name))
    start = _eps_closure(nfa, {nfa.start})
    index = {start: 0}
    order = [start]
    rows = []
    i = 0
    while i < len(order):
        current = order[i]
        row = []
        for label in alphabet:
            nxt = _advance(nfa, current, label)
            if nxt not in index:
                if len(index) >= max_states:
                    raise AutomatonTooLarge(f"determinization exceeds {max_states} states")
                index[nxt] = len(order)
                order.append(nxt)
            row.append(index[nxt])
        rows.append(tuple(row))
        i += 1
    accepting = frozenset(i for s, i in index.items() if nfa.accept in s)
    return Dfa(alphabet, tuple(rows), accepting)


def member(tr: Trace, e: Regex) -> bool:
    nfa = compile_regex(e)
    states = _eps_closure(nfa, {nfa.start})
    for label in tr.labels:
        states = _advance(nfa, states, label)
        if not states:
            return False
    return nfa.accept in states


def prefix_feasible(tr: Trace, e: Regex) -> bool:
    """True iff some extension of tr lands in the language of e."""
    nfa = compile_regex(e)
    live = _live_states(nfa)
    states = _eps_closure(nfa, {nfa.start})
    for label in tr.labels:
        states = _advance(nfa, states, label)
        if not (states & live):
            return False
    return bool(states & live)


def include_witness(e1: Regex, e2: Regex, alphabet: Iterable[Label] = (),
                    max_states: int = 100_000) -> Optional[Trace]:
    """None when every string of e1 belongs to e2; otherwise a witness.

    The alphabet is the union of the labels of both expressions plus any
    extra letters supplied by the caller; a letter of e1 unknown to e2
    must exist as a real letter for the complement to be meaningful.
    """
    letters = regex_labels(e1) | regex_labels(e2) | set(alphabet)
    dfa2 = determinize(compile_regex(e2), letters, max_states)
    nfa1 = compile_regex(e1)
    # Product of nfa1 with the complement of dfa2, searched breadth-first.
    idx = {l: i for i, l in enumerate(dfa2.alphabet)}
    start = (_eps_closure(nfa1, {nfa1.start}), dfa2.start)
    seen = {start}
    queue = [(start, ())]
    while queue:
        (states1, s2), path = queue.pop(0)
        if nfa1.accept in states1 and s2 not in dfa2.accepting:
            return Trace(path)
        for label in dfa2.alphabet:
            n1 = _advance(nfa1, states1, label)
            if not n1:
                continue
            n2 = dfa2.transitions[s2][idx[label]]
            key = (n1, n2)
            if key not in seen:
                seen.add(key)
                queue.append((key, path + (label,)))
    return None


def include(e1: Regex, e2: Regex, alphabet: Iterable[Label] = (),
            max_states: int = 100_000) -> bool:
    return include_witness(e1, e2, alphabet, max_states) is None


def is_empty(e: Regex) -> bool:
    """True iff the language of e is empty (relevant once Hole-free)."""
    nfa = compile_regex(e)
    return nfa.start not in _live_states(nfa)


def enumerate_strings(e: Regex, max_length: int):
    """All strings of the language up to max_length, via the automaton."""
    letters = sorted(regex_labels(e), key=lambda l: l.name)
    nfa = compile_regex(e)
    start = _eps_closure(nfa, {nfa.start})
    frontier = [((), start)]
    for _ in range(max_length + 1):
        nxt = []
        for path, states in frontier:
            if nfa.accept in states:
                yield Trace(path)
            for label in letters:
                advanced = _advance(nfa, states, label)
                if advanced:
                    nxt.append((path + (label,), advanced))
        frontier = nxt


# ---------------------------------------------------------------------------
# Text syntax: identifiers as labels, %e for epsilon, '.' concatenation,
# '|' alternation, postfix '*', parentheses.  Precedence: * > . > |

def parse_regex(text: str, resolve: Optional[Callable[[str], Regex]] = None) -> Regex:
    tokens = _tokenize(text)
    pos = 0

    def error(msg):
        return ValueError(f"regex syntax error in {text!r}: {msg}")

    def peek():
        return tokens[pos] if pos < len(tokens) else None

    def eat(tok=None):
        nonlocal pos
        t = peek()
        if t is None or (tok is not None and t != tok):
            raise error(f"expected {tok!r}, found {t!r}")
        pos += 1
        return t

    def parse_alt():
        node = parse_cat()
        while peek() == "|":
            eat("|")
            node = Alt(node, parse_cat())
        return node

    def parse_cat():
        node = parse_star()
        while peek() == ".":
            eat(".")
            node = Concat(node, parse_star())
        return node

    def parse_star():
        node = parse_atom()
        while peek() == "*":
            eat("*")
            node = Star(node)
        return node

    def parse_atom():
        t = peek()
        if t == "(":
            eat("(")
            node = parse_alt()
            eat(")")
            return node
        if t == "%e":
            eat()
            return EPSILON
        if t is None or t in ".|*()":
            raise error(f"expected atom, found {t!r}")
        eat()
        if resolve is not None:
            return resolve(t)
        return Atom(Label(t))

    node = parse_alt()
    if pos != len(tokens):
        raise error(f"trailing input {tokens[pos:]!r}")
    return node


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in ".|*()":
            tokens.append(c)
            i += 1
        elif text.startswith("%e", i):
            tokens.append("%e")
            i += 2
        elif c.isalnum() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            raise ValueError(f"bad character {c!r} in regex {text!r}")
    return tokens
