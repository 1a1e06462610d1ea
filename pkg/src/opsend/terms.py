"""First-order terms, labels and signatures.

Symbols, labels, term variables and channel names live in disjoint
namespaces; the parser enforces the separation, this module just provides
the value types shared by everything else.  All values are immutable and
hashable so that configurations can be deduplicated during exploration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Union


class ArityClash(Exception):
    """A shared function symbol has two different arities under union."""

    def __init__(self, symbol: str, arity1: int, arity2: int):
        super().__init__(f"arity clash on {symbol!r}: {arity1} vs {arity2}")
        self.symbol = symbol
        self.arity1 = arity1
        self.arity2 = arity2


@dataclass(frozen=True)
class Label:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("label name must be non-empty")

    def __repr__(self):
        return f"Label({self.name})"


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True)
class App:
    sym: str
    args: tuple = ()

    def __repr__(self):
        if not self.args:
            return f"App({self.sym})"
        return f"App({self.sym},{list(self.args)!r})"


Term = Union[Var, App]


@dataclass(frozen=True)
class Signature:
    """Map from function symbol to arity, stored sorted for hashability."""

    functions: tuple = ()

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "Signature":
        return cls(tuple(sorted(mapping.items())))

    def as_dict(self) -> dict:
        return dict(self.functions)

    def arity(self, sym: str):
        for name, ar in self.functions:
            if name == sym:
                return ar
        return None

    def __contains__(self, sym: str) -> bool:
        return self.arity(sym) is not None


EMPTY_SIGNATURE = Signature()


def well_formed(term: Term, sig: Signature) -> bool:
    """Check arities of every application node against the signature."""
    if isinstance(term, Var):
        return True
    if sig.arity(term.sym) != len(term.args):
        return False
    return all(well_formed(a, sig) for a in term.args)


def union_signatures(s1: Signature, s2: Signature) -> Signature:
    """Componentwise union; raises ArityClash when a shared symbol disagrees."""
    merged = s1.as_dict()
    for sym, ar in s2.functions:
        if sym in merged and merged[sym] != ar:
            raise ArityClash(sym, merged[sym], ar)
        merged.setdefault(sym, ar)
    return Signature.of(merged)


def substitute_term(term: Term, binding: Mapping[Var, Term]) -> Term:
    """Simultaneous replacement of variables; terms carry no binders."""
    if isinstance(term, Var):
        return binding.get(term, term)
    return App(term.sym, tuple(substitute_term(a, binding) for a in term.args))


def term_vars(term: Term) -> set:
    if isinstance(term, Var):
        return {term}
    out: set = set()
    for a in term.args:
        out |= term_vars(a)
    return out


def is_ground(term: Term) -> bool:
    return not term_vars(term)


def term_depth(term: Term) -> int:
    if isinstance(term, Var) or not term.args:
        return 0
    return 1 + max(term_depth(a) for a in term.args)


def render_term(term: Term) -> str:
    if isinstance(term, Var):
        return term.name
    if not term.args:
        return term.sym
    return f"{term.sym}({','.join(render_term(a) for a in term.args)})"


def parse_term(text: str, variables: Iterable[str] = ()) -> Term:
    """Parse `f(t1,...,tn)` / bare-atom syntax.

    Identifiers listed in `variables` (or extending one of them with a
    numeric suffix) become Vars, everything else an application.
    """
    stems = set(variables)
    pos = 0
    text = text.strip()

    def error(msg):
        return ValueError(f"term syntax error at column {pos}: {msg}")

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos].isspace():
            pos += 1

    def ident():
        nonlocal pos
        skip_ws()
        start = pos
        while pos < len(text) and (text[pos].isalnum() or text[pos] in "_'"):
            pos += 1
        if start == pos:
            raise error("expected identifier")
        return text[start:pos]

    def is_var(name):
        return name in stems or name.rstrip("0123456789'") in stems

    def atom():
        nonlocal pos
        name = ident()
        skip_ws()
        if pos < len(text) and text[pos] == "(":
            pos += 1
            args = [atom()]
            skip_ws()
            while pos < len(text) and text[pos] == ",":
                pos += 1
                args.append(atom())
                skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise error("expected ')'")
            pos += 1
            return App(name, tuple(args))
        if is_var(name):
            return Var(name)
        return App(name)

    result = atom()
    skip_ws()
    if pos != len(text):
        raise error("trailing input")
    return result
