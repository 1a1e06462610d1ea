"""Process syntax, transmittables, substitution, and canonical forms.

Processes are immutable trees.  `canonicalize` computes a normal form
modulo structural congruence: parallel and sum components become sorted
multisets with inert units dropped, restrictions are extruded outward over
parallel composition and sorted, replication copies are folded back, and
bound names are renumbered by binding depth for alpha-canonicity.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import rex
from .rex import Hole, Regex, Trace
from .terms import Label, Term
from .tss import TSS, union_tss
from .terms import ArityClash


class NotALanguage(Exception):
    """A language-builder position holds something that is not a TSS."""


# ---------------------------------------------------------------------------
# Transmittable expressions.

@dataclass(frozen=True)
class Chan:
    name: str


@dataclass(frozen=True)
class TssLit:
    tss: TSS


@dataclass(frozen=True)
class UnionL:
    left: "Transmittable"
    right: "Transmittable"


@dataclass(frozen=True)
class RegexE:
    node: Regex


@dataclass(frozen=True)
class TermLit:
    term: Term


Transmittable = Union[Chan, TssLit, UnionL, RegexE, TermLit]


@dataclass(frozen=True)
class Monitor:
    expr: Transmittable
    handler: "Process"


# ---------------------------------------------------------------------------
# Processes.  Par and Sum are n-ary; subjects of prefixes are transmittables
# so that substitution can place anything there (ill-sorted subjects simply
# never communicate and surface as stuck).

@dataclass(frozen=True)
class Nil:
    pass


@dataclass(frozen=True)
class Input:
    subject: Transmittable
    bounds: tuple  # of str; a polyadic receive binds them simultaneously
    cont: "Process"


@dataclass(frozen=True)
class Output:
    subject: Transmittable
    payloads: tuple  # of Transmittable
    cont: "Process"


@dataclass(frozen=True)
class Par:
    parts: tuple


@dataclass(frozen=True)
class Sum:
    parts: tuple


@dataclass(frozen=True)
class Restrict:
    name: str
    body: "Process"


@dataclass(frozen=True)
class Bang:
    body: "Process"


@dataclass(frozen=True)
class Exec:
    lang: Transmittable
    chan: Transmittable
    prog: Transmittable
    trace: Trace = Trace()
    monitors: tuple = ()


@dataclass(frozen=True)
class Verify:
    left: Transmittable
    right: Transmittable
    then: "Process"
    other: "Process"


@dataclass(frozen=True)
class LabelsCheck:
    allowed: tuple  # of Label
    lang: Transmittable
    then: "Process"
    other: "Process"


Process = object

NIL = Nil()


def par(*parts) -> Process:
    return Par(tuple(parts))


def choice(*parts) -> Process:
    return Sum(tuple(parts))


# ---------------------------------------------------------------------------
# Free names.

def free_names_expr(e: Transmittable) -> set:
    if isinstance(e, Chan):
        return {e.name}
    if isinstance(e, UnionL):
        return free_names_expr(e.left) | free_names_expr(e.right)
    if isinstance(e, RegexE):
        return set(rex.regex_holes(e.node))
    return set()


def free_names(p: Process) -> set:
    if isinstance(p, Nil):
        return set()
    if isinstance(p, Input):
        return free_names_expr(p.subject) | (free_names(p.cont) - set(p.bounds))
    if isinstance(p, Output):
        out = free_names_expr(p.subject) | free_names(p.cont)
        for e in p.payloads:
            out |= free_names_expr(e)
        return out
    if isinstance(p, (Par, Sum)):
        out: set = set()
        for part in p.parts:
            out |= free_names(part)
        return out
    if isinstance(p, Restrict):
        return free_names(p.body) - {p.name}
    if isinstance(p, Bang):
        return free_names(p.body)
    if isinstance(p, Exec):
        out = free_names_expr(p.lang) | free_names_expr(p.chan) | free_names_expr(p.prog)
        for m in p.monitors:
            out |= free_names_expr(m.expr) | free_names(m.handler)
        return out
    if isinstance(p, Verify):
        return (free_names_expr(p.left) | free_names_expr(p.right)
                | free_names(p.then) | free_names(p.other))
    if isinstance(p, LabelsCheck):
        return free_names_expr(p.lang) | free_names(p.then) | free_names(p.other)
    raise TypeError(p)


# ---------------------------------------------------------------------------
# Substitution of a transmittable for a free name, capture-avoiding.

def _subst_expr(e: Transmittable, name: str, value: Transmittable) -> Transmittable:
    if isinstance(e, Chan):
        return value if e.name == name else e
    if isinstance(e, UnionL):
        return UnionL(_subst_expr(e.left, name, value),
                      _subst_expr(e.right, name, value))
    if isinstance(e, RegexE):
        if name not in rex.regex_holes(e.node):
            return e
        return RegexE(rex.substitute_holes(e.node, name, _as_regex(value, name)))
    return e


def _as_regex(value: Transmittable, name: str) -> Regex:
    """Shape a transmittable for splicing into a regex position."""
    if isinstance(value, RegexE):
        return value.node
    if isinstance(value, Chan):
        return Hole(value.name)
    # A TSS or term in a regex slot can never become ground; keep a marked
    # hole so activation reports the sort error instead of matching a rule.
    return Hole(f"!illsorted:{name}")


def fresh_name(stem: str, avoid: set) -> str:
    base = stem.split("#")[0] or "n"
    if base not in avoid:
        return base
    i = 1
    while f"{base}#{i}" in avoid:
        i += 1
    return f"{base}#{i}"


def substitute(p: Process, value: Transmittable, name: str) -> Process:
    """Replace free occurrences of `name` in every position by `value`."""
    value_free = free_names_expr(value)

    def go(node):
        if isinstance(node, Nil):
            return node
        if isinstance(node, Input):
            subject = _subst_expr(node.subject, name, value)
            if name in node.bounds:
                return Input(subject, node.bounds, node.cont)
            bounds, cont = list(node.bounds), node.cont
            for i, bound in enumerate(bounds):
                if bound in value_free and name in free_names(cont):
                    renamed = fresh_name(
                        bound, value_free | free_names(cont) | set(bounds) | {name})
                    cont = substitute(cont, Chan(renamed), bound)
                    bounds[i] = renamed
            return Input(subject, tuple(bounds), go(cont))
        if isinstance(node, Output):
            return Output(_subst_expr(node.subject, name, value),
                          tuple(_subst_expr(e, name, value) for e in node.payloads),
                          go(node.cont))
        if isinstance(node, Par):
            return Par(tuple(go(q) for q in node.parts))
        if isinstance(node, Sum):
            return Sum(tuple(go(q) for q in node.parts))
        if isinstance(node, Restrict):
            if node.name == name:
                return node
            bound, body = node.name, node.body
            if bound in value_free and name in free_names(body):
                renamed = fresh_name(bound, value_free | free_names(body) | {name})
                body = substitute(body, Chan(renamed), bound)
                bound = renamed
            return Restrict(bound, go(body))
        if isinstance(node, Bang):
            return Bang(go(node.body))
        if isinstance(node, Exec):
            return Exec(_subst_expr(node.lang, name, value),
                        _subst_expr(node.chan, name, value),
                        _subst_expr(node.prog, name, value),
                        node.trace,
                        tuple(Monitor(_subst_expr(m.expr, name, value), go(m.handler))
                              for m in node.monitors))
        if isinstance(node, Verify):
            return Verify(_subst_expr(node.left, name, value),
                          _subst_expr(node.right, name, value),
                          go(node.then), go(node.other))
        if isinstance(node, LabelsCheck):
            return LabelsCheck(node.allowed,
                               _subst_expr(node.lang, name, value),
                               go(node.then), go(node.other))
        raise TypeError(node)

    return go(p)


# ---------------------------------------------------------------------------
# Language-builder evaluation (the ->lan relation).

def lan_step(e: Transmittable) -> Transmittable:
    """One left-innermost evaluation step of a union expression."""
    if isinstance(e, UnionL):
        if isinstance(e.left, TssLit) and isinstance(e.right, TssLit):
            return TssLit(union_tss(e.left.tss, e.right.tss))
        if not isinstance(e.left, TssLit):
            return UnionL(lan_step(e.left), e.right)
        return UnionL(e.left, lan_step(e.right))
    raise NotALanguage(f"not a language builder: {type(e).__name__}")


def eval_lang(e: Transmittable) -> TSS:
    """Evaluate a ground language builder to a TSS (the ->lan fold)."""
    while not isinstance(e, TssLit):
        e = lan_step(e)
    return e.tss


# ---------------------------------------------------------------------------
# Configurations and canonicalization.

@dataclass(frozen=True)
class Configuration:
    root: Process
    fresh: int = 0
    mode: str = "exact"  # or "prefix"


def _key(p: Process) -> str:
    return repr(p)


def _max_suffix(p: Process) -> int:
    best = 0
    for name in free_names(p) | _bound_names(p):
        if "#" in name:
            tail = name.rsplit("#", 1)[1]
            if tail.isdigit():
                best = max(best, int(tail))
    return best


def _bound_names(p: Process) -> set:
    if isinstance(p, Input):
        return set(p.bounds) | _bound_names(p.cont)
    if isinstance(p, Output):
        return _bound_names(p.cont)
    if isinstance(p, (Par, Sum)):
        out: set = set()
        for q in p.parts:
            out |= _bound_names(q)
        return out
    if isinstance(p, Restrict):
        return {p.name} | _bound_names(p.body)
    if isinstance(p, Bang):
        return _bound_names(p.body)
    if isinstance(p, Exec):
        out = set()
        for m in p.monitors:
            out |= _bound_names(m.handler)
        return out
    if isinstance(p, Verify):
        return _bound_names(p.then) | _bound_names(p.other)
    if isinstance(p, LabelsCheck):
        return _bound_names(p.then) | _bound_names(p.other)
    return set()


def _structure(p: Process) -> Process:
    """One bottom-up normalization pass (no alpha renaming)."""
    if isinstance(p, Par):
        flat = []
        for q in p.parts:
            q = _structure(q)
            if isinstance(q, Nil):
                continue
            if isinstance(q, Par):
                flat.extend(q.parts)
            else:
                flat.append(q)
        # Scope extrusion: lift restrictions of components to this level,
        # freshening when the name collides with anything alongside.
        names: list = []
        changed = True
        while changed:
            changed = False
            for i, q in enumerate(flat):
                if isinstance(q, Restrict):
                    others_free: set = set(names)
                    for j, r in enumerate(flat):
                        if j != i:
                            others_free |= free_names(r)
                    bound, body = q.name, q.body
                    if bound in others_free:
                        renamed = fresh_name(bound, others_free | free_names(body))
                        body = substitute(body, Chan(renamed), bound)
                        bound = renamed
                    names.append(bound)
                    flat[i] = body
                    changed = True
                    break
        flat = [q for q in flat if not isinstance(q, Nil)]
        # Replication folding: P || !P collapses back to !P.  A parallel
        # body has been flattened into the surrounding composition, so it
        # is matched as a sub-multiset of the components.
        folding = True
        while folding:
            folding = False
            for q in flat:
                if not isinstance(q, Bang):
                    continue
                copies = list(q.body.parts) if isinstance(q.body, Par) else [q.body]
                rest = list(flat)
                rest.remove(q)
                if all(c in rest and not rest.remove(c) for c in copies):
                    for c in copies:
                        flat.remove(c)
                    folding = True
                    break
        flat.sort(key=_key)
        if not flat:
            body: Process = NIL
        elif len(flat) == 1:
            body = flat[0]
        else:
            body = Par(tuple(flat))
        return _wrap_restrictions(names, body)
    if isinstance(p, Sum):
        flat = []
        for q in p.parts:
            q = _structure(q)
            if isinstance(q, Nil):
                continue
            if isinstance(q, Sum):
                flat.extend(q.parts)
            else:
                flat.append(q)
        flat.sort(key=_key)
        if not flat:
            return NIL
        if len(flat) == 1:
            return flat[0]
        return Sum(tuple(flat))
    if isinstance(p, Restrict):
        body = _structure(p.body)
        names = [p.name]
        while isinstance(body, Restrict):
            names.append(body.name)
            body = body.body
        return _wrap_restrictions(names, body)
    if isinstance(p, Bang):
        body = _structure(p.body)
        if isinstance(body, Nil):
            return NIL
        return Bang(body)
    if isinstance(p, Input):
        return Input(p.subject, p.bounds, _structure(p.cont))
    if isinstance(p, Output):
        return Output(p.subject, p.payloads, _structure(p.cont))
    if isinstance(p, Exec):
        return Exec(p.lang, p.chan, p.prog, p.trace,
                    tuple(Monitor(m.expr, _structure(m.handler)) for m in p.monitors))
    if isinstance(p, Verify):
        return Verify(p.left, p.right, _structure(p.then), _structure(p.other))
    if isinstance(p, LabelsCheck):
        return LabelsCheck(p.allowed, p.lang, _structure(p.then), _structure(p.other))
    return p


def _wrap_restrictions(names, body: Process) -> Process:
    live = [n for n in dict.fromkeys(names) if n in free_names(body)]
    # Order a block of restrictions by first occurrence in the body's
    # structural encoding; invariant under the nu-swap law.
    enc = _key(body)
    live.sort(key=lambda n: (enc.find(f"'{n}'"), n))
    for n in reversed(live):
        body = Restrict(n, body)
    return body


def _alpha(p: Process, env: dict, depth: int) -> Process:
    def rename(name):
        return env.get(name, name)

    def rename_expr(e):
        if isinstance(e, Chan):
            return Chan(rename(e.name))
        if isinstance(e, UnionL):
            return UnionL(rename_expr(e.left), rename_expr(e.right))
        if isinstance(e, RegexE):
            node = e.node
            for h in rex.regex_holes(node):
                if h in env:
                    node = rex.substitute_holes(node, h, Hole(env[h]))
            return RegexE(node)
        return e

    if isinstance(p, Nil):
        return p
    if isinstance(p, Input):
        inner = dict(env)
        fresh = []
        for i, bound in enumerate(p.bounds):
            new = f"${depth + i}"
            inner[bound] = new
            fresh.append(new)
        return Input(rename_expr(p.subject), tuple(fresh),
                     _alpha(p.cont, inner, depth + len(p.bounds)))
    if isinstance(p, Output):
        return Output(rename_expr(p.subject),
                      tuple(rename_expr(e) for e in p.payloads),
                      _alpha(p.cont, env, depth))
    if isinstance(p, Par):
        return Par(tuple(_alpha(q, env, depth) for q in p.parts))
    if isinstance(p, Sum):
        return Sum(tuple(_alpha(q, env, depth) for q in p.parts))
    if isinstance(p, Restrict):
        new = f"${depth}"
        inner = dict(env)
        inner[p.name] = new
        return Restrict(new, _alpha(p.body, inner, depth + 1))
    if isinstance(p, Bang):
        return Bang(_alpha(p.body, env, depth))
    if isinstance(p, Exec):
        return Exec(rename_expr(p.lang), rename_expr(p.chan), rename_expr(p.prog),
                    p.trace,
                    tuple(Monitor(rename_expr(m.expr), _alpha(m.handler, env, depth))
                          for m in p.monitors))
    if isinstance(p, Verify):
        return Verify(rename_expr(p.left), rename_expr(p.right),
                      _alpha(p.then, env, depth), _alpha(p.other, env, depth))
    if isinstance(p, LabelsCheck):
        return LabelsCheck(p.allowed, rename_expr(p.lang),
                           _alpha(p.then, env, depth), _alpha(p.other, env, depth))
    raise TypeError(p)


def canonical_process(p: Process, max_rounds: int = 8) -> Process:
    previous = None
    for _ in range(max_rounds):
        p = _alpha(_structure(p), {}, 0)
        if p == previous:
            return p
        previous = p
    return p


def canonicalize(c: Configuration) -> Configuration:
    root = canonical_process(c.root)
    return Configuration(root, max(c.fresh, _max_suffix(root) + 1), c.mode)
