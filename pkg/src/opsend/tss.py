"""Transition system specifications: rules, union, stratification, derivation.

Negative premises are given meaning through a label-level stratification:
labels are assigned strata such that a rule's positive premises sit at or
below its conclusion's stratum and its negative premises strictly below.
Specifications admitting no such assignment are rejected with a witness
cycle; for the stratifiable class the transition relation is computed as
a stratum-wise least fixed point over rule instantiation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional, Union

from .terms import (
    App,
    ArityClash,
    Label,
    Signature,
    Term,
    Var,
    is_ground,
    render_term,
    substitute_term,
    term_vars,
    union_signatures,
    well_formed,
)


class NotStratifiableError(Exception):
    def __init__(self, cycle):
        names = " -> ".join(l.name for l in cycle)
        super().__init__(f"no label stratification exists; witness cycle: {names}")
        self.cycle = cycle


class DerivationDepthExceeded(Exception):
    pass


class DerivationError(Exception):
    """Malformed rule instance hit during derivation (non-ground term)."""


class NonLinearPattern(Exception):
    pass


@dataclass(frozen=True)
class Positive:
    source: Term
    label: Label
    target: Term


@dataclass(frozen=True)
class Negative:
    source: Term
    label: Label


Formula = Union[Positive, Negative]


@dataclass(frozen=True)
class DeductionRule:
    premises: tuple  # kept ordered: positive premises solve left-to-right
    conclusion: Positive
    name: Optional[str] = None


@dataclass(frozen=True)
class TSS:
    signature: Signature = Signature()
    labels: frozenset = frozenset()
    rules: tuple = ()

    @classmethod
    def of(cls, signature, labels, rules) -> "TSS":
        return cls(signature, frozenset(labels), tuple(sorted(rules, key=repr)))

    # Specifications are embedded (many times) inside process trees, which
    # are themselves sorted and hashed constantly during canonicalization.
    # A cached content digest keeps repr and hash O(1) after first use
    # while staying deterministic across runs (no id(), no hash seed).
    def _content(self) -> str:
        return (f"{self.signature.functions!r}"
                f"|{sorted(l.name for l in self.labels)!r}"
                f"|{[_rule_repr(r) for r in self.rules]!r}")

    def __repr__(self):
        cached = self.__dict__.get("_repr")
        if cached is None:
            digest = hashlib.sha1(self._content().encode()).hexdigest()[:16]
            cached = f"TSS({len(self.rules)} rules, {digest})"
            object.__setattr__(self, "_repr", cached)
        return cached

    def __hash__(self):
        cached = self.__dict__.get("_hash")
        if cached is None:
            cached = hash((self.signature, self.labels, self.rules))
            object.__setattr__(self, "_hash", cached)
        return cached


def _rule_repr(rule: "DeductionRule") -> str:
    return (f"{rule.name}:{rule.premises!r}=>{rule.conclusion!r}")


EMPTY_TSS = TSS()


def union_tss(t1: TSS, t2: TSS) -> TSS:
    sig = union_signatures(t1.signature, t2.signature)
    return TSS.of(sig, t1.labels | t2.labels, set(t1.rules) | set(t2.rules))


def rule_labels(tss: TSS) -> set:
    out = set(tss.labels)
    for rule in tss.rules:
        out.add(rule.conclusion.label)
        for p in rule.premises:
            out.add(p.label)
    return out


def check_rule_patterns(tss: TSS):
    """Conclusion source patterns must be linear in their variables."""
    for rule in tss.rules:
        seen = set()

        def visit(term):
            if isinstance(term, Var):
                if term in seen:
                    raise NonLinearPattern(
                        f"variable {term.name!r} occurs twice in the conclusion "
                        f"source of rule {rule.name or render_term(rule.conclusion.source)!r}")
                seen.add(term)
            else:
                for a in term.args:
                    visit(a)

        visit(rule.conclusion.source)


@dataclass(frozen=True)
class Stratification:
    stratum: tuple  # sorted (Label, int) pairs

    def of_label(self, label: Label) -> int:
        return dict(self.stratum).get(label, 0)

    @property
    def height(self) -> int:
        return max((k for _, k in self.stratum), default=0)


@dataclass(frozen=True)
class NotStratifiable:
    cycle: tuple


def stratify(tss: TSS):
    """Least stratification of the label dependency constraints, or a witness.

    Constraints per rule: stratum(concl) >= stratum(pos premise) and
    stratum(concl) >= stratum(neg premise) + 1.  Solved by longest-path
    relaxation; divergence pinpoints a cycle through a negative edge.
    """
    labels = sorted(rule_labels(tss), key=lambda l: l.name)
    value = {l: 0 for l in labels}
    pred = {}
    constraints = []
    for rule in tss.rules:
        head = rule.conclusion.label
        for p in rule.premises:
            weight = 1 if isinstance(p, Negative) else 0
            constraints.append((p.label, head, weight))
    bound = len(labels)
    for _ in range(bound + 1):
        changed = False
        for src, dst, w in constraints:
            if value[src] + w > value[dst]:
                value[dst] = value[src] + w
                pred[dst] = src
                changed = True
        if not changed:
            return Stratification(tuple(sorted(value.items(), key=lambda kv: kv[0].name)))
    # Still relaxing after |labels| rounds: walk predecessors to a cycle.
    node = max(value, key=lambda l: value[l])
    for _ in range(bound + 1):
        node = pred[node]
    cycle = [node]
    step = pred[node]
    while step != node:
        cycle.append(step)
        step = pred[step]
    cycle.reverse()
    return NotStratifiable(tuple(cycle))


def _match(pattern: Term, term: Term, binding: dict) -> Optional[dict]:
    if isinstance(pattern, Var):
        bound = binding.get(pattern)
        if bound is None:
            out = dict(binding)
            out[pattern] = term
            return out
        return binding if bound == term else None
    if isinstance(term, Var):
        return None
    if pattern.sym != term.sym or len(pattern.args) != len(term.args):
        return None
    for p, t in zip(pattern.args, term.args):
        binding = _match(p, t, binding)
        if binding is None:
            return None
    return binding


def derive_all(tss: TSS, source: Term, max_depth: int = 512) -> set:
    """All pairs (label, target) derivable from source, as a set.

    Positive premises are solved left-to-right by recursion; negative
    premises are checked last against the (strictly lower) finalized
    strata of their label.
    """
    if not is_ground(source):
        raise ValueError(f"source term is not ground: {render_term(source)}")
    strat = stratify(tss)
    if isinstance(strat, NotStratifiable):
        raise NotStratifiableError(strat.cycle)
    check_rule_patterns(tss)
    level = dict(strat.stratum)
    memo: dict = {}

    def solve(term, cap, depth):
        # transitions of `term` whose label stratum is <= cap
        key = (term, cap)
        if key in memo:
            return memo[key]
        if depth > max_depth:
            raise DerivationDepthExceeded(
                f"derivation depth {max_depth} exceeded at {render_term(term)}")
        out = set()
        for rule in tss.rules:
            head = rule.conclusion
            if level.get(head.label, 0) > cap:
                continue
            binding = _match(head.source, term, {})
            if binding is None:
                continue
            positives = [p for p in rule.premises if isinstance(p, Positive)]
            negatives = [p for p in rule.premises if isinstance(p, Negative)]
            for b in _solve_positives(positives, binding, depth):
                if not _negatives_hold(negatives, b, depth):
                    continue
                target = substitute_term(head.target, b)
                if not is_ground(target):
                    free = sorted(v.name for v in term_vars(target))
                    raise DerivationError(
                        f"rule {rule.name or '?'} leaves conclusion target "
                        f"non-ground (unbound: {', '.join(free)})")
                out.add((head.label, target))
        memo[key] = out
        return out

    def _solve_positives(premises, binding, depth):
        if not premises:
            yield binding
            return
        premise, rest = premises[0], premises[1:]
        src = substitute_term(premise.source, binding)
        if not is_ground(src):
            raise DerivationError(
                f"positive premise source {render_term(premise.source)} is not "
                f"ground when solved")
        for label, target in solve(src, level.get(premise.label, 0), depth + 1):
            if label != premise.label:
                continue
            extended = _match(premise.target, target, binding)
            if extended is None:
                continue
            yield from _solve_positives(rest, extended, depth)

    def _negatives_hold(negatives, binding, depth):
        for premise in negatives:
            src = substitute_term(premise.source, binding)
            if not is_ground(src):
                raise DerivationError(
                    f"negative premise source {render_term(premise.source)} is "
                    f"not ground when checked")
            lower = level.get(premise.label, 0)
            found = solve(src, lower, depth + 1)
            if any(label == premise.label for label, _ in found):
                return False
        return True

    height = strat.height if isinstance(strat, Stratification) else 0
    return set(solve(source, height, 0))


def has_any_transition(tss: TSS, source: Term, max_depth: int = 512) -> bool:
    return bool(derive_all(tss, source, max_depth))
