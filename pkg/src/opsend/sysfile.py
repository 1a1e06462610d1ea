"""The `.lns` system-file format: lexer, parser, validation, save.

A file declares named TSS blocks, named regular expressions, named
processes, one entry process, and options.  TSS rule templates may be
schematic in an action metavariable (`actvar`), which expands over the
declared `acts`; `co(A)` denotes the complement action under the `co_`
name convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import rex
from .calculus import (
    Chan,
    Exec,
    Input,
    LabelsCheck,
    Monitor,
    NIL,
    Output,
    Par,
    Process,
    RegexE,
    Restrict,
    Sum,
    TermLit,
    Transmittable,
    TssLit,
    UnionL,
    Verify,
    Bang,
)
from .render import render_process, render_regex, render_term
from .terms import App, Label, Signature, Term, Var
from .tss import TSS, DeductionRule, Negative, Positive, check_rule_patterns

KEYWORDS = {"tss", "regex", "proc", "system", "option", "labels", "ops", "vars",
            "acts", "actvar", "rule", "new", "exec", "verify", "union", "tm", "rx"}


class ParseError(Exception):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


class ValidationError(Exception):
    def __init__(self, message, line=0, col=0):
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Declarative form of a TSS block, kept for save/round-trip; `expand`
# produces the TSS value.

@dataclass(frozen=True)
class PremiseTemplate:
    source: Term
    label: str
    target: Optional[Term]  # None marks a negative premise


@dataclass(frozen=True)
class RuleTemplate:
    name: str
    premises: tuple
    source: Term
    label: str
    target: Term


@dataclass(frozen=True)
class TssBlock:
    name: str
    labels: tuple
    ops: tuple  # (symbol, arity) pairs
    vars: tuple
    acts: tuple = ()
    actvars: tuple = ()
    rules: tuple = ()

    def expand(self) -> TSS:
        rules = []
        for template in self.rules:
            used = sorted(self._metas_of(template))
            if not used:
                rules.append(self._instantiate(template, {}))
            else:
                combos = [{}]
                for meta in used:
                    combos = [dict(c, **{meta: act})
                              for c in combos for act in self.acts]
                for combo in combos:
                    rules.append(self._instantiate(template, combo))
        return TSS.of(Signature.of(dict(self.ops)),
                      {Label(l) for l in self.labels}, rules)

    def _metas_of(self, template: RuleTemplate) -> set:
        metas = set()
        labels = [template.label] + [p.label for p in template.premises]
        for text in labels:
            stem = text[3:-1] if text.startswith("co(") and text.endswith(")") else text
            if stem in self.actvars:
                metas.add(stem)
        terms = [template.source, template.target]
        for p in template.premises:
            terms.append(p.source)
            if p.target is not None:
                terms.append(p.target)
        for t in terms:
            metas |= self._term_metas(t)
        return metas

    def _term_metas(self, t: Term) -> set:
        if isinstance(t, Var):
            return set()
        out = {t.sym} & set(self.actvars)
        for a in t.args:
            out |= self._term_metas(a)
        return out

    def _instantiate(self, template: RuleTemplate, combo: dict) -> DeductionRule:
        def label_of(text):
            if text.startswith("co(") and text.endswith(")"):
                stem = combo.get(text[3:-1], text[3:-1])
                return Label(complement(stem))
            return Label(combo.get(text, text))

        def term_of(t):
            if isinstance(t, Var):
                return t
            sym = combo.get(t.sym, t.sym)
            return App(sym, tuple(term_of(a) for a in t.args))

        premises = []
        for p in template.premises:
            if p.target is None:
                premises.append(Negative(term_of(p.source), label_of(p.label)))
            else:
                premises.append(Positive(term_of(p.source), label_of(p.label),
                                         term_of(p.target)))
        conclusion = Positive(term_of(template.source), label_of(template.label),
                              term_of(template.target))
        name = template.name
        if combo:
            name = f"{name}[{','.join(combo[m] for m in sorted(combo))}]"
        return DeductionRule(tuple(premises), conclusion, name)


def complement(action: str) -> str:
    return action[3:] if action.startswith("co_") else f"co_{action}"


@dataclass
class SystemFile:
    tss_blocks: dict = field(default_factory=dict)
    tsses: dict = field(default_factory=dict)
    regexes: dict = field(default_factory=dict)
    procs: dict = field(default_factory=dict)
    entry: Optional[str] = None
    options: dict = field(default_factory=dict)

    @property
    def entry_process(self) -> Process:
        return self.procs[self.entry]

    def declared_rule_count(self, tss_name: str) -> int:
        return len(self.tss_blocks[tss_name].rules)

    def known_labels(self) -> set:
        out = set()
        for block in self.tss_blocks.values():
            out |= set(block.labels)
        return out


# ---------------------------------------------------------------------------
# Lexer.

@dataclass(frozen=True)
class Token:
    kind: str  # word | punct | arrow | narrow
    text: str
    line: int
    col: int


_PUNCT2 = ("==>", "=>", "%e")
_PUNCT1 = "{}()<>,;:.|+*!?=/[]"


def tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)

    def error(msg):
        raise ParseError(msg, line, col)

    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        matched2 = next((p for p in _PUNCT2 if text.startswith(p, i)), None)
        if matched2:
            tokens.append(Token("punct", matched2, line, col))
            i += len(matched2)
            col += len(matched2)
            continue
        if c == "-":
            j = i + 1
            depth = 0
            while j < n:
                if text[j] == "(":
                    depth += 1
                elif text[j] == ")":
                    depth -= 1
                elif depth == 0 and text.startswith("->", j):
                    break
                elif depth == 0 and text.startswith("-/>", j):
                    break
                elif text[j] in "\n;":
                    break
                j += 1
            body = text[i + 1:j]
            if text.startswith("-/>", j):
                tokens.append(Token("narrow", body, line, col))
                j += 3
            elif text.startswith("->", j):
                tokens.append(Token("arrow", body, line, col))
                j += 2
            else:
                error("malformed transition arrow")
            col += j - i
            i = j
            continue
        if c in _PUNCT1:
            tokens.append(Token("punct", c, line, col))
            i += 1
            col += 1
            continue
        if c.isalnum() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("word", text[i:j], line, col))
            col += j - i
            i = j
            continue
        error(f"unexpected character {c!r}")
    return tokens


# ---------------------------------------------------------------------------
# Parser.

class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.sf = SystemFile()

    # -- token helpers ------------------------------------------------------

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text and t.kind in ("punct", "word")

    def error(self, msg) -> ParseError:
        t = self.peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else Token("", "", 1, 1)
            return ParseError(f"{msg} (at end of file)", last.line, last.col)
        return ParseError(f"{msg} (found {t.text!r})", t.line, t.col)

    def take(self, text: Optional[str] = None) -> Token:
        t = self.peek()
        if t is None or (text is not None and t.text != text):
            raise self.error(f"expected {text!r}" if text else "unexpected end")
        self.pos += 1
        return t

    def word(self, what="identifier") -> Token:
        t = self.peek()
        if t is None or t.kind != "word":
            raise self.error(f"expected {what}")
        self.pos += 1
        return t

    # -- top level ----------------------------------------------------------

    def parse(self) -> SystemFile:
        while self.peek() is not None:
            t = self.peek()
            if t.text == "tss":
                self.tss_block()
            elif t.text == "regex":
                self.regex_def()
            elif t.text == "proc":
                self.proc_def()
            elif t.text == "system":
                self.take("system")
                name = self.word("process name")
                if name.text not in self.sf.procs:
                    raise ValidationError(f"entry {name.text!r} is not a defined process",
                                          name.line, name.col)
                self.sf.entry = name.text
                self.take(";")
            elif t.text == "option":
                self.take("option")
                key = self.word("option name").text
                value = self.word("option value").text
                self.sf.options[key] = value
                self.take(";")
            else:
                raise self.error("expected a tss/regex/proc/system/option item")
        if self.sf.entry is None:
            raise ValidationError("no entry: the file declares no `system Name;`")
        return self.sf

    def _declare(self, kind, name: Token):
        for table in (self.sf.tss_blocks, self.sf.regexes, self.sf.procs):
            if name.text in table:
                raise ValidationError(f"duplicate name {name.text!r}",
                                      name.line, name.col)

    # -- TSS blocks ---------------------------------------------------------

    def tss_block(self):
        self.take("tss")
        name = self.word("TSS name")
        self._declare("tss", name)
        self.take("{")
        labels, ops, varnames, acts, actvars, rules = [], [], [], [], [], []
        while not self.at("}"):
            section = self.word("section keyword")
            if section.text == "labels":
                labels.extend(self.word_list())
            elif section.text == "ops":
                while True:
                    sym = self.word("operator").text
                    self.take("/")
                    arity = self.word("arity")
                    if not arity.text.isdigit():
                        raise ParseError("arity must be a number", arity.line, arity.col)
                    ops.append((sym, int(arity.text)))
                    if self.at(","):
                        self.take(",")
                    else:
                        break
                self.take(";")
            elif section.text == "vars":
                varnames.extend(self.word_list())
            elif section.text == "acts":
                acts.extend(self.word_list())
            elif section.text == "actvar":
                actvars.extend(self.word_list())
            elif section.text == "rule":
                rules.append(self.rule_template(varnames, actvars))
            else:
                raise ParseError(f"unknown TSS section {section.text!r}",
                                 section.line, section.col)
        self.take("}")
        block = TssBlock(name.text, tuple(labels), tuple(ops), tuple(varnames),
                         tuple(acts), tuple(actvars), tuple(rules))
        self.validate_block(block, name)
        self.sf.tss_blocks[name.text] = block
        self.sf.tsses[name.text] = block.expand()
        try:
            check_rule_patterns(self.sf.tsses[name.text])
        except Exception as exc:
            raise ValidationError(str(exc), name.line, name.col)

    def word_list(self):
        out = [self.word().text]
        while self.at(","):
            self.take(",")
            out.append(self.word().text)
        self.take(";")
        return out

    def rule_template(self, varnames, actvars) -> RuleTemplate:
        # name is optional: `rule [name]: ...` or `rule: ...`
        rule_name = ""
        if self.at("["):
            self.take("[")
            rule_name = self.word("rule name").text
            self.take("]")
        self.take(":")
        premises = []
        while not self.at("==>"):
            premises.append(self.premise(varnames))
            if self.at(","):
                self.take(",")
        self.take("==>")
        source = self.rule_term(varnames)
        arrow = self.peek()
        if arrow is None or arrow.kind != "arrow":
            raise self.error("expected a labelled arrow in the conclusion")
        self.pos += 1
        target = self.rule_term(varnames)
        self.take(";")
        return RuleTemplate(rule_name, tuple(premises), source, arrow.text, target)

    def premise(self, varnames) -> PremiseTemplate:
        source = self.rule_term(varnames)
        t = self.peek()
        if t is not None and t.kind == "narrow":
            self.pos += 1
            return PremiseTemplate(source, t.text, None)
        if t is not None and t.kind == "arrow":
            self.pos += 1
            target = self.rule_term(varnames)
            return PremiseTemplate(source, t.text, target)
        raise self.error("expected a transition arrow in a premise")

    def rule_term(self, varnames) -> Term:
        t = self.word("term")
        name = t.text
        if self.at("("):
            self.take("(")
            args = [self.rule_term(varnames)]
            while self.at(","):
                self.take(",")
                args.append(self.rule_term(varnames))
            self.take(")")
            return App(name, tuple(args))
        if name in varnames or name.rstrip("0123456789'") in varnames:
            return Var(name)
        return App(name)

    def validate_block(self, block: TssBlock, at: Token):
        arities = {}
        for sym, ar in block.ops:
            if sym in arities and arities[sym] != ar:
                raise ValidationError(f"operator {sym!r} declared with two arities",
                                      at.line, at.col)
            arities[sym] = ar
        declared = set(block.labels)
        varstems = set(block.vars)
        metas = set(block.actvars)

        def check_label(text):
            stem = text[3:-1] if text.startswith("co(") and text.endswith(")") else text
            if stem in metas:
                return
            if stem not in declared:
                raise ValidationError(
                    f"rule in TSS {block.name!r} uses undeclared label {stem!r}",
                    at.line, at.col)

        def check_term(term):
            if isinstance(term, Var):
                return
            if term.sym in metas:
                if len(term.args) != 1:
                    raise ValidationError(
                        f"action metavariable {term.sym!r} must be unary",
                        at.line, at.col)
            elif term.sym not in arities:
                raise ValidationError(
                    f"rule in TSS {block.name!r} uses undeclared operator {term.sym!r}",
                    at.line, at.col)
            elif arities[term.sym] != len(term.args):
                raise ValidationError(
                    f"operator {term.sym!r} applied to {len(term.args)} arguments, "
                    f"declared arity {arities[term.sym]}", at.line, at.col)
            for a in term.args:
                check_term(a)

        for act in block.acts:
            if act not in declared:
                raise ValidationError(f"act {act!r} is not a declared label",
                                      at.line, at.col)
        for rule in block.rules:
            check_label(rule.label)
            check_term(rule.source)
            check_term(rule.target)
            for p in rule.premises:
                check_label(p.label)
                check_term(p.source)
                if p.target is not None:
                    check_term(p.target)

    # -- regex definitions --------------------------------------------------

    def regex_def(self):
        self.take("regex")
        name = self.word("regex name")
        self._declare("regex", name)
        self.take("=")
        node = self.regex_expr(default_label=True)
        self.take(";")
        self.sf.regexes[name.text] = node

    def regex_expr(self, default_label: bool):
        node = self.regex_cat(default_label)
        while self.at("|"):
            self.take("|")
            node = rex.Alt(node, self.regex_cat(default_label))
        return node

    def regex_cat(self, default_label: bool):
        node = self.regex_star(default_label)
        while self.at("."):
            self.take(".")
            node = rex.Concat(node, self.regex_star(default_label))
        return node

    def regex_star(self, default_label: bool):
        node = self.regex_atom(default_label)
        while self.at("*"):
            self.take("*")
            node = rex.Star(node)
        return node

    def regex_atom(self, default_label: bool):
        if self.at("("):
            self.take("(")
            node = self.regex_expr(default_label)
            self.take(")")
            return node
        if self.at("%e"):
            self.take("%e")
            return rex.EPSILON
        t = self.word("regex atom")
        return self.resolve_regex_atom(t.text, default_label)

    def resolve_regex_atom(self, name: str, default_label: bool):
        if name in self.sf.regexes:
            return self.sf.regexes[name]
        if name in self.sf.known_labels() or name.isdigit():
            return rex.Atom(Label(name))
        if default_label:
            return rex.Atom(Label(name))
        return rex.Hole(name)

    # -- process definitions ------------------------------------------------

    def proc_def(self):
        self.take("proc")
        name = self.word("process name")
        self._declare("proc", name)
        self.take("=")
        body = self.process()
        self.take(";")
        self.sf.procs[name.text] = body

    def process(self) -> Process:
        parts = [self.sum_level()]
        while self.at("|"):
            self.take("|")
            parts.append(self.sum_level())
        return parts[0] if len(parts) == 1 else Par(tuple(parts))

    def sum_level(self) -> Process:
        parts = [self.prefix_level()]
        while self.at("+"):
            self.take("+")
            parts.append(self.prefix_level())
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))

    def prefix_level(self) -> Process:
        t = self.peek()
        if t is None:
            raise self.error("expected a process")
        if t.text == "0":
            self.take()
            return NIL
        if t.text == "!":
            self.take("!")
            return Bang(self.prefix_level())
        if t.text == "(":
            self.take("(")
            node = self.process()
            self.take(")")
            return node
        if t.text == "new":
            self.take("new")
            name = self.word("restricted name").text
            self.take(".")
            return Restrict(name, self.prefix_level())
        if t.text == "exec":
            return self.exec_process()
        if t.text == "verify":
            self.take("verify")
            self.take("(")
            left = self.monitor_expr()
            self.take(",")
            right = self.monitor_expr()
            self.take(")")
            self.take("?")
            then = self.prefix_level()
            self.take(":")
            other = self.prefix_level()
            return Verify(left, right, then, other)
        if t.text == "labels":
            self.take("labels")
            self.take("(")
            allowed = [Label(self.word("label").text)]
            while self.at(","):
                self.take(",")
                allowed.append(Label(self.word("label").text))
            self.take(";")
            lang = self.transmittable()
            self.take(")")
            self.take("?")
            then = self.prefix_level()
            self.take(":")
            other = self.prefix_level()
            return LabelsCheck(tuple(allowed), lang, then, other)
        if t.kind == "word":
            name = self.word()
            if self.at("("):
                self.take("(")
                bound = [self.word("bound name").text]
                while self.at(","):
                    self.take(",")
                    bound.append(self.word("bound name").text)
                self.take(")")
                return Input(Chan(name.text), tuple(bound), self.continuation())
            if self.at("<"):
                self.take("<")
                payloads = [self.transmittable()]
                while self.at(","):
                    self.take(",")
                    payloads.append(self.transmittable())
                self.take(">")
                return Output(Chan(name.text), tuple(payloads), self.continuation())
            if name.text in self.sf.procs:
                return self.sf.procs[name.text]
            raise ParseError(f"undefined process {name.text!r}", name.line, name.col)
        raise self.error("expected a process")

    def continuation(self) -> Process:
        if self.at("."):
            self.take(".")
            return self.prefix_level()
        return NIL

    def exec_process(self) -> Process:
        self.take("exec")
        self.take("(")
        lang = self.transmittable()
        self.take(",")
        chan = self.word("result channel").text
        self.take(",")
        prog = self.transmittable()
        self.take(")")
        monitors = []
        if self.at("{"):
            self.take("{")
            while not self.at("}"):
                expr = self.monitor_expr()
                self.take("=>")
                handler = self.prefix_level()
                self.take(";")
                monitors.append(Monitor(expr, handler))
            self.take("}")
        return Exec(lang, Chan(chan), prog, rex.Trace(), tuple(monitors))

    # -- transmittables -----------------------------------------------------

    def transmittable(self) -> Transmittable:
        node = self.transmittable_atom()
        while self.at("union"):
            self.take("union")
            node = UnionL(node, self.transmittable_atom())
        return node

    def transmittable_atom(self) -> Transmittable:
        if self.at("("):
            self.take("(")
            node = self.transmittable()
            self.take(")")
            return node
        if self.at("tm"):
            self.take("tm")
            self.take("(")
            term = self.ground_term()
            self.take(")")
            return TermLit(term)
        if self.at("rx"):
            self.take("rx")
            self.take("(")
            node = self.regex_expr(default_label=False)
            self.take(")")
            return RegexE(node)
        name = self.word("transmittable")
        if name.text in self.sf.tsses:
            return TssLit(self.sf.tsses[name.text])
        if name.text in self.sf.regexes:
            return RegexE(self.sf.regexes[name.text])
        return Chan(name.text)

    def monitor_expr(self) -> Transmittable:
        # Bare regex syntax; a lone name may also reference a TSS (which
        # is a sort error at activation, as the calculus allows).
        if self.at("rx") or self.at("tm"):
            return self.transmittable_atom()
        start = self.pos
        if self.peek() is not None and self.peek().kind == "word":
            name = self.peek().text
            self.pos += 1
            if not (self.at(".") or self.at("|") or self.at("*")):
                if name in self.sf.tsses:
                    return TssLit(self.sf.tsses[name])
                self.pos = start
            else:
                self.pos = start
        return RegexE(self.regex_expr(default_label=False))

    def ground_term(self) -> Term:
        t = self.word("term")
        if self.at("("):
            self.take("(")
            args = [self.ground_term()]
            while self.at(","):
                self.take(",")
                args.append(self.ground_term())
            self.take(")")
            return App(t.text, tuple(args))
        return App(t.text)


def loads(text: str) -> SystemFile:
    return _Parser(text).parse()


def load(path) -> SystemFile:
    return loads(Path(path).read_text(encoding="utf-8"))


def _fragment_parser(text: str, sf: Optional[SystemFile]) -> _Parser:
    p = _Parser(text)
    if sf is not None:
        p.sf = sf
    return p


def parse_regex_text(text: str, sf: Optional[SystemFile] = None,
                     default_label: bool = True):
    """An inline regex, resolving names against a loaded file's definitions."""
    p = _fragment_parser(text, sf)
    node = p.regex_expr(default_label)
    if p.peek() is not None:
        raise p.error("trailing input after regular expression")
    return node


def parse_lang_text(text: str, sf: Optional[SystemFile] = None) -> Transmittable:
    """An inline language builder (TSS names joined with `union`)."""
    p = _fragment_parser(text, sf)
    node = p.transmittable()
    if p.peek() is not None:
        raise p.error("trailing input after language expression")
    return node


# ---------------------------------------------------------------------------
# Save: canonical text that reloads to structurally equal definitions.

def save(sf: SystemFile) -> str:
    chunks = []
    for name, block in sf.tss_blocks.items():
        chunks.append(_render_block(block))
    for name, node in sf.regexes.items():
        chunks.append(f"regex {name} = {render_regex(node)};")
    for name, proc in sf.procs.items():
        chunks.append(f"proc {name} = {render_process(proc, sf.tsses, sf.regexes)};")
    for key, value in sf.options.items():
        chunks.append(f"option {key} {value};")
    chunks.append(f"system {sf.entry};")
    return "\n\n".join(chunks) + "\n"


def _render_block(block: TssBlock) -> str:
    lines = [f"tss {block.name} {{"]
    if block.labels:
        lines.append(f"  labels {', '.join(block.labels)};")
    if block.ops:
        lines.append(f"  ops {', '.join(f'{s}/{a}' for s, a in block.ops)};")
    if block.vars:
        lines.append(f"  vars {', '.join(block.vars)};")
    if block.acts:
        lines.append(f"  acts {', '.join(block.acts)};")
    if block.actvars:
        lines.append(f"  actvar {', '.join(block.actvars)};")
    for rule in block.rules:
        premises = ", ".join(_render_premise(p) for p in rule.premises)
        if premises:
            premises += " "
        head = f"rule [{rule.name}]: " if rule.name else "rule : "
        lines.append(f"  {head}{premises}==> {render_term(rule.source)} "
                     f"-{rule.label}-> {render_term(rule.target)};")
    lines.append("}")
    return "\n".join(lines)


def _render_premise(p: PremiseTemplate) -> str:
    if p.target is None:
        return f"{render_term(p.source)} -{p.label}-/>"
    return f"{render_term(p.source)} -{p.label}-> {render_term(p.target)}"
