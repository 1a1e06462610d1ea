"""The reduction relation: redex enumeration, program stepping, scheduling,
and bounded exhaustive exploration.

`analyze` computes every one-step successor of a canonical configuration
together with stuck diagnoses (type errors, arity clashes, non-stratifiable
specifications), which are reported rather than raised.  `run` drives a
seeded scheduler over the successors; `explore` builds the reachable graph
breadth-first with node and depth caps.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import rex
from .calculus import (
    Bang,
    Chan,
    Configuration,
    Exec,
    Input,
    LabelsCheck,
    Monitor,
    Nil,
    NIL,
    NotALanguage,
    Output,
    Par,
    Process,
    RegexE,
    Restrict,
    Sum,
    TermLit,
    TssLit,
    Transmittable,
    UnionL,
    Verify,
    canonical_process,
    canonicalize,
    free_names,
    free_names_expr,
    fresh_name,
    lan_step,
    substitute,
)
from .rex import Trace, include, member, prefix_feasible, trace_to_regex
from .terms import ArityClash, Label, render_term
from .tss import (
    DerivationDepthExceeded,
    DerivationError,
    NotStratifiableError,
    derive_all,
)


@dataclass(frozen=True)
class ReductionEvent:
    rule: str
    detail: tuple = ()

    def render(self) -> str:
        payload = ",".join(f"{k}={v}" for k, v in self.detail)
        return f"rule={self.rule} detail=[{payload}]"


def event(rule: str, **kw) -> ReductionEvent:
    return ReductionEvent(rule, tuple(sorted((k, str(v)) for k, v in kw.items())))


@dataclass(frozen=True)
class StuckDiagnosis:
    kind: str  # type-error | arity-clash | not-stratifiable | derivation-depth | derivation-error
    site: str
    message: str

    def render(self) -> str:
        return f"stuck kind={self.kind} site={self.site} message={self.message}"


@dataclass
class _Prefix:
    direction: str  # "in" | "out"
    channel: str
    bounds: Optional[tuple]
    payloads: Optional[tuple]
    cont: Process
    rebuild: Callable[[Process], Process]
    bang: Optional[Bang] = None
    inner_rebuild: Optional[Callable[[Process], Process]] = None

    @property
    def arity(self) -> int:
        return len(self.bounds if self.bounds is not None else self.payloads)


def _expr_site(e: Transmittable) -> str:
    return type(e).__name__


def _ground_regex(e: Transmittable):
    """A monitor/verify argument as a ground regex, or None."""
    if isinstance(e, RegexE) and rex.is_ground(e.node):
        return e.node
    return None


def _check_trace(tr: Trace, regex, mode: str) -> bool:
    if mode == "prefix":
        return prefix_feasible(tr, regex)
    return member(tr, regex)


def step_exec(tss, chan: Transmittable, prog, tr: Trace, monitors, mode: str):
    """Successor processes of one program-execution step.

    Returns (outcomes, diagnoses); outcomes pair events with processes.
    Every derivable transition contributes either one stepped execution or
    one outcome per failing monitor index (1-based).
    """
    site = f"exec:{render_term(prog)}"
    try:
        transitions = sorted(derive_all(tss, prog),
                             key=lambda lt: (lt[0].name, repr(lt[1])))
    except NotStratifiableError as exc:
        return [], [StuckDiagnosis("not-stratifiable", site, str(exc))]
    except DerivationDepthExceeded as exc:
        return [], [StuckDiagnosis("derivation-depth", site, str(exc))]
    except DerivationError as exc:
        return [], [StuckDiagnosis("derivation-error", site, str(exc))]
    if not transitions:
        trace_out = Bang(Output(chan, (RegexE(trace_to_regex(tr)),), NIL))
        return [(event("program-end", trace=_trace_str(tr)), trace_out)], []
    outcomes = []
    for label, target in transitions:
        extended = tr.append(label)
        failing = [i for i, (regex, _) in enumerate(monitors)
                   if not _check_trace(extended, regex, mode)]
        if not failing:
            continued = Exec(TssLit(tss), chan, TermLit(target), extended,
                             tuple(Monitor(RegexE(r), h) for r, h in monitors))
            outcomes.append((event("exec-step", label=label.name,
                                   trace=_trace_str(extended)), continued))
        else:
            for i in failing:
                outcomes.append((event("monitor-fail", label=label.name,
                                       index=i + 1, site=site),
                                 monitors[i][1]))
    return outcomes, []


def _trace_str(tr: Trace) -> str:
    return ".".join(l.name for l in tr.labels) or "%e"


def _exec_redexes(p: Exec, mode: str):
    succs, diags = [], []
    site = f"exec:{_expr_site(p.lang)}"
    lang = p.lang
    if isinstance(lang, UnionL):
        try:
            stepped = lan_step(lang)
        except ArityClash as exc:
            return [], [StuckDiagnosis("arity-clash", site, str(exc))]
        except NotALanguage as exc:
            return [], [StuckDiagnosis("type-error", site, str(exc))]
        return [(event("union-eval", context="exec"),
                 Exec(stepped, p.chan, p.prog, p.trace, p.monitors))], []
    if not isinstance(lang, TssLit):
        return [], [StuckDiagnosis(
            "type-error", site, f"language position holds {_expr_site(lang)}")]
    if not isinstance(p.chan, Chan):
        return [], [StuckDiagnosis(
            "type-error", site, f"result channel position holds {_expr_site(p.chan)}")]
    if not isinstance(p.prog, TermLit):
        return [], [StuckDiagnosis(
            "type-error", site, f"program position holds {_expr_site(p.prog)}")]
    monitors = []
    for i, m in enumerate(p.monitors):
        regex = _ground_regex(m.expr)
        if regex is None:
            return [], [StuckDiagnosis(
                "type-error", site,
                f"monitor {i + 1} is not a ground regular expression")]
        monitors.append((regex, m.handler))
    return step_exec(lang.tss, p.chan, p.prog.term, p.trace, monitors, mode)


def _verify_redexes(p: Verify):
    left = _ground_regex(p.left)
    right = _ground_regex(p.right)
    if left is None or right is None:
        bad = p.left if left is None else p.right
        return [], [StuckDiagnosis(
            "type-error", "verify",
            f"verify argument holds {_expr_site(bad)}, not a ground regular expression")]
    if include(left, right):
        return [(event("verify-success"), p.then)], []
    return [(event("verify-fail"), p.other)], []


def _labels_redexes(p: LabelsCheck):
    lang = p.lang
    if isinstance(lang, UnionL):
        try:
            stepped = lan_step(lang)
        except ArityClash as exc:
            return [], [StuckDiagnosis("arity-clash", "labels", str(exc))]
        except NotALanguage as exc:
            return [], [StuckDiagnosis("type-error", "labels", str(exc))]
        return [(event("union-eval", context="labels"),
                 LabelsCheck(p.allowed, stepped, p.then, p.other))], []
    if not isinstance(lang, TssLit):
        return [], [StuckDiagnosis(
            "type-error", "labels",
            f"labels argument holds {_expr_site(lang)}, not a TSS")]
    if lang.tss.labels <= set(p.allowed):
        return [(event("labels-success"), p.then)], []
    extra = sorted(l.name for l in lang.tss.labels - set(p.allowed))
    return [(event("labels-fail", extra=",".join(extra)), p.other)], []


def _io_prefixes(p: Process):
    if isinstance(p, Input):
        if isinstance(p.subject, Chan):
            return [_Prefix("in", p.subject.name, p.bounds, None, p.cont,
                            lambda c: c)]
        return []
    if isinstance(p, Output):
        if isinstance(p.subject, Chan):
            return [_Prefix("out", p.subject.name, None, p.payloads, p.cont,
                            lambda c: c)]
        return []
    if isinstance(p, Par):
        out = []
        for i, q in enumerate(p.parts):
            for pref in _io_prefixes(q):
                out.append(_lift(pref, _replacer(p.parts, i)))
        return out
    if isinstance(p, Sum):
        out = []
        for q in p.parts:
            out.extend(_io_prefixes(q))  # firing a summand discards the rest
        return out
    if isinstance(p, Restrict):
        out = []
        for pref in _io_prefixes(p.body):
            if pref.channel == p.name:
                continue
            if pref.payloads is not None and any(
                    p.name in free_names_expr(e) for e in pref.payloads):
                continue  # sent-name extrusion is handled by canonicalization
            out.append(_lift(pref, lambda c, name=p.name: Restrict(name, c)))
        return out
    if isinstance(p, Bang):
        out = []
        for pref in _io_prefixes(p.body):
            lifted = _lift(pref, lambda c, b=p: Par((c, b)))
            lifted.bang = p
            lifted.inner_rebuild = pref.rebuild
            out.append(lifted)
        return out
    return []


def _replacer(parts: tuple, i: int):
    def rebuild(c):
        replaced = parts[:i] + (c,) + parts[i + 1:]
        return Par(replaced)
    return rebuild


def _lift(pref: _Prefix, wrap):
    return _Prefix(pref.direction, pref.channel, pref.bounds, pref.payloads,
                   pref.cont, lambda c, inner=pref.rebuild: wrap(inner(c)),
                   pref.bang, pref.inner_rebuild)


def _comm(inp: _Prefix, out: _Prefix):
    # Simultaneous substitution: if a payload mentions a later binder's
    # name, rename the binders apart first.
    cont = inp.cont
    bounds = list(inp.bounds)
    sent_free = set()
    for e in out.payloads:
        sent_free |= free_names_expr(e)
    if sent_free & set(bounds):
        avoid = sent_free | free_names(cont) | set(bounds)
        for i, b in enumerate(bounds):
            renamed = fresh_name(f"{b}#0", avoid)
            avoid.add(renamed)
            cont = substitute(cont, Chan(renamed), b)
            bounds[i] = renamed
    for b, e in zip(bounds, out.payloads):
        cont = substitute(cont, e, b)
    return cont, out.cont


def proc_succ(p: Process, mode: str):
    """All one-step successors of a process, with stuck diagnoses."""
    if isinstance(p, (Nil, Input, Output)):
        return [], []
    if isinstance(p, Par):
        succs, diags = [], []
        for i, q in enumerate(p.parts):
            inner_succs, inner_diags = proc_succ(q, mode)
            rebuild = _replacer(p.parts, i)
            succs.extend((ev, rebuild(q2)) for ev, q2 in inner_succs)
            diags.extend(inner_diags)
        prefixes = [(i, pref) for i, q in enumerate(p.parts)
                    for pref in _io_prefixes(q)]
        for i, pin in prefixes:
            if pin.direction != "in":
                continue
            for j, pout in prefixes:
                if pout.direction != "out" or pin.channel != pout.channel:
                    continue
                if pin.arity != pout.arity:
                    continue
                if i == j:
                    # Same component: only legal with two replication copies.
                    if pin.bang is None or pin.bang is not pout.bang:
                        continue
                    received, sent = _comm(pin, pout)
                    merged = Par((pin.inner_rebuild(received),
                                  pout.inner_rebuild(sent), pin.bang))
                    succs.append((event("comm", channel=pin.channel),
                                  _replacer(p.parts, i)(merged)))
                    continue
                received, sent = _comm(pin, pout)
                parts = list(p.parts)
                parts[i] = pin.rebuild(received)
                parts[j] = pout.rebuild(sent)
                succs.append((event("comm", channel=pin.channel), Par(tuple(parts))))
        return succs, diags
    if isinstance(p, Sum):
        succs, diags = [], []
        for q in p.parts:
            inner_succs, inner_diags = proc_succ(q, mode)
            succs.extend(inner_succs)  # the chosen summand replaces the sum
            diags.extend(inner_diags)
        return succs, diags
    if isinstance(p, Restrict):
        inner_succs, inner_diags = proc_succ(p.body, mode)
        return ([(ev, Restrict(p.name, q)) for ev, q in inner_succs], inner_diags)
    if isinstance(p, Bang):
        inner_succs, inner_diags = proc_succ(p.body, mode)
        succs = [(ev, Par((q, p))) for ev, q in inner_succs]
        # Communication between two copies of the replicated body.
        prefixes = _io_prefixes(p.body)
        for pin in prefixes:
            if pin.direction != "in":
                continue
            for pout in prefixes:
                if pout.direction != "out" or pin.channel != pout.channel:
                    continue
                if pin.arity != pout.arity:
                    continue
                received, sent = _comm(pin, pout)
                succs.append((event("comm", channel=pin.channel),
                              Par((pin.rebuild(received), pout.rebuild(sent), p))))
        return succs, inner_diags
    if isinstance(p, Exec):
        return _exec_redexes(p, mode)
    if isinstance(p, Verify):
        return _verify_redexes(p)
    if isinstance(p, LabelsCheck):
        return _labels_redexes(p)
    raise TypeError(p)


def analyze(c: Configuration):
    """Canonical successors of a configuration plus its stuck diagnoses."""
    c = canonicalize(c)
    succs, diags = proc_succ(c.root, c.mode)
    out = []
    seen = set()
    for ev, q in succs:
        succ = canonicalize(Configuration(q, c.fresh, c.mode))
        key = (ev, succ.root)
        if key in seen:
            continue
        seen.add(key)
        out.append((ev, succ))
    out.sort(key=lambda pair: (pair[0].rule, pair[0].detail, repr(pair[1].root)))
    uniq_diags = sorted(set(diags), key=lambda d: (d.kind, d.site, d.message))
    return out, uniq_diags


def enabled(c: Configuration):
    return analyze(c)[0]


def _dedupe_monitor_fail(succs):
    """Keep only the lowest failing monitor index per (site, label)."""
    best = {}
    for ev, succ in succs:
        if ev.rule != "monitor-fail":
            continue
        d = dict(ev.detail)
        key = (d.get("site"), d.get("label"))
        idx = int(d.get("index", "0"))
        if key not in best or idx < best[key]:
            best[key] = idx
    out = []
    for ev, succ in succs:
        if ev.rule == "monitor-fail":
            d = dict(ev.detail)
            if int(d.get("index", "0")) != best[(d.get("site"), d.get("label"))]:
                continue
        out.append((ev, succ))
    return out


def run(c: Configuration, seed: int = 0, max_steps: int = 1000,
        monitor_policy: str = "first"):
    """Seeded uniform scheduling until quiescence or the step limit.

    Returns (final configuration, log lines, status) where status is one of
    "quiescent", "step-limit"; stuck diagnoses appear in the log.
    """
    rng = random.Random(seed)
    log = []
    reported = set()
    c = canonicalize(c)
    status = "step-limit"
    for step in range(max_steps):
        succs, diags = analyze(c)
        for d in diags:
            if d not in reported:
                reported.add(d)
                log.append(f"step={step} {d.render()}")
        if not succs:
            status = "quiescent"
            break
        if monitor_policy == "first":
            succs = _dedupe_monitor_fail(succs)
        ev, c = succs[rng.randrange(len(succs))]
        log.append(f"step={step} {ev.render()}")
    return c, log, status


@dataclass
class ExplorationGraph:
    nodes: list = field(default_factory=list)  # canonical Configurations
    edges: list = field(default_factory=list)  # (src index, event, dst index)
    diagnoses: dict = field(default_factory=dict)  # node index -> tuple of diags
    truncated: bool = False
    reason: Optional[str] = None  # depth | node-cap

    def edge_lines(self):
        for src, ev, dst in self.edges:
            yield f"{src}\t{ev.rule}\t{dict(ev.detail)}\t{dst}"

    def to_dot(self) -> str:
        lines = ["digraph exploration {"]
        for i, node in enumerate(self.nodes):
            shape = "doublecircle" if self.diagnoses.get(i) else "circle"
            lines.append(f'  n{i} [label="{i}", shape={shape}];')
        for src, ev, dst in self.edges:
            label = ev.rule
            d = dict(ev.detail)
            if "label" in d:
                label += f" {d['label']}"
            if "channel" in d:
                label += f" {d['channel']}"
            lines.append(f'  n{src} -> n{dst} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines)


def explore(c: Configuration, max_depth: int = 50, max_nodes: int = 10_000) -> ExplorationGraph:
    """Breadth-first exploration over canonical configurations."""
    graph = ExplorationGraph()
    c = canonicalize(c)
    index = {c.root: 0}
    graph.nodes.append(c)
    frontier = [0]
    depth = 0
    while frontier and depth < max_depth:
        next_frontier = []
        for src in frontier:
            succs, diags = analyze(graph.nodes[src])
            if diags:
                graph.diagnoses[src] = tuple(diags)
            for ev, succ in succs:
                if succ.root not in index:
                    if len(graph.nodes) >= max_nodes:
                        graph.truncated = True
                        graph.reason = "node-cap"
                        return graph
                    index[succ.root] = len(graph.nodes)
                    graph.nodes.append(succ)
                    next_frontier.append(index[succ.root])
                graph.edges.append((src, ev, index[succ.root]))
        frontier = next_frontier
        depth += 1
    if frontier:
        graph.truncated = True
        graph.reason = "depth"
    else:
        # Terminal layer: still record diagnoses of unexpanded leaves.
        pass
    return graph
