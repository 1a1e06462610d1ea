"""Pretty-printers for processes and transmittables in the file syntax.

The output is parseable by the system-file loader, which gives the
load/save round-trip.  Named TSS and regex definitions are rendered by
name, so rendering a process needs the defining tables.
"""

from __future__ import annotations

from typing import Mapping

from .calculus import (
    Bang,
    Chan,
    Exec,
    Input,
    LabelsCheck,
    Nil,
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
)
from .rex import render_regex
from .terms import render_term


class RenderError(Exception):
    pass


def render_expr(e: Transmittable, tss_names: Mapping = {},
                regex_names: Mapping = {}) -> str:
    if isinstance(e, Chan):
        return e.name
    if isinstance(e, TssLit):
        for name, tss in tss_names.items():
            if tss == e.tss:
                return name
        raise RenderError("TSS literal has no name in this file")
    if isinstance(e, UnionL):
        return (f"{render_expr(e.left, tss_names, regex_names)} union "
                f"{render_expr(e.right, tss_names, regex_names)}")
    if isinstance(e, RegexE):
        for name, node in regex_names.items():
            if node == e.node:
                return name
        return f"rx({render_regex(e.node)})"
    if isinstance(e, TermLit):
        return f"tm({render_term(e.term)})"
    raise RenderError(f"cannot render {type(e).__name__}")


def render_process(p: Process, tss_names: Mapping = {},
                   regex_names: Mapping = {}) -> str:
    return _proc(p, (tss_names, regex_names), 0)


# levels: 0 = parallel, 1 = sum, 2 = prefix
def _proc(p: Process, names, level: int) -> str:
    def wrap(text, mylevel):
        return f"({text})" if mylevel < level else text

    def expr(e):
        return render_expr(e, *names)

    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Par):
        return wrap(" | ".join(_proc(q, names, 1) for q in p.parts), 0)
    if isinstance(p, Sum):
        return wrap(" + ".join(_proc(q, names, 2) for q in p.parts), 1)
    if isinstance(p, Input):
        return f"{expr(p.subject)}({', '.join(p.bounds)}).{_proc(p.cont, names, 2)}"
    if isinstance(p, Output):
        payloads = ", ".join(expr(e) for e in p.payloads)
        return f"{expr(p.subject)}<{payloads}>.{_proc(p.cont, names, 2)}"
    if isinstance(p, Restrict):
        return f"new {p.name}.{_proc(p.body, names, 2)}"
    if isinstance(p, Bang):
        return f"!{_proc(p.body, names, 2)}"
    if isinstance(p, Exec):
        if not isinstance(p.chan, Chan):
            raise RenderError("exec result channel is not a name")
        head = f"exec({expr(p.lang)}, {p.chan.name}, {expr(p.prog)})"
        if not p.monitors:
            return head
        monitors = " ".join(
            f"{_monitor_expr(m.expr, names)} => {_proc(m.handler, names, 2)};"
            for m in p.monitors)
        return f"{head} {{ {monitors} }}"
    if isinstance(p, Verify):
        return (f"verify({_monitor_expr(p.left, names)}, {_monitor_expr(p.right, names)})"
                f" ? {_proc(p.then, names, 2)} : {_proc(p.other, names, 2)}")
    if isinstance(p, LabelsCheck):
        allowed = ", ".join(l.name for l in p.allowed)
        return (f"labels({allowed}; {expr(p.lang)})"
                f" ? {_proc(p.then, names, 2)} : {_proc(p.other, names, 2)}")
    raise RenderError(f"cannot render {type(p).__name__}")


def _monitor_expr(e: Transmittable, names) -> str:
    # Monitor and verify slots take bare regex syntax; other sorts fall
    # back to the general transmittable syntax.
    if isinstance(e, RegexE):
        for name, node in names[1].items():
            if node == e.node:
                return name
        return render_regex(e.node)
    return render_expr(e, *names)
