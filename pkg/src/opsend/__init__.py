"""Interpreter and state-space explorer for a process calculus whose
processes exchange operational-semantics fragments, programs, and regular
expressions, executing programs under transition system specifications
while monitoring their traces online and offline."""

from .terms import (
    App,
    ArityClash,
    Label,
    Signature,
    Var,
    parse_term,
    substitute_term,
    union_signatures,
    well_formed,
)
from .tss import (
    TSS,
    DeductionRule,
    DerivationDepthExceeded,
    Negative,
    NotStratifiable,
    NotStratifiableError,
    Positive,
    Stratification,
    derive_all,
    has_any_transition,
    stratify,
    union_tss,
)
from .rex import (
    Alt,
    Atom,
    Concat,
    EPSILON,
    Hole,
    Star,
    Trace,
    include,
    include_witness,
    member,
    parse_regex,
    prefix_feasible,
    trace_to_regex,
)
from .calculus import (
    Bang,
    Chan,
    Configuration,
    Exec,
    Input,
    LabelsCheck,
    Monitor,
    NIL,
    Nil,
    Output,
    Par,
    RegexE,
    Restrict,
    Sum,
    TermLit,
    TssLit,
    UnionL,
    Verify,
    canonicalize,
    eval_lang,
    free_names,
    substitute,
)
from .reducer import (
    ExplorationGraph,
    ReductionEvent,
    StuckDiagnosis,
    analyze,
    enabled,
    explore,
    run,
    step_exec,
)
from .sysfile import SystemFile, ParseError, ValidationError, load, loads, save

__all__ = [name for name in dir() if not name.startswith("_")]
