import pytest

from opsend.calculus import Bang, Chan, Input, Output, RegexE, TssLit
from opsend.rex import Atom, Hole
from opsend.sysfile import (
    ParseError,
    SystemFile,
    ValidationError,
    complement,
    load,
    loads,
    parse_lang_text,
    parse_regex_text,
    save,
)
from opsend.terms import Label

from conftest import CORPUS

MINIMAL = """
tss tiny {
  labels tick;
  ops done/0, tick/1;
  vars p;
  rule [t]: ==> tick(p) -tick-> p;
}
proc Main = 0;
system Main;
"""


def test_load_partialccs_declares_seven_rules():
    sf = load(CORPUS / "partialccs.lns")
    assert len(sf.tsses) == 1
    assert sf.declared_rule_count("partialCCS") == 7


def test_actvar_expansion_covers_all_actions():
    sf = load(CORPUS / "partialccs.lns")
    ccs = sf.tsses["partialCCS"]
    prefixes = [r for r in ccs.rules if r.name and r.name.startswith("prefix")]
    assert {r.conclusion.label for r in prefixes} == \
        {Label(n) for n in ("a", "co_a", "b", "co_b")}


def test_complement_convention():
    assert complement("a") == "co_a"
    assert complement("co_a") == "a"


def test_empty_file_has_no_entry():
    with pytest.raises(ValidationError, match="no entry"):
        loads("")


def test_undeclared_label_rejected():
    bad = MINIMAL.replace("-tick->", "-tock->")
    with pytest.raises(ValidationError, match="undeclared label"):
        loads(bad)


def test_undeclared_operator_rejected():
    bad = MINIMAL.replace("tick(p) -tick->", "tock(p) -tick->")
    with pytest.raises(ValidationError, match="undeclared operator"):
        loads(bad)


def test_wrong_arity_rejected():
    bad = MINIMAL.replace("tick(p)", "done(p)")
    with pytest.raises(ValidationError, match="arity"):
        loads(bad)


def test_duplicate_name_rejected():
    bad = MINIMAL + "\nregex tiny = tick;\n"
    with pytest.raises(ValidationError, match="duplicate"):
        loads(bad)


def test_unknown_entry_rejected():
    bad = MINIMAL.replace("system Main;", "system Ghost;")
    with pytest.raises(ValidationError, match="not a defined process"):
        loads(bad)


def test_parse_error_carries_location():
    with pytest.raises(ParseError) as err:
        loads("proc Main = (0;\nsystem Main;")
    assert err.value.line == 1


def test_polyadic_prefixes_parse_as_tuples():
    sf = loads(MINIMAL + "proc P = ch(a, b).0;\nproc Q = ch<x, y>.0;\n")
    assert sf.procs["P"] == Input(Chan("ch"), ("a", "b"), sf.procs["Main"])
    assert isinstance(sf.procs["Q"], Output)
    assert sf.procs["Q"].payloads == (Chan("x"), Chan("y"))


def test_monitor_slot_resolution():
    sf = loads(MINIMAL + "regex r = tick*;\nproc P = verify(r, tiny) ? 0 : 0;\n"
               "proc Q = verify(tr, tick.tick) ? 0 : 0;\n")
    v = sf.procs["P"]
    assert isinstance(v.left, RegexE) and isinstance(v.right, TssLit)
    w = sf.procs["Q"]
    assert w.left == RegexE(Hole("tr"))


def test_bang_and_options():
    sf = loads(MINIMAL + "proc R = !ch(a).0;\noption mode prefix;\n")
    assert isinstance(sf.procs["R"], Bang)
    assert sf.options == {"mode": "prefix"}


def test_options_in_corpus():
    assert load(CORPUS / "password_good.lns").options["mode"] == "prefix"


@pytest.mark.parametrize("name", [
    "partialccs.lns", "timing.lns", "fileserver_good.lns", "fileserver_bad.lns",
    "fileserver_invalid.lns", "password_good.lns", "password_bad.lns",
    "stuck.lns",
])
def test_save_load_round_trip(name):
    sf = load(CORPUS / name)
    text = save(sf)
    sf2 = loads(text)
    assert sf2.tsses == sf.tsses
    assert sf2.regexes == sf.regexes
    assert sf2.procs == sf.procs
    assert sf2.entry == sf.entry
    assert sf2.options == sf.options


def test_parse_regex_text_resolves_names():
    sf = load(CORPUS / "fileserver_good.lns")
    node = parse_regex_text("fileProtocol*", sf)
    assert node == parse_regex_text("(open.(read|write)*.close)*", sf)
    assert parse_regex_text("zz", None) == Atom(Label("zz"))


def test_parse_lang_text_builds_unions():
    sf = load(CORPUS / "timing.lns")
    expr = parse_lang_text("almostTPA union parallelMax", sf)
    assert isinstance(expr.left, TssLit) and isinstance(expr.right, TssLit)
