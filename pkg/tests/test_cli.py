import json

from click.testing import CliRunner

from opsend.cli import main

from conftest import CORPUS


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_run_quiescent_exit_zero():
    result = invoke("run", CORPUS / "fileserver_good.lns", "--seed", "1")
    assert result.exit_code == 0
    assert "verify-success" in result.output
    assert "status=quiescent" in result.output


def test_run_step_limit_exit_two():
    result = invoke("run", CORPUS / "timing.lns", "--max-steps", "20")
    assert result.exit_code == 2
    assert "status=step-limit" in result.output


def test_run_stuck_exit_three():
    result = invoke("run", CORPUS / "stuck.lns")
    assert result.exit_code == 3
    assert "stuck kind=type-error" in result.output


def test_run_json_log():
    result = invoke("run", CORPUS / "password_bad.lns", "--json", "--seed", "1")
    payload = json.loads(result.output)
    assert payload["status"] == "quiescent"
    assert any("monitor-fail" in line for line in payload["log"])


def test_run_is_deterministic_per_seed():
    a = invoke("run", CORPUS / "fileserver_bad.lns", "--seed", "9")
    b = invoke("run", CORPUS / "fileserver_bad.lns", "--seed", "9")
    assert a.output == b.output


def test_explore_summary_and_outputs(tmp_path):
    dot = tmp_path / "g.dot"
    edges = tmp_path / "g.tsv"
    result = invoke("explore", CORPUS / "partialccs.lns", "--depth", "10",
                    "--dot", dot, "--edges", edges)
    assert result.exit_code == 0
    assert "nodes=" in result.output and "edges=" in result.output
    assert dot.read_text().startswith("digraph")
    header, *rows = edges.read_text().strip().splitlines()
    assert header.split("\t") == ["src", "rule", "detail", "dst"]
    assert rows


def test_report_writes_figure_and_edge_list(tmp_path):
    out = tmp_path / "report"
    result = invoke("report", CORPUS / "partialccs.lns", "--out", out,
                    "--depth", "10")
    assert result.exit_code == 0
    assert (out / "edges.tsv").exists()
    assert (out / "summary.txt").exists()
    png = (out / "graph.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_derive_lists_transitions():
    result = invoke("derive", CORPUS / "partialccs.lns",
                    "--term", "par(a(nil),co_a(nil))")
    assert result.exit_code == 0
    assert "transitions=3" in result.output
    assert "-tau-> par(nil,nil)" in result.output


def test_derive_nil_has_none():
    result = invoke("derive", CORPUS / "partialccs.lns", "--term", "nil")
    assert "transitions=0" in result.output


def test_derive_union_maximal_progress():
    result = invoke("derive", CORPUS / "timing.lns",
                    "--tss", "almostTPA union parallelMax",
                    "--term", "par(a(nil),co_a(nil))")
    assert "-tau->" in result.output and "-sigma->" not in result.output


def test_regex_check_and_prefix():
    good = invoke("regex", "check", "open.read.close", "fileProtocol",
                  "--file", CORPUS / "fileserver_good.lns")
    assert good.exit_code == 0 and good.output.strip() == "true"
    partial = invoke("regex", "prefix", "open.read", "fileProtocol",
                     "--file", CORPUS / "fileserver_good.lns")
    assert partial.exit_code == 0
    full = invoke("regex", "check", "open.read", "fileProtocol",
                  "--file", CORPUS / "fileserver_good.lns")
    assert full.exit_code == 1 and full.output.strip() == "false"


def test_regex_include_with_witness():
    yes = invoke("regex", "include", "fileProtocol", "fileProtocol*",
                 "--file", CORPUS / "fileserver_good.lns")
    assert yes.exit_code == 0 and yes.output.strip() == "true"
    no = invoke("regex", "include", "fileProtocol*", "fileProtocol",
                "--file", CORPUS / "fileserver_good.lns")
    assert no.exit_code == 1
    assert "witness=%e" in no.output
