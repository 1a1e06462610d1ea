"""Command-line surface: run, explore, report, derive, and regex queries
over `.lns` system files."""

from __future__ import annotations

import json as jsonlib
import sys

import click

from .calculus import Configuration, eval_lang
from .reducer import explore as explore_graph
from .reducer import run as run_scheduler
from .render import RenderError, render_process
from .rex import include_witness, member, prefix_feasible, regex_to_trace, render_regex
from .sysfile import load, parse_lang_text, parse_regex_text
from .terms import parse_term, render_term
from .tss import derive_all


@click.group()
def main():
    """Run, explore, and query systems of communicating processes."""


def _configuration(sf, mode):
    mode = mode or sf.options.get("mode", "exact")
    if mode not in ("exact", "prefix"):
        raise click.ClickException(f"unknown monitor mode {mode!r}")
    return Configuration(sf.entry_process, mode=mode)


def _exit_code(log, status):
    if any(" stuck " in f" {line}" or line.startswith("stuck ") or " stuck kind=" in line
           for line in log):
        return 3
    return 0 if status == "quiescent" else 2


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Scheduler seed.")
@click.option("--max-steps", type=int, default=None, help="Step limit.")
@click.option("--mode", type=click.Choice(["exact", "prefix"]), default=None,
              help="Monitor checking mode (default from the file, else exact).")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable log.")
def run(path, seed, max_steps, mode, as_json):
    """Run the entry process with a seeded scheduler and print the log."""
    sf = load(path)
    if seed is None:
        seed = int(sf.options.get("seed", 0))
    if max_steps is None:
        max_steps = int(sf.options.get("max_steps", 400))
    c = _configuration(sf, mode)
    final, log, status = run_scheduler(c, seed=seed, max_steps=max_steps)
    code = _exit_code(log, status)
    if as_json:
        try:
            final_text = render_process(final.root, sf.tsses, sf.regexes)
        except RenderError:
            # Run-time values (unions, collected traces) may have no name
            # in the source file; fall back to the structural form.
            final_text = repr(final.root)
        click.echo(jsonlib.dumps({
            "status": status,
            "exit": code,
            "log": log,
            "final": final_text,
        }, indent=2))
    else:
        for line in log:
            click.echo(line)
        click.echo(f"status={status}")
    sys.exit(code)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--depth", type=int, default=50, help="Exploration depth bound.")
@click.option("--max-nodes", type=int, default=10_000, help="Node cap.")
@click.option("--mode", type=click.Choice(["exact", "prefix"]), default=None)
@click.option("--dot", "dot_path", type=click.Path(dir_okay=False), default=None,
              help="Write the graph in DOT format.")
@click.option("--edges", "edges_path", type=click.Path(dir_okay=False), default=None,
              help="Write a tab-delimited edge list.")
@click.option("--plot", "plot_path", type=click.Path(dir_okay=False), default=None,
              help="Render the graph to a PNG file.")
def explore(path, depth, max_nodes, mode, dot_path, edges_path, plot_path):
    """Explore the reachable configurations breadth-first."""
    sf = load(path)
    c = _configuration(sf, mode)
    graph = explore_graph(c, max_depth=depth, max_nodes=max_nodes)
    from . import report as report_mod
    if dot_path:
        report_mod.write_dot(graph, dot_path)
    if edges_path:
        report_mod.write_edge_list(graph, edges_path)
    if plot_path:
        report_mod.render_graph_png(graph, plot_path)
    for line in report_mod.summary_lines(graph):
        click.echo(line)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "outdir", type=click.Path(file_okay=False), required=True,
              help="Output directory for edges.tsv, graph.dot, graph.png, summary.txt.")
@click.option("--depth", type=int, default=50)
@click.option("--max-nodes", type=int, default=10_000)
@click.option("--mode", type=click.Choice(["exact", "prefix"]), default=None)
def report(path, outdir, depth, max_nodes, mode):
    """Explore a system and write the full file report."""
    sf = load(path)
    c = _configuration(sf, mode)
    graph = explore_graph(c, max_depth=depth, max_nodes=max_nodes)
    from . import report as report_mod
    paths = report_mod.write_report(graph, outdir)
    for kind, p in paths.items():
        click.echo(f"{kind}={p}")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--tss", "tss_expr", default=None,
              help="TSS name or `union` expression (default: the file's only TSS).")
@click.option("--term", "term_text", required=True, help="Ground source term.")
@click.option("--steps", type=int, default=1, help="Transition closure depth.")
def derive(path, tss_expr, term_text, steps):
    """List the transitions derivable from a term."""
    sf = load(path)
    if tss_expr is None:
        if len(sf.tsses) != 1:
            raise click.ClickException(
                "the file declares several TSSs; pick one with --tss")
        tss = next(iter(sf.tsses.values()))
    else:
        tss = eval_lang(parse_lang_text(tss_expr, sf))
    term = parse_term(term_text)
    seen = {term}
    frontier = [term]
    total = 0
    for _ in range(steps):
        next_frontier = []
        for source in frontier:
            transitions = sorted(derive_all(tss, source),
                                 key=lambda lt: (lt[0].name, repr(lt[1])))
            for label, target in transitions:
                click.echo(f"{render_term(source)} -{label.name}-> {render_term(target)}")
                total += 1
                if target not in seen:
                    seen.add(target)
                    next_frontier.append(target)
        frontier = next_frontier
    click.echo(f"transitions={total}")


@main.command("regex")
@click.argument("action", type=click.Choice(["check", "include", "prefix"]))
@click.argument("left")
@click.argument("right")
@click.option("--file", "path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Resolve names against this system file.")
def regex_cmd(action, left, right, path):
    """Regular-expression queries: membership, inclusion, prefix feasibility.

    check TRACE EXPR / prefix TRACE EXPR / include EXPR EXPR; exit code 0
    for a true answer, 1 for false.
    """
    sf = load(path) if path else None
    right_node = parse_regex_text(right, sf)
    if action == "include":
        left_node = parse_regex_text(left, sf)
        witness = include_witness(left_node, right_node)
        ok = witness is None
        click.echo("true" if ok else "false")
        if not ok:
            click.echo(f"witness={'.'.join(l.name for l in witness.labels) or '%e'}")
    else:
        trace = regex_to_trace(parse_regex_text(left, sf))
        if trace is None:
            raise click.ClickException(
                "the first argument must be a trace (a concatenation of labels)")
        ok = member(trace, right_node) if action == "check" \
            else prefix_feasible(trace, right_node)
        click.echo("true" if ok else "false")
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
