"""File reports for exploration graphs: a tab-delimited edge list, a DOT
export, and a rendered PNG of the graph."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import networkx as nx  # noqa: E402

from .reducer import ExplorationGraph  # noqa: E402


def write_edge_list(graph: ExplorationGraph, path) -> None:
    lines = ["src\trule\tdetail\tdst"]
    lines.extend(graph.edge_lines())
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_dot(graph: ExplorationGraph, path) -> None:
    Path(path).write_text(graph.to_dot() + "\n", encoding="utf-8")


def render_graph_png(graph: ExplorationGraph, path) -> None:
    g = nx.MultiDiGraph()
    g.add_nodes_from(range(len(graph.nodes)))
    for src, ev, dst in graph.edges:
        g.add_edge(src, dst, rule=ev.rule)
    pos = nx.spring_layout(g, seed=0)
    colors = ["#d64541" if graph.diagnoses.get(i) else "#4a90d9"
              for i in range(len(graph.nodes))]
    fig, ax = plt.subplots(figsize=(9, 7))
    nx.draw_networkx_nodes(g, pos, node_color=colors, node_size=260, ax=ax)
    nx.draw_networkx_labels(g, pos, font_size=7, font_color="white", ax=ax)
    nx.draw_networkx_edges(g, pos, ax=ax, arrowsize=9,
                           connectionstyle="arc3,rad=0.08")
    edge_labels = {(s, d): data["rule"]
                   for s, d, data in g.edges(data=True)}
    nx.draw_networkx_edge_labels(g, pos, edge_labels=edge_labels,
                                 font_size=6, ax=ax)
    ax.set_axis_off()
    title = f"{len(graph.nodes)} configurations, {len(graph.edges)} transitions"
    if graph.truncated:
        title += f" (truncated: {graph.reason})"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def summary_lines(graph: ExplorationGraph):
    yield f"nodes={len(graph.nodes)}"
    yield f"edges={len(graph.edges)}"
    yield f"stuck-nodes={len(graph.diagnoses)}"
    yield f"truncated={'yes' if graph.truncated else 'no'}"
    if graph.truncated:
        yield f"reason={graph.reason}"
    for i in sorted(graph.diagnoses):
        for d in graph.diagnoses[i]:
            yield f"node={i} {d.render()}"


def write_report(graph: ExplorationGraph, outdir) -> dict:
    """Write edges.tsv, graph.dot, graph.png, and summary.txt into outdir."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": out / "edges.tsv",
        "dot": out / "graph.dot",
        "png": out / "graph.png",
        "summary": out / "summary.txt",
    }
    write_edge_list(graph, paths["edges"])
    write_dot(graph, paths["dot"])
    render_graph_png(graph, paths["png"])
    paths["summary"].write_text("\n".join(summary_lines(graph)) + "\n",
                                encoding="utf-8")
    return paths
