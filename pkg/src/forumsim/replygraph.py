"""User-user reply graph and its structural descriptors.

An undirected edge links a commenter to the author of the parent item;
self-interactions add the node but never an edge. Raw exchange counts are
kept as ``raw_weight`` and normalized to (0,1] by the maximum count.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from .events import COMMENT_EVENT_TYPES, EventRecord


@dataclass(frozen=True)
class GraphDescriptors:
    nodes: int
    edges: int
    density: float
    avg_degree: float
    weighted_avg_degree: float
    avg_weighted_clustering: float
    lcc_nodes: int
    lcc_share: float


@dataclass
class InteractionGraph:
    graph: nx.Graph

    @property
    def nodes(self):
        return self.graph.nodes

    @property
    def edges(self):
        return self.graph.edges

    def neighbors(self, node):
        return self.graph[node]

    def edge_list(self):
        """Sorted (u, v, raw_weight, weight) rows, u < v."""
        rows = []
        for u, v, data in self.graph.edges(data=True):
            a, b = (u, v) if u <= v else (v, u)
            rows.append((a, b, data["raw_weight"], data["weight"]))
        rows.sort()
        return rows


def build_reply_graph(events: list[EventRecord]) -> InteractionGraph:
    """Accumulate reply pairs from the log and normalize edge weights.

    Event order does not matter as long as parents resolve; the graph is a
    pure function of the set of comment events.
    """
    authors: dict[int, int] = {}
    for ev in events:
        if ev.type == "post":
            authors[ev.post_id] = ev.agent
        elif ev.type in COMMENT_EVENT_TYPES:
            authors[ev.comment_id] = ev.agent
    g = nx.Graph()
    for ev in events:
        if ev.type not in COMMENT_EVENT_TYPES:
            continue
        parent_author = authors.get(ev.parent_id)
        if parent_author is None:
            continue
        commenter = ev.agent
        g.add_node(commenter)
        g.add_node(parent_author)
        if commenter == parent_author:
            continue
        if g.has_edge(commenter, parent_author):
            g[commenter][parent_author]["raw_weight"] += 1
        else:
            g.add_edge(commenter, parent_author, raw_weight=1)
    _normalize(g)
    return InteractionGraph(graph=g)


def _normalize(g: nx.Graph) -> None:
    if g.number_of_edges() == 0:
        return
    max_raw = max(d["raw_weight"] for _u, _v, d in g.edges(data=True))
    for _u, _v, d in g.edges(data=True):
        d["weight"] = d["raw_weight"] / max_raw


def descriptors(ig: InteractionGraph) -> GraphDescriptors:
    g = ig.graph
    n, m = g.number_of_nodes(), g.number_of_edges()
    if n == 0:
        return GraphDescriptors(0, 0, 0.0, 0.0, 0.0, 0.0, 0, 0.0)
    density = 2.0 * m / (n * (n - 1)) if n > 1 else 0.0
    avg_degree = 2.0 * m / n
    weighted_degrees = [
        sum(d["weight"] for d in g[u].values()) for u in g.nodes
    ]
    weighted_avg_degree = sum(weighted_degrees) / n
    clustering = nx.average_clustering(g, weight="weight") if m else 0.0
    lcc_n = len(max(nx.connected_components(g), key=len)) if n else 0
    return GraphDescriptors(
        nodes=n,
        edges=m,
        density=density,
        avg_degree=avg_degree,
        weighted_avg_degree=weighted_avg_degree,
        avg_weighted_clustering=clustering,
        lcc_nodes=lcc_n,
        lcc_share=lcc_n / n,
    )


def largest_component(ig: InteractionGraph) -> tuple[InteractionGraph, float]:
    """Node-induced subgraph of the largest component and its node share."""
    g = ig.graph
    if g.number_of_nodes() == 0:
        return InteractionGraph(graph=nx.Graph()), 0.0
    comp = max(nx.connected_components(g), key=len)
    sub = g.subgraph(comp).copy()
    return InteractionGraph(graph=sub), len(comp) / g.number_of_nodes()


def degree_histogram(ig: InteractionGraph) -> list[tuple[int, int]]:
    counts: dict[int, int] = {}
    for _node, deg in ig.graph.degree():
        counts[deg] = counts.get(deg, 0) + 1
    return sorted(counts.items())


def write_edge_list(path, ig: InteractionGraph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for u, v, raw, w in ig.edge_list():
            fh.write(f"{u}\t{v}\t{raw}\t{w:.6f}\n")


def write_degree_histogram(path, ig: InteractionGraph) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("degree,count\n")
        for degree, count in degree_histogram(ig):
            fh.write(f"{degree},{count}\n")
