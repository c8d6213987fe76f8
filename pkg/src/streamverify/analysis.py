"""Dependency graph, well-formedness, evaluation order and unfolding windows."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import networkx as nx

from .errors import WellFormednessError
from .frontend.ast import Expr, Offset, Specification, stream_accesses, walk


@dataclass(frozen=True)
class Edge:
    source: str  # the output doing the access
    target: str
    weight: int


@dataclass
class DependencyGraph:
    nodes: list[str]
    edges: list[Edge] = field(default_factory=list)
    inputs: frozenset[str] = frozenset()

    def to_dot(self) -> str:
        out = ["digraph dependencies {"]
        for n in self.nodes:
            shape = "box" if n in self.inputs else "ellipse"
            out.append(f'  "{n}" [shape={shape}];')
        for e in self.edges:
            out.append(f'  "{e.source}" -> "{e.target}" [label="{e.weight}"];')
        out.append("}")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class UnfoldingWindow:
    past: int    # w_p
    future: int  # w_f

    def __iter__(self):
        return iter((self.past, self.future))


def build_graph(spec: Specification) -> DependencyGraph:
    """One edge per syntactic stream access in an output definition.

    Annotation formulas add no edges.
    """
    edges = [
        Edge(d.name, name, k)
        for d in spec.outputs
        for name, k in stream_accesses(d.expr)
    ]
    return DependencyGraph(spec.input_names + spec.output_names, edges, frozenset(spec.input_names))


def _zero_walk_in_component(comp: set[str], edges: list[Edge]) -> list[Edge] | None:
    """A closed walk of total weight zero inside one strongly connected component, if any."""
    inner = [e for e in edges if e.source in comp and e.target in comp]
    if not inner:
        return None
    signs = {(e.weight > 0) - (e.weight < 0) for e in inner}
    if signs <= {0, 1} or signs <= {0, -1}:
        # one-signed: only all-zero walks qualify
        zero = nx.DiGraph()
        zero.add_edges_from((e.source, e.target, {"edge": e}) for e in inner if e.weight == 0)
        try:
            cyc = nx.find_cycle(zero)
        except nx.NetworkXNoCycle:
            return None
        return [zero.edges[u, v]["edge"] for u, v in cyc]
    # mixed signs: search (node, running sum) states with a bounded excursion
    bound = 2 * len(comp) * max(abs(e.weight) for e in inner) + 1
    out: dict[str, list[Edge]] = {}
    for e in inner:
        out.setdefault(e.source, []).append(e)
    for start in sorted(comp):
        parent: dict[tuple[str, int], tuple[tuple[str, int], Edge]] = {}
        queue = deque([(start, 0)])
        seen = {(start, 0)}
        while queue:
            state = queue.popleft()
            node, total = state
            for e in out.get(node, ()):
                nxt = (e.target, total + e.weight)
                if nxt == (start, 0):
                    walk_edges = [e]
                    cur = state
                    while cur != (start, 0):
                        cur, via = parent[cur]
                        walk_edges.append(via)
                    return walk_edges[::-1]
                if abs(nxt[1]) > bound or nxt in seen:
                    continue
                seen.add(nxt)
                parent[nxt] = (state, e)
                queue.append(nxt)
    return None


def find_zero_cycle(g: DependencyGraph) -> list[Edge] | None:
    dg = nx.DiGraph()
    dg.add_nodes_from(g.nodes)
    dg.add_edges_from((e.source, e.target) for e in g.edges)
    for comp in nx.strongly_connected_components(dg):
        walk_edges = _zero_walk_in_component(comp, g.edges)
        if walk_edges:
            return walk_edges
    return None


def check_well_formed(g: DependencyGraph) -> None:
    """Raise :class:`WellFormednessError` if some dependency cycle has total weight zero."""
    cycle = find_zero_cycle(g)
    if cycle is None:
        return
    names = " -> ".join(f"{e.source} [{e.weight:+d}]" for e in cycle) + f" -> {cycle[0].source}"
    raise WellFormednessError(
        f"cyclic stream dependency with total offset 0: {names}",
        [(e.source, e.target, e.weight) for e in cycle],
    )


def evaluation_order(g: DependencyGraph) -> list[list[str]]:
    """Layers of outputs such that zero-offset accesses point to earlier layers."""
    outputs = [n for n in g.nodes if n not in g.inputs]
    deps = {n: set() for n in outputs}
    for e in g.edges:
        if e.weight == 0 and e.target not in g.inputs and e.target != e.source:
            deps[e.source].add(e.target)
    layers: list[list[str]] = []
    done: set[str] = set()
    remaining = list(outputs)
    while remaining:
        layer = [n for n in remaining if deps[n] <= done]
        if not layer:
            raise WellFormednessError("zero-offset dependency cycle among " + ", ".join(remaining), [])
        layers.append(layer)
        done.update(layer)
        remaining = [n for n in remaining if n not in done]
    return layers


def offsets_in(e: Expr) -> list[int]:
    return [n.offset for n in walk(e) if isinstance(n, Offset)]


def compute_window(spec: Specification) -> UnfoldingWindow:
    """Most negative and greatest positive offset over outputs and annotations."""
    ks = [0]
    for d in spec.outputs:
        ks += offsets_in(d.expr)
    for a in spec.assumptions + spec.assertions:
        ks += offsets_in(a.formula)
    return UnfoldingWindow(max(0, -min(ks)), max(0, max(ks)))
