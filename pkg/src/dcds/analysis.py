"""Static acyclicity checks: positive approximate, dependency graph and weak acyclicity,
dataflow graph with GR and GR+ acyclicity."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import islice

import networkx as nx

from . import fo
from .fo import Var
from .spec import Action, CallTemplate, DcdsSpec, Effect, Rule

TRUE_NODE = fo.TRUE_REL
DEFAULT_CYCLE_CAP = 10_000
DEFAULT_PATH_CAP = 200_000


def positive_approximate(spec: DcdsSpec) -> DcdsSpec:
    """Guards become `true`, filters and constraints vanish, parameters become free."""
    actions = tuple(
        Action(f"{a.name}", (), tuple(Effect(e.q_plus, None, e.head, e.pos) for e in a.effects), a.pos) for a in spec.actions
    )
    rules = tuple(Rule(fo.TrueF(), a.name) for a in spec.actions)
    return spec.with_(actions=actions, process=rules, equality_constraints=())


def _body_atoms(e: Effect) -> list[fo.Atom]:
    return [a for a, _, pos in fo.atoms_with_bound(e.q_plus) if pos]


# --- dependency graph -------------------------------------------------------


@dataclass
class DependencyGraph:
    nodes: set[tuple[str, int]]
    edges: set[tuple[tuple[str, int], tuple[str, int], bool]]

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for u, v, special in self.edges:
            if g.has_edge(u, v):
                g[u][v]["special"] |= special
            else:
                g.add_edge(u, v, special=special)
        return g

    def to_dot(self) -> str:
        lines = ["digraph dependency {"]
        for n in sorted(self.nodes):
            lines.append(f'  "{n[0]},{n[1]}";')
        for u, v, s in sorted(self.edges):
            lab = ' [label="*"]' if s else ""
            lines.append(f'  "{u[0]},{u[1]}" -> "{v[0]},{v[1]}"{lab};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def dependency_graph(spec: DcdsSpec) -> DependencyGraph:
    pos = positive_approximate(spec)
    nodes = {(r.name, i + 1) for r in spec.schema for i in range(r.arity)}
    edges: set = set()
    for a in pos.actions:
        for e in a.effects:
            for atom in _body_atoms(e):
                for i, x in enumerate(atom.args):
                    if not isinstance(x, Var):
                        continue
                    for h in e.head:
                        for j, t in enumerate(h.args):
                            if t == x:
                                edges.add(((atom.relation, i + 1), (h.relation, j + 1), False))
                            elif isinstance(t, CallTemplate) and x in t.args:
                                edges.add(((atom.relation, i + 1), (h.relation, j + 1), True))
    for u, v, _ in edges:
        nodes.add(u)
        nodes.add(v)
    return DependencyGraph(nodes, edges)


@dataclass
class WeakAcyclicity:
    graph: DependencyGraph
    acyclic: bool
    witness: list[tuple[tuple[str, int], tuple[str, int], bool]] = field(default_factory=list)


def weak_acyclicity(spec: DcdsSpec) -> WeakAcyclicity:
    """Acyclic iff no special edge lies inside a strongly connected component."""
    dg = dependency_graph(spec)
    g = dg.to_networkx()
    comp = {}
    for k, scc in enumerate(nx.strongly_connected_components(g)):
        for n in scc:
            comp[n] = k
    for u, v, special in sorted(dg.edges):
        if special and comp[u] == comp[v]:
            back = nx.shortest_path(g, v, u)
            cycle = [(u, v, True)] + [(a, b, g[a][b]["special"]) for a, b in zip(back, back[1:])]
            return WeakAcyclicity(dg, False, cycle)
    return WeakAcyclicity(dg, True)


# --- dataflow graph ---------------------------------------------------------


@dataclass(frozen=True)
class FlowEdge:
    id: int
    src: str
    dst: str
    special: bool
    actions: frozenset[str]

    def __str__(self) -> str:
        star = "*" if self.special else ""
        return f"{self.src}-{star}>{self.dst}#{self.id}"


@dataclass
class DataflowGraph:
    nodes: set[str]
    edges: list[FlowEdge]

    def actions_of(self, edge_id: int) -> frozenset[str]:
        return self.edges[edge_id].actions

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for e in self.edges:
            g.add_edge(e.src, e.dst, key=e.id, special=e.special)
        return g

    def to_dot(self) -> str:
        lines = ["digraph dataflow {"]
        for n in sorted(self.nodes):
            lines.append(f'  "{n}";')
        for e in self.edges:
            lab = "*" if e.special else ""
            acts = ",".join(sorted(e.actions))
            lines.append(f'  "{e.src}" -> "{e.dst}" [label="{lab}{e.id} {acts}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def dataflow_graph(spec: DcdsSpec) -> DataflowGraph:
    """One edge per (effect, body atom, head atom, head position).

    A body without relation atoms reads from the `true` node; a nullary head gets one
    ordinary edge. The `true` node carries a self-loop active in every action.
    """
    pos = positive_approximate(spec)
    raw: list[tuple[str, str, bool, str]] = []
    for a in pos.actions:
        for e in a.effects:
            sources = [atom.relation for atom in _body_atoms(e)] or [TRUE_NODE]
            for src in sources:
                for h in e.head:
                    if not h.args:
                        raw.append((src, h.relation, False, a.name))
                    for t in h.args:
                        raw.append((src, h.relation, isinstance(t, CallTemplate), a.name))
    nodes = {r.name for r in spec.schema}
    for s, d, _, _ in raw:
        nodes.add(s)
        nodes.add(d)
    if TRUE_NODE in nodes:
        raw.append((TRUE_NODE, TRUE_NODE, False, "*"))
    all_actions = frozenset(a.name for a in spec.actions)
    edges = [
        FlowEdge(k, s, d, sp, all_actions if act == "*" else frozenset({act})) for k, (s, d, sp, act) in enumerate(raw)
    ]
    return DataflowGraph(nodes, edges)


@dataclass
class GrResult:
    graph: DataflowGraph
    gr_acyclic: bool
    gr_plus_acyclic: bool
    witness: tuple[list[FlowEdge], list[FlowEdge], list[FlowEdge]] | None = None
    plus_witness: tuple[list[FlowEdge], list[FlowEdge], list[FlowEdge]] | None = None
    inconclusive: bool = False
    note: str = ""


class _Cap(Exception):
    pass


def _edge_cycles(df: DataflowGraph, cap: int) -> list[list[FlowEdge]]:
    """Simple cycles as edge lists; parallel edges give distinct cycles."""
    g = nx.DiGraph()
    g.add_nodes_from(df.nodes)
    par: dict[tuple[str, str], list[FlowEdge]] = {}
    for e in df.edges:
        par.setdefault((e.src, e.dst), []).append(e)
        g.add_edge(e.src, e.dst)
    out: list[list[FlowEdge]] = []
    for cyc in islice(nx.simple_cycles(g), cap + 1):
        hops = list(zip(cyc, cyc[1:] + cyc[:1]))
        combos: list[list[FlowEdge]] = [[]]
        for hop in hops:
            combos = [c + [e] for c in combos for e in par[hop]]
            if len(out) + len(combos) > cap:
                raise _Cap()
        out.extend(combos)
    if len(out) > cap:
        raise _Cap()
    return out


def _excused(pi2: list[FlowEdge], pi3: list[FlowEdge]) -> bool:
    for k, e in enumerate(pi2):
        later = set()
        for f in pi2[k + 1 :] + pi3:
            later |= f.actions
        if not (e.actions & later):
            return True
    return False


def gr_analysis(spec: DcdsSpec, cycle_cap: int = DEFAULT_CYCLE_CAP, path_cap: int = DEFAULT_PATH_CAP) -> GrResult:
    """Look for a simple cycle feeding, through a path with a special edge, into another simple cycle.

    Connector paths never repeat an edge and avoid the edges of the first cycle. A path is
    excused under GR+ when one of its edges shares no action with any later edge of the
    connector or with the target cycle.
    """
    df = dataflow_graph(spec)
    try:
        cycles = _edge_cycles(df, cycle_cap)
    except _Cap:
        return GrResult(df, False, False, inconclusive=True, note="inconclusive: treated as violating (cycle cap)")
    cycles_at: dict[str, list[list[FlowEdge]]] = {}
    for c in cycles:
        for n in {e.src for e in c}:
            cycles_at.setdefault(n, []).append(c)
    out_edges: dict[str, list[FlowEdge]] = {}
    for e in df.edges:
        out_edges.setdefault(e.src, []).append(e)

    gr_witness = None
    plus_witness = None
    budget = [path_cap]

    def explore(c1: list[FlowEdge], node: str, path: list[FlowEdge], used: set[int]) -> bool:
        """Returns True once an unexcused violation is found."""
        nonlocal gr_witness, plus_witness
        budget[0] -= 1
        if budget[0] < 0:
            raise _Cap()
        if any(e.special for e in path):
            for c3 in cycles_at.get(node, ()):
                if gr_witness is None:
                    gr_witness = (c1, list(path), c3)
                if not _excused(path, c3):
                    plus_witness = (c1, list(path), c3)
                    return True
        for e in out_edges.get(node, ()):
            if e.id in used:
                continue
            used.add(e.id)
            path.append(e)
            found = explore(c1, e.dst, path, used)
            path.pop()
            used.discard(e.id)
            if found:
                return True
        return False

    try:
        for c1 in cycles:
            banned = {e.id for e in c1}
            for start in sorted({e.src for e in c1}):
                if explore(c1, start, [], set(banned)):
                    break
            if plus_witness is not None:
                break
    except _Cap:
        return GrResult(df, False, False, gr_witness, None, True, "inconclusive: treated as violating (path cap)")
    return GrResult(df, gr_witness is None, plus_witness is None, gr_witness, plus_witness)


def format_path(path: list[FlowEdge]) -> str:
    return " ".join(str(e) for e in path)


__all__ = [
    "DataflowGraph", "DependencyGraph", "FlowEdge", "GrResult", "WeakAcyclicity", "dataflow_graph",
    "dependency_graph", "format_path", "gr_analysis", "positive_approximate", "weak_acyclicity",
]
