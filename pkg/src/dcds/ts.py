"""Finite database-labelled transition systems, runs, exporters and bisimulation checkers."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .fo import Fact, Instance
from .syntax import parse_fact, parse_term
from .terms import Call, Constant, Partition, ServiceCallMap, Term

Annotation = Partition | ServiceCallMap | None


@dataclass(frozen=True)
class State:
    db: Instance
    annotation: Annotation = None


@dataclass(frozen=True, order=True)
class Edge:
    src: int
    dst: int
    label: str = ""


class TransitionSystem:
    """Explicit-state graph; states are deduplicated on (db, annotation)."""

    def __init__(self) -> None:
        self.states: list[State] = []
        self.initial: int = 0
        self._index: dict[State, int] = {}
        self._edges: set[Edge] = set()
        self._succ: dict[int, set[int]] = {}

    # -- construction
    def add_state(self, db: Instance, annotation: Annotation = None) -> tuple[int, bool]:
        s = State(db, annotation)
        idx = self._index.get(s)
        if idx is not None:
            return idx, False
        idx = len(self.states)
        self.states.append(s)
        self._index[s] = idx
        self._succ[idx] = set()
        return idx, True

    def add_edge(self, src: int, dst: int, label: str = "") -> None:
        if not (0 <= src < len(self.states) and 0 <= dst < len(self.states)):
            raise IndexError(f"edge {src}->{dst} refers to an unknown state")
        self._edges.add(Edge(src, dst, label))
        self._succ[src].add(dst)

    @classmethod
    def single(cls, db: Instance, annotation: Annotation = None) -> "TransitionSystem":
        ts = cls()
        ts.add_state(db, annotation)
        return ts

    @classmethod
    def from_graph(cls, dbs: Iterable[Instance], edges: Iterable[tuple[int, int]], initial: int = 0) -> "TransitionSystem":
        """Build from an explicit state list (duplicates kept apart) and index pairs."""
        ts = cls()
        for i, db in enumerate(dbs):
            s = State(db)
            ts.states.append(s)
            ts._index.setdefault(s, i)
            ts._succ[i] = set()
        for a, b in edges:
            ts.add_edge(a, b)
        ts.initial = initial
        return ts

    # -- queries
    @property
    def edges(self) -> list[Edge]:
        return sorted(self._edges)

    def successors(self, i: int) -> list[int]:
        return sorted(self._succ[i])

    def db(self, i: int) -> Instance:
        return self.states[i].db

    def index_of(self, db: Instance, annotation: Annotation = None) -> int | None:
        return self._index.get(State(db, annotation))

    def __len__(self) -> int:
        return len(self.states)

    def adom(self) -> frozenset[Term]:
        out: set[Term] = set()
        for s in self.states:
            out |= s.db.adom
        return frozenset(out)

    def depths(self) -> dict[int, int]:
        dist = {self.initial: 0}
        queue = deque([self.initial])
        while queue:
            u = queue.popleft()
            for v in self.successors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def reachable(self) -> list[int]:
        return sorted(self.depths())

    def truncate(self, depth: int) -> "TransitionSystem":
        """States within `depth` steps; only states strictly inside keep their outgoing edges."""
        dist = self.depths()
        keep = [i for i in range(len(self.states)) if dist.get(i, depth + 1) <= depth]
        remap = {old: new for new, old in enumerate(keep)}
        out = TransitionSystem()
        for old in keep:
            s = self.states[old]
            out.add_state(s.db, s.annotation)
        out.initial = remap[self.initial]
        for e in self._edges:
            if e.src in remap and dist[e.src] < depth and e.dst in remap:
                out.add_edge(remap[e.src], remap[e.dst], e.label)
        return out

    def project(self, relations: Iterable[str]) -> tuple[frozenset[Instance], frozenset[tuple[Instance, Instance]]]:
        """Reachable node and edge sets after restricting every db to `relations`."""
        rels = set(relations)
        reach = self.reachable()
        nodes = frozenset(self.db(i).restrict(rels) for i in reach)
        edges = frozenset(
            (self.db(e.src).restrict(rels), self.db(e.dst).restrict(rels)) for e in self._edges if e.src in set(reach)
        )
        return nodes, edges

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TransitionSystem)
            and self.states == other.states
            and self.initial == other.initial
            and self._edges == other._edges
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"TransitionSystem({len(self.states)} states, {len(self._edges)} edges)"

    # -- export
    def to_json(self) -> str:
        states = []
        for i, s in enumerate(self.states):
            states.append({"id": i, "facts": [str(f) for f in s.db.sorted()], "annotation": _annotation_json(s.annotation)})
        edges = [{"src": e.src, "dst": e.dst, "label": e.label} for e in self.edges]
        return json.dumps({"states": states, "initial": self.initial, "edges": edges}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TransitionSystem":
        data = json.loads(text)
        recs = sorted(data["states"], key=lambda r: r["id"])
        if [r["id"] for r in recs] != list(range(len(recs))):
            raise ValueError("state ids must be 0..n-1")
        ts = cls.from_graph((Instance(parse_fact(f) for f in r["facts"]) for r in recs), (), data["initial"])
        for i, r in enumerate(recs):
            ts.states[i] = State(ts.states[i].db, _annotation_from_json(r.get("annotation")))
        ts._index = {}
        for i, st in enumerate(ts.states):
            ts._index.setdefault(st, i)
        for e in data["edges"]:
            ts.add_edge(e["src"], e["dst"], e.get("label", ""))
        return ts

    def to_dot(self, name: str = "ts") -> str:
        lines = [f"digraph {name} {{", "  node [shape=box];"]
        for i, s in enumerate(self.states):
            label = "\\n".join(str(f) for f in s.db.sorted()) or "(empty)"
            if s.annotation is not None:
                label += "\\n" + _escape(str(s.annotation))
            style = ", penwidth=2" if i == self.initial else ""
            lines.append(f'  s{i} [label="{_escape_keep_newlines(label)}"{style}];')
        for e in self.edges:
            lab = f' [label="{_escape(e.label)}"]' if e.label else ""
            lines.append(f"  s{e.src} -> s{e.dst}{lab};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def export(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "dot":
            return self.to_dot()
        raise ValueError(f"unknown export format {fmt!r}")


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def _escape_keep_newlines(s: str) -> str:
    return s.replace('"', '\\"')


def _annotation_json(a: Annotation) -> object:
    if a is None:
        return None
    if isinstance(a, Partition):
        return {
            "kind": "partition",
            "cells": [[str(t) for t in sorted(c, key=lambda t: t.key())] for c in a.cells],
            "reps": [str(r) for r in a.reps],
        }
    return {"kind": "calls", "map": [[str(c), str(v)] for c, v in a.items()]}


def _annotation_from_json(rec: object) -> Annotation:
    if rec is None:
        return None
    if rec["kind"] == "partition":
        cells = [[parse_term(t) for t in c] for c in rec["cells"]]
        reps = {t: parse_term(r) for c, r in zip(cells, rec["reps"]) for t in c}
        return Partition(cells, reps)
    return ServiceCallMap({parse_term(c): parse_term(v) for c, v in rec["map"]})


@dataclass(frozen=True)
class Run:
    states: tuple[int, ...]

    def check(self, ts: TransitionSystem) -> bool:
        if not self.states or self.states[0] != ts.initial:
            return False
        return all(b in ts.successors(a) for a, b in zip(self.states, self.states[1:]))


def runs(ts: TransitionSystem, length: int) -> Iterator[Run]:
    """All runs with exactly `length` transitions (finite prefixes)."""
    stack = [(ts.initial,)]
    while stack:
        path = stack.pop()
        if len(path) == length + 1:
            yield Run(path)
            continue
        for v in reversed(ts.successors(path[-1])):
            stack.append(path + (v,))


# --- budgets ----------------------------------------------------------------


@dataclass
class DivergenceReport:
    """Returned instead of a system when construction runs out of budget."""

    reason: str
    states_explored: int
    terms_seen: int = 0
    longest_chain: Term | None = None
    partial: TransitionSystem | None = field(default=None, repr=False)

    def __str__(self) -> str:
        msg = f"divergence: {self.reason} after {self.states_explored} states"
        if self.terms_seen:
            msg += f", {self.terms_seen} terms"
        if self.longest_chain is not None:
            msg += f"; longest nested call chain: {self.longest_chain} (depth {self.longest_chain.depth})"
        return msg


class BudgetExceeded(RuntimeError):
    pass


# --- bisimulation -------------------------------------------------------------


Bijection = frozenset  # of (value1, value2) pairs


def isomorphisms(
    db1: Instance,
    db2: Instance,
    fixed: Mapping[Term, Term] | None = None,
    fixed_inv: Mapping[Term, Term] | None = None,
) -> Iterator[dict[Term, Term]]:
    """Bijections adom(db1) -> adom(db2) mapping db1 onto db2.

    `fixed` pins images of some values of db1; `fixed_inv` pins preimages of values of db2.
    """
    fixed = fixed or {}
    fixed_inv = fixed_inv or {}
    if len(db1) != len(db2) or len(db1.adom) != len(db2.adom):
        return
    sig1 = _signature(db1)
    sig2 = _signature(db2)
    if sorted(sig1.values()) != sorted(sig2.values()):
        return
    if {r: len(v) for r, v in db1.by_relation.items()} != {r: len(v) for r, v in db2.by_relation.items()}:
        return
    dom = sorted(db1.adom, key=lambda t: (t not in fixed, t.key()))
    ran = sorted(db2.adom, key=lambda t: t.key())
    facts_by_value: dict[Term, list[Fact]] = {}
    for f in db1.facts:
        for a in set(f.args):
            facts_by_value.setdefault(a, []).append(f)
    g: dict[Term, Term] = {}
    used: set[Term] = set()

    def consistent(x: Term) -> bool:
        for f in facts_by_value.get(x, ()):
            if all(a in g for a in f.args) and Fact(f.relation, tuple(g[a] for a in f.args)) not in db2:
                return False
        return True

    def go(k: int) -> Iterator[dict[Term, Term]]:
        if k == len(dom):
            yield dict(g)
            return
        x = dom[k]
        if x in fixed:
            options = [fixed[x]] if fixed[x] in db2.adom else []
        else:
            options = ran
        for y in options:
            if y in used or sig1[x] != sig2[y]:
                continue
            if y in fixed_inv and fixed_inv[y] != x:
                continue
            g[x] = y
            used.add(y)
            if consistent(x):
                yield from go(k + 1)
            del g[x]
            used.discard(y)

    yield from go(0)


def _signature(db: Instance) -> dict[Term, tuple]:
    sig: dict[Term, list] = {}
    for f in db.facts:
        for i, a in enumerate(f.args):
            sig.setdefault(a, []).append((f.relation, i))
    return {a: tuple(sorted(v)) for a, v in sig.items()}


@dataclass
class BisimVerdict:
    bisimilar: bool
    mode: str | None = None  # "rigid" or "free"
    relation: frozenset = frozenset()
    reason: str = ""

    def __bool__(self) -> bool:
        return self.bisimilar


def _rigid_ok(g: Mapping[Term, Term], rigid: frozenset[Term]) -> bool:
    return all(g[x] == x for x in g if x in rigid) and all(x in g and g[x] == x for x in rigid if x in g.values())


def _check(
    ts1: TransitionSystem,
    ts2: TransitionSystem,
    step_pairs,
    rigid: frozenset[Term],
    max_triples: int,
) -> frozenset:
    """Greatest fixpoint over forward-generated candidate triples; returns the relation or empty.

    `step_pairs` yields (bijection, answers_forward, answers_backward) for a pair of moves.
    """
    d1, d2 = ts1.db(ts1.initial), ts2.db(ts2.initial)
    starts = []
    for g in isomorphisms(d1, d2):
        if _rigid_ok(g, rigid):
            starts.append((ts1.initial, frozenset(g.items()), ts2.initial))
    if not starts:
        return frozenset()
    fwd_moves: dict[tuple, dict[tuple[int, int], list[tuple]]] = {}
    bwd_moves: dict[tuple, dict[tuple[int, int], list[tuple]]] = {}
    queue = deque(starts)
    seen = set(starts)
    while queue:
        t = queue.popleft()
        s1, h, s2 = t
        fm: dict[tuple[int, int], list[tuple]] = {}
        bm: dict[tuple[int, int], list[tuple]] = {}
        for n1 in ts1.successors(s1):
            for n2 in ts2.successors(s2):
                fl, bl = fm.setdefault((n1, n2), []), bm.setdefault((n1, n2), [])
                for h2, as_fwd, as_bwd in step_pairs(s1, h, s2, n1, n2, rigid):
                    u = (n1, h2, n2)
                    if as_fwd:
                        fl.append(u)
                    if as_bwd:
                        bl.append(u)
                    if u not in seen:
                        seen.add(u)
                        if len(seen) > max_triples:
                            raise BudgetExceeded(f"bisimulation candidate space exceeds {max_triples} triples")
                        queue.append(u)
        fwd_moves[t], bwd_moves[t] = fm, bm
    alive = set(seen)
    changed = True
    while changed:
        changed = False
        for t in list(alive):
            s1, _, s2 = t
            fm, bm = fwd_moves[t], bwd_moves[t]
            fwd = all(any(u in alive for n2 in ts2.successors(s2) for u in fm[(n1, n2)]) for n1 in ts1.successors(s1))
            bwd = all(any(u in alive for n1 in ts1.successors(s1) for u in bm[(n1, n2)]) for n2 in ts2.successors(s2))
            if not (fwd and bwd):
                alive.discard(t)
                changed = True
    if any(s in alive for s in starts):
        return frozenset(alive)
    return frozenset()


def _history_steps(ts1: TransitionSystem, ts2: TransitionSystem):
    def step(s1, h, s2, n1, n2, rigid):
        fwd = dict(h)
        inv = {y: x for x, y in h}
        for g in isomorphisms(ts1.db(n1), ts2.db(n2), fwd, inv):
            if _rigid_ok(g, rigid):
                yield h | frozenset(g.items()), True, True

    return step


def _persistence_steps(ts1: TransitionSystem, ts2: TransitionSystem):
    """A move of ts1 must keep the partners of values persisting in ts1; a move of ts2
    must keep the partners of values persisting in ts2."""

    def step(s1, h, s2, n1, n2, rigid):
        hm = dict(h)
        inv = {y: x for x, y in h}
        keep1 = ts1.db(s1).adom & ts1.db(n1).adom
        keep2 = ts2.db(s2).adom & ts2.db(n2).adom
        for g in isomorphisms(ts1.db(n1), ts2.db(n2)):
            if not _rigid_ok(g, rigid):
                continue
            as_fwd = all(x in hm and g[x] == hm[x] for x in keep1)
            ginv = {y: x for x, y in g.items()}
            as_bwd = all(y in inv and ginv[y] == inv[y] for y in keep2)
            if as_fwd or as_bwd:
                yield frozenset(g.items()), as_fwd, as_bwd

    return step


def _decide(ts1, ts2, steps, rigid, max_triples) -> BisimVerdict:
    if rigid is None:
        rigid = ts1.db(ts1.initial).adom & ts2.db(ts2.initial).adom
    rel = _check(ts1, ts2, steps, frozenset(rigid), max_triples)
    if rel:
        return BisimVerdict(True, "rigid", rel)
    if rigid:
        rel = _check(ts1, ts2, steps, frozenset(), max_triples)
        if rel:
            return BisimVerdict(True, "free", rel)
    return BisimVerdict(False, None, frozenset(), "no bijection between the initial states survives the refinement")


def history_bisimilar(
    ts1: TransitionSystem, ts2: TransitionSystem, rigid: Iterable[Term] | None = None, max_triples: int = 200_000
) -> BisimVerdict:
    """Bijections accumulate along the run: every value seen so far keeps its partner."""
    return _decide(ts1, ts2, _history_steps(ts1, ts2), rigid, max_triples)


def persistence_bisimilar(
    ts1: TransitionSystem, ts2: TransitionSystem, rigid: Iterable[Term] | None = None, max_triples: int = 200_000
) -> BisimVerdict:
    """Bijections are isomorphisms of the current databases; only persisting values keep their partner.

    When ts1 moves, values persisting in ts1 keep their image; when ts2 moves, values
    persisting in ts2 keep their preimage.
    """
    return _decide(ts1, ts2, _persistence_steps(ts1, ts2), rigid, max_triples)


__all__ = [
    "BisimVerdict", "BudgetExceeded", "DivergenceReport", "Edge", "Run", "State", "TransitionSystem",
    "history_bisimilar", "isomorphisms", "persistence_bisimilar", "runs", "Call", "Constant",
]
