"""Shared fixtures-as-functions for the test modules."""

from __future__ import annotations

from dcds.fo import Fact, Instance
from dcds.terms import Constant
from dcds.ts import TransitionSystem

A, B = Constant("a"), Constant("b")

# filled by the acceptance tests and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def db(*facts: tuple[str, ...]) -> Instance:
    return Instance(Fact(r, tuple(Constant(x) for x in args)) for r, *args in facts)


def golden_nonwa_pruning() -> TransitionSystem:
    """Hand-built four-state pruning of the nondeterministic R/Q ping-pong with init R(a).

    From R(v) the call result is a or another value b; Q(v) copies back to R(v).
    """
    states = [db(("R", "a")), db(("Q", "a")), db(("Q", "b")), db(("R", "b"))]
    edges = [(0, 1), (0, 2), (1, 0), (2, 3), (3, 1), (3, 2)]
    return TransitionSystem.from_graph(states, edges, 0)


def reachable_via_bfs(ts: TransitionSystem, target) -> bool:
    """Plain breadth-first search from the initial state for a state satisfying `target`."""
    seen, frontier = {ts.initial}, [ts.initial]
    while frontier:
        nxt = []
        for i in frontier:
            if target(ts.db(i)):
                return True
            for j in ts.successors(i):
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return False
