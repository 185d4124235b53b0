"""Seeded generators for random transition systems and random formulas."""

from __future__ import annotations

import random
from typing import Sequence

from . import fo, mu
from .fo import Fact, Instance, Var
from .terms import Constant
from .ts import TransitionSystem


def random_ts(
    rng: random.Random,
    max_states: int = 8,
    relations: Sequence[tuple[str, int]] = (("Q", 0), ("P", 1)),
    values: Sequence[str] = ("a", "b"),
    edge_prob: float = 0.3,
) -> TransitionSystem:
    """A random graph whose states carry random (possibly repeated) instances; state 0 is initial."""
    n = rng.randint(1, max_states)
    consts = [Constant(v) for v in values]
    dbs = []
    for _ in range(n):
        facts = []
        for name, arity in relations:
            if arity == 0:
                if rng.random() < 0.4:
                    facts.append(Fact(name, ()))
            else:
                for v in consts:
                    if rng.random() < 0.4:
                        facts.append(Fact(name, (v,) * arity))
        dbs.append(Instance(facts))
    edges = [(i, j) for i in range(n) for j in range(n) if rng.random() < edge_prob]
    return TransitionSystem.from_graph(dbs, edges, 0)


def _closed_leaf(rng: random.Random, relations: Sequence[tuple[str, int]], constants: Sequence[str]) -> mu.MuFormula:
    name, arity = rng.choice(list(relations))
    kind = rng.randrange(3)
    if kind == 0 and constants:
        return mu.FOQuery(fo.Atom(name, tuple(Constant(rng.choice(list(constants))) for _ in range(arity))))
    if kind == 1 or not constants:
        y = Var("y")
        return mu.FOQuery(fo.Exists((y,), fo.Atom(name, (y,) * arity)) if arity else fo.Atom(name, ()))
    return mu.FOQuery(fo.TrueF())


def random_mulp(
    rng: random.Random,
    depth: int = 3,
    relations: Sequence[tuple[str, int]] = (("R", 1), ("Q", 1)),
    constants: Sequence[str] = ("a",),
) -> mu.MuFormula:
    """A random closed formula of the persistence fragment with nesting depth at most `depth`.

    Candidates outside the fragment (possible when a predicate variable carries free
    individuals into a modality) are redrawn.
    """
    while True:
        f = _draw(rng, depth, relations, constants)
        if mu.classify(f) == "muL_P":
            return f


def _draw(rng: random.Random, depth: int, relations: Sequence[tuple[str, int]], constants: Sequence[str]) -> mu.MuFormula:
    counter = [0]
    unary = [r for r in relations if r[1] >= 1] or list(relations)

    def modal(body: mu.MuFormula, box: bool) -> mu.MuFormula:
        fv = sorted(mu.free_individuals(body), key=lambda v: v.name)
        if not fv:
            return mu.Box(body) if box else mu.Diamond(body)
        cls = mu.LiveGuardedBox if box else mu.LiveGuardedDiamond
        return cls(tuple(fv), body)

    def gen(d: int, xs: tuple[Var, ...], allowed: frozenset[str]) -> mu.MuFormula:
        if d == 0 or rng.random() < 0.1:
            options = ["closed"] + (["open", "open"] if xs else []) + (["pred"] if allowed else [])
            pick = rng.choice(options)
            if pick == "pred":
                return mu.PredVar(rng.choice(sorted(allowed)))
            if pick == "open":
                x = rng.choice(xs)
                if constants and rng.random() < 0.25:
                    return mu.FOQuery(fo.Eq(x, Constant(constants[0])))
                name, arity = rng.choice(unary)
                return mu.FOQuery(fo.Atom(name, (x,) * arity))
            return _closed_leaf(rng, relations, constants)
        op = rng.choice(["not", "and", "or", "exists", "exists", "dia", "box", "fix"])
        if op == "not":
            # predicate variables may not occur under negation
            return mu.MNot(gen(d - 1, xs, frozenset()))
        if op in ("and", "or"):
            parts = (gen(d - 1, xs, allowed), gen(d - 1, xs, allowed))
            return mu.m_and(parts) if op == "and" else mu.m_or(parts)
        if op == "exists":
            x = Var(f"x{len(xs)}")
            return mu.ExistsLive(x, gen(d - 1, xs + (x,), allowed))
        if op in ("dia", "box"):
            return modal(gen(d - 1, xs, allowed), op == "box")
        z = f"Z{counter[0]}"
        counter[0] += 1
        body = modal(gen(d - 1, xs, allowed | {z}), rng.random() < 0.5)
        if rng.random() < 0.7:
            body = mu.m_or([gen(0, xs, allowed), body])
        return (mu.Mu if rng.random() < 0.5 else mu.Nu)(z, body)

    return gen(depth, (), frozenset())


def random_reachability_formula(target: str = "Q") -> mu.MuFormula:
    """mu Z. (target | dia(Z)) for a nullary relation `target`."""
    return mu.Mu("Z", mu.m_or([mu.FOQuery(fo.Atom(target, ())), mu.Diamond(mu.PredVar("Z"))]))


__all__ = ["random_mulp", "random_reachability_formula", "random_ts"]
