"""Deterministic-service semantics: effect application, abstract states over equality
commitments, the abstract transition system, and a bounded concrete oracle."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from . import fo
from .fo import Fact, Instance, Var
from .spec import Action, CallTemplate, DcdsSpec, Rule
from .terms import Call, Constant, Partition, ServiceCallMap, Term, default_representative, subterms
from .ts import DivergenceReport, TransitionSystem

DEFAULT_MAX_STATES = 2_000
DEFAULT_MAX_TERMS = 200

Sigma = Mapping[Var, Term]


@dataclass(frozen=True)
class AState:
    instance: Instance
    commitment: Partition


@dataclass(frozen=True)
class CState:
    instance: Instance
    calls: ServiceCallMap


def sigma_label(action: str, sigma: Sigma) -> str:
    args = ", ".join(f"{v}={t}" for v, t in sorted(sigma.items(), key=lambda kv: kv[0].name))
    return f"{action}({args})"


def _ground_head(arg: object, env: Mapping[Var, Term]) -> Term:
    if isinstance(arg, Var):
        return env[arg]
    if isinstance(arg, CallTemplate):
        return Call(arg.function, tuple(_ground_head(a, env) for a in arg.args))
    return arg


def do_effects(inst: Instance, action: Action, sigma: Sigma) -> frozenset[Fact]:
    """Union over effects of the head facts instantiated by every answer of the effect body."""
    out: set[Fact] = set()
    for eff in action.effects:
        body = fo.substitute(eff.body, dict(sigma))
        for ans in fo.evaluate(body, inst):
            env = {**sigma, **dict(ans)}
            for h in eff.head:
                if h.relation == fo.TRUE_REL:
                    continue
                out.add(Fact(h.relation, tuple(_ground_head(a, env) for a in h.args)))
    return frozenset(out)


def legal_assignments(inst: Instance, rule: Rule, action: Action | None = None) -> list[dict[Var, Term]]:
    """Guard answers restricted to the action parameters, in canonical order."""
    answers = fo.evaluate(rule.guard, inst)
    params = set(action.params) if action is not None else None
    out = set()
    for ans in answers:
        d = dict(ans)
        if params is not None:
            d = {v: t for v, t in d.items() if v in params}
        out.add(frozenset(d.items()))
    return fo.as_dicts(out)


def calls_in(facts: Iterable[Fact]) -> frozenset[Call]:
    out: set[Call] = set()
    for f in facts:
        for a in f.args:
            out |= {t for t in subterms(a) if isinstance(t, Call)}
    return frozenset(out)


def terms_in(facts: Iterable[Fact]) -> frozenset[Term]:
    out: set[Term] = set()
    for f in facts:
        for a in f.args:
            out |= subterms(a)
    return frozenset(out)


# --- abstract semantics -----------------------------------------------------


def initial_astate(spec: DcdsSpec) -> AState:
    return AState(spec.initial_instance, Partition.singletons(spec.initial_domain))


def extend_commitment(h: Partition, incoming: Iterable[Term]) -> Iterator[Partition]:
    """Every well-formed extension of `h` covering `incoming` that keeps the old representatives.

    New terms are placed one at a time, innermost first: a term congruent to an already
    placed one is forced into that cell, otherwise it joins any cell or founds a new one.
    """
    known = h.terms()
    new_terms = sorted(set().union(*(subterms(t) for t in incoming)) - known, key=lambda t: (t.depth, t.key()))
    cells: list[set[Term]] = [set(c) for c in h.cells]
    n_old = len(cells)
    index: dict[Term, int] = {t: i for i, c in enumerate(cells) for t in c}
    sigs: dict[tuple, int] = {}
    for t in known:
        if isinstance(t, Call) and all(a in index for a in t.args):
            sigs[(t.function, tuple(index[a] for a in t.args))] = index[t]
    fixed_reps = {r: r for r in h.reps}

    def place(t: Term, i: int, sig: tuple | None) -> None:
        if i == len(cells):
            cells.append(set())
        cells[i].add(t)
        index[t] = i
        if sig is not None:
            sigs[sig] = i

    def unplace(t: Term, i: int, sig: tuple | None, founded: bool) -> None:
        cells[i].discard(t)
        del index[t]
        if sig is not None:
            del sigs[sig]
        if founded:
            cells.pop()

    def go(k: int) -> Iterator[Partition]:
        if k == len(new_terms):
            reps = dict(fixed_reps)
            for c in cells[n_old:]:
                reps[default_representative(c)] = default_representative(c)
            yield Partition(cells, reps)
            return
        t = new_terms[k]
        if isinstance(t, Constant):
            place(t, len(cells), None)
            yield from go(k + 1)
            unplace(t, len(cells) - 1, None, True)
            return
        sig = (t.function, tuple(index[a] for a in t.args))
        if sig in sigs:
            i = sigs[sig]
            cells[i].add(t)
            index[t] = i
            yield from go(k + 1)
            cells[i].discard(t)
            del index[t]
            return
        for i in range(len(cells)):
            place(t, i, sig)
            yield from go(k + 1)
            unplace(t, i, sig, False)
        place(t, len(cells), sig)
        yield from go(k + 1)
        unplace(t, len(cells) - 1, sig, True)

    yield from go(0)


def apply_commitment(facts: Iterable[Fact], h: Partition) -> Instance:
    return Instance(Fact(f.relation, tuple(h.rep(a) for a in f.args)) for f in facts)


def abstract_successors(spec: DcdsSpec, s: AState, action: Action, sigma: Sigma) -> list[AState]:
    produced = do_effects(s.instance, action, sigma)
    terms = terms_in(produced)
    out: list[AState] = []
    seen = set()
    for h2 in extend_commitment(s.commitment, terms):
        inst = apply_commitment(produced, h2)
        ok, _ = fo.satisfies_ec(inst, spec.equality_constraints)
        if ok:
            nxt = AState(inst, h2)
            if nxt not in seen:
                seen.add(nxt)
                out.append(nxt)
    return out


def enabled(spec: DcdsSpec, inst: Instance) -> Iterator[tuple[Action, dict[Var, Term]]]:
    """(action, σ) pairs in rule order, then canonical σ order."""
    for rule in spec.process:
        act = spec.action(rule.action)
        for sigma in legal_assignments(inst, rule, act):
            yield act, sigma


def _longest(terms: Iterable[Term]) -> Term | None:
    return max(terms, key=lambda t: (t.depth, t.key()), default=None)


def build_abstract_ts(
    spec: DcdsSpec, max_states: int = DEFAULT_MAX_STATES, max_terms: int = DEFAULT_MAX_TERMS
) -> TransitionSystem | DivergenceReport:
    """Breadth-first closure of the abstract successor relation from the initial a-state."""
    if not spec.deterministic:
        raise ValueError("the abstract construction needs deterministic services; use rcycl for the other case")
    ts = TransitionSystem()
    s0 = initial_astate(spec)
    ts.add_state(s0.instance, s0.commitment)
    queue = deque([0])
    most_terms = len(s0.commitment.terms())
    deepest: Term | None = _longest(s0.commitment.terms())
    while queue:
        i = queue.popleft()
        st = ts.states[i]
        cur = AState(st.db, st.annotation)
        for act, sigma in enabled(spec, cur.instance):
            label = sigma_label(act.name, sigma)
            for nxt in abstract_successors(spec, cur, act, sigma):
                j, new = ts.add_state(nxt.instance, nxt.commitment)
                ts.add_edge(i, j, label)
                if not new:
                    continue
                n_terms = len(nxt.commitment.terms())
                cand = _longest(nxt.commitment.terms())
                if cand is not None and (deepest is None or cand.depth > deepest.depth):
                    deepest = cand
                most_terms = max(most_terms, n_terms)
                if n_terms > max_terms:
                    return DivergenceReport(f"term budget of {max_terms} exceeded", len(ts), n_terms, deepest, ts)
                if len(ts) > max_states:
                    return DivergenceReport(f"state budget of {max_states} exceeded", len(ts), most_terms, deepest, ts)
                queue.append(j)
    return ts


# --- bounded concrete oracle ------------------------------------------------


def _evaluate_calls(facts: Iterable[Fact], values: Mapping[Call, Constant]) -> Instance:
    def ev(t: Term) -> Term:
        if isinstance(t, Call):
            return values[Call(t.function, tuple(ev(a) for a in t.args))]
        return t

    return Instance(Fact(f.relation, tuple(ev(a) for a in f.args)) for f in facts)


def concrete_successors(
    spec: DcdsSpec, inst: Instance, calls: ServiceCallMap | None, action: Action, sigma: Sigma, pool: Iterable[Constant]
) -> Iterator[tuple[Instance, ServiceCallMap | None]]:
    """Successors with every new call ranging over `pool`.

    With a call map (deterministic services) recorded calls keep their value; with
    `calls=None` (nondeterministic services) every call is evaluated afresh.
    """
    produced = do_effects(inst, action, sigma)
    pending = sorted(calls_in(produced), key=lambda c: c.key())
    fixed = {} if calls is None else {c: calls[c] for c in pending if c in calls}
    fresh = [c for c in pending if c not in fixed]
    values = sorted(pool, key=lambda t: t.key())
    for combo in itertools.product(values, repeat=len(fresh)):
        theta = {**fixed, **dict(zip(fresh, combo))}
        nxt = _evaluate_calls(produced, theta)
        ok, _ = fo.satisfies_ec(nxt, spec.equality_constraints)
        if not ok:
            continue
        yield nxt, (None if calls is None else calls.extend(dict(zip(fresh, combo))))


def build_concrete_bounded(spec: DcdsSpec, value_pool: Iterable[Constant], depth: int) -> TransitionSystem:
    """Concrete semantics with service results restricted to `value_pool`, explored `depth` steps."""
    pool = frozenset(value_pool)
    missing = spec.initial_domain - pool
    if missing:
        raise ValueError(f"value pool must contain the initial domain; missing {sorted(map(str, missing))}")
    det = spec.deterministic
    ts = TransitionSystem()
    ts.add_state(spec.initial_instance, ServiceCallMap() if det else None)
    dist = {0: 0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        if dist[i] >= depth:
            continue
        st = ts.states[i]
        for act, sigma in enabled(spec, st.db):
            label = sigma_label(act.name, sigma)
            for inst, m in concrete_successors(spec, st.db, st.annotation, act, sigma, pool):
                j, new = ts.add_state(inst, m)
                ts.add_edge(i, j, label)
                if new:
                    dist[j] = dist[i] + 1
                    queue.append(j)
    return ts


__all__ = [
    "AState", "CState", "DEFAULT_MAX_STATES", "DEFAULT_MAX_TERMS", "abstract_successors", "apply_commitment",
    "build_abstract_ts", "build_concrete_bounded", "calls_in", "concrete_successors", "do_effects", "enabled",
    "extend_commitment", "initial_astate", "legal_assignments", "sigma_label", "terms_in",
]
