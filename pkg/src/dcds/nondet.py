"""Nondeterministic-service semantics: ground evaluations, induced commitments and the
recycling construction of a finite pruning."""

from __future__ import annotations

import itertools
from collections import defaultdict
from typing import Callable, Iterable, Iterator, Mapping

from . import fo
from .det import DEFAULT_MAX_STATES, _evaluate_calls, calls_in, do_effects, enabled, sigma_label
from .fo import Instance, Var
from .spec import Action, DcdsSpec
from .terms import Call, Constant, Partition, Term, default_representative
from .ts import DivergenceReport, TransitionSystem

Evaluation = dict[Call, Constant]

DEFAULT_MAX_EVALS = 100_000
DEFAULT_MAX_ADOM = 64


def skolems(inst: Instance, action: Action, sigma: Mapping[Var, Term]) -> list[Call]:
    return sorted(calls_in(do_effects(inst, action, sigma)), key=lambda c: c.key())


def ground_evals(inst: Instance, action: Action, sigma: Mapping[Var, Term], d: Iterable[Constant]) -> list[Evaluation]:
    """Every total map from the step's service calls into `d`."""
    calls = skolems(inst, action, sigma)
    values = sorted(set(d), key=lambda t: t.key())
    return [dict(zip(calls, combo)) for combo in itertools.product(values, repeat=len(calls))]


def _value(t: Term, theta: Mapping[Call, Constant]) -> Term:
    return theta[t] if isinstance(t, Call) else t


def respects(theta: Mapping[Call, Constant], h: Partition) -> bool:
    """Same cell exactly when same value; constants evaluate to themselves."""
    owner: dict[Term, int] = {}
    for i, cell in enumerate(h.cells):
        for t in cell:
            v = _value(t, theta)
            if owner.setdefault(v, i) != i:
                return False
    return all(len({_value(t, theta) for t in cell}) == 1 for cell in h.cells)


def induced_commitment(theta: Mapping[Call, Constant], carrier: Iterable[Term]) -> Partition:
    groups: dict[Term, set[Term]] = defaultdict(set)
    for t in carrier:
        groups[_value(t, theta)].add(t)
    return Partition(groups.values(), {t: default_representative(c) for c in groups.values() for t in c})


def successors_nondet(
    spec: DcdsSpec, inst: Instance, action: Action, sigma: Mapping[Var, Term], d: Iterable[Constant]
) -> list[tuple[Partition, Instance]]:
    """(commitment, successor) pairs for evaluations into `d` whose result satisfies the constraints."""
    produced = do_effects(inst, action, sigma)
    calls = sorted(calls_in(produced), key=lambda c: c.key())
    carrier = set(calls) | set(inst.adom) | set(spec.initial_domain)
    values = sorted(set(d), key=lambda t: t.key())
    out: dict[tuple[Partition, Instance], None] = {}
    for combo in itertools.product(values, repeat=len(calls)):
        theta = dict(zip(calls, combo))
        nxt = _evaluate_calls(produced, theta)
        ok, _ = fo.satisfies_ec(nxt, spec.equality_constraints)
        if ok:
            out[(induced_commitment(theta, carrier), nxt)] = None
    return list(out)


def successor_instances(
    spec: DcdsSpec, inst: Instance, action: Action, sigma: Mapping[Var, Term], d: Iterable[Constant]
) -> list[Instance]:
    """Distinct successor instances for evaluations into `d`, in evaluation order."""
    produced = do_effects(inst, action, sigma)
    calls = sorted(calls_in(produced), key=lambda c: c.key())
    values = sorted(set(d), key=lambda t: t.key())
    out: dict[Instance, None] = {}
    for combo in itertools.product(values, repeat=len(calls)):
        nxt = _evaluate_calls(produced, dict(zip(calls, combo)))
        if nxt not in out and fo.satisfies_ec(nxt, spec.equality_constraints)[0]:
            out[nxt] = None
    return list(out)


FreshNames = Callable[[int], str]


def _fresh_namer(fresh: str | FreshNames) -> FreshNames:
    if callable(fresh):
        return fresh
    return lambda k: f"{fresh}{k}"


def rcycl(
    spec: DcdsSpec,
    max_states: int = DEFAULT_MAX_STATES,
    fresh: str | FreshNames = "$v",
    max_evals: int = DEFAULT_MAX_EVALS,
    max_adom: int = DEFAULT_MAX_ADOM,
) -> TransitionSystem | DivergenceReport:
    """Build an eventually recycling pruning by the worklist construction.

    Picks states by creation order, actions by rule order and assignments canonically.
    When enough previously used values are absent from the current state, the least n
    of them are recycled; otherwise n fresh values are drawn from `fresh`. A state whose
    active domain exceeds `max_adom` ends the construction with a divergence report.
    """
    if spec.deterministic:
        raise ValueError("rcycl needs nondeterministic services; use build_abstract_ts for the other case")
    namer = _fresh_namer(fresh)
    init_dom = frozenset(spec.initial_domain)
    used: set[Term] = set(init_dom)
    counter = itertools.count()
    ts = TransitionSystem()
    ts.add_state(spec.initial_instance)
    i = 0
    while i < len(ts):
        inst = ts.db(i)
        for act, sigma in enabled(spec, inst):
            calls = skolems(inst, act, sigma)
            n = len(calls)
            recyclable = sorted(used - (init_dom | inst.adom), key=lambda t: t.key())
            if len(recyclable) >= n:
                chosen = recyclable[:n]
            else:
                chosen = []
                while len(chosen) < n:
                    c = Constant(namer(next(counter)))
                    if c not in used and c not in chosen:
                        chosen.append(c)
            domain = init_dom | inst.adom | frozenset(chosen)
            if len(domain) ** n > max_evals:
                return DivergenceReport(
                    f"evaluation budget of {max_evals} exceeded ({len(domain)}^{n} evaluations for {act.name})", len(ts), partial=ts
                )
            label = sigma_label(act.name, sigma)
            for nxt in successor_instances(spec, inst, act, sigma, domain):
                j, new = ts.add_state(nxt)
                ts.add_edge(i, j, label)
                used |= nxt.adom
                if not new:
                    continue
                if len(nxt.adom) > max_adom:
                    return DivergenceReport(
                        f"active-domain budget of {max_adom} exceeded; the system may be state-unbounded",
                        len(ts), len(nxt.adom), partial=ts,
                    )
                if len(ts) > max_states:
                    return DivergenceReport(f"state budget of {max_states} exceeded; the system may be state-unbounded", len(ts), partial=ts)
        i += 1
    return ts


def commitments_represented(
    spec: DcdsSpec, inst: Instance, action: Action, sigma: Mapping[Var, Term], d: Iterable[Constant]
) -> frozenset[Partition]:
    return frozenset(h for h, _ in successors_nondet(spec, inst, action, sigma, d))


def iter_fresh(fresh: str | FreshNames = "$v") -> Iterator[Constant]:
    namer = _fresh_namer(fresh)
    for k in itertools.count():
        yield Constant(namer(k))


__all__ = [
    "DEFAULT_MAX_EVALS", "Evaluation", "commitments_represented", "ground_evals", "induced_commitment",
    "iter_fresh", "rcycl", "respects", "skolems", "successor_instances", "successors_nondet", "DEFAULT_MAX_ADOM",
]
