"""Spec rewritings between service semantics and for constraint encodings.

All machinery introduced here uses names starting with ``$``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import fo
from .fo import Fact, Instance, Var
from .spec import (
    DETERMINISTIC,
    NONDETERMINISTIC,
    Action,
    CallTemplate,
    DcdsSpec,
    Effect,
    HeadAtom,
    RelationDecl,
    ServiceDecl,
)
from .terms import Constant

NEQ = "$Neq"
AUX = "$aux"
NOW = "$now"
SUCC = "$succ"
NEW = "$new"
CLOCK_VAR = Var("$t")
ZERO = Constant("0")
ONE = Constant("1")


class TransformError(ValueError):
    pass


@dataclass
class TransformReport:
    added_relations: list[str] = field(default_factory=list)
    added_effects: list[str] = field(default_factory=list)
    added_constraints: list[str] = field(default_factory=list)
    reserved_constants: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, list[str]]:
        return {
            "added_relations": self.added_relations,
            "added_effects": self.added_effects,
            "added_constraints": self.added_constraints,
            "reserved_constants": self.reserved_constants,
        }

    def __str__(self) -> str:
        return "\n".join(f"{k.replace('_', ' ')}: {', '.join(v) or '-'}" for k, v in self.to_dict().items())


def result_relation(service: str) -> str:
    return f"$R_{service}"


def _xs(n: int) -> tuple[Var, ...]:
    return tuple(Var(f"$x{i}") for i in range(1, n + 1))


def _copy_effect(rel: str, arity: int) -> Effect:
    xs = _xs(arity)
    return Effect(fo.Atom(rel, xs), None, (HeadAtom(rel, xs),))


def _check_free(spec: DcdsSpec, names: list[str]) -> None:
    taken = {r.name for r in spec.schema} | {s.name for s in spec.services}
    clash = sorted(set(names) & taken)
    if clash:
        raise TransformError(f"reserved names already in use: {', '.join(clash)}")


def _with_effects(spec: DcdsSpec, extra: list[Effect]) -> tuple[Action, ...]:
    return tuple(Action(a.name, a.params, a.effects + tuple(extra), a.pos) for a in spec.actions)


def det_to_nondet(spec: DcdsSpec) -> tuple[DcdsSpec, TransformReport]:
    """Record every call result in ``$R_f`` and keep it forever, so nondeterministic calls
    are forced (by a functional-dependency constraint) to repeat earlier answers."""
    if not spec.deterministic:
        raise TransformError("det_to_nondet expects a spec with deterministic services")
    report = TransformReport()
    used = sorted({c.function for a in spec.actions for e in a.effects for h in e.head for c in h.calls()})
    arity = spec.service_arities
    _check_free(spec, [result_relation(f) for f in used])

    actions = []
    for a in spec.actions:
        effects = []
        for e in a.effects:
            extra: list[HeadAtom] = []
            for h in e.head:
                for c in h.calls():
                    rec = HeadAtom(result_relation(c.function), c.args + (c,))
                    if rec not in extra:
                        extra.append(rec)
            effects.append(Effect(e.q_plus, e.q_minus, e.head + tuple(extra), e.pos))
        actions.append(Action(a.name, a.params, tuple(effects), a.pos))

    schema = list(spec.schema)
    copies: list[Effect] = []
    ecs = list(spec.equality_constraints)
    for f in used:
        rel, n = result_relation(f), arity[f]
        schema.append(RelationDecl(rel, n + 1))
        report.added_relations.append(f"{rel}/{n + 1}")
        copies.append(_copy_effect(rel, n + 1))
        report.added_effects.append(str(copies[-1]))
        xs = _xs(n)
        r1, r2 = Var("$r1"), Var("$r2")
        ec = fo.EqualityConstraint(fo.conj([fo.Atom(rel, xs + (r1,)), fo.Atom(rel, xs + (r2,))]), ((r1, r2),))
        ecs.append(ec)
        report.added_constraints.append(str(ec))
    out = spec.with_(
        schema=tuple(schema),
        actions=tuple(Action(a.name, a.params, a.effects + tuple(copies), a.pos) for a in actions),
        equality_constraints=tuple(ecs),
        semantics=NONDETERMINISTIC,
    )
    return out, report


def _stamp(arg: object) -> object:
    if isinstance(arg, CallTemplate):
        return CallTemplate(arg.function, arg.args + (CLOCK_VAR,))
    return arg


def nondet_to_det(spec: DcdsSpec) -> tuple[DcdsSpec, TransformReport]:
    """Give every call an extra timestamp argument drawn from a clock that only moves forward,
    so deterministic calls never repeat."""
    if spec.deterministic:
        raise TransformError("nondet_to_det expects a spec with nondeterministic services")
    _check_free(spec, [NOW, SUCC, NEW])
    report = TransformReport(
        added_relations=[f"{NOW}/1", f"{SUCC}/2"], reserved_constants=[str(ZERO), str(ONE)]
    )
    actions = []
    for a in spec.actions:
        effects = []
        for e in a.effects:
            if any(h.calls() for h in e.head):
                head = tuple(HeadAtom(h.relation, tuple(_stamp(x) for x in h.args)) for h in e.head)
                effects.append(Effect(fo.conj([e.q_plus, fo.Atom(NOW, (CLOCK_VAR,))]), e.q_minus, head, e.pos))
            else:
                effects.append(e)
        actions.append(Action(a.name, a.params, tuple(effects), a.pos))

    x, y, z = Var("$x"), Var("$y"), Var("$z")
    tick = CallTemplate(NEW, (x,))
    advance = Effect(fo.Atom(NOW, (x,)), None, (HeadAtom(NOW, (tick,)), HeadAtom(SUCC, (x, tick))))
    keep = _copy_effect(SUCC, 2)
    report.added_effects = [str(advance), str(keep)]
    key = fo.EqualityConstraint(fo.conj([fo.Atom(SUCC, (x, y)), fo.Atom(SUCC, (z, y))]), ((x, z),))
    report.added_constraints = [str(key)]
    services = tuple(ServiceDecl(s.name, s.arity + 1) for s in spec.services) + (ServiceDecl(NEW, 1),)
    init = Instance(
        set(spec.initial_instance.facts) | {Fact(SUCC, (ZERO, ZERO)), Fact(SUCC, (ZERO, ONE)), Fact(NOW, (ONE,))}
    )
    out = spec.with_(
        schema=spec.schema + (RelationDecl(NOW, 1), RelationDecl(SUCC, 2)),
        services=services,
        actions=tuple(Action(a.name, a.params, a.effects + (advance, keep), a.pos) for a in actions),
        equality_constraints=spec.equality_constraints + (key,),
        initial_instance=init,
        semantics=DETERMINISTIC,
    )
    return out, report


def _witness_pair(spec: DcdsSpec, rel: str, report: TransformReport) -> tuple[Constant, Constant, tuple[str, ...]]:
    """Two distinct constants for the marker fact; injected when the spec has fewer than two."""
    for f in spec.initial_instance.facts:
        if f.relation == rel:
            return f.args[0], f.args[1], ()
    known = sorted((t for t in spec.initial_domain if isinstance(t, Constant)), key=lambda t: t.key())
    if len(known) >= 2:
        return known[0], known[1], ()
    pool = [Constant("$a"), Constant("$b")]
    picked = (known + [c for c in pool if c not in known])[:2]
    injected = tuple(c.name for c in picked if c not in known)
    report.reserved_constants.extend(injected)
    return picked[0], picked[1], injected


def _encode(spec: DcdsSpec, rel: str, bodies: list[fo.Formula]) -> tuple[DcdsSpec, TransformReport]:
    report = TransformReport()
    if not bodies:
        return spec, report
    x, y = Var("$x"), Var("$y")
    present = rel in spec.arities
    if not present:
        _check_free(spec, [rel])
    a, b, injected = _witness_pair(spec, rel, report)
    ecs = list(spec.equality_constraints)
    for q in bodies:
        ec = fo.EqualityConstraint(fo.conj([q, fo.Atom(rel, (x, y))]), ((x, y),))
        if ec not in ecs:
            ecs.append(ec)
            report.added_constraints.append(str(ec))
    if present:
        return spec.with_(equality_constraints=tuple(ecs)), report
    keep = _copy_effect(rel, 2)
    report.added_relations.append(f"{rel}/2")
    report.added_effects.append(str(keep))
    out = spec.with_(
        constants=spec.constants + injected,
        schema=spec.schema + (RelationDecl(rel, 2),),
        initial_instance=Instance(set(spec.initial_instance.facts) | {Fact(rel, (a, b))}),
        actions=_with_effects(spec, [keep]),
        equality_constraints=tuple(ecs),
    )
    return out, report


def encode_denials(spec: DcdsSpec, denials: list[fo.Formula]) -> tuple[DcdsSpec, TransformReport]:
    """Make states satisfying any denial query unreachable: `Qi & $Neq(x, y) -> x = y`."""
    return _encode(spec, NEQ, list(denials))


def encode_fo_constraint(spec: DcdsSpec, ic: fo.Formula) -> tuple[DcdsSpec, TransformReport]:
    """Make states violating the sentence `ic` unreachable: `!ic & $aux(x, y) -> x = y`."""
    if fo.free_vars(ic):
        raise TransformError(f"integrity constraint must be a sentence; free variables {sorted(v.name for v in fo.free_vars(ic))}")
    return _encode(spec, AUX, [fo.Not(ic)])


__all__ = [
    "AUX", "NEQ", "NEW", "NOW", "SUCC", "TransformError", "TransformReport", "det_to_nondet", "encode_denials",
    "encode_fo_constraint", "nondet_to_det", "result_relation",
]
