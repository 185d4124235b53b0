"""First-order queries over finite instances, evaluated under active-domain semantics."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Union

from .terms import Call, Constant, Term


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Arg = Union[Var, Constant]


@dataclass(frozen=True)
class Fact:
    relation: str
    args: tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def key(self) -> tuple:
        return (self.relation, tuple(a.key() for a in self.args))

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(str(a) for a in self.args)})"


class Instance:
    """Immutable set of ground facts. The nullary `true` fact is implicit and never stored."""

    __slots__ = ("facts", "_hash", "__dict__")

    def __init__(self, facts: Iterable[Fact] = ()):
        self.facts: frozenset[Fact] = frozenset(f for f in facts if f.relation != TRUE_REL)
        self._hash = hash(self.facts)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Instance) and self.facts == other.facts

    def __hash__(self) -> int:
        return self._hash

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.facts)

    def __contains__(self, f: Fact) -> bool:
        return f in self.facts

    @cached_property
    def adom(self) -> frozenset[Term]:
        return frozenset(a for f in self.facts for a in f.args)

    @cached_property
    def by_relation(self) -> dict[str, list[tuple[Term, ...]]]:
        out: dict[str, list[tuple[Term, ...]]] = {}
        for f in self.facts:
            out.setdefault(f.relation, []).append(f.args)
        return out

    def sorted(self) -> list[Fact]:
        return sorted(self.facts, key=Fact.key)

    def restrict(self, relations: Iterable[str]) -> "Instance":
        keep = set(relations)
        return Instance(f for f in self.facts if f.relation in keep)

    def rename(self, mapping: Mapping[Term, Term]) -> "Instance":
        return Instance(Fact(f.relation, tuple(mapping.get(a, a) for a in f.args)) for f in self.facts)

    def __str__(self) -> str:
        return "{" + ", ".join(str(f) for f in self.sorted()) + "}"

    def __repr__(self) -> str:
        return f"Instance({self})"


TRUE_REL = "true"


# --- formulas -------------------------------------------------------------


@dataclass(frozen=True)
class TrueF:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseF:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class Atom:
    relation: str
    args: tuple[Arg, ...] = ()

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Eq:
    left: Arg
    right: Arg

    def __str__(self) -> str:
        return f"{self.left} = {self.right}"


@dataclass(frozen=True)
class Not:
    body: "Formula"

    def __str__(self) -> str:
        if isinstance(self.body, Eq):
            return f"{self.body.left} != {self.body.right}"
        return f"!{_wrap(self.body)}"


@dataclass(frozen=True)
class And:
    parts: tuple["Formula", ...]

    def __str__(self) -> str:
        return " & ".join(_wrap(p) for p in self.parts)


@dataclass(frozen=True)
class Or:
    parts: tuple["Formula", ...]

    def __str__(self) -> str:
        return " | ".join(_wrap(p) for p in self.parts)


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"{_wrap(self.left)} -> {_wrap(self.right)}"


@dataclass(frozen=True)
class Exists:
    vars: tuple[Var, ...]
    body: "Formula"

    def __str__(self) -> str:
        return f"exists {', '.join(v.name for v in self.vars)}. {_wrap(self.body)}"


@dataclass(frozen=True)
class Forall:
    vars: tuple[Var, ...]
    body: "Formula"

    def __str__(self) -> str:
        return f"forall {', '.join(v.name for v in self.vars)}. {_wrap(self.body)}"


Formula = Union[TrueF, FalseF, Atom, Eq, Not, And, Or, Implies, Exists, Forall]

_ATOMIC = (TrueF, FalseF, Atom, Eq)


def _wrap(f: object) -> str:
    if isinstance(f, _ATOMIC) or (isinstance(f, Not) and isinstance(f.body, (Atom, Eq, TrueF, FalseF))):
        return str(f)
    return f"({f})"


def conj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.parts)
        elif not isinstance(p, TrueF):
            flat.append(p)
    if not flat:
        return TrueF()
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(parts: Iterable[Formula]) -> Formula:
    flat: list[Formula] = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.parts)
        elif not isinstance(p, FalseF):
            flat.append(p)
    if not flat:
        return FalseF()
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def free_vars(f: Formula) -> frozenset[Var]:
    if isinstance(f, (TrueF, FalseF)):
        return frozenset()
    if isinstance(f, Atom):
        return frozenset(a for a in f.args if isinstance(a, Var))
    if isinstance(f, Eq):
        return frozenset(a for a in (f.left, f.right) if isinstance(a, Var))
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_vars(p) for p in f.parts))
    if isinstance(f, Implies):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - frozenset(f.vars)
    raise TypeError(f"not a formula: {f!r}")


def constants_of(f: Formula) -> frozenset[Constant]:
    if isinstance(f, Atom):
        return frozenset(a for a in f.args if isinstance(a, Constant))
    if isinstance(f, Eq):
        return frozenset(a for a in (f.left, f.right) if isinstance(a, Constant))
    if isinstance(f, Not):
        return constants_of(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(constants_of(p) for p in f.parts))
    if isinstance(f, Implies):
        return constants_of(f.left) | constants_of(f.right)
    if isinstance(f, (Exists, Forall)):
        return constants_of(f.body)
    return frozenset()


def relations_of(f: Formula) -> frozenset[tuple[str, int]]:
    if isinstance(f, Atom):
        return frozenset({(f.relation, len(f.args))})
    if isinstance(f, Not):
        return relations_of(f.body)
    if isinstance(f, (And, Or)):
        return frozenset().union(*(relations_of(p) for p in f.parts))
    if isinstance(f, Implies):
        return relations_of(f.left) | relations_of(f.right)
    if isinstance(f, (Exists, Forall)):
        return relations_of(f.body)
    return frozenset()


def atoms_with_bound(f: Formula, bound: frozenset[Var] = frozenset(), positive: bool = True) -> Iterator[tuple[Atom, frozenset[Var], bool]]:
    """Yield every atom with the variables bound above it and its polarity."""
    if isinstance(f, Atom):
        yield f, bound, positive
    elif isinstance(f, Not):
        yield from atoms_with_bound(f.body, bound, not positive)
    elif isinstance(f, (And, Or)):
        for p in f.parts:
            yield from atoms_with_bound(p, bound, positive)
    elif isinstance(f, Implies):
        yield from atoms_with_bound(f.left, bound, not positive)
        yield from atoms_with_bound(f.right, bound, positive)
    elif isinstance(f, (Exists, Forall)):
        yield from atoms_with_bound(f.body, bound | frozenset(f.vars), positive)


def substitute(f: Formula, mapping: Mapping[Var, Term]) -> Formula:
    """Replace free variables by terms. Bound occurrences are left alone."""
    if not mapping:
        return f

    def arg(a: object) -> object:
        return mapping.get(a, a) if isinstance(a, Var) else a

    if isinstance(f, Atom):
        return Atom(f.relation, tuple(arg(a) for a in f.args))
    if isinstance(f, Eq):
        return Eq(arg(f.left), arg(f.right))
    if isinstance(f, Not):
        return Not(substitute(f.body, mapping))
    if isinstance(f, And):
        return And(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Or):
        return Or(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Implies):
        return Implies(substitute(f.left, mapping), substitute(f.right, mapping))
    if isinstance(f, (Exists, Forall)):
        inner = {k: v for k, v in mapping.items() if k not in f.vars}
        return type(f)(f.vars, substitute(f.body, inner))
    return f


def is_positive_existential(f: Formula) -> bool:
    if isinstance(f, (TrueF, Atom, Eq)):
        return True
    if isinstance(f, (And, Or)):
        return all(is_positive_existential(p) for p in f.parts)
    if isinstance(f, Exists):
        return is_positive_existential(f.body)
    return False


# --- evaluation -----------------------------------------------------------


Assignment = Mapping[Var, Term]


@dataclass(frozen=True)
class _Rel:
    """Intermediate relational-algebra value: a set of rows over an ordered variable tuple."""

    vars: tuple[Var, ...]
    rows: frozenset[tuple]


class UnboundRelation(KeyError):
    pass


@dataclass
class _Ctx:
    inst: Instance
    domain: tuple[Term, ...]
    schema: Mapping[str, int] | None = None
    cache: dict = field(default_factory=dict)


def _extend(r: _Rel, target: tuple[Var, ...], ctx: _Ctx) -> _Rel:
    """Cylindrify `r` to the variables in `target` (order as in target)."""
    missing = [v for v in target if v not in r.vars]
    pos = {v: i for i, v in enumerate(r.vars)}
    rows = set()
    for row in r.rows:
        for extra in itertools.product(ctx.domain, repeat=len(missing)):
            env = dict(zip(missing, extra))
            rows.add(tuple(row[pos[v]] if v in pos else env[v] for v in target))
    return _Rel(target, frozenset(rows))


def _join(a: _Rel, b: _Rel) -> _Rel:
    shared = [v for v in a.vars if v in b.vars]
    out_vars = a.vars + tuple(v for v in b.vars if v not in a.vars)
    ai = [a.vars.index(v) for v in shared]
    bi = [b.vars.index(v) for v in shared]
    rest = [i for i, v in enumerate(b.vars) if v not in a.vars]
    index: dict[tuple, list[tuple]] = {}
    for row in b.rows:
        index.setdefault(tuple(row[i] for i in bi), []).append(row)
    rows = set()
    for row in a.rows:
        for other in index.get(tuple(row[i] for i in ai), ()):
            rows.add(row + tuple(other[i] for i in rest))
    return _Rel(out_vars, frozenset(rows))


def _all_rows(vars_: tuple[Var, ...], ctx: _Ctx) -> frozenset[tuple]:
    return frozenset(itertools.product(ctx.domain, repeat=len(vars_)))


def _ordered_vars(f: Formula) -> tuple[Var, ...]:
    return tuple(sorted(free_vars(f), key=lambda v: v.name))


def _eval(f: Formula, ctx: _Ctx) -> _Rel:
    if isinstance(f, TrueF):
        return _Rel((), frozenset({()}))
    if isinstance(f, FalseF):
        return _Rel((), frozenset())
    if isinstance(f, Atom):
        if f.relation == TRUE_REL and not f.args:
            return _Rel((), frozenset({()}))
        if ctx.schema is not None and f.relation not in ctx.schema:
            raise UnboundRelation(f.relation)
        out_vars: list[Var] = []
        for a in f.args:
            if isinstance(a, Var) and a not in out_vars:
                out_vars.append(a)
        rows = set()
        for tup in ctx.inst.by_relation.get(f.relation, ()):
            if len(tup) != len(f.args):
                continue
            env: dict[Var, Term] = {}
            ok = True
            for a, v in zip(f.args, tup):
                if isinstance(a, Var):
                    if env.setdefault(a, v) != v:
                        ok = False
                        break
                elif a != v:
                    ok = False
                    break
            if ok:
                rows.add(tuple(env[v] for v in out_vars))
        return _Rel(tuple(out_vars), frozenset(rows))
    if isinstance(f, Eq):
        l, r = f.left, f.right
        if isinstance(l, Var) and isinstance(r, Var):
            if l == r:
                return _Rel((l,), frozenset((d,) for d in ctx.domain))
            return _Rel((l, r), frozenset((d, d) for d in ctx.domain))
        if isinstance(l, Var) or isinstance(r, Var):
            v, c = (l, r) if isinstance(l, Var) else (r, l)
            return _Rel((v,), frozenset({(c,)}) if c in ctx.domain else frozenset())
        return _Rel((), frozenset({()}) if l == r else frozenset())
    if isinstance(f, Not):
        inner = _eval(f.body, ctx)
        return _Rel(inner.vars, _all_rows(inner.vars, ctx) - inner.rows)
    if isinstance(f, And):
        acc = _Rel((), frozenset({()}))
        positives = [p for p in f.parts if not isinstance(p, Not)]
        negatives = [p for p in f.parts if isinstance(p, Not)]
        for p in positives:
            acc = _join(acc, _eval(p, ctx))
        for p in negatives:
            sub = _eval(p.body, ctx)
            if set(sub.vars) <= set(acc.vars):
                idx = [acc.vars.index(v) for v in sub.vars]
                acc = _Rel(acc.vars, frozenset(r for r in acc.rows if tuple(r[i] for i in idx) not in sub.rows))
            else:
                acc = _join(acc, _Rel(sub.vars, _all_rows(sub.vars, ctx) - sub.rows))
        return acc
    if isinstance(f, Or):
        target = _ordered_vars(f)
        rows: set[tuple] = set()
        for p in f.parts:
            rows |= _extend(_eval(p, ctx), target, ctx).rows
        return _Rel(target, frozenset(rows))
    if isinstance(f, Implies):
        return _eval(Or((Not(f.left), f.right)), ctx)
    if isinstance(f, Exists):
        inner = _eval(f.body, ctx)
        if not ctx.domain and any(v not in inner.vars for v in f.vars):
            # a vacuous quantifier over an empty domain has no witness
            return _Rel(tuple(v for v in inner.vars if v not in f.vars), frozenset())
        keep = [i for i, v in enumerate(inner.vars) if v not in f.vars]
        return _Rel(tuple(inner.vars[i] for i in keep), frozenset(tuple(r[i] for i in keep) for r in inner.rows))
    if isinstance(f, Forall):
        return _eval(Not(Exists(f.vars, Not(f.body))), ctx)
    raise TypeError(f"not a formula: {f!r}")


def evaluate(q: Formula, inst: Instance, schema: Mapping[str, int] | None = None) -> frozenset[frozenset[tuple[Var, Term]]]:
    """All assignments of the free variables of `q` over adom(inst) that satisfy it.

    Each assignment is a frozenset of (variable, value) pairs; see `as_dicts`.
    """
    ctx = _Ctx(inst, tuple(sorted(inst.adom, key=lambda t: t.key())), schema)
    target = _ordered_vars(q)
    rel = _extend(_eval(q, ctx), target, ctx)
    return frozenset(frozenset(zip(target, row)) for row in rel.rows)


def as_dicts(answers: Iterable[frozenset]) -> list[dict[Var, Term]]:
    return sorted((dict(a) for a in answers), key=lambda d: sorted((v.name, t.key()) for v, t in d.items()))


def holds(q: Formula, inst: Instance) -> bool:
    """Boolean evaluation; free variables are treated existentially."""
    return bool(evaluate(q, inst))


def brute_force_eval(q: Formula, inst: Instance) -> frozenset[frozenset[tuple[Var, Term]]]:
    """Reference semantics by direct recursion over every assignment (slow, test oracle)."""
    dom = sorted(inst.adom, key=lambda t: t.key())
    target = _ordered_vars(q)

    def sat(f: Formula, env: dict[Var, Term]) -> bool:
        val = lambda a: env[a] if isinstance(a, Var) else a  # noqa: E731
        if isinstance(f, TrueF):
            return True
        if isinstance(f, FalseF):
            return False
        if isinstance(f, Atom):
            if f.relation == TRUE_REL and not f.args:
                return True
            return Fact(f.relation, tuple(val(a) for a in f.args)) in inst
        if isinstance(f, Eq):
            return val(f.left) == val(f.right)
        if isinstance(f, Not):
            return not sat(f.body, env)
        if isinstance(f, And):
            return all(sat(p, env) for p in f.parts)
        if isinstance(f, Or):
            return any(sat(p, env) for p in f.parts)
        if isinstance(f, Implies):
            return (not sat(f.left, env)) or sat(f.right, env)
        if isinstance(f, (Exists, Forall)):
            combos = (sat(f.body, {**env, **dict(zip(f.vars, vals))}) for vals in itertools.product(dom, repeat=len(f.vars)))
            return any(combos) if isinstance(f, Exists) else all(combos)
        raise TypeError(f)

    out = set()
    for vals in itertools.product(dom, repeat=len(target)):
        env = dict(zip(target, vals))
        if sat(q, env):
            out.add(frozenset(env.items()))
    return frozenset(out)


# --- equality constraints -------------------------------------------------


@dataclass(frozen=True)
class EqualityConstraint:
    body: Formula
    equalities: tuple[tuple[Arg, Arg], ...]
    pos: tuple[int, int] | None = field(default=None, compare=False)

    def __str__(self) -> str:
        eqs = " & ".join(f"{l} = {r}" for l, r in self.equalities)
        return f"{_wrap(self.body)} -> {eqs}"


@dataclass(frozen=True)
class EcWitness:
    index: int
    assignment: tuple[tuple[Var, Term], ...]
    left: Term
    right: Term

    def __str__(self) -> str:
        env = ", ".join(f"{v}={t}" for v, t in self.assignment)
        return f"constraint #{self.index + 1} fails at {env}: {self.left} != {self.right}"


def satisfies_ec(inst: Instance, ecs: Iterable[EqualityConstraint]) -> tuple[bool, EcWitness | None]:
    for k, ec in enumerate(ecs):
        answers = sorted(evaluate(ec.body, inst), key=lambda a: sorted((v.name, t.key()) for v, t in a))
        for ans in answers:
            env = dict(ans)
            for l, r in ec.equalities:
                lv = env[l] if isinstance(l, Var) else l
                rv = env[r] if isinstance(r, Var) else r
                if lv != rv:
                    ordered = tuple(sorted(ans, key=lambda p: p[0].name))
                    return False, EcWitness(k, ordered, lv, rv)
    return True, None


def ground_args(args: Iterable[object], env: Mapping[Var, Term]) -> tuple[Term, ...]:
    return tuple(env[a] if isinstance(a, Var) else a for a in args)


__all__ = [
    "And", "Arg", "Assignment", "Atom", "Call", "Constant", "EcWitness", "Eq", "EqualityConstraint",
    "Exists", "Fact", "FalseF", "Forall", "Formula", "Implies", "Instance", "Not", "Or", "TRUE_REL",
    "TrueF", "UnboundRelation", "Var", "as_dicts", "atoms_with_bound", "brute_force_eval", "conj",
    "constants_of", "disj", "evaluate", "free_vars", "ground_args", "holds", "is_positive_existential",
    "relations_of", "satisfies_ec", "substitute",
]
