"""First-order mu-calculus over database-labelled transition systems.

Formulas are parsed from a small surface syntax::

    nu X. (forall x. live(x) & Stud(x) -> mu Y. ((exists y. live(y) & Grad(x, y)) | dia(Y))) & box(X)

and normalized into the core AST below. `classify` reports the tightest fragment
(``muL``, ``muL_A`` or ``muL_P``); `model_check` evaluates ``muL_A``/``muL_P``
formulas either directly (quantifiers range over the values of the system) or
after propositionalizing them over those values. Both routes must agree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from . import fo
from .fo import Var
from .syntax import Parser, ParseError
from .terms import Constant, Term
from .ts import TransitionSystem

Ind = Union[Var, Constant, Term]


# --- core AST ---------------------------------------------------------------


@dataclass(frozen=True)
class FOQuery:
    query: fo.Formula

    def __str__(self) -> str:
        return str(self.query) if isinstance(self.query, (fo.Atom, fo.Eq, fo.TrueF, fo.FalseF)) else f"({self.query})"


@dataclass(frozen=True)
class MNot:
    body: "MuFormula"

    def __str__(self) -> str:
        return f"!{_wrap(self.body)}"


@dataclass(frozen=True)
class MAnd:
    parts: tuple["MuFormula", ...]

    def __str__(self) -> str:
        return " & ".join(_wrap(p) for p in self.parts)


@dataclass(frozen=True)
class MOr:
    parts: tuple["MuFormula", ...]

    def __str__(self) -> str:
        return " | ".join(_wrap(p) for p in self.parts)


@dataclass(frozen=True)
class MExists:
    """Quantification over the whole domain (outside the active-domain fragments)."""

    var: Var
    body: "MuFormula"

    def __str__(self) -> str:
        return f"exists {self.var}. {_wrap(self.body)}"


@dataclass(frozen=True)
class ExistsLive:
    var: Var
    body: "MuFormula"

    def __str__(self) -> str:
        return f"exists {self.var}. live({self.var}) & {_wrap(self.body)}"


@dataclass(frozen=True)
class Diamond:
    body: "MuFormula"

    def __str__(self) -> str:
        return f"dia({self.body})"


@dataclass(frozen=True)
class Box:
    body: "MuFormula"

    def __str__(self) -> str:
        return f"box({self.body})"


@dataclass(frozen=True)
class LiveGuardedDiamond:
    args: tuple[Ind, ...]
    body: "MuFormula"

    def __str__(self) -> str:
        return f"dia({_lives(self.args)} & {_wrap(self.body)})"


@dataclass(frozen=True)
class LiveGuardedBox:
    args: tuple[Ind, ...]
    body: "MuFormula"

    def __str__(self) -> str:
        return f"box({_lives(self.args)} & {_wrap(self.body)})"


@dataclass(frozen=True)
class PredVar:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Mu:
    var: str
    body: "MuFormula"

    def __str__(self) -> str:
        return f"mu {self.var}. {_wrap(self.body)}"


@dataclass(frozen=True)
class Nu:
    var: str
    body: "MuFormula"

    def __str__(self) -> str:
        return f"nu {self.var}. {_wrap(self.body)}"


@dataclass(frozen=True)
class Live:
    arg: Ind

    def __str__(self) -> str:
        return f"live({self.arg})"


MuFormula = Union[
    FOQuery, MNot, MAnd, MOr, MExists, ExistsLive, Diamond, Box, LiveGuardedDiamond, LiveGuardedBox, PredVar, Mu, Nu, Live
]

_ATOMIC = (FOQuery, PredVar, Live, Diamond, Box, LiveGuardedDiamond, LiveGuardedBox)


def _wrap(f: object) -> str:
    if isinstance(f, _ATOMIC) or (isinstance(f, MNot) and isinstance(f.body, _ATOMIC)):
        return str(f)
    return f"({f})"


def _lives(args: Iterable[Ind]) -> str:
    return " & ".join(f"live({a})" for a in args)


def m_and(parts: Iterable[MuFormula]) -> MuFormula:
    flat: list[MuFormula] = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, MAnd) else (p,))
    if not flat:
        return FOQuery(fo.TrueF())
    return flat[0] if len(flat) == 1 else MAnd(tuple(flat))


def m_or(parts: Iterable[MuFormula]) -> MuFormula:
    flat: list[MuFormula] = []
    for p in parts:
        flat.extend(p.parts if isinstance(p, MOr) else (p,))
    if not flat:
        return FOQuery(fo.FalseF())
    return flat[0] if len(flat) == 1 else MOr(tuple(flat))


class MuError(ValueError):
    pass


class ModelCheckError(MuError):
    pass


# --- surface syntax ---------------------------------------------------------


@dataclass(frozen=True)
class _S:
    op: str  # and | or | not | implies | exists | forall | dia | box | mu | nu
    parts: tuple = ()
    vars: tuple = ()
    name: str = ""


class _MuParser(Parser):
    def unary(self) -> object:
        if (self.at("mu") or self.at("nu")) and self.peek().kind == "id" and self.peek(2).text == ".":
            kind = self.advance().text
            name = self.ident("predicate variable").text
            self.expect(".")
            return _S(kind, (self.formula(),), name=name)
        return super().unary()

    def primary(self) -> object:
        if self.tok.kind == "id" and self.tok.text in ("dia", "box", "live") and self.peek().text == "(":
            kw = self.advance().text
            self.expect("(")
            if kw == "live":
                args = [self.arg()]
                while self.accept(","):
                    args.append(self.arg())
                self.expect(")")
                return _S("and", tuple(Live(a) for a in args)) if len(args) > 1 else Live(args[0])
            body = self.formula()
            self.expect(")")
            return _S(kw, (body,))
        r = super().primary()
        if isinstance(r, (fo.Atom, fo.Eq, fo.Not, fo.TrueF, fo.FalseF)):
            return FOQuery(r)
        return r

    def bare_identifier(self) -> object:
        return PredVar(self.advance().text)

    def make_and(self, parts: list) -> object:
        return _S("and", tuple(parts))

    def make_or(self, parts: list) -> object:
        return _S("or", tuple(parts))

    def make_not(self, body: object) -> object:
        return _S("not", (body,))

    def make_implies(self, left: object, right: object) -> object:
        return _S("implies", (left, right))

    def make_quant(self, kind: str, vs: tuple, body: object) -> object:
        return _S(kind, (body,), vars=vs)


def _pure_fo(s: object) -> bool:
    if isinstance(s, FOQuery):
        return True
    if isinstance(s, _S) and s.op in ("and", "or", "not", "implies", "exists", "forall"):
        return all(_pure_fo(p) for p in s.parts)
    return False


def _to_fo(s: object) -> fo.Formula:
    if isinstance(s, FOQuery):
        return s.query
    p = [_to_fo(x) for x in s.parts]
    if s.op == "and":
        return fo.conj(p)
    if s.op == "or":
        return fo.disj(p)
    if s.op == "not":
        return fo.Not(p[0])
    if s.op == "implies":
        return fo.Implies(p[0], p[1])
    if s.op == "exists":
        return fo.Exists(s.vars, p[0])
    return fo.Forall(s.vars, p[0])


def _conjuncts(s: object) -> list:
    if isinstance(s, _S) and s.op == "and":
        out = []
        for p in s.parts:
            out.extend(_conjuncts(p))
        return out
    return [s]


def _split_live(s: object) -> tuple[list[Ind], object | None]:
    """Separate top-level live(..) conjuncts from the rest."""
    lives, rest = [], []
    for c in _conjuncts(s):
        (lives if isinstance(c, Live) else rest).append(c)
    body = None if not rest else (rest[0] if len(rest) == 1 else _S("and", tuple(rest)))
    return [l.arg for l in lives], body


def _neg(s: object) -> object:
    return _S("not", (s,))


def normalize(s: object) -> MuFormula:
    if _pure_fo(s):
        return FOQuery(_to_fo(s))
    if not isinstance(s, _S):
        return s
    op = s.op
    if op == "and":
        return m_and(normalize(p) for p in s.parts)
    if op == "or":
        return m_or(normalize(p) for p in s.parts)
    if op == "not":
        return MNot(normalize(s.parts[0]))
    if op == "implies":
        return m_or([MNot(normalize(s.parts[0])), normalize(s.parts[1])])
    if op == "exists":
        lives, rest = _split_live(s.parts[0])
        body = normalize(rest) if rest is not None else FOQuery(fo.TrueF())
        extra = [Live(a) for a in lives if a not in s.vars]
        if extra:
            body = m_and(extra + [body])
        for v in reversed(s.vars):
            body = ExistsLive(v, body) if v in lives else MExists(v, body)
        return body
    if op == "forall":
        inner = s.parts[0]
        if isinstance(inner, _S) and inner.op == "implies":
            negated = _S("and", (inner.parts[0], _neg(inner.parts[1])))
        else:
            negated = _neg(inner)
        return MNot(normalize(_S("exists", (negated,), vars=s.vars)))
    if op in ("dia", "box"):
        body = s.parts[0]
        if isinstance(body, _S) and body.op == "implies":
            lives, rest_l = _split_live(body.parts[0])
            if lives:
                inner = _S("and", tuple(x for x in (rest_l, _neg(body.parts[1])) if x is not None))
                dual = LiveGuardedBox if op == "dia" else LiveGuardedDiamond
                return MNot(dual(tuple(lives), normalize(inner)))
        lives, rest = _split_live(body)
        if lives:
            inner = normalize(rest) if rest is not None else FOQuery(fo.TrueF())
            cls = LiveGuardedDiamond if op == "dia" else LiveGuardedBox
            return cls(tuple(lives), inner)
        return (Diamond if op == "dia" else Box)(normalize(body))
    if op == "mu":
        return Mu(s.name, normalize(s.parts[0]))
    if op == "nu":
        return Nu(s.name, normalize(s.parts[0]))
    raise MuError(f"unknown surface operator {op}")


def parse_formula(text: str, constants: Iterable[str] = ()) -> MuFormula:
    """Parse a formula; identifiers in `constants` are constants, other arguments are variables."""
    names = set(constants)
    p = _MuParser(text, "<formula>", is_constant=names.__contains__)
    s = p.formula()
    p.done()
    return normalize(s)


# --- structural helpers -----------------------------------------------------


def _children(f: MuFormula) -> tuple[MuFormula, ...]:
    if isinstance(f, (MAnd, MOr)):
        return f.parts
    if isinstance(f, (MNot, MExists, ExistsLive, Diamond, Box, LiveGuardedDiamond, LiveGuardedBox, Mu, Nu)):
        return (f.body,)
    return ()


def free_individuals(f: MuFormula, pv: Mapping[str, frozenset[Var]] | None = None) -> frozenset[Var]:
    """Free individual variables; a predicate variable contributes those of its binder's body."""
    return _fv(f, dict(pv or {}))


def _fixpoint_fv(f: "Mu | Nu", pv: Mapping[str, frozenset[Var]]) -> frozenset[Var]:
    cur: frozenset[Var] = frozenset()
    while True:
        nxt = _fv(f.body, {**pv, f.var: cur})
        if nxt == cur:
            return cur
        cur = nxt


def _fv(f: MuFormula, pv: Mapping[str, frozenset[Var]]) -> frozenset[Var]:
    if isinstance(f, FOQuery):
        return fo.free_vars(f.query)
    if isinstance(f, Live):
        return frozenset({f.arg}) if isinstance(f.arg, Var) else frozenset()
    if isinstance(f, PredVar):
        return pv.get(f.name, frozenset())
    if isinstance(f, (MExists, ExistsLive)):
        return _fv(f.body, pv) - {f.var}
    if isinstance(f, (LiveGuardedDiamond, LiveGuardedBox)):
        return _fv(f.body, pv) | frozenset(a for a in f.args if isinstance(a, Var))
    if isinstance(f, (Mu, Nu)):
        return _fixpoint_fv(f, pv)
    out: frozenset[Var] = frozenset()
    for c in _children(f):
        out |= _fv(c, pv)
    return out


def _check_predvars(f: MuFormula, scope: dict[str, int], negs: int) -> None:
    if isinstance(f, PredVar):
        if f.name not in scope:
            raise MuError(f"unbound predicate variable {f.name}")
        if (negs - scope[f.name]) % 2:
            raise MuError(f"predicate variable {f.name} occurs under an odd number of negations")
        return
    if isinstance(f, MNot):
        _check_predvars(f.body, scope, negs + 1)
        return
    if isinstance(f, (Mu, Nu)):
        _check_predvars(f.body, {**scope, f.var: negs}, negs)
        return
    for c in _children(f):
        _check_predvars(c, scope, negs)


def quantifier_depth(f: MuFormula) -> int:
    own = 1 if isinstance(f, (MExists, ExistsLive)) else 0
    return own + max((quantifier_depth(c) for c in _children(f)), default=0)


def classify(f: MuFormula) -> str:
    """Tightest fragment: ``muL_P`` inside ``muL_A`` inside ``muL``."""
    _check_predvars(f, {}, 0)
    fragment = ["muL_P"]

    def walk(g: MuFormula, pv: dict[str, frozenset[Var]]) -> None:
        if isinstance(g, MExists):
            fragment[0] = "muL"
        elif isinstance(g, (Diamond, Box)) and _fv(g.body, pv) and fragment[0] == "muL_P":
            fragment[0] = "muL_A"
        elif isinstance(g, (LiveGuardedDiamond, LiveGuardedBox)) and fragment[0] == "muL_P":
            if frozenset(a for a in g.args if isinstance(a, Var)) != _fv(g.body, pv):
                fragment[0] = "muL_A"
        if isinstance(g, (Mu, Nu)):
            pv = {**pv, g.var: _fixpoint_fv(g, pv)}
        for c in _children(g):
            walk(c, pv)

    walk(f, {})
    return fragment[0]


def substitute(f: MuFormula, mapping: Mapping[Var, Term]) -> MuFormula:
    if not mapping:
        return f
    if isinstance(f, FOQuery):
        return FOQuery(fo.substitute(f.query, mapping))
    if isinstance(f, Live):
        return Live(mapping.get(f.arg, f.arg) if isinstance(f.arg, Var) else f.arg)
    if isinstance(f, (MExists, ExistsLive)):
        inner = {k: v for k, v in mapping.items() if k != f.var}
        return type(f)(f.var, substitute(f.body, inner))
    if isinstance(f, (LiveGuardedDiamond, LiveGuardedBox)):
        args = tuple(mapping.get(a, a) if isinstance(a, Var) else a for a in f.args)
        return type(f)(args, substitute(f.body, mapping))
    if isinstance(f, (MAnd, MOr)):
        return type(f)(tuple(substitute(p, mapping) for p in f.parts))
    if isinstance(f, (MNot, Diamond, Box)):
        return type(f)(substitute(f.body, mapping))
    if isinstance(f, (Mu, Nu)):
        return type(f)(f.var, substitute(f.body, mapping))
    return f


def propositionalize(f: MuFormula, domain: Iterable[Term]) -> MuFormula:
    """Expand every active-domain quantifier into a finite disjunction over `domain`."""
    dom = sorted(set(domain), key=lambda t: t.key())
    if isinstance(f, MExists):
        raise MuError("unrestricted quantification has no propositional counterpart (formula outside muL_A)")
    if isinstance(f, ExistsLive):
        return m_or(m_and([Live(d), propositionalize(substitute(f.body, {f.var: d}), dom)]) for d in dom)
    if isinstance(f, (MAnd, MOr)):
        return type(f)(tuple(propositionalize(p, dom) for p in f.parts))
    if isinstance(f, (MNot, Diamond, Box)):
        return type(f)(propositionalize(f.body, dom))
    if isinstance(f, (LiveGuardedDiamond, LiveGuardedBox)):
        return type(f)(f.args, propositionalize(f.body, dom))
    if isinstance(f, (Mu, Nu)):
        return type(f)(f.var, propositionalize(f.body, dom))
    return f


def count_leaves(f: MuFormula) -> int:
    ch = _children(f)
    return 1 if not ch else sum(count_leaves(c) for c in ch)


# --- model checking -----------------------------------------------------------


@dataclass
class CheckResult:
    holds: bool
    extension: frozenset[int]
    fragment: str
    extensions: dict[MuFormula, frozenset[int]] = field(default_factory=dict, repr=False)

    def __bool__(self) -> bool:
        return self.holds


class _Checker:
    def __init__(self, ts: TransitionSystem):
        self.ts = ts
        self.all = frozenset(range(len(ts)))
        self.succ = [ts.successors(i) for i in range(len(ts))]
        self.adom = [ts.db(i).adom for i in range(len(ts))]
        self.domain = sorted(ts.adom(), key=lambda t: t.key())
        self.record: dict[MuFormula, frozenset[int]] = {}

    def pre_exists(self, s: frozenset[int]) -> frozenset[int]:
        return frozenset(i for i in self.all if any(j in s for j in self.succ[i]))

    def pre_forall(self, s: frozenset[int]) -> frozenset[int]:
        return frozenset(i for i in self.all if all(j in s for j in self.succ[i]))

    def live(self, vals: Iterable[Term]) -> frozenset[int]:
        vals = list(vals)
        return frozenset(i for i in self.all if all(v in self.adom[i] for v in vals))

    def value(self, a: Ind, v: Mapping[Var, Term]) -> Term:
        if isinstance(a, Var):
            if a not in v:
                raise MuError(f"individual variable {a} is free")
            return v[a]
        return a

    def ext(self, f: MuFormula, v: Mapping[Var, Term], env: Mapping[str, frozenset[int]]) -> frozenset[int]:
        if isinstance(f, FOQuery):
            q = fo.substitute(f.query, {x: t for x, t in v.items() if x in fo.free_vars(f.query)})
            missing = fo.free_vars(q)
            if missing:
                raise MuError(f"individual variables {sorted(x.name for x in missing)} are free")
            return frozenset(i for i in self.all if fo.holds(q, self.ts.db(i)))
        if isinstance(f, Live):
            return self.live([self.value(f.arg, v)])
        if isinstance(f, MNot):
            return self.all - self.ext(f.body, v, env)
        if isinstance(f, MAnd):
            out = self.all
            for p in f.parts:
                out &= self.ext(p, v, env)
            return out
        if isinstance(f, MOr):
            out: frozenset[int] = frozenset()
            for p in f.parts:
                out |= self.ext(p, v, env)
            return out
        if isinstance(f, (MExists, ExistsLive)):
            out = frozenset()
            for d in self.domain:
                part = self.ext(f.body, {**v, f.var: d}, env)
                out |= part & self.live([d]) if isinstance(f, ExistsLive) else part
            return out
        if isinstance(f, Diamond):
            return self.pre_exists(self.ext(f.body, v, env))
        if isinstance(f, Box):
            return self.pre_forall(self.ext(f.body, v, env))
        if isinstance(f, LiveGuardedDiamond):
            return self.pre_exists(self.live(self.value(a, v) for a in f.args) & self.ext(f.body, v, env))
        if isinstance(f, LiveGuardedBox):
            return self.pre_forall(self.live(self.value(a, v) for a in f.args) & self.ext(f.body, v, env))
        if isinstance(f, PredVar):
            return env[f.name]
        if isinstance(f, (Mu, Nu)):
            cur = frozenset() if isinstance(f, Mu) else self.all
            for _ in range(len(self.all) + 2):
                nxt = self.ext(f.body, v, {**env, f.var: cur})
                if isinstance(f, Mu) and not cur <= nxt or isinstance(f, Nu) and not nxt <= cur:
                    raise MuError(f"fixpoint iteration for {f.var} is not monotone")
                if nxt == cur:
                    if not v and not env:
                        self.record[f] = cur
                    return cur
                cur = nxt
            raise MuError(f"fixpoint iteration for {f.var} did not converge")
        raise TypeError(f"not a formula: {f!r}")

    def ext_recorded(self, f: MuFormula, env: Mapping[str, frozenset[int]]) -> frozenset[int]:
        out = self.ext(f, {}, env)
        if not env:
            self.record[f] = out
        return out


def model_check(ts: TransitionSystem, f: MuFormula, route: str = "semantic") -> CheckResult:
    """Evaluate a closed formula; ``route`` is ``semantic`` or ``prop``."""
    fragment = classify(f)
    if fragment == "muL":
        raise ModelCheckError(
            "formula quantifies outside the active domain (muL): no finite abstraction preserves it; "
            "guard each quantified variable with live(x)"
        )
    free = free_individuals(f)
    if free:
        raise MuError(f"formula has free individual variables {sorted(v.name for v in free)}")
    chk = _Checker(ts)
    if route == "prop":
        g = propositionalize(f, chk.domain)
        ext = chk.ext_recorded(g, {})
    elif route == "semantic":
        ext = chk.ext_recorded(f, {})
    else:
        raise ValueError(f"unknown route {route!r}")
    return CheckResult(ts.initial in ext, ext, fragment, chk.record)


def extension(ts: TransitionSystem, f: MuFormula, valuation: Mapping[Var, Term] | None = None) -> frozenset[int]:
    """States satisfying `f` under an individual valuation (no fragment checks)."""
    _check_predvars(f, {}, 0)
    return _Checker(ts).ext(f, dict(valuation or {}), {})


__all__ = [
    "Box", "CheckResult", "Diamond", "ExistsLive", "FOQuery", "Live", "LiveGuardedBox", "LiveGuardedDiamond",
    "MAnd", "MExists", "MNot", "MOr", "ModelCheckError", "Mu", "MuError", "MuFormula", "Nu", "ParseError",
    "PredVar", "classify", "count_leaves", "extension", "free_individuals", "m_and", "m_or", "model_check",
    "normalize", "parse_formula", "propositionalize", "quantifier_depth", "substitute",
]
