"""The DCDS specification model, its textual DSL, a pretty-printer and the validator.

Example::

    constants a;
    schema P/1, Q/2, R/1;
    services f/1, g/1;
    init P(a), Q(a, a);
    actions
      alpha() {
        Q(a, a) & P(x) ~> R(x);
        P(x) ~> P(x), Q(f(x), g(x));
      }
    process
      true |-> alpha;
    semantics deterministic;
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Union

from . import fo
from .fo import Formula, Instance, Var
from .syntax import Diagnostic, ParseError, Parser, Token
from .terms import Call, Constant, Term

DETERMINISTIC = "deterministic"
NONDETERMINISTIC = "nondeterministic"
SECTIONS = ("constants", "schema", "init", "constraints", "services", "actions", "process", "semantics")
RESERVED_BARE = frozenset({"Neq", "aux", "now", "succ", "true"})
FRESH_VALUE = re.compile(r"^\$v\d+$")


@dataclass(frozen=True)
class RelationDecl:
    name: str
    arity: int


@dataclass(frozen=True)
class ServiceDecl:
    name: str
    arity: int


@dataclass(frozen=True)
class CallTemplate:
    function: str
    args: tuple[fo.Arg, ...] = ()

    def __str__(self) -> str:
        return f"{self.function}({', '.join(str(a) for a in self.args)})"


HeadArg = Union[Var, Constant, CallTemplate]


@dataclass(frozen=True)
class HeadAtom:
    relation: str
    args: tuple[HeadArg, ...] = ()

    def __str__(self) -> str:
        return f"{self.relation}({', '.join(str(a) for a in self.args)})"

    def variables(self) -> frozenset[Var]:
        out: set[Var] = set()
        for a in self.args:
            if isinstance(a, Var):
                out.add(a)
            elif isinstance(a, CallTemplate):
                out.update(x for x in a.args if isinstance(x, Var))
        return frozenset(out)

    def calls(self) -> tuple[CallTemplate, ...]:
        return tuple(a for a in self.args if isinstance(a, CallTemplate))


@dataclass(frozen=True)
class Effect:
    q_plus: Formula
    q_minus: Formula | None
    head: tuple[HeadAtom, ...]
    pos: tuple[int, int] | None = field(default=None, compare=False)

    @property
    def body(self) -> Formula:
        return self.q_plus if self.q_minus is None else fo.conj([self.q_plus, self.q_minus])

    def __str__(self) -> str:
        return f"{self.body} ~> {', '.join(str(h) for h in self.head)}"


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple[Var, ...]
    effects: tuple[Effect, ...]
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Rule:
    guard: Formula
    action: str
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class DcdsSpec:
    constants: tuple[str, ...] = ()
    schema: tuple[RelationDecl, ...] = ()
    equality_constraints: tuple[fo.EqualityConstraint, ...] = ()
    initial_instance: Instance = field(default_factory=Instance)
    services: tuple[ServiceDecl, ...] = ()
    actions: tuple[Action, ...] = ()
    process: tuple[Rule, ...] = ()
    semantics: str = DETERMINISTIC
    source: str = field(default="<input>", compare=False)

    @cached_property
    def arities(self) -> dict[str, int]:
        return {r.name: r.arity for r in self.schema}

    @cached_property
    def service_arities(self) -> dict[str, int]:
        return {s.name: s.arity for s in self.services}

    @cached_property
    def initial_domain(self) -> frozenset[Term]:
        """adom(I0) together with every declared constant."""
        return self.initial_instance.adom | frozenset(Constant(c) for c in self.constants)

    def action(self, name: str) -> Action:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)

    def rules_for(self, action: str) -> list[Rule]:
        return [r for r in self.process if r.action == action]

    @property
    def deterministic(self) -> bool:
        return self.semantics == DETERMINISTIC

    def with_(self, **changes) -> "DcdsSpec":
        return replace(self, **changes)


# --- parsing --------------------------------------------------------------


class _SpecParser(Parser):
    KEYWORDS = Parser.KEYWORDS | set(SECTIONS)

    def at_section(self) -> bool:
        return self.tok.kind == "eof" or (self.tok.kind == "id" and self.tok.text in SECTIONS)

    def decls(self) -> list[tuple[str, int]]:
        out = []
        while not self.at_section():
            if self.accept(";"):
                continue
            name = self.ident("name").text
            self.expect("/")
            ar = self.ident("arity")
            if not ar.text.isdigit():
                raise self.error(f"arity must be a number, found '{ar.text}'", ar)
            out.append((name, int(ar.text)))
            if not self.accept(","):
                self.accept(";")
        return out

    def head_arg(self) -> HeadArg:
        t = self.ident("head term")
        if self.accept("("):
            args: list[fo.Arg] = []
            if not self.at(")"):
                args.append(self.call_arg())
                while self.accept(","):
                    args.append(self.call_arg())
            self.expect(")")
            return CallTemplate(t.text, tuple(args))
        return Constant(t.text) if self.is_constant(t.text) else Var(t.text)

    def call_arg(self) -> fo.Arg:
        t = self.ident("call argument")
        if self.at("("):
            raise self.error("nested service calls are not allowed in effect heads", t)
        return Constant(t.text) if self.is_constant(t.text) else Var(t.text)

    def head_atom(self) -> HeadAtom:
        name = self.ident("relation name").text
        args: list[HeadArg] = []
        if self.accept("("):
            if not self.at(")"):
                args.append(self.head_arg())
                while self.accept(","):
                    args.append(self.head_arg())
            self.expect(")")
        return HeadAtom(name, tuple(args))

    def effect(self) -> Effect:
        pos = self.pos()
        body = self.formula()
        self.expect("~>")
        heads = [self.head_atom()]
        while self.accept(","):
            heads.append(self.head_atom())
        self.expect(";")
        q_plus, q_minus = split_body(body)
        return Effect(q_plus, q_minus, tuple(heads), pos)

    def action(self) -> Action:
        pos = self.pos()
        name = self.ident("action name").text
        params: tuple[Var, ...] = ()
        self.expect("(")
        if not self.at(")"):
            params = self.var_list()
        self.expect(")")
        self.expect("{")
        effects = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error(f"unterminated action '{name}'")
            effects.append(self.effect())
        self.expect("}")
        return Action(name, params, tuple(effects), pos)

    def constraint(self) -> fo.EqualityConstraint:
        start = self.tok
        f = self.formula()
        self.expect(";")
        if not isinstance(f, fo.Implies):
            raise self.error("an equality constraint has the form 'query -> x = y & ...'", start)
        eqs = f.right.parts if isinstance(f.right, fo.And) else (f.right,)
        if not all(isinstance(e, fo.Eq) for e in eqs):
            raise self.error("the right-hand side of an equality constraint must be a conjunction of equalities", start)
        return fo.EqualityConstraint(f.left, tuple((e.left, e.right) for e in eqs), (start.line, start.col))

    def rule(self) -> Rule:
        pos = self.pos()
        guard = self.formula()
        self.expect("|->")
        name = self.ident("action name").text
        self.expect(";")
        return Rule(guard, name, pos)

    def spec(self) -> DcdsSpec:
        constants: list[str] = []
        schema: list[RelationDecl] = []
        services: list[ServiceDecl] = []
        facts: list[fo.Fact] = []
        ecs: list[fo.EqualityConstraint] = []
        actions: list[Action] = []
        rules: list[Rule] = []
        semantics = DETERMINISTIC
        while self.tok.kind != "eof":
            kw = self.tok
            if kw.text not in SECTIONS:
                raise self.error(f"expected a section keyword ({', '.join(SECTIONS)}) but found '{kw.text}'")
            self.advance()
            if kw.text == "constants":
                while not self.at_section():
                    if self.accept(";"):
                        continue
                    constants.append(self.ident("constant").text)
                    if not self.accept(","):
                        self.accept(";")
            elif kw.text == "schema":
                schema += [RelationDecl(n, a) for n, a in self.decls()]
            elif kw.text == "services":
                services += [ServiceDecl(n, a) for n, a in self.decls()]
            elif kw.text == "init":
                while not self.at_section():
                    if self.accept(";"):
                        continue
                    facts.append(self.fact())
                    if not self.accept(","):
                        self.accept(";")
            elif kw.text == "constraints":
                while not self.at_section():
                    ecs.append(self.constraint())
            elif kw.text == "actions":
                while not self.at_section():
                    actions.append(self.action())
            elif kw.text == "process":
                while not self.at_section():
                    rules.append(self.rule())
            else:
                word = self.ident("semantics").text
                if word not in (DETERMINISTIC, NONDETERMINISTIC):
                    raise self.error(f"semantics must be '{DETERMINISTIC}' or '{NONDETERMINISTIC}'")
                semantics = word
                self.accept(";")
        return DcdsSpec(
            constants=tuple(constants),
            schema=tuple(schema),
            equality_constraints=tuple(ecs),
            initial_instance=Instance(facts),
            services=tuple(services),
            actions=tuple(actions),
            process=tuple(rules),
            semantics=semantics,
            source=self.file,
        )


def split_body(body: Formula) -> tuple[Formula, Formula | None]:
    """Positive-existential conjuncts form the selecting query; the rest form the filter."""
    parts = body.parts if isinstance(body, fo.And) else (body,)
    pos = [p for p in parts if fo.is_positive_existential(p)]
    neg = [p for p in parts if not fo.is_positive_existential(p)]
    return fo.conj(pos), (fo.conj(neg) if neg else None)


def _term_names(t: Term) -> Iterator[str]:
    if isinstance(t, Constant):
        yield t.name
    else:
        for a in t.args:
            yield from _term_names(a)


def parse(text: str, file: str = "<input>") -> DcdsSpec:
    """Parse spec source; raises ParseError with positioned diagnostics."""
    draft = _SpecParser(text, file).spec()
    known = set(draft.constants)
    for f in draft.initial_instance.facts:
        for a in f.args:
            known.update(_term_names(a))
    spec = _SpecParser(text, file, is_constant=known.__contains__).spec()
    problems = list(_symbol_diagnostics(spec))
    if problems:
        raise ParseError(problems)
    return spec


def load(path: str | Path) -> DcdsSpec:
    p = Path(path)
    return parse(p.read_text(encoding="utf-8"), str(p))


def _formula_relations(spec: DcdsSpec) -> Iterator[tuple[Formula, tuple[int, int] | None]]:
    for ec in spec.equality_constraints:
        yield ec.body, ec.pos
    for a in spec.actions:
        for e in a.effects:
            yield e.body, e.pos
    for r in spec.process:
        yield r.guard, r.pos


def _symbol_diagnostics(spec: DcdsSpec) -> Iterator[Diagnostic]:
    def diag(pos: tuple[int, int] | None, msg: str) -> Diagnostic:
        line, col = pos or (1, 1)
        return Diagnostic(line, col, "error", msg, spec.source)

    ar = spec.arities
    sv = spec.service_arities
    for f, pos in _formula_relations(spec):
        for name, n in sorted(fo.relations_of(f)):
            if name == fo.TRUE_REL and n == 0:
                continue
            if name not in ar:
                yield diag(pos, f"unknown relation '{name}'")
            elif ar[name] != n:
                yield diag(pos, f"relation '{name}' has arity {ar[name]} but is used with {n} arguments")
    for a in spec.actions:
        for e in a.effects:
            for h in e.head:
                if h.relation == fo.TRUE_REL and not h.args:
                    continue
                if h.relation not in ar:
                    yield diag(e.pos, f"unknown relation '{h.relation}' in effect head")
                elif ar[h.relation] != len(h.args):
                    yield diag(e.pos, f"relation '{h.relation}' has arity {ar[h.relation]} but the head gives {len(h.args)}")
                for c in h.calls():
                    if c.function not in sv:
                        yield diag(e.pos, f"unknown service '{c.function}'")
                    elif sv[c.function] != len(c.args):
                        yield diag(e.pos, f"service '{c.function}' has arity {sv[c.function]} but is called with {len(c.args)}")
    for f in spec.initial_instance.sorted():
        if f.relation not in ar:
            yield diag(None, f"initial fact {f} uses unknown relation '{f.relation}'")
        elif ar[f.relation] != f.arity:
            yield diag(None, f"initial fact {f} does not match arity {ar[f.relation]}")


# --- pretty printing --------------------------------------------------------


def pretty(spec: DcdsSpec) -> str:
    lines: list[str] = []
    if spec.constants:
        lines.append(f"constants {', '.join(spec.constants)};")
    if spec.schema:
        lines.append(f"schema {', '.join(f'{r.name}/{r.arity}' for r in spec.schema)};")
    if spec.services:
        lines.append(f"services {', '.join(f'{s.name}/{s.arity}' for s in spec.services)};")
    if len(spec.initial_instance):
        lines.append(f"init {', '.join(str(f) for f in spec.initial_instance.sorted())};")
    if spec.equality_constraints:
        lines.append("constraints")
        lines += [f"  {ec};" for ec in spec.equality_constraints]
    if spec.actions:
        lines.append("actions")
        for a in spec.actions:
            lines.append(f"  {a.name}({', '.join(p.name for p in a.params)}) {{")
            lines += [f"    {e};" for e in a.effects]
            lines.append("  }")
    if spec.process:
        lines.append("process")
        lines += [f"  {r.guard} |-> {r.action};" for r in spec.process]
    lines.append(f"semantics {spec.semantics};")
    return "\n".join(lines) + "\n"


# --- validation -------------------------------------------------------------


def head_constants(h: HeadAtom) -> Iterator[Constant]:
    for a in h.args:
        if isinstance(a, Constant):
            yield a
        elif isinstance(a, CallTemplate):
            yield from (x for x in a.args if isinstance(x, Constant))


def validate(spec: DcdsSpec) -> list[Diagnostic]:
    """Semantic checks; an empty list means the spec is valid."""
    out: list[Diagnostic] = []

    def err(pos: tuple[int, int] | None, msg: str) -> None:
        line, col = pos or (1, 1)
        out.append(Diagnostic(line, col, "error", msg, spec.source))

    out.extend(_symbol_diagnostics(spec))

    rel_names = {r.name for r in spec.schema}
    svc_names = {s.name for s in spec.services}
    for name in sorted(rel_names & svc_names):
        err(None, f"'{name}' is declared both as a relation and as a service")
    for name in sorted((rel_names | svc_names) & RESERVED_BARE):
        err(None, f"'{name}' is a reserved name")
    for c in spec.constants:
        if FRESH_VALUE.match(c):
            err(None, f"constant '{c}' collides with the fresh-value namespace")
    if len({r.name for r in spec.schema}) != len(spec.schema):
        err(None, "duplicate relation declaration")
    names = [a.name for a in spec.actions]
    for n in sorted({n for n in names if names.count(n) > 1}):
        err(None, f"action '{n}' is declared more than once")

    known = spec.initial_domain
    for k, ec in enumerate(spec.equality_constraints):
        fv = fo.free_vars(ec.body)
        for l, r in ec.equalities:
            for x in (l, r):
                if isinstance(x, Var) and x not in fv:
                    err(ec.pos, f"constraint #{k + 1}: variable {x} does not occur free in its body")
                if isinstance(x, Constant) and x not in known:
                    err(ec.pos, f"constraint #{k + 1}: constant {x} is not in the initial active domain")
        for c in sorted(fo.constants_of(ec.body), key=lambda c: c.name):
            if c not in known:
                err(ec.pos, f"constraint #{k + 1}: constant {c} is not in the initial active domain")

    ok, witness = fo.satisfies_ec(spec.initial_instance, spec.equality_constraints)
    if not ok and witness is not None:
        ec = spec.equality_constraints[witness.index]
        err(ec.pos, f"initial instance violates constraint #{witness.index + 1} ({witness})")

    for a in spec.actions:
        params = set(a.params)
        for e in a.effects:
            plus = fo.free_vars(e.q_plus)
            if e.q_minus is not None:
                extra = fo.free_vars(e.q_minus) - plus
                if extra:
                    err(e.pos, f"action {a.name}: filter variables {_names(extra)} do not occur in the selecting query")
            for h in e.head:
                loose = h.variables() - plus - params
                if loose:
                    err(e.pos, f"action {a.name}: head {h} uses unbound variables {_names(loose)}")
                for c in head_constants(h):
                    if c not in known:
                        err(e.pos, f"action {a.name}: constant {c} is not in the initial active domain")
            for c in sorted(fo.constants_of(e.body), key=lambda c: c.name):
                if c not in known:
                    err(e.pos, f"action {a.name}: constant {c} is not in the initial active domain")

    by_name = {a.name: a for a in spec.actions}
    for r in spec.process:
        act = by_name.get(r.action)
        if act is None:
            err(r.pos, f"rule refers to unknown action '{r.action}'")
            continue
        fv = fo.free_vars(r.guard)
        if fv != set(act.params):
            err(r.pos, f"guard variables {_names(fv)} differ from the parameters {_names(act.params)} of {act.name}")
        for c in sorted(fo.constants_of(r.guard), key=lambda c: c.name):
            if c not in known:
                err(r.pos, f"guard constant {c} is not in the initial active domain")
    out.sort(key=lambda d: (d.line, d.col, d.message))
    return out


def _names(vs: Iterable[Var]) -> str:
    return "{" + ", ".join(sorted(v.name for v in vs)) + "}"


def call_sites(spec: DcdsSpec) -> Iterator[tuple[Action, int, HeadAtom, CallTemplate]]:
    for a in spec.actions:
        for k, e in enumerate(a.effects):
            for h in e.head:
                for c in h.calls():
                    yield a, k, h, c


__all__ = [
    "Action", "CallTemplate", "DETERMINISTIC", "DcdsSpec", "Effect", "HeadAtom", "NONDETERMINISTIC",
    "RelationDecl", "Rule", "ServiceDecl", "call_sites", "load", "parse", "pretty", "split_body",
    "validate", "ParseError", "Diagnostic", "Token", "Call",
]
