"""Command-line front end.

Exit status: 0 success or HOLDS, 1 FAILS or a negative analysis, 2 budget exhausted,
3 bad input.
"""

from __future__ import annotations

import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import click

from . import analysis, corpus_path, det, mu, nondet, transforms
from .spec import DcdsSpec, load, pretty, validate
from .syntax import ParseError, parse_formula as parse_fo
from .terms import Constant
from .ts import DivergenceReport, TransitionSystem

EXIT_OK, EXIT_FAIL, EXIT_BUDGET, EXIT_INPUT = 0, 1, 2, 3
BUDGET_ENV = "DCDS_BUDGET_STATES"


@dataclass
class CliConfig:
    subcommand: str
    spec_path: str
    formula: str | None = None
    formula_file: str | None = None
    max_states: int = det.DEFAULT_MAX_STATES
    max_terms: int = det.DEFAULT_MAX_TERMS
    depth: int = 2
    pool: tuple[str, ...] = ()
    export: str | None = None
    out: str | None = None
    json: bool = False
    verbose: bool = False
    route: str = "semantic"
    kind: str | None = None
    denials: tuple[str, ...] = ()
    ic: str | None = None

    def __post_init__(self) -> None:
        for name in ("max_states", "max_terms"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name.replace('_', '-')} must be positive")
        if self.depth < 0:
            raise ValueError("depth must be non-negative")


class InputError(Exception):
    pass


@dataclass
class _Out:
    cfg: CliConfig
    payload: dict = field(default_factory=dict)

    def text(self, line: str) -> None:
        if not self.cfg.json:
            click.echo(line)

    def artifact(self, content: str) -> None:
        if self.cfg.out:
            Path(self.cfg.out).write_text(content)
        elif self.cfg.json:
            self.payload["artifact"] = content
        else:
            click.echo(content, nl=not content.endswith("\n"))

    def finish(self, code: int) -> int:
        if self.cfg.json:
            self.payload["exit_code"] = code
            click.echo(json.dumps(self.payload, indent=2, sort_keys=True))
        return code


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    try:
        return corpus_path(p.name)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None


def _load(cfg: CliConfig) -> DcdsSpec:
    spec = load(_resolve(cfg.spec_path))
    problems = validate(spec)
    if problems:
        raise InputError("\n".join(str(d) for d in problems))
    return spec


def _divergence(o: _Out, rep: DivergenceReport) -> int:
    o.payload["divergence"] = {
        "reason": rep.reason,
        "states_explored": rep.states_explored,
        "terms_seen": rep.terms_seen,
        "longest_chain": None if rep.longest_chain is None else str(rep.longest_chain),
    }
    if not o.cfg.json:
        click.echo(str(rep), err=True)
    return o.finish(EXIT_BUDGET)


def _build(spec: DcdsSpec, cfg: CliConfig) -> TransitionSystem | DivergenceReport:
    if spec.deterministic:
        return det.build_abstract_ts(spec, cfg.max_states, cfg.max_terms)
    return nondet.rcycl(spec, cfg.max_states)


def _summary(ts: TransitionSystem) -> dict:
    return {"states": len(ts), "edges": len(ts.edges), "initial_out_degree": len(ts.successors(ts.initial))}


def _yn(b: bool) -> str:
    return "yes" if b else "no"


def _cmd_check(cfg: CliConfig, o: _Out) -> int:
    spec = _load(cfg)
    o.payload.update(valid=True, semantics=spec.semantics)
    o.text(f"{cfg.spec_path}: ok ({spec.semantics})")
    return o.finish(EXIT_OK)


def _cmd_analyze(cfg: CliConfig, o: _Out) -> int:
    spec = _load(cfg)
    wa = analysis.weak_acyclicity(spec)
    gr = analysis.gr_analysis(spec)
    o.payload.update(
        weakly_acyclic=wa.acyclic,
        gr_acyclic=gr.gr_acyclic,
        gr_plus_acyclic=gr.gr_plus_acyclic,
        inconclusive=gr.inconclusive,
        dependency_witness=[f"{u[0]},{u[1]}{'-*>' if s else '->'}{v[0]},{v[1]}" for u, v, s in wa.witness],
        gr_witness=None if gr.witness is None else [analysis.format_path(p) for p in gr.witness],
        gr_plus_witness=None if gr.plus_witness is None else [analysis.format_path(p) for p in gr.plus_witness],
    )
    o.text(f"weakly-acyclic: {_yn(wa.acyclic)}; GR-acyclic: {_yn(gr.gr_acyclic)}; GR+-acyclic: {_yn(gr.gr_plus_acyclic)}")
    if gr.note:
        o.text(gr.note)
    if cfg.verbose:
        for key in ("dependency_witness", "gr_witness", "gr_plus_witness"):
            if o.payload[key]:
                o.text(f"{key.replace('_', ' ')}: {' | '.join(o.payload[key])}")
    # the check that guarantees a finite abstraction for the spec's semantics
    good = wa.acyclic if spec.deterministic else gr.gr_plus_acyclic
    return o.finish(EXIT_OK if good else EXIT_FAIL)


def _cmd_build_ts(cfg: CliConfig, o: _Out) -> int:
    spec = _load(cfg)
    ts = _build(spec, cfg)
    if isinstance(ts, DivergenceReport):
        return _divergence(o, ts)
    o.payload.update(_summary(ts))
    if cfg.export:
        o.artifact(ts.export(cfg.export))
    else:
        o.text(f"{len(ts)} states, {len(ts.edges)} edges")
    return o.finish(EXIT_OK)


def _formula_text(cfg: CliConfig) -> str:
    if cfg.formula is not None:
        return cfg.formula
    if cfg.formula_file is not None:
        try:
            return Path(cfg.formula_file).read_text()
        except OSError as e:
            raise InputError(str(e)) from None
    raise InputError("model-check needs --formula or --formula-file")


def _cmd_model_check(cfg: CliConfig, o: _Out) -> int:
    spec = _load(cfg)
    names = [c.name for c in spec.initial_domain if isinstance(c, Constant)]
    try:
        phi = mu.parse_formula(_formula_text(cfg), names)
        fragment = mu.classify(phi)
    except (ParseError, mu.MuError) as e:
        raise InputError(str(e)) from None
    if fragment == "muL":
        raise InputError("formula quantifies outside the active domain: no finite abstraction preserves it")
    if fragment == "muL_A" and not spec.deterministic:
        warning = "formula is outside muL_P; its verdict may differ between prunings"
        o.payload["warning"] = warning
        if not cfg.json:
            click.echo(f"warning: {warning}", err=True)
    ts = _build(spec, cfg)
    if isinstance(ts, DivergenceReport):
        return _divergence(o, ts)
    try:
        res = mu.model_check(ts, phi, cfg.route)
    except mu.MuError as e:
        raise InputError(str(e)) from None
    o.payload.update(holds=res.holds, fragment=res.fragment, extension=sorted(res.extension), **_summary(ts))
    o.text(f"{'HOLDS' if res.holds else 'FAILS'} ({res.fragment}, {len(ts)} states)")
    if cfg.verbose:
        for i in range(len(ts)):
            mark = "+" if i in res.extension else "-"
            o.text(f"  {mark} {i}: {', '.join(str(f) for f in ts.db(i).sorted()) or '(empty)'}")
    return o.finish(EXIT_OK if res.holds else EXIT_FAIL)


def _cmd_transform(cfg: CliConfig, o: _Out) -> int:
    spec = _load(cfg)
    names = [c.name for c in spec.initial_domain if isinstance(c, Constant)]
    try:
        if cfg.kind == "det2nondet":
            new, rep = transforms.det_to_nondet(spec)
        elif cfg.kind == "nondet2det":
            new, rep = transforms.nondet_to_det(spec)
        elif cfg.kind == "denials":
            new, rep = transforms.encode_denials(spec, [parse_fo(q, names) for q in cfg.denials])
        elif cfg.kind == "ic":
            if cfg.ic is None:
                raise InputError("transform ic needs --ic")
            new, rep = transforms.encode_fo_constraint(spec, parse_fo(cfg.ic, names))
        else:
            raise InputError(f"unknown transform {cfg.kind!r}")
    except (ParseError, transforms.TransformError) as e:
        raise InputError(str(e)) from None
    o.payload["report"] = rep.to_dict()
    if not cfg.json:
        click.echo(str(rep), err=True)
    o.artifact(pretty(new))
    return o.finish(EXIT_OK)


def _cmd_oracle(cfg: CliConfig, o: _Out) -> int:
    spec = _load(cfg)
    pool = [Constant(p) for p in cfg.pool] or sorted(spec.initial_domain, key=lambda t: t.key())
    try:
        ts = det.build_concrete_bounded(spec, pool, cfg.depth)
    except ValueError as e:
        raise InputError(str(e)) from None
    if len(ts) > cfg.max_states:
        return _divergence(o, DivergenceReport(f"state budget of {cfg.max_states} exceeded", len(ts), partial=ts))
    o.payload.update(_summary(ts))
    if cfg.export:
        o.artifact(ts.export(cfg.export))
    else:
        o.text(f"{len(ts)} states, {len(ts.edges)} edges (depth {cfg.depth}, pool {{{', '.join(map(str, pool))}}})")
    return o.finish(EXIT_OK)


_COMMANDS = {
    "check": _cmd_check,
    "analyze": _cmd_analyze,
    "build-ts": _cmd_build_ts,
    "model-check": _cmd_model_check,
    "transform": _cmd_transform,
    "oracle": _cmd_oracle,
}


def run(cfg: CliConfig) -> int:
    o = _Out(cfg)
    try:
        return _COMMANDS[cfg.subcommand](cfg, o)
    except (InputError, ParseError, OSError) as e:
        msg = str(e)
        o.payload["error"] = msg
        if cfg.json:
            return o.finish(EXIT_INPUT)
        click.echo(msg, err=True)
        return EXIT_INPUT


def _default_states() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return det.DEFAULT_MAX_STATES
    try:
        return int(raw)
    except ValueError:
        return det.DEFAULT_MAX_STATES


def _common(f):
    f = click.option("--json", "as_json", is_flag=True, help="Print a machine-readable report.")(f)
    f = click.option("-v", "--verbose", is_flag=True)(f)
    f = click.argument("spec_path")(f)
    return f


def _budgets(f):
    f = click.option("--max-states", type=int, default=_default_states, show_default=f"${BUDGET_ENV} or {det.DEFAULT_MAX_STATES}")(f)
    f = click.option("--max-terms", type=int, default=det.DEFAULT_MAX_TERMS, show_default=True)(f)
    return f


def _outputs(f):
    f = click.option("--export", type=click.Choice(["dot", "json"]))(f)
    f = click.option("--out", type=click.Path(dir_okay=False))(f)
    return f


def _invoke(subcommand: str, **kw) -> None:
    kw["json"] = kw.pop("as_json")
    try:
        cfg = CliConfig(subcommand, **kw)
    except ValueError as e:
        click.echo(str(e), err=True)
        sys.exit(EXIT_INPUT)
    sys.exit(run(cfg))


class _Group(click.Group):
    def main(self, *args, **kwargs):
        # usage errors share the input-error status
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.exceptions.NoArgsIsHelpError as e:
            click.echo(e.ctx.get_help())
            sys.exit(EXIT_OK)
        except click.UsageError as e:
            e.show()
            sys.exit(EXIT_INPUT)
        except click.exceptions.Abort:
            sys.exit(EXIT_INPUT)


@click.group(cls=_Group)
@click.version_option(package_name="artifact")
def main() -> None:
    """Verify data-centric dynamic systems given as .dcds files."""


@main.command()
@_common
def check(**kw) -> None:
    """Parse and validate a spec."""
    _invoke("check", **kw)


@main.command()
@_common
def analyze(**kw) -> None:
    """Weak acyclicity and GR/GR+ acyclicity."""
    _invoke("analyze", **kw)


@main.command("build-ts")
@_common
@_budgets
@_outputs
def build_ts(**kw) -> None:
    """Build the finite abstraction (deterministic) or recycling pruning (nondeterministic)."""
    _invoke("build-ts", **kw)


@main.command("model-check")
@_common
@_budgets
@click.option("--formula")
@click.option("--formula-file", type=click.Path(dir_okay=False))
@click.option("--route", type=click.Choice(["semantic", "prop"]), default="semantic", show_default=True)
def model_check(**kw) -> None:
    """Check a mu-calculus formula; -v dumps the per-state extension."""
    _invoke("model-check", **kw)


@main.command()
@_common
@click.argument("kind", type=click.Choice(["det2nondet", "nondet2det", "denials", "ic"]))
@click.option("--denial", "denials", multiple=True, help="Denial query (repeatable).")
@click.option("--ic", help="Integrity constraint sentence.")
@click.option("--out", type=click.Path(dir_okay=False))
def transform(**kw) -> None:
    """Rewrite a spec; the new spec goes to stdout (or --out), the report to stderr."""
    _invoke("transform", **kw)


@main.command()
@_common
@click.option("--max-states", type=int, default=_default_states)
@click.option("--depth", type=int, default=2, show_default=True)
@click.option("--pool", default="", help="Comma-separated value pool; defaults to the initial domain.")
@_outputs
def oracle(pool: str, **kw) -> None:
    """Bounded concrete transition system over a finite value pool."""
    _invoke("oracle", pool=tuple(p.strip() for p in pool.split(",") if p.strip()), **kw)


if __name__ == "__main__":
    main()
