import pytest

from dcds import det, fo, load_corpus, nondet
from dcds.spec import parse, pretty, validate
from dcds.syntax import parse_formula
from dcds.terms import Constant
from dcds.ts import TransitionSystem
from dcds.transforms import (
    TransformError,
    det_to_nondet,
    encode_denials,
    encode_fo_constraint,
    nondet_to_det,
)

a, b = Constant("a"), Constant("b")


def test_det_to_nondet_adds_one_result_relation_per_service():
    out, rep = det_to_nondet(load_corpus("openruntime"))
    assert out.semantics == "nondeterministic"
    assert rep.added_relations == ["$R_f/2", "$R_g/2"]
    assert all(len(act.effects) == 4 for act in out.actions)
    assert validate(out) == [] and parse(pretty(out)) == out


def test_det_to_nondet_without_calls_only_flips_semantics():
    spec = load_corpus("denial_demo")
    out, rep = det_to_nondet(spec)
    assert out == spec.with_(semantics="nondeterministic")
    assert rep.added_relations == []


def test_det_to_nondet_requires_det():
    with pytest.raises(TransformError):
        det_to_nondet(load_corpus("nondet_nonwa"))


def test_nondet_to_det_initialization_and_arity():
    spec = load_corpus("nondet_nonwa")
    out, rep = nondet_to_det(spec)
    init = {str(f) for f in out.initial_instance}
    assert {"$succ(0, 0)", "$succ(0, 1)", "$now(1)"} <= init
    assert out.service_arities["f"] == spec.service_arities["f"] + 1
    assert out.service_arities["$new"] == 1
    assert rep.reserved_constants == ["0", "1"]
    assert validate(out) == [] and parse(pretty(out)) == out


def test_nondet_to_det_projection_matches():
    spec = load_corpus("nondet_nonwa")
    out, _ = nondet_to_det(spec)
    pool = [Constant(v) for v in ("a", "b", "0", "1", "$t0", "$t1")]
    rels = [r.name for r in spec.schema]
    assert det.build_concrete_bounded(spec, pool, 2).project(rels) == det.build_concrete_bounded(out, pool, 2).project(rels)


def test_empty_denial_list_changes_nothing():
    spec = load_corpus("denial_demo")
    assert encode_denials(spec, [])[0] == spec


def test_denials_are_idempotent_and_keep_the_marker():
    spec = load_corpus("denial_demo")
    q = parse_formula("exists x. R(x) & P(x)")
    once, rep = encode_denials(spec, [q])
    twice, rep2 = encode_denials(once, [q])
    assert once == twice and rep2.added_constraints == []
    ts = det.build_abstract_ts(once)
    marker = fo.Fact("$Neq", (a, b))
    assert all(marker in s.db for s in ts.states)
    assert all(not fo.holds(q, s.db) for s in ts.states)


def test_marker_constants_are_injected_when_missing():
    spec = parse("schema P/1;\nactions go() { P(x) ~> P(x); }\nprocess true |-> go;\n")
    out, rep = encode_denials(spec, [parse_formula("exists x. P(x)")])
    assert rep.reserved_constants == ["$a", "$b"]
    assert validate(out) == []


def test_integrity_constraint_true_is_harmless():
    spec = load_corpus("denial_demo")
    out, _ = encode_fo_constraint(spec, fo.TrueF())
    rels = [r.name for r in spec.schema]
    before = {s.db for s in det.build_abstract_ts(spec).states}
    after = {s.db.restrict(rels) for s in det.build_abstract_ts(out).states}
    assert before == after


def test_integrity_constraint_blocks_violations():
    spec = load_corpus("denial_demo")
    ic = parse_formula("forall x. P(x) -> R(x)")
    out, rep = encode_fo_constraint(spec, ic)
    ts = det.build_abstract_ts(out)
    assert all(fo.holds(ic, s.db) for s in ts.states)
    assert all(fo.Fact("$aux", (a, b)) in s.db for s in ts.states)
    assert encode_fo_constraint(out, ic)[0] == out


def test_integrity_constraint_must_be_closed():
    with pytest.raises(TransformError):
        encode_fo_constraint(load_corpus("denial_demo"), parse_formula("P(x)"))


@pytest.mark.parametrize("name", ["denial_demo", "openruntime", "openruntime_ec", "travel_audit"])
def test_run_bounded_specs_stay_finite_after_det_to_nondet(name):
    out, _ = det_to_nondet(load_corpus(name))
    assert isinstance(nondet.rcycl(out), TransitionSystem)
