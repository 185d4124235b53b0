from hypothesis import given, settings, strategies as st

from dcds import fo
from dcds.fo import Atom, Eq, EqualityConstraint, Fact, Instance, Var
from dcds.syntax import ParseError, parse_formula, parse_instance
from dcds.terms import Constant

import pytest

x, y = Var("x"), Var("y")
a, b, c = Constant("a"), Constant("b"), Constant("c")


def test_join_and_projection():
    inst = parse_instance("P(a), P(b), Q(a, b), Q(b, b)")
    q = parse_formula("exists y. P(x) & Q(x, y) & y = b", constants=["b"])
    assert fo.as_dicts(fo.evaluate(q, inst)) == [{x: a}, {x: b}]


def test_negation_ranges_over_the_active_domain():
    inst = parse_instance("P(a), Q(a, b)")
    ans = fo.evaluate(parse_formula("!P(x)"), inst)
    assert fo.as_dicts(ans) == [{x: b}]


def test_closed_query():
    inst = parse_instance("P(a)")
    assert fo.holds(parse_formula("exists x. P(x)"), inst)
    assert not fo.holds(parse_formula("forall x. P(x) -> Q(x, x)"), inst)


def test_constants_vs_variables_when_parsing():
    f = parse_formula("P(a) & P(z)", constants=["a"])
    assert fo.free_vars(f) == {Var("z")}
    assert fo.constants_of(f) == {a}


def test_parse_error_has_position():
    with pytest.raises(ParseError) as e:
        parse_formula("P(x) &")
    assert ":1:" in str(e.value)


def test_constraint_witness():
    ec = EqualityConstraint(parse_formula("P(x) & Q(y, z)"), ((x, y),))
    ok, w = fo.satisfies_ec(parse_instance("P(a), Q(b, a)"), [ec])
    assert not ok and (w.left, w.right) == (a, b)
    assert fo.satisfies_ec(parse_instance("P(a), Q(a, b)"), [ec])[0]


def test_positive_existential_detection():
    assert fo.is_positive_existential(parse_formula("exists y. P(x) & Q(x, y)"))
    assert not fo.is_positive_existential(parse_formula("P(x) & !Q(x, x)"))


# -- evaluator against direct recursion

vars_ = st.sampled_from([x, y])
args = st.one_of(vars_, st.sampled_from([a, b]))
atoms = st.one_of(
    st.builds(lambda t: Atom("P", (t,)), args),
    st.builds(lambda s, t: Atom("Q", (s, t)), args, args),
    st.builds(Eq, args, args),
)
formulas = st.recursive(
    atoms,
    lambda inner: st.one_of(
        st.builds(fo.Not, inner),
        st.builds(lambda p, q: fo.And((p, q)), inner, inner),
        st.builds(lambda p, q: fo.Or((p, q)), inner, inner),
        st.builds(fo.Implies, inner, inner),
        st.builds(lambda v, p: fo.Exists((v,), p), vars_, inner),
        st.builds(lambda v, p: fo.Forall((v,), p), vars_, inner),
    ),
    max_leaves=6,
)
values = st.sampled_from([a, b, c])
instances = st.builds(
    lambda ps, qs: Instance([Fact("P", (v,)) for v in ps] + [Fact("Q", pair) for pair in qs]),
    st.sets(values, max_size=3),
    st.sets(st.tuples(values, values), max_size=4),
)


@settings(max_examples=300)
@given(formulas, instances)
def test_evaluate_matches_reference(f, inst):
    assert fo.evaluate(f, inst) == fo.brute_force_eval(f, inst)


@given(formulas, instances, st.sampled_from([a, b]))
def test_substitution_commutes_with_evaluation(f, inst, v):
    sub = fo.substitute(f, {x: v})
    direct = {ans - {(x, v)} for ans in fo.brute_force_eval(f, inst) if (x, v) in ans or x not in fo.free_vars(f)}
    if v in inst.adom or x not in fo.free_vars(f):
        assert fo.brute_force_eval(sub, inst) == frozenset(direct)
