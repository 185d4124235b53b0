from hypothesis import given, strategies as st

import pytest

from dcds.terms import (
    Call,
    Constant,
    Partition,
    PartitionError,
    ServiceCallMap,
    check_well_formed,
    congruence_closure,
    default_representative,
    is_embedding,
    is_extension,
    iter_new_terms,
    subterms,
)

a, b = Constant("a"), Constant("b")
fa, ga = Call("f", (a,)), Call("g", (a,))


def test_representative_prefers_the_constant():
    assert default_representative({fa, ga, a}) == a
    assert default_representative({ga, fa}) == fa


def test_canonical_form_marks_representatives():
    p = Partition([{a, fa}, {ga}])
    assert p.canonical() == "[{*a, f(a)}, {*g(a)}]"
    assert Partition([{ga}, {fa, a}]) == p


def test_bad_partitions_are_rejected():
    with pytest.raises(PartitionError):
        Partition([{a}, {a, fa}])
    with pytest.raises(PartitionError):
        Partition([{a}], {a: fa})


def test_two_constants_in_one_cell_is_ill_formed():
    kinds = [v.kind for v in check_well_formed(Partition([{a, b}]))]
    assert "constants" in kinds


def test_congruence_violation_is_reported():
    h1, h2 = Call("g", (a,)), Call("h", (a,))
    p = Partition([{a}, {h1, h2}, {Call("f", (h1,))}, {Call("f", (h2,))}])
    assert [v.kind for v in check_well_formed(p)] == ["congruence"]


def test_extension_and_embedding():
    small = Partition([{a}, {fa}])
    assert is_extension(small, Partition([{a}, {fa}, {ga}]))
    assert not is_embedding(small, Partition([{a}, {fa}, {ga}]))
    assert is_embedding(small, Partition([{a}, {fa}]))
    assert not is_extension(small, Partition([{a, fa}]))


def test_new_terms_come_innermost_first():
    t = Call("f", (Call("g", (a,)),))
    assert list(iter_new_terms({a}, {t})) == [Call("g", (a,)), t]
    assert subterms(t) == {a, Call("g", (a,)), t}


def test_service_call_map():
    m = ServiceCallMap({fa: b})
    assert m.extend({ga: a})[ga] == a
    assert m.extend({fa: b}) == m
    with pytest.raises(ValueError):
        m.extend({fa: a})
    assert m.canonical() == "{f(a) -> b}"


# -- properties

leaves = st.sampled_from([Constant("a"), Constant("b"), Constant("c")])
terms = st.recursive(leaves, lambda inner: st.builds(lambda f, x: Call(f, (x,)), st.sampled_from("fg"), inner), max_leaves=4)


@st.composite
def partitions(draw):
    ts = sorted(draw(st.sets(terms, min_size=1, max_size=7)), key=lambda t: t.key())
    labels = draw(st.lists(st.integers(0, 3), min_size=len(ts), max_size=len(ts)))
    cells: dict[int, set] = {}
    for t, k in zip(ts, labels):
        cells.setdefault(k, set()).add(t)
    return Partition(cells.values())


@given(partitions())
def test_closure_coarsens_the_partition(p):
    roots = congruence_closure(p)
    for cell in p.cells:
        assert len({roots[t] for t in cell}) == 1


@given(partitions())
def test_closure_is_idempotent(p):
    roots = congruence_closure(p)
    groups: dict = {}
    for t, r in roots.items():
        groups.setdefault(r, set()).add(t)
    again = congruence_closure(Partition(groups.values()))
    assert len(set(again.values())) == len(groups)


@given(partitions())
def test_closed_partitions_have_no_congruence_violations(p):
    roots = congruence_closure(p)
    groups: dict = {}
    for t, r in roots.items():
        groups.setdefault(r, set()).add(t)
    closed = Partition(groups.values())
    assert not [v for v in check_well_formed(closed) if v.kind == "congruence"]
