import pytest
from hypothesis import given, settings, strategies as st

from dcds import det, load_corpus
from dcds.terms import Call, Constant, Partition, is_extension, is_well_formed, subterms
from dcds.ts import DivergenceReport

a, b = Constant("a"), Constant("b")
fa, ga = Call("f", (a,)), Call("g", (a,))


def set_partitions(items):
    """Every partition of a list, by direct recursion (test oracle)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def test_openruntime_successor_commitments_are_all_partitions_of_three_terms():
    ts = det.build_abstract_ts(load_corpus("openruntime"))
    got = {ts.states[j].annotation for j in ts.successors(ts.initial)}
    want = {Partition(p) for p in set_partitions([a, fa, ga])}
    assert got == want


def test_openruntime_abstract_size_is_frozen():
    ts = det.build_abstract_ts(load_corpus("openruntime"))
    assert (len(ts), len(ts.edges)) == (10, 14)


def test_travel_audit_abstract_size_is_frozen():
    ts = det.build_abstract_ts(load_corpus("travel_audit"))
    assert (len(ts), len(ts.edges)) == (871, 1160)


def test_nonwa_diverges_with_a_call_chain():
    rep = det.build_abstract_ts(load_corpus("nonwa"), max_terms=20)
    assert isinstance(rep, DivergenceReport)
    assert rep.longest_chain is not None and rep.longest_chain.depth >= 10
    assert "f(f(" in str(rep)


def test_nondet_spec_is_rejected():
    with pytest.raises(ValueError):
        det.build_abstract_ts(load_corpus("nondet_nonwa"))


def test_concrete_oracle_openruntime_depth_one():
    ts = det.build_concrete_bounded(load_corpus("openruntime"), [a, b], 1)
    # every pair of values for f(a), g(a)
    assert len(ts.successors(ts.initial)) == 4
    calls = {ts.states[j].annotation.canonical() for j in ts.successors(ts.initial)}
    assert "{f(a) -> a, g(a) -> b}" in calls


def test_concrete_oracle_needs_the_initial_domain():
    with pytest.raises(ValueError):
        det.build_concrete_bounded(load_corpus("openruntime"), [b], 1)


def test_recorded_calls_keep_their_value():
    ts = det.build_concrete_bounded(load_corpus("openruntime"), [a, b], 2)
    for e in ts.edges:
        src, dst = ts.states[e.src].annotation, ts.states[e.dst].annotation
        assert all(dst[c] == v for c, v in src.items())


def test_truncation_keeps_depth():
    ts = det.build_abstract_ts(load_corpus("openruntime"))
    t1 = ts.truncate(1)
    assert len(t1) == 6 and all(d <= 1 for d in t1.depths().values())


# -- commitment extension properties

leaves = st.sampled_from([a, b])
terms = st.recursive(leaves, lambda inner: st.builds(lambda f, x: Call(f, (x,)), st.sampled_from("fg"), inner), max_leaves=3)


@settings(max_examples=60, deadline=None)
@given(st.sets(terms, min_size=1, max_size=3))
def test_extensions_are_well_formed_and_extend(incoming):
    h = Partition.singletons([a, b])
    outs = list(det.extend_commitment(h, incoming))
    assert outs, "at least one extension exists"
    needed = set().union(*(subterms(t) for t in incoming))
    for h2 in outs:
        assert is_well_formed(h2)
        assert is_extension(h, h2)
        assert needed <= h2.terms()
        assert all(h2.rep(t) == t for t in (a, b))
    assert len(set(outs)) == len(outs)


@settings(max_examples=40, deadline=None)
@given(st.sets(terms, min_size=1, max_size=3))
def test_extensions_cover_every_well_formed_partition(incoming):
    h = Partition.singletons([a, b])
    universe = sorted(set().union(*(subterms(t) for t in incoming)) | {a, b}, key=lambda t: t.key())
    want = set()
    for p in set_partitions(universe):
        cand = Partition(p)
        if is_well_formed(cand) and is_extension(h, cand):
            want.add(frozenset(cand.cells))
    got = {frozenset(h2.cells) for h2 in det.extend_commitment(h, incoming)}
    assert got == want
