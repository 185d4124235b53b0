import random

from hypothesis import given, strategies as st

from _support import db, golden_nonwa_pruning
from dcds import load_corpus, nondet
from dcds.terms import Call, Constant, Partition, is_well_formed
from dcds.ts import DivergenceReport, persistence_bisimilar

a = Constant("a")


def test_nondet_nonwa_pruning_is_frozen():
    ts = nondet.rcycl(load_corpus("nondet_nonwa"))
    got = [str(s.db) for s in ts.states]
    assert got == ["{R(a)}", "{Q($v0)}", "{Q(a)}", "{R($v0)}", "{Q($v1)}", "{R($v1)}"]
    assert len(ts.edges) == 11


def test_pruning_is_deterministic():
    spec = load_corpus("nondet_nonwa")
    assert nondet.rcycl(spec) == nondet.rcycl(spec)


def test_pruning_matches_golden_in_both_directions():
    ts = nondet.rcycl(load_corpus("nondet_nonwa"))
    golden = golden_nonwa_pruning()
    assert persistence_bisimilar(ts, golden).mode == "rigid"
    assert persistence_bisimilar(golden, ts).mode == "rigid"


def test_fresh_name_generator_is_used():
    ts = nondet.rcycl(load_corpus("nondet_nonwa"), fresh="#n")
    assert "{Q(#n0)}" in {str(s.db) for s in ts.states}


def test_unbounded_specs_report_divergence():
    copy = nondet.rcycl(load_corpus("nondet_copy"))
    replace = nondet.rcycl(load_corpus("nondet_replace"))
    travel = nondet.rcycl(load_corpus("travel_request"))
    assert isinstance(copy, DivergenceReport) and "active-domain" in copy.reason
    assert isinstance(replace, DivergenceReport) and "evaluation budget" in replace.reason
    assert isinstance(travel, DivergenceReport) and "evaluation budget" in travel.reason


def test_every_commitment_is_represented():
    spec = load_corpus("nondet_nonwa")
    act = spec.actions[0]
    d = [a, Constant("$v0")]
    hs = nondet.commitments_represented(spec, db(("R", "a")), act, {}, d)
    fa = Call("f", (a,))
    assert hs == {Partition([{a, fa}]), Partition([{a}, {fa}])}


def test_ground_evaluations_count():
    spec = load_corpus("openruntime")
    evals = nondet.ground_evals(spec.initial_instance, spec.actions[0], {}, [a, Constant("b"), Constant("c")])
    assert len(evals) == 9


values = st.sampled_from([Constant(v) for v in "abcd"])
calls = st.sampled_from([Call("f", (a,)), Call("g", (a,)), Call("f", (Constant("b"),))])


@given(st.dictionaries(calls, values, min_size=1))
def test_evaluations_respect_their_induced_commitment(theta):
    carrier = set(theta) | {a, Constant("b")}
    h = nondet.induced_commitment(theta, carrier)
    assert nondet.respects(theta, h)
    assert is_well_formed(h)


@given(st.integers(0, 10_000))
def test_pruning_shape_does_not_depend_on_fresh_names(seed):
    rng = random.Random(seed)
    spec = load_corpus("nondet_nonwa")
    ts = nondet.rcycl(spec, fresh=f"$r{rng.randrange(100)}_")
    assert len(ts) == 6
    assert persistence_bisimilar(ts, golden_nonwa_pruning())
