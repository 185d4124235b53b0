import random

from hypothesis import given, settings, strategies as st

from _support import db
from dcds import mu
from dcds.random_models import random_ts
from dcds.terms import Constant
from dcds.ts import TransitionSystem, history_bisimilar, isomorphisms, persistence_bisimilar, runs


def ab_pair():
    """R(b) -> Q(c) against R(b) -> Q(b): only the second keeps b alive."""
    ts1 = TransitionSystem.from_graph([db(("R", "b")), db(("Q", "c"))], [(0, 1)])
    ts2 = TransitionSystem.from_graph([db(("R", "b")), db(("Q", "b"))], [(0, 1)])
    return ts1, ts2


def test_persistence_distinguishes_kept_from_replaced_values():
    ts1, ts2 = ab_pair()
    assert not persistence_bisimilar(ts1, ts2)
    assert not persistence_bisimilar(ts2, ts1)
    f = mu.parse_formula("exists x. live(x) & R(x) & dia(live(x) & Q(x))")
    assert mu.model_check(ts1, f).holds != mu.model_check(ts2, f).holds


def test_history_bisimulation_remembers_old_values():
    # a -> b -> a against a -> b -> c
    ts1 = TransitionSystem.from_graph([db(("P", "a")), db(("P", "b")), db(("P", "a"))], [(0, 1), (1, 2)])
    ts2 = TransitionSystem.from_graph([db(("P", "a")), db(("P", "b")), db(("P", "c"))], [(0, 1), (1, 2)])
    assert not history_bisimilar(ts1, ts2)
    assert persistence_bisimilar(ts1, ts2)


def test_rigid_mode_is_reported():
    # identity on the shared values {a, b} is impossible, a swap works
    ts1 = TransitionSystem.from_graph([db(("P", "a"), ("Q", "b"))], [])
    ts2 = TransitionSystem.from_graph([db(("P", "b"), ("Q", "a"))], [])
    v = history_bisimilar(ts1, ts2)
    assert v and v.mode == "free"
    assert history_bisimilar(ts1, ts1).mode == "rigid"


def test_isomorphisms_of_instances():
    maps = list(isomorphisms(db(("Q", "a", "b")), db(("Q", "c", "d")), {}, {}))
    assert maps == [{Constant("a"): Constant("c"), Constant("b"): Constant("d")}]
    assert not list(isomorphisms(db(("Q", "a", "a")), db(("Q", "c", "d")), {}, {}))


def test_json_round_trip_and_dot():
    ts = random_ts(random.Random(3), 6)
    ts.add_state(db(("P", "a")), None)
    back = TransitionSystem.from_json(ts.to_json())
    assert back.edges == ts.edges and back.states == ts.states and back.initial == ts.initial
    dot = ts.to_dot()
    assert dot.startswith("digraph") and "penwidth=2" in dot


def test_runs_are_paths():
    ts = random_ts(random.Random(5), 5, edge_prob=0.6)
    for r in runs(ts, 3):
        assert r.check(ts)


def renamed(ts: TransitionSystem, mapping) -> TransitionSystem:
    return TransitionSystem.from_graph([s.db.rename(mapping) for s in ts.states], [(e.src, e.dst) for e in ts.edges], ts.initial)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_bisimilar_to_a_renamed_copy(seed):
    ts = random_ts(random.Random(seed), 5, relations=(("P", 1), ("Q", 0)), values=("a", "b", "c"))
    perm = {Constant("a"): Constant("x"), Constant("b"): Constant("y"), Constant("c"): Constant("z")}
    other = renamed(ts, perm)
    assert history_bisimilar(ts, other)
    assert persistence_bisimilar(ts, other)
    assert persistence_bisimilar(other, ts)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_history_bisimilarity_implies_persistence_bisimilarity(seed):
    rng = random.Random(seed)
    t1 = random_ts(rng, 4, relations=(("P", 1),), values=("a", "b"))
    t2 = random_ts(rng, 4, relations=(("P", 1),), values=("a", "b"))
    if history_bisimilar(t1, t2, rigid=()):
        assert persistence_bisimilar(t1, t2, rigid=())
