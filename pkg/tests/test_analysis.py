from hypothesis import given, settings, strategies as st

from dcds import analysis, load_corpus
from dcds.spec import parse


def test_nonwa_dependency_graph():
    dg = analysis.dependency_graph(load_corpus("nonwa"))
    assert dg.edges == {(("R", 1), ("Q", 1), True), (("Q", 1), ("R", 1), False)}


def test_openruntime_dependency_graph_has_no_special_cycle():
    wa = analysis.weak_acyclicity(load_corpus("openruntime"))
    assert wa.acyclic and wa.witness == []
    specials = {(u, v) for u, v, s in wa.graph.edges if s}
    assert specials == {(("P", 1), ("Q", 1)), (("P", 1), ("Q", 2))}


def test_positive_approximate_drops_filters_and_guards():
    spec = parse("""
schema P/1, R/1;
init P(a);
actions alpha(y) { P(x) & !R(x) ~> R(y); }
process P(y) |-> alpha;
""")
    pos = analysis.positive_approximate(spec)
    assert pos.actions[0].params == ()
    assert pos.actions[0].effects[0].q_minus is None
    assert str(pos.process[0].guard) == "true"


def test_nondet_copy_dataflow_graph_is_frozen():
    df = analysis.dataflow_graph(load_corpus("nondet_copy"))
    assert [str(e) for e in df.edges] == ["R->R#0", "R-*>Q#1", "Q->Q#2"]


def test_gr_witness_for_copy():
    r = analysis.gr_analysis(load_corpus("nondet_copy"))
    assert not r.gr_acyclic
    assert [analysis.format_path(p) for p in r.witness] == ["R->R#0", "R-*>Q#1", "Q->Q#2"]


def test_travel_request_is_excused_only_under_gr_plus():
    r = analysis.gr_analysis(load_corpus("travel_request"))
    assert (r.gr_acyclic, r.gr_plus_acyclic, r.inconclusive) == (False, True, False)


def test_cycle_cap_is_inconclusive():
    r = analysis.gr_analysis(load_corpus("nondet_replace"), cycle_cap=0)
    assert r.inconclusive and not r.gr_plus_acyclic and "inconclusive" in r.note


def test_dot_exports():
    spec = load_corpus("nonwa")
    assert '"R,1" -> "Q,1" [label="*"]' in analysis.dependency_graph(spec).to_dot()
    assert analysis.dataflow_graph(spec).to_dot().startswith("digraph dataflow")


# -- weak acyclicity against transitive closure

RELS = ["A", "B", "C"]
effect = st.tuples(st.sampled_from(RELS), st.sampled_from(RELS), st.booleans())


def reaches(edges, src, dst):
    """Plain transitive closure by fixpoint (test oracle)."""
    seen, frontier = {src}, [src]
    while frontier:
        n = frontier.pop()
        for u, v in edges:
            if u == n and v not in seen:
                seen.add(v)
                frontier.append(v)
    return dst in seen


@settings(max_examples=80, deadline=None)
@given(st.lists(effect, min_size=1, max_size=5))
def test_weak_acyclicity_matches_closure(effects):
    body = "\n".join(f"    {s}(x) ~> {t}({'f(x)' if sp else 'x'});" for s, t, sp in effects)
    spec = parse(f"schema A/1, B/1, C/1;\nservices f/1;\ninit A(a);\nactions\n  go() {{\n{body}\n  }}\nprocess true |-> go;\n")
    plain = {((s, 1), (t, 1)) for s, t, _ in effects}
    want = not any(reaches(plain, (t, 1), (s, 1)) for s, t, sp in effects if sp)
    assert analysis.weak_acyclicity(spec).acyclic == want
