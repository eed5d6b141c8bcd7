import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aliasgraph.diagram import (
    AliasDiagram,
    ExprUniverse,
    Label,
    format_name_path,
    parse_name_path,
)

A, B, C, D, F = (Label(x) for x in "abcdf")
V, W, X = (Label(x) for x in "vwx")


def reference_graph():
    """Three nodes under one root: a,d -> n1, c -> n2, b: n1 -> n2."""
    g = AliasDiagram()
    n0 = g.add_root()
    n1 = g.fresh_node()
    n2 = g.fresh_node()
    g.add_edge(A, n0, n1)
    g.add_edge(D, n0, n1)
    g.add_edge(C, n0, n2)
    g.add_edge(B, n1, n2)
    return g, n0, n1, n2


def sibling_graph():
    """Shares ids n0 and n2 with the reference graph: v,w -> n4, x: n4 -> n2."""
    g = AliasDiagram()
    g.ensure_node(0)
    g.roots = {0}
    g.ensure_node(2)
    n4 = g.include(4)
    g.add_edge(V, 0, n4)
    g.add_edge(W, 0, n4)
    g.add_edge(X, n4, 2)
    return g, n4


# -- the operation algebra, pinned ------------------------------------------


def test_link_adds_edge_from_each_root():
    g, n0, n1, n2 = reference_graph()
    g.link(F, {n1})
    assert g.edge_set() == frozenset(
        {(A, n0, n1), (D, n0, n1), (C, n0, n2), (B, n1, n2), (F, n0, n1)}
    )
    g.check_invariants()


def test_unlink_removes_only_root_sourced_edges():
    g, n0, n1, n2 = reference_graph()
    g.unlink(D)
    assert g.edge_set() == frozenset({(A, n0, n1), (C, n0, n2), (B, n1, n2)})
    # b is not root-sourced, so unlinking it is a no-op
    g.unlink(B)
    assert (B, n1, n2) in g.edge_set()


def test_unlink_many():
    g, n0, n1, n2 = reference_graph()
    g.unlink_many([C, D])
    assert g.edge_set() == frozenset({(A, n0, n1), (B, n1, n2)})


def test_relink_replaces_targets():
    g, n0, n1, n2 = reference_graph()
    g.relink(A, {n2})
    assert g.edge_set() == frozenset(
        {(A, n0, n2), (D, n0, n1), (C, n0, n2), (B, n1, n2)}
    )


def test_bulk_link_follows_stated_values():
    g, n0, n1, n2 = reference_graph()
    g.add_edge(B, n0, n2)  # make the path "b" denote {n2} from the root
    g.bulk_link([(C, (A,)), (D, (B,))])
    assert (C, n0, n1) in g.edge_set()
    assert (D, n0, n2) in g.edge_set()


def test_bulk_link_evaluates_against_incoming_diagram():
    # a swap: both paths are valued before either link lands
    g = AliasDiagram()
    n0 = g.add_root()
    n1 = g.fresh_node()
    n2 = g.fresh_node()
    g.add_edge(A, n0, n1)
    g.add_edge(B, n0, n2)
    g.bulk_link([(A, (B,)), (B, (A,))])
    assert g.successors(n0, A) == frozenset({n1, n2})
    assert g.successors(n0, B) == frozenset({n1, n2})


def test_bulk_link_values_per_root():
    g = AliasDiagram()
    r1 = g.add_root()
    r2 = g.add_root()
    n1 = g.fresh_node()
    n2 = g.fresh_node()
    g.add_edge(A, r1, n1)
    g.add_edge(A, r2, n2)
    g.bulk_link([(B, (A,))])
    assert g.successors(r1, B) == frozenset({n1})
    assert g.successors(r2, B) == frozenset({n2})


def test_reroot_swaps_root_set_and_keeps_edges():
    g, n0, n1, n2 = reference_graph()
    before = g.edge_set()
    old = g.reroot({n2})
    assert old == frozenset({n0})
    assert g.roots == {n2}
    assert g.edge_set() == before


def test_reroot_refuses_empty():
    g, *_ = reference_graph()
    with pytest.raises(AssertionError):
        g.reroot(set())


def test_include_adds_isolated_node():
    g, n0, n1, n2 = reference_graph()
    before = g.edge_set()
    n = g.include()
    assert n not in {n0, n1, n2}
    assert g.edge_set() == before
    assert not list(g.out_edges(n))


def test_union_merges_componentwise_on_shared_ids():
    g, n0, n1, n2 = reference_graph()
    h, n4 = sibling_graph()
    g.union(h)
    assert g.edge_set() == frozenset(
        {
            (A, n0, n1),
            (D, n0, n1),
            (C, n0, n2),
            (B, n1, n2),
            (V, n0, n4),
            (W, n0, n4),
            (X, n4, n2),
        }
    )
    assert g.roots == {n0}
    g.check_invariants()


def test_clone_is_isomorphic_on_disjoint_ids():
    g, n0, n1, n2 = reference_graph()
    twin, mapping = g.clone()
    assert set(mapping) == {n0, n1, n2}
    assert not (set(mapping.values()) & {n0, n1, n2})
    assert g.isomorphic_to(twin)
    # the source counter moved past the twin's ids, so a later union is safe
    g.union(twin)
    g.check_invariants()
    fresh = g.fresh_node()
    assert fresh not in mapping.values()


def test_dot_distribute_adds_back_pointers_to_roots():
    g = AliasDiagram()
    n0 = g.add_root()
    n1 = g.fresh_node()
    n2 = g.fresh_node()
    g.add_edge(A, n0, n1)
    g.add_edge(B, n0, n2)
    g.add_edge(D, n1, n1)
    back = Label("b", prime=1)
    added = g.dot_distribute((B,), back)
    assert added == [(back, n2, n0)]
    assert g.edge_set() == frozenset(
        {(A, n0, n1), (B, n0, n2), (D, n1, n1), (back, n2, n0)}
    )


# -- value semantics ----------------------------------------------------------


def test_value_set_follows_label_chains():
    g, n0, n1, n2 = reference_graph()
    assert g.value_set(()) == frozenset({n0})
    assert g.value_set((A,)) == frozenset({n1})
    assert g.value_set((A, B)) == frozenset({n2})
    assert g.value_set((B,)) == frozenset()
    assert g.value_set((A, B, C)) == frozenset()


def test_value_sets_by_root_keeps_worlds_apart():
    g = AliasDiagram()
    r1 = g.add_root()
    r2 = g.add_root()
    n1 = g.fresh_node()
    n2 = g.fresh_node()
    g.add_edge(A, r1, n1)
    g.add_edge(B, r2, n1)
    g.add_edge(B, r1, n2)
    per_root = g.value_sets_by_root((A,))
    assert per_root[r1] == frozenset({n1})
    assert per_root[r2] == frozenset()


def test_may_alias_needs_a_single_root_witness():
    # a and b meet only when their shared node is seen from one root
    g = AliasDiagram()
    r1 = g.add_root()
    r2 = g.add_root()
    n = g.fresh_node()
    g.add_edge(A, r1, n)
    g.add_edge(B, r2, n)
    assert not g.may_alias((A,), (B,))
    g.add_edge(B, r1, n)
    assert g.may_alias((A,), (B,))


def test_alias_set_over_program_expressions():
    g, n0, n1, n2 = reference_graph()
    universe = [(A,), (B,), (C,), (D,), (A, B), (D, B)]
    got = g.alias_set((C,), universe)
    assert got == [(C,), (A, B), (D, B)]


def test_empty_valued_path_aliases_nothing():
    g, *_ = reference_graph()
    assert g.alias_set((F,), [(F,), (A,)]) == []


# -- expression universe -------------------------------------------------------


def test_universe_is_prefix_closed():
    u = ExprUniverse()
    u.add(("a", "b", "c"))
    assert ("a",) in u
    assert ("a", "b") in u
    assert ("a", "b", "c") in u
    assert len(u) == 3


def test_universe_completions():
    u = ExprUniverse()
    for text in ("a", "b", "c", "d", "a.b", "d.b"):
        u.add(parse_name_path(text))
    assert u.completions(("d",)) == [("d", "b")]
    assert u.completions(("a", "b")) == []


def test_name_path_parsing_normalizes_current():
    assert parse_name_path("a.b") == ("a", "b")
    assert parse_name_path("Current") == ()
    assert parse_name_path("Current.a") == ("a",)
    assert format_name_path(()) == "Current"
    assert format_name_path(("a", "b")) == "a.b"


# -- canonical comparison --------------------------------------------------------


def test_canonical_form_ignores_node_ids():
    g, *_ = reference_graph()
    h = AliasDiagram()
    m0 = h.include(10)
    h.roots = {m0}
    m1 = h.include(11)
    m2 = h.include(12)
    h.add_edge(A, m0, m1)
    h.add_edge(D, m0, m1)
    h.add_edge(C, m0, m2)
    h.add_edge(B, m1, m2)
    assert g.isomorphic_to(h)


def test_canonical_form_sees_root_placement():
    g, n0, n1, n2 = reference_graph()
    h = g.snapshot()
    h.reroot({n1})
    assert not g.isomorphic_to(h, reachable_only=False)


def test_canonical_form_skips_orphans_by_default():
    g, *_ = reference_graph()
    h = g.snapshot()
    h.include()
    assert g.isomorphic_to(h)
    assert not g.isomorphic_to(h, reachable_only=False)


def test_canonical_form_separates_symmetric_targets():
    # two roots pointing at private nodes vs. at a shared one
    shared = AliasDiagram()
    r1, r2 = shared.add_root(), shared.add_root()
    n = shared.fresh_node()
    shared.add_edge(A, r1, n)
    shared.add_edge(A, r2, n)
    private = AliasDiagram()
    s1, s2 = private.add_root(), private.add_root()
    private.add_edge(A, s1, private.fresh_node())
    private.add_edge(A, s2, private.fresh_node())
    assert not shared.isomorphic_to(private)


# -- property tests ----------------------------------------------------------------


@st.composite
def diagrams(draw):
    g = AliasDiagram()
    ids = [g.fresh_node() for _ in range(draw(st.integers(2, 6)))]
    g.roots = {ids[0]}
    for extra in draw(st.lists(st.sampled_from(ids), max_size=2)):
        g.roots.add(extra)
    for name, s, t in draw(
        st.lists(
            st.tuples(
                st.sampled_from("abcxy"),
                st.sampled_from(ids),
                st.sampled_from(ids),
            ),
            max_size=12,
        )
    ):
        g.add_edge(Label(name), s, t)
    return g


@given(diagrams())
@settings(max_examples=60)
def test_clone_preserves_structure(g):
    twin, _ = g.clone()
    assert g.isomorphic_to(twin, reachable_only=False)
    assert not (twin.nodes & g.nodes)
    twin.check_invariants()


@given(diagrams(), diagrams())
@settings(max_examples=60)
def test_union_only_accumulates(g, h):
    before_edges = g.edge_set()
    before_roots = set(g.roots)
    g.union(h)
    assert before_edges <= g.edge_set()
    assert h.edge_set() <= g.edge_set()
    assert before_roots <= g.roots
    g.check_invariants()


@given(diagrams())
@settings(max_examples=60)
def test_union_cannot_lose_alias_pairs(g):
    h, _ = g.clone()
    paths = [(Label(n),) for n in "abcxy"]
    before = {(p, q) for p in paths for q in paths if g.may_alias(p, q)}
    g.union(h)
    after = {(p, q) for p in paths for q in paths if g.may_alias(p, q)}
    assert before <= after


@given(diagrams())
@settings(max_examples=60)
def test_snapshot_is_detached(g):
    snap = g.snapshot()
    assert snap.edge_set() == g.edge_set()
    assert snap.roots == g.roots
    n = snap.fresh_node()
    snap.add_edge(Label("zz"), next(iter(snap.roots)), n)
    assert snap.edge_set() != g.edge_set()
    assert n not in g.nodes
    g.check_invariants()
