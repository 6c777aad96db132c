import random

from hypothesis import given, settings, strategies as st

from vforge.artist_graph import (
    ArtistGraph,
    expand_writer_set,
    file_checksum,
    load_graph,
    name_forms,
    save_graph,
)
from vforge.ingest import ArtistRecord
from vforge.unionfind import UnionFind

from _helpers import artist, graph_of


def test_reflexive():
    g = graph_of(artist(1))
    assert expand_writer_set({1}, g) == {1}


def test_group_members_and_member_alias():
    # G(10) has members M1(1), M2(2); M1 aliases M1'(3)
    g = graph_of(artist(10, members=[1, 2]), artist(1, aliases=[3]), artist(2), artist(3))
    assert expand_writer_set({10}, g) == {10, 1, 2, 3}
    assert expand_writer_set(expand_writer_set({10}, g), g) == expand_writer_set({10}, g)


def test_membership_is_not_followed_upward():
    g = graph_of(artist(10, members=[1]), artist(1, groups=[10]), artist(11, members=[1]))
    assert expand_writer_set({1}, g) == {1}
    assert expand_writer_set({11}, g) == {11, 1}


def test_membership_recorded_on_member_side_only():
    g = graph_of(artist(10), artist(1, groups=[10]))
    assert expand_writer_set({10}, g) == {10, 1}


def test_alias_transitive_and_symmetric():
    g = graph_of(artist(1, aliases=[2]), artist(2, aliases=[3]), artist(3))
    assert expand_writer_set({3}, g) == {1, 2, 3}
    assert expand_writer_set({1}, g) == {1, 2, 3}


def test_dangling_references_tolerated():
    g = graph_of(artist(1, aliases=[99], members=[98]))
    assert expand_writer_set({1}, g) == {1, 99, 98}
    assert ("alias", 1, 99) in g.dangling and ("member", 1, 98) in g.dangling
    before = g.lookups["dangling"]
    assert expand_writer_set({555}, g) == {555}
    assert g.lookups["dangling"] == before + 1


def test_name_forms():
    g = graph_of(artist(1, "Prince", variations=["Prince Rogers Nelson"]))
    assert name_forms(1, g) == {"prince", "prince rogers nelson"}
    g = graph_of(artist(2, "Solo Act (3)"))
    assert name_forms(2, g) == {"solo act"}
    g = graph_of(artist(5, "X Name", aliases=[6]), artist(6, "Y Name", variations=["Why"]))
    assert name_forms(5, g) >= {"y name", "why"}
    assert name_forms(404, g) == set()


def test_variations_never_expand_ids():
    g = graph_of(artist(1, "Alpha", variations=["Beta"]), artist(2, "Beta"))
    assert expand_writer_set({1}, g) == {1}


# -- properties --------------------------------------------------------------


@st.composite
def graphs(draw, max_nodes=30):
    n = draw(st.integers(1, max_nodes))
    ids = list(range(1, n + 1))
    recs = []
    for i in ids:
        others = [j for j in ids if j != i] + [n + 5]
        pick = st.lists(st.sampled_from(others), max_size=3, unique=True) if others else st.just([])
        recs.append(ArtistRecord(i, f"A{i}", [], draw(pick), draw(pick), draw(pick)))
    return recs


@settings(max_examples=150, deadline=None)
@given(graphs(), st.data())
def test_monotone_and_idempotent(recs, data):
    g = ArtistGraph.from_records(recs)
    ids = [r.artist_id for r in recs]
    t = set(data.draw(st.lists(st.sampled_from(ids), max_size=6)))
    s = set(data.draw(st.sets(st.sampled_from(sorted(t)))) if t else set())
    assert s <= t
    assert g.expand(s) <= g.expand(t)
    assert g.expand(g.expand(t)) == g.expand(t)
    assert t <= g.expand(t)


def _brute_alias_components(recs):
    adj = {}
    for r in recs:
        for a in r.alias_ids:
            adj.setdefault(r.artist_id, set()).add(a)
            adj.setdefault(a, set()).add(r.artist_id)
    comps = {}
    for start in adj:
        seen, stack = {start}, [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        comps[start] = frozenset(seen)
    return comps


def test_alias_components_match_brute_force():
    rng = random.Random(3)
    for _ in range(20):
        n = rng.randint(50, 1000)
        recs = [ArtistRecord(i, f"A{i}") for i in range(1, n + 1)]
        for _ in range(rng.randint(0, n)):
            a, b = rng.sample(range(1, n + 1), 2)
            recs[a - 1].alias_ids.append(b)
        g = ArtistGraph.from_records(recs)
        brute = _brute_alias_components(recs)
        for aid in range(1, n + 1):
            assert g.alias_component(aid) == brute.get(aid, frozenset({aid}))
        uf = UnionFind(range(1, n + 1))
        for r in recs:
            for a in r.alias_ids:
                uf.union(r.artist_id, a)
        assert sorted(map(sorted, uf.groups())) == sorted(
            map(sorted, {brute.get(a, frozenset({a})) for a in range(1, n + 1)}))


@settings(max_examples=60, deadline=None)
@given(graphs(), st.randoms(use_true_random=False))
def test_order_independent(recs, rnd):
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    a, b = ArtistGraph.from_records(recs), ArtistGraph.from_records(shuffled)
    assert a == b
    for r in recs:
        assert a.expand({r.artist_id}) == b.expand({r.artist_id})


def test_cache_roundtrip(tmp_path):
    dump = tmp_path / "artists.jsonl"
    dump.write_text("x")
    g = graph_of(artist(1, aliases=[2]), artist(2))
    path = tmp_path / "g.pickle"
    save_graph(g, path, file_checksum(dump))
    loaded = load_graph(path, file_checksum(dump))
    assert loaded == g and loaded.expand({1}) == {1, 2}
    assert load_graph(path, "other") is None
    assert load_graph(tmp_path / "missing", "x") is None
