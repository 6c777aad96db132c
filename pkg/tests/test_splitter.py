import math
import random

import pytest

from vforge.splitter import ExternalRef, find_reserved, make_splits

from _helpers import artist, clique, graph_of, occ, version
from vforge.cliques import Clique, Version


def sized_cliques(sizes, prefix="c"):
    out = []
    for i, n in enumerate(sizes):
        vs = [version(f"{prefix}{i}-v{j}", performers=[j + 1]) for j in range(n)]
        out.append(clique(f"{prefix}{i:04d}", *vs))
    return out


def check_plan(plan, cliques, reserved=(), lo=2, hi=6):
    ids = {c.clique_id for c in cliques}
    assert set(plan.assignments) == ids
    test = set(plan.ids("test"))
    assert set(reserved) <= test
    sizes = {c.clique_id: c.size for c in cliques}
    for cid in test - set(reserved):
        assert lo <= sizes[cid] <= hi
    owner = {}
    for c in cliques:
        for v in c.versions:
            assert owner.setdefault(v.version_id, plan.assignments[c.clique_id]) == plan.assignments[c.clique_id]
    dev = len(plan.ids("train")) + len(plan.ids("validation"))
    assert abs(len(plan.ids("validation")) - 0.1 * dev) <= 1


def test_hundred_cliques():
    cs = sized_cliques([2 + i % 9 for i in range(100)])
    plan = make_splits(cs, seed=1)
    assert len(plan.ids("test")) == 10
    check_plan(plan, cs)


def test_all_reserved():
    cs = sized_cliques([2, 3, 4])
    plan = make_splits(cs, reserved={c.clique_id for c in cs})
    assert plan.counts() == {"train": 0, "validation": 0, "test": 3}
    assert any("empty" in w for w in plan.warnings)


def test_deterministic():
    cs = sized_cliques([random.Random(0).randint(2, 12) for _ in range(200)])
    a, b = make_splits(cs, seed=9), make_splits(list(reversed(cs)), seed=9)
    assert a.to_json() == b.to_json()
    assert make_splits(cs, seed=10).to_json() != a.to_json()


def test_unknown_reserved_rejected():
    with pytest.raises(KeyError):
        make_splits(sized_cliques([2, 2]), reserved={"nope"})


def test_pool_exhausted_warns():
    cs = sized_cliques([20] * 30)
    plan = make_splits(cs)
    assert plan.ids("test") == []
    assert any("exhausted" in w for w in plan.warnings)


@pytest.mark.parametrize("seed", range(100))
def test_random_sets(seed):
    rng = random.Random(seed)
    cs = sized_cliques([rng.choice([2, 2, 2, 3, 4, 5, 6, 7, 9, 30]) for _ in range(rng.randint(1, 300))])
    reserved = {c.clique_id for c in rng.sample(cs, rng.randint(0, max(0, len(cs) // 20)))}
    plan = make_splits(cs, reserved, seed=seed)
    check_plan(plan, cs, reserved)
    target = math.ceil(0.1 * len(cs))
    eligible = sum(1 for c in cs if 2 <= c.size <= 6 and c.clique_id not in reserved)
    assert len(plan.ids("test")) == max(len(reserved), min(target, len(reserved) + eligible))


def test_find_reserved():
    g = graph_of(artist(1, "Jo Writer", aliases=[2]), artist(2, "J. W."), artist(3, "Other"), artist(5))
    c1 = Clique("c1", "song", [Version("v1", (5,), [occ(1, title="song", writers=[1], expanded={1, 2})])])
    c2 = Clique("c2", "song", [Version("v2", (5,), [occ(2, title="song", writers=[3])])])
    assert find_reserved([c1, c2], [ExternalRef("The Song", ("J. W.",))], g) == {"c1"}
    assert find_reserved([c1, c2], [ExternalRef("Song", ("Nobody",))], g) == set()
    assert find_reserved([c1, c2], [], g) == set()
