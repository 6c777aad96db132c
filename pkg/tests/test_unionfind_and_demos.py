import random
import runpy
from pathlib import Path

import pytest

from vforge.unionfind import UnionFind

DEMOS = sorted((Path(__file__).parents[1] / "demos").glob("plot_*.py"))


def test_unionfind_matches_naive_components():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(1, 40)
        edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, n))]
        uf = UnionFind(range(n))
        for a, b in edges:
            uf.union(a, b)
        label = list(range(n))
        changed = True
        while changed:
            changed = False
            for a, b in edges:
                lo = min(label[a], label[b])
                if label[a] != lo or label[b] != lo:
                    label[a] = label[b] = lo
                    changed = True
        naive = {}
        for i in range(n):
            naive.setdefault(label[i], []).append(i)
        assert sorted(map(sorted, uf.groups())) == sorted(naive.values())
        assert len(uf) == n


def test_unionfind_lazy_add():
    uf = UnionFind()
    assert "x" not in uf
    uf.union("x", "y")
    assert uf.find("x") == uf.find("y") and len(uf) == 2


@pytest.mark.parametrize("path", DEMOS, ids=lambda p: p.stem)
def test_demo_runs(path, capsys):
    runpy.run_path(str(path), run_name="__main__")
    assert capsys.readouterr().out
