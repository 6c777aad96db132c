import json
import random
import statistics

import pytest

from vforge.analytics import (
    EmptyDatasetError,
    artist_count,
    clique_size_stats,
    dataset_report,
    duration_histogram,
    genre_distribution,
    primary_durations,
    write_report,
)
from vforge.cliques import Version

from _helpers import clique, occ, version


def sized(sizes):
    return [clique(f"c{i}", *[version(f"c{i}v{j}", performers=[j + 1]) for j in range(n)])
            for i, n in enumerate(sizes)]


def test_size_stats_small():
    s = clique_size_stats(sized([2, 2, 3]))
    assert (s.count, s.versions, s.max, s.median) == (3, 7, 3, 2)
    assert s.mean == pytest.approx(7 / 3)
    one = clique_size_stats(sized([2]))
    assert one.max == one.mean == one.median == 2


def test_size_stats_empty():
    with pytest.raises(EmptyDatasetError):
        clique_size_stats([])


def test_size_stats_recount():
    rng = random.Random(2)
    for _ in range(50):
        sizes = [rng.randint(2, 40) for _ in range(rng.randint(1, 200))]
        s = clique_size_stats(sized(sizes))
        assert s.count == len(sizes) and s.versions == sum(sizes) and s.max == max(sizes)
        assert s.mean == sum(sizes) / len(sizes)
        assert s.median == statistics.median_low(sizes)


def test_genres_counted_once_per_version():
    v = Version("v", (1,), [occ(1, genres=["Rock"]), occ(2, genres=["Rock", "Jazz"])])
    assert dict(genre_distribution([v])) == {"Rock": 1, "Jazz": 1}
    assert genre_distribution([version("a")]) == []
    w = Version("w", (2,), [occ(3, genres=["Rock"])])
    assert dict(genre_distribution([v, w]))["Rock"] == 2


def test_duration_histogram():
    h = duration_histogram([100, 110, 260], 120)
    assert h.bins == {0: 2, 2: 1}
    assert duration_histogram([], 30).bins == {}
    h = duration_histogram([5, -1, None, 40], 30)
    assert h.total + h.skipped == 4


def test_primary_durations():
    matches = [{"version_id": "a", "accepted": ["x", "y"], "durations": {"x": 100, "y": 5}},
               {"version_id": "b", "accepted": [], "durations": {}},
               {"version_id": "c", "accepted": ["z"], "durations": {"z": 70}}]
    assert primary_durations(matches) == [100, 70]
    assert primary_durations(matches, keep={"c"}) == [70]


def test_artist_count():
    cs = [clique("c", version("a", performers=[1]), version("b", performers=[1, 2]), version("d", performers=[3]))]
    assert artist_count(cs) == 2
    assert artist_count([clique("c", version("a", performers=[7]))]) == 1


def test_report_files_are_reproducible(tmp_path):
    cs = sized([2, 5, 3])
    rep = dataset_report(cs, durations=[10, 200, 95], bin_width_s=60)
    a = [p.read_bytes() for p in write_report(rep, tmp_path / "a", "d", "h")]
    b = [p.read_bytes() for p in write_report(dataset_report(cs, [10, 200, 95], 60), tmp_path / "b", "d", "h")]
    assert a == b
    payload = json.loads((tmp_path / "a" / "d.json").read_text())
    assert payload["config_hash"] == "h" and payload["clique_sizes"]["versions"] == 10
    csv = (tmp_path / "a" / "d_durations.csv").read_text().splitlines()
    assert csv == ["start_s,end_s,versions", "0,60,1", "60,120,1", "180,240,1"]
