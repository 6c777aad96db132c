"""
From releases to cliques
========================

Tracks with the same normalized title whose expanded writers overlap are
versions of one work. Occurrences by the same performers form one version.
"""

from collections import Counter

from vforge.artist_graph import ArtistGraph
from vforge.cliques import build_cliques, extract_occurrences
from vforge.ingest import ArtistRecord, RawTrack, ReleaseRecord

graph = ArtistGraph.from_records([ArtistRecord(i, f"Artist {i}") for i in range(1, 8)]
                                 + [ArtistRecord(9, "Duo", member_ids=[5, 6])])


def release(rid, artist, title, writers):
    return ReleaseRecord(rid, f"LP {rid}", [(artist, f"Artist {artist}")], [],
                         [RawTrack("A1", title, [], [], writers)])


releases = [
    release(1, 1, "Blue Morning", [5]),
    release(2, 2, "Blue Morning (Radio Edit)", [9]),   # the duo includes writer 5
    release(3, 3, "The Blue Morning", [6]),
    release(4, 4, "Blue Morning", [7]),                # a homonym with unrelated writers
    release(5, 1, "Blue Morning [Live]", [5]),
]

drops = Counter()
occurrences = list(extract_occurrences(releases, graph))
for c in build_cliques(occurrences, drops=drops):
    print(c.clique_id, repr(c.normalized_title))
    for v in c.versions:
        print("   ", v.version_id, v.artist_key, [o.key for o in v.occurrences])
print("dropped:", dict(drops))
