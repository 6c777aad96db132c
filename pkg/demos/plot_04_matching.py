"""
Matching versions to videos
===========================

Captured search results go through a category gate, an officiality gate, a
duration gate and three title levels. Every decision carries a reason code.
"""

from vforge.artist_graph import ArtistGraph
from vforge.cliques import TrackOccurrence, Version
from vforge.ingest import ArtistRecord
from vforge.matcher import VideoCandidate, build_query, match_version

graph = ArtistGraph.from_records([ArtistRecord(1, "Alpha"), ArtistRecord(2, "Beta")])
occ = TrackOccurrence(1, "A1", "Song", "song", (1, 2), writer_ids=(9,), writer_ids_expanded=frozenset({9}))
version = Version("v1", (1, 2), [occ])
print(build_query(version, graph))

topic = dict(uploader="Alpha - Topic", channel_is_topic=True, categories=("Music",), duration_s=210)
candidates = [
    VideoCandidate("a", "Song", **topic),
    VideoCandidate("b", "Alpha - Song (Official Video)", **topic),
    VideoCandidate("c", "Beta, Alpha - Song", uploader="Label", description="Provided to YouTube by Label",
                   categories=("Music",), duration_s=200),
    VideoCandidate("d", "Song", **{**topic, "duration_s": 1500}),
    VideoCandidate("e", "Song (Live)", **topic),
]
accepted, decisions = match_version(version, candidates, graph)
for d in decisions:
    print(d.candidate_rank, d.video_id, d.reason)
print("accepted:", accepted)
