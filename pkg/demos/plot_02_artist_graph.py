"""
Expanding writer credits
========================

A writer credited under a pseudonym, or a band credited instead of its
members, should still count as the same writer. The artist graph expands
an id set through aliases and downward group membership.
"""

from vforge.artist_graph import ArtistGraph
from vforge.ingest import ArtistRecord

records = [
    ArtistRecord(1, "The Quartet", member_ids=[2, 3]),
    ArtistRecord(2, "Ann Lead", alias_ids=[4]),
    ArtistRecord(3, "Bo Bass"),
    ArtistRecord(4, "A. Lead (2)", name_variations=["Annie Lead"]),
]
graph = ArtistGraph.from_records(records)

print(sorted(graph.expand({1})))   # band -> members -> member's alias
print(sorted(graph.expand({2})))   # members never expand upward to the band
print(sorted(graph.name_forms(2)))
