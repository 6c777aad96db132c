"""Build version-identification datasets from Discogs dumps."""

from .artist_graph import ArtistGraph
from .cliques import Clique, TrackOccurrence, Version, build_cliques, extract_occurrences
from .ingest import parse_artists, parse_releases
from .matcher import MatchDecision, VideoCandidate, dedupe_urls, match_version
from .metrics import EvalInstance, mean_average_precision, mean_rank_first_relevant
from .normalize import Normalizer, normalize_title_full, normalize_title_matching
from .splitter import make_splits

__version__ = "0.1.0"
