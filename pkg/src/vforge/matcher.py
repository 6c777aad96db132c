"""Rule-based matching of versions to captured video search results.

Each candidate goes through the gates in order and the first failing gate
names the rejection:

1. ``not-music-category``: "Music" is not among the video categories.
2. ``not-official``: no provider marker in the description, not an
   auto-generated topic channel, and the uploader is not one of the version's
   artist names.
3. ``too-long``: longer than ``max_duration_s`` (1200 s by default).
4. Title matching, in matching-mode normalization, at three levels:

   a. the video title, or the part after ``"<artists> - "``, equals the track
      title and one performer name shows up in the uploader, the artist field
      or that title prefix (``accepted-exact``);
   b. same, after decoration such as ``(Official Video)`` or ``- Remastered
      2011`` has been stripped (``accepted-stripped``);
   c. the title equals one of the ``"A1, A2 - title (featuring A3)"``
      renderings over all artist orders and name spellings
      (``accepted-permutation``).

   A title that matched while the artist check failed is an
   ``artist-mismatch``; anything else a ``title-mismatch``.

Live search is out of scope: candidates come from capture files.
"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .artist_graph import ArtistGraph
from .cliques import Clique, Version
from .normalize import DEFAULT_NORMALIZER, Normalizer, collapse_whitespace

logger = logging.getLogger(__name__)

ACCEPT = "accept"
REJECT = "reject"

NOT_MUSIC = "not-music-category"
NOT_OFFICIAL = "not-official"
TOO_LONG = "too-long"
TITLE_MISMATCH = "title-mismatch"
ARTIST_MISMATCH = "artist-mismatch"
ACCEPTED_EXACT = "accepted-exact"
ACCEPTED_STRIPPED = "accepted-stripped"
ACCEPTED_PERMUTATION = "accepted-permutation"
ACCEPT_REASONS = frozenset({ACCEPTED_EXACT, ACCEPTED_STRIPPED, ACCEPTED_PERMUTATION})

DEFAULT_OFFICIAL_MARKERS = ("Provided to YouTube by",)
DEFAULT_DECORATION_TOKENS = (
    "remaster",
    "remastered",
    "hd",
    "4k",
    "lyrics",
    "lyric video",
    "official video",
    "audio",
    "visualizer",
    "official audio",
    "official music video",
    "official lyric video",
    "music video",
)
MAX_DURATION_S = 1200
MAX_PERMUTATIONS = 5000
TITLE_LEVELS = ("exact", "stripped", "permutation")

_DASHES = re.compile(r"\s+[–—]\s+")
_SEGMENT_SEP = re.compile(r"\s+(?:-|\|)\s+")
_BRACKET_SPAN = re.compile(r"[(\[]([^()\[\]]*)[)\]]")
_TOKEN_SEP = re.compile(r"[\s\-/|,:+]+")
_NAME_SEP = re.compile(r",\s*|\s+(?:&|and|x|feat\.?|ft\.?|featuring|with)\s+")
_YEAR = re.compile(r"\d{4}")


@dataclass(frozen=True)
class VideoCandidate:
    video_id: str
    title: str
    uploader: str = ""
    channel_is_topic: bool = False
    description: str = ""
    duration_s: int = 0
    categories: tuple[str, ...] = ()
    artist_field: str | None = None

    def __post_init__(self):
        if not self.video_id:
            raise ValueError("video_id must be non-empty")
        if self.duration_s < 0:
            raise ValueError("duration_s must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "VideoCandidate":
        return cls(
            video_id=str(d["video_id"]),
            title=str(d.get("title") or ""),
            uploader=str(d.get("uploader") or ""),
            channel_is_topic=bool(d.get("channel_is_topic", False)),
            description=str(d.get("description") or ""),
            duration_s=int(d.get("duration_s") or 0),
            categories=tuple(d.get("categories") or ([d["category"]] if d.get("category") else ())),
            artist_field=d.get("artist_field"),
        )

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "title": self.title,
            "uploader": self.uploader,
            "channel_is_topic": self.channel_is_topic,
            "description": self.description,
            "duration_s": self.duration_s,
            "categories": list(self.categories),
            "artist_field": self.artist_field,
        }


@dataclass(frozen=True)
class MatchDecision:
    video_id: str
    verdict: str
    reason: str
    candidate_rank: int

    def __post_init__(self):
        if (self.verdict == ACCEPT) != (self.reason in ACCEPT_REASONS):
            raise ValueError(f"verdict {self.verdict!r} inconsistent with reason {self.reason!r}")

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "verdict": self.verdict,
            "reason": self.reason,
            "candidate_rank": self.candidate_rank,
        }


@dataclass(frozen=True)
class MatchConfig:
    official_markers: tuple[str, ...] = DEFAULT_OFFICIAL_MARKERS
    decoration_tokens: tuple[str, ...] = DEFAULT_DECORATION_TOKENS
    max_duration_s: int = MAX_DURATION_S
    normalizer: Normalizer = field(default=DEFAULT_NORMALIZER)


# -- string helpers ---------------------------------------------------------


def _canon(text: str) -> str:
    return collapse_whitespace(_DASHES.sub(" - ", text))


def _is_decoration(text: str, phrases: Sequence[tuple[str, ...]]) -> bool:
    """True when ``text`` is made only of decoration phrases (and years)."""
    tokens = [t for t in _TOKEN_SEP.split(text) if t]
    if not tokens:
        return False
    i, hit = 0, False
    while i < len(tokens):
        for phrase in phrases:
            if tuple(tokens[i:i + len(phrase)]) == phrase:
                i += len(phrase)
                hit = True
                break
        else:
            if _YEAR.fullmatch(tokens[i]):
                i += 1
                continue
            return False
    return hit


def _phrases(tokens: Iterable[str], normalizer: Normalizer) -> list[tuple[str, ...]]:
    out = {tuple(normalizer.prepare(t).split()) for t in tokens}
    out.discard(())
    return sorted(out, key=len, reverse=True)


def strip_decorations(title: str, config: MatchConfig | None = None) -> str:
    """Remove decoration from a matching-normalized video title."""
    config = config or MatchConfig()
    phrases = _phrases(config.decoration_tokens, config.normalizer)
    text = _canon(title)
    prev = None
    while prev != text:
        prev = text
        text = _BRACKET_SPAN.sub(
            lambda m: " " if _is_decoration(m.group(1), phrases) else m.group(0), text
        )
        text = collapse_whitespace(text)
        parts = _SEGMENT_SEP.split(text)
        if len(parts) > 1 and _is_decoration(parts[-1], phrases):
            cut = list(_SEGMENT_SEP.finditer(text))[-1].start()
            text = text[:cut].rstrip()
    return text


def _split_prefix(title: str) -> tuple[str | None, str]:
    head, sep, tail = title.partition(" - ")
    if not sep:
        return None, title
    return head, tail


def _field_names(text: str | None) -> set[str]:
    if not text:
        return set()
    return {text, *(p.strip() for p in _NAME_SEP.split(text) if p.strip())}


def _uploader_form(uploader: str, normalizer: Normalizer) -> str:
    form = normalizer.artist_name(uploader)
    if form.endswith(" - topic"):
        form = form[: -len(" - topic")]
    return " ".join(t for t in form.split() if t != "official")


# -- gates ------------------------------------------------------------------


def is_official(
    candidate: VideoCandidate,
    artist_names: set[str],
    markers: Sequence[str] = DEFAULT_OFFICIAL_MARKERS,
    normalizer: Normalizer | None = None,
) -> bool:
    """Officiality: provider marker, topic channel, or uploader is the artist."""
    desc = candidate.description.casefold()
    if any(m.casefold() in desc for m in markers if m):
        return True
    if candidate.channel_is_topic:
        return True
    return _uploader_form(candidate.uploader, normalizer or DEFAULT_NORMALIZER) in artist_names


def _artist_ok(candidate: VideoCandidate, performer_names: set[str], prefix: str | None,
               normalizer: Normalizer) -> bool:
    fields_ = set()
    fields_ |= _field_names(_uploader_form(candidate.uploader, normalizer))
    if candidate.artist_field:
        fields_ |= _field_names(normalizer.artist_name(candidate.artist_field))
    fields_ |= _field_names(prefix)
    return bool(performer_names & fields_)


@dataclass
class _VersionView:
    """Precomputed strings for one version."""

    title: str
    performer_forms: list[list[str]]
    featuring_forms: list[list[str]]
    performer_names: set[str]
    all_names: set[str]


def version_view(version: Version, graph: ArtistGraph, normalizer: Normalizer) -> _VersionView:
    def forms(aid):
        found = sorted(graph.name_forms(aid, normalizer))
        return found or [normalizer.artist_name(graph.display_name(aid))]

    performer_forms = [forms(a) for a in version.performer_ids]
    featuring_forms = [forms(a) for a in version.featuring_ids]
    performer_names = set(itertools.chain.from_iterable(performer_forms))
    return _VersionView(
        title=_canon(normalizer.matching(version.occurrences[0].raw_title)),
        performer_forms=performer_forms,
        featuring_forms=featuring_forms,
        performer_names=performer_names,
        all_names=performer_names | set(itertools.chain.from_iterable(featuring_forms)),
    )


def _title_check(candidate, video_titles, track_titles, view, normalizer) -> str | None:
    """``"ok"``, ``"artist"`` (title matched, artist did not) or None."""
    result = None
    for vt in video_titles:
        prefix, part = _split_prefix(vt)
        for tt in track_titles:
            if vt == tt and _artist_ok(candidate, view.performer_names, None, normalizer):
                return "ok"
            if part == tt and _artist_ok(candidate, view.performer_names, prefix, normalizer):
                return "ok"
            if vt == tt or part == tt:
                result = "artist"
    return result


def _renderings(view: _VersionView, limit: int = MAX_PERMUTATIONS):
    count = 0
    feat_options = [""]
    if view.featuring_forms:
        feat_options = [
            f" (featuring {', '.join(names)})"
            for order in itertools.permutations(view.featuring_forms)
            for names in itertools.product(*order)
        ]
    for order in itertools.permutations(view.performer_forms):
        for names in itertools.product(*order):
            head = f"{', '.join(names)} - {view.title}"
            for feat in feat_options:
                yield head + feat
                count += 1
                if count >= limit:
                    return


def title_check(candidate: VideoCandidate, view: _VersionView, config: MatchConfig, level: str) -> str | None:
    """Evaluate one title level on its own.

    Returns ``"ok"``, ``"artist"`` (a title matched but no performer was
    found) or None. Level ``"stripped"`` also tries the undecorated pairs, so
    anything accepted at ``"exact"`` is accepted there too.
    """
    norm = config.normalizer
    video = _canon(norm.matching(candidate.title))
    if level == "exact":
        return _title_check(candidate, [video], [view.title], view, norm)
    stripped = strip_decorations(video, config)
    if level == "stripped":
        track_stripped = strip_decorations(view.title, config)
        return _title_check(candidate, [video, stripped], [view.title, track_stripped], view, norm)
    if level == "permutation":
        targets = {video, stripped}
        return "ok" if any(r in targets for r in _renderings(view)) else None
    raise ValueError(f"unknown title level {level!r}")


def title_level(candidate: VideoCandidate, view: _VersionView, config: MatchConfig) -> tuple[str, str | None]:
    """First title level that accepts, with the best failure otherwise."""
    mismatch = None
    for level in TITLE_LEVELS:
        outcome = title_check(candidate, view, config, level)
        if outcome == "ok":
            return level, "ok"
        mismatch = mismatch or outcome
    return "none", mismatch


def _decide(candidate: VideoCandidate, view: _VersionView, config: MatchConfig) -> str:
    if "Music" not in candidate.categories:
        return NOT_MUSIC
    if not is_official(candidate, view.all_names, config.official_markers, config.normalizer):
        return NOT_OFFICIAL
    if candidate.duration_s > config.max_duration_s:
        return TOO_LONG
    level, outcome = title_level(candidate, view, config)
    if outcome == "ok":
        return {"exact": ACCEPTED_EXACT, "stripped": ACCEPTED_STRIPPED}.get(level, ACCEPTED_PERMUTATION)
    return ARTIST_MISMATCH if outcome == "artist" else TITLE_MISMATCH


# -- public API -------------------------------------------------------------


def build_query(version: Version, graph: ArtistGraph) -> str:
    """``"A1, A2 - Title"`` plus ``" (featuring F1)"`` when there are guests."""
    performers = ", ".join(graph.display_name(a) for a in version.performer_ids)
    query = f"{performers} - {version.occurrences[0].raw_title}"
    if version.featuring_ids:
        query += " (featuring " + ", ".join(graph.display_name(a) for a in version.featuring_ids) + ")"
    return query


def match_version(
    version: Version,
    candidates: Sequence[VideoCandidate],
    graph: ArtistGraph,
    config: MatchConfig | None = None,
) -> tuple[list[str], list[MatchDecision]]:
    """Decide every candidate; return accepted video ids in rank order."""
    config = config or MatchConfig()
    if not candidates:
        return [], []
    view = version_view(version, graph, config.normalizer)
    accepted, decisions = [], []
    for rank, cand in enumerate(candidates, start=1):
        reason = _decide(cand, view, config)
        verdict = ACCEPT if reason in ACCEPT_REASONS else REJECT
        decisions.append(MatchDecision(cand.video_id, verdict, reason, rank))
        if verdict == ACCEPT and cand.video_id not in accepted:
            accepted.append(cand.video_id)
    return accepted, decisions


def dedupe_urls(cliques: Sequence[Clique], report: dict | None = None) -> list[Clique]:
    """Resolve video ids shared by several versions of one clique.

    The version with the most occurrences keeps the video (ties go to the
    smallest ``version_id``); the others lose it. Versions left without urls
    are dropped, then cliques with fewer than two versions.
    """
    report = report if report is not None else {}
    for key in ("urls_removed", "versions_dropped", "cliques_dropped"):
        report.setdefault(key, 0)
    out = []
    for clique in cliques:
        holders: dict[str, list[Version]] = {}
        for v in clique.versions:
            for url in dict.fromkeys(v.urls):
                holders.setdefault(url, []).append(v)
        losers: dict[str, set[str]] = {}
        for url, vs in holders.items():
            if len(vs) < 2:
                continue
            keeper = min(vs, key=lambda v: (-len(v.occurrences), v.version_id))
            for v in vs:
                if v is not keeper:
                    losers.setdefault(v.version_id, set()).add(url)
        versions = []
        for v in clique.versions:
            gone = losers.get(v.version_id, set())
            urls = [u for u in dict.fromkeys(v.urls) if u not in gone]
            report["urls_removed"] += len(gone)
            if not urls:
                report["versions_dropped"] += 1
                continue
            versions.append(Version(v.version_id, v.artist_key, list(v.occurrences), urls))
        if len(versions) < 2:
            report["cliques_dropped"] += 1
            report["versions_dropped"] += len(versions)
            continue
        out.append(Clique(clique.clique_id, clique.normalized_title, versions))
    return out
