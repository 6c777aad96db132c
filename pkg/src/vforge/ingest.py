"""Streaming readers for artist and release dumps.

Two input formats are accepted, optionally gzip-compressed (detected from the
magic bytes, not the file name):

``xml``
    A subset of the public Discogs dump schema::

        <artists>
          <artist>
            <id>1</id><name>Alpha</name>
            <namevariations><name>Alfa</name></namevariations>
            <aliases><name id="7">Alpha Alias</name></aliases>
            <members><name id="2">Member</name></members>
            <groups><name id="9">Some Group</name></groups>
          </artist>
        </artists>

        <releases>
          <release id="10">
            <title>Album</title>
            <artists><artist><id>1</id><name>Alpha</name></artist></artists>
            <extraartists><artist><id>3</id><name>W</name>
              <role>Written-By</role></artist></extraartists>
            <genres><genre>Rock</genre></genres> <styles>...</styles>
            <labels><label name="Label"/></labels>
            <formats><format name="Vinyl"/></formats>
            <country>US</country> <released>1999-03-00</released>
            <master_id>55</master_id>
            <tracklist>
              <track><position>A1</position><title>Song</title>
                <artists>...</artists><extraartists>...</extraartists>
              </track>
            </tracklist>
          </release>
        </releases>

    Credit roles are comma-separated lists (``"Written-By, Producer"``); a
    credit counts as a writer when one list item is exactly ``Written-By`` and
    as featuring when one item is exactly ``Featuring``.

``jsonl``
    One record object per line, with the field names of :class:`ArtistRecord`
    and :class:`ReleaseRecord`. This is also the canonical interchange form
    written by :func:`write_jsonl`.

Parsing is a single pass with memory bounded by the largest record. Records
that violate a field invariant are skipped and tallied in a
:class:`ParseStats`; structural corruption of the document raises
:class:`DumpParseError`.
"""

from __future__ import annotations

import gzip
import io
import json
import logging
import os
import re
from collections import Counter, deque
from dataclasses import dataclass, field, fields
from typing import IO, Iterable, Iterator
from xml.etree.ElementTree import Element, TreeBuilder
from xml.parsers import expat

logger = logging.getLogger(__name__)

FORMATS = ("xml", "jsonl")
WRITTEN_BY = "Written-By"
FEATURING = "Featuring"
META_KEY = "_meta"

_CHUNK = 1 << 16


class DumpParseError(Exception):
    """The document itself is broken; parsing cannot continue."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class RecordError(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class ParseStats:
    records: int = 0
    rejects: Counter = field(default_factory=Counter)

    @property
    def rejected(self) -> int:
        return sum(self.rejects.values())

    def to_dict(self) -> dict:
        return {"records": self.records, "rejects": dict(sorted(self.rejects.items()))}


@dataclass
class ArtistRecord:
    artist_id: int
    name: str
    name_variations: list[str] = field(default_factory=list)
    alias_ids: list[int] = field(default_factory=list)
    member_ids: list[int] = field(default_factory=list)
    group_ids: list[int] = field(default_factory=list)

    def validate(self) -> None:
        _check_id(self.artist_id)
        for ref in (self.alias_ids, self.member_ids, self.group_ids):
            if self.artist_id in ref:
                raise RecordError("self-reference")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ArtistRecord":
        if d.get("artist_id") is None:
            raise RecordError("missing-id")
        return cls(
            artist_id=_as_id(d["artist_id"]),
            name=str(d.get("name") or ""),
            name_variations=[str(n) for n in d.get("name_variations") or []],
            alias_ids=_id_list(d.get("alias_ids")),
            member_ids=_id_list(d.get("member_ids")),
            group_ids=_id_list(d.get("group_ids")),
        )


@dataclass
class RawTrack:
    position: str
    title: str
    track_artist_ids: list[int] = field(default_factory=list)
    featuring_artist_ids: list[int] = field(default_factory=list)
    track_writer_ids: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "RawTrack":
        return cls(
            position=str(d.get("position") or ""),
            title=str(d.get("title") or ""),
            track_artist_ids=_id_list(d.get("track_artist_ids")),
            featuring_artist_ids=_id_list(d.get("featuring_artist_ids")),
            track_writer_ids=_id_list(d.get("track_writer_ids")),
        )


@dataclass
class ReleaseRecord:
    release_id: int
    title: str
    release_artist_credits: list[tuple[int, str]] = field(default_factory=list)
    release_writer_ids: list[int] = field(default_factory=list)
    tracks: list[RawTrack] = field(default_factory=list)
    genres: list[str] = field(default_factory=list)
    styles: list[str] = field(default_factory=list)
    year: int | None = None
    country: str | None = None
    label_names: list[str] = field(default_factory=list)
    formats: list[str] = field(default_factory=list)
    master_id: int | None = None

    @property
    def release_artist_ids(self) -> list[int]:
        return _dedupe([aid for aid, _ in self.release_artist_credits])

    def validate(self) -> None:
        _check_id(self.release_id)
        if not self.tracks:
            raise RecordError("empty-tracklist")
        positions = [t.position for t in self.tracks]
        if len(set(positions)) != len(positions):
            raise RecordError("duplicate-position")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["release_artist_credits"] = [list(c) for c in self.release_artist_credits]
        d["tracks"] = [t.to_dict() for t in self.tracks]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ReleaseRecord":
        if d.get("release_id") is None:
            raise RecordError("missing-id")
        tracks = [RawTrack.from_dict(t) for t in d.get("tracks") or []]
        return cls(
            release_id=_as_id(d["release_id"]),
            title=str(d.get("title") or ""),
            release_artist_credits=[
                (_as_id(aid), str(name or ""))
                for aid, name in d.get("release_artist_credits") or []
            ],
            release_writer_ids=_id_list(d.get("release_writer_ids")),
            tracks=_clean_tracks(tracks),
            genres=_clean_terms(d.get("genres")),
            styles=_clean_terms(d.get("styles")),
            year=None if d.get("year") is None else int(d["year"]),
            country=d.get("country") or None,
            label_names=[str(x) for x in d.get("label_names") or []],
            formats=[str(x) for x in d.get("formats") or []],
            master_id=None if d.get("master_id") is None else int(d["master_id"]),
        )


def _check_id(value) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise RecordError("bad-id")


def _as_id(value) -> int:
    if isinstance(value, bool):
        raise RecordError("bad-id")
    try:
        out = int(str(value).strip())
    except ValueError:
        raise RecordError("bad-id") from None
    if out <= 0:
        raise RecordError("bad-id")
    return out


def _dedupe(items: Iterable) -> list:
    return list(dict.fromkeys(items))


def _id_list(values) -> list[int]:
    return _dedupe(_as_id(v) for v in values or [])


def _clean_terms(values) -> list[str]:
    return _dedupe(s for s in (str(v).strip() for v in values or []) if s)


def _clean_tracks(tracks: list[RawTrack]) -> list[RawTrack]:
    # Headings and index tracks carry no title; blank positions get a
    # synthetic one so positions stay unique keys.
    out = []
    for i, t in enumerate(tracks, start=1):
        t.title = t.title.strip()
        if not t.title:
            continue
        t.position = t.position.strip() or f"#{i}"
        out.append(t)
    return out


# --------------------------------------------------------------------------
# input plumbing


def open_dump(source) -> IO[bytes]:
    """Open a path or binary stream, transparently gunzipping it."""
    if isinstance(source, (str, os.PathLike)):
        stream = open(source, "rb")
    else:
        stream = source
    if not hasattr(stream, "peek"):
        stream = io.BufferedReader(stream)
    if stream.peek(2)[:2] == b"\x1f\x8b":
        return gzip.GzipFile(fileobj=stream, mode="rb")
    return stream


def _split_roles(role: str) -> list[str]:
    return [r.strip() for r in re.split(r",(?![^\[]*\])", role or "")]


def _text(elem: Element | None) -> str:
    if elem is None or elem.text is None:
        return ""
    return elem.text.strip()


def _children_text(elem: Element | None, tag: str) -> list[str]:
    if elem is None:
        return []
    return [_text(c) for c in elem.findall(tag)]


def _ref_ids(elem: Element | None) -> list[int]:
    """Ids from ``<name id=..>`` children or bare ``<id>`` children."""
    if elem is None:
        return []
    ids = []
    for child in elem:
        if child.tag == "name" and child.get("id"):
            ids.append(_as_id(child.get("id")))
        elif child.tag == "id" and _text(child):
            ids.append(_as_id(_text(child)))
    return _dedupe(ids)


def _credits(elem: Element | None) -> list[tuple[int, str, list[str]]]:
    if elem is None:
        return []
    out = []
    for a in elem.findall("artist"):
        raw_id = _text(a.find("id"))
        if not raw_id:
            continue
        out.append((_as_id(raw_id), _text(a.find("name")), _split_roles(_text(a.find("role")))))
    return out


def _artist_from_xml(elem: Element) -> ArtistRecord:
    raw_id = _text(elem.find("id"))
    if not raw_id:
        raise RecordError("missing-id")
    return ArtistRecord(
        artist_id=_as_id(raw_id),
        name=_text(elem.find("name")),
        name_variations=_dedupe(n for n in _children_text(elem.find("namevariations"), "name") if n),
        alias_ids=_ref_ids(elem.find("aliases")),
        member_ids=_ref_ids(elem.find("members")),
        group_ids=_ref_ids(elem.find("groups")),
    )


def _release_from_xml(elem: Element) -> ReleaseRecord:
    raw_id = elem.get("id") or _text(elem.find("id"))
    if not raw_id:
        raise RecordError("missing-id")
    tracks = []
    for t in elem.findall("tracklist/track"):
        extra = _credits(t.find("extraartists"))
        tracks.append(
            RawTrack(
                position=_text(t.find("position")),
                title=_text(t.find("title")),
                track_artist_ids=_dedupe(aid for aid, _, _ in _credits(t.find("artists"))),
                featuring_artist_ids=_dedupe(aid for aid, _, roles in extra if FEATURING in roles),
                track_writer_ids=_dedupe(aid for aid, _, roles in extra if WRITTEN_BY in roles),
            )
        )
    released = _text(elem.find("released"))
    year = int(released[:4]) if re.match(r"\d{4}", released) and int(released[:4]) > 0 else None
    master = _text(elem.find("master_id"))
    labels = elem.find("labels")
    formats = elem.find("formats")
    return ReleaseRecord(
        release_id=_as_id(raw_id),
        title=_text(elem.find("title")),
        release_artist_credits=list(
            dict.fromkeys((aid, name) for aid, name, _ in _credits(elem.find("artists")))
        ),
        release_writer_ids=_dedupe(
            aid for aid, _, roles in _credits(elem.find("extraartists")) if WRITTEN_BY in roles
        ),
        tracks=_clean_tracks(tracks),
        genres=_clean_terms(_children_text(elem.find("genres"), "genre")),
        styles=_clean_terms(_children_text(elem.find("styles"), "style")),
        year=year,
        country=_text(elem.find("country")) or None,
        label_names=_dedupe(
            n for n in (l.get("name", "").strip() for l in (labels if labels is not None else [])) if n
        ),
        formats=[f.get("name", "").strip() for f in (formats if formats is not None else []) if f.get("name")],
        master_id=int(master) if master.isdigit() else None,
    )


def _iter_xml_elements(stream: IO[bytes], record_tag: str) -> Iterator[Element]:
    """Yield each depth-2 ``record_tag`` element as soon as it closes."""
    parser = expat.ParserCreate()
    parser.buffer_text = True
    done: deque[Element] = deque()
    state = {"depth": 0, "builder": None}

    def start(tag, attrs):
        state["depth"] += 1
        if state["depth"] == 2 and tag == record_tag:
            state["builder"] = TreeBuilder()
        if state["builder"] is not None:
            state["builder"].start(tag, attrs)

    def end(tag):
        builder = state["builder"]
        if builder is not None:
            builder.end(tag)
            if state["depth"] == 2:
                done.append(builder.close())
                state["builder"] = None
        state["depth"] -= 1

    def data(text):
        if state["builder"] is not None:
            state["builder"].data(text)

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = data

    while True:
        chunk = stream.read(_CHUNK)
        try:
            parser.Parse(chunk, not chunk)
        except expat.ExpatError as exc:
            raise DumpParseError(expat.ErrorString(exc.code), parser.ErrorByteIndex) from None
        while done:
            yield done.popleft()
        if not chunk:
            return


def _iter_jsonl_objects(stream: IO[bytes], stats: ParseStats) -> Iterator[dict]:
    offset = 0
    for raw in stream:
        start, offset = offset, offset + len(raw)
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            stats.rejects["malformed-json"] += 1
            logger.debug("malformed json line at byte %d", start)
            continue
        if not isinstance(obj, dict):
            stats.rejects["malformed-json"] += 1
            continue
        if META_KEY in obj:
            continue
        yield obj


def _parse(source, fmt, stats, from_xml, from_dict, record_tag):
    if fmt not in FORMATS:
        raise ValueError(f"unknown dump format {fmt!r}")
    stats = stats if stats is not None else ParseStats()
    seen: set[int] = set()
    stream = open_dump(source)
    owned = isinstance(source, (str, os.PathLike))
    try:
        yield from _convert_all(stream, fmt, stats, seen, from_xml, from_dict, record_tag)
    finally:
        if owned:
            stream.close()


def _convert_all(stream, fmt, stats, seen, from_xml, from_dict, record_tag):
    if fmt == "xml":
        items = _iter_xml_elements(stream, record_tag)
        convert = from_xml
    else:
        items = _iter_jsonl_objects(stream, stats)
        convert = from_dict
    for item in items:
        try:
            record = convert(item)
            record.validate()
        except RecordError as exc:
            stats.rejects[exc.reason] += 1
            continue
        except (TypeError, ValueError, AttributeError):
            stats.rejects["malformed-field"] += 1
            continue
        key = record.artist_id if record_tag == "artist" else record.release_id
        if key in seen:
            stats.rejects["duplicate-id"] += 1
            continue
        seen.add(key)
        stats.records += 1
        yield record


def parse_artists(source, format: str = "xml", stats: ParseStats | None = None) -> Iterator[ArtistRecord]:
    """Stream :class:`ArtistRecord` objects from a dump in file order.

    Reject reasons: ``missing-id``, ``bad-id``, ``self-reference``,
    ``duplicate-id``, ``malformed-field`` and, for JSONL, ``malformed-json``.
    """
    return _parse(source, format, stats, _artist_from_xml, ArtistRecord.from_dict, "artist")


def parse_releases(source, format: str = "xml", stats: ParseStats | None = None) -> Iterator[ReleaseRecord]:
    """Stream :class:`ReleaseRecord` objects from a dump in file order.

    Besides the artist reject reasons, a release can be rejected for
    ``empty-tracklist`` (no titled tracks) or ``duplicate-position``.
    """
    return _parse(source, format, stats, _release_from_xml, ReleaseRecord.from_dict, "release")


def detect_format(path) -> str:
    name = os.fspath(path)
    if name.endswith(".gz"):
        name = name[:-3]
    return "jsonl" if name.endswith((".jsonl", ".json")) else "xml"


def dumps_record(record) -> str:
    return json.dumps(record.to_dict(), ensure_ascii=False, separators=(",", ":"))


def write_jsonl(records: Iterable, path, meta: dict | None = None) -> int:
    """Write records (dataclasses with ``to_dict`` or plain dicts) as JSONL."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if meta is not None:
            fh.write(json.dumps({META_KEY: meta}, sort_keys=True) + "\n")
        for rec in records:
            if isinstance(rec, dict):
                fh.write(json.dumps(rec, ensure_ascii=False, separators=(",", ":")) + "\n")
            else:
                fh.write(dumps_record(rec) + "\n")
            n += 1
    return n


def read_jsonl(path) -> Iterator[dict]:
    """Plain JSONL reader for pipeline artifacts; skips the meta header."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if META_KEY in obj:
                continue
            yield obj
