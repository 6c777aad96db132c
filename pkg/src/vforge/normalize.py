"""Track-title normalization.

Two modes share one preparation pass (Unicode compatibility folding,
lower-casing, Latin diacritic stripping, ``&`` -> ``and``):

* ``matching`` keeps punctuation and bracketed text, so that edit markers
  such as ``(Radio Edit)`` still distinguish uploads during video matching.
* ``full`` additionally deletes bracketed spans and punctuation. It is what
  clique building groups on.

Punctuation is defined by Unicode general category: every ``P*`` and ``S*``
character is punctuation. Dashes, connectors (``_``) and slashes become word
separators; everything else is deleted outright, so ``Don't`` -> ``dont``.

``full(x) == refine(matching(x))`` holds by construction, and both modes are
idempotent.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field

DEFAULT_ARTICLES: tuple[str, ...] = ("the", "a", "an")

# Latin letters that carry a stroke or ligature instead of a combining mark.
_LATIN_EXTRA = str.maketrans(
    {
        "ø": "o",
        "ł": "l",
        "đ": "d",
        "ħ": "h",
        "ŧ": "t",
        "ƀ": "b",
        "ɨ": "i",
        "ß": "ss",
        "æ": "ae",
        "œ": "oe",
        "þ": "th",
        "ð": "d",
        "ı": "i",
    }
)

_SEPARATOR_PUNCT = frozenset("/\\")
_DISCOGS_SUFFIX = re.compile(r"\s*\(\d+\)\s*$")


def _is_latin(ch: str) -> bool:
    return unicodedata.name(ch, "").startswith("LATIN")


def strip_latin_diacritics(text: str) -> str:
    """Remove combining marks that sit on a Latin base letter.

    Marks on other scripts (Greek, Devanagari, ...) are left alone. Marks with
    no letter or digit to attach to are dropped as well.
    """
    out = []
    keep_marks = False
    for ch in unicodedata.normalize("NFD", text):
        cat = unicodedata.category(ch)
        if cat[0] == "M":
            if not keep_marks:
                continue
        else:
            keep_marks = cat[0] in "LN" and not _is_latin(ch)
        out.append(ch)
    return unicodedata.normalize("NFC", "".join(out)).translate(_LATIN_EXTRA)


def _clean_controls(text: str) -> str:
    out = []
    for ch in text:
        cat = unicodedata.category(ch)
        if cat in ("Cc", "Zs", "Zl", "Zp"):
            out.append(" ")
        elif cat in ("Cf", "Co", "Cn", "Cs"):
            continue
        else:
            out.append(ch)
    return "".join(out)


def strip_discogs_suffix(name: str) -> str:
    """``"Prince (2)"`` -> ``"Prince"``; Discogs numbers homonymous artists."""
    return _DISCOGS_SUFFIX.sub("", name)


def collapse_whitespace(text: str) -> str:
    return " ".join(text.split())


def remove_bracketed(text: str, square: bool = True) -> str:
    """Delete parenthesized spans, nested or left open until the end.

    A stray closing bracket is kept; it is punctuation and goes later.
    """
    openers = "([" if square else "("
    closers = ")]" if square else ")"
    depth = 0
    out = []
    for ch in text:
        if ch in openers:
            if depth == 0:
                out.append(" ")
            depth += 1
        elif ch in closers and depth > 0:
            depth -= 1
        elif depth == 0:
            out.append(ch)
    return "".join(out)


def remove_punctuation(text: str) -> str:
    out = []
    for ch in text:
        cat = unicodedata.category(ch)
        if cat[0] in "PS":
            if cat in ("Pd", "Pc") or ch in _SEPARATOR_PUNCT:
                out.append(" ")
        else:
            out.append(ch)
    return "".join(out)


def strip_leading_articles(text: str, articles=DEFAULT_ARTICLES) -> str:
    """Drop leading articles followed by a space.

    Repeated until none is left so that the operation is idempotent
    (``"the the x"`` -> ``"x"``). A lone article is kept.
    """
    tokens = text.split(" ")
    while len(tokens) > 1 and tokens[0] in articles:
        tokens = tokens[1:]
    return " ".join(tokens)


@dataclass(frozen=True)
class Normalizer:
    """Configured title normalizer (``normalize.*`` config keys)."""

    articles: tuple[str, ...] = DEFAULT_ARTICLES
    strip_brackets: bool = True
    _articles: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        arts = frozenset(a.strip().lower() for a in self.articles if a.strip())
        object.__setattr__(self, "_articles", arts)

    def prepare(self, raw: str) -> str:
        text = unicodedata.normalize("NFKC", raw)
        text = strip_latin_diacritics(text.lower())
        text = unicodedata.normalize("NFKC", text)
        text = _clean_controls(text)
        return collapse_whitespace(text.replace("&", " and "))

    def matching(self, raw: str) -> str:
        text = strip_leading_articles(self.prepare(raw), self._articles)
        return collapse_whitespace(text)

    def refine(self, matched: str) -> str:
        """Turn a matching-mode title into a full-mode title."""
        text = remove_bracketed(matched, square=self.strip_brackets)
        text = collapse_whitespace(remove_punctuation(text))
        return strip_leading_articles(text, self._articles)

    def full(self, raw: str) -> str:
        return self.refine(self.matching(raw))

    def artist_name(self, raw: str) -> str:
        """Matching-mode form of an artist name, minus the ``(2)`` suffix
        Discogs uses to disambiguate homonyms."""
        return self.matching(strip_discogs_suffix(raw))


DEFAULT_NORMALIZER = Normalizer()


def normalize_title_full(raw: str) -> str:
    return DEFAULT_NORMALIZER.full(raw)


def normalize_title_matching(raw: str) -> str:
    return DEFAULT_NORMALIZER.matching(raw)
