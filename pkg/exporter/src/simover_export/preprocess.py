"""Text cleaning: lowercase, strip markup/URLs/punctuation/digits, drop stop
words, and reduce tokens to base forms with a small rule lemmatizer.

The stop-word list and the lemmatizer rules are versioned in-package so the
output header can record exactly which cleaning produced a file.
"""

from __future__ import annotations

import logging
import re

logger = logging.getLogger(__name__)

STOPWORDS_VERSION = "builtin-stopwords-v1"
LEMMATIZER_VERSION = "rule-lemmatizer-v1"

STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are aren as at be
    because been before being below between both but by can cannot could
    couldn did didn do does doesn doing don down during each few for from
    further had hadn has hasn have haven having he her here hers herself him
    himself his how i if in into is isn it its itself just ll me mightn more
    most mustn my myself no nor not now o of off on once only or other our
    ours ourselves out over own re s same shan she should shouldn so some such
    t than that the their theirs them themselves then there these they this
    those through to too under until up ve very was wasn we were weren what
    when where which while who whom why will with won would wouldn you your
    yours yourself yourselves
    """.split()
)

_IRREGULAR = {
    "children": "child",
    "feet": "foot",
    "geese": "goose",
    "men": "man",
    "mice": "mouse",
    "people": "person",
    "teeth": "tooth",
    "women": "woman",
}

_TAG_RE = re.compile(r"<[^>]+>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_NON_ALPHA_RE = re.compile(r"[^a-z\s]")
_VOWELS = set("aeiouy")


def _has_vowel(word: str) -> bool:
    return any(c in _VOWELS for c in word)


def _undouble(word: str) -> str:
    if len(word) >= 3 and word[-1] == word[-2] and word[-1] not in "lsz":
        return word[:-1]
    return word


def _strip_suffix_once(word: str) -> str:
    if word in _IRREGULAR:
        return _IRREGULAR[word]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(("sses", "xes", "ches", "shes", "zes")) and len(word) > 4:
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")) and len(word) > 3:
        return word[:-1]
    for suffix in ("ing", "ed"):
        if word.endswith(suffix) and len(word) > len(suffix) + 2:
            stem = word[: -len(suffix)]
            undoubled = _undouble(stem)
            if undoubled != stem:
                stem = undoubled
            elif stem[-1] in "scgzv" and not stem.endswith("ss"):
                # restore the silent e (disclos -> disclose, purg -> purge);
                # skipped after undoubling, where the short vowel rules it out
                stem += "e"
            if _has_vowel(stem):
                return stem
    return word


def lemmatize(word: str) -> str:
    """Base form: the suffix rules applied to a fixed point, so the result is
    idempotent by construction (every rule strictly shortens the word)."""
    previous = None
    while word != previous:
        previous, word = word, _strip_suffix_once(word)
    return word


def preprocess(text: str) -> str:
    """Cleaned token string, or "" when nothing survives cleaning."""
    if not text or not text.strip():
        raise ValueError("preprocess requires nonempty text")
    cleaned = _TAG_RE.sub(" ", text)
    cleaned = _URL_RE.sub(" ", cleaned)
    cleaned = cleaned.lower()
    cleaned = _NON_ALPHA_RE.sub(" ", cleaned)
    tokens = []
    for token in cleaned.split():
        if token in STOPWORDS:
            continue
        lemma = lemmatize(token)
        if lemma in STOPWORDS:  # keeps the pipeline idempotent on its output
            continue
        tokens.append(lemma)
    return " ".join(tokens)
