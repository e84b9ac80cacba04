"""Basic text cleansing: tokenization, symbol stripping, stopword removal.

Tokens are lowercase `[a-z0-9]+` runs; every other character acts as a
separator (so `latch/striker` splits into two tokens). Digits are kept
because domain text relies on them (model years, part numbers). No stemming.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from semno.corpusio import RawSentence
from semno.errors import ConfigError

_NON_ALNUM = re.compile(r"[^a-z0-9]+")

# Pinned default list; language-level function words only, no domain terms.
_ENGLISH = (
    "a about above after again against ain all am an and any are aren as at "
    "be because been before being below between both but by can couldn d did "
    "didn do does doesn doing don down during each few for from further had "
    "hadn has hasn have haven having he her here hers herself him himself his "
    "how i if in into is isn it its itself just ll m ma me mightn more most "
    "mustn my myself needn no nor not now o of off on once only or other our "
    "ours ourselves out over own re s same shan she should shouldn so some "
    "such t than that the their theirs them themselves then there these they "
    "this those through to too under until up ve very was wasn we were weren "
    "what when where which while who whom why will with won wouldn y you your "
    "yours yourself yourselves"
).split()


@dataclass(frozen=True)
class StopwordList:
    language: str
    words: frozenset[str]

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.words

    @property
    def digest(self) -> str:
        """Stable hash of the word set, recorded in artifact headers."""
        joined = "\n".join(sorted(self.words)).encode("utf-8")
        return hashlib.sha256(joined).hexdigest()[:16]


@dataclass(frozen=True)
class CleanSentence:
    doc_id: str
    index: int
    label: str
    tokens: tuple[str, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.tokens)


def load_stopwords(source: str = "english") -> StopwordList:
    """Load a stopword list from a builtin tag or a one-word-per-line file.

    Words are lowercased and deduplicated; blank lines are ignored.
    """
    if source == "english":
        return StopwordList("english", frozenset(_ENGLISH))
    try:
        with open(source, encoding="utf-8") as handle:
            words = frozenset(
                line.strip().lower() for line in handle if line.strip()
            )
    except OSError as exc:
        raise ConfigError(
            f"stopword source {source!r} is neither a builtin tag nor a "
            f"readable file: {exc}"
        ) from exc
    return StopwordList(source, words)


def tokenize(text: str) -> list[str]:
    """Lowercase, replace non-alphanumerics with spaces, split."""
    return [t for t in _NON_ALNUM.split(text.lower()) if t]


def clean_sentence(sentence: RawSentence, label: str, stops: StopwordList) -> CleanSentence:
    """Tokenize one raw sentence and drop stopwords.

    The result may be empty; empty clean sentences stay in position and are
    classified as noise downstream (they contain no community terms).
    """
    tokens = tuple(t for t in tokenize(sentence.text) if t not in stops.words)
    return CleanSentence(sentence.doc_id, sentence.index, label, tokens)


def clean_corpus(corpus, stops: StopwordList) -> list[CleanSentence]:
    """Clean every sentence of every document, preserving order."""
    out = []
    for doc in corpus.documents:
        for raw in doc.sentences:
            out.append(clean_sentence(raw, doc.label, stops))
    return out
