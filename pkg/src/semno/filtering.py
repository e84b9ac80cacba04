"""Semantic-noise verdicts from community-encoded vectors.

Every sentence term is checked against every anchored community's concept
set; each hit increments that community's coordinate. A sentence whose
vector stays all-zero touches no anchored concept and is marked noise.
Filtering runs on the clean (un-infused) corpus and never consults the
sentence's own class label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from semno.cleanse import CleanSentence
from semno.semgraph import AnchoredCommunitySet


@dataclass(frozen=True)
class NoiseVerdict:
    doc_id: str
    index: int
    label: str
    is_noise: bool
    vector: tuple[int, ...]
    matched_terms: tuple[tuple[str, str], ...]   # (term, community path)


@dataclass
class ClassSummary:
    label: str
    sentences: int = 0
    noise: int = 0
    empty_documents: int = 0

    @property
    def noise_pct(self) -> float:
        return 100.0 * self.noise / self.sentences if self.sentences else 0.0


@dataclass
class FilterResult:
    verdicts: list[NoiseVerdict]
    kept: list[CleanSentence]
    summaries: list[ClassSummary] = field(default_factory=list)


def encode_sentence(
    sentence: CleanSentence, anchored: AnchoredCommunitySet
) -> tuple[int, ...]:
    """Count, per anchored community, how many sentence terms it contains."""
    if len(anchored) == 0:
        raise ValueError("anchored community set is empty")
    values = [0] * len(anchored)
    for term in sentence.tokens:
        for i, concepts in enumerate(anchored.concept_sets):
            if term in concepts:
                values[i] += 1
    return tuple(values)


def classify_sentence(vector: tuple[int, ...]) -> bool:
    """True (noise) iff the community-encoded vector has zero norm."""
    return all(v == 0 for v in vector)


def _matches(
    sentence: CleanSentence, anchored: AnchoredCommunitySet
) -> tuple[tuple[str, str], ...]:
    hits = []
    for term in sentence.tokens:
        for community, concepts in zip(anchored.communities, anchored.concept_sets):
            if term in concepts:
                hits.append((term, community.path_str))
    return tuple(hits)


def filter_corpus(
    sentences: list[CleanSentence], anchored: AnchoredCommunitySet
) -> FilterResult:
    """Verdict for every sentence plus the retained (non-noise) corpus.

    Documents whose sentences are all noise stay in the census as empty
    shells; they are counted per class in the summaries.
    """
    verdicts: list[NoiseVerdict] = []
    kept: list[CleanSentence] = []
    stats: dict[str, ClassSummary] = {}
    doc_kept: dict[str, int] = {}
    doc_label: dict[str, str] = {}
    for sentence in sentences:
        vector = encode_sentence(sentence, anchored)
        noise = classify_sentence(vector)
        verdicts.append(
            NoiseVerdict(
                doc_id=sentence.doc_id,
                index=sentence.index,
                label=sentence.label,
                is_noise=noise,
                vector=vector,
                matched_terms=_matches(sentence, anchored),
            )
        )
        summary = stats.setdefault(sentence.label, ClassSummary(sentence.label))
        summary.sentences += 1
        doc_label[sentence.doc_id] = sentence.label
        doc_kept.setdefault(sentence.doc_id, 0)
        if noise:
            summary.noise += 1
        else:
            kept.append(sentence)
            doc_kept[sentence.doc_id] += 1
    for doc_id, n_kept in doc_kept.items():
        if n_kept == 0:
            stats[doc_label[doc_id]].empty_documents += 1
    summaries = sorted(stats.values(), key=lambda s: s.label)
    return FilterResult(verdicts=verdicts, kept=kept, summaries=summaries)
