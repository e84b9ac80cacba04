"""Evaluation against annotations, annotation sampling, synthetic corpora.

Precision/recall/F1 are computed per class from the intersection of the
predicted-noise and annotated-noise sets, restricted to the annotated
sample. Zero denominators yield explicit undefined markers (None), never a
silent 0, so macro averages stay honest. The synthetic generator plants
noise sentences from a vocabulary disjoint from every topic vocabulary,
giving an exact ground truth for end-to-end runs.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field

from semno.corpusio import Document, RawSentence, Corpus
from semno.filtering import NoiseVerdict

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Annotation:
    doc_id: str
    index: int
    tag: int                          # 1 = noise, 0 = not noise

    def __post_init__(self) -> None:
        if self.tag not in (0, 1):
            raise ValueError(f"annotation tag must be 0 or 1, got {self.tag}")


@dataclass
class ClassReport:
    label: str
    annotated: int                    # |annotated sample| for the class
    predicted_noise: int              # |S_hat|
    annotated_noise: int              # |S|
    overlap: int                      # |S_hat & S|

    @property
    def precision(self) -> float | None:
        return self.overlap / self.predicted_noise if self.predicted_noise else None

    @property
    def recall(self) -> float | None:
        return self.overlap / self.annotated_noise if self.annotated_noise else None

    @property
    def f1(self) -> float | None:
        p, r = self.precision, self.recall
        if p is None or r is None or p + r == 0.0:
            return None
        return 2.0 * p * r / (p + r)


def _macro(values: list[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    return sum(defined) / len(defined) if defined else None


@dataclass
class ScoreReport:
    classes: list[ClassReport]

    @property
    def macro_precision(self) -> float | None:
        return _macro([c.precision for c in self.classes])

    @property
    def macro_recall(self) -> float | None:
        return _macro([c.recall for c in self.classes])

    @property
    def macro_f1(self) -> float | None:
        return _macro([c.f1 for c in self.classes])


def score(verdicts: list[NoiseVerdict], annotations: list[Annotation]) -> ScoreReport:
    """Per-class precision/recall/F1 of predicted noise vs annotated noise.

    Both sets are restricted to the annotated sentences. Annotations that
    reference unknown sentences are an error (all offenders listed).
    """
    by_key = {(v.doc_id, v.index): v for v in verdicts}
    unknown = [
        (a.doc_id, a.index) for a in annotations if (a.doc_id, a.index) not in by_key
    ]
    if unknown:
        shown = ", ".join(f"{d}:{i}" for d, i in unknown[:10])
        more = f" (+{len(unknown) - 10} more)" if len(unknown) > 10 else ""
        raise ValueError(f"annotations reference unknown sentences: {shown}{more}")
    per_class: dict[str, ClassReport] = {}
    for ann in annotations:
        verdict = by_key[(ann.doc_id, ann.index)]
        report = per_class.setdefault(
            verdict.label,
            ClassReport(verdict.label, 0, 0, 0, 0),
        )
        report.annotated += 1
        if verdict.is_noise:
            report.predicted_noise += 1
        if ann.tag == 1:
            report.annotated_noise += 1
        if verdict.is_noise and ann.tag == 1:
            report.overlap += 1
    return ScoreReport(classes=sorted(per_class.values(), key=lambda c: c.label))


@dataclass(frozen=True)
class SampleManifest:
    seed: int
    per_class: int
    distribution: str
    # label -> list of (within-class ordinal, doc_id, sentence index)
    picks: dict[str, list[tuple[int, str, int]]]


def sample_for_annotation(
    verdicts: list[NoiseVerdict], per_class: int = 100, seed: int = 0
) -> SampleManifest:
    """Pick sentences per class by a Gaussian over the within-class index.

    Draws land on round(N(mid, span/6)), clamped into range; duplicates are
    rejected until `per_class` unique picks exist. A class with at most
    `per_class` sentences is taken whole (warning when strictly fewer).
    """
    by_class: dict[str, list[NoiseVerdict]] = {}
    for v in verdicts:
        by_class.setdefault(v.label, []).append(v)
    picks: dict[str, list[tuple[int, str, int]]] = {}
    for label in sorted(by_class):
        group = by_class[label]
        n = len(group)
        if n <= per_class:
            if n < per_class:
                log.warning(
                    "class %s has only %d sentences (< %d); sampling all",
                    label, n, per_class,
                )
            chosen = list(range(n))
        else:
            key = f"{seed}:{label}".encode()
            sub = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")
            rng = random.Random(sub)
            mean = (n - 1) / 2.0
            std = max((n - 1) / 6.0, 1e-9)
            seen: set[int] = set()
            while len(seen) < per_class:
                i = round(rng.gauss(mean, std))
                seen.add(min(max(i, 0), n - 1))
            chosen = sorted(seen)
        picks[label] = [(i, group[i].doc_id, group[i].index) for i in chosen]
    return SampleManifest(
        seed=seed, per_class=per_class, distribution="gaussian(mid, span/6)",
        picks=picks,
    )


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 4
    topic_words: int = 50             # per class, pairwise disjoint
    noise_words: int = 100            # shared across classes
    sentences_per_class: int = 2000
    noise_ratio: float = 0.3
    length_range: tuple[int, int] = (6, 12)
    sentences_per_doc: int = 5
    seed: int = 0

    def validate(self) -> None:
        if min(
            self.classes, self.topic_words, self.noise_words,
            self.sentences_per_class, self.sentences_per_doc,
        ) < 1:
            raise ValueError("all synthetic sizes must be positive")
        if not 0.0 < self.noise_ratio < 1.0:
            raise ValueError("noise ratio must lie in (0, 1)")
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise ValueError("invalid sentence length range")


@dataclass
class SyntheticCorpus:
    corpus: Corpus
    truth: list[Annotation]           # 1 = planted noise
    topic_vocab: dict[str, list[str]]
    noise_vocab: list[str]


def generate_synthetic(spec: SyntheticSpec) -> SyntheticCorpus:
    """Labeled corpus with planted noise and exact ground-truth tags.

    Content sentences draw words from the class topic vocabulary; noise
    sentences draw from the shared noise vocabulary. The vocabularies are
    pairwise disjoint by construction (and verified). The noise count per
    class is exact: round(ratio * sentences_per_class).
    """
    spec.validate()
    rng = random.Random(spec.seed)
    labels = [f"class-{chr(ord('a') + i)}" for i in range(spec.classes)]
    topic_vocab = {
        label: [f"{label.replace('-', '')}w{j:03d}" for j in range(spec.topic_words)]
        for label in labels
    }
    noise_vocab = [f"noisew{j:03d}" for j in range(spec.noise_words)]
    all_topic = set().union(*topic_vocab.values())
    if len(all_topic) != spec.classes * spec.topic_words or all_topic & set(
        noise_vocab
    ):
        raise ValueError("vocabulary construction produced overlapping sets")
    documents: list[Document] = []
    truth: list[Annotation] = []
    lo, hi = spec.length_range
    doc_counter = 0
    for label in labels:
        n = spec.sentences_per_class
        n_noise = round(spec.noise_ratio * n)
        flags = [True] * n_noise + [False] * (n - n_noise)
        rng.shuffle(flags)
        sentences = []
        for is_noise in flags:
            length = rng.randint(lo, hi)
            pool = noise_vocab if is_noise else topic_vocab[label]
            sentences.append((rng.choices(pool, k=length), is_noise))
        for start in range(0, n, spec.sentences_per_doc):
            chunk = sentences[start : start + spec.sentences_per_doc]
            # matches the id load_corpus assigns to this row after CSV round-trip
            doc_id = f"d{doc_counter}"
            doc_counter += 1
            raw_text = " ".join(" ".join(words) + "." for words, _ in chunk)
            doc = Document(id=doc_id, label=label, raw_text=raw_text)
            doc.sentences = [
                RawSentence(doc_id, i, " ".join(words) + ".")
                for i, (words, _) in enumerate(chunk)
            ]
            documents.append(doc)
            for i, (_, is_noise) in enumerate(chunk):
                truth.append(Annotation(doc_id, i, 1 if is_noise else 0))
    return SyntheticCorpus(
        corpus=Corpus(documents=documents),
        truth=truth,
        topic_vocab=topic_vocab,
        noise_vocab=noise_vocab,
    )
