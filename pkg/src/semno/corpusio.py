"""Corpus ingestion: delimited-file loading and sentence segmentation.

The input is a delimited text file (RFC-4180 quoting, one header row) with a
category column and a free-text column. Each data row becomes one Document;
documents are split into sentences on terminal punctuation.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field

from semno.errors import ConfigError

log = logging.getLogger(__name__)

_WS = re.compile(r"\s+")

# A sentence is a maximal run of non-terminator text followed by a run of
# terminators; the terminator run must be followed by whitespace or EOT.
_SENTENCE = re.compile(r"[^.?!]*[.?!]+(?=\s|$)|[^.?!]+$")


def normalize_class_label(name: str) -> str:
    """Collapse whitespace runs in a raw category value to single hyphens."""
    label = _WS.sub("-", name.strip())
    if not label:
        raise ValueError("class label is empty after normalization")
    return label


@dataclass(frozen=True)
class RawSentence:
    doc_id: str
    index: int
    text: str


@dataclass
class Document:
    id: str
    label: str
    raw_text: str
    sentences: list[RawSentence] = field(default_factory=list)


@dataclass
class Corpus:
    documents: list[Document]
    skipped_rows: int = 0

    @property
    def labels(self) -> list[str]:
        """Distinct class labels in first-seen order."""
        seen: dict[str, None] = {}
        for doc in self.documents:
            seen.setdefault(doc.label, None)
        return list(seen)

    def __len__(self) -> int:
        return len(self.documents)


def split_sentences(doc: Document) -> list[RawSentence]:
    """Segment a document's raw text on `.?!` runs followed by whitespace.

    Deterministic and rule-based; abbreviation false-splits are an accepted
    limitation. Text with no terminator yields a single sentence.
    """
    sentences = []
    for match in _SENTENCE.finditer(doc.raw_text):
        text = match.group().strip()
        if text:
            sentences.append(RawSentence(doc.id, len(sentences), text))
    return sentences


def load_corpus(
    path: str,
    class_col: str,
    text_col: str,
    delimiter: str = ",",
) -> Corpus:
    """Read a delimited corpus file into Documents, one per data row.

    Row order is preserved; class labels are normalized (whitespace to `-`);
    rows with empty text are skipped and counted. Raises ConfigError when the
    file or a required column is missing.
    """
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open corpus file {path!r}: {exc}") from exc
    documents: list[Document] = []
    skipped = 0
    with handle:
        reader = csv.DictReader(handle, delimiter=delimiter)
        header = reader.fieldnames or []
        for col in (class_col, text_col):
            if col not in header:
                raise ConfigError(
                    f"column {col!r} not found in corpus header {header!r}"
                )
        for row_num, row in enumerate(reader):
            raw_label = row.get(class_col) or ""
            raw_text = (row.get(text_col) or "").strip()
            if not raw_text:
                skipped += 1
                continue
            try:
                label = normalize_class_label(raw_label)
            except ValueError:
                log.warning("row %d: empty class label, row skipped", row_num)
                skipped += 1
                continue
            doc = Document(id=f"d{row_num}", label=label, raw_text=raw_text)
            doc.sentences = split_sentences(doc)
            documents.append(doc)
    return Corpus(documents=documents, skipped_rows=skipped)


def persist_artifact(artifact, path: str, header=None) -> None:
    """Write any pipeline artifact in its documented format.

    Dispatches on the artifact's type (for homogeneous lists, on the element
    type; empty lists are ambiguous and need the explicit per-type writer).
    """
    from semno import artifacts as art
    from semno.embed import EmbeddingModel
    from semno.evaluate import Annotation, SampleManifest, ScoreReport
    from semno.filtering import ClassSummary, NoiseVerdict
    from semno.infuse import InfusedSentence
    from semno.cleanse import CleanSentence
    from semno.semgraph import Community, SemanticGraph

    if isinstance(artifact, Corpus):
        art.write_corpus(artifact, path, header)
    elif isinstance(artifact, EmbeddingModel):
        art.write_model(artifact, path, header)
    elif isinstance(artifact, SemanticGraph):
        art.write_graph(artifact, path, header)
    elif isinstance(artifact, SampleManifest):
        art.write_manifest(artifact, path, header)
    elif isinstance(artifact, ScoreReport):
        art.write_score_report(artifact, path, header)
    elif isinstance(artifact, list) and artifact:
        first = artifact[0]
        if isinstance(first, CleanSentence):
            art.write_clean_corpus(artifact, path, header)
        elif isinstance(first, InfusedSentence):
            art.write_infused_corpus(artifact, path, header)
        elif isinstance(first, Community):
            art.write_communities(artifact, path, header)
        elif isinstance(first, NoiseVerdict):
            art.write_verdicts(artifact, path, header)
        elif isinstance(first, ClassSummary):
            art.write_summary(artifact, path, header)
        elif isinstance(first, Annotation):
            art.write_annotations(artifact, path, header)
        else:
            raise TypeError(f"no writer for list of {type(first).__name__}")
    else:
        raise TypeError(f"no writer for artifact type {type(artifact).__name__}")


def load_artifact(path: str):
    """Read any pipeline artifact; the header's stage tag picks the parser.

    Returns (artifact, header). Version or stage mismatches raise
    ArtifactError.
    """
    from semno import artifacts as art
    from semno.errors import ArtifactError

    header, _ = art.read_lines(path)
    readers = {
        "corpus": art.read_corpus,
        "cleanse": lambda p: art.read_clean_corpus(p, expect_stage="cleanse"),
        "filtered": lambda p: art.read_clean_corpus(p, expect_stage="filtered"),
        "infuse": art.read_infused_corpus,
        "embed": art.read_model,
        "graph": art.read_graph,
        "communities": art.read_communities,
        "filter": art.read_verdicts,
        "summary": art.read_summary,
        "manifest": art.read_manifest,
    }
    if header.stage == "annotations":
        return art.read_annotations(path), header
    reader = readers.get(header.stage)
    if reader is None:
        raise ArtifactError(f"{path}: no reader for stage {header.stage!r}")
    return reader(path)
