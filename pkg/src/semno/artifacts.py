"""Line-oriented artifact formats shared by all pipeline stages.

Every artifact starts with a one-line header carrying the format version,
the producing stage, a lineage hash, and a parameter snapshot. The lineage
hash chains each stage's parameters with its upstream artifacts' hashes, so
stages can refuse inputs built under a different configuration. Writes are
atomic (temp file + rename); a crash never leaves a truncated artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from semno.cleanse import CleanSentence
from semno.corpusio import Corpus, Document, RawSentence
from semno.embed import EmbeddingModel, TrainConfig, Vocabulary
from semno.errors import ArtifactError
from semno.evaluate import Annotation, SampleManifest, ScoreReport
from semno.filtering import ClassSummary, FilterResult, NoiseVerdict
from semno.infuse import InfusedSentence, is_anchor
from semno.semgraph import Community, SemanticGraph

FORMAT_VERSION = 1
_MAGIC = "#semno"


@dataclass
class ArtifactHeader:
    stage: str
    lineage: str = "local"
    params: dict = field(default_factory=dict)      # lineage-relevant knobs
    data: dict = field(default_factory=dict)        # payload metadata, unhashed
    version: int = FORMAT_VERSION

    def with_data(self, **extra) -> "ArtifactHeader":
        """Copy with payload metadata merged in; never mutates the original."""
        merged = dict(self.data)
        for key, value in extra.items():
            merged.setdefault(key, value)
        return ArtifactHeader(
            stage=self.stage, lineage=self.lineage, params=dict(self.params),
            data=merged, version=self.version,
        )


def canonical_params(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"))


def compute_lineage(stage: str, params: dict) -> str:
    digest = hashlib.sha256(
        f"{stage}:{canonical_params(params)}".encode("utf-8")
    ).hexdigest()
    return digest[:16]


def _header_line(header: ArtifactHeader) -> str:
    return "\t".join(
        [
            _MAGIC,
            f"version={header.version}",
            f"stage={header.stage}",
            f"lineage={header.lineage}",
            f"params={canonical_params(header.params)}",
            f"data={canonical_params(header.data)}",
        ]
    )


def _parse_header(line: str, path: str) -> ArtifactHeader:
    parts = line.rstrip("\n").split("\t")
    if not parts or parts[0] != _MAGIC:
        raise ArtifactError(f"{path}: not a pipeline artifact (missing header)")
    fields: dict[str, str] = {}
    for part in parts[1:]:
        key, _, value = part.partition("=")
        fields[key] = value
    try:
        version = int(fields["version"])
    except (KeyError, ValueError):
        raise ArtifactError(f"{path}: malformed header version") from None
    if version != FORMAT_VERSION:
        raise ArtifactError(
            f"{path}: format version {version} != supported {FORMAT_VERSION}"
        )
    try:
        stage = fields["stage"]
        lineage = fields["lineage"]
        params = json.loads(fields.get("params", "{}"))
        data = json.loads(fields.get("data", "{}"))
    except (KeyError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: malformed header: {exc}") from None
    return ArtifactHeader(
        stage=stage, lineage=lineage, params=params, data=data, version=version
    )


def write_lines(path: str, header: ArtifactHeader, lines) -> None:
    """Atomic write: all lines go to a temp file which replaces `path`."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(_header_line(header) + "\n")
            for line in lines:
                handle.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(path: str) -> ArtifactHeader:
    """Parse just the header line; used for cheap lineage verification."""
    try:
        with open(path, encoding="utf-8") as handle:
            first = handle.readline()
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact {path!r}: {exc}") from exc
    return _parse_header(first, path)


def read_lines(path: str, expect_stage: str | None = None) -> tuple[ArtifactHeader, list[str]]:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = handle.read().split("\n")
    except OSError as exc:
        raise ArtifactError(f"cannot read artifact {path!r}: {exc}") from exc
    if not raw:
        raise ArtifactError(f"{path}: empty file")
    header = _parse_header(raw[0], path)
    if expect_stage is not None and header.stage != expect_stage:
        raise ArtifactError(
            f"{path}: expected a {expect_stage!r} artifact, found {header.stage!r}"
        )
    lines = raw[1:]
    if lines and lines[-1] == "":
        lines.pop()
    return header, lines


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}.get(nxt, nxt))
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


# ---------------------------------------------------------------- corpus

def write_corpus(corpus: Corpus, path: str, header: ArtifactHeader | None = None) -> None:
    header = (header or ArtifactHeader(stage="corpus")).with_data(
        skipped_rows=corpus.skipped_rows
    )

    def lines():
        for doc in corpus.documents:
            yield f"D\t{doc.id}\t{doc.label}\t{_escape(doc.raw_text)}"
            for s in doc.sentences:
                yield f"S\t{s.doc_id}\t{s.index}\t{_escape(s.text)}"

    write_lines(path, header, lines())


def read_corpus(path: str) -> tuple[Corpus, ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="corpus")
    documents: list[Document] = []
    current: Document | None = None
    for line in lines:
        kind, _, rest = line.partition("\t")
        if kind == "D":
            doc_id, label, raw = rest.split("\t", 2)
            current = Document(id=doc_id, label=label, raw_text=_unescape(raw))
            documents.append(current)
        elif kind == "S":
            doc_id, index, text = rest.split("\t", 2)
            if current is None or current.id != doc_id:
                raise ArtifactError(f"{path}: sentence line without its document")
            current.sentences.append(
                RawSentence(doc_id, int(index), _unescape(text))
            )
        else:
            raise ArtifactError(f"{path}: unknown corpus line kind {kind!r}")
    skipped = int(header.data.get("skipped_rows", 0))
    return Corpus(documents=documents, skipped_rows=skipped), header


# ------------------------------------------------- clean / infused corpus

def _sentence_line(doc_id: str, index: int, label: str, tokens) -> str:
    return f"{doc_id}\t{index}\t{label}\t{' '.join(tokens)}"


def write_clean_corpus(
    sentences: list[CleanSentence],
    path: str,
    header: ArtifactHeader | None = None,
    stage: str = "cleanse",
) -> None:
    header = header or ArtifactHeader(stage=stage)
    write_lines(
        path,
        header,
        (_sentence_line(s.doc_id, s.index, s.label, s.tokens) for s in sentences),
    )


def read_clean_corpus(
    path: str, expect_stage: str = "cleanse"
) -> tuple[list[CleanSentence], ArtifactHeader]:
    header, lines = read_lines(path, expect_stage=expect_stage)
    sentences = []
    for line in lines:
        doc_id, index, label, joined = line.split("\t", 3)
        tokens = tuple(joined.split()) if joined else ()
        sentences.append(CleanSentence(doc_id, int(index), label, tokens))
    return sentences, header


def write_infused_corpus(
    sentences: list[InfusedSentence], path: str, header: ArtifactHeader | None = None
) -> None:
    header = header or ArtifactHeader(stage="infuse")
    write_lines(
        path,
        header,
        (_sentence_line(s.doc_id, s.index, s.label, s.tokens) for s in sentences),
    )


def read_infused_corpus(path: str) -> tuple[list[InfusedSentence], ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="infuse")
    sentences = []
    for line in lines:
        doc_id, index, label, joined = line.split("\t", 3)
        tokens = tuple(joined.split()) if joined else ()
        # recover the drawn indices: an anchor at infused position p with j
        # anchors before it was drawn at clean-sentence index p - j
        positions = []
        for p, tok in enumerate(tokens):
            if is_anchor(tok):
                positions.append(p - len(positions))
        sentences.append(
            InfusedSentence(doc_id, int(index), label, tokens, tuple(positions))
        )
    return sentences, header


# ---------------------------------------------------------------- model

def write_model(
    model: EmbeddingModel, path: str, header: ArtifactHeader | None = None
) -> None:
    header = (header or ArtifactHeader(stage="embed")).with_data(
        config=dict(vars(model.config)),
        counts=[int(c) for c in model.vocab.counts],
        min_count=model.vocab.min_count,
        epoch_losses=[float(l) for l in model.epoch_losses],
    )

    def lines():
        yield f"{len(model.vocab)} {model.dim}"
        for word, row in zip(model.vocab.words, model.vectors):
            yield word + " " + " ".join(repr(v) for v in row.tolist())

    write_lines(path, header, lines())


def read_model(path: str) -> tuple[EmbeddingModel, ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="embed")
    if not lines:
        raise ArtifactError(f"{path}: missing model size line")
    try:
        size, dim = (int(x) for x in lines[0].split())
    except ValueError:
        raise ArtifactError(f"{path}: malformed model size line") from None
    if len(lines) - 1 != size:
        raise ArtifactError(f"{path}: expected {size} vector lines, got {len(lines) - 1}")
    words: list[str] = []
    vectors = np.empty((size, dim))
    for row, line in enumerate(lines[1:]):
        parts = line.split(" ")
        if len(parts) != dim + 1:
            raise ArtifactError(
                f"{path}: vector line {row} has {len(parts) - 1} values, expected {dim}"
            )
        words.append(parts[0])
        vectors[row] = [float(x) for x in parts[1:]]
    counts = np.array(header.data.get("counts", [0] * size), dtype=np.float64)
    min_count = int(header.data.get("min_count", 1))
    config_dict = header.data.get("config")
    config = TrainConfig(**config_dict) if config_dict else TrainConfig()
    vocab = Vocabulary(words=words, counts=counts, min_count=min_count)
    model = EmbeddingModel(
        vocab=vocab,
        vectors=vectors,
        config=config,
        epoch_losses=list(header.data.get("epoch_losses", [])),
    )
    return model, header


# ---------------------------------------------------------------- graph

def write_graph(
    graph: SemanticGraph, path: str, header: ArtifactHeader | None = None
) -> None:
    header = (header or ArtifactHeader(stage="graph")).with_data(
        nodes=list(graph.nodes)
    )

    def lines():
        yield f"{len(graph)} {graph.edge_count} {repr(graph.theta)}"
        for a, b, w in graph.edges():
            yield f"{graph.nodes[a]}\t{graph.nodes[b]}\t{repr(w)}"

    write_lines(path, header, lines())


def read_graph(path: str) -> tuple[SemanticGraph, ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="graph")
    if not lines:
        raise ArtifactError(f"{path}: missing graph size line")
    n_nodes, n_edges, theta_repr = lines[0].split()
    theta = None if theta_repr == "None" else float(theta_repr)
    nodes = [str(w) for w in header.data.get("nodes", [])]
    if len(nodes) != int(n_nodes):
        raise ArtifactError(f"{path}: node list does not match size line")
    index = {w: i for i, w in enumerate(nodes)}
    edges = []
    for line in lines[1:]:
        a, b, w = line.split("\t")
        edges.append((index[a], index[b], float(w)))
    if len(edges) != int(n_edges):
        raise ArtifactError(f"{path}: edge count does not match size line")
    return SemanticGraph.from_edges(nodes, edges, theta=theta), header


# ---------------------------------------------------------- communities

def write_communities(
    retained: list[Community], path: str, header: ArtifactHeader | None = None
) -> None:
    header = header or ArtifactHeader(stage="communities")

    def lines():
        for c in sorted(retained, key=lambda c: c.path):
            flag = 1 if c.anchors else 0
            members = ",".join(sorted(c.members))
            yield f"{c.path_str}\t{flag}\t{members}"

    write_lines(path, header, lines())


def read_communities(path: str) -> tuple[list[Community], ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="communities")
    retained = []
    for line in lines:
        path_str, flag, members = line.split("\t")
        community = Community(
            path=tuple(int(p) for p in path_str.split("-")),
            members=frozenset(members.split(",")) if members else frozenset(),
        )
        if bool(int(flag)) != bool(community.anchors):
            raise ArtifactError(
                f"{path}: anchored flag disagrees with members for {path_str}"
            )
        retained.append(community)
    return retained, header


# ------------------------------------------------------------- verdicts

def write_verdicts(
    verdicts: list[NoiseVerdict], path: str, header: ArtifactHeader | None = None
) -> None:
    header = header or ArtifactHeader(stage="filter")

    def lines():
        for v in verdicts:
            vec = ",".join(str(x) for x in v.vector)
            yield f"{v.doc_id}\t{v.index}\t{v.label}\t{int(v.is_noise)}\t{vec}"

    write_lines(path, header, lines())


def read_verdicts(path: str) -> tuple[list[NoiseVerdict], ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="filter")
    verdicts = []
    for line in lines:
        doc_id, index, label, is_noise, vec = line.split("\t")
        vector = tuple(int(x) for x in vec.split(",")) if vec else ()
        verdicts.append(
            NoiseVerdict(
                doc_id=doc_id,
                index=int(index),
                label=label,
                is_noise=bool(int(is_noise)),
                vector=vector,
                matched_terms=(),   # explainability detail, not persisted
            )
        )
    return verdicts, header


# -------------------------------------------------------------- summary

def write_summary(
    summaries: list[ClassSummary], path: str, header: ArtifactHeader | None = None
) -> None:
    header = (header or ArtifactHeader(stage="summary")).with_data(
        empty_documents={s.label: s.empty_documents for s in summaries}
    )

    def lines():
        yield "class,sentences,noise,noise_pct"
        for s in summaries:
            yield f"{s.label},{s.sentences},{s.noise},{s.noise_pct:.2f}"

    write_lines(path, header, lines())


def read_summary(path: str) -> tuple[list[ClassSummary], ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="summary")
    empty = header.data.get("empty_documents", {})
    summaries = []
    for line in lines[1:]:
        label, sentences, noise, _ = line.split(",")
        summaries.append(
            ClassSummary(
                label=label,
                sentences=int(sentences),
                noise=int(noise),
                empty_documents=int(empty.get(label, 0)),
            )
        )
    return summaries, header


# ---------------------------------------------------------- annotations

def write_annotations(
    annotations: list[Annotation], path: str, header: ArtifactHeader | None = None
) -> None:
    header = header or ArtifactHeader(stage="annotations")
    write_lines(
        path, header, (f"{a.doc_id}\t{a.index}\t{a.tag}" for a in annotations)
    )


def read_annotations(path: str) -> list[Annotation]:
    """Annotation files may come from outside the pipeline: the header is
    optional and lineage is not enforced."""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = [line.rstrip("\n") for line in handle]
    except OSError as exc:
        raise ArtifactError(f"cannot read annotations {path!r}: {exc}") from exc
    annotations = []
    for line in lines:
        if not line or line.startswith(_MAGIC):
            continue
        doc_id, index, tag = line.split("\t")
        annotations.append(Annotation(doc_id, int(index), int(tag)))
    return annotations


# ------------------------------------------------------------- manifest

def write_manifest(
    manifest: SampleManifest, path: str, header: ArtifactHeader | None = None
) -> None:
    header = (header or ArtifactHeader(stage="manifest")).with_data(
        seed=manifest.seed,
        per_class=manifest.per_class,
        distribution=manifest.distribution,
    )

    def lines():
        for label in sorted(manifest.picks):
            for ordinal, doc_id, index in manifest.picks[label]:
                yield f"{label}\t{ordinal}\t{doc_id}\t{index}"

    write_lines(path, header, lines())


def read_manifest(path: str) -> tuple[SampleManifest, ArtifactHeader]:
    header, lines = read_lines(path, expect_stage="manifest")
    picks: dict[str, list[tuple[int, str, int]]] = {}
    for line in lines:
        label, ordinal, doc_id, index = line.split("\t")
        picks.setdefault(label, []).append((int(ordinal), doc_id, int(index)))
    manifest = SampleManifest(
        seed=int(header.data.get("seed", 0)),
        per_class=int(header.data.get("per_class", 0)),
        distribution=str(header.data.get("distribution", "")),
        picks=picks,
    )
    return manifest, header


# -------------------------------------------------------------- reports

def _fmt_metric(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.4f}"


def write_score_report(
    report: ScoreReport, path: str, header: ArtifactHeader | None = None
) -> None:
    header = header or ArtifactHeader(stage="score")

    def lines():
        yield "class,annotated,predicted_noise,annotated_noise,overlap,precision,recall,f1"
        for c in report.classes:
            yield (
                f"{c.label},{c.annotated},{c.predicted_noise},{c.annotated_noise},"
                f"{c.overlap},{_fmt_metric(c.precision)},{_fmt_metric(c.recall)},"
                f"{_fmt_metric(c.f1)}"
            )
        yield (
            f"macro,,,,,{_fmt_metric(report.macro_precision)},"
            f"{_fmt_metric(report.macro_recall)},{_fmt_metric(report.macro_f1)}"
        )

    write_lines(path, header, lines())


def write_pip_curve(curve, path: str, header: ArtifactHeader | None = None) -> None:
    header = (header or ArtifactHeader(stage="pip")).with_data(
        alpha=curve.alpha,
        sigma=curve.sigma,
        n=curve.n,
        degenerate_pairs=curve.degenerate_pairs,
    )

    def lines():
        yield "k,bias,variance1,variance2,total"
        for i in range(len(curve.total)):
            yield (
                f"{i + 1},{curve.bias[i]:.8g},{curve.variance1[i]:.8g},"
                f"{curve.variance2[i]:.8g},{curve.total[i]:.8g}"
            )
        yield "k_star,loss_at_k_star"
        yield f"{curve.k_star},{curve.loss_at_k_star:.8g}"

    write_lines(path, header, lines())


def write_pip_report(report, path: str, header: ArtifactHeader | None = None) -> None:
    header = header or ArtifactHeader(stage="pip-report")

    def lines():
        yield (
            "alpha,k_star_basic,k_star_infused,delta_k,"
            "loss_basic,loss_infused,relative_change,sigma_basic,sigma_infused"
        )
        for e in report.entries:
            yield (
                f"{e.alpha},{e.basic.curve.k_star},{e.infused.curve.k_star},"
                f"{e.delta_k},{e.basic.curve.loss_at_k_star:.8g},"
                f"{e.infused.curve.loss_at_k_star:.8g},"
                f"{e.relative_loss_change:.6g},"
                f"{e.basic.noise.sigma:.8g},{e.infused.noise.sigma:.8g}"
            )

    write_lines(path, header, lines())
