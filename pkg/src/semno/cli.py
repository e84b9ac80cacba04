"""Command-line pipeline driver: one subcommand per stage plus run-all.

Stages read their upstream artifacts, verify lineage (refusing inputs built
under a different configuration unless --force), and write their outputs
atomically. Exit codes: 0 success, 2 configuration error, 3 missing or
mismatched artifact, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time

from semno import artifacts, plots
from semno.artifacts import ArtifactHeader, compute_lineage
from semno.cleanse import clean_corpus, load_stopwords
from semno.config import PipelineConfig, file_digest, load_config
from semno.corpusio import load_corpus
from semno.embed import TrainConfig, train
from semno.errors import ArtifactError, ConfigError, SemnoError
from semno.evaluate import SyntheticSpec, generate_synthetic, sample_for_annotation, score
from semno.filtering import filter_corpus
from semno.infuse import InfusionRng, infuse_corpus
from semno.pipdim import compare_corpora
from semno.semgraph import anchored_from_retained, build_graph, recursive_cluster

log = logging.getLogger("semno")

RUN_ALL = ("cleanse", "infuse", "embed", "graph", "filter")

# artifact tag -> (config path key, producing stage)
_ARTIFACTS = {
    "cleanse": ("cleansed_path", "cleanse"),
    "infuse": ("infused_path", "infuse"),
    "embed": ("model_path", "embed"),
    "graph": ("graph_path", "graph"),
    "communities": ("communities_path", "graph"),
    "filter": ("verdicts_path", "filter"),
}

# artifact tag -> upstream artifact tags entering its lineage hash
_UPSTREAMS = {
    "cleanse": (),
    "infuse": ("cleanse",),
    "embed": ("infuse",),
    "graph": ("embed",),
    "communities": ("embed",),
    "filter": ("cleanse", "communities"),
}


def _artifact_path(config: PipelineConfig, tag: str) -> str:
    key, _ = _ARTIFACTS[tag]
    return config.path(key)


def _stage_knobs(config: PipelineConfig, tag: str) -> dict:
    if tag == "cleanse":
        return {
            "input": file_digest(config.input),
            "class_col": config.class_col,
            "text_col": config.text_col,
            "delimiter": config.delimiter,
            "stopwords": config.stopwords,
            "stopwords_digest": load_stopwords(config.stopwords).digest,
        }
    if tag == "infuse":
        return {
            "master_seed": config.seed,
            "seed": config.stage_seed("infuse"),
        }
    if tag == "embed":
        return {
            "dim": config.dim,
            "window": config.window,
            "negatives": config.negatives,
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "subsample": config.subsample,
            "min_count": config.min_count,
            "seed": config.stage_seed("embed"),
        }
    if tag in ("graph", "communities"):
        return {
            "theta": config.theta,
            "max_depth": config.max_depth,
            "min_members": config.min_members,
            "q_gain_floor": config.q_gain_floor,
            "seed": config.stage_seed("graph"),
        }
    if tag == "filter":
        return {}
    raise ValueError(f"unknown artifact tag {tag!r}")


def _verify_artifact(config: PipelineConfig, tag: str, force: bool) -> str:
    """Return the artifact's lineage, verifying the whole chain upstream."""
    path = _artifact_path(config, tag)
    if not os.path.exists(path):
        _, producer = _ARTIFACTS[tag]
        raise ArtifactError(
            f"missing artifact {path!r}; run the {producer!r} stage first"
        )
    header = artifacts.read_header(path)
    if force:
        return header.lineage
    expected = _lineage_params(config, tag, force)
    lineage = compute_lineage(tag, expected)
    if lineage != header.lineage:
        keys = sorted(set(expected) | set(header.params))
        diff = [
            f"{k}: artifact={header.params.get(k)!r} config={expected.get(k)!r}"
            for k in keys
            if header.params.get(k) != expected.get(k)
        ]
        raise ArtifactError(
            f"{path}: built under a different configuration "
            f"(lineage {header.lineage} != expected {lineage}); "
            "mismatched fields: " + ("; ".join(diff) or "<upstream chain>")
            + ". Rerun the upstream stages or pass --force."
        )
    return lineage


def _lineage_params(config: PipelineConfig, tag: str, force: bool) -> dict:
    params = _stage_knobs(config, tag)
    for up in _UPSTREAMS[tag]:
        params[f"upstream_{up}"] = _verify_artifact(config, up, force)
    return params


def _header_for(config: PipelineConfig, tag: str, force: bool) -> ArtifactHeader:
    params = _lineage_params(config, tag, force)
    return ArtifactHeader(
        stage=tag,
        lineage=compute_lineage(tag, params),
        params=dict(params),
        data={"pipeline_config": config.semantic_dict()},
    )


def _figure_path(table_path: str) -> str:
    return os.path.splitext(table_path)[0] + ".png"


def _write_csv_atomic(path: str, header_row: list[str], rows) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle)
            writer.writerow(header_row)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ------------------------------------------------------------------ stages

def _stage_synth(config: PipelineConfig, force: bool) -> list[str]:
    spec = SyntheticSpec(
        classes=config.synth_classes,
        topic_words=config.synth_topic_words,
        noise_words=config.synth_noise_words,
        sentences_per_class=config.synth_sentences_per_class,
        noise_ratio=config.synth_noise_ratio,
        length_range=(config.synth_len_min, config.synth_len_max),
        sentences_per_doc=config.synth_sentences_per_doc,
        seed=config.stage_seed("synth"),
    )
    result = generate_synthetic(spec)
    _write_csv_atomic(
        config.input,
        [config.class_col, config.text_col],
        ((doc.label, doc.raw_text) for doc in result.corpus.documents),
    )
    params = {"synth": dict(vars(spec)) | {"length_range": list(spec.length_range)}}
    header = ArtifactHeader(
        stage="annotations",
        lineage=compute_lineage("annotations", params),
        params=params,
        data={"pipeline_config": config.semantic_dict()},
    )
    truth_path = config.path("truth_path")
    artifacts.write_annotations(result.truth, truth_path, header)
    log.info(
        "synth: %d documents, %d sentences, %d classes -> %s",
        len(result.corpus.documents),
        len(result.truth),
        spec.classes,
        config.input,
    )
    return [config.input, truth_path]


def _stage_cleanse(config: PipelineConfig, force: bool) -> list[str]:
    corpus = load_corpus(
        config.input, config.class_col, config.text_col, config.delimiter
    )
    stops = load_stopwords(config.stopwords)
    sentences = clean_corpus(corpus, stops)
    out = _artifact_path(config, "cleanse")
    artifacts.write_clean_corpus(
        sentences, out, _header_for(config, "cleanse", force)
    )
    log.info(
        "cleanse: %d documents (%d rows skipped) -> %d sentences",
        len(corpus), corpus.skipped_rows, len(sentences),
    )
    return [out]


def _stage_infuse(config: PipelineConfig, force: bool) -> list[str]:
    header = _header_for(config, "infuse", force)
    sentences, _ = artifacts.read_clean_corpus(_artifact_path(config, "cleanse"))
    rng = InfusionRng(seed=config.stage_seed("infuse"))
    infused = infuse_corpus(sentences, rng)
    anchors = sum(len(s.anchor_positions) for s in infused)
    out = _artifact_path(config, "infuse")
    artifacts.write_infused_corpus(infused, out, header)
    log.info("infuse: %d sentences, %d anchors inserted", len(infused), anchors)
    return [out]


def _stage_embed(config: PipelineConfig, force: bool) -> list[str]:
    header = _header_for(config, "embed", force)
    sentences, _ = artifacts.read_infused_corpus(_artifact_path(config, "infuse"))
    train_config = TrainConfig(
        dim=config.dim,
        window=config.window,
        negatives=config.negatives,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        subsample=config.subsample,
        min_count=config.min_count,
        seed=config.stage_seed("embed"),
        workers=config.effective_threads(),
    )
    model = train(sentences, train_config)
    out = _artifact_path(config, "embed")
    artifacts.write_model(model, out, header)
    log.info(
        "embed: |V|=%d dim=%d, loss %.4f -> %.4f over %d epochs",
        len(model.vocab), model.dim,
        model.epoch_losses[0], model.epoch_losses[-1], len(model.epoch_losses),
    )
    return [out]


def _stage_graph(config: PipelineConfig, force: bool) -> list[str]:
    graph_header = _header_for(config, "graph", force)
    communities_header = _header_for(config, "communities", force)
    model, _ = artifacts.read_model(_artifact_path(config, "embed"))
    graph = build_graph(model, config.theta)
    hierarchy = recursive_cluster(
        graph,
        seed=config.stage_seed("graph"),
        max_depth=config.max_depth,
        min_members=config.min_members,
        q_gain_floor=config.q_gain_floor,
    )
    retained = hierarchy.retained()
    graph_path = _artifact_path(config, "graph")
    communities_path = _artifact_path(config, "communities")
    artifacts.write_graph(graph, graph_path, graph_header)
    artifacts.write_communities(retained, communities_path, communities_header)
    anchored = sum(1 for c in retained if c.anchors)
    log.info(
        "graph: %d nodes, %d edges (theta=%.2f), root Q=%.4f; "
        "%d retained level-%d communities, %d anchored",
        len(graph), graph.edge_count, config.theta,
        hierarchy.q_by_path.get((), 0.0),
        len(retained), config.max_depth, anchored,
    )
    return [graph_path, communities_path]


def _stage_filter(config: PipelineConfig, force: bool) -> list[str]:
    header = _header_for(config, "filter", force)
    sentences, _ = artifacts.read_clean_corpus(_artifact_path(config, "cleanse"))
    retained, _ = artifacts.read_communities(_artifact_path(config, "communities"))
    anchored = anchored_from_retained(retained)
    result = filter_corpus(sentences, anchored)
    verdicts_path = _artifact_path(config, "filter")
    filtered_path = config.path("filtered_path")
    summary_path = config.path("summary_path")
    artifacts.write_verdicts(result.verdicts, verdicts_path, header)
    artifacts.write_clean_corpus(
        result.kept,
        filtered_path,
        ArtifactHeader(stage="filtered", lineage=header.lineage,
                       params=header.params, data=header.data),
    )
    artifacts.write_summary(
        result.summaries,
        summary_path,
        ArtifactHeader(stage="summary", lineage=header.lineage,
                       params=header.params, data=header.data),
    )
    outputs = [verdicts_path, filtered_path, summary_path]
    if config.figures:
        outputs.append(plots.plot_noise_summary(result.summaries, _figure_path(summary_path)))
    for s in result.summaries:
        log.info(
            "filter: %s: %d sentences, %d noise (%.2f%%), %d documents emptied",
            s.label, s.sentences, s.noise, s.noise_pct, s.empty_documents,
        )
    return outputs


def _stage_pip(config: PipelineConfig, force: bool) -> list[str]:
    cleanse_lineage = _verify_artifact(config, "cleanse", force)
    infuse_lineage = _verify_artifact(config, "infuse", force)
    params = {
        "alphas": list(config.alphas),
        "pip_window": config.pip_window,
        "max_vocab": config.max_vocab,
        "seed": config.stage_seed("pip"),
        "upstream_cleanse": cleanse_lineage,
        "upstream_infuse": infuse_lineage,
    }
    basic, _ = artifacts.read_clean_corpus(_artifact_path(config, "cleanse"))
    infused, _ = artifacts.read_infused_corpus(_artifact_path(config, "infuse"))
    report = compare_corpora(
        basic,
        infused,
        alphas=config.alphas,
        window=config.pip_window,
        max_vocab=config.max_vocab,
        seed=config.stage_seed("pip"),
    )
    report_path = config.path("pip_report_path")
    base_dir = os.path.dirname(os.path.abspath(report_path))
    outputs = []
    for entry in report.entries:
        for name, analysis in (("basic", entry.basic), ("infused", entry.infused)):
            curve_path = os.path.join(
                base_dir, f"pip_curve_{name}_alpha{entry.alpha:g}.csv"
            )
            artifacts.write_pip_curve(
                analysis.curve,
                curve_path,
                ArtifactHeader(
                    stage="pip",
                    lineage=compute_lineage("pip", params),
                    params=dict(params),
                    data={"corpus": name, "pipeline_config": config.semantic_dict()},
                ),
            )
            outputs.append(curve_path)
        log.info(
            "pip: alpha=%g k*(basic)=%d k*(infused)=%d delta=%d rel-loss-change=%.3f",
            entry.alpha, entry.basic.curve.k_star, entry.infused.curve.k_star,
            entry.delta_k, entry.relative_loss_change,
        )
    artifacts.write_pip_report(
        report,
        report_path,
        ArtifactHeader(stage="pip-report", lineage=compute_lineage("pip", params),
                       params=params, data={"pipeline_config": config.semantic_dict()}),
    )
    outputs.append(report_path)
    if config.figures:
        outputs.append(plots.plot_pip_comparison(report, _figure_path(report_path)))
    return outputs


def _stage_sample(config: PipelineConfig, force: bool) -> list[str]:
    lineage = _verify_artifact(config, "filter", force)
    verdicts, _ = artifacts.read_verdicts(_artifact_path(config, "filter"))
    manifest = sample_for_annotation(
        verdicts, per_class=config.per_class, seed=config.stage_seed("sample")
    )
    params = {
        "per_class": config.per_class,
        "seed": config.stage_seed("sample"),
        "upstream_filter": lineage,
    }
    out = config.path("manifest_path")
    artifacts.write_manifest(
        manifest,
        out,
        ArtifactHeader(stage="manifest", lineage=compute_lineage("manifest", params),
                       params=params, data={"pipeline_config": config.semantic_dict()}),
    )
    log.info(
        "sample: %d classes, %d sentences selected",
        len(manifest.picks), sum(len(v) for v in manifest.picks.values()),
    )
    return [out]


def _stage_score(config: PipelineConfig, force: bool) -> list[str]:
    lineage = _verify_artifact(config, "filter", force)
    annotations_path = config.annotations or config.path("truth_path")
    if not os.path.exists(annotations_path):
        raise ConfigError(
            f"annotations file {annotations_path!r} not found; set the "
            "'annotations' config key or --annotations"
        )
    verdicts, _ = artifacts.read_verdicts(_artifact_path(config, "filter"))
    annotations = artifacts.read_annotations(annotations_path)
    report = score(verdicts, annotations)
    params = {
        "annotations": file_digest(annotations_path),
        "upstream_filter": lineage,
    }
    out = config.path("score_path")
    artifacts.write_score_report(
        report,
        out,
        ArtifactHeader(stage="score", lineage=compute_lineage("score", params),
                       params=params, data={"pipeline_config": config.semantic_dict()}),
    )
    outputs = [out]
    if config.figures:
        outputs.append(plots.plot_score_report(report, _figure_path(out)))
    def fmt(v):
        return "undefined" if v is None else f"{v:.3f}"
    log.info(
        "score: macro precision=%s recall=%s f1=%s over %d classes",
        fmt(report.macro_precision), fmt(report.macro_recall),
        fmt(report.macro_f1), len(report.classes),
    )
    return outputs


_STAGES = {
    "synth": _stage_synth,
    "cleanse": _stage_cleanse,
    "infuse": _stage_infuse,
    "embed": _stage_embed,
    "graph": _stage_graph,
    "filter": _stage_filter,
    "pip": _stage_pip,
    "sample": _stage_sample,
    "score": _stage_score,
}


def run_stage(name: str, config: PipelineConfig, force: bool = False) -> list[str]:
    """Execute one stage; returns the paths it wrote."""
    if name not in _STAGES:
        raise ConfigError(f"unknown stage {name!r}")
    start = time.perf_counter()
    outputs = _STAGES[name](config, force)
    log.info("stage %s finished in %.2fs -> %s", name, time.perf_counter() - start, outputs)
    return outputs


def run_all(config: PipelineConfig, force: bool = False) -> list[str]:
    """cleanse -> infuse -> embed -> graph -> filter (+ pip when enabled)."""
    stages = list(RUN_ALL) + (["pip"] if config.run_pip else [])
    outputs = []
    for name in stages:
        outputs.extend(run_stage(name, config, force))
    return outputs


# stage -> artifact tags it consumes (for the dry-run plan)
_CONSUMES = {
    "synth": (),
    "cleanse": (),
    "infuse": ("cleanse",),
    "embed": ("infuse",),
    "graph": ("embed",),
    "filter": ("cleanse", "communities"),
    "pip": ("cleanse", "infuse"),
    "sample": ("filter",),
    "score": ("filter",),
}


def _plan(stage: str, config: PipelineConfig) -> list[str]:
    stages = (
        list(RUN_ALL) + (["pip"] if config.run_pip else [])
        if stage == "run-all"
        else [stage]
    )
    lines = []
    for name in stages:
        ins = [_artifact_path(config, tag) for tag in _CONSUMES[name]]
        if name == "cleanse":
            ins.insert(0, config.input)
        if name == "score":
            ins.append(config.annotations or config.path("truth_path"))
        lines.append(f"{name}: inputs [{', '.join(ins) or '-'}]")
    return lines


_FLAG_TO_KEY = {
    "input": "input",
    "class_col": "class_col",
    "text_col": "text_col",
    "delimiter": "delimiter",
    "alpha": "alphas",
    "window": "pip_window",
    "max_vocab": "max_vocab",
    "basic": "cleansed_path",
    "infused": "infused_path",
    "annotations": "annotations",
    "threads": "threads",
    "seed": "seed",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semno",
        description="Semantic-noise filtering pipeline for categorical corpora.",
        epilog="Any config key can be overridden with --key=value.",
    )
    parser.add_argument("stage", choices=sorted(_STAGES) + ["run-all"])
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--threads", type=int, help="worker threads (1 = deterministic)")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--force", action="store_true", help="skip lineage checks")
    parser.add_argument("--dry-run", action="store_true", help="print the plan and exit")
    parser.add_argument("--input", help="corpus input file")
    parser.add_argument("--class-col", dest="class_col", help="category column name")
    parser.add_argument("--text-col", dest="text_col", help="text column name")
    parser.add_argument("--delimiter", help="input field delimiter")
    parser.add_argument("--alpha", help="comma-separated alphas for the pip stage")
    parser.add_argument("--window", type=int, help="pip co-occurrence window")
    parser.add_argument("--max-vocab", dest="max_vocab", type=int, help="pip vocabulary cap")
    parser.add_argument("--basic", help="cleansed-corpus artifact for the pip stage")
    parser.add_argument("--infused", help="infused-corpus artifact for the pip stage")
    parser.add_argument("--annotations", help="annotation file for the score stage")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    parser = _build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        config = load_config(args.config)
        for flag, key in _FLAG_TO_KEY.items():
            value = getattr(args, flag, None)
            if value is not None:
                config.set_value(key, str(value))
        for item in extra:
            if not item.startswith("--") or "=" not in item:
                raise ConfigError(
                    f"unrecognized argument {item!r}; overrides use --key=value"
                )
            key, _, value = item[2:].partition("=")
            config.set_value(key.replace("-", "_"), value)
        if args.dry_run:
            for line in _plan(args.stage, config):
                print(line)
            return 0
        if args.stage == "run-all":
            run_all(config, force=args.force)
        else:
            run_stage(args.stage, config, force=args.force)
        return 0
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    except ArtifactError as exc:
        log.error("artifact error: %s", exc)
        return 3
    except SemnoError as exc:
        log.error("%s", exc)
        return 4
    except Exception:
        log.exception("unexpected failure")
        return 4


if __name__ == "__main__":
    sys.exit(main())
