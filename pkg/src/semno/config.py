"""Pipeline configuration: flat key-value file, seeds, lineage chain.

One master seed drives everything; each stage derives its own seed as
hash(master, stage-name). Each stage also has a lineage hash over its own
parameters plus its upstream artifacts' lineage hashes, letting consumers
detect mixed-configuration pipelines.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields

from semno.errors import ConfigError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass
class PipelineConfig:
    # corpus input
    input: str = "corpus.csv"
    class_col: str = "Component"
    text_col: str = "Ticket Text"
    delimiter: str = ","
    stopwords: str = "english"
    # global
    workdir: str = "artifacts"
    seed: int = 42
    threads: int = 0                  # 0 = machine parallelism
    figures: bool = True
    run_pip: bool = False             # include the pip stage in run-all
    # embedding training
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    subsample: float = 1e-3
    min_count: int = 5
    # graph + clustering
    theta: float = 0.6
    max_depth: int = 3
    min_members: int = 3
    q_gain_floor: float = 1e-4
    # pip analysis
    alphas: tuple[float, ...] = (0.5, 1.0)
    pip_window: int = 5
    max_vocab: int = 2000
    # evaluation
    per_class: int = 100
    annotations: str = ""
    # synthetic generation
    synth_classes: int = 4
    synth_topic_words: int = 50
    synth_noise_words: int = 100
    synth_sentences_per_class: int = 2000
    synth_noise_ratio: float = 0.3
    synth_len_min: int = 6
    synth_len_max: int = 12
    synth_sentences_per_doc: int = 5
    # artifact path overrides (empty = default under workdir)
    cleansed_path: str = ""
    infused_path: str = ""
    model_path: str = ""
    graph_path: str = ""
    communities_path: str = ""
    verdicts_path: str = ""
    filtered_path: str = ""
    summary_path: str = ""
    pip_report_path: str = ""
    manifest_path: str = ""
    score_path: str = ""
    truth_path: str = ""

    _DEFAULT_PATHS = {
        "cleansed_path": "cleansed.tsv",
        "infused_path": "infused.tsv",
        "model_path": "model.txt",
        "graph_path": "graph.tsv",
        "communities_path": "communities.tsv",
        "verdicts_path": "verdicts.tsv",
        "filtered_path": "filtered.tsv",
        "summary_path": "summary.csv",
        "pip_report_path": "pip_report.csv",
        "manifest_path": "manifest.tsv",
        "score_path": "score_report.csv",
        "truth_path": "truth.tsv",
    }

    def path(self, key: str) -> str:
        explicit = getattr(self, key)
        if explicit:
            return explicit
        return os.path.join(self.workdir, self._DEFAULT_PATHS[key])

    def stage_seed(self, stage: str) -> int:
        key = f"{self.seed}:{stage}".encode("utf-8")
        return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big") >> 1

    def effective_threads(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)

    def set_value(self, key: str, raw: str) -> None:
        """Parse and assign one `key = value` entry; unknown keys fail."""
        spec = {f.name: f for f in fields(self) if not f.name.startswith("_")}
        if key not in spec:
            raise ConfigError(f"unknown configuration key {key!r}")
        current = getattr(self, key)
        raw = raw.strip()
        try:
            if key == "alphas":
                value: object = tuple(float(x) for x in raw.split(",") if x.strip())
            elif isinstance(current, bool):
                lowered = raw.lower()
                if lowered in _TRUE:
                    value = True
                elif lowered in _FALSE:
                    value = False
                else:
                    raise ValueError(f"expected a boolean, got {raw!r}")
            elif isinstance(current, int):
                value = int(raw)
            elif isinstance(current, float):
                value = float(raw)
            else:
                value = raw
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        setattr(self, key, value)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def semantic_dict(self) -> dict:
        """Config snapshot embedded in artifact headers: every parameter
        that shapes results, excluding file locations and render toggles."""
        skip = {"input", "workdir", "annotations", "figures"}
        return {
            k: v
            for k, v in self.to_dict().items()
            if k not in skip and not k.endswith("_path")
        }


def load_config(path: str | None) -> PipelineConfig:
    """Read a flat `key = value` file (# comments, blank lines ignored)."""
    config = PipelineConfig()
    if path is None:
        return config
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if "=" not in stripped:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value', got {stripped!r}"
                    )
                key, _, value = stripped.partition("=")
                config.set_value(key.strip(), value)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    return config


def file_digest(path: str) -> str:
    """sha256 of a file's bytes (first 16 hex chars); used in lineage."""
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as handle:
            for block in iter(lambda: handle.read(1 << 20), b""):
                digest.update(block)
    except OSError as exc:
        raise ConfigError(f"cannot hash input file {path!r}: {exc}") from exc
    return digest.hexdigest()[:16]
