"""Skip-gram word embeddings with negative sampling, trained from scratch.

Sentences are the training unit (windows never cross sentence boundaries,
so anchors only bind to their own sentence's context). Anchors are exempt
from the min-count cutoff and from frequency subsampling: infusion makes
them frequent on purpose, and community selection depends on them.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from semno.errors import TrainingDivergedError
from semno.infuse import is_anchor

log = logging.getLogger(__name__)

_NOISE_POWER = 0.75
_LR_FLOOR_FACTOR = 1e-4
_MAX_NEGATIVE_REDRAWS = 8


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    subsample: float = 1e-3
    min_count: int = 5
    seed: int = 1
    workers: int = 1

    def validate(self) -> None:
        for name in ("dim", "window", "negatives", "epochs", "min_count", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0 or self.subsample <= 0:
            raise ValueError("learning_rate and subsample must be positive")


@dataclass
class Vocabulary:
    words: list[str]                  # id -> surface, ids dense in [0, |V|)
    counts: np.ndarray                # id -> corpus frequency
    min_count: int

    index: dict[str, int] = field(init=False)

    def __post_init__(self) -> None:
        self.index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def anchor_ids(self) -> list[int]:
        return [i for i, w in enumerate(self.words) if is_anchor(w)]


def build_vocab(sentences, min_count: int = 5) -> Vocabulary:
    """Count tokens and assign dense ids: descending frequency, ties lexicographic.

    Words below min_count are dropped; anchor tokens are always retained.
    """
    counts: Counter[str] = Counter()
    for sentence in sentences:
        counts.update(sentence.tokens)
    if not counts:
        raise ValueError("corpus contains no tokens")
    kept = [
        (w, c) for w, c in counts.items() if c >= min_count or is_anchor(w)
    ]
    kept.sort(key=lambda item: (-item[1], item[0]))
    words = [w for w, _ in kept]
    freqs = np.array([c for _, c in kept], dtype=np.float64)
    return Vocabulary(words=words, counts=freqs, min_count=min_count)


@dataclass
class EmbeddingModel:
    vocab: Vocabulary
    vectors: np.ndarray               # |V| x dim input vectors
    config: TrainConfig
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def vector(self, word: str) -> np.ndarray:
        return self.vectors[self.vocab.index[word]]


def sigmoid(z: np.ndarray) -> np.ndarray:
    # tanh form is overflow-safe for any z
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sgns_objective(
    center: np.ndarray, targets: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative-sampling loss and analytic gradients for one center word.

    `targets` stacks the context row (label 1) and negative rows (label 0).
    Returns (loss, d/d center, d/d targets); used by the training step and
    checked against finite differences in the test suite.
    """
    z = targets @ center
    # -log sigma(z) for positives, -log sigma(-z) for negatives
    loss = float(np.sum(np.logaddexp(0.0, np.where(labels > 0, -z, z))))
    residual = sigmoid(z) - labels
    grad_center = residual @ targets
    grad_targets = np.outer(residual, center)
    return loss, grad_center, grad_targets


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; raises on zero vectors (undefined)."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(np.dot(a, b) / (na * nb))


def _keep_probabilities(vocab: Vocabulary, threshold: float) -> np.ndarray:
    """word2vec subsampling: p_keep = (sqrt(f/t) + 1) * t/f, anchors exempt."""
    freq = vocab.counts / vocab.counts.sum()
    ratio = freq / threshold
    keep = np.minimum(1.0, (np.sqrt(ratio) + 1.0) / ratio)
    for i in vocab.anchor_ids:
        keep[i] = 1.0
    return keep


def _noise_cumulative(vocab: Vocabulary) -> np.ndarray:
    weights = vocab.counts ** _NOISE_POWER
    return np.cumsum(weights)


def _worker_seed(seed: int, epoch: int, worker: int) -> int:
    key = f"{seed}:{epoch}:{worker}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


class _Trainer:
    def __init__(self, vocab: Vocabulary, config: TrainConfig):
        self.vocab = vocab
        self.config = config
        rng = np.random.default_rng(config.seed)
        bound = 0.5 / config.dim
        self.syn0 = rng.uniform(-bound, bound, (len(vocab), config.dim))
        self.syn1 = np.zeros((len(vocab), config.dim))
        self.keep = _keep_probabilities(vocab, config.subsample)
        self.cum = _noise_cumulative(vocab)
        self.tokens_done = 0          # racy under >1 workers, by contract
        self.total_tokens = 0

    def _alpha(self) -> float:
        lr = self.config.learning_rate
        progress = self.tokens_done / max(1, self.total_tokens)
        return max(lr * (1.0 - progress), lr * _LR_FLOOR_FACTOR)

    def _sample_negatives(self, rng, positives: np.ndarray) -> np.ndarray:
        shape = (positives.size, self.config.negatives)
        total = self.cum[-1]
        negs = np.searchsorted(self.cum, rng.uniform(0.0, total, shape))
        collisions = negs == positives[:, None]
        for _ in range(_MAX_NEGATIVE_REDRAWS):
            n_bad = int(collisions.sum())
            if n_bad == 0:
                break
            negs[collisions] = np.searchsorted(
                self.cum, rng.uniform(0.0, total, n_bad)
            )
            collisions = negs == positives[:, None]
        return negs

    def _train_sentence(self, ids: list[int], rng) -> tuple[float, int]:
        self.tokens_done += len(ids)
        if len(ids) < 2:
            return 0.0, 0
        kept_mask = rng.random(len(ids)) < self.keep[ids]
        kept = [i for i, ok in zip(ids, kept_mask) if ok]
        if len(kept) < 2:
            return 0.0, 0
        alpha = self._alpha()
        spans = rng.integers(1, self.config.window + 1, size=len(kept))
        loss_sum = 0.0
        centers = 0
        for pos, center_id in enumerate(kept):
            span = int(spans[pos])
            context = kept[max(0, pos - span): pos] + kept[pos + 1: pos + 1 + span]
            if not context:
                continue
            ctx = np.asarray(context, dtype=np.intp)
            negs = self._sample_negatives(rng, ctx)
            rows = np.concatenate([ctx, negs.ravel()])
            labels = np.zeros(rows.size)
            labels[: ctx.size] = 1.0
            center_vec = self.syn0[center_id]
            targets = self.syn1[rows]          # copy: updates use old values
            loss, grad_center, grad_targets = sgns_objective(
                center_vec, targets, labels
            )
            np.add.at(self.syn1, rows, -alpha * grad_targets)
            self.syn0[center_id] = center_vec - alpha * grad_center
            loss_sum += loss
            centers += 1
        return loss_sum, centers

    def run_epoch(self, sentence_ids: list[list[int]], epoch: int) -> float:
        workers = self.config.workers
        if workers == 1:
            rng = np.random.default_rng(_worker_seed(self.config.seed, epoch, 0))
            loss, centers = 0.0, 0
            for ids in sentence_ids:
                l, c = self._train_sentence(ids, rng)
                loss += l
                centers += c
        else:
            chunks = [sentence_ids[w::workers] for w in range(workers)]

            def work(w: int) -> tuple[float, int]:
                rng = np.random.default_rng(_worker_seed(self.config.seed, epoch, w))
                total, n = 0.0, 0
                for ids in chunks[w]:
                    l, c = self._train_sentence(ids, rng)
                    total += l
                    n += c
                return total, n

            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(work, range(workers)))
            loss = sum(r[0] for r in results)
            centers = sum(r[1] for r in results)
        avg = loss / centers if centers else 0.0
        if not np.isfinite(avg) or not np.all(np.isfinite(self.syn0)):
            raise TrainingDivergedError(
                "non-finite values during training; the learning rate "
                f"({self.config.learning_rate}) is likely too high"
            )
        return avg


def train(sentences, config: TrainConfig | None = None) -> EmbeddingModel:
    """Train skip-gram/negative-sampling vectors over infused sentences.

    Deterministic (bit-identical) with workers=1; with more workers the
    weight updates race and only convergence is guaranteed.
    """
    config = config or TrainConfig()
    config.validate()
    vocab = build_vocab(sentences, config.min_count)
    trainer = _Trainer(vocab, config)
    sentence_ids = [
        [vocab.index[t] for t in s.tokens if t in vocab.index] for s in sentences
    ]
    tokens_per_epoch = sum(len(ids) for ids in sentence_ids)
    trainer.total_tokens = tokens_per_epoch * config.epochs
    losses = []
    for epoch in range(config.epochs):
        avg = trainer.run_epoch(sentence_ids, epoch)
        losses.append(avg)
        log.info("epoch %d/%d: avg sgns loss %.6f", epoch + 1, config.epochs, avg)
    return EmbeddingModel(
        vocab=vocab, vectors=trainer.syn0, config=config, epoch_losses=losses
    )
