"""Anchor infusion: insert class-marker tokens into clean sentences.

Each class gets one anchor token ``A_<label>``. The underscore cannot occur
in corpus tokens (the cleanse alphabet is `[a-z0-9]`), so anchors are
collision-free by construction. The anchor count per sentence grows with
ceil(log2(len)/2), deliberately sub-linear so infusion stays near-lossless.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass

from semno.cleanse import CleanSentence

ANCHOR_PREFIX = "A_"

_REJECTION_ATTEMPTS = 32


def anchor_token(label: str) -> str:
    return ANCHOR_PREFIX + label


def is_anchor(token: str) -> bool:
    return token.startswith(ANCHOR_PREFIX)


def infusion_frequency(length: int) -> int:
    """Number of anchors for a clean sentence of the given token count."""
    if length < 1:
        raise ValueError("infusion frequency is defined for length >= 1")
    return math.ceil(math.log2(length) / 2)


@dataclass(frozen=True)
class InfusionRng:
    """Master seed plus the per-sentence derivation scheme.

    Sentence streams are seeded from hash(seed, doc_id, index), so output is
    independent of iteration order and thread count.
    """

    seed: int
    algorithm: str = "blake2b/mt19937"

    def for_sentence(self, doc_id: str, index: int) -> random.Random:
        key = f"{self.seed}:{doc_id}:{index}".encode("utf-8")
        sub = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")
        return random.Random(sub)


@dataclass(frozen=True)
class InfusedSentence:
    doc_id: str
    index: int
    label: str
    tokens: tuple[str, ...]
    anchor_positions: tuple[int, ...]  # drawn indices against the clean sentence


def sample_nonconsecutive(rng: random.Random, n: int, k: int) -> tuple[int, ...]:
    """Draw k pairwise non-adjacent indices from [0, n-1], uniformly over all
    valid combinations.

    Rejection sampling first; after a bounded number of misses, fall back to
    the exact combinatorial construction (choose k of n-k+1, then shift the
    i-th smallest by i), which is also uniform.
    """
    if k == 0:
        return ()
    if n - k + 1 < k:
        raise ValueError(f"cannot place {k} non-consecutive indices in [0, {n - 1}]")
    for _ in range(_REJECTION_ATTEMPTS):
        picks = sorted(rng.sample(range(n), k))
        if all(b - a >= 2 for a, b in zip(picks, picks[1:])):
            return tuple(picks)
    base = sorted(rng.sample(range(n - k + 1), k))
    return tuple(y + i for i, y in enumerate(base))


def infuse_sentence(sentence: CleanSentence, rng: InfusionRng) -> InfusedSentence:
    """Insert the sentence's class anchor at non-consecutive random indices.

    Indices are drawn against the clean sentence; each anchor goes in front
    of the token at its index (insertions applied right-to-left so earlier
    indices stay valid). Empty sentences pass through uninfused.
    """
    length = len(sentence)
    if length == 0:
        return InfusedSentence(
            sentence.doc_id, sentence.index, sentence.label, (), ()
        )
    count = infusion_frequency(length)
    stream = rng.for_sentence(sentence.doc_id, sentence.index)
    positions = sample_nonconsecutive(stream, length, count)
    anchor = anchor_token(sentence.label)
    tokens = list(sentence.tokens)
    for pos in reversed(positions):
        tokens.insert(pos, anchor)
    return InfusedSentence(
        sentence.doc_id, sentence.index, sentence.label, tuple(tokens), positions
    )


def strip_anchors(sentence: InfusedSentence) -> CleanSentence:
    """Exact inverse of infuse_sentence."""
    tokens = tuple(t for t in sentence.tokens if not is_anchor(t))
    return CleanSentence(sentence.doc_id, sentence.index, sentence.label, tokens)


def infuse_corpus(
    sentences: list[CleanSentence], rng: InfusionRng
) -> list[InfusedSentence]:
    """Infuse every sentence; order-independent thanks to per-sentence seeding."""
    return [infuse_sentence(s, rng) for s in sentences]
