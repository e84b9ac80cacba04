import random

import pytest

from semno.cleanse import CleanSentence


@pytest.fixture
def clean_sentence():
    def make(tokens, doc_id="d0", index=0, label="class-a"):
        return CleanSentence(doc_id, index, label, tuple(tokens))

    return make


@pytest.fixture
def random_sentences():
    """Factory for batches of random clean sentences."""

    def make(count, max_len=30, seed=0, label="class-a", vocab=None):
        rng = random.Random(seed)
        vocab = vocab or [f"w{i}" for i in range(40)]
        out = []
        for i in range(count):
            length = rng.randint(0, max_len)
            tokens = tuple(rng.choice(vocab) for _ in range(length))
            out.append(CleanSentence(f"d{i}", 0, label, tokens))
        return out

    return make
