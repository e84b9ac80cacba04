import random

import numpy as np
import pytest

from semno.cleanse import CleanSentence
from semno.embed import (
    TrainConfig,
    build_vocab,
    cosine,
    sgns_objective,
    sigmoid,
    train,
)
from semno.errors import TrainingDivergedError


def sent(tokens, doc_id="d0"):
    return CleanSentence(doc_id, 0, "class-a", tuple(tokens))


class TestBuildVocab:
    def test_min_count_with_anchor(self):
        sentences = [sent(["A_x", "brake"]) for _ in range(6)]
        vocab = build_vocab(sentences, min_count=5)
        assert set(vocab.words) == {"A_x", "brake"}

    def test_rare_word_dropped_anchor_kept(self):
        sentences = [sent(["brake"]) for _ in range(6)] + [sent(["A_y", "rare"])]
        vocab = build_vocab(sentences, min_count=5)
        assert "A_y" in vocab.words
        assert "rare" not in vocab.words

    def test_tie_broken_lexicographically(self):
        sentences = [sent(["zeta", "alpha"]) for _ in range(5)]
        vocab = build_vocab(sentences, min_count=1)
        assert vocab.words == ["alpha", "zeta"]
        assert vocab.index["alpha"] == 0

    def test_ids_ordered_by_frequency(self):
        sentences = [sent(["common"] * 3 + ["rare"])] * 5
        vocab = build_vocab(sentences, min_count=1)
        assert vocab.words[0] == "common"

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            build_vocab([sent([])], min_count=1)


class TestCosine:
    def test_identical(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_opposite(self):
        assert cosine(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == -1.0

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine(np.zeros(3), np.array([1.0, 0.0, 0.0]))


class TestObjective:
    def test_loss_positive_and_finite(self):
        rng = np.random.default_rng(0)
        loss, gc, gt = sgns_objective(
            rng.normal(size=8), rng.normal(size=(6, 8)), np.array([1.0] + [0.0] * 5)
        )
        assert loss > 0 and np.isfinite(loss)
        assert gc.shape == (8,) and gt.shape == (6, 8)

    def test_gradients_match_finite_differences(self):
        # acceptance criterion: rel err < 1e-4 on 10 random configurations
        rng = np.random.default_rng(3)
        h = 1e-6
        worst = 0.0
        for _ in range(10):
            dim = rng.integers(4, 12)
            n_neg = rng.integers(1, 8)
            center = rng.normal(size=dim)
            targets = rng.normal(size=(1 + n_neg, dim))
            labels = np.zeros(1 + n_neg)
            labels[0] = 1.0
            _, grad_center, grad_targets = sgns_objective(center, targets, labels)
            for i in range(dim):
                step = np.zeros(dim)
                step[i] = h
                lp, _, _ = sgns_objective(center + step, targets, labels)
                lm, _, _ = sgns_objective(center - step, targets, labels)
                numeric = (lp - lm) / (2 * h)
                worst = max(worst, abs(numeric - grad_center[i]) / max(abs(grad_center[i]), 1e-8))
            for r in range(1 + n_neg):
                for i in range(dim):
                    step = np.zeros((1 + n_neg, dim))
                    step[r, i] = h
                    lp, _, _ = sgns_objective(center, targets + step, labels)
                    lm, _, _ = sgns_objective(center, targets - step, labels)
                    numeric = (lp - lm) / (2 * h)
                    worst = max(
                        worst, abs(numeric - grad_targets[r, i]) / max(abs(grad_targets[r, i]), 1e-8)
                    )
        assert worst < 1e-4

    def test_sigmoid_stable(self):
        z = np.array([-1e6, -30.0, 0.0, 30.0, 1e6])
        s = sigmoid(z)
        assert np.all(np.isfinite(s))
        assert s[0] == 0.0 and s[-1] == 1.0 and s[2] == 0.5


def planted_corpus(n_sentences, seed=0):
    rng = random.Random(seed)
    brake = [f"brake{i}" for i in range(15)]
    fuel = [f"fuel{i}" for i in range(15)]
    sentences = []
    for i in range(n_sentences):
        pool, anchor = (brake, "A_Brakes") if rng.random() < 0.5 else (fuel, "A_Fuel")
        tokens = rng.choices(pool, k=8)
        tokens.insert(rng.randrange(8), anchor)
        sentences.append(sent(tokens, doc_id=f"d{i}"))
    return sentences, brake, fuel


class TestTraining:
    def test_planted_topics_geometry(self):
        sentences, brake, fuel = planted_corpus(10_000)
        model = train(sentences, TrainConfig(dim=32, epochs=2, min_count=1, seed=7))
        a_brakes = model.vector("A_Brakes")
        to_brake = np.mean([cosine(a_brakes, model.vector(w)) for w in brake])
        to_fuel = np.mean([cosine(a_brakes, model.vector(w)) for w in fuel])
        assert to_brake > to_fuel
        intra = np.mean(
            [cosine(model.vector(brake[i]), model.vector(brake[j]))
             for i in range(8) for j in range(i + 1, 8)]
        )
        inter = np.mean(
            [cosine(model.vector(b), model.vector(f)) for b in brake[:8] for f in fuel[:8]]
        )
        assert intra > inter

    def test_loss_decreases(self):
        sentences, _, _ = planted_corpus(2000, seed=3)
        model = train(sentences, TrainConfig(dim=16, epochs=3, min_count=1, seed=5))
        assert model.epoch_losses[0] > model.epoch_losses[-1]

    def test_single_word_corpus(self):
        model = train([sent(["only"])] * 8, TrainConfig(dim=4, epochs=2, min_count=1, seed=1))
        assert np.all(np.isfinite(model.vectors))
        assert model.vocab.words == ["only"]

    def test_deterministic_single_worker(self):
        sentences, _, _ = planted_corpus(500, seed=9)
        config = TrainConfig(dim=8, epochs=2, min_count=1, seed=11, workers=1)
        a = train(sentences, config)
        b = train(sentences, config)
        assert np.array_equal(a.vectors, b.vectors)
        assert a.epoch_losses == b.epoch_losses

    def test_multi_worker_converges(self):
        sentences, brake, fuel = planted_corpus(4000, seed=2)
        model = train(
            sentences, TrainConfig(dim=16, epochs=2, min_count=1, seed=3, workers=4)
        )
        assert np.all(np.isfinite(model.vectors))
        intra = cosine(model.vector(brake[0]), model.vector(brake[1]))
        inter = cosine(model.vector(brake[0]), model.vector(fuel[0]))
        assert intra > inter

    def test_anchor_coverage(self):
        sentences, _, _ = planted_corpus(300, seed=4)
        model = train(sentences, TrainConfig(dim=8, epochs=1, min_count=50, seed=1))
        assert "A_Brakes" in model.vocab.index
        assert "A_Fuel" in model.vocab.index

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_detected(self):
        sentences, _, _ = planted_corpus(400, seed=6)
        with pytest.raises(TrainingDivergedError, match="learning rate"):
            train(sentences, TrainConfig(dim=8, epochs=3, min_count=1, seed=2,
                                         learning_rate=2e4))

    def test_invalid_config_rejected(self):
        with pytest.raises(ValueError):
            TrainConfig(dim=0).validate()
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=-1.0).validate()
