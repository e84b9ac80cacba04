import pytest

from semno.evaluate import (
    Annotation,
    SyntheticSpec,
    generate_synthetic,
    sample_for_annotation,
    score,
)
from semno.filtering import NoiseVerdict


def verdict(doc_id, index, label, is_noise):
    vec = (0,) if is_noise else (1,)
    return NoiseVerdict(doc_id, index, label, is_noise, vec, ())


def make_class(label, n, noise_ids):
    verdicts = [
        verdict(f"{label}-{i}", 0, label, i in noise_ids) for i in range(n)
    ]
    return verdicts


class TestScore:
    def test_perfect_agreement(self):
        verdicts = make_class("a", 10, {0, 1, 2})
        annotations = [Annotation(f"a-{i}", 0, 1 if i < 3 else 0) for i in range(10)]
        report = score(verdicts, annotations)
        (cls,) = report.classes
        assert cls.precision == cls.recall == cls.f1 == 1.0

    def test_disjoint_sets(self):
        verdicts = make_class("a", 6, {0, 1})
        annotations = [Annotation(f"a-{i}", 0, 1 if i >= 4 else 0) for i in range(6)]
        (cls,) = score(verdicts, annotations).classes
        assert cls.precision == 0.0 and cls.recall == 0.0
        assert cls.f1 is None  # 0/0 harmonic mean stays undefined

    def test_zero_predictions_undefined_precision(self):
        verdicts = make_class("a", 5, set())
        annotations = [Annotation("a-0", 0, 1)] + [
            Annotation(f"a-{i}", 0, 0) for i in range(1, 5)
        ]
        (cls,) = score(verdicts, annotations).classes
        assert cls.precision is None
        assert cls.recall == 0.0

    def test_published_style_rounding(self):
        # P=97/100, R close to 0.76, F1 rounds to 0.85: same arithmetic as a
        # high-precision class row in a 100-sample evaluation
        n_pred, overlap, n_annot = 1900, 1843, 2425
        verdicts = []
        annotations = []
        for i in range(3000):
            is_pred = i < n_pred
            is_annot = (i < overlap) or (n_pred <= i < n_pred + (n_annot - overlap))
            verdicts.append(verdict(f"d{i}", 0, "fuel-propulsion", is_pred))
            annotations.append(Annotation(f"d{i}", 0, 1 if is_annot else 0))
        (cls,) = score(verdicts, annotations).classes
        assert cls.precision == pytest.approx(0.97)
        assert cls.recall == pytest.approx(0.76)
        assert round(cls.f1, 2) == 0.85

    def test_harmonic_mean_identity(self):
        verdicts = make_class("a", 40, set(range(10)))
        annotations = [Annotation(f"a-{i}", 0, 1 if i in range(5, 20) else 0) for i in range(40)]
        (cls,) = score(verdicts, annotations).classes
        p, r, f1 = cls.precision, cls.recall, cls.f1
        assert abs(f1 - 2 * p * r / (p + r)) < 1e-12

    def test_swap_symmetry(self):
        # swapping predicted and annotated noise sets swaps P and R
        pred_ids, annot_ids = {0, 1, 2, 3}, {2, 3, 4}
        verdicts_a = make_class("a", 8, pred_ids)
        annotations_a = [Annotation(f"a-{i}", 0, int(i in annot_ids)) for i in range(8)]
        verdicts_b = make_class("a", 8, annot_ids)
        annotations_b = [Annotation(f"a-{i}", 0, int(i in pred_ids)) for i in range(8)]
        one = score(verdicts_a, annotations_a).classes[0]
        other = score(verdicts_b, annotations_b).classes[0]
        assert one.precision == other.recall
        assert one.recall == other.precision

    def test_unknown_sentence_listed(self):
        verdicts = make_class("a", 2, set())
        with pytest.raises(ValueError, match="ghost:7"):
            score(verdicts, [Annotation("ghost", 7, 1)])

    def test_macro_average_skips_undefined(self):
        verdicts = make_class("a", 4, {0}) + make_class("b", 4, set())
        annotations = [Annotation(f"a-{i}", 0, int(i == 0)) for i in range(4)]
        annotations += [Annotation(f"b-{i}", 0, 0) for i in range(4)]
        report = score(verdicts, annotations)
        assert report.macro_precision == 1.0  # class b precision undefined, skipped

    def test_restricted_to_annotated_sample(self):
        verdicts = make_class("a", 100, set(range(50)))
        annotations = [Annotation(f"a-{i}", 0, 1) for i in range(10)]
        (cls,) = score(verdicts, annotations).classes
        assert cls.annotated == 10
        assert cls.predicted_noise == 10  # only annotated sentences counted
        assert cls.recall == 1.0

    def test_invalid_tag_rejected(self):
        with pytest.raises(ValueError):
            Annotation("d0", 0, 2)


class TestSampling:
    def test_exact_size_takes_all(self):
        verdicts = make_class("a", 100, set())
        manifest = sample_for_annotation(verdicts, per_class=100, seed=1)
        assert len(manifest.picks["a"]) == 100
        assert [p[0] for p in manifest.picks["a"]] == list(range(100))

    def test_undersized_class_takes_all_with_warning(self, caplog):
        verdicts = make_class("a", 30, set())
        with caplog.at_level("WARNING"):
            manifest = sample_for_annotation(verdicts, per_class=100, seed=1)
        assert len(manifest.picks["a"]) == 30
        assert any("only 30" in r.message for r in caplog.records)

    def test_deterministic(self):
        verdicts = make_class("a", 5000, set())
        one = sample_for_annotation(verdicts, per_class=100, seed=42)
        two = sample_for_annotation(verdicts, per_class=100, seed=42)
        assert one == two

    def test_large_class_unique_in_range(self):
        verdicts = make_class("a", 10_000, set())
        manifest = sample_for_annotation(verdicts, per_class=100, seed=3)
        picks = manifest.picks["a"]
        ordinals = [p[0] for p in picks]
        assert len(picks) == 100
        assert len(set(ordinals)) == 100
        assert all(0 <= o < 10_000 for o in ordinals)
        # gaussian around the midpoint: the bulk lands mid-range
        mid = sum(1 for o in ordinals if 2500 <= o < 7500)
        assert mid > 60

    def test_per_class_grouping(self):
        verdicts = make_class("a", 150, set()) + make_class("b", 120, set())
        manifest = sample_for_annotation(verdicts, per_class=100, seed=5)
        assert set(manifest.picks) == {"a", "b"}
        assert len(manifest.picks["a"]) == len(manifest.picks["b"]) == 100


class TestSynthetic:
    def test_exact_noise_counts(self):
        spec = SyntheticSpec(
            classes=2, topic_words=10, noise_words=20,
            sentences_per_class=1000, noise_ratio=0.3, length_range=(4, 8),
            sentences_per_doc=5, seed=0,
        )
        result = generate_synthetic(spec)
        by_label = {}
        doc_label = {d.id: d.label for d in result.corpus.documents}
        for ann in result.truth:
            by_label.setdefault(doc_label[ann.doc_id], []).append(ann.tag)
        for tags in by_label.values():
            assert sum(tags) == 300
            assert len(tags) == 1000

    def test_vocabularies_disjoint(self):
        spec = SyntheticSpec(classes=4, topic_words=12, noise_words=9,
                             sentences_per_class=20, seed=1)
        result = generate_synthetic(spec)
        pools = list(result.topic_vocab.values()) + [result.noise_vocab]
        seen = set()
        for pool in pools:
            assert not (set(pool) & seen)
            seen |= set(pool)

    def test_noise_sentences_use_noise_vocab_only(self):
        spec = SyntheticSpec(classes=2, topic_words=5, noise_words=5,
                             sentences_per_class=50, seed=2)
        result = generate_synthetic(spec)
        noise_vocab = set(result.noise_vocab)
        tags = {(a.doc_id, a.index): a.tag for a in result.truth}
        for doc in result.corpus.documents:
            for s in doc.sentences:
                words = set(s.text.rstrip(".").split())
                if tags[(doc.id, s.index)] == 1:
                    assert words <= noise_vocab
                else:
                    assert words <= set(result.topic_vocab[doc.label])

    def test_deterministic(self):
        spec = SyntheticSpec(classes=2, topic_words=5, noise_words=5,
                             sentences_per_class=30, seed=9)
        a, b = generate_synthetic(spec), generate_synthetic(spec)
        assert [d.raw_text for d in a.corpus.documents] == [
            d.raw_text for d in b.corpus.documents
        ]
        assert a.truth == b.truth

    def test_invalid_spec_rejected(self):
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticSpec(noise_ratio=1.5))
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticSpec(classes=0))
        with pytest.raises(ValueError):
            generate_synthetic(SyntheticSpec(length_range=(5, 2)))
