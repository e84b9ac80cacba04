"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured runtime. Run with `pytest tests/test_acceptance.py -v -s`.

The end-to-end criteria share one pipeline run over the planted-noise
synthetic corpus (4 classes x 2000 sentences, 30% noise, fixed seed); the
determinism criterion executes a second, independent run and compares bytes.
"""

import math
import os
import random
import time

import numpy as np
import pytest

from oracles import (
    best_partition_q,
    brute_encode,
    brute_modularity,
    brute_threshold_edges,
    mc_pip_loss,
)
from semno import artifacts
from semno.cleanse import CleanSentence
from semno.cli import main
from semno.embed import EmbeddingModel, TrainConfig, Vocabulary, sgns_objective
from semno.evaluate import SyntheticSpec, generate_synthetic, score
from semno.filtering import classify_sentence, encode_sentence
from semno.infuse import (
    InfusionRng,
    infuse_sentence,
    infusion_frequency,
    is_anchor,
    strip_anchors,
)
from semno.pipdim import SignalSpectrum, pip_loss_curve
from semno.semgraph import (
    AnchoredCommunitySet,
    Community,
    SemanticGraph,
    build_graph,
    louvain,
    modularity,
)

MASTER_SEED = 20240711

CONFIG_TEMPLATE = """
input = {base}/corpus.csv
class_col = Component
text_col = Ticket Text
workdir = {workdir}
seed = {seed}
threads = 1
run_pip = false
figures = true
# embedding
dim = 100
window = 5
negatives = 5
epochs = 5
learning_rate = 0.025
subsample = 1e-3
min_count = 5
# graph; the synthetic corpus has no sub-community structure, so the
# recursion floor must sit above embedding-noise modularity (~0.1)
theta = 0.6
max_depth = 3
min_members = 3
q_gain_floor = 0.2
# synthetic corpus (fixed by the acceptance setup)
synth_classes = 4
synth_topic_words = 50
synth_noise_words = 100
synth_sentences_per_class = 2000
synth_noise_ratio = 0.3
synth_len_min = 6
synth_len_max = 12
synth_sentences_per_doc = 5
"""

RUN_ARTIFACTS = (
    "cleansed.tsv", "infused.tsv", "model.txt", "graph.tsv",
    "communities.tsv", "verdicts.tsv", "filtered.tsv", "summary.csv",
)


def announce(criterion, elapsed, limit, detail=""):
    suffix = f" — {detail}" if detail else ""
    print(f"\n[acceptance] criterion {criterion}: PASS in {elapsed:.2f}s "
          f"(limit {limit:.0f}s){suffix}")
    assert elapsed < limit


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    workdir = base / "run_a"
    conf = base / "semno.conf"
    conf.write_text(
        CONFIG_TEMPLATE.format(base=base, workdir=workdir, seed=MASTER_SEED)
    )
    start = time.perf_counter()
    assert main(["synth", "--config", str(conf)]) == 0
    assert main(["run-all", "--config", str(conf)]) == 0
    elapsed = time.perf_counter() - start
    return {"base": base, "conf": conf, "workdir": workdir, "elapsed": elapsed}


def synthetic_truth():
    """The generator spec matching the acceptance config, for vocab/truth."""
    from semno.config import PipelineConfig

    seed = PipelineConfig(seed=MASTER_SEED).stage_seed("synth")
    return generate_synthetic(
        SyntheticSpec(
            classes=4, topic_words=50, noise_words=100,
            sentences_per_class=2000, noise_ratio=0.3, length_range=(6, 12),
            sentences_per_doc=5, seed=seed,
        )
    )


def test_criterion_01_infusion_formula():
    start = time.perf_counter()
    for length, expected in [
        (1, 0), (2, 1), (3, 1), (4, 1), (8, 2),
        (10, 2), (16, 2), (17, 3), (1024, 5),
    ]:
        assert infusion_frequency(length) == expected
        assert infusion_frequency(length) == math.ceil(math.log2(length) / 2)
    rng = random.Random(77)
    master = InfusionRng(seed=13)
    for i in range(10_000):
        length = rng.randint(1, 60)
        sentence = CleanSentence(
            f"d{i}", 0, "class-a", tuple(f"w{j}" for j in range(length))
        )
        out = infuse_sentence(sentence, master)
        assert sum(1 for t in out.tokens if is_anchor(t)) == infusion_frequency(length)
        assert strip_anchors(out) == sentence
        positions = out.anchor_positions
        assert all(b - a >= 2 for a, b in zip(positions, positions[1:]))
    announce(1, time.perf_counter() - start, 1.0, "10k random sentences")


def test_criterion_02_modularity_louvain_oracle():
    start = time.perf_counter()
    rng = random.Random(123)
    optimum_hits = 0
    for trial in range(100):
        n = rng.randint(2, 8)
        edges = [
            (i, j, rng.uniform(0.5, 3.0))
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.5
        ]
        graph = SemanticGraph.from_edges([f"n{i}" for i in range(n)], edges)
        result = louvain(graph, seed=trial)
        # Eq.4 evaluation vs the independent double-sum implementation
        blocks = {}
        for node, c in enumerate(result.membership):
            blocks.setdefault(c, []).append(node)
        brute_q = brute_modularity(n, edges, list(blocks.values()))
        assert abs(modularity(graph, result.membership) - brute_q) < 1e-12
        rand_part = [rng.randrange(3) for _ in range(n)]
        rand_blocks = {}
        for node, c in enumerate(rand_part):
            rand_blocks.setdefault(c, []).append(node)
        assert abs(
            modularity(graph, rand_part)
            - brute_modularity(n, edges, list(rand_blocks.values()))
        ) < 1e-12
        if result.q >= best_partition_q(n, edges) - 1e-9:
            optimum_hits += 1
    assert optimum_hits >= 95
    announce(2, time.perf_counter() - start, 30.0, f"optimum on {optimum_hits}/100")


def test_criterion_03_graph_construction_exact():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    for _ in range(6):
        n = int(rng.integers(10, 201))
        vectors = rng.normal(size=(n, 16))
        vocab = Vocabulary(
            words=[f"w{i}" for i in range(n)], counts=np.ones(n), min_count=1
        )
        model = EmbeddingModel(vocab=vocab, vectors=vectors, config=TrainConfig())
        graph = build_graph(model, 0.6)
        expected = brute_threshold_edges(vectors, 0.6)
        got = {(a, b): w for a, b, w in graph.edges()}
        assert set(got) == set(expected)
        for pair, weight in expected.items():
            assert got[pair] == pytest.approx(weight, rel=1e-12)
    # boundary: cosine computes to exactly theta -> strict inequality, no edge
    vocab = Vocabulary(words=["a", "b"], counts=np.ones(2), min_count=1)
    boundary = EmbeddingModel(
        vocab=vocab, vectors=np.array([[1.0, 0.0], [0.6, 0.8]]),
        config=TrainConfig(),
    )
    assert build_graph(boundary, 0.6).edge_count == 0
    announce(3, time.perf_counter() - start, 5.0)


def test_criterion_04_end_to_end_noise_detection(pipeline_run):
    start = time.perf_counter()
    verdicts, _ = artifacts.read_verdicts(str(pipeline_run["workdir"] / "verdicts.tsv"))
    truth = artifacts.read_annotations(str(pipeline_run["workdir"] / "truth.tsv"))
    report = score(verdicts, truth)
    assert len(report.classes) == 4
    summary = []
    for cls in report.classes:
        assert cls.precision is not None and cls.precision >= 0.90, cls
        assert cls.recall is not None and cls.recall >= 0.80, cls
        summary.append(f"{cls.label}: P={cls.precision:.3f} R={cls.recall:.3f}")
    elapsed = pipeline_run["elapsed"] + (time.perf_counter() - start)
    announce(4, elapsed, 600.0, "; ".join(summary))


def test_criterion_05_anchored_community_formation(pipeline_run):
    start = time.perf_counter()
    retained, _ = artifacts.read_communities(
        str(pipeline_run["workdir"] / "communities.tsv")
    )
    anchored = [c for c in retained if c.anchors]
    assert len(anchored) <= len(retained)  # N <= M
    topic_vocab = synthetic_truth().topic_vocab
    details = []
    for label, vocabulary in topic_vocab.items():
        anchor = f"A_{label}"
        homes = [c for c in anchored if anchor in c.members]
        assert homes, f"anchor {anchor} not in any retained level-3 community"
        concepts = set().union(*(c.members - c.anchors for c in homes))
        coverage = len(concepts & set(vocabulary)) / len(vocabulary)
        assert coverage >= 0.5, (label, coverage)
        details.append(f"{label}: {coverage:.0%}")
    announce(
        5, time.perf_counter() - start, 600.0,
        f"N={len(anchored)} M={len(retained)}; coverage " + ", ".join(details),
    )


def test_criterion_06_near_lossless_infusion(pipeline_run):
    start = time.perf_counter()
    assert main(["pip", "--config", str(pipeline_run["conf"])]) == 0
    report_path = pipeline_run["workdir"] / "pip_report.csv"
    _, lines = artifacts.read_lines(str(report_path), expect_stage="pip-report")
    rows = [line.split(",") for line in lines[1:]]
    assert {row[0] for row in rows} == {"0.5", "1.0"}
    details = []
    for row in rows:
        alpha, k_basic, k_infused, delta = row[0], int(row[1]), int(row[2]), int(row[3])
        rel_change = float(row[6])
        assert abs(delta) <= 3, (alpha, k_basic, k_infused)
        assert rel_change < 0.10, (alpha, rel_change)
        details.append(f"alpha={alpha}: k* {k_basic}->{k_infused}, dloss={rel_change:.1%}")
    announce(6, time.perf_counter() - start, 300.0, "; ".join(details))


def test_criterion_07_pip_estimator_internals():
    start = time.perf_counter()
    # sigma = 0: the curve must equal the pure truncation bias exactly
    lam = np.array([9.0, 6.0, 4.0, 2.0, 1.0, 0.0])
    for alpha in (0.5, 1.0):
        curve = pip_loss_curve(SignalSpectrum(lam.copy()), sigma=0.0, alpha=alpha, n=6)
        expected = np.array(
            [np.sqrt(np.sum(lam[k:] ** (4 * alpha))) for k in range(1, 7)]
        )
        assert np.array_equal(curve.total, curve.bias)
        assert curve.total == pytest.approx(expected.tolist(), abs=1e-12)
        assert np.all(np.diff(curve.total) <= 0.0)
        assert curve.k_star == 5  # smallest k reaching zero bias
    # Monte-Carlo oracle ranks the approximation's top-3 candidates identically
    lam = np.array([16.0, 12.0, 6.0, 4.0, 0.8, 0.45, 0.25, 0.12])
    curve = pip_loss_curve(SignalSpectrum(lam.copy()), sigma=0.4, alpha=0.5, n=8)
    top3 = [int(k) for k in np.argsort(curve.total, kind="stable")[:3] + 1]
    mc = mc_pip_loss(lam, alpha=0.5, sigma=0.4, n_draws=50, seed=11)
    mc_values = [mc[k - 1] for k in top3]
    assert mc_values[0] < mc_values[1] < mc_values[2]
    assert int(np.argmin(mc)) + 1 == curve.k_star
    announce(7, time.perf_counter() - start, 60.0, f"top-3 {top3} agreed")


def test_criterion_08_filter_and_scoring_semantics():
    start = time.perf_counter()
    rng = random.Random(4242)
    lexicon = [f"t{i}" for i in range(80)]
    for _ in range(300):
        n_comm = rng.randint(1, 20)
        concept_sets = [
            frozenset(rng.sample(lexicon, rng.randint(1, 10))) for _ in range(n_comm)
        ]
        communities = [
            Community(path=(1, 1, i + 1), members=m | {f"A_c{i}"})
            for i, m in enumerate(concept_sets)
        ]
        ca = AnchoredCommunitySet(communities=communities, total_retained=n_comm)
        tokens = [rng.choice(lexicon) for _ in range(rng.randint(0, 30))]
        sentence = CleanSentence("d0", 0, "class-a", tuple(tokens))
        vector = encode_sentence(sentence, ca)
        assert vector == brute_encode(tokens, concept_sets)
        assert classify_sentence(vector) == (sum(vector) == 0)
    # Eqs. 7-9 on hand-computed fixtures, including undefined denominators
    from semno.filtering import NoiseVerdict
    from semno.evaluate import Annotation

    verdicts = [
        NoiseVerdict("d0", 0, "a", True, (0,), ()),
        NoiseVerdict("d1", 0, "a", True, (0,), ()),
        NoiseVerdict("d2", 0, "a", False, (1,), ()),
        NoiseVerdict("d3", 0, "a", False, (2,), ()),
        NoiseVerdict("d4", 0, "b", False, (1,), ()),
    ]
    annotations = [
        Annotation("d0", 0, 1), Annotation("d1", 0, 0), Annotation("d2", 0, 1),
        Annotation("d3", 0, 0), Annotation("d4", 0, 0),
    ]
    report = score(verdicts, annotations)
    by_label = {c.label: c for c in report.classes}
    # class a: S^ = {d0,d1}, S = {d0,d2}, overlap {d0}
    assert by_label["a"].precision == pytest.approx(0.5)
    assert by_label["a"].recall == pytest.approx(0.5)
    assert by_label["a"].f1 == pytest.approx(0.5)
    assert abs(
        by_label["a"].f1
        - 2 * by_label["a"].precision * by_label["a"].recall
        / (by_label["a"].precision + by_label["a"].recall)
    ) < 1e-12
    # class b: no predictions, no annotated noise -> all undefined
    assert by_label["b"].precision is None
    assert by_label["b"].recall is None
    assert by_label["b"].f1 is None
    announce(8, time.perf_counter() - start, 5.0)


def test_criterion_09_sgns_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(31337)
    h = 1e-6
    worst = 0.0
    for _ in range(10):
        dim = int(rng.integers(4, 16))
        negatives = int(rng.integers(1, 8))
        center = rng.normal(size=dim)
        targets = rng.normal(size=(1 + negatives, dim))
        labels = np.zeros(1 + negatives)
        labels[0] = 1.0
        _, grad_center, grad_targets = sgns_objective(center, targets, labels)
        for i in range(dim):
            step = np.zeros(dim)
            step[i] = h
            lp, _, _ = sgns_objective(center + step, targets, labels)
            lm, _, _ = sgns_objective(center - step, targets, labels)
            numeric = (lp - lm) / (2 * h)
            worst = max(worst, abs(numeric - grad_center[i]) / max(abs(grad_center[i]), 1e-8))
        for r in range(1 + negatives):
            for i in range(dim):
                step = np.zeros((1 + negatives, dim))
                step[r, i] = h
                lp, _, _ = sgns_objective(center, targets + step, labels)
                lm, _, _ = sgns_objective(center, targets - step, labels)
                numeric = (lp - lm) / (2 * h)
                worst = max(
                    worst,
                    abs(numeric - grad_targets[r, i]) / max(abs(grad_targets[r, i]), 1e-8),
                )
    assert worst < 1e-4
    announce(9, time.perf_counter() - start, 5.0, f"max rel err {worst:.2e}")


def test_criterion_10_deterministic_reruns(pipeline_run):
    start = time.perf_counter()
    second = pipeline_run["base"] / "run_b"
    assert main([
        "run-all", "--config", str(pipeline_run["conf"]),
        f"--workdir={second}", "--threads", "1",
    ]) == 0
    for name in RUN_ARTIFACTS:
        a = (pipeline_run["workdir"] / name).read_bytes()
        b = (second / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"
    elapsed = pipeline_run["elapsed"] + (time.perf_counter() - start)
    announce(10, elapsed, 1200.0, f"{len(RUN_ARTIFACTS)} artifacts byte-identical")
