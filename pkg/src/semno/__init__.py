"""semno: unsupervised semantic-noise filtering for categorical corpora.

Pipeline: cleanse -> infuse (class anchors) -> embed (skip-gram/negative
sampling) -> semantic graph + recursive Louvain -> anchored communities ->
per-sentence noise verdicts. A PIP-loss analysis checks that anchor
infusion leaves the corpus's optimal embedding dimensionality essentially
unchanged.
"""

from semno.cleanse import CleanSentence, StopwordList, clean_sentence, load_stopwords
from semno.corpusio import (
    Corpus,
    Document,
    RawSentence,
    load_artifact,
    load_corpus,
    persist_artifact,
    split_sentences,
)
from semno.embed import EmbeddingModel, TrainConfig, Vocabulary, build_vocab, cosine, train
from semno.errors import (
    ArtifactError,
    ConfigError,
    NoAnchoredCommunitiesError,
    SemnoError,
    TrainingDivergedError,
)
from semno.evaluate import (
    Annotation,
    SyntheticSpec,
    generate_synthetic,
    sample_for_annotation,
    score,
)
from semno.filtering import (
    FilterResult,
    NoiseVerdict,
    classify_sentence,
    encode_sentence,
    filter_corpus,
)
from semno.infuse import (
    InfusedSentence,
    InfusionRng,
    infuse_corpus,
    infuse_sentence,
    infusion_frequency,
    strip_anchors,
)
from semno.pipdim import (
    PipLossCurve,
    build_ppmi,
    compare_corpora,
    estimate_sigma,
    estimate_spectrum,
    pip_loss_curve,
)
from semno.semgraph import (
    AnchoredCommunitySet,
    Community,
    CommunityHierarchy,
    SemanticGraph,
    build_graph,
    louvain,
    modularity,
    recursive_cluster,
    select_anchored,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
