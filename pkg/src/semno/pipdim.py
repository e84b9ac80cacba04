"""PIP-loss dimensionality selection over PPMI spectra.

Estimates, for every candidate dimensionality k, the expected pairwise
inner-product loss between an oracle embedding and a rank-k embedding
trained on a noisy signal matrix, as the sum of a truncation-bias term and
two noise-variance terms. The signal matrix is the corpus PPMI matrix; the
per-entry noise level comes from a half-corpus split. Comparing the curve's
argmin k* between the basic and the anchor-infused corpus quantifies how
lossless infusion is.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

DEGENERATE_GAP = 1e-12


@dataclass
class SignalSpectrum:
    values: np.ndarray                # non-increasing, non-negative
    kind: str = "ppmi"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if np.any(values < -1e-12):
            raise ValueError("singular values must be non-negative")
        if np.any(np.diff(values) > 1e-12):
            raise ValueError("spectrum must be non-increasing")
        self.values = np.maximum(values, 0.0)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class NoiseEstimate:
    sigma: float
    method: str = "half-split-ppmi"

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass
class PipLossCurve:
    alpha: float
    sigma: float
    n: int
    bias: np.ndarray                  # truncation term, index 0 is k=1
    variance1: np.ndarray             # global noise term
    variance2: np.ndarray             # spectral-gap rotation term
    total: np.ndarray
    degenerate_pairs: int = 0         # gap pairs excluded as unidentifiable

    @property
    def k_star(self) -> int:
        return int(np.argmin(self.total)) + 1

    @property
    def loss_at_k_star(self) -> float:
        return float(self.total[self.k_star - 1])


def _cooccurrence(token_lists, index: dict[str, int], window: int) -> np.ndarray:
    """Symmetric co-occurrence counts over ordered in-window pairs."""
    counts = np.zeros((len(index), len(index)))
    for tokens in token_lists:
        ids = [index.get(t) for t in tokens]
        for i, a in enumerate(ids):
            if a is None:
                continue
            for j in range(max(0, i - window), i):
                b = ids[j]
                if b is None:
                    continue
                counts[a, b] += 1.0
                counts[b, a] += 1.0
    return counts


def _ppmi(counts: np.ndarray) -> np.ndarray:
    """Positive PMI with marginals taken from the count matrix itself."""
    total = counts.sum()
    if total == 0.0:
        return np.zeros_like(counts)
    marginals = counts.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = counts * total / np.outer(marginals, marginals)
        pmi = np.log(ratio)
    pmi[~np.isfinite(pmi)] = 0.0
    return np.maximum(pmi, 0.0)


def _top_vocabulary(token_lists, max_vocab: int) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tokens in token_lists:
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    ranked = sorted(counts, key=lambda w: (-counts[w], w))[:max_vocab]
    return {w: i for i, w in enumerate(ranked)}


def build_ppmi(
    sentences, window: int = 5, max_vocab: int = 2000
) -> tuple[np.ndarray, list[str]]:
    """PPMI matrix over the top-`max_vocab` words of the corpus."""
    token_lists = [s.tokens for s in sentences]
    if not token_lists:
        raise ValueError("corpus is empty")
    index = _top_vocabulary(token_lists, max_vocab)
    if len(index) < 2:
        raise ValueError("PPMI needs a vocabulary of at least 2 words")
    counts = _cooccurrence(token_lists, index, window)
    words = sorted(index, key=index.get)
    return _ppmi(counts), words


def estimate_spectrum(matrix: np.ndarray, kind: str = "ppmi") -> SignalSpectrum:
    """Singular values of a symmetric signal matrix, non-increasing."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("signal matrix has non-finite entries")
    if matrix.shape[0] != matrix.shape[1] or not np.allclose(
        matrix, matrix.T, atol=1e-10
    ):
        raise ValueError("signal matrix must be symmetric")
    values = np.linalg.svd(matrix, compute_uv=False)
    return SignalSpectrum(values=values, kind=kind)


def estimate_sigma(
    sentences, window: int = 5, max_vocab: int = 2000, seed: int = 0
) -> NoiseEstimate:
    """Per-entry noise scale from a random half-split of the corpus.

    Both halves are counted over the full-corpus vocabulary so the two PPMI
    matrices align entry-wise; sigma is their half-difference Frobenius norm
    normalized by the entry count.
    """
    token_lists = [s.tokens for s in sentences]
    if len(token_lists) < 2:
        raise ValueError("corpus too small to split into halves")
    index = _top_vocabulary(token_lists, max_vocab)
    if len(index) < 2:
        raise ValueError("PPMI needs a vocabulary of at least 2 words")
    order = list(range(len(token_lists)))
    random.Random(seed).shuffle(order)
    half = len(order) // 2
    first = [token_lists[i] for i in order[:half]]
    second = [token_lists[i] for i in order[half:]]
    m1 = _ppmi(_cooccurrence(first, index, window))
    m2 = _ppmi(_cooccurrence(second, index, window))
    diff = float(np.linalg.norm(m1 - m2))
    sigma = diff / (2.0 * np.sqrt(m1.size))
    return NoiseEstimate(sigma=sigma)


def _gap_sums(values: np.ndarray) -> tuple[np.ndarray, int]:
    """G[i] = sum over pairs r <= i < s of (lambda_r - lambda_s)^-2.

    Pairs with a degenerate gap (equal singular values) are excluded: the
    corresponding subspace rotation is unidentifiable and the perturbation
    term does not apply. The running column sums carry[s] = sum_{r<=i} P(r,s)
    keep this O(d^2) using only additions of non-negative terms, so no
    cancellation can drive G negative.
    """
    d = len(values)
    g = np.zeros(d)
    carry = np.zeros(d)
    skipped = 0
    for i in range(d - 1):
        gaps = values[i] - values[i + 1 :]
        mask = np.abs(gaps) >= DEGENERATE_GAP
        skipped += int((~mask).sum())
        p = np.zeros(gaps.size)
        p[mask] = gaps[mask] ** -2.0
        carry[i + 1 :] += p
        g[i] = carry[i + 1 :].sum()
    return g, skipped


def pip_loss_curve(
    spectrum: SignalSpectrum, sigma: float, alpha: float, n: int
) -> PipLossCurve:
    """Evaluate the three-term loss estimate for every k in 1..d.

    Ties in the argmin break toward smaller k. For alpha < 0.5 the global
    noise term's negative power is undefined on zero singular values; such
    directions are dropped from that sum.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    lam = spectrum.values
    d = len(lam)
    # truncation bias: sqrt of the tail sum of lambda^(4*alpha)
    pow4a = lam ** (4.0 * alpha)
    tail = np.concatenate([np.cumsum(pow4a[::-1])[::-1][1:], [0.0]])
    bias = np.sqrt(np.maximum(tail, 0.0))
    # global noise: 2*sqrt(2n)*alpha*sigma*sqrt(head sum of lambda^(4a-2))
    exponent = 4.0 * alpha - 2.0
    if exponent < 0.0:
        safe = np.where(lam > DEGENERATE_GAP, lam, np.inf)
        head_terms = safe ** exponent
    else:
        head_terms = lam ** exponent
    variance1 = 2.0 * np.sqrt(2.0 * n) * alpha * sigma * np.sqrt(
        np.cumsum(head_terms)
    )
    # spectral-gap rotation: sqrt(2)*sigma*sum_i gap_i * sqrt(G_i)
    gaps, skipped = _gap_sums(lam)
    pow2a = lam ** (2.0 * alpha)
    pow2a_next = np.concatenate([pow2a[1:], [0.0]])
    increments = (pow2a - pow2a_next) * np.sqrt(gaps)
    variance2 = np.sqrt(2.0) * sigma * np.cumsum(increments)
    total = bias + variance1 + variance2
    return PipLossCurve(
        alpha=alpha,
        sigma=sigma,
        n=n,
        bias=bias,
        variance1=variance1,
        variance2=variance2,
        total=total,
        degenerate_pairs=skipped,
    )


@dataclass
class CorpusAnalysis:
    spectrum: SignalSpectrum
    noise: NoiseEstimate
    curve: PipLossCurve


def analyze_corpus(
    sentences,
    alpha: float,
    window: int = 5,
    max_vocab: int = 2000,
    seed: int = 0,
) -> CorpusAnalysis:
    """PPMI -> spectrum -> sigma -> loss curve for one corpus."""
    matrix, _ = build_ppmi(sentences, window=window, max_vocab=max_vocab)
    spectrum = estimate_spectrum(matrix)
    noise = estimate_sigma(sentences, window=window, max_vocab=max_vocab, seed=seed)
    curve = pip_loss_curve(spectrum, noise.sigma, alpha, n=matrix.shape[0])
    return CorpusAnalysis(spectrum=spectrum, noise=noise, curve=curve)


@dataclass
class ComparisonEntry:
    alpha: float
    basic: CorpusAnalysis
    infused: CorpusAnalysis

    @property
    def delta_k(self) -> int:
        return self.infused.curve.k_star - self.basic.curve.k_star

    @property
    def relative_loss_change(self) -> float:
        base = self.basic.curve.loss_at_k_star
        if base == 0.0:
            return 0.0 if self.infused.curve.loss_at_k_star == 0.0 else float("inf")
        return abs(self.infused.curve.loss_at_k_star - base) / base


@dataclass
class ComparisonReport:
    entries: list[ComparisonEntry] = field(default_factory=list)


def compare_corpora(
    basic_sentences,
    infused_sentences,
    alphas=(0.5, 1.0),
    window: int = 5,
    max_vocab: int = 2000,
    seed: int = 0,
) -> ComparisonReport:
    """Side-by-side k* and loss curves for the basic vs infused corpus.

    The two corpora are estimated independently (their vocabularies differ
    by the anchor tokens; no alignment is needed).
    """
    report = ComparisonReport()
    for alpha in alphas:
        report.entries.append(
            ComparisonEntry(
                alpha=alpha,
                basic=analyze_corpus(
                    basic_sentences, alpha, window=window,
                    max_vocab=max_vocab, seed=seed,
                ),
                infused=analyze_corpus(
                    infused_sentences, alpha, window=window,
                    max_vocab=max_vocab, seed=seed,
                ),
            )
        )
    return report
