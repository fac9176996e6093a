"""Personalized popularity: counts, smoothed probabilities, and logit injection.

A user's interaction counts over their history induce a probability that the
next item is a repeat. Two logit encodings of that probability exist so it can
be added to a model's raw scores and recovered exactly by the model's own
probability head:

* softmax-compatible:  y_j = ln((c_j + eps) / (max(C) + eps))
* sigmoid-compatible:  y_j = ln(p_j / (1 - p_j))   with p the smoothed
  popularity probability

Smaller eps sharpens popularity's influence on combined scores; as eps grows
the probabilities flatten toward uniform and the injected logits stop moving
the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

SOFTMAX = "softmax"
SIGMOID = "sigmoid"
MODES = (SOFTMAX, SIGMOID)

DEFAULT_EPSILON = 0.01


@dataclass(frozen=True)
class PpsLogits:
    """Per-item popularity logits plus the head convention they target."""

    values: np.ndarray  # (N,) finite float64
    mode: str
    epsilon: float


@dataclass(frozen=True)
class PpsMatrix:
    """Per-position popularity logits; row i derives from the prefix s_1..s_i."""

    values: np.ndarray  # (L, N) float64
    mode: str
    epsilon: float


def counts_vector(seq, n: int) -> np.ndarray:
    """Occurrence counts of each catalog index within a sequence prefix."""
    items = np.asarray(getattr(seq, "items", seq), dtype=np.int64)
    if items.size and (items.min() < 0 or items.max() >= n):
        raise ValueError(f"item index out of range for catalog size {n}")
    return np.bincount(items, minlength=n).astype(np.int64)


def pp_probability(counts) -> np.ndarray:
    """Unsmoothed popularity probability c_j / sum(c).

    Numerator and denominator are divided by max(C) first to keep the ratio
    well-scaled for very long histories.
    """
    c = np.asarray(counts, dtype=np.float64)
    cmax = c.max(initial=0.0)
    if cmax <= 0.0:
        raise ValueError("all-zero counts: probability undefined, "
                         "use the smoothed variant")
    scaled = c / cmax
    return scaled / scaled.sum()


def smoothed_pp_probability(counts, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Eps-smoothed popularity probability; defined even for all-zero counts."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    c = np.asarray(counts, dtype=np.float64)
    scaled = (c + epsilon) / (c.max(initial=0.0) + epsilon)
    return scaled / scaled.sum()


def softmax_pps_logits(counts, epsilon: float = DEFAULT_EPSILON) -> PpsLogits:
    """Softmax-compatible logits; all entries <= 0, zero at argmax counts."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    c = np.asarray(counts, dtype=np.float64)
    y = np.log((c + epsilon) / (c.max(initial=0.0) + epsilon))
    return PpsLogits(y, SOFTMAX, epsilon)


def sigmoid_pps_logits(counts, epsilon: float = DEFAULT_EPSILON) -> PpsLogits:
    """Sigmoid-compatible logits ln(p/(1-p)) of the smoothed probability.

    The odds ratio is formed directly from the scaled counts, which is the
    same quantity with one rounding step fewer than log(p) - log1p(-p).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    c = np.asarray(counts, dtype=np.float64)
    if c.shape[-1] < 2:
        raise ValueError("sigmoid-compatible logits need a catalog of >= 2 items")
    scaled = (c + epsilon) / (c.max(initial=0.0) + epsilon)
    total = scaled.sum()
    y = np.log(scaled / (total - scaled))
    return PpsLogits(y, SIGMOID, epsilon)


def pps_matrix(seq, epsilon: float, mode: str, n: int | None = None) -> PpsMatrix:
    """Causal per-position logits: row i never reads items after position i.

    n defaults to the sequence's own l_max-independent catalog size and must
    be given for empty sequences.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    items = np.asarray(getattr(seq, "items", seq), dtype=np.int64)
    if n is None:
        if items.size == 0:
            raise ValueError("catalog size n required for an empty sequence")
        n = int(items.max()) + 1
    if items.size and (items.min() < 0 or items.max() >= n):
        raise ValueError(f"item index out of range for catalog size {n}")
    if mode == SIGMOID and n < 2:
        raise ValueError("sigmoid-compatible logits need a catalog of >= 2 items")
    if items.size == 0:
        return PpsMatrix(np.empty((0, n), np.float64), mode, epsilon)
    rows = kernels.pps_rows(items, n, epsilon, mode == SIGMOID)
    return PpsMatrix(rows, mode, epsilon)


def combine_scores(model_scores: np.ndarray, pps: PpsLogits | PpsMatrix,
                   head: str | None = None) -> np.ndarray:
    """Add popularity logits to model scores.

    A PpsLogits vector broadcasts across all positions of a score matrix; a
    PpsMatrix must match the scores shape exactly. When the model's head is
    given, the logits' mode must match it.
    """
    scores = np.asarray(model_scores, dtype=np.float64)
    if head is not None and pps.mode != head:
        raise ValueError(f"{pps.mode}-compatible logits cannot feed a {head} head")
    if isinstance(pps, PpsMatrix):
        if scores.shape != pps.values.shape:
            raise ValueError(f"score shape {scores.shape} != "
                             f"pps shape {pps.values.shape}")
        return scores + pps.values
    if scores.shape[-1] != pps.values.shape[0]:
        raise ValueError(f"score width {scores.shape[-1]} != "
                         f"catalog size {pps.values.shape[0]}")
    return scores + pps.values


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax."""
    x = np.asarray(x, dtype=np.float64)
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable elementwise logistic function."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out
