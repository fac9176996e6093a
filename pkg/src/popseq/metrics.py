"""Graded-relevance NDCG evaluation, paired significance tests, reports.

NDCG uses the exponential gain (2^label - 1) by default; a linear gain is
available behind the ``gain`` switch. Rankings never exclude items the user
has already consumed. Pairwise scorer comparisons run a classic paired t-test
with Bonferroni correction over every (pair, cutoff) test in one report.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import stats as sps

from .baselines import Scorer
from .errors import MetricError
from .events import UserSequence, user_sequences
from .pipeline import DatasetSplit

GAIN_EXPONENTIAL = "exp"
GAIN_LINEAR = "linear"

DEFAULT_CUTOFFS = (5, 10, 40, 100)


def _gain(labels: np.ndarray, gain: str) -> np.ndarray:
    if gain == GAIN_EXPONENTIAL:
        return np.exp2(labels) - 1.0
    if gain == GAIN_LINEAR:
        return labels.astype(np.float64)
    raise ValueError(f"unknown gain {gain!r}")


def rank_items(scores: np.ndarray, k: int) -> np.ndarray:
    """Top-k item indices by descending score; ties broken by ascending index."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 1 <= k <= scores.shape[0]:
        raise ValueError(f"k must lie in [1, {scores.shape[0]}], got {k}")
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    return np.argsort(-scores, kind="stable")[:k]


def ndcg_at_k(ranking: np.ndarray, labels: Mapping[int, int], k: int,
              gain: str = GAIN_EXPONENTIAL) -> float:
    """Normalized DCG of a ranking against graded labels in {0, 1, 2}."""
    ranking = np.asarray(ranking, dtype=np.int64)
    if k < 1 or k > ranking.shape[0]:
        raise ValueError(f"k must lie in [1, {ranking.shape[0]}]")
    if not labels or max(labels.values()) <= 0:
        raise MetricError("NDCG undefined without a positive label")
    at_ranks = np.array([labels.get(int(i), 0) for i in ranking[:k]])
    discounts = 1.0 / np.log2(np.arange(2, k + 2))
    dcg = float(_gain(at_ranks, gain) @ discounts)
    ideal = np.sort(np.fromiter(labels.values(), dtype=np.int64))[::-1][:k]
    idcg = float(_gain(ideal, gain) @ discounts[:ideal.shape[0]])
    return dcg / idcg


@dataclass(frozen=True)
class EvaluationResult:
    """Per-user NDCG at every cutoff for one scorer."""

    scorer: str
    cutoffs: tuple[int, ...]
    users: tuple[str, ...]
    ndcg: dict[int, np.ndarray]  # cutoff -> values aligned with users

    def mean(self, k: int) -> float:
        return float(self.ndcg[k].mean())


def evaluate(scorer: Scorer, split: DatasetSplit,
             cutoffs: Sequence[int] = DEFAULT_CUTOFFS,
             gain: str = GAIN_EXPONENTIAL) -> EvaluationResult:
    """Score every test user from their training history and compute NDCG.

    Users without a positively labeled test item are skipped (the metric is
    undefined for them).
    """
    catalog_size = len(split.train.catalog)
    if scorer.n_items != catalog_size:
        raise ValueError(f"scorer covers {scorer.n_items} items, "
                         f"catalog holds {catalog_size}")
    cutoffs = tuple(int(k) for k in cutoffs)
    if max(cutoffs) > catalog_size:
        raise ValueError("cutoff exceeds catalog size")
    if not split.test:
        raise MetricError("split has no test ground truth")

    histories = user_sequences(split.train, l_max=None)
    users = [u for u in sorted(split.test)
             if any(v > 0 for v in split.test[u].values())]
    if not users:
        raise MetricError("no test user has a positive label")

    values: dict[int, list[float]] = {k: [] for k in cutoffs}
    kmax = max(cutoffs)
    for user in users:
        history = histories.get(user)
        if history is None:
            history = UserSequence(user, np.empty(0, np.int64))
        ranking = rank_items(scorer.score(history), kmax)
        for k in cutoffs:
            values[k].append(ndcg_at_k(ranking, split.test[user], k, gain))
    return EvaluationResult(scorer.name, cutoffs, tuple(users),
                            {k: np.asarray(v) for k, v in values.items()})


class TTestResult(NamedTuple):
    statistic: float
    pvalue: float
    degenerate: bool = False


def paired_t_test(a: np.ndarray, b: np.ndarray) -> TTestResult:
    """Classic paired t-test on aligned per-user metric vectors.

    All-zero differences give p=1.0; a constant nonzero difference has zero
    variance and is reported as p=0.0 with the degenerate flag set.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("inputs must be aligned 1-D vectors")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least two paired observations")
    diff = a - b
    sd = diff.std(ddof=1)
    md = diff.mean()
    if sd == 0.0:
        if md == 0.0:
            return TTestResult(0.0, 1.0)
        return TTestResult(np.inf if md > 0 else -np.inf, 0.0, degenerate=True)
    t = md / (sd / np.sqrt(n))
    p = 2.0 * float(sps.t.sf(abs(t), n - 1))
    return TTestResult(float(t), p)


def bonferroni(p: float, family_size: int) -> float:
    """Adjusted p-value min(1, family_size * p)."""
    if family_size < 1:
        raise ValueError("family size must be positive")
    return min(1.0, family_size * p)


@dataclass(frozen=True)
class Comparison:
    target: str
    baseline: str
    cutoff: int
    target_mean: float
    base_mean: float
    improvement_pct: float
    statistic: float
    p_raw: float
    p_adj: float
    significant: bool
    degenerate: bool


@dataclass(frozen=True)
class MetricReport:
    """Aggregate table plus pairwise significance results."""

    cutoffs: tuple[int, ...]
    scorers: tuple[str, ...]
    users: tuple[str, ...]
    means: dict[tuple[str, int], float]
    comparisons: tuple[Comparison, ...]
    family_size: int
    alpha: float

    def comparison_for(self, target: str, cutoff: int) -> Comparison | None:
        for c in self.comparisons:
            if c.target == target and c.cutoff == cutoff:
                return c
        return None

    def to_markdown(self) -> str:
        lines = [
            "# Scorer comparison",
            "",
            f"{len(self.users)} evaluated users; Bonferroni family of "
            f"{self.family_size} tests at alpha={self.alpha:g}. Means marked "
            "with ** are column-best, _ second best; a dagger marks a "
            "significant difference against the paired baseline, with the "
            "relative improvement in parentheses.",
            "",
            "| Model | " + " | ".join(f"NDCG@{k}" for k in self.cutoffs) + " |",
            "|---" * (len(self.cutoffs) + 1) + "|",
        ]
        ranked = {k: sorted((self.means[(s, k)] for s in self.scorers),
                            reverse=True) for k in self.cutoffs}
        for name in self.scorers:
            cells = []
            for k in self.cutoffs:
                value = self.means[(name, k)]
                cell = f"{value:.4f}"
                if value == ranked[k][0]:
                    cell = f"**{cell}**"
                elif len(ranked[k]) > 1 and value == ranked[k][1]:
                    cell = f"_{cell}_"
                comp = self.comparison_for(name, k)
                if comp is not None:
                    if comp.significant:
                        cell += "†"
                    if np.isfinite(comp.improvement_pct):
                        cell += f" ({comp.improvement_pct:+.1f}%)"
                cells.append(cell)
            lines.append("| " + " | ".join([name] + cells) + " |")
        lines.append("")
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("scorer", "cutoff", "mean_ndcg", "comparison",
                         "base_mean", "improvement_pct", "t", "p_raw",
                         "p_adj", "significant"))
        for name in self.scorers:
            for k in self.cutoffs:
                comp = self.comparison_for(name, k)
                if comp is None:
                    row = (name, k, f"{self.means[(name, k)]:.6f}",
                           "", "", "", "", "", "", "")
                else:
                    row = (name, k, f"{self.means[(name, k)]:.6f}",
                           comp.baseline, f"{comp.base_mean:.6f}",
                           f"{comp.improvement_pct:.2f}",
                           f"{comp.statistic:.4f}", f"{comp.p_raw:.6g}",
                           f"{comp.p_adj:.6g}",
                           "true" if comp.significant else "false")
                writer.writerow(row)
        return buf.getvalue()


def build_report(evaluations: Sequence[EvaluationResult],
                 plan: Sequence[tuple[str, str]] = (),
                 alpha: float = 0.05) -> MetricReport:
    """Aggregate evaluations and run the planned pairwise comparisons.

    The Bonferroni family covers every (pair, cutoff) test issued by this
    invocation.
    """
    if not evaluations:
        raise ValueError("no evaluations given")
    by_name = {e.scorer: e for e in evaluations}
    if len(by_name) != len(evaluations):
        raise ValueError("duplicate scorer names")
    first = evaluations[0]
    for e in evaluations[1:]:
        if e.users != first.users:
            raise ValueError(f"user sets differ between {first.scorer} "
                             f"and {e.scorer}")
        if e.cutoffs != first.cutoffs:
            raise ValueError("cutoff sets differ between evaluations")
    for target, base in plan:
        if target not in by_name or base not in by_name:
            raise ValueError(f"comparison ({target}, {base}) references an "
                             "unknown scorer")

    means = {(e.scorer, k): e.mean(k) for e in evaluations for k in first.cutoffs}
    family = max(1, len(plan) * len(first.cutoffs))
    comparisons = []
    for target, base in plan:
        for k in first.cutoffs:
            result = paired_t_test(by_name[target].ndcg[k],
                                   by_name[base].ndcg[k])
            p_adj = bonferroni(result.pvalue, family)
            mt, mb = means[(target, k)], means[(base, k)]
            pct = (mt - mb) / mb * 100.0 if mb > 0 else np.inf
            comparisons.append(Comparison(
                target, base, k, mt, mb, pct, result.statistic,
                result.pvalue, p_adj, p_adj < alpha, result.degenerate))
    return MetricReport(first.cutoffs, tuple(e.scorer for e in evaluations),
                        first.users, means, tuple(comparisons),
                        family, alpha)
