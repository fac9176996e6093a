"""Training loop and the trained neural scorer.

Plain stochastic gradient descent over per-user sequences. With pps on, the
popularity logits are added to the model's scores before the loss, so the
network is trained on deviations from each user's own popularity rather than
the full next-item distribution; the same combination is applied at
inference. Popularity logits are constants and receive no gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from . import metrics
from . import popularity as pop
from .autograd import Tensor
from .errors import TrainingError
from .events import EventLog, UserSequence, user_sequences
from .model import (LOSS_CE, MASK_TOKEN, UNIDIRECTIONAL, ModelConfig,
                    ParameterSet, _forward_tokens, _loss_for,
                    _sample_negatives, _supervision, _wrap, init_parameters)
from .pipeline import GroundTruth


@dataclass
class NeuralScorer:
    """Scores the next item from a user history with the trained weights.

    The model consumes at most l_max recent items; when pps is on, the
    popularity logits come from the user's full training history, matching
    what the personalized-popularity baselines see.
    """

    name: str
    config: ModelConfig
    params: ParameterSet
    n_items: int

    @property
    def head(self) -> str:
        return self.config.head

    def _pps_values(self, items: np.ndarray) -> np.ndarray:
        counts = pop.counts_vector(items, self.n_items)
        if self.config.head == "softmax":
            return pop.softmax_pps_logits(counts, self.config.epsilon).values
        return pop.sigmoid_pps_logits(counts, self.config.epsilon).values

    def _model_scores(self, items: np.ndarray) -> np.ndarray:
        cfg = self.config
        if cfg.direction == UNIDIRECTIONAL:
            window = items[-cfg.l_max:]
            if window.size == 0:
                return np.zeros(self.n_items)
            tokens = window + 1
        else:
            window = items[-(cfg.l_max - 1):] if cfg.l_max > 1 else items[:0]
            tokens = np.concatenate([window + 1,
                                     np.array([MASK_TOKEN], np.int64)])
        pt = _wrap(self.params, False)
        return _forward_tokens(pt, tokens, cfg).data[-1]

    def score(self, history: UserSequence) -> np.ndarray:
        items = np.asarray(history.items, dtype=np.int64)
        scores = self._model_scores(items)
        if self.config.pps == "on":
            scores = scores + self._pps_values(items)
        return scores


def _training_pps_rows(items: np.ndarray, sup_rows: np.ndarray,
                       mask_positions: np.ndarray | None, n_items: int,
                       config: ModelConfig) -> np.ndarray:
    """Constant popularity logits aligned with the supervised score rows."""
    if config.direction == UNIDIRECTIONAL:
        # causal: the row predicting items[i+1] sees the prefix items[0..i]
        matrix = pop.pps_matrix(items, config.epsilon, config.head,
                                n=n_items)
        return matrix.values[sup_rows]
    # masked: one sequence-level vector from the unmasked items, broadcast
    visible = np.delete(items, mask_positions)
    counts = pop.counts_vector(visible, n_items)
    if config.head == "softmax":
        return pop.softmax_pps_logits(counts, config.epsilon).values
    return pop.sigmoid_pps_logits(counts, config.epsilon).values


def _validation_ndcg(scorer: NeuralScorer, validation: GroundTruth,
                     histories: dict[str, UserSequence], k: int = 10) -> float:
    k = min(k, scorer.n_items)
    values = []
    for user in sorted(validation):
        labels = validation[user]
        if not any(v > 0 for v in labels.values()):
            continue
        history = histories.get(user) or UserSequence(user, np.empty(0, np.int64))
        ranking = metrics.rank_items(scorer.score(history), k)
        values.append(metrics.ndcg_at_k(ranking, labels, k))
    return float(np.mean(values)) if values else 0.0


def train(train_log: EventLog, config: ModelConfig,
          validation: GroundTruth | None = None,
          name: str | None = None) -> NeuralScorer:
    """Fit the attention scorer on a training log.

    Runs at most max_epochs of SGD; when validation ground truth is given,
    keeps the weights of the best validation NDCG@10 and stops early after
    early_stop_patience epochs without improvement. Raises TrainingError if
    the loss goes non-finite.
    """
    if len(train_log) == 0:
        raise ValueError("empty train log")
    n_items = len(train_log.catalog)
    rng = np.random.default_rng(config.seed)
    params = init_parameters(n_items, config, rng)
    if name is None:
        tag = "uni" if config.direction == UNIDIRECTIONAL else "masked"
        name = f"neural-{config.loss}-{tag}"
        if config.pps == "on":
            name += "+pps"

    seqs = user_sequences(train_log, config.l_max)
    min_len = 2 if config.direction == UNIDIRECTIONAL else 1
    users = sorted(u for u, s in seqs.items() if len(s) >= min_len)
    histories = user_sequences(train_log, l_max=None) if validation else {}

    best_params = params.copy()
    best_ndcg = -np.inf
    stale = 0
    for epoch in range(config.max_epochs):
        for u in rng.permutation(len(users)):
            items = seqs[users[u]].items
            mask_positions, sup_rows, targets = _supervision(items, config, rng)
            negatives = None
            if config.loss != LOSS_CE:
                negatives = _sample_negatives(targets, n_items,
                                              config.negatives, rng)
            tokens = items + 1
            if mask_positions is not None:
                tokens = tokens.copy()
                tokens[mask_positions] = MASK_TOKEN

            pt = _wrap(params, True)
            scores = ag.gather_rows(_forward_tokens(pt, tokens, config),
                                    sup_rows)
            if config.pps == "on":
                pps = _training_pps_rows(items, sup_rows, mask_positions,
                                         n_items, config)
                scores = ag.add(scores, Tensor(pps))
            loss = _loss_for(scores, config, targets, negatives)
            if not np.isfinite(loss.data):
                raise TrainingError(epoch, f"non-finite loss for user {users[u]}")
            ag.backward(loss)

            lr, wd = config.learning_rate, config.weight_decay
            for pname, arr in params.arrays.items():
                grad = pt[pname].grad
                if grad is None:
                    continue
                if wd:
                    grad = grad + wd * arr
                arr -= lr * grad

        if validation:
            scorer = NeuralScorer(name, config, params, n_items)
            ndcg = _validation_ndcg(scorer, validation, histories)
            if ndcg > best_ndcg:
                best_ndcg = ndcg
                best_params = params.copy()
                stale = 0
            else:
                stale += 1
                if stale >= config.early_stop_patience:
                    break

    final = best_params if validation and np.isfinite(best_ndcg) else params
    return NeuralScorer(name, config, final, n_items)
