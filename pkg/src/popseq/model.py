"""A small trainable attention scorer with both attention directions.

The architecture is intentionally minimal: item plus positional embeddings,
one or more attention blocks with residual feed-forward layers, and a tied
output projection onto the item embedding table. Token 0 of the embedding
table is reserved for padding/masking; item index j maps to token j + 1 and
the output projection scores tokens 1..N, so the logit width always equals
the catalog size.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .errors import GradientCheckError

UNIDIRECTIONAL = "unidirectional"
MASKED_BIDIRECTIONAL = "masked-bidirectional"
DIRECTIONS = (UNIDIRECTIONAL, MASKED_BIDIRECTIONAL)

LOSS_CE = "ce"
LOSS_BCE = "bce"
LOSS_GBCE = "gbce"
LOSSES = (LOSS_CE, LOSS_BCE, LOSS_GBCE)

MASK_TOKEN = 0
NEG_INF = -1e30


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 32
    heads: int = 2
    blocks: int = 1
    l_max: int = 150
    direction: str = UNIDIRECTIONAL
    loss: str = LOSS_BCE
    negatives_per_positive: int | None = None
    beta: float = 1.0
    mask_probability: float = 0.2
    pps: str = "off"
    epsilon: float = 0.01
    learning_rate: float = 0.05
    weight_decay: float = 0.0
    max_epochs: int = 50
    early_stop_patience: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}")
        if self.pps not in ("off", "on"):
            raise ValueError("pps must be 'off' or 'on'")
        for name in ("embed_dim", "heads", "blocks", "l_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.embed_dim % self.heads:
            raise ValueError("embed_dim must be divisible by heads")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("beta must lie in (0, 1]")
        if not 0.0 < self.mask_probability < 1.0:
            raise ValueError("mask_probability must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.negatives_per_positive is not None and self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")

    @property
    def head(self) -> str:
        """Probability head implied by the loss: ce uses softmax, else sigmoid."""
        return "softmax" if self.loss == LOSS_CE else "sigmoid"

    @property
    def negatives(self) -> int:
        if self.loss == LOSS_CE:
            return 0
        if self.negatives_per_positive is not None:
            return self.negatives_per_positive
        return 1 if self.loss == LOSS_BCE else 256


@dataclass
class ParameterSet:
    """Named weight arrays; the canonical name order is creation order."""

    arrays: dict[str, np.ndarray]

    @property
    def n_items(self) -> int:
        return self.arrays["item_emb"].shape[0] - 1

    @property
    def embed_dim(self) -> int:
        return self.arrays["item_emb"].shape[1]

    def copy(self) -> "ParameterSet":
        return ParameterSet({k: v.copy() for k, v in self.arrays.items()})

    def all_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.arrays.values())


def init_parameters(n_items: int, config: ModelConfig,
                    rng: np.random.Generator) -> ParameterSet:
    """Seeded uniform init in [-0.5/sqrt(d), 0.5/sqrt(d)], zero biases."""
    if n_items < 2:
        raise ValueError("catalog must hold at least 2 items")
    d = config.embed_dim
    bound = 0.5 / np.sqrt(d)

    def uniform(*shape):
        return rng.uniform(-bound, bound, size=shape)

    arrays: dict[str, np.ndarray] = {
        "item_emb": uniform(n_items + 1, d),
        "pos_emb": uniform(config.l_max, d),
    }
    for b in range(config.blocks):
        arrays[f"blk{b}.wq"] = uniform(d, d)
        arrays[f"blk{b}.wk"] = uniform(d, d)
        arrays[f"blk{b}.wv"] = uniform(d, d)
        arrays[f"blk{b}.wo"] = uniform(d, d)
        arrays[f"blk{b}.w1"] = uniform(d, d)
        arrays[f"blk{b}.b1"] = np.zeros(d)
        arrays[f"blk{b}.w2"] = uniform(d, d)
        arrays[f"blk{b}.b2"] = np.zeros(d)
    return ParameterSet(arrays)


def zero_parameters(n_items: int, config: ModelConfig) -> ParameterSet:
    """All-zero weights; with pps on, scores reduce to the popularity prior."""
    rng = np.random.default_rng(0)
    params = init_parameters(n_items, config, rng)
    return ParameterSet({k: np.zeros_like(v) for k, v in params.arrays.items()})


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------

def _attention(h: Tensor, pt: dict[str, Tensor], block: int, heads: int,
               mask: Tensor | None) -> Tensor:
    d = h.data.shape[1]
    dh = d // heads
    q = ag.matmul(h, pt[f"blk{block}.wq"])
    k = ag.matmul(h, pt[f"blk{block}.wk"])
    v = ag.matmul(h, pt[f"blk{block}.wv"])
    outs = []
    for i in range(heads):
        qh = ag.narrow(q, 1, i * dh, dh)
        kh = ag.narrow(k, 1, i * dh, dh)
        vh = ag.narrow(v, 1, i * dh, dh)
        scores = ag.scale(ag.matmul(qh, ag.transpose(kh)), 1.0 / np.sqrt(dh))
        if mask is not None:
            scores = ag.add(scores, mask)
        outs.append(ag.matmul(ag.softmax(scores, axis=-1), vh))
    merged = outs[0] if len(outs) == 1 else ag.concat(outs, axis=1)
    return ag.matmul(merged, pt[f"blk{block}.wo"])


def _forward_tokens(pt: dict[str, Tensor], tokens: np.ndarray,
                    config: ModelConfig) -> Tensor:
    """Logits over the item catalog for each input position."""
    length = tokens.shape[0]
    n_items = pt["item_emb"].data.shape[0] - 1
    h = ag.add(ag.gather_rows(pt["item_emb"], tokens),
               ag.narrow(pt["pos_emb"], 0, 0, length))
    mask = None
    if config.direction == UNIDIRECTIONAL:
        mask = Tensor(np.triu(np.full((length, length), NEG_INF), k=1))
    for b in range(config.blocks):
        h = ag.add(h, _attention(h, pt, b, config.heads, mask))
        inner = ag.relu(ag.add(ag.matmul(h, pt[f"blk{b}.w1"]), pt[f"blk{b}.b1"]))
        h = ag.add(h, ag.add(ag.matmul(inner, pt[f"blk{b}.w2"]), pt[f"blk{b}.b2"]))
    tied = ag.transpose(ag.narrow(pt["item_emb"], 0, 1, n_items))
    return ag.matmul(h, tied)


def _wrap(params: ParameterSet, requires_grad: bool) -> dict[str, Tensor]:
    return {k: Tensor(v, requires_grad=requires_grad)
            for k, v in params.arrays.items()}


def forward(params: ParameterSet, seq, config: ModelConfig,
            mask_positions: np.ndarray | None = None) -> np.ndarray:
    """Score matrix (positions x catalog) for one input sequence.

    Unidirectional mode applies a causal attention mask: row i attends only
    to positions <= i and scores the item following position i. Masked mode
    replaces mask_positions with the mask token and scores with full context.
    """
    items = np.asarray(getattr(seq, "items", seq), dtype=np.int64)
    if items.shape[0] > config.l_max:
        raise ValueError(f"sequence of length {items.shape[0]} exceeds "
                         f"l_max={config.l_max}; truncate before scoring")
    n_items = params.n_items
    if items.size and (items.min() < 0 or items.max() >= n_items):
        raise ValueError("item index out of range")
    if items.size == 0:
        return np.zeros((0, n_items))
    tokens = items + 1
    if mask_positions is not None:
        if config.direction != MASKED_BIDIRECTIONAL:
            raise ValueError("mask_positions only apply to masked mode")
        tokens = tokens.copy()
        tokens[np.asarray(mask_positions, dtype=np.int64)] = MASK_TOKEN
    return _forward_tokens(_wrap(params, False), tokens, config).data


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------

def _check_targets(n_cols: int, n_rows: int, targets: np.ndarray) -> None:
    if targets.shape[0] != n_rows:
        raise ValueError("one target per supervised position required")
    if targets.size and (targets.min() < 0 or targets.max() >= n_cols):
        raise ValueError("target index out of range")


def _ce(scores: Tensor, targets: np.ndarray) -> Tensor:
    rows = np.arange(scores.data.shape[0])
    logp = ag.log_softmax(scores, axis=-1)
    return ag.neg(ag.mean(ag.take_rc(logp, rows, targets)))


def _bce(scores: Tensor, positives: np.ndarray, negatives: np.ndarray,
         beta: float) -> Tensor:
    rows = np.arange(scores.data.shape[0])
    pos_term = ag.softplus(ag.neg(ag.take_rc(scores, rows, positives)))
    if beta != 1.0:
        pos_term = ag.scale(pos_term, beta)
    if negatives.size:
        neg = ag.take_rc(scores, rows[:, None], negatives)
        pos_term = ag.add(pos_term, ag.sum_(ag.softplus(neg), axis=1))
    return ag.mean(pos_term)


def ce_loss(scores, targets):
    """Mean softmax cross entropy -ln softmax(x)[target] over positions."""
    t = scores if isinstance(scores, Tensor) else Tensor(scores)
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    _check_targets(t.data.shape[-1], t.data.shape[0], targets)
    out = _ce(t, targets)
    return out if isinstance(scores, Tensor) else float(out.data)


def bce_loss(scores, positives, negatives):
    """Mean of -ln sigmoid(x_pos) - sum_k ln(1 - sigmoid(x_neg_k))."""
    return gbce_loss(scores, positives, negatives, beta=1.0)


def gbce_loss(scores, positives, negatives, beta: float):
    """Generalized BCE: the positive sigmoid is raised to beta before the log.

    At beta=1 this is exactly bce_loss.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    t = scores if isinstance(scores, Tensor) else Tensor(scores)
    positives = np.atleast_1d(np.asarray(positives, dtype=np.int64))
    _check_targets(t.data.shape[-1], t.data.shape[0], positives)
    negatives = np.asarray(negatives, dtype=np.int64)
    if negatives.ndim == 1:
        negatives = negatives.reshape(positives.shape[0], -1)
    if negatives.size:
        if negatives.shape[0] != positives.shape[0]:
            raise ValueError("one row of negatives per position required")
        if negatives.min() < 0 or negatives.max() >= t.data.shape[-1]:
            raise ValueError("negative index out of range")
        if (negatives == positives[:, None]).any():
            raise ValueError("a sampled negative equals its positive")
    out = _bce(t, positives, negatives, beta)
    return out if isinstance(scores, Tensor) else float(out.data)


# ---------------------------------------------------------------------------
# Gradient check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientCheckReport:
    loss: str
    max_rel_error: float
    worst_param: str
    n_checked: int
    tolerance: float


def _supervision(items: np.ndarray, config: ModelConfig,
                 rng: np.random.Generator):
    """Fixed training targets (and masks/negatives) for one sequence."""
    length = items.shape[0]
    if config.direction == UNIDIRECTIONAL:
        mask_positions = None
        sup_rows = np.arange(length - 1)
        targets = items[1:]
    else:
        flags = rng.random(length) < config.mask_probability
        if not flags.any():
            flags[rng.integers(length)] = True
        mask_positions = np.flatnonzero(flags)
        sup_rows = mask_positions
        targets = items[mask_positions]
    return mask_positions, sup_rows, targets


def _sample_negatives(targets: np.ndarray, n_items: int, count: int,
                      rng: np.random.Generator) -> np.ndarray:
    """Uniform over the catalog excluding each row's positive item."""
    neg = rng.integers(0, n_items - 1, size=(targets.shape[0], count))
    neg[neg >= targets[:, None]] += 1
    return neg


def _loss_for(scores: Tensor, config: ModelConfig, targets: np.ndarray,
              negatives: np.ndarray | None) -> Tensor:
    if config.loss == LOSS_CE:
        return ce_loss(scores, targets)
    return gbce_loss(scores, targets, negatives, beta=config.beta)


def gradient_check(params: ParameterSet, seq, config: ModelConfig,
                   tolerance: float = 1e-4, step: float = 1e-5
                   ) -> GradientCheckReport:
    """Compare backward-pass gradients against central finite differences.

    Raises GradientCheckError naming the worst parameter when any relative
    error on a non-vanishing entry exceeds the tolerance.
    """
    items = np.asarray(getattr(seq, "items", seq), dtype=np.int64)
    if items.shape[0] < 2:
        raise ValueError("gradient check needs a sequence of length >= 2")
    rng = np.random.default_rng(config.seed)
    mask_positions, sup_rows, targets = _supervision(items, config, rng)
    negatives = None
    if config.loss != LOSS_CE:
        negatives = _sample_negatives(targets, params.n_items,
                                      config.negatives, rng)
    tokens = items + 1
    if mask_positions is not None:
        tokens = tokens.copy()
        tokens[mask_positions] = MASK_TOKEN

    def loss_tensor(pt):
        scores = ag.gather_rows(_forward_tokens(pt, tokens, config), sup_rows)
        return _loss_for(scores, config, targets, negatives)

    pt = _wrap(params, True)
    out = loss_tensor(pt)
    ag.backward(out)

    worst = ("", 0.0)
    checked = 0
    for name, arr in params.arrays.items():
        analytic = pt[name].grad
        if analytic is None:
            analytic = np.zeros_like(arr)
        flat = arr.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            hi = float(loss_tensor(_wrap(params, False)).data)
            flat[i] = orig - step
            lo = float(loss_tensor(_wrap(params, False)).data)
            flat[i] = orig
            numeric[i] = (hi - lo) / (2.0 * step)
        a = analytic.reshape(-1)
        denom = np.maximum(np.abs(a), np.abs(numeric))
        # entries below the central-difference noise floor (~1e-10 absolute
        # for O(1) losses) cannot certify a relative tolerance; treat them
        # as vanishing
        live = denom > 1e-6
        checked += int(live.sum())
        if live.any():
            rel = np.abs(a[live] - numeric[live]) / denom[live]
            j = int(np.argmax(rel))
            if rel[j] > worst[1]:
                worst = (f"{name}[{np.flatnonzero(live)[j]}]", float(rel[j]))

    report = GradientCheckReport(config.loss, worst[1], worst[0], checked,
                                 tolerance)
    if worst[1] > tolerance:
        raise GradientCheckError(
            f"gradient mismatch on {report.worst_param}: relative error "
            f"{report.max_rel_error:.3e} > {tolerance:g}")
    return report


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path, params: ParameterSet, config: ModelConfig) -> None:
    """Round-trippable dump of config plus weights (npz, version-tagged)."""
    meta = json.dumps({"version": CHECKPOINT_VERSION, "config": asdict(config)})
    np.savez(path, __meta__=np.array(meta), **params.arrays)


def load_checkpoint(path) -> tuple[ModelConfig, ParameterSet]:
    with np.load(path) as data:
        meta = json.loads(str(data["__meta__"]))
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        arrays = {k: data[k] for k in data.files if k != "__meta__"}
    return ModelConfig(**meta["config"]), ParameterSet(arrays)
