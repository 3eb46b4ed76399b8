"""Training objectives and the score -> label decision rules.

The ranking objective pushes the gold label's score above a positive margin
and the best competing label's score below a negative one:

    L = softplus(gamma * (m_plus - s[gold])) + softplus(gamma * (m_minus + s[best_other]))

For gold = Other only the competitor term is used; the scorer has no Other
row, so prediction falls back to Other whenever every directed score is
negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import N_DIRECTED, N_LABELS, OTHER_ID
from .kernels import softmax


@dataclass(frozen=True)
class RankingLossConfig:
    gamma: float = 2.0
    m_plus: float = 2.5
    m_minus: float = 0.5

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


def softplus(x: float) -> float:
    """log(1 + exp(x)), overflow-safe.

    The recipe max(x, 0) + log1p(exp(-|x|)) is pinned: oracle
    implementations must follow it to reproduce the exact doubles.
    """
    return max(x, 0.0) + math.log1p(math.exp(-abs(x)))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def ranking_loss(scores: np.ndarray, gold_id: int, config: RankingLossConfig):
    """(loss, dscores) over the 18 directed-label scores.

    gold_id is a full label id (0..18); Other uses only the competitor term,
    with the competitor being the overall argmax. dscores has at most two
    nonzero entries (gold and competitor).
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (N_DIRECTED,):
        raise ValueError(f"expected {N_DIRECTED} directed scores, got {scores.shape}")
    if not 0 <= gold_id < N_LABELS:
        raise ValueError(f"gold label id {gold_id} out of range")
    g, m_plus, m_minus = config.gamma, config.m_plus, config.m_minus
    dscores = np.zeros(N_DIRECTED, dtype=np.float64)
    if gold_id == OTHER_ID:
        competitor = int(np.argmax(scores))
        loss = softplus(g * (m_minus + scores[competitor]))
        dscores[competitor] = g * _sigmoid(g * (m_minus + scores[competitor]))
        return loss, dscores
    masked = scores.copy()
    masked[gold_id] = -np.inf
    competitor = int(np.argmax(masked))
    loss = softplus(g * (m_plus - scores[gold_id]))
    loss += softplus(g * (m_minus + scores[competitor]))
    dscores[gold_id] = -g * _sigmoid(g * (m_plus - scores[gold_id]))
    dscores[competitor] = g * _sigmoid(g * (m_minus + scores[competitor]))
    return loss, dscores


def cross_entropy_loss(probabilities: np.ndarray, gold_id: int):
    """(-log p[gold], dscores) where dscores is the gradient w.r.t. the
    pre-softmax scores: p - onehot(gold)."""
    p = np.asarray(probabilities, dtype=np.float64)
    if not 0 <= gold_id < p.shape[0]:
        raise ValueError(f"gold label id {gold_id} out of range")
    loss = -math.log(max(p[gold_id], 1e-12))
    dscores = p.copy()
    dscores[gold_id] -= 1.0
    return loss, dscores


def example_loss(scores: np.ndarray, gold_id: int, objective: str,
                 ranking_config: RankingLossConfig):
    """Dispatch on the objective; returns (loss, dscores)."""
    if objective == "ranking":
        return ranking_loss(scores, gold_id, ranking_config)
    if objective == "softmax":
        return cross_entropy_loss(softmax(scores), gold_id)
    raise ValueError(f"unknown objective {objective!r}")


def decode_scores(scores: np.ndarray, objective: str) -> int:
    """Label id from a score vector.

    softmax: argmax over all 19 labels. ranking: argmax over the 18 directed
    labels, falling back to Other when every score is negative. Ties go to
    the lowest label id.
    """
    scores = np.asarray(scores)
    if not np.all(np.isfinite(scores)):
        raise ValueError("cannot decode non-finite scores")
    if objective == "softmax":
        if scores.shape != (N_LABELS,):
            raise ValueError(f"softmax decode expects {N_LABELS} scores")
        return int(np.argmax(scores))
    if objective == "ranking":
        if scores.shape != (N_DIRECTED,):
            raise ValueError(f"ranking decode expects {N_DIRECTED} scores")
        if scores.max() < 0.0:
            return OTHER_ID
        return int(np.argmax(scores))
    raise ValueError(f"unknown objective {objective!r}")


def n_scores(objective: str) -> int:
    if objective == "ranking":
        return N_DIRECTED
    if objective == "softmax":
        return N_LABELS
    raise ValueError(f"unknown objective {objective!r}")
