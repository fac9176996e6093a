"""Scorer contract and the two popularity baselines.

A scorer maps a user's training history to one score per catalog item for the
next interaction. Previously consumed items are never filtered out of the
scores: repeat recommendation is exactly what the popularity baselines are
for.
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from .events import EventLog, UserSequence

HEAD_NONE = "none"
HEAD_SOFTMAX = "softmax"
HEAD_SIGMOID = "sigmoid"


@runtime_checkable
class Scorer(Protocol):
    """Deterministic next-item scorer over a fixed catalog."""

    name: str
    head: str
    n_items: int

    def score(self, history: UserSequence) -> np.ndarray: ...


class MostPopularScorer:
    """Ranks by global interaction counts; identical scores for every user."""

    head = HEAD_NONE

    def __init__(self, train: EventLog, name: str = "most-popular"):
        if len(train) == 0:
            raise ValueError("empty train log")
        self.name = name
        self.n_items = len(train.catalog)
        self._counts = train.item_counts().astype(np.float64)

    def score(self, history: UserSequence) -> np.ndarray:
        return self._counts.copy()


class PersonalizedMostPopularScorer:
    """Ranks by the querying user's own training interaction counts.

    Unknown (cold) users get an all-zero vector, i.e. plain index order.
    """

    head = HEAD_NONE

    def __init__(self, train: EventLog, name: str = "personalized-most-popular"):
        if len(train) == 0:
            raise ValueError("empty train log")
        self.name = name
        self.n_items = len(train.catalog)
        self._per_user: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for user in train.users:
            items = train.user_item_indices(user)
            idx, cnt = np.unique(items, return_counts=True)
            self._per_user[user] = (idx, cnt.astype(np.float64))

    def score(self, history: UserSequence) -> np.ndarray:
        scores = np.zeros(self.n_items, np.float64)
        entry = self._per_user.get(history.user)
        if entry is not None:
            idx, cnt = entry
            scores[idx] = cnt
        return scores


def most_popular_scorer(train: EventLog) -> MostPopularScorer:
    return MostPopularScorer(train)


def personalized_most_popular_scorer(train: EventLog) -> PersonalizedMostPopularScorer:
    return PersonalizedMostPopularScorer(train)
