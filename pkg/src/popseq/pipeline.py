"""Dataset preparation: catalog sampling, temporal splitting, label assignment.

The global temporal split sorts all interactions by timestamp and cuts at the
border that leaves the requested fraction for testing; every user's
interactions strictly after the border form that user's test ground truth.
Validation repeats the construction over the pre-test events for a seeded
subset of users. Ground-truth labels grade items 2 (liked), 1 (played),
0 (skipped/disliked or unseen).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import kernels
from .errors import ParseError, SplitError
from .events import Catalog, EventLog, InteractionEvent, load_events, save_events

RAW_LABELS = {"like": 2, "play": 1, "skip": -1, "dislike": -2}

# labeled ground truth: per user, item index -> label in {0, 1, 2}
GroundTruth = dict[str, dict[int, int]]


@dataclass(frozen=True)
class DatasetSplit:
    """Train log plus labeled validation/test ground truth and the borders."""

    train: EventLog
    validation: GroundTruth
    test: GroundTruth
    test_border: int
    val_border: int
    val_users: frozenset[str]


def popularity_sample(log: EventLog, n: int, seed: int) -> tuple[EventLog, Catalog]:
    """Keep n items drawn without replacement, weighted by interaction count.

    Selection uses successive draws with renormalized weights, so popular
    items are picked early but any item with interactions can appear. The
    returned log is re-indexed over the surviving items.
    """
    distinct = len(log.catalog)
    if not 0 < n <= distinct:
        raise ValueError(f"n must be in [1, {distinct}], got {n}")
    counts = log.item_counts().astype(np.float64)
    uniforms = np.random.default_rng(seed).random(n)
    chosen = kernels.weighted_draws(counts, n, uniforms)
    keep_raw = {log.catalog.raw(i) for i in chosen.tolist()}
    sampled = EventLog.from_events(ev for ev in log.events if ev.item in keep_raw)
    return sampled, sampled.catalog


def assign_labels(events: Iterable[InteractionEvent], catalog: Catalog
                  ) -> dict[int, int]:
    """Fold one user's chronological events in a window into graded labels.

    The first interaction sets the raw label; likes and dislikes always
    overwrite it, while plays and skips only overwrite when the user has
    neither liked nor disliked the item within the window. Raw negatives
    (skip, dislike) are clamped to 0 at the end.
    """
    raw: dict[int, int] = {}
    for ev in events:
        idx = catalog.index(ev.item)
        label = RAW_LABELS[ev.event_type]
        if idx not in raw or ev.event_type in ("like", "dislike"):
            raw[idx] = label
        elif raw[idx] not in (2, -2):
            raw[idx] = label
    return {idx: (label if label > 0 else 0) for idx, label in raw.items()}


def _border_timestamp(events: tuple[InteractionEvent, ...], fraction: float) -> int:
    """Timestamp of the last event kept out of the held-out fraction."""
    cut = int(np.floor((1.0 - fraction) * len(events))) - 1
    if cut < 0:
        raise SplitError(f"holdout fraction {fraction} leaves no events before "
                         "the border")
    return events[cut].timestamp


def global_temporal_split(log: EventLog, test_fraction: float,
                          val_fraction: float, val_user_count: int,
                          seed: int) -> DatasetSplit:
    """Split one log into train events and labeled validation/test windows.

    Events with timestamps equal to a border stay on the train side; held-out
    windows use strict inequality. Validation users are a seeded uniform
    sample; their events between the validation and test borders leave
    training and become validation ground truth.
    """
    if not 0.0 < test_fraction < 1.0 or not 0.0 < val_fraction < 1.0:
        raise ValueError("fractions must lie in (0, 1)")
    if len(log) == 0:
        raise SplitError("empty event log")
    users = sorted(log.users)
    if not 0 < val_user_count <= len(users):
        raise ValueError(f"val_user_count must be in [1, {len(users)}]")

    test_border = _border_timestamp(log.events, test_fraction)
    pre_test = tuple(ev for ev in log.events if ev.timestamp <= test_border)
    if not pre_test:
        raise SplitError("empty train partition")
    val_border = _border_timestamp(pre_test, val_fraction)

    rng = np.random.default_rng(seed)
    val_users = frozenset(rng.choice(users, size=val_user_count, replace=False))

    test: GroundTruth = {}
    validation: GroundTruth = {}
    for user in users:
        events = log.user_events(user)
        test_window = [ev for ev in events if ev.timestamp > test_border]
        if test_window:
            test[user] = assign_labels(test_window, log.catalog)
        if user in val_users:
            val_window = [ev for ev in events
                          if val_border < ev.timestamp <= test_border]
            if val_window:
                validation[user] = assign_labels(val_window, log.catalog)

    if not test:
        raise SplitError("no events after the test border")

    def in_train(ev: InteractionEvent) -> bool:
        border = val_border if ev.user in val_users else test_border
        return ev.timestamp <= border

    train = log.filtered(in_train)
    if len(train) == 0:
        raise SplitError("empty train partition")
    return DatasetSplit(train, validation, test, test_border, val_border,
                        val_users)


# ---------------------------------------------------------------------------
# Split artifacts on disk
# ---------------------------------------------------------------------------

TRAIN_FILE = "train.csv"
MANIFEST_FILE = "manifest.csv"
LABELS_FILE = "labels.csv"
CATALOG_FILE = "catalog.csv"


def save_split(split: DatasetSplit, outdir) -> None:
    """Write train.csv, manifest.csv, labels.csv, catalog.csv into outdir."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_events(split.train, outdir / TRAIN_FILE)

    catalog = split.train.catalog
    with open(outdir / CATALOG_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("index", "item_id"))
        for i, raw in enumerate(catalog.items):
            writer.writerow((i, raw))

    with open(outdir / MANIFEST_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("user_id", "partition", "border_timestamp"))
        for user in sorted(split.train.users):
            border = (split.val_border if user in split.val_users
                      else split.test_border)
            writer.writerow((user, "train", border))
        for user in sorted(split.val_users):
            writer.writerow((user, "validation", split.val_border))
        for user in sorted(split.test):
            writer.writerow((user, "test", split.test_border))

    with open(outdir / LABELS_FILE, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("user_id", "item_id", "label", "partition"))
        for partition, truth in (("validation", split.validation),
                                 ("test", split.test)):
            for user in sorted(truth):
                for idx in sorted(truth[user]):
                    writer.writerow((user, catalog.raw(idx), truth[user][idx],
                                     partition))


def load_split(indir) -> DatasetSplit:
    """Rebuild a DatasetSplit from the four split artifacts."""
    indir = Path(indir)
    for name in (TRAIN_FILE, MANIFEST_FILE, LABELS_FILE, CATALOG_FILE):
        if not (indir / name).exists():
            raise FileNotFoundError(indir / name)

    with open(indir / CATALOG_FILE, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        catalog = Catalog(row[1] for row in reader if row)

    raw_train = load_events(indir / TRAIN_FILE)
    train = EventLog(raw_train.events, catalog)

    val_users: set[str] = set()
    test_border = val_border = 0
    with open(indir / MANIFEST_FILE, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for user, partition, border in reader:
            if partition == "validation":
                val_users.add(user)
                val_border = int(border)
            elif partition == "test":
                test_border = int(border)

    validation: GroundTruth = {}
    test: GroundTruth = {}
    with open(indir / LABELS_FILE, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(lineno, f"expected 4 fields, got {len(row)}")
            user, item, label, partition = row
            target = validation if partition == "validation" else test
            target.setdefault(user, {})[catalog.index(item)] = int(label)

    return DatasetSplit(train, validation, test, test_border, val_border,
                        frozenset(val_users))
