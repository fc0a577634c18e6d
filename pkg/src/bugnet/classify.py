"""Valid/Faulty classifiers over reporter embeddedness features."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .events import FAULTY, VALID
from .metrics import FEATURES, NodeMetrics
from .svm import SingleClassTraining, StandardizationStats, SvmModel, standardize, train_svm  # noqa: F401

PERCENTILE_GRID = tuple(range(50, 100, 5))


class EmptyDataset(ValueError):
    pass


class NoLccMembers(ValueError):
    pass


@dataclass
class Dataset:
    bug_ids: list
    metrics: list  # NodeMetrics per row
    labels: list
    community: str = ""

    def __post_init__(self):
        if not (len(self.bug_ids) == len(self.metrics) == len(self.labels)):
            raise ValueError("dataset columns differ in length")
        bad = set(self.labels) - {VALID, FAULTY}
        if bad:
            raise ValueError(f"dataset contains unusable labels {sorted(bad)}")

    def __len__(self):
        return len(self.labels)

    @property
    def X(self) -> np.ndarray:
        if not self.metrics:
            return np.zeros((0, len(FEATURES)))
        return np.vstack([m.as_array() for m in self.metrics])

    def subset(self, idx) -> "Dataset":
        return Dataset([self.bug_ids[i] for i in idx], [self.metrics[i] for i in idx],
                       [self.labels[i] for i in idx], self.community)


def split_train_eval(data: Dataset, fraction: float = 0.05, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie strictly between 0 and 1")
    if len(data) == 0:
        raise EmptyDataset("cannot split an empty dataset")
    n = len(data)
    k = math.ceil(fraction * n)
    picked = np.random.default_rng(seed).choice(n, size=k, replace=False)
    chosen = set(picked.tolist())
    train = sorted(chosen)
    rest = [i for i in range(n) if i not in chosen]
    return data.subset(train), data.subset(rest)


def select_target_class(data: Dataset, mode: str = "auto") -> str:
    if mode == "valid":
        return VALID
    if mode == "faulty":
        return FAULTY
    if mode != "auto":
        raise ValueError(f"unknown target mode {mode!r}")
    counts = Counter(data.labels)
    return FAULTY if counts[FAULTY] < counts[VALID] else VALID


def lcc_classify(m: NodeMetrics) -> str:
    return VALID if m.in_lcc else FAULTY


@dataclass(frozen=True)
class ThresholdModel:
    percentile: float
    threshold: float


def evcent_classify(m: NodeMetrics, model: ThresholdModel) -> str:
    return VALID if m.in_lcc and m.eigenvector >= model.threshold else FAULTY


def _f_score(preds, labels, target) -> float:
    tp = sum(p == target and y == target for p, y in zip(preds, labels))
    fp = sum(p == target and y != target for p, y in zip(preds, labels))
    fn = sum(p != target and y == target for p, y in zip(preds, labels))
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def tune_threshold(train: Dataset, grid=PERCENTILE_GRID, target: str = VALID) -> ThresholdModel:
    """Pick the eigenvector percentile (among LCC members) with the best training F."""
    scores = [m.eigenvector for m in train.metrics if m.in_lcc]
    if not scores:
        raise NoLccMembers("no training row lies in the LCC")
    best = None
    for q in sorted(grid):
        theta = float(np.percentile(scores, q))
        model = ThresholdModel(float(q), theta)
        f = _f_score([evcent_classify(m, model) for m in train.metrics], train.labels, target)
        if best is None or f > best[0]:
            best = (f, model)
    return best[1]


def fit_svm(train: Dataset, target: str, **kw) -> SvmModel:
    kw.setdefault("gamma", 1.0 / len(FEATURES))
    return train_svm(train.X, train.labels, target, **kw)


def svm_classify(m: NodeMetrics, model: SvmModel) -> tuple[str, float]:
    margin = float(model.decision_function(m.as_array()[None, :])[0])
    return (model.target if margin > 0 else model.other), margin


@dataclass
class TrainedModels:
    """Everything ``train`` persists: both tuned classifiers plus split metadata."""

    target: str
    threshold: ThresholdModel
    svm: SvmModel
    train_bug_ids: list
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "target": self.target,
            "threshold": {"percentile": self.threshold.percentile, "threshold": self.threshold.threshold},
            "svm": self.svm.to_dict(),
            "train_bug_ids": list(self.train_bug_ids),
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModels":
        if d.get("version") != 1:
            raise ValueError(f"unsupported model file version {d.get('version')!r}")
        return cls(d["target"], ThresholdModel(**d["threshold"]), SvmModel.from_dict(d["svm"]),
                   list(d["train_bug_ids"]), dict(d.get("config", {})))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TrainedModels":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
