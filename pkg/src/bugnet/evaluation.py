"""Feature extraction, classifier evaluation and report assembly."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import IO, Mapping, Sequence

from .classify import (
    PERCENTILE_GRID,
    Dataset,
    TrainedModels,
    evcent_classify,
    fit_svm,
    lcc_classify,
    select_target_class,
    split_train_eval,
    tune_threshold,
)
from .events import FAULTY, VALID, BugRecord
from .metrics import FEATURES, feature_vector
from .netbuild import WindowIndex, build_network, preceding_window


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def flipped(self) -> "Confusion":
        return Confusion(self.tn, self.fn, self.tp, self.fp)


def confusion(predictions: Sequence[str], labels: Sequence[str], target: str) -> Confusion:
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions for {len(labels)} labels")
    tp = fp = tn = fn = 0
    for p, y in zip(predictions, labels):
        if p == target:
            if y == target:
                tp += 1
            else:
                fp += 1
        elif y == target:
            fn += 1
        else:
            tn += 1
    return Confusion(tp, fp, tn, fn)


def precision_recall_f(c: Confusion) -> tuple[float, float, float]:
    p = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    r = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


# -- features -----------------------------------------------------------------

def reporter_features(index: WindowIndex, rec: BugRecord, window_days: int = 30):
    window = preceding_window(rec.created_at, window_days)
    return feature_vector(build_network(index.query(window), window), rec.reporter_id)


def build_dataset(records: Mapping[str, BugRecord], index: WindowIndex, window_days: int = 30,
                  threads: int = 1, community: str = "") -> Dataset:
    """Preceding-window features for every labeled (resolved) bug, in record order."""
    recs = [r for r in records.values() if r.label in (VALID, FAULTY)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            metrics = list(pool.map(lambda r: reporter_features(index, r, window_days), recs))
    else:
        metrics = [reporter_features(index, r, window_days) for r in recs]
    return Dataset([r.bug_id for r in recs], metrics, [r.label for r in recs], community)


def write_features_csv(records: Mapping[str, BugRecord], data: Dataset, fh: IO[str]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["bug_id", "reporter_id", "in_lcc", "evcent", "betweenness", "closeness", "clustering",
                "coreness", "deg_in", "deg_out", "deg_total", "label"])
    for bug_id, m, label in zip(data.bug_ids, data.metrics, data.labels):
        w.writerow([
            bug_id,
            records[bug_id].reporter_id,
            int(m.in_lcc),
            f"{m.eigenvector:.12g}",
            f"{m.betweenness:.12g}",
            f"{m.closeness:.12g}",
            f"{m.clustering:.12g}",
            m.coreness,
            m.degree_in,
            m.degree_out,
            m.degree_total,
            label,
        ])


# -- pipeline -----------------------------------------------------------------

@dataclass
class EvalConfig:
    window_days: int = 30
    seed: int = 0
    train_fraction: float = 0.05
    target_mode: str = "auto"
    C: float = 1.0
    kernel: str = "rbf"
    gamma: float = 1.0 / len(FEATURES)
    tol: float = 1e-3
    max_iter: int = 100_000
    grid: tuple = PERCENTILE_GRID
    class_weight: dict = field(default_factory=dict)
    threads: int = 1

    def __post_init__(self):
        if self.window_days < 1:
            raise ValueError("window_days must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        d.pop("threads")  # never affects results
        return d


@dataclass
class ClassifierScore:
    confusion: Confusion
    precision: float
    recall: float
    f_score: float
    extra: dict = field(default_factory=dict)

    @classmethod
    def of(cls, preds, labels, target, **extra) -> "ClassifierScore":
        c = confusion(preds, labels, target)
        return cls(c, *precision_recall_f(c), extra=extra)

    def to_dict(self) -> dict:
        return {**asdict(self.confusion), "precision": self.precision, "recall": self.recall,
                "f_score": self.f_score, **self.extra}


@dataclass
class EvaluationReport:
    community: str
    target: str
    base_rate: float
    n_train: int
    n_eval: int
    scores: dict  # name -> ClassifierScore; baseline, lcc, evcent, svm
    config: dict

    def to_dict(self) -> dict:
        return {
            "community": self.community,
            "target": self.target,
            "base_rate": self.base_rate,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
            "classifiers": {k: v.to_dict() for k, v in self.scores.items()},
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def render(self) -> str:
        title = self.community or "community"
        rows = [(self.target, f"{100 * self.base_rate:.1f} %")]
        for name, label in (("lcc", "LCC"), ("evcent", "evcent"), ("svm", "SVM")):
            s = self.scores.get(name)
            if s is None:
                continue
            rows += [
                (f"p ({label})", f"{100 * s.precision:.1f} %"),
                (f"r ({label})", f"{100 * s.recall:.1f} %"),
                (f"F ({label})", f"{s.f_score:.2f}"),
            ]
        width = max(len(k) for k, _ in rows)
        head = f"{'':<{width}}  {title:>12}"
        body = "\n".join(f"{k:<{width}}  {v:>12}" for k, v in rows)
        return f"{head}\n{body}\n(target class {self.target}; {self.n_train} training / {self.n_eval} evaluation rows)\n"


def train_models(data: Dataset, cfg: EvalConfig) -> TrainedModels:
    target = select_target_class(data, cfg.target_mode)
    train, _ = split_train_eval(data, cfg.train_fraction, cfg.seed)
    threshold = tune_threshold(train, cfg.grid, target)
    svm = fit_svm(train, target, C=cfg.C, kernel=cfg.kernel, gamma=cfg.gamma, tol=cfg.tol,
                  max_iter=cfg.max_iter, seed=cfg.seed, class_weight=cfg.class_weight)
    return TrainedModels(target, threshold, svm, list(train.bug_ids), cfg.to_dict())


def evaluate_models(models: TrainedModels, data: Dataset, community: str = "") -> EvaluationReport:
    held_out = set(models.train_bug_ids)
    ev = data.subset([i for i, b in enumerate(data.bug_ids) if b not in held_out])
    target = models.target
    labels = ev.labels
    scores = {
        "baseline": ClassifierScore.of([target] * len(ev), labels, target),
        "lcc": ClassifierScore.of([lcc_classify(m) for m in ev.metrics], labels, target),
        "evcent": ClassifierScore.of(
            [evcent_classify(m, models.threshold) for m in ev.metrics], labels, target,
            percentile=models.threshold.percentile, threshold=models.threshold.threshold,
        ),
        "svm": ClassifierScore.of(models.svm.predict(ev.X) if len(ev) else [], labels, target,
                                  converged=models.svm.converged),
    }
    base = sum(y == target for y in labels) / len(labels) if labels else 0.0
    return EvaluationReport(community or data.community, target, base, len(models.train_bug_ids), len(ev),
                            scores, dict(models.config))


def evaluate_pipeline(records: Mapping[str, BugRecord], index: WindowIndex, cfg: EvalConfig | None = None,
                      community: str = "", data: Dataset | None = None) -> EvaluationReport:
    cfg = cfg or EvalConfig()
    if data is None:
        data = build_dataset(records, index, cfg.window_days, cfg.threads, community)
    models = train_models(data, cfg)
    return evaluate_models(models, data, community)
