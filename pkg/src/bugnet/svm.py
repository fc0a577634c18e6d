"""Soft-margin SVM trained by sequential minimal optimization.

Working pairs are chosen by maximal KKT violation with second-order
selection of the partner (Fan, Chen and Lin 2005), so training stops once
the violation gap drops below ``tol``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

MODEL_VERSION = 1
TAU = 1e-12


class SingleClassTraining(ValueError):
    pass


@dataclass
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X) -> "StandardizationStats":
        X = np.asarray(X, dtype=float)
        return cls(X.mean(axis=0), X.std(axis=0))

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        scale = np.where(self.std > 0, self.std, 1.0)
        Z = (X - self.mean) / scale
        Z[:, self.std == 0] = 0.0
        return Z


def standardize(rows, stats: StandardizationStats) -> np.ndarray:
    return stats.transform(rows)


def kernel_matrix(X, Z, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return X @ Z.T
    if kernel == "rbf":
        sq = (X * X).sum(1)[:, None] + (Z * Z).sum(1)[None, :] - 2.0 * (X @ Z.T)
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise ValueError(f"unknown kernel {kernel!r}")


@dataclass
class SvmModel:
    kernel: str
    gamma: float
    C: float
    support_vectors: np.ndarray  # standardized
    dual_coef: np.ndarray  # alpha_i * y_i
    alpha: np.ndarray
    labels: np.ndarray  # +1 target, -1 other
    bias: float
    stats: StandardizationStats
    target: str
    other: str
    seed: int
    converged: bool = True
    iterations: int = 0
    gap: float = 0.0
    class_weight: dict = field(default_factory=dict)

    def decision_function(self, X) -> np.ndarray:
        Z = self.stats.transform(X)
        if len(self.dual_coef) == 0:
            return np.full(len(Z), self.bias)
        K = kernel_matrix(Z, self.support_vectors, self.kernel, self.gamma)
        return K @ self.dual_coef + self.bias

    def predict(self, X) -> list:
        return [self.target if s > 0 else self.other for s in self.decision_function(X)]

    def to_dict(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "kernel": self.kernel,
            "gamma": self.gamma,
            "C": self.C,
            "class_weight": self.class_weight,
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "alpha": self.alpha.tolist(),
            "labels": self.labels.tolist(),
            "bias": self.bias,
            "mean": self.stats.mean.tolist(),
            "std": self.stats.std.tolist(),
            "target": self.target,
            "other": self.other,
            "seed": self.seed,
            "converged": self.converged,
            "iterations": self.iterations,
            "gap": self.gap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        n_feat = len(d["mean"])
        return cls(
            kernel=d["kernel"],
            gamma=d["gamma"],
            C=d["C"],
            support_vectors=np.array(d["support_vectors"], dtype=float).reshape(-1, n_feat),
            dual_coef=np.array(d["dual_coef"], dtype=float),
            alpha=np.array(d["alpha"], dtype=float),
            labels=np.array(d["labels"], dtype=float),
            bias=d["bias"],
            stats=StandardizationStats(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float)),
            target=d["target"],
            other=d["other"],
            seed=d["seed"],
            converged=d["converged"],
            iterations=d["iterations"],
            gap=d["gap"],
            class_weight=d.get("class_weight", {}),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def smo_solve(K: np.ndarray, y: np.ndarray, C: np.ndarray, tol: float = 1e-3, max_iter: int = 100_000,
              order: np.ndarray | None = None):
    """Solve the SVM dual for kernel matrix ``K`` and labels ``y`` in {-1, +1}.

    ``order`` fixes the scan order used to break ties between equally
    violating indices. Returns (alpha, bias, converged, iterations, gap).
    """
    n = len(y)
    if order is None:
        order = np.arange(n)
    K = K[np.ix_(order, order)]
    y = y[order].astype(float)
    Cv = C[order].astype(float)
    Q = (y[:, None] * y[None, :]) * K
    QD = np.diag(Q).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    converged = False
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        yG = -y * G
        up = ((y > 0) & (alpha < Cv)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < Cv))
        if not up.any() or not low.any():
            gap = 0.0
            converged = True
            break
        i = int(np.argmax(np.where(up, yG, -np.inf)))
        gmax = yG[i]
        gmin = np.min(np.where(low, yG, np.inf))
        gap = gmax - gmin
        if gap <= tol:
            converged = True
            break
        b = gmax - yG
        cand = low & (b > 0)
        a = QD[i] + QD - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, TAU)
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))

        ai, aj = alpha[i], alpha[j]
        Ci, Cj = Cv[i], Cv[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            delta = (-G[i] - G[j]) / max(quad, TAU)
            diff = ai - aj
            ni, nj = ai + delta, aj + delta
            if diff > 0:
                if nj < 0:
                    nj, ni = 0.0, diff
            elif ni < 0:
                ni, nj = 0.0, -diff
            if diff > Ci - Cj:
                if ni > Ci:
                    ni, nj = Ci, Ci - diff
            elif nj > Cj:
                nj, ni = Cj, Cj + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            delta = (G[i] - G[j]) / max(quad, TAU)
            total = ai + aj
            ni, nj = ai - delta, aj + delta
            if total > Ci:
                if ni > Ci:
                    ni, nj = Ci, total - Ci
            elif nj < 0:
                nj, ni = 0.0, total
            if total > Cj:
                if nj > Cj:
                    nj, ni = Cj, total - Cj
            elif ni < 0:
                ni, nj = 0.0, total
        G += Q[i] * (ni - ai) + Q[j] * (nj - aj)
        alpha[i], alpha[j] = ni, nj

    yG = y * G
    free = (alpha > 0) & (alpha < Cv)
    if free.any():
        rho = float(yG[free].mean())
    else:
        up = ((y > 0) & (alpha < Cv)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < Cv))
        ub = np.min(yG[up]) if up.any() else np.inf
        lb = np.max(yG[low]) if low.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub) and np.isfinite(lb) else float(
            ub if np.isfinite(ub) else lb)
    out = np.empty(n)
    out[order] = alpha
    return out, -rho, converged, it, float(gap)


def train_svm(X, labels, target: str, C: float = 1.0, kernel: str = "rbf", gamma: float | None = None,
              tol: float = 1e-3, max_iter: int = 100_000, seed: int = 0,
              class_weight: dict | None = None) -> SvmModel:
    X = np.asarray(X, dtype=float)
    labels = list(labels)
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise SingleClassTraining(f"training data has a single class {classes}")
    if target not in classes:
        raise ValueError(f"target class {target!r} not in training labels")
    other = next(c for c in classes if c != target)
    y = np.array([1.0 if lab == target else -1.0 for lab in labels])
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    class_weight = dict(class_weight or {})
    Cv = np.array([C * class_weight.get(lab, 1.0) for lab in labels])

    stats = StandardizationStats.fit(X)
    Z = stats.transform(X)
    K = kernel_matrix(Z, Z, kernel, gamma)
    order = np.random.default_rng(seed).permutation(len(y))
    alpha, bias, converged, iterations, gap = smo_solve(K, y, Cv, tol=tol, max_iter=max_iter, order=order)
    if not converged:
        log.warning("SMO stopped after %d iterations with KKT gap %.3g > tol %.3g", iterations, gap, tol)
    sv = alpha > 0
    return SvmModel(
        kernel=kernel,
        gamma=float(gamma),
        C=float(C),
        support_vectors=Z[sv],
        dual_coef=alpha[sv] * y[sv],
        alpha=alpha[sv],
        labels=y[sv],
        bias=float(bias),
        stats=stats,
        target=target,
        other=other,
        seed=seed,
        converged=converged,
        iterations=iterations,
        gap=gap,
        class_weight=class_weight,
    )
