"""Reporter-centrality distributions and Wilcoxon-Mann-Whitney tests."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .events import CATEGORIES, BugRecord, Vocabulary, DEFAULT_VOCABULARY
from .metrics import lcc_measures
from .netbuild import WindowIndex, build_network, following_window, preceding_window

GREATER, LESS, TWO_SIDED = "greater", "less", "two_sided"
ALTERNATIVES = (GREATER, LESS, TWO_SIDED)
SYMBOL = {GREATER: ">", LESS: "<", TWO_SIDED: "!="}
EXACT_MAX_N = 20


class EmptySample(ValueError):
    pass


@dataclass
class Sample:
    values: list
    category: str
    phase: int

    @property
    def name(self) -> str:
        return f"{self.category}{self.phase}"

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TestResult:
    alternative: str
    p_value: float
    u_statistic: float
    n_a: int
    n_b: int
    alpha: float
    method: str

    __test__ = False  # not a pytest class

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


# -- rank-sum machinery -------------------------------------------------------

def midranks(values: Sequence[float]) -> np.ndarray:
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(sx):
        j = i
        while j + 1 < len(sx) and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def u_statistic(a: Sequence[float], b: Sequence[float]) -> float:
    """U of sample ``a``: pairs with a > b, ties counted one half."""
    m = len(a)
    ranks = midranks(list(a) + list(b))
    return float(ranks[:m].sum() - m * (m + 1) / 2.0)


@lru_cache(maxsize=None)
def u_distribution(m: int, n: int) -> tuple:
    """Counts of each U value 0..m*n over all C(m+n, m) tie-free arrangements."""
    # row[j] = counts for sizes (i, j); built up over i with the standard recurrence
    prev = [[1] for _ in range(n + 1)]  # i = 0: only U = 0
    for i in range(1, m + 1):
        cur = [[1]]  # j = 0: only U = 0
        for j in range(1, n + 1):
            # largest value in A (shifts U by j) or in B
            size = i * j + 1
            counts = [0] * size
            for u, c in enumerate(prev[j]):
                counts[u + j] += c
            for u, c in enumerate(cur[j - 1]):
                counts[u] += c
            cur.append(counts)
        prev = cur
    return tuple(prev[n])


def _exact_p(u: float, m: int, n: int, alternative: str) -> float:
    counts = u_distribution(m, n)
    total = math.comb(m + n, m)
    k = int(round(u))
    upper = sum(counts[k:])
    lower = sum(counts[:k + 1])
    if alternative == GREATER:
        return upper / total
    if alternative == LESS:
        return lower / total
    return min(1.0, 2 * min(upper, lower) / total)


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _approx_p(u: float, m: int, n: int, tie_term: float, alternative: str) -> float:
    N = m + n
    var = m * n / 12.0 * ((N + 1) - tie_term / (N * (N - 1)))
    if var <= 0:
        return 1.0
    sd = math.sqrt(var)
    diff = u - m * n / 2.0
    if alternative == GREATER:
        return _norm_sf((diff - 0.5) / sd)
    if alternative == LESS:
        return _norm_sf(-(diff + 0.5) / sd)
    return min(1.0, 2.0 * _norm_sf((abs(diff) - 0.5) / sd))


def wmw_test(a, b, alternative: str = TWO_SIDED, alpha: float = 0.05, method: str = "auto") -> TestResult:
    """Rank-sum test; ``greater`` means ``a`` tends to exceed ``b``."""
    a = list(getattr(a, "values", a))
    b = list(getattr(b, "values", b))
    if not a or not b:
        raise EmptySample("both samples need at least one value")
    if alternative not in ALTERNATIVES:
        raise ValueError(f"unknown alternative {alternative!r}")
    m, n = len(a), len(b)
    u = u_statistic(a, b)
    _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    if method == "auto":
        method = "exact" if m <= EXACT_MAX_N and n <= EXACT_MAX_N and tie_term == 0 else "normal_approx"
    if method == "exact":
        if tie_term:
            raise ValueError("exact method requires tie-free samples")
        p = _exact_p(u, m, n, alternative)
    else:
        p = _approx_p(u, m, n, tie_term, alternative)
    return TestResult(alternative, min(1.0, max(0.0, p)), u, m, n, alpha, method)


# -- centrality samples -------------------------------------------------------

def reporter_eigenvector(index: WindowIndex, t: int, reporter: str, phase: int,
                         window_days: int = 30) -> tuple[float, bool]:
    """Eigenvector score of ``reporter`` around instant ``t`` and LCC membership."""
    window = preceding_window(t, window_days) if phase == 1 else following_window(t, window_days)
    net = build_network(index.query(window), window)
    m = lcc_measures(net, with_paths=False)
    i = m.index.get(reporter)
    if i is None:
        return 0.0, False
    return float(m.eigen.values[i]), True


def reporter_centrality_sample(records: Mapping[str, BugRecord], index: WindowIndex, category: str,
                               phase: int, window_days: int = 30, include_absent: bool = True) -> Sample:
    if phase not in (1, 2):
        raise ValueError("phase must be 1 (preceding) or 2 (following)")
    values = []
    for rec in records.values():
        if not rec.resolved or rec.category != category:
            continue
        score, present = reporter_eigenvector(index, rec.created_at, rec.reporter_id, phase, window_days)
        if present or include_absent:
            values.append(score)
    return Sample(values, category, phase)


# -- hypothesis suite ---------------------------------------------------------

# (hypothesis, sample a, sample b, hypothesized direction)
COMPARISONS = (
    ("H1", ("FIX", 1), ("FIX", 2), LESS),
    ("H2", ("DUP", 1), ("DUP", 2), GREATER),
    ("H2", ("INV", 1), ("INV", 2), GREATER),
    ("H3", ("FIX", 1), ("WOF", 1), GREATER),
    ("H3", ("FIX", 1), ("DUP", 1), GREATER),
    ("H3", ("FIX", 1), ("INV", 1), GREATER),
    ("H3", ("FIX", 1), ("INC", 1), GREATER),
)


@dataclass
class HypothesisRow:
    hypothesis: str
    comparison: str
    expected: str
    alternative: str | None  # None when a side is empty
    p_value: float | None
    accepted: bool
    n_a: int
    n_b: int
    results: dict = field(default_factory=dict, repr=False)

    @property
    def status(self) -> str:
        if self.alternative is None:
            return "insufficient data"
        return "accepted" if self.accepted else "null not rejected"


@dataclass
class HypothesisTable:
    rows: list
    alpha: float

    def row(self, comparison: str) -> HypothesisRow:
        for r in self.rows:
            if r.comparison == comparison:
                return r
        raise KeyError(comparison)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["hypothesis", "comparison", "alternative", "p_value", "accepted", "n_a", "n_b"])
        for r in self.rows:
            w.writerow([
                r.hypothesis,
                r.comparison,
                r.alternative or "",
                "" if r.p_value is None else f"{r.p_value:.6g}",
                str(r.accepted).lower(),
                r.n_a,
                r.n_b,
            ])
        return buf.getvalue()

    def render(self) -> str:
        lines = [f"{'Hypothesis':<11}{'Comparison':<13}{'Result':<28}Sizes"]
        for r in self.rows:
            if r.alternative is None:
                cell = "(-)(-)"
            else:
                p = "p<2.22e-16" if r.p_value < 2.22e-16 else f"p={r.p_value:.4g}"
                cell = f"{SYMBOL[r.alternative]}, {p}" + (", (*)" if r.accepted else "")
            lines.append(f"{r.hypothesis:<11}{r.comparison:<13}{cell:<28}({r.n_a}, {r.n_b})")
        return "\n".join(lines) + "\n"


def decide(a: Sample, b: Sample, alpha: float = 0.05) -> tuple[str, float, bool, dict]:
    """Pick the reported alternative for one comparison.

    The smaller one-sided p wins if it is below ``alpha``; otherwise the
    two-sided result is reported and the null is retained.
    """
    res = {alt: wmw_test(a, b, alt, alpha) for alt in ALTERNATIVES}
    best = min((GREATER, LESS), key=lambda alt: res[alt].p_value)
    if res[best].p_value < alpha:
        return best, res[best].p_value, True, res
    return TWO_SIDED, res[TWO_SIDED].p_value, False, res


def centrality_samples(records: Mapping[str, BugRecord], index: WindowIndex, window_days: int = 30,
                       include_absent: bool = True, categories=CATEGORIES) -> dict:
    """All FIX1 ... INC2 samples in one pass over the resolved bugs."""
    samples = {(c, ph): Sample([], c, ph) for c in categories for ph in (1, 2)}
    for rec in records.values():
        if not rec.resolved or rec.category not in categories:
            continue
        for ph in (1, 2):
            score, present = reporter_eigenvector(index, rec.created_at, rec.reporter_id, ph, window_days)
            if present or include_absent:
                samples[(rec.category, ph)].values.append(score)
    return samples


def hypothesis_suite(records: Mapping[str, BugRecord], index: WindowIndex, alpha: float = 0.05,
                     window_days: int = 30, include_absent: bool = True,
                     vocab: Vocabulary = DEFAULT_VOCABULARY, samples: dict | None = None) -> HypothesisTable:
    if samples is None:
        samples = centrality_samples(records, index, window_days, include_absent)
    rows = []
    for hyp, ka, kb, expected in COMPARISONS:
        if "INC" in (ka[0], kb[0]) and not vocab.incomplete_statuses:
            continue
        a, b = samples[ka], samples[kb]
        comparison = f"{a.name}~{b.name}"
        if not a.values or not b.values:
            rows.append(HypothesisRow(hyp, comparison, expected, None, None, False, len(a), len(b)))
            continue
        alt, p, accepted, res = decide(a, b, alpha)
        rows.append(HypothesisRow(hyp, comparison, expected, alt, p, accepted, len(a), len(b), res))
    return HypothesisTable(rows, alpha)
