"""Synthetic bug-tracker streams with a planted core/periphery signal.

Core users interact densely with each other every month and occasionally
pull in a peripheral user; bugs reported by core users are Valid with
probability ``p_core_valid``, the rest with ``p_peripheral_valid``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .events import ChangeEvent, parse_timestamp
from .netbuild import DAY

MONTH = 30 * DAY


class InvalidConfig(ValueError):
    pass


@dataclass
class SynthConfig:
    n_users: int = 500
    n_bugs: int = 2000
    months: int = 12
    core_fraction: float = 0.2
    p_core_valid: float = 0.8
    p_peripheral_valid: float = 0.2
    # CC/ASSIGN events each core user emits per month toward other core users
    interactions_per_month: int = 4
    # ... and toward peripheral users
    peripheral_interactions: int = 3
    assign_fraction: float = 0.2
    wontfix_fraction: float = 0.1  # share of Valid bugs resolved WONTFIX
    faulty_mix: tuple = (0.5, 0.3, 0.2)  # DUP, INV, INC
    seed: int = 0
    start: str = "2010-01-01T00:00:00Z"

    def validate(self) -> None:
        if self.n_users < 2 or self.n_bugs < 0 or self.months < 2:
            raise InvalidConfig("need n_users >= 2, n_bugs >= 0, months >= 2")
        if not 0 < self.core_fraction < 1:
            raise InvalidConfig("core_fraction must lie in (0, 1)")
        for name in ("p_core_valid", "p_peripheral_valid", "assign_fraction", "wontfix_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise InvalidConfig(f"{name} must lie in [0, 1]")
        mix = tuple(self.faulty_mix)
        if len(mix) != 3 or min(mix) < 0 or not math.isclose(sum(mix), 1.0, abs_tol=1e-9):
            raise InvalidConfig("faulty_mix needs three non-negative shares summing to 1")
        if self.interactions_per_month < 0 or self.peripheral_interactions < 0:
            raise InvalidConfig("interaction counts must be non-negative")
        if math.ceil(self.core_fraction * self.n_users) >= self.n_users:
            raise InvalidConfig("core must leave at least one peripheral user")


@dataclass
class SynthTruth:
    """Ground truth kept alongside the stream, for tests and experiments."""

    core: set = field(default_factory=set)
    reporter_is_core: dict = field(default_factory=dict)
    category: dict = field(default_factory=dict)


def n_core(cfg: SynthConfig) -> int:
    return math.ceil(cfg.core_fraction * cfg.n_users)


def generate_community(cfg: SynthConfig, truth: SynthTruth | None = None) -> list:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    t0 = parse_timestamp(cfg.start)
    horizon = cfg.months * MONTH
    users = [f"u{i}" for i in range(cfg.n_users)]
    k = n_core(cfg)
    core, periphery = users[:k], users[k:]
    if truth is not None:
        truth.core = set(core)

    events = []
    # tracker bug carrying interactions until the first real report exists
    events.append(ChangeEvent("0", t0, core[0], "CREATE"))
    bug_times = np.sort(rng.integers(t0 + MONTH, t0 + horizon, size=cfg.n_bugs))

    for b, created in enumerate(bug_times.tolist(), start=1):
        bug_id = str(b)
        from_core = rng.random() < k / cfg.n_users
        reporter = core[rng.integers(k)] if from_core else periphery[rng.integers(len(periphery))]
        p_valid = cfg.p_core_valid if from_core else cfg.p_peripheral_valid
        if rng.random() < p_valid:
            category = "WOF" if rng.random() < cfg.wontfix_fraction else "FIX"
        else:
            category = ("DUP", "INV", "INC")[rng.choice(3, p=list(cfg.faulty_mix))]
        if truth is not None:
            truth.reporter_is_core[bug_id] = from_core
            truth.category[bug_id] = category
        events.append(ChangeEvent(bug_id, created, reporter, "CREATE"))
        resolved_at = created + int(rng.integers(DAY, 20 * DAY))
        if category == "INC":
            mid = created + (resolved_at - created) // 2
            events.append(ChangeEvent(bug_id, mid, core[rng.integers(k)], "STATUS", "INCOMPLETE"))
        resolution = {"FIX": "FIXED", "WOF": "WONTFIX", "DUP": "DUPLICATE", "INV": "INVALID", "INC": "INVALID"}[category]
        resolver = core[rng.integers(k)]
        events.append(ChangeEvent(bug_id, resolved_at, resolver, "RESOLUTION", resolution))
        events.append(ChangeEvent(bug_id, resolved_at, resolver, "STATUS", "RESOLVED"))

    for month in range(cfg.months):
        lo = t0 + month * MONTH
        for actor in core:
            targets = [core[j] for j in rng.integers(k, size=cfg.interactions_per_month)]
            targets += [periphery[j] for j in rng.integers(len(periphery), size=cfg.peripheral_interactions)]
            for target in targets:
                ts = int(rng.integers(lo, lo + MONTH))
                # attach to the most recent bug created before the interaction
                pos = int(np.searchsorted(bug_times, ts, side="left"))
                bug_id = str(pos) if pos > 0 else "0"
                kind = "ASSIGN" if rng.random() < cfg.assign_fraction else "CC_ADD"
                if target != actor:
                    events.append(ChangeEvent(bug_id, ts, actor, kind, target))

    order = sorted(range(len(events)), key=lambda i: (events[i].timestamp, i))
    return [events[i] for i in order]
