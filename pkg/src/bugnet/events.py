"""Event-stream parsing and per-bug record assembly.

The input is JSON Lines, one field update per line::

    {"bug": "1", "ts": "2003-10-05T12:00:00Z", "actor": "u1", "type": "CREATE", "value": ""}

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import json
import logging
import sys
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

KINDS = ("CREATE", "CC_ADD", "ASSIGN", "STATUS", "RESOLUTION")
CATEGORIES = ("FIX", "DUP", "INV", "WOF", "INC")
UNRESOLVED = "UNRESOLVED"
VALID, FAULTY, UNLABELED = "Valid", "Faulty", "Unlabeled"

_KEYS = {"bug", "ts", "actor", "type", "value"}


class EventError(ValueError):
    pass


class MalformedLine(EventError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class OrphanEvent(EventError):
    pass


class DuplicateCreate(EventError):
    pass


class CalledOnUnresolved(EventError):
    pass


class UnlabeledCategory(EventError):
    pass


@dataclass(frozen=True)
class ChangeEvent:
    bug_id: str
    timestamp: int  # unix seconds, UTC
    actor_id: str
    kind: str
    value: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if (self.kind == "CREATE") != (self.value == ""):
            raise ValueError("value must be empty exactly for CREATE events")


@dataclass(frozen=True)
class Vocabulary:
    """Community-specific status and resolution strings."""

    resolved_statuses: frozenset = frozenset({"RESOLVED", "VERIFIED", "CLOSED"})
    incomplete_statuses: frozenset = frozenset({"INCOMPLETE"})
    resolution_map: Mapping[str, str] = field(
        default_factory=lambda: {
            "FIXED": "FIX",
            "DUPLICATE": "DUP",
            "INVALID": "INV",
            "WONTFIX": "WOF",
        }
    )

    @classmethod
    def from_mapping(cls, data: Mapping) -> "Vocabulary":
        kw = {}
        if "resolved_statuses" in data:
            kw["resolved_statuses"] = frozenset(data["resolved_statuses"])
        if "incomplete_statuses" in data:
            kw["incomplete_statuses"] = frozenset(data["incomplete_statuses"])
        if "resolution_map" in data:
            rmap = dict(data["resolution_map"])
            bad = set(rmap.values()) - set(CATEGORIES)
            if bad:
                raise ValueError(f"resolution_map targets unknown categories {sorted(bad)}")
            kw["resolution_map"] = rmap
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "rb") as fh:
            return cls.from_mapping(tomllib.load(fh))


DEFAULT_VOCABULARY = Vocabulary()


@dataclass(frozen=True)
class BugRecord:
    bug_id: str
    reporter_id: str
    created_at: int
    events: tuple
    resolved: bool
    category: str = UNRESOLVED
    label: str = UNLABELED


@dataclass
class CorpusStats:
    total_bugs: int = 0
    total_events: int = 0
    changes_per_report: float = 0.0
    resolved_count: int = 0
    category_counts: dict = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0))
    category_fractions: dict = field(default_factory=lambda: dict.fromkeys(CATEGORIES, 0.0))

    def to_dict(self) -> dict:
        return {
            "total_bugs": self.total_bugs,
            "total_events": self.total_events,
            "changes_per_report": self.changes_per_report,
            "resolved_count": self.resolved_count,
            "category_counts": dict(self.category_counts),
            "category_fractions": dict(self.category_fractions),
        }


# -- timestamps ---------------------------------------------------------------

def parse_timestamp(text: str) -> int:
    if not isinstance(text, str):
        raise ValueError("timestamp must be a string")
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


# -- parsing ------------------------------------------------------------------

def _parse_line(text: str, lineno: int) -> ChangeEvent:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedLine(lineno, f"bad JSON ({exc.msg})") from None
    if not isinstance(obj, dict) or set(obj) != _KEYS:
        raise MalformedLine(lineno, f"expected keys {sorted(_KEYS)}")
    if not all(isinstance(obj[k], str) for k in _KEYS):
        raise MalformedLine(lineno, "all values must be strings")
    if obj["type"] not in KINDS:
        raise MalformedLine(lineno, f"unknown kind {obj['type']!r}")
    try:
        ts = parse_timestamp(obj["ts"])
    except ValueError:
        raise MalformedLine(lineno, f"unparseable timestamp {obj['ts']!r}") from None
    try:
        return ChangeEvent(obj["bug"], ts, obj["actor"], obj["type"], obj["value"])
    except ValueError as exc:
        raise MalformedLine(lineno, str(exc)) from None


def parse_event_stream(stream: IO | Iterable, strict: bool = True, errors: list | None = None):
    """Parse a JSON Lines event stream (bytes or text lines).

    In lenient mode malformed lines are skipped; each MalformedLine is
    appended to ``errors`` when a list is given.
    """
    events = []
    for lineno, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                exc = MalformedLine(lineno, "invalid UTF-8")
                if strict:
                    raise exc from None
                if errors is not None:
                    errors.append(exc)
                continue
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        try:
            events.append(_parse_line(text, lineno))
        except MalformedLine as exc:
            if strict:
                raise
            log.warning("skipping %s", exc)
            if errors is not None:
                errors.append(exc)
    return events


def read_events(path, strict: bool = True) -> list:
    with open(path, "rb") as fh:
        return parse_event_stream(fh, strict=strict)


def event_to_line(ev: ChangeEvent) -> str:
    return json.dumps(
        {
            "bug": ev.bug_id,
            "ts": format_timestamp(ev.timestamp),
            "actor": ev.actor_id,
            "type": ev.kind,
            "value": ev.value,
        }
    )


def write_events(events: Iterable[ChangeEvent], fh: IO[str]) -> None:
    for ev in events:
        fh.write(event_to_line(ev))
        fh.write("\n")


def records_to_events(records: Mapping[str, BugRecord]) -> list:
    """Flatten records into one canonical (timestamp, bug, per-bug order) list."""
    keyed = [
        (ev.timestamp, rec.bug_id, i, ev)
        for rec in records.values()
        for i, ev in enumerate(rec.events)
    ]
    keyed.sort(key=lambda k: k[:3])
    return [k[3] for k in keyed]


# -- assembly -----------------------------------------------------------------

def assemble_bug_records(events: Iterable[ChangeEvent], vocab: Vocabulary = DEFAULT_VOCABULARY) -> dict:
    per_bug = defaultdict(list)
    creators = {}
    for ev in events:
        if ev.kind == "CREATE":
            if ev.bug_id in creators:
                raise DuplicateCreate(f"bug {ev.bug_id!r} has more than one CREATE event")
            creators[ev.bug_id] = ev
        per_bug[ev.bug_id].append(ev)

    orphans = set(per_bug) - set(creators)
    if orphans:
        raise OrphanEvent(f"events reference bugs without CREATE: {sorted(orphans)[:5]}")

    records = {}
    for bug_id, evs in per_bug.items():
        create = creators[bug_id]
        # stable sort keeps file order on equal timestamps; CREATE leads its own instant
        evs = sorted(evs, key=lambda e: (e.timestamp, e.kind != "CREATE"))
        if evs[0] is not create:
            raise OrphanEvent(f"bug {bug_id!r} has events before its CREATE")
        resolved = any(e.kind == "STATUS" and e.value in vocab.resolved_statuses for e in evs)
        rec = BugRecord(bug_id, create.actor_id, create.timestamp, tuple(evs), resolved)
        if resolved:
            category = resolve_category(rec, vocab)
            label = label_validity(category) if category != UNRESOLVED else UNLABELED
            rec = BugRecord(bug_id, create.actor_id, create.timestamp, tuple(evs), True, category, label)
        records[bug_id] = rec
    return records


def resolve_category(record: BugRecord, vocab: Vocabulary = DEFAULT_VOCABULARY) -> str:
    if not record.resolved:
        raise CalledOnUnresolved(f"bug {record.bug_id!r} is not resolved")
    final = None
    for ev in record.events:
        if ev.kind == "STATUS" and ev.value in vocab.incomplete_statuses:
            return "INC"
        if ev.kind == "RESOLUTION":
            final = ev.value
    category = vocab.resolution_map.get(final)
    if category is None:
        log.warning("bug %s: unknown resolution %r", record.bug_id, final)
        return UNRESOLVED
    return category


def label_validity(category: str) -> str:
    if category in ("FIX", "WOF"):
        return VALID
    if category in ("DUP", "INV", "INC"):
        return FAULTY
    raise UnlabeledCategory(f"category {category!r} has no validity label")


def corpus_stats(records: Mapping[str, BugRecord]) -> CorpusStats:
    st = CorpusStats()
    st.total_bugs = len(records)
    st.total_events = sum(len(r.events) for r in records.values())
    st.changes_per_report = st.total_events / st.total_bugs if st.total_bugs else 0.0
    st.resolved_count = sum(r.resolved for r in records.values())
    counts = Counter(r.category for r in records.values() if r.resolved)
    for cat in CATEGORIES:
        st.category_counts[cat] = counts.get(cat, 0)
        st.category_fractions[cat] = counts.get(cat, 0) / st.resolved_count if st.resolved_count else 0.0
    return st


def render_stats(st: CorpusStats) -> str:
    rows = [
        ("Total bug reports", f"{st.total_bugs:,}"),
        ("Change events", f"{st.total_events:,}"),
        ("Changes / report", f"{st.changes_per_report:.2f}"),
        (
            "Resolved bugs (resolved/total)",
            f"{st.resolved_count:,} ({st.resolved_count / st.total_bugs if st.total_bugs else 0:.2f})",
        ),
    ]
    for cat in CATEGORIES:
        rows.append((f"{cat} ({cat} / resolved)", f"{st.category_counts[cat]:,} ({st.category_fractions[cat]:.2f})"))
    width = max(len(k) for k, _ in rows)
    return "\n".join(f"{k:<{width}}  {v:>18}" for k, v in rows) + "\n"
