import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bugnet.events import (
    FAULTY,
    UNRESOLVED,
    VALID,
    BugRecord,
    CalledOnUnresolved,
    ChangeEvent,
    DuplicateCreate,
    MalformedLine,
    OrphanEvent,
    UnlabeledCategory,
    Vocabulary,
    assemble_bug_records,
    corpus_stats,
    event_to_line,
    label_validity,
    parse_event_stream,
    parse_timestamp,
    records_to_events,
    resolve_category,
    write_events,
)

T0 = parse_timestamp("2003-10-05T12:00:00Z")


def stream(*lines):
    return io.BytesIO("\n".join(lines).encode())


def test_parse_single_create():
    evs = parse_event_stream(stream('{"bug":"1","ts":"2003-10-05T12:00:00Z","actor":"u1","type":"CREATE","value":""}'))
    assert evs == [ChangeEvent("1", T0, "u1", "CREATE", "")]


def test_parse_not_json_strict():
    with pytest.raises(MalformedLine) as exc:
        parse_event_stream(stream("not json"))
    assert exc.value.line == 1


def test_parse_two_lines_in_order():
    evs = parse_event_stream(stream(
        '{"bug":"1","ts":"2003-10-05T12:00:00Z","actor":"u1","type":"CREATE","value":""}',
        '{"bug":"1","ts":"2003-10-05T12:00:01Z","actor":"u1","type":"CC_ADD","value":"u2"}',
    ))
    assert [e.kind for e in evs] == ["CREATE", "CC_ADD"]
    assert evs[1].timestamp == T0 + 1


@pytest.mark.parametrize("bad", [
    '{"bug":"1","ts":"2003-10-05T12:00:00Z","actor":"u1","type":"COMMENT","value":"x"}',
    '{"bug":"1","ts":"yesterday","actor":"u1","type":"CREATE","value":""}',
    '{"bug":"1","ts":"2003-10-05T12:00:00Z","actor":"u1","type":"CREATE"}',
    '{"bug":"1","ts":"2003-10-05T12:00:00Z","actor":"u1","type":"CC_ADD","value":""}',
    '[1, 2]',
])
def test_malformed_variants(bad):
    with pytest.raises(MalformedLine):
        parse_event_stream(stream(bad))


def test_lenient_mode_skips_and_counts():
    errors = []
    evs = parse_event_stream(stream(
        "# a comment",
        "garbage",
        '{"bug":"1","ts":"2003-10-05T12:00:00Z","actor":"u1","type":"CREATE","value":""}',
        "",
        "{also bad",
    ), strict=False, errors=errors)
    assert len(evs) == 1
    assert [e.line for e in errors] == [2, 5]


def ev(bug, t, actor, kind, value=""):
    return ChangeEvent(bug, T0 + t, actor, kind, value)


def test_assemble_fixed_bug():
    recs = assemble_bug_records([
        ev("1", 0, "u1", "CREATE"),
        ev("1", 10, "u9", "RESOLUTION", "FIXED"),
        ev("1", 10, "u9", "STATUS", "RESOLVED"),
    ])
    rec = recs["1"]
    assert rec.reporter_id == "u1" and rec.created_at == T0
    assert rec.resolved and rec.category == "FIX" and rec.label == VALID


def test_orphan_event():
    with pytest.raises(OrphanEvent):
        assemble_bug_records([ev("1", 0, "u1", "CREATE"), ev("2", 1, "u1", "CC_ADD", "u2")])


def test_duplicate_create():
    with pytest.raises(DuplicateCreate):
        assemble_bug_records([ev("1", 0, "u1", "CREATE"), ev("1", 1, "u2", "CREATE")])


def test_create_only_is_unresolved():
    rec = assemble_bug_records([ev("1", 0, "u1", "CREATE")])["1"]
    assert not rec.resolved and rec.category == UNRESOLVED and rec.label == "Unlabeled"


def test_events_sorted_stable_on_ties():
    recs = assemble_bug_records([
        ev("1", 0, "u1", "CREATE"),
        ev("1", 5, "a", "CC_ADD", "x"),
        ev("1", 5, "b", "CC_ADD", "y"),
        ev("1", 2, "c", "CC_ADD", "z"),
    ])
    assert [e.actor_id for e in recs["1"].events] == ["u1", "c", "a", "b"]


def _resolved(*extra):
    return BugRecord("1", "u1", T0, (ev("1", 0, "u1", "CREATE"),) + extra, True)


@pytest.mark.parametrize("resolution,cat", [
    ("FIXED", "FIX"), ("DUPLICATE", "DUP"), ("INVALID", "INV"), ("WONTFIX", "WOF"),
])
def test_resolve_category_mapping(resolution, cat):
    assert resolve_category(_resolved(ev("1", 1, "x", "RESOLUTION", resolution))) == cat


def test_incomplete_overrides_final_resolution():
    rec = _resolved(ev("1", 1, "x", "STATUS", "INCOMPLETE"), ev("1", 2, "x", "RESOLUTION", "FIXED"))
    assert resolve_category(rec) == "INC"


def test_final_resolution_wins_after_reopen():
    rec = _resolved(ev("1", 1, "x", "RESOLUTION", "INVALID"), ev("1", 2, "x", "RESOLUTION", "FIXED"))
    assert resolve_category(rec) == "FIX"


def test_unknown_resolution_is_unresolved(caplog):
    assert resolve_category(_resolved(ev("1", 1, "x", "RESOLUTION", "WORKSFORME"))) == UNRESOLVED
    assert "WORKSFORME" in caplog.text


def test_vocabulary_without_incomplete_drops_inc():
    vocab = Vocabulary.from_mapping({"incomplete_statuses": []})
    rec = _resolved(ev("1", 1, "x", "STATUS", "INCOMPLETE"), ev("1", 2, "x", "RESOLUTION", "FIXED"))
    assert resolve_category(rec, vocab) == "FIX"


def test_vocabulary_from_toml(tmp_path):
    p = tmp_path / "vocab.toml"
    p.write_text('resolved_statuses = ["DONE"]\nincomplete_statuses = ["NEEDINFO"]\n'
                 '[resolution_map]\nFIXED = "FIX"\nNOTABUG = "INV"\n')
    vocab = Vocabulary.load(p)
    recs = assemble_bug_records([
        ev("1", 0, "u1", "CREATE"),
        ev("1", 1, "x", "RESOLUTION", "NOTABUG"),
        ev("1", 1, "x", "STATUS", "DONE"),
    ], vocab)
    assert recs["1"].category == "INV"


def test_resolve_on_unresolved_raises():
    with pytest.raises(CalledOnUnresolved):
        resolve_category(BugRecord("1", "u1", T0, (ev("1", 0, "u1", "CREATE"),), False))


@pytest.mark.parametrize("cat,label", [
    ("FIX", VALID), ("WOF", VALID), ("INC", FAULTY), ("DUP", FAULTY), ("INV", FAULTY),
])
def test_label_validity(cat, label):
    assert label_validity(cat) == label


def test_label_validity_unresolved():
    with pytest.raises(UnlabeledCategory):
        label_validity(UNRESOLVED)


def test_corpus_stats_arithmetic():
    events = [ev("1", 0, "u1", "CREATE"), ev("1", 1, "u1", "CC_ADD", "u2")]
    events += [ev("2", 0, "u2", "CREATE"), ev("2", 1, "u3", "RESOLUTION", "FIXED"),
               ev("2", 1, "u3", "STATUS", "RESOLVED")]
    events += [ev("3", 0, "u3", "CREATE"), ev("3", 1, "u1", "STATUS", "INCOMPLETE"),
               ev("3", 2, "u1", "RESOLUTION", "INVALID"), ev("3", 2, "u1", "STATUS", "RESOLVED")]
    st_ = corpus_stats(assemble_bug_records(events))
    assert st_.total_bugs == 3 and st_.total_events == 9
    assert st_.changes_per_report == 3.0
    assert st_.resolved_count == 2
    assert st_.category_counts == {"FIX": 1, "DUP": 0, "INV": 0, "WOF": 0, "INC": 1}
    assert st_.category_fractions["FIX"] == 0.5 and st_.category_fractions["INC"] == 0.5


def test_corpus_stats_empty():
    st_ = corpus_stats({})
    assert st_.total_bugs == 0 and st_.changes_per_report == 0.0 and st_.resolved_count == 0
    assert set(st_.category_fractions.values()) == {0.0}


# -- properties ---------------------------------------------------------------

users = st.sampled_from([f"u{i}" for i in range(6)])


@st.composite
def corpora(draw):
    n_bugs = draw(st.integers(1, 6))
    events = []
    for b in range(n_bugs):
        t = draw(st.integers(0, 100))
        events.append(ev(str(b), t, draw(users), "CREATE"))
        for _ in range(draw(st.integers(0, 5))):
            t += draw(st.integers(0, 20))
            kind = draw(st.sampled_from(["CC_ADD", "ASSIGN", "STATUS", "RESOLUTION"]))
            if kind in ("CC_ADD", "ASSIGN"):
                value = draw(users)
            elif kind == "STATUS":
                value = draw(st.sampled_from(["NEW", "RESOLVED", "INCOMPLETE", "VERIFIED"]))
            else:
                value = draw(st.sampled_from(["FIXED", "DUPLICATE", "INVALID", "WONTFIX"]))
            events.append(ev(str(b), t, draw(users), kind, value))
    return events


@settings(max_examples=60, deadline=None)
@given(corpora(), st.randoms(use_true_random=False))
def test_order_independence(events, rnd):
    base = assemble_bug_records(events)
    # interleave bugs randomly while keeping each bug's own order
    per_bug = {}
    for e in events:
        per_bug.setdefault(e.bug_id, []).append(e)
    queues = [list(v) for v in per_bug.values()]
    shuffled = []
    while queues:
        q = rnd.choice(queues)
        shuffled.append(q.pop(0))
        if not q:
            queues.remove(q)
    assert assemble_bug_records(shuffled) == base


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_round_trip(events):
    recs = assemble_bug_records(events)
    buf = io.StringIO()
    write_events(records_to_events(recs), buf)
    text = buf.getvalue()
    again = assemble_bug_records(parse_event_stream(io.StringIO(text)))
    assert again == recs
    buf2 = io.StringIO()
    write_events(records_to_events(again), buf2)
    assert buf2.getvalue() == text


@settings(max_examples=60, deadline=None)
@given(corpora())
def test_partition_of_resolved(events):
    for rec in assemble_bug_records(events).values():
        if rec.resolved and rec.category != UNRESOLVED:
            assert rec.category in ("FIX", "DUP", "INV", "WOF", "INC")
            assert rec.label == label_validity(rec.category)
        if rec.category in ("FIX", "DUP", "INV", "WOF", "INC"):
            assert rec.resolved


def test_event_line_format():
    line = event_to_line(ev("7", 0, "u1", "CC_ADD", "u2"))
    assert line == '{"bug": "7", "ts": "2003-10-05T12:00:00Z", "actor": "u1", "type": "CC_ADD", "value": "u2"}'
