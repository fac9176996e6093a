import io

import numpy as np
import pytest

from popseq.errors import EmptyLogError, ParseError
from popseq.events import (EventLog, InteractionEvent, emit_events,
                           ingest_events, user_sequences)


def _ingest(text: str) -> EventLog:
    return ingest_events(io.StringIO(text))


HEADER = "user_id,item_id,timestamp,event_type\n"


class TestIngest:
    def test_three_row_example(self):
        log = _ingest(HEADER +
                      "u1,i1,10,play\n"
                      "u1,i1,20,like\n"
                      "u2,i2,15,skip\n")
        assert [ev.timestamp for ev in log.events] == [10, 15, 20]
        assert log.catalog.index("i1") == 0
        assert log.catalog.index("i2") == 1
        assert len(log) == 3

    def test_unknown_event_type_reports_line(self):
        with pytest.raises(ParseError) as exc:
            _ingest(HEADER + "u1,i1,10,play\nu1,i1,20,love\n")
        assert exc.value.line == 3

    def test_wrong_arity(self):
        with pytest.raises(ParseError) as exc:
            _ingest(HEADER + "u1,i1,10\n")
        assert exc.value.line == 2

    def test_non_integer_timestamp(self):
        with pytest.raises(ParseError) as exc:
            _ingest(HEADER + "u1,i1,soon,play\n")
        assert exc.value.line == 2

    def test_empty_input(self):
        with pytest.raises(EmptyLogError):
            _ingest("")
        with pytest.raises(EmptyLogError):
            _ingest(HEADER)

    def test_bad_header(self):
        with pytest.raises(ParseError):
            _ingest("user,item,ts,kind\nu1,i1,10,play\n")

    def test_shuffled_timestamps_sorted_like_oracle(self):
        rng = np.random.default_rng(42)
        rows = [(f"u{rng.integers(5)}", f"i{rng.integers(20)}",
                 int(rng.integers(1000)), "play") for _ in range(100)]
        text = HEADER + "".join(f"{u},{i},{t},{e}\n" for u, i, t, e in rows)
        log = _ingest(text)
        # independent oracle: stable sort of the raw rows by timestamp
        expected = sorted(rows, key=lambda r: r[2])
        assert [(ev.user, ev.item, ev.timestamp) for ev in log.events] == \
            [(u, i, t) for u, i, t, _ in expected]

    def test_duplicate_rows_kept(self):
        log = _ingest(HEADER + "u1,i1,10,play\nu1,i1,10,play\n")
        assert len(log) == 2

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        rows = "".join(
            f"u{rng.integers(4)},i{rng.integers(9)},{rng.integers(500)},"
            f"{np.random.default_rng(i).choice(['like', 'play', 'skip', 'dislike'])}\n"
            for i in range(60))
        log = _ingest(HEADER + rows)
        buf = io.StringIO()
        emit_events(log, buf)
        again = _ingest(buf.getvalue())
        assert again == log


class TestUserSequences:
    def test_basic_order(self):
        log = _ingest(HEADER +
                      "u1,i1,1,play\nu1,i2,2,play\nu1,i1,3,play\n")
        seqs = user_sequences(log, 150)
        assert seqs["u1"].items.tolist() == [0, 1, 0]

    def test_truncation_keeps_most_recent(self):
        rows = "".join(f"u1,i{k},{k},play\n" for k in range(5))
        log = _ingest(HEADER + rows)
        seqs = user_sequences(log, 3)
        assert seqs["u1"].items.tolist() == [2, 3, 4]
        assert len(seqs["u1"]) <= 3

    def test_brute_force_replay(self):
        """Every sequence equals the suffix of the user's chronological items."""
        rng = np.random.default_rng(3)
        events = [InteractionEvent(f"u{rng.integers(20)}",
                                   f"i{rng.integers(50)}",
                                   int(t), "play")
                  for t in rng.permutation(1000)]
        log = EventLog.from_events(events)
        replay: dict[str, list[int]] = {}
        for ev in sorted(events, key=lambda e: e.timestamp):
            replay.setdefault(ev.user, []).append(log.catalog.index(ev.item))
        l_max = 17
        seqs = user_sequences(log, l_max)
        for user, items in replay.items():
            assert seqs[user].items.tolist() == items[-l_max:]

    def test_l_max_validation(self):
        log = _ingest(HEADER + "u1,i1,1,play\n")
        with pytest.raises(ValueError):
            user_sequences(log, 0)
