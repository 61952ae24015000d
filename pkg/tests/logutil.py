"""Shared helpers for building small in-memory logs in tests."""

from repostminer.eventlog import Event, EventLog, Trace


def make_log(seqs, spacing=10, start=0, bot_score=None):
    """Build a log from activity sequences; events are ``spacing`` apart.

    ``seqs`` may also contain (activity, timestamp) pairs for explicit times.
    """
    traces = []
    for i, seq in enumerate(seqs):
        trace_id = f"case{i}"
        events = []
        for j, item in enumerate(seq):
            if isinstance(item, tuple):
                activity, ts = item
            else:
                activity, ts = item, start + spacing * j
            events.append(Event(trace_id, activity, ts, bot_score))
        traces.append(Trace(trace_id, tuple(events)))
    return EventLog(tuple(traces))
