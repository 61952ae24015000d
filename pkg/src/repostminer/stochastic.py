"""Stochastic enrichment and simulation of discovered nets.

Token replay walks a trace over the net, routing through silent transitions
where needed, and records for every firing when the transition became enabled
and when it fired.  Those waits feed per-account delay distributions, arc
probabilities estimated from token consumption, and the replay-based Markov
chain used for entropy.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter, deque
from dataclasses import dataclass
from statistics import mean, median
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .eventlog import Event, EventLog, Trace
from .petri import Marking, PetriNet, is_free_choice, net_from_json, net_to_json

PROBABILITY_TOLERANCE = 1e-9


class EnrichmentError(RuntimeError):
    """No conforming trace was available to estimate probabilities from."""


class StatsError(ValueError):
    """Waiting-time statistics requested over no data."""


@dataclass(frozen=True)
class EmpiricalDelay:
    """Observed waiting times of one transition, in seconds."""

    samples: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("empirical delay needs at least one sample")
        if any(s < 0 for s in self.samples):
            raise ValueError("delays must be nonnegative")

    def mean(self) -> float:
        return float(mean(self.samples))


@dataclass(frozen=True)
class Firing:
    transition: str
    label: str | None
    enabled_at: float
    fired_at: float

    @property
    def wait(self) -> float:
        return max(0.0, self.fired_at - self.enabled_at)


@dataclass(frozen=True)
class ReplayResult:
    trace_id: str
    firings: tuple[Firing, ...]
    conforming: bool
    failed_index: int | None = None


@dataclass(frozen=True)
class StochasticPetriNet:
    """Free-choice net plus per-place arc probabilities and empirical delays.

    Probabilities cover every outgoing place arc and sum to one per place;
    silent transitions never carry a delay distribution.
    """

    net: PetriNet
    arc_probabilities: Mapping[tuple[str, str], float]
    delay_distributions: Mapping[str, EmpiricalDelay]

    def __post_init__(self) -> None:
        if not is_free_choice(self.net):
            raise ValueError("underlying net must be free-choice")
        for (p, t), prob in self.arc_probabilities.items():
            if (p, t) not in set(self.net.arcs):
                raise ValueError(f"probability on missing arc ({p}, {t})")
            if not 0.0 <= prob <= 1.0:
                raise ValueError(f"probability {prob} outside [0, 1]")
        for place in self.net.places:
            outs = self.net.postset(place)
            if not outs:
                continue
            total = sum(self.arc_probabilities.get((place, t), 0.0) for t in outs)
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                raise ValueError(f"probabilities out of place {place} sum to {total}")
        for t in self.delay_distributions:
            if t not in set(self.net.transitions):
                raise ValueError(f"delay for unknown transition {t}")
            if self.net.is_silent(t):
                raise ValueError(f"silent transition {t} cannot carry delays")


def _counts(tokens: dict[str, list[float]]) -> Marking:
    return Marking.of({p: len(ts) for p, ts in tokens.items()})


def _enabled_in(net: PetriNet, counts: dict[str, int], t: str) -> bool:
    return all(counts.get(p, 0) >= 1 for p in net.preset(t))


def _fire_counts(net: PetriNet, counts: dict[str, int], t: str) -> dict[str, int]:
    out = dict(counts)
    pre, post = net.preset(t), net.postset(t)
    for p in pre:
        if p not in post:
            out[p] -= 1
            if out[p] == 0:
                del out[p]
    for p in post:
        if p not in pre:
            out[p] = out.get(p, 0) + 1
    return out


def _silent_path(net: PetriNet, counts: dict[str, int],
                 goal_label: str | None) -> tuple[list[str], str] | list[str] | None:
    """Shortest deterministic silent-firing path.

    With a ``goal_label``, returns ``(tau_path, transition)`` where the final
    transition carries that label and is enabled after the path.  With
    ``goal_label=None``, returns the path to the nearest dead marking (no
    transition enabled at all).  Search depth is bounded by the number of
    silent transitions in the net; ties break on transition id order.
    """
    silents = [t for t in net.transitions if net.is_silent(t)]
    max_depth = len(silents)

    def key(c: Mapping[str, int]) -> tuple[tuple[str, int], ...]:
        return tuple(sorted(c.items()))

    start = dict(counts)
    queue: deque[tuple[dict[str, int], list[str]]] = deque([(start, [])])
    seen = {key(start)}
    while queue:
        current, path = queue.popleft()
        if goal_label is None:
            if not any(_enabled_in(net, current, t) for t in net.transitions):
                return path
        else:
            for t in net.transitions:
                if net.label(t) == goal_label and _enabled_in(net, current, t):
                    return path, t
        if len(path) >= max_depth:
            continue
        for t in silents:
            if not _enabled_in(net, current, t):
                continue
            succ = _fire_counts(net, current, t)
            k = key(succ)
            if k in seen:
                continue
            seen.add(k)
            queue.append((succ, path + [t]))
    return None


def _fire_timed(net: PetriNet, tokens: dict[str, list[float]], t: str,
                fired_at: float | None = None) -> tuple[float, float]:
    """Consume the oldest token per input place; return (enabled_at, fired_at).

    Silent transitions fire immediately at their enablement time and
    propagate the consumed arrival times; labeled transitions stamp their
    outputs with the observed firing time.
    """
    pre, post = net.preset(t), net.postset(t)
    enabled_at = 0.0
    for p in pre:
        enabled_at = max(enabled_at, tokens[p][0])
    for p in pre:
        if p not in post:
            heapq.heappop(tokens[p])
    out_time = enabled_at if fired_at is None else fired_at
    for p in post:
        if p not in pre:
            heapq.heappush(tokens.setdefault(p, []), out_time)
    return enabled_at, out_time


def replay_trace(net: PetriNet, trace: Trace) -> ReplayResult:
    """Replay one trace, extracting enablement and firing times per event.

    For each observed event the shortest silent path that enables a matching
    transition is fired first; initial tokens carry the trace's first
    timestamp so the opening firing waits zero.  After the last event the
    replay silently completes to the nearest dead marking, which attributes
    skipped branches to their silent transitions.  If some event cannot be
    enabled the result is nonconforming at that index.
    """
    start_time = float(trace.events[0].timestamp) if trace.events else 0.0
    tokens: dict[str, list[float]] = {}
    for place, n in net.initial_marking.items():
        if n > 0:
            tokens[place] = [start_time] * n

    firings: list[Firing] = []

    def fire_path(path: Iterable[str]) -> None:
        for silent in path:
            en, fired = _fire_timed(net, tokens, silent)
            firings.append(Firing(silent, None, en, fired))

    for index, event in enumerate(trace.events):
        found = _silent_path(net, {p: len(v) for p, v in tokens.items() if v},
                             event.activity)
        if found is None:
            return ReplayResult(trace.trace_id, tuple(firings), False, index)
        path, target = found
        fire_path(path)
        enabled_at, fired_at = _fire_timed(net, tokens, target,
                                           float(event.timestamp))
        firings.append(Firing(target, event.activity, enabled_at, fired_at))

    completion = _silent_path(net, {p: len(v) for p, v in tokens.items() if v}, None)
    if completion is not None:
        fire_path(completion)
    return ReplayResult(trace.trace_id, tuple(firings), True, None)


def replay_log(net: PetriNet, log: EventLog) -> list[ReplayResult]:
    return [replay_trace(net, trace) for trace in log.traces]


def enrich_from_replays(net: PetriNet,
                        replays: Sequence[ReplayResult]) -> StochasticPetriNet:
    """Estimate arc probabilities and delay distributions from replays.

    ``Pr(p, t)`` is the share of tokens consumed from ``p`` that went to
    ``t``; places never visited by any conforming replay fall back to a
    uniform split.  Nonconforming replays are ignored.
    """
    conforming = [r for r in replays if r.conforming]
    if not conforming:
        raise EnrichmentError("no conforming replay to enrich from")

    consumed: Counter[tuple[str, str]] = Counter()
    waits: dict[str, list[float]] = {}
    for result in conforming:
        for firing in result.firings:
            for place in net.preset(firing.transition):
                consumed[(place, firing.transition)] += 1
            if firing.label is not None:
                waits.setdefault(firing.transition, []).append(firing.wait)

    probabilities: dict[tuple[str, str], float] = {}
    for place in net.places:
        outs = net.postset(place)
        if not outs:
            continue
        total = sum(consumed[(place, t)] for t in outs)
        for t in outs:
            probabilities[(place, t)] = (
                consumed[(place, t)] / total if total else 1.0 / len(outs))

    delays = {t: EmpiricalDelay(tuple(v)) for t, v in waits.items()}
    return StochasticPetriNet(net, probabilities, delays)


def enrich(net: PetriNet, log: EventLog) -> StochasticPetriNet:
    """Replay the log and build the stochastic net in one step."""
    return enrich_from_replays(net, replay_log(net, log))


@dataclass(frozen=True)
class ActivityWaits:
    mean: float
    median: float
    count: int


@dataclass(frozen=True)
class WaitingStats:
    """Per-account waiting summaries plus the mean of per-account means."""

    per_activity: dict[str, ActivityWaits]
    mean_of_means: float


def waiting_time_stats(replays: Sequence[ReplayResult]) -> WaitingStats:
    """Summarize waits per account; the headline number averages the
    per-account means, so prolific accounts do not dominate."""
    waits: dict[str, list[float]] = {}
    for result in replays:
        if not result.conforming:
            continue
        for firing in result.firings:
            if firing.label is not None:
                waits.setdefault(firing.label, []).append(firing.wait)
    if not waits:
        raise StatsError("no conforming replay with observable firings")
    per_activity = {a: ActivityWaits(float(mean(v)), float(median(v)), len(v))
                    for a, v in sorted(waits.items())}
    overall = float(mean(s.mean for s in per_activity.values()))
    return WaitingStats(per_activity, overall)


def fspn_to_json(fspn: StochasticPetriNet) -> str:
    """Net JSON extended with arc probabilities and delay sample arrays."""
    doc = json.loads(net_to_json(fspn.net))
    doc["arc_probabilities"] = [
        {"place": p, "transition": t, "probability": prob}
        for (p, t), prob in sorted(fspn.arc_probabilities.items())
    ]
    doc["delay_distributions"] = {
        t: list(d.samples) for t, d in sorted(fspn.delay_distributions.items())
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def fspn_from_json(text: str | IO[str]) -> StochasticPetriNet:
    doc = json.loads(text if isinstance(text, str) else text.read())
    net = net_from_json(json.dumps(doc))
    probabilities = {(e["place"], e["transition"]): float(e["probability"])
                     for e in doc["arc_probabilities"]}
    delays = {t: EmpiricalDelay(tuple(float(x) for x in samples))
              for t, samples in doc["delay_distributions"].items()}
    return StochasticPetriNet(net, probabilities, delays)


def simulate(fspn: StochasticPetriNet, n_traces: int, seed: int = 42,
             max_firings: int = 1000) -> EventLog:
    """Generate an event log by playing the stochastic net forward.

    Each trace starts at clock zero.  Marked places route one token to an
    output transition drawn from the arc probabilities; labeled transitions
    fire after a delay resampled from their empirical distribution, silent
    ones immediately.  Firings due at the same instant execute in transition
    id order.  Each trace uses its own random stream derived from
    ``(seed, trace index)``, so generation is reproducible and traces are
    independent.
    """
    if n_traces < 0:
        raise ValueError("n_traces must be nonnegative")
    net = fspn.net
    t_index = {t: i for i, t in enumerate(net.transitions)}
    delay_pool = {t: np.asarray(d.samples, dtype=float)
                  for t, d in fspn.delay_distributions.items()}

    traces: list[Trace] = []
    for trace_no in range(n_traces):
        rng = np.random.default_rng((seed, trace_no))
        counts: dict[str, int] = {p: n for p, n in net.initial_marking.items() if n > 0}
        pending: list[tuple[float, int, str]] = []
        emitted: list[tuple[float, int, str]] = []
        clock = 0.0
        fired = 0

        def select_once() -> bool:
            nonlocal fired
            progressed = False
            for place in net.places:
                if counts.get(place, 0) < 1:
                    continue
                outs = net.postset(place)
                if not outs:
                    continue
                if len(outs) == 1 and len(net.preset(outs[0])) > 1:
                    join = outs[0]
                    if not _enabled_in(net, counts, join):
                        continue
                    chosen = join
                    for p in net.preset(join):
                        counts[p] -= 1
                        if counts[p] == 0:
                            del counts[p]
                else:
                    probs = [fspn.arc_probabilities.get((place, t), 0.0) for t in outs]
                    total = sum(probs)
                    if total <= 0:
                        continue
                    chosen = outs[rng.choice(len(outs), p=[x / total for x in probs])]
                    counts[place] -= 1
                    if counts[place] == 0:
                        del counts[place]
                delay = 0.0
                if not net.is_silent(chosen):
                    pool = delay_pool.get(chosen)
                    if pool is not None and len(pool):
                        delay = float(pool[rng.integers(len(pool))])
                heapq.heappush(pending, (clock + delay, t_index[chosen], chosen))
                fired += 1
                progressed = True
            return progressed

        def pop_due_batch() -> None:
            nonlocal clock
            due = pending[0][0]
            clock = due
            while pending and pending[0][0] == due:
                _, idx, transition = heapq.heappop(pending)
                for place in net.postset(transition):
                    counts[place] = counts.get(place, 0) + 1
                if not net.is_silent(transition):
                    emitted.append((due, idx, net.label(transition)))

        while fired < max_firings:
            progressed = select_once()
            if not pending:
                if not progressed:
                    break
                continue
            if progressed and pending[0][0] > clock:
                continue
            pop_due_batch()
        while pending:  # firings selected before the cap still complete
            pop_due_batch()

        trace_id = f"t{trace_no}"
        events = tuple(Event(trace_id, label, int(round(when)))
                       for when, _, label in sorted(emitted))
        traces.append(Trace(trace_id, events))
    return EventLog(tuple(traces))
