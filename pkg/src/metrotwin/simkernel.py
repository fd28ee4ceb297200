"""Deterministic virtual-time event kernel.

All modules measure KPIs, latencies and detection times against the single
virtual clock provided here.  Time is an integer count of nanoseconds since
simulation start (64-bit range), so microsecond-scale probe latencies and
minute-scale attenuation ramps coexist without floating-point drift.

Randomness comes from numpy's Philox 4x64 counter-based bit generator.
Repetition and sub-module streams are split off the run seed via
``SeedSequence`` spawn keys, so draws are reproducible independently of
execution order: the same (seed, spawn path) always yields the same values.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, IO, Iterable, Optional

import numpy as np

from .errors import RunawaySimulation, SchedulingInPast

SimTime = int  # nanoseconds since simulation start

NS = 1
US = 1_000
MS = 1_000_000
SECOND = 1_000_000_000

DEFAULT_EVENT_CAP = 100_000_000


def seconds(x: float) -> SimTime:
    """Convert seconds to integer nanoseconds (nearest)."""
    return round(x * SECOND)


def to_seconds(t: SimTime) -> float:
    return t / SECOND


@dataclass(order=True)
class Event:
    fire_at: SimTime
    sequence: int
    id: int = field(compare=False)
    action: Callable[[], None] = field(compare=False)
    kind: str = field(compare=False, default="")
    cancelled: bool = field(compare=False, default=False)


class SimRng:
    """Splittable deterministic RNG stream.

    Wraps ``numpy.random.Philox`` (counter-based, 4x64).  ``split`` derives an
    independent child stream from an integer label; the (seed, spawn path)
    pair fully determines every draw.
    """

    algorithm = "philox4x64"

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.spawn_key)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def split(self, *labels: int) -> "SimRng":
        return SimRng(self.seed, self.spawn_key + tuple(labels))

    def normal(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        if sigma == 0.0:
            return mu
        return float(self._gen.normal(mu, sigma))

    def lognormal_mean_cv(self, mean: float, cv: float) -> float:
        """Lognormal draw parameterised by its mean and coefficient of variation."""
        if cv == 0.0 or mean == 0.0:
            return mean
        sigma2 = math.log1p(cv * cv)
        mu = math.log(mean) - sigma2 / 2.0
        return float(self._gen.lognormal(mu, math.sqrt(sigma2)))


class Kernel:
    """Single-threaded discrete-event scheduler over virtual nanoseconds.

    Events with equal ``fire_at`` fire in insertion order.  One instance is
    strictly single-threaded; separate instances share nothing.
    """

    def __init__(self, event_cap: int = DEFAULT_EVENT_CAP,
                 trace: Optional[IO[str]] = None):
        self._now: SimTime = 0
        self._heap: list[Event] = []
        self._events: dict[int, Event] = {}
        self._next_id = 1
        self._next_seq = 0
        self._fired = 0
        self.event_cap = event_cap
        self.trace = trace  # file-like; one line "fire_at_ns,sequence,kind" per fired event

    def now(self) -> SimTime:
        return self._now

    def schedule(self, action: Callable[[], None], at: SimTime,
                 kind: str = "") -> int:
        """Enqueue ``action`` to run at virtual time ``at``; returns the event id."""
        if at < self._now:
            raise SchedulingInPast(f"schedule at {at} ns < now {self._now} ns")
        ev = Event(fire_at=at, sequence=self._next_seq, id=self._next_id,
                   action=action, kind=kind or getattr(action, "__name__", ""))
        self._next_id += 1
        self._next_seq += 1
        self._events[ev.id] = ev
        heapq.heappush(self._heap, ev)
        return ev.id

    def schedule_in(self, delay: SimTime, action: Callable[[], None],
                    kind: str = "") -> int:
        return self.schedule(action, self._now + delay, kind=kind)

    def cancel(self, event_id: int) -> bool:
        """True iff the event existed and had not fired; cancelled events never fire."""
        ev = self._events.get(event_id)
        if ev is None or ev.cancelled:
            return False
        ev.cancelled = True
        del self._events[event_id]
        return True

    def _pop_next(self) -> Optional[Event]:
        while self._heap:
            ev = self._heap[0]
            if ev.cancelled:
                heapq.heappop(self._heap)
                continue
            return ev
        return None

    def _fire(self, ev: Event) -> None:
        heapq.heappop(self._heap)
        del self._events[ev.id]
        self._now = ev.fire_at
        self._fired += 1
        if self._fired > self.event_cap:
            raise RunawaySimulation(
                f"fired-event count exceeded cap {self.event_cap}")
        if self.trace is not None:
            self.trace.write(f"{ev.fire_at},{ev.sequence},{ev.kind}\n")
        ev.action()

    def run_until(self, horizon: SimTime) -> int:
        """Fire every event with fire_at <= horizon; clock ends at horizon."""
        if horizon < self._now:
            raise SchedulingInPast(f"horizon {horizon} ns < now {self._now} ns")
        fired = 0
        while True:
            ev = self._pop_next()
            if ev is None or ev.fire_at > horizon:
                break
            self._fire(ev)
            fired += 1
        self._now = horizon
        return fired

    def run_to_end(self) -> SimTime:
        """Drain the queue; returns the fire time of the last event (now() if empty)."""
        last = self._now
        while True:
            ev = self._pop_next()
            if ev is None:
                return last
            self._fire(ev)
            last = ev.fire_at

    @property
    def fired_count(self) -> int:
        return self._fired

    def pending(self) -> Iterable[Event]:
        return (ev for ev in self._heap if not ev.cancelled)
