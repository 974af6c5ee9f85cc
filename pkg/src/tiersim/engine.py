"""Deterministic discrete-event core.

Single-threaded, future-event-list simulation. The event list is a heap
of (time, seq, ...) tuples; seq is a global schedule counter, so ties in
time resolve in scheduling order and a run is a pure function of the
scenario (model + seed). No wall-clock, no shared mutable state.

Two event kinds exist. An arrival materializes one session of a class
and offers it to the first resource on its path; each arrival schedules
its successor, so at most one arrival per class is ever pending. A
service completion releases the replica, promotes the head of that
replica's queue, and forwards the session to its next visit at the same
timestamp. Admission is all-or-nothing: a session refused at any visit
(no idle replica, no free waiting slot) is dropped in its entirety and
the drop is charged to the resource that refused it.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush

from .balancer import ReplicaView, select_replica
from .errors import EngineEmptyError, InternalError
from .metrics import MetricsReport, RunAccumulator, finalize
from .model import BalancerPolicy, ScenarioModel, StopKind
from .workload import Stream, make_sampler

_ARRIVAL = 0
_COMPLETE = 1

COMPLETED = "completed"
DROPPED = "dropped"


@dataclass(frozen=True)
class Event:
    """What step() just applied, for inspection in tests and tools."""

    time: float
    seq: int
    kind: str
    class_name: str | None = None
    resource: str | None = None
    replica: int | None = None
    request_id: int | None = None


@dataclass(frozen=True)
class ResourceSnapshot:
    busy: tuple[bool, ...]
    queue_lengths: tuple[int, ...]
    in_system: int
    offered: int
    served: int
    dropped: int


class Request:
    """One session walking its class path. Freed once terminal."""

    __slots__ = ("id", "class_name", "class_index", "visit_index", "arrival_time", "enqueue_time", "service_start", "outcome", "dropped_at", "visits")

    def __init__(self, rid: int, class_name: str, class_index: int, arrival_time: float):
        self.id = rid
        self.class_name = class_name
        self.class_index = class_index
        self.visit_index = 0
        self.arrival_time = arrival_time
        self.enqueue_time = arrival_time
        self.service_start = 0.0
        self.outcome: str | None = None
        self.dropped_at: str | None = None
        self.visits: list[tuple[float, float, float]] = []


class _ResourceRuntime:
    __slots__ = (
        "name",
        "index",
        "replicas",
        "queue_capacity",
        "policy",
        "busy",
        "busy_since",
        "serving",
        "queues",
        "waiting",
        "busy_count",
        "rr_cursor",
        "service_stream",
        "balance_stream",
        "acc",
    )

    def __init__(self, spec, index: int, seed: int, acc):
        self.name = spec.name
        self.index = index
        self.replicas = spec.replicas
        self.queue_capacity = spec.queue_capacity
        self.policy = spec.balancer
        self.busy = [False] * spec.replicas
        self.busy_since = [0.0] * spec.replicas
        self.serving: list[Request | None] = [None] * spec.replicas
        self.queues: list[deque[Request]] = [deque() for _ in range(spec.replicas)]
        self.waiting = 0
        self.busy_count = 0
        self.rr_cursor = 0
        self.service_stream = Stream(seed, f"resource:{spec.name}:service")
        self.balance_stream = Stream(seed, f"resource:{spec.name}:balance")
        self.acc = acc


class _ClassRuntime:
    __slots__ = ("name", "index", "max_requests", "path", "scheduled", "stream", "sample_arrival", "acc")

    def __init__(self, cls, index: int, seed: int, path, acc):
        self.name = cls.name
        self.index = index
        self.max_requests = cls.max_requests
        self.path = path  # tuple of (_ResourceRuntime, demand sampler)
        self.scheduled = 0
        self.stream = Stream(seed, f"class:{cls.name}:arrival")
        self.sample_arrival = make_sampler(cls.arrival, self.stream)
        self.acc = acc


class Engine:
    """One simulation run over a validated scenario model."""

    def __init__(self, model: ScenarioModel):
        self.model = model
        self.clock = 0.0
        self.terminals = 0
        self.events_applied = 0
        self._seq = 0
        self._heap: list = []
        self._next_request_id = 0
        self._finished = False

        seed = model.run.seed
        self.accumulator = RunAccumulator(model)
        self._resources: dict[str, _ResourceRuntime] = {}
        for i, spec in enumerate(model.resources()):
            self._resources[spec.name] = _ResourceRuntime(spec, i, seed, self.accumulator.resources[spec.name])
        self._classes: list[_ClassRuntime] = []
        for i, cls in enumerate(model.classes):
            path = tuple(
                (self._resources[v.resource], make_sampler(v.demand, self._resources[v.resource].service_stream))
                for v in cls.path
            )
            self._classes.append(_ClassRuntime(cls, i, seed, path, self.accumulator.classes[cls.name]))

        for cr in self._classes:
            if cr.max_requests >= 1:
                self._schedule_arrival(cr, cr.sample_arrival())
                cr.scheduled = 1

    # -- scheduling ----------------------------------------------------

    def _push(self, time: float, kind: int, a, b=None, c=None) -> None:
        if not math.isfinite(time):
            raise InternalError(f"scheduled event time is not finite: {time!r}")
        self._seq += 1
        heappush(self._heap, (time, self._seq, kind, a, b, c))

    def _schedule_arrival(self, cr: _ClassRuntime, time: float) -> None:
        self._push(time, _ARRIVAL, cr)

    # -- handlers ------------------------------------------------------

    def _on_arrival(self, now: float, cr: _ClassRuntime) -> Request:
        if cr.scheduled < cr.max_requests:
            cr.scheduled += 1
            self._schedule_arrival(cr, now + cr.sample_arrival())
        self._next_request_id += 1
        req = Request(self._next_request_id, cr.name, cr.index, now)
        cr.acc.generated += 1
        self._offer(req, cr, now)
        return req

    def _offer(self, req: Request, cr: _ClassRuntime, now: float) -> None:
        """Present the request at its current visit; admit or drop."""
        res, demand_sampler = cr.path[req.visit_index]
        acc = res.acc
        acc.offered += 1

        if res.replicas == 1:
            # fast path: any policy degenerates to replica 0
            if res.busy[0]:
                if res.waiting >= res.queue_capacity:
                    self._drop(req, cr, res, now)
                    return
                req.enqueue_time = now
                res.queues[0].append(req)
                res.waiting += 1
                acc.occupancy_change(now, 1)
                return
            replica = 0
        else:
            free_slots = res.queue_capacity - res.waiting
            view = ReplicaView(
                backlogs=tuple((1 if res.busy[r] else 0) + len(res.queues[r]) for r in range(res.replicas)),
                waiting_free=free_slots,
                rr_cursor=res.rr_cursor,
            )
            replica = select_replica(view, res.policy, res.balance_stream)
            if replica is None:
                self._drop(req, cr, res, now)
                return
            if res.policy is BalancerPolicy.ROUND_ROBIN:
                res.rr_cursor = (replica + 1) % res.replicas
            if res.busy[replica]:
                req.enqueue_time = now
                res.queues[replica].append(req)
                res.waiting += 1
                acc.occupancy_change(now, 1)
                return

        req.enqueue_time = now
        acc.occupancy_change(now, 1)
        self._start_service(res, replica, req, demand_sampler, now)

    def _drop(self, req: Request, cr: _ClassRuntime, res: _ResourceRuntime, now: float) -> None:
        req.outcome = DROPPED
        req.dropped_at = res.name
        res.acc.record_drop(now)
        cr.acc.record_session_drop()
        self.terminals += 1

    def _start_service(self, res: _ResourceRuntime, replica: int, req: Request, demand_sampler, now: float) -> None:
        if res.busy_count == 0:
            res.acc.all_idle_ended(now)
        res.busy[replica] = True
        res.busy_count += 1
        res.busy_since[replica] = now
        res.serving[replica] = req
        req.service_start = now
        self._push(now + demand_sampler(), _COMPLETE, res, replica, req)

    def _on_complete(self, now: float, res: _ResourceRuntime, replica: int, req: Request) -> None:
        acc = res.acc
        enqueue = req.enqueue_time
        start = req.service_start
        req.visits.append((enqueue, start, now))
        acc.record_visit(enqueue, start, now)
        acc.occupancy_change(now, -1)

        queue = res.queues[replica]
        if queue:
            nxt = queue.popleft()
            res.waiting -= 1
            res.busy_since[replica] = now
            res.serving[replica] = nxt
            nxt.service_start = now
            demand_sampler = self._classes[nxt.class_index].path[nxt.visit_index][1]
            self._push(now + demand_sampler(), _COMPLETE, res, replica, nxt)
        else:
            res.busy[replica] = False
            res.serving[replica] = None
            res.busy_count -= 1
            if res.busy_count == 0:
                acc.all_idle_began(now)

        cr = self._classes[req.class_index]
        req.visit_index += 1
        if req.visit_index < len(cr.path):
            self._offer(req, cr, now)
        else:
            req.outcome = COMPLETED
            cr.acc.record_completion(req.arrival_time, now - req.arrival_time)
            self.terminals += 1

    # -- driving -------------------------------------------------------

    def _apply(self, item) -> None:
        time = item[0]
        if time < self.clock:
            raise InternalError(f"event time {time!r} precedes clock {self.clock!r}")
        self.clock = time
        self.events_applied += 1
        if item[2] == _ARRIVAL:
            self._on_arrival(time, item[3])
        else:
            self._on_complete(time, item[3], item[4], item[5])

    def step(self) -> Event:
        """Apply exactly one event and describe it. Testing hook."""
        if self._finished:
            raise InternalError("simulation already finalized")
        if not self._heap:
            raise EngineEmptyError("event list is empty")
        item = heappop(self._heap)
        self._apply(item)
        if item[2] == _ARRIVAL:
            return Event(time=item[0], seq=item[1], kind="arrival", class_name=item[3].name)
        req = item[5]
        return Event(
            time=item[0],
            seq=item[1],
            kind="service_complete",
            class_name=req.class_name,
            resource=item[3].name,
            replica=item[4],
            request_id=req.id,
        )

    def run(self) -> MetricsReport:
        """Drive to the stop rule and return the finalized report."""
        if self._finished:
            raise InternalError("simulation already finalized")
        # dispatch is inlined here (rather than via step) because this
        # loop dominates large runs; semantics match _apply exactly
        heap = self._heap
        pop = heappop
        on_arrival = self._on_arrival
        on_complete = self._on_complete
        stop = self.model.run.stop
        if stop.kind is StopKind.AFTER_REQUESTS:
            target = stop.n
            while heap and self.terminals < target:
                item = pop(heap)
                time = item[0]
                if time < self.clock:
                    raise InternalError(f"event time {time!r} precedes clock {self.clock!r}")
                self.clock = time
                self.events_applied += 1
                if item[2] == _ARRIVAL:
                    on_arrival(time, item[3])
                else:
                    on_complete(time, item[3], item[4], item[5])
            elapsed = self.clock
        else:
            horizon = stop.t
            while heap and heap[0][0] <= horizon:
                item = pop(heap)
                time = item[0]
                if time < self.clock:
                    raise InternalError(f"event time {time!r} precedes clock {self.clock!r}")
                self.clock = time
                self.events_applied += 1
                if item[2] == _ARRIVAL:
                    on_arrival(time, item[3])
                else:
                    on_complete(time, item[3], item[4], item[5])
            elapsed = horizon
            self.clock = horizon
        return self._finalize(elapsed)

    def _finalize(self, elapsed: float) -> MetricsReport:
        self._finished = True
        acc = self.accumulator
        warmup = acc.warmup
        for res in self._resources.values():
            ra = res.acc
            for r in range(res.replicas):
                if res.busy[r]:
                    # partially served at stop: count busy time up to the stop clock
                    ra.busy_time += max(0.0, elapsed - max(res.busy_since[r], warmup))
            ra.close(elapsed)
            acc.queued_at_stop[res.name] = res.waiting
            acc.in_service_at_stop[res.name] = res.busy_count
        return finalize(acc, elapsed)

    # -- inspection ----------------------------------------------------

    @property
    def pending_events(self) -> int:
        return len(self._heap)

    def snapshot(self, resource: str) -> ResourceSnapshot:
        res = self._resources[resource]
        return ResourceSnapshot(
            busy=tuple(res.busy),
            queue_lengths=tuple(len(q) for q in res.queues),
            in_system=res.busy_count + res.waiting,
            offered=res.acc.offered,
            served=res.acc.served,
            dropped=res.acc.dropped,
        )


def simulate(model: ScenarioModel) -> MetricsReport:
    """Build an engine for the model, run it, return the report."""
    return Engine(model).run()
