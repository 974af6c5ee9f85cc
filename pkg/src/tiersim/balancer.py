"""Replica selection for multi-server resources.

The engine keeps one FIFO queue per replica; when a request is admitted
the balancer decides which replica's queue (or idle server) receives it.
Selection sees only a snapshot of backlogs plus the shared pool of free
waiting slots, so policies are pure given that view (RANDOM draws from
the stream it is handed).

All policies agree on when to refuse: a request is turned away only when
no replica is idle and no waiting slot is free, i.e. the resource is at
its replicas + queue_capacity ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InternalError
from .model import BalancerPolicy
from .workload import Stream


@dataclass(frozen=True)
class ReplicaView:
    """Snapshot the balancer decides from.

    backlogs[r] = 1 if replica r is serving, plus its queued requests.
    waiting_free = remaining shared waiting slots (may be inf).
    rr_cursor = next index for ROUND_ROBIN; owned and advanced by the caller.
    """

    backlogs: tuple[int, ...]
    waiting_free: int | float
    rr_cursor: int = 0


def select_replica(view: ReplicaView, policy: BalancerPolicy, stream: Stream | None = None) -> int | None:
    """Pick a replica index for one admission, or None when full.

    None is returned only when every replica is busy and the waiting
    pool is exhausted. When waiting slots remain the policy places
    freely; once the pool is empty only an idle replica can accept, so
    ROUND_ROBIN and RANDOM advance cyclically from their pick to the
    first idle one rather than overbooking a queue. RANDOM consumes
    exactly one uniform per accepted request and nothing when refusing.
    """
    backlogs = view.backlogs
    n = len(backlogs)
    if n == 0:
        raise InternalError("resource has no replicas")

    no_waiting_room = view.waiting_free <= 0
    if no_waiting_room and min(backlogs) >= 1:
        return None

    if n == 1:
        return 0

    if policy is BalancerPolicy.JSQ:
        best = 0
        best_load = backlogs[0]
        for i in range(1, n):
            if backlogs[i] < best_load:
                best = i
                best_load = backlogs[i]
        return best

    if policy is BalancerPolicy.ROUND_ROBIN:
        start = view.rr_cursor % n
    elif policy is BalancerPolicy.RANDOM:
        if stream is None:
            raise InternalError("RANDOM policy needs a stream")
        start = min(int(stream.uniform01() * n), n - 1)
    else:
        raise InternalError(f"unknown balancer policy {policy!r}")

    if no_waiting_room and backlogs[start] >= 1:
        for j in range(1, n):
            idx = (start + j) % n
            if backlogs[idx] == 0:
                return idx
        raise InternalError("no idle replica despite passing the full check")
    return start


def is_full(backlogs: tuple[int, ...], waiting_free: int | float) -> bool:
    """True when an arriving request would have to be dropped."""
    return waiting_free <= 0 and (not backlogs or min(backlogs) >= 1)


def total_capacity(replicas: int, queue_capacity: int | float) -> int | float:
    """Most requests a resource can hold at once (servers + waiting)."""
    if queue_capacity == math.inf:
        return math.inf
    return replicas + queue_capacity
