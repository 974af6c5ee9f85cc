"""Random-variate streams with one independent generator per consumer.

Every stochastic decision in a run is drawn from a stream named after
its consumer (for example ``class:web:arrival`` or
``resource:SP_Disk:service``). Each stream is a Philox 4x64 counter-based
generator keyed by SHA-256(master seed || consumer name), so:

* the same (seed, consumer) pair always yields the same sequence, on any
  platform and in any build;
* adding or removing a consumer never perturbs another consumer's
  samples, because no stream is derived from another's position.

Only raw uniform doubles come from the generator. Variates are formed by
explicit inverse transforms here, so the sampling algorithm is part of
this module's contract rather than an upstream library detail.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from .errors import DomainError
from .model import Distribution, DistKind

# How many uniforms to pull from the bit generator per refill. Purely a
# speed knob; the sample sequence is identical for any positive size.
_BUFFER = 1024

STREAM_ALGORITHM = "philox4x64/sha256-key/inverse-cdf"


def stream_key(master_seed: int, consumer: str) -> int:
    """128-bit Philox key for a consumer, stable across builds."""
    if not (0 <= master_seed < 2**64):
        raise DomainError(f"master seed must be an unsigned 64-bit integer, got {master_seed!r}")
    digest = hashlib.sha256(master_seed.to_bytes(8, "little") + b"\x00" + consumer.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


class Stream:
    """Deterministic uniform source for one named consumer."""

    __slots__ = ("consumer", "_gen", "_buf", "_idx", "_drawn")

    def __init__(self, master_seed: int, consumer: str):
        self.consumer = consumer
        self._gen = np.random.Generator(np.random.Philox(key=stream_key(master_seed, consumer)))
        self._buf: list[float] = []
        self._idx = 0
        self._drawn = 0

    def uniform01(self) -> float:
        """Next double in [0, 1). Never returns 1.0, so log(1 - u) is finite."""
        if self._idx >= len(self._buf):
            self._buf = self._gen.random(_BUFFER).tolist()
            self._idx = 0
        u = self._buf[self._idx]
        self._idx += 1
        self._drawn += 1
        return u

    @property
    def draws(self) -> int:
        """How many uniforms this stream has handed out."""
        return self._drawn

    @property
    def state(self) -> dict:
        """Opaque, JSON-serializable snapshot of the stream position."""
        return {"consumer": self.consumer, "algorithm": STREAM_ALGORITHM, "draws": self._drawn}


def sample(dist: Distribution, stream: Stream) -> float:
    """Draw one non-negative variate from ``dist`` using ``stream``.

    DETERMINISTIC consumes nothing from the stream; the other kinds
    consume exactly one uniform per call.
    """
    kind = dist.kind
    if kind is DistKind.EXPONENTIAL:
        # inverse CDF: -ln(1 - u) / rate, u in [0, 1)
        return -math.log1p(-stream.uniform01()) / dist.rate
    if kind is DistKind.DETERMINISTIC:
        return dist.value
    if kind is DistKind.UNIFORM:
        return dist.lo + (dist.hi - dist.lo) * stream.uniform01()
    raise DomainError(f"cannot sample distribution kind {kind!r}")


def make_sampler(dist: Distribution, stream: Stream):
    """Bind ``dist`` to ``stream`` as a zero-argument callable.

    Draw-for-draw identical to sample(dist, stream); the engine uses
    these closures to keep dispatch out of its event loop.
    """
    kind = dist.kind
    if kind is DistKind.EXPONENTIAL:
        uniform01 = stream.uniform01
        log1p = math.log1p
        rate = dist.rate
        return lambda: -log1p(-uniform01()) / rate
    if kind is DistKind.DETERMINISTIC:
        value = dist.value
        return lambda: value
    if kind is DistKind.UNIFORM:
        uniform01 = stream.uniform01
        lo = dist.lo
        span = dist.hi - dist.lo
        return lambda: lo + span * uniform01()
    raise DomainError(f"cannot sample distribution kind {kind!r}")
