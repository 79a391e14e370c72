"""Baseline medium access: carrier sense with one-shot random backoff.

Sense-before-send without exponential backoff and without acknowledgments:
a frame at the head of the queue transmits immediately on an idle medium;
on a busy medium the node waits for the sensed idle edge, defers a uniform
number of backoff slots, re-senses, and transmits. The window never grows
and every frame is transmitted exactly once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .frames import Frame
from .kernel import Event, EventKind, Kernel, US, uniform
from .radio import Medium


@dataclass(slots=True)
class CsmaConfig:
    # The contention behaviour is deliberately coarse: a 2-slot window with
    # long slots reproduces observed broadcast-collision levels (roughly a
    # 10-50% band across platoon sizes) under this simplified one-shot
    # backoff. For an 802.11p-flavoured parameterization use cw_slots=16,
    # backoff_slot_ns=13_000; collision rates then collapse at sparse load.
    cw_slots: int = 2
    backoff_slot_ns: int = 800 * US

    def validate(self) -> None:
        if self.cw_slots < 1:
            raise ValueError("cw_slots must be >= 1")
        if self.backoff_slot_ns <= 0:
            raise ValueError("backoff_slot_ns must be > 0")


@dataclass(slots=True)
class MacQueueEntry:
    frame: Frame
    enqueued_at: int


class CsmaMac:
    """Per-vehicle FIFO with the baseline access procedure."""

    def __init__(self, vid: int, kernel: Kernel, medium: Medium,
                 cfg: CsmaConfig, rng: np.random.Generator):
        cfg.validate()
        self.vid = vid
        self.kernel = kernel
        self.medium = medium
        self.cfg = cfg
        self.rng = rng
        self.queue: deque[MacQueueEntry] = deque()
        self.serving = False
        self.frames_submitted = 0
        self.frames_transmitted = 0
        self.deferrals = 0

    def submit(self, frame: Frame) -> None:
        self.queue.append(MacQueueEntry(frame, self.kernel.now))
        self.frames_submitted += 1
        if not self.serving:
            self.serving = True
            self._sense()

    # Access procedure for the head-of-line frame. Each step is a kernel
    # event so concurrent vehicles interleave through simulated time.

    def _timer(self, at: int, fn) -> None:
        self.kernel.schedule(Event(at, self.vid, EventKind.TIMER, fn))

    def _sense(self) -> None:
        now = self.kernel.now
        if self.medium.is_busy(self.vid, now):
            self.deferrals += 1
            self._timer(self.medium.idle_from(self.vid, now), self._on_idle_edge)
        else:
            self._transmit()

    def _on_idle_edge(self, ev: Event) -> None:
        now = self.kernel.now
        if self.medium.is_busy(self.vid, now):
            # medium got busy again while waiting: keep waiting for idle
            self._timer(self.medium.idle_from(self.vid, now), self._on_idle_edge)
            return
        backoff = uniform(self.rng, 0, self.cfg.cw_slots - 1) * self.cfg.backoff_slot_ns
        self._timer(now + backoff, self._on_backoff_expired)

    def _on_backoff_expired(self, ev: Event) -> None:
        now = self.kernel.now
        if self.medium.is_busy(self.vid, now):
            # busy again: wait for the new idle edge and draw a fresh backoff
            self.deferrals += 1
            self._timer(self.medium.idle_from(self.vid, now), self._on_idle_edge)
            return
        self._transmit()

    def _transmit(self) -> None:
        entry = self.queue[0]
        tx = self.medium.broadcast(self.vid, entry.frame)
        self._timer(tx.end, self._on_tx_done)

    def _on_tx_done(self, ev: Event) -> None:
        self.queue.popleft()
        self.frames_transmitted += 1
        if self.queue:
            self._sense()
        else:
            self.serving = False
