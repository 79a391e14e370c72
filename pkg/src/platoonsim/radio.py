"""Range-limited broadcast medium with receiver-side overlap collision detection.

The channel is idealized: no attenuation, no fading, no capture. A reception
collides iff another transmission whose sender is in range of the receiver
overlaps it on air, or the receiver itself was transmitting (half-duplex).
Carrier sensing sees a transmission only once its signal has propagated to
the listener, so two nodes that start within one propagation delay of each
other are mutually blind and will overlap.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Callable

from .frames import Frame
from .kernel import Event, EventKind, Kernel, SEC


@dataclass(slots=True, frozen=True)
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(slots=True)
class RadioConfig:
    range_m: float = 300.0
    data_rate_bps: int = 6_000_000
    propagation_mps: float = 3.0e8
    preamble_ns: int = 0
    # carrier-sense detection latency: a signal must have been arriving for
    # this long before clear-channel assessment reports it (preamble
    # detection / energy integration time; OFDM-scale default)
    cca_detect_ns: int = 4_000

    def validate(self) -> None:
        if self.data_rate_bps <= 0:
            raise ValueError("data_rate_bps must be > 0")
        if self.range_m < 0 or self.propagation_mps <= 0:
            raise ValueError("range_m must be >= 0 and propagation_mps > 0")
        if self.preamble_ns < 0 or self.cca_detect_ns < 0:
            raise ValueError("preamble_ns and cca_detect_ns must be >= 0")


def tx_duration(size_bytes: int, cfg: RadioConfig) -> int:
    """On-air time in ns: preamble plus payload bits at the configured rate."""
    if size_bytes < 0:
        raise ValueError("negative frame size")
    if size_bytes == 0:
        return cfg.preamble_ns
    bits = size_bytes * 8
    return cfg.preamble_ns + -(-bits * SEC // cfg.data_rate_bps)


@dataclass(slots=True)
class Transmission:
    sender: int
    frame: Frame
    start: int
    end: int
    origin: Position
    index: int = -1
    receivers_expected: int = 0
    receivers_done: int = 0
    receivers_collided: int = 0
    # per-receiver flags, kept only when the medium records outcomes
    outcomes: dict[int, bool] | None = None
    _overlap_cache: list["Transmission"] | None = None

    @property
    def collided(self) -> bool:
        return self.receivers_collided > 0


@dataclass(slots=True)
class ReceptionOutcome:
    receiver: int
    transmission: Transmission
    delivered_at: int
    collided: bool


class Medium:
    """Broadcast channel shared by all registered vehicles.

    `on_frame(receiver_id, frame, outcome)` callbacks registered per vehicle
    get each delivery; collided frames are delivered with the flag set so the
    caller can discard them (no partial decode).
    """

    def __init__(self, kernel: Kernel, cfg: RadioConfig, record_outcomes: bool = False):
        self.kernel = kernel
        self.cfg = cfg
        self.record_outcomes = record_outcomes
        self.positions: dict[int, Position] = {}
        self.handlers: dict[int, Callable[[int, Frame, ReceptionOutcome], None]] = {}
        self.log: list[Transmission] = []           # all transmissions, by start
        self._busy_until: dict[int, int] = {}       # per-sender serialization
        self._max_dur = 0

    def register(self, vid: int, pos: Position,
                 handler: Callable[[int, Frame, ReceptionOutcome], None] | None = None) -> None:
        if vid in self.positions:
            raise ValueError(f"vehicle {vid} already registered")
        self.positions[vid] = pos
        if handler is not None:
            self.handlers[vid] = handler

    def prop_delay(self, dist: float) -> int:
        return math.ceil(dist * SEC / self.cfg.propagation_mps)

    # -- transmission ------------------------------------------------------

    def broadcast(self, sender: int, frame: Frame, start: int | None = None) -> Transmission:
        now = self.kernel.now
        if start is None:
            start = now
        if start != now:
            raise ValueError("broadcast must start at the current simulated time")
        if sender not in self.positions:
            raise ValueError(f"sender {sender} not registered")
        if now < self._busy_until.get(sender, 0):
            raise RuntimeError(
                f"vehicle {sender} is already transmitting at {now} ns; "
                "MAC layers must serialize their own transmissions"
            )
        origin = self.positions[sender]
        end = start + tx_duration(frame.size, self.cfg)
        tx = Transmission(sender=sender, frame=frame, start=start, end=end, origin=origin)
        tx.index = len(self.log)
        if self.record_outcomes:
            tx.outcomes = {}
        self.log.append(tx)
        self._busy_until[sender] = end
        self._max_dur = max(self._max_dur, end - start)

        for vid, pos in self.positions.items():
            if vid == sender:
                continue
            dist = origin.distance(pos)
            if dist > self.cfg.range_m:
                continue
            tx.receivers_expected += 1
            at = end + self.prop_delay(dist)
            self.kernel.schedule(Event(at, vid, EventKind.FRAME_DELIVERY,
                                       self._deliver, payload=(tx, vid)))
        return tx

    def _deliver(self, ev: Event) -> None:
        tx, receiver = ev.payload
        collided = self._collided_at(tx, receiver)
        self._account(tx, receiver, collided)
        outcome = ReceptionOutcome(receiver, tx, ev.fire_at, collided)
        handler = self.handlers.get(receiver)
        if handler is not None:
            handler(receiver, tx.frame, outcome)

    def _account(self, tx: Transmission, receiver: int, collided: bool) -> None:
        tx.receivers_done += 1
        if collided:
            tx.receivers_collided += 1
        if tx.outcomes is not None:
            tx.outcomes[receiver] = collided

    def finalize(self) -> None:
        """Resolve outcomes for receptions whose delivery events never fired.

        Called once at run end so that every logged transmission carries the
        same flags it would have had with more simulated time. Frames are not
        handed to protocol handlers here; only accounting is completed.
        """
        for tx in self.log:
            if tx.receivers_done >= tx.receivers_expected:
                continue
            done = set(tx.outcomes) if tx.outcomes is not None else None
            for vid, pos in self.positions.items():
                if vid == tx.sender:
                    continue
                dist = tx.origin.distance(pos)
                if dist > self.cfg.range_m:
                    continue
                if done is not None and vid in done:
                    continue
                if done is None and tx.receivers_done >= tx.receivers_expected:
                    break
                self._account(tx, vid, self._collided_at(tx, vid))

    # -- collision predicate -------------------------------------------------

    def _overlapping(self, tx: Transmission) -> list[Transmission]:
        if tx._overlap_cache is not None:
            return tx._overlap_cache
        found: list[Transmission] = []
        lo = bisect_left(self.log, tx.start - self._max_dur, key=lambda t: t.start)
        for other in self.log[lo:]:
            if other.start >= tx.end:
                break
            if other is tx:
                continue
            if other.start < tx.end and tx.start < other.end:
                found.append(other)
        tx._overlap_cache = found
        return found

    def _collided_at(self, tx: Transmission, receiver: int) -> bool:
        rpos = self.positions[receiver]
        for other in self._overlapping(tx):
            if other.origin.distance(rpos) <= self.cfg.range_m:
                return True
        return False

    # -- carrier sense -------------------------------------------------------

    def is_busy(self, listener: int, at: int) -> bool:
        """True iff an in-range signal is on air at the listener and detectable.

        Sensed intervals are shifted by propagation delay and detection takes
        cca_detect_ns, so a transmission that started moments ago is not yet
        visible; two nodes committing within that window will overlap.
        """
        pos = self.positions[listener]
        lo = bisect_left(self.log, at - self._max_dur - self._sense_slack(),
                         key=lambda t: t.start)
        for tx in self.log[lo:]:
            if tx.start > at:
                break
            dist = tx.origin.distance(pos)
            if dist > self.cfg.range_m:
                continue
            delay = self.prop_delay(dist)
            if tx.start + delay + self.cfg.cca_detect_ns <= at < tx.end + delay:
                return True
        return False

    def idle_from(self, listener: int, at: int) -> int:
        """Earliest time > at when every currently sensed transmission has ended."""
        pos = self.positions[listener]
        horizon = at
        lo = bisect_left(self.log, at - self._max_dur - self._sense_slack(),
                         key=lambda t: t.start)
        for tx in self.log[lo:]:
            if tx.start > at:
                break
            dist = tx.origin.distance(pos)
            if dist > self.cfg.range_m:
                continue
            delay = self.prop_delay(dist)
            if tx.start + delay + self.cfg.cca_detect_ns <= at < tx.end + delay:
                horizon = max(horizon, tx.end + delay)
        return horizon

    def _sense_slack(self) -> int:
        return self.prop_delay(self.cfg.range_m)
