"""Application-layer slot controller: formation FSM, election, slot schedule, gated dissemination.

Time is carved into repeating windows (default 100 ms) of fixed-length slots.
Slots 0 and 1 are reserved for control traffic: joining vehicles broadcast an
announce at a random offset inside slot 0, the elected master answers with a
slot allocation in slot 1, and members then transmit data only inside their
assigned slots. Election picks the vehicle whose announce carries the earliest
creation timestamp (ties to the lowest id).

Control transmissions in slots 0/1 listen before talk and skip to the next
window when the medium is already busy; that keeps the contended formation
slots nearly collision-free, which is what the random in-slot offsets are for.
Data transmissions never sense: an assigned slot is exclusive by construction.
A frame too large for any slot is transmitted anyway at its slot origin and
overruns into the neighbour slot rather than being dropped, so undersized
slot configurations degrade instead of silently discarding traffic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum, auto

import numpy as np

from .frames import (
    ANNOUNCE_SIZE,
    Frame,
    FrameKind,
    NodeType,
    allocation_size,
    make_allocation,
    make_announce,
)
from .kernel import Event, EventKind, Kernel, MS, uniform
from .radio import Medium, ReceptionOutcome, tx_duration

# Processing guard after a slot boundary: lets in-flight deliveries (at most
# one propagation delay late) land before their slot's content is evaluated.
EVAL_GUARD = 1_000


class ProtocolError(RuntimeError):
    """An FSM event fired in a state where it is not legal."""


class Status(Enum):
    INIT = auto()
    JOINING = auto()
    IN_PLATOON = auto()


class Role(Enum):
    SLAVE = auto()
    MASTER = auto()


@dataclass(slots=True, frozen=True)
class FsmState:
    status: Status
    role: Role


class FsmEvent(Enum):
    WINDOW_START = auto()
    SLOT0_END = auto()
    SLOT1_END = auto()
    ALLOCATION_RECEIVED = auto()
    OWN_SLOT_TRIGGER = auto()
    NO_NEIGHBORS = auto()
    MASTER_LOST = auto()


def _s(status: Status, role: Role) -> FsmState:
    return FsmState(status, role)


# (status, role, event, outcome) -> (next state, actions). Outcomes qualify
# data-dependent events: election results, whether an allocation listed us,
# whether it came from a better master, whether slot 1 produced/delivered an
# allocation. The numbered formation steps of the protocol map onto edges as
# commented. Edges marked "recovery" cover master failure and master conflict,
# which the base protocol leaves open.
LEGAL_EDGES: dict[tuple[Status, Role, FsmEvent, str | None], tuple[FsmState, tuple[str, ...]]] = {
    (Status.INIT, Role.SLAVE, FsmEvent.WINDOW_START, None):
        (_s(Status.JOINING, Role.SLAVE), ("announce",)),
    # joining vehicles re-announce every window until admitted (step 3 restart,
    # step 4 lone-master retry)
    (Status.JOINING, Role.SLAVE, FsmEvent.WINDOW_START, None):
        (_s(Status.JOINING, Role.SLAVE), ("announce",)),
    (Status.JOINING, Role.MASTER, FsmEvent.WINDOW_START, None):
        (_s(Status.JOINING, Role.MASTER), ("announce",)),
    # election at the end of slot 0: steps 1 and 2; step 5 demotes a
    # persisting master when a newer round elects someone earlier
    (Status.JOINING, Role.SLAVE, FsmEvent.SLOT0_END, "won"):
        (_s(Status.JOINING, Role.MASTER), ("allocate",)),
    (Status.JOINING, Role.SLAVE, FsmEvent.SLOT0_END, "lost"):
        (_s(Status.JOINING, Role.SLAVE), ()),
    (Status.JOINING, Role.MASTER, FsmEvent.SLOT0_END, "won"):
        (_s(Status.JOINING, Role.MASTER), ("allocate",)),
    (Status.JOINING, Role.MASTER, FsmEvent.SLOT0_END, "lost"):
        (_s(Status.JOINING, Role.SLAVE), ()),
    # step 4: a master heard nobody and restarts next window
    (Status.JOINING, Role.MASTER, FsmEvent.NO_NEIGHBORS, None):
        (_s(Status.JOINING, Role.MASTER), ("restart",)),
    # step 7: master dispatched its allocation and owns a platoon
    (Status.JOINING, Role.MASTER, FsmEvent.SLOT1_END, "allocated"):
        (_s(Status.IN_PLATOON, Role.MASTER), ()),
    (Status.JOINING, Role.MASTER, FsmEvent.SLOT1_END, "missed"):
        (_s(Status.JOINING, Role.MASTER), ("restart",)),
    # slaves: allocation handling and step 6 confirmation at the slot trigger
    (Status.JOINING, Role.SLAVE, FsmEvent.ALLOCATION_RECEIVED, "listed"):
        (_s(Status.JOINING, Role.SLAVE), ("arm-slot",)),
    (Status.JOINING, Role.SLAVE, FsmEvent.ALLOCATION_RECEIVED, "unlisted"):
        (_s(Status.JOINING, Role.SLAVE), ()),
    (Status.JOINING, Role.SLAVE, FsmEvent.ALLOCATION_RECEIVED, "ignored"):
        (_s(Status.JOINING, Role.SLAVE), ()),
    (Status.JOINING, Role.MASTER, FsmEvent.ALLOCATION_RECEIVED, "superseded"):
        (_s(Status.JOINING, Role.SLAVE), ()),              # recovery: earlier master exists
    (Status.JOINING, Role.MASTER, FsmEvent.ALLOCATION_RECEIVED, "ignored"):
        (_s(Status.JOINING, Role.MASTER), ()),
    (Status.JOINING, Role.SLAVE, FsmEvent.OWN_SLOT_TRIGGER, None):
        (_s(Status.IN_PLATOON, Role.SLAVE), ("confirm",)),
    (Status.JOINING, Role.SLAVE, FsmEvent.SLOT1_END, "allocated"):
        (_s(Status.JOINING, Role.SLAVE), ()),
    (Status.JOINING, Role.SLAVE, FsmEvent.SLOT1_END, "missed"):
        (_s(Status.JOINING, Role.SLAVE), ("restart",)),    # step 3
    # steady state
    (Status.IN_PLATOON, Role.SLAVE, FsmEvent.WINDOW_START, None):
        (_s(Status.IN_PLATOON, Role.SLAVE), ("open-slots",)),
    (Status.IN_PLATOON, Role.MASTER, FsmEvent.WINDOW_START, None):
        (_s(Status.IN_PLATOON, Role.MASTER), ("open-slots",)),
    (Status.IN_PLATOON, Role.SLAVE, FsmEvent.OWN_SLOT_TRIGGER, None):
        (_s(Status.IN_PLATOON, Role.SLAVE), ("open-slot",)),
    (Status.IN_PLATOON, Role.MASTER, FsmEvent.OWN_SLOT_TRIGGER, None):
        (_s(Status.IN_PLATOON, Role.MASTER), ("open-slot",)),
    (Status.IN_PLATOON, Role.SLAVE, FsmEvent.ALLOCATION_RECEIVED, "refresh"):
        (_s(Status.IN_PLATOON, Role.SLAVE), ()),
    (Status.IN_PLATOON, Role.SLAVE, FsmEvent.ALLOCATION_RECEIVED, "ignored"):
        (_s(Status.IN_PLATOON, Role.SLAVE), ()),
    (Status.IN_PLATOON, Role.MASTER, FsmEvent.ALLOCATION_RECEIVED, "ignored"):
        (_s(Status.IN_PLATOON, Role.MASTER), ()),
    # recovery: silent master, or a competing platoon with an earlier master
    (Status.IN_PLATOON, Role.SLAVE, FsmEvent.MASTER_LOST, None):
        (_s(Status.INIT, Role.SLAVE), ("rejoin",)),
    (Status.IN_PLATOON, Role.SLAVE, FsmEvent.ALLOCATION_RECEIVED, "superseded"):
        (_s(Status.JOINING, Role.SLAVE), ("rejoin",)),
    (Status.IN_PLATOON, Role.MASTER, FsmEvent.ALLOCATION_RECEIVED, "superseded"):
        (_s(Status.JOINING, Role.SLAVE), ("rejoin",)),
}


def step_fsm(state: FsmState, event: FsmEvent,
             outcome: str | None = None) -> tuple[FsmState, tuple[str, ...]]:
    key = (state.status, state.role, event, outcome)
    try:
        return LEGAL_EDGES[key]
    except KeyError:
        raise ProtocolError(
            f"illegal FSM event {event.name} (outcome={outcome!r}) in state "
            f"{state.status.name}/{state.role.name}"
        ) from None


# -- window geometry ---------------------------------------------------------


@dataclass(slots=True)
class WindowConfig:
    window_ns: int = 100 * MS
    slot_len_ns: int = 2 * MS

    def validate(self) -> None:
        if self.slot_len_ns <= 0 or self.window_ns <= 0:
            raise ValueError("window and slot length must be positive")
        if slot_count(self) < 3:
            raise ValueError(
                "window must hold at least three slots (two control, one data); "
                f"got window={self.window_ns} ns, slot={self.slot_len_ns} ns"
            )


def slot_count(cfg: WindowConfig) -> int:
    """Number of whole slots per window; a non-dividing tail goes unused."""
    return cfg.window_ns // cfg.slot_len_ns


def slot_origin(epoch: int, index: int, cfg: WindowConfig) -> int:
    if not 0 <= index < slot_count(cfg):
        raise ValueError(f"slot index {index} out of range [0, {slot_count(cfg)})")
    return epoch + index * cfg.slot_len_ns


def announce_offset(rng: np.random.Generator, cfg: WindowConfig, tx_dur: int) -> int:
    """Random start offset inside slot 0 such that the frame fits the slot."""
    if tx_dur > cfg.slot_len_ns:
        raise ValueError(
            f"announce duration {tx_dur} ns exceeds slot length {cfg.slot_len_ns} ns"
        )
    return uniform(rng, 0, cfg.slot_len_ns - tx_dur)


# -- slot schedule -----------------------------------------------------------


@dataclass(slots=True)
class SlotSchedule:
    """Per-vehicle assignment of data slots; indices 0 and 1 stay reserved."""

    config: WindowConfig
    assignments: dict[int, tuple[int, ...]]
    epoch: int = 0

    def validate(self) -> None:
        n = slot_count(self.config)
        seen: set[int] = set()
        for vid, slots in self.assignments.items():
            for idx in slots:
                if idx in (0, 1):
                    raise ValueError(f"vehicle {vid} assigned reserved slot {idx}")
                if idx >= n:
                    raise ValueError(f"vehicle {vid} assigned slot {idx} >= {n}")
                if idx in seen:
                    raise ValueError(f"slot {idx} assigned twice")
                seen.add(idx)

    def to_wire(self) -> dict[int, tuple[int, int]]:
        wire = {}
        for vid, slots in self.assignments.items():
            run = sorted(slots)
            if run != list(range(run[0], run[0] + len(run))):
                raise ValueError(f"vehicle {vid} holds a non-contiguous slot run {run}")
            wire[vid] = (run[0], len(run))
        return wire


def schedule_from_wire(wire: dict[int, tuple[int, int]], cfg: WindowConfig,
                       epoch: int = 0) -> SlotSchedule:
    assignments = {
        vid: tuple(range(first, first + count)) for vid, (first, count) in wire.items()
    }
    sched = SlotSchedule(cfg, assignments, epoch)
    sched.validate()
    return sched


def elect_master(candidates: dict[int, int]) -> int:
    """Pick the vehicle with the earliest announce timestamp; ties to lowest id."""
    if not candidates:
        raise ValueError("election requires at least one candidate")
    return min(candidates, key=lambda vid: (candidates[vid], vid))


def _node_rank(node_type: NodeType) -> int:
    return 0 if node_type is NodeType.EMERGENCY else 1


def allocate(requests: list[tuple[int, int, NodeType]],
             cfg: WindowConfig) -> tuple[SlotSchedule, list[int]]:
    """Build a fresh schedule: emergency vehicles first, then by id, slots from 2.

    Each requester gets min(requested, remaining) consecutive slots; a vehicle
    that would get zero is rejected and returned in the second element.
    """
    free = slot_count(cfg) - 2
    next_slot = 2
    assignments: dict[int, tuple[int, ...]] = {}
    rejected: list[int] = []
    for vid, wanted, node_type in sorted(requests, key=lambda r: (_node_rank(r[2]), r[0])):
        granted = min(max(wanted, 1), free)
        if granted <= 0:
            rejected.append(vid)
            continue
        assignments[vid] = tuple(range(next_slot, next_slot + granted))
        next_slot += granted
        free -= granted
    sched = SlotSchedule(cfg, assignments)
    sched.validate()
    return sched, rejected


def extend_schedule(base: SlotSchedule, requests: list[tuple[int, int, NodeType]],
                    cfg: WindowConfig) -> tuple[SlotSchedule, list[int]]:
    """Admit newcomers into the lowest free data slots, keeping existing runs."""
    used = {idx for slots in base.assignments.values() for idx in slots}
    free = [i for i in range(2, slot_count(cfg)) if i not in used]
    assignments = dict(base.assignments)
    rejected: list[int] = []
    for vid, wanted, node_type in sorted(requests, key=lambda r: (_node_rank(r[2]), r[0])):
        if vid in assignments:
            continue
        take = free[: max(wanted, 1)]
        # wire format needs one contiguous run per member
        run = [take[0]] if take else []
        for idx in take[1:]:
            if idx == run[-1] + 1:
                run.append(idx)
            else:
                break
        if not run:
            rejected.append(vid)
            continue
        assignments[vid] = tuple(run)
        free = free[len(run):]
    sched = SlotSchedule(cfg, assignments, base.epoch)
    sched.validate()
    return sched, rejected


# -- priority queues ----------------------------------------------------------


class PriorityQueueSet:
    """Strict-priority FIFO set; queue 0 drains before anything in queue 1, etc."""

    def __init__(self, levels: int = 2):
        if levels < 1:
            raise ValueError("need at least one priority level")
        self.queues: list[deque[Frame]] = [deque() for _ in range(levels)]

    def push(self, frame: Frame, priority: int) -> None:
        if not 0 <= priority < len(self.queues):
            raise ValueError(f"unknown priority class {priority}")
        self.queues[priority].append(frame)

    def peek(self) -> Frame | None:
        for q in self.queues:
            if q:
                return q[0]
        return None

    def pop(self) -> Frame:
        for q in self.queues:
            if q:
                return q.popleft()
        raise IndexError("pop from empty queue set")

    def __len__(self) -> int:
        return sum(len(q) for q in self.queues)


# -- controller ----------------------------------------------------------------


class TsnCtl:
    """One vehicle's controller instance, driven entirely by kernel events."""

    def __init__(self, vid: int, kernel: Kernel, medium: Medium, wcfg: WindowConfig,
                 rng: np.random.Generator, *, node_type: NodeType = NodeType.CAR,
                 slots_requested: int = 1, queue_levels: int = 2,
                 master_timeout_windows: int = 3):
        wcfg.validate()
        self.vid = vid
        self.kernel = kernel
        self.medium = medium
        self.wcfg = wcfg
        self.rng = rng
        self.node_type = node_type
        self.slots_requested = slots_requested
        self.master_timeout_windows = master_timeout_windows

        self.state = FsmState(Status.INIT, Role.SLAVE)
        self.created_at = kernel.now            # announce timestamp, stable across retries
        self.queues = PriorityQueueSet(queue_levels)
        self.epoch = -1
        self.heard: dict[int, Frame] = {}       # clean announces, current window
        self.last_heard_from: dict[int, int] = {}
        self.schedule: SlotSchedule | None = None
        self.my_slots: tuple[int, ...] = ()
        self.master_id: int | None = None
        self.master_ts: int | None = None
        self.pending_schedule: SlotSchedule | None = None
        self._alloc_sent = False
        self._alloc_received = False
        self._confirm_pending = False
        self._slot_gen = 0          # invalidates armed slot triggers on membership change

        self.transitions: list[tuple[FsmState, FsmEvent, str | None, FsmState]] = []
        self.messages_enqueued = 0
        self.deferred = 0
        self.rejected_joins = 0
        self.join_retries = 0
        self.announce_skips = 0

        first = (kernel.now // wcfg.window_ns + 1) * wcfg.window_ns
        kernel.schedule(Event(first, vid, EventKind.TIMER, self._on_window_start))

    # -- public surface ------------------------------------------------------

    def enqueue_app_message(self, frame: Frame, priority: int) -> None:
        self.queues.push(frame, priority)
        self.messages_enqueued += 1

    def on_frame_delivery(self, receiver: int, frame: Frame,
                          outcome: ReceptionOutcome) -> None:
        if outcome.collided:
            return
        self.last_heard_from[frame.sender] = self.kernel.now
        if frame.kind is FrameKind.CONTROL_ANNOUNCE:
            self.heard[frame.sender] = frame
        elif frame.kind is FrameKind.CONTROL_ALLOCATION:
            self._on_allocation(frame)

    # -- FSM ------------------------------------------------------------------

    def _step(self, event: FsmEvent, outcome: str | None = None) -> tuple[str, ...]:
        new_state, actions = step_fsm(self.state, event, outcome)
        self.transitions.append((self.state, event, outcome, new_state))
        self.state = new_state
        return actions

    # -- window machinery -------------------------------------------------------

    def _timer(self, at: int, fn, payload=None) -> None:
        self.kernel.schedule(Event(at, self.vid, EventKind.TIMER, fn, payload))

    def _on_window_start(self, ev: Event) -> None:
        w = self.kernel.now
        self.epoch = w
        self.heard = {}
        self._alloc_sent = False
        self._alloc_received = False
        self.pending_schedule = None

        if self.state.status is Status.IN_PLATOON:
            if self.state.role is Role.SLAVE and self._master_silent(w):
                self._step(FsmEvent.MASTER_LOST)
                self._reset_membership()
            else:
                self._step(FsmEvent.WINDOW_START)
                self._arm_slots(w)

        if self.state.status in (Status.INIT, Status.JOINING):
            if self.state.status is Status.JOINING:
                self.join_retries += 1
            self._step(FsmEvent.WINDOW_START)
            self._schedule_announce(w)
            self._timer(w + self.wcfg.slot_len_ns + EVAL_GUARD, self._on_slot0_end, w)
            self._timer(w + 2 * self.wcfg.slot_len_ns, self._on_slot1_end, w)

        self._timer(w + self.wcfg.window_ns, self._on_window_start)

    def _master_silent(self, now: int) -> bool:
        if self.master_id is None:
            return True
        last = self.last_heard_from.get(self.master_id, self.created_at)
        return now - last >= self.master_timeout_windows * self.wcfg.window_ns

    def _reset_membership(self) -> None:
        self.schedule = None
        self.my_slots = ()
        self.master_id = None
        self.master_ts = None
        self._confirm_pending = False
        self._slot_gen += 1

    # -- slot 0: announce -------------------------------------------------------

    def _schedule_announce(self, w: int) -> None:
        dur = tx_duration(ANNOUNCE_SIZE, self.medium.cfg)
        off = announce_offset(self.rng, self.wcfg, dur)
        self._timer(w + off, self._try_announce, w)

    def _try_announce(self, ev: Event) -> None:
        if self.state.status is not Status.JOINING or ev.payload != self.epoch:
            return
        if self.medium.is_busy(self.vid, self.kernel.now):
            self.announce_skips += 1
            return
        frame = make_announce(self.vid, self.created_at,
                              self.slots_requested, self.node_type)
        self.medium.broadcast(self.vid, frame)

    # -- end of slot 0: election -------------------------------------------------

    def _on_slot0_end(self, ev: Event) -> None:
        if self.state.status is not Status.JOINING or ev.payload != self.epoch:
            return
        w = ev.payload
        candidates = {self.vid: self.created_at}
        for a in self.heard.values():
            candidates[a.sender] = a.generated_at
        if self.master_id is not None and not self._master_silent(self.kernel.now):
            candidates.setdefault(self.master_id, self.master_ts)
        winner = elect_master(candidates)

        if winner != self.vid:
            self._step(FsmEvent.SLOT0_END, "lost")
            self.master_id = winner
            self.master_ts = candidates[winner]
            return

        self._step(FsmEvent.SLOT0_END, "won")
        neighbours = [a for a in self.heard.values() if a.sender != self.vid]
        if not neighbours:
            self._step(FsmEvent.NO_NEIGHBORS)
            return
        requests = [(a.sender, a.slots_requested, a.node_type) for a in neighbours]
        requests.append((self.vid, self.slots_requested, self.node_type))
        sched, rejected = allocate(requests, self.wcfg)
        self.rejected_joins += len(rejected)
        self.pending_schedule = sched
        self._schedule_alloc_tx(w, sched)

    # -- slot 1: allocation --------------------------------------------------------

    def _alloc_window(self, w: int, members: int) -> tuple[int, int, int]:
        dur = tx_duration(allocation_size(members), self.medium.cfg)
        lo = w + self.wcfg.slot_len_ns + EVAL_GUARD
        hi = w + 2 * self.wcfg.slot_len_ns - dur - EVAL_GUARD
        return dur, lo, hi

    def _schedule_alloc_tx(self, w: int, sched: SlotSchedule) -> None:
        _dur, lo, hi = self._alloc_window(w, len(sched.assignments))
        if hi < lo:
            return  # allocation cannot fit slot 1 for this member count
        self._timer(uniform(self.rng, lo, hi), self._try_alloc, w)

    def _try_alloc(self, ev: Event) -> None:
        if ev.payload != self.epoch:
            return
        sched = self.pending_schedule
        is_forming = (self.state.status is Status.JOINING
                      and self.state.role is Role.MASTER)
        is_refresh = (self.state.status is Status.IN_PLATOON
                      and self.state.role is Role.MASTER)
        if sched is None or not (is_forming or is_refresh):
            return
        if self.medium.is_busy(self.vid, self.kernel.now):
            return  # contended control slot: retry next window
        frame = make_allocation(self.vid, self.created_at, sched.to_wire())
        tx = self.medium.broadcast(self.vid, frame)
        self._alloc_sent = True
        if is_refresh:
            self.schedule = sched
            self._start_burst(1, ev.payload, start=tx.end)

    def _on_slot1_end(self, ev: Event) -> None:
        if self.state.status is not Status.JOINING or ev.payload != self.epoch:
            return
        if self.state.role is Role.MASTER:
            if self._alloc_sent:
                self._step(FsmEvent.SLOT1_END, "allocated")
                self.schedule = self.pending_schedule
                self.schedule.epoch = ev.payload
                self.my_slots = self.schedule.assignments[self.vid]
                self.master_id = self.vid
                self.master_ts = self.created_at
                self._arm_slots(ev.payload)
            else:
                self._step(FsmEvent.SLOT1_END, "missed")
        else:
            outcome = "allocated" if self._alloc_received else "missed"
            self._step(FsmEvent.SLOT1_END, outcome)

    # -- allocation reception ---------------------------------------------------------

    def _key(self) -> tuple[int, int]:
        if self.state.role is Role.MASTER:
            return (self.created_at, self.vid)
        if self.master_id is not None:
            return (self.master_ts, self.master_id)
        return (self.created_at, self.vid)

    def _on_allocation(self, frame: Frame) -> None:
        key = (frame.generated_at, frame.sender)
        listed = frame.allocations is not None and self.vid in frame.allocations
        st = self.state.status

        if st is Status.INIT:
            self.master_id, self.master_ts = frame.sender, frame.generated_at
            return

        if st is Status.IN_PLATOON:
            if frame.sender == self.master_id:
                if self.state.role is Role.MASTER:
                    return  # our own refresh echo cannot occur; ignore defensively
                if listed:
                    self._step(FsmEvent.ALLOCATION_RECEIVED, "refresh")
                    self._adopt(frame, confirm=False)
                else:
                    self._step(FsmEvent.ALLOCATION_RECEIVED, "superseded")
                    self._reset_membership()
                    self.master_id, self.master_ts = frame.sender, frame.generated_at
            elif key < self._key():
                self._step(FsmEvent.ALLOCATION_RECEIVED, "superseded")
                self._reset_membership()
                self.master_id, self.master_ts = frame.sender, frame.generated_at
                if listed:
                    self._adopt(frame, confirm=True)
            else:
                self._step(FsmEvent.ALLOCATION_RECEIVED, "ignored")
            return

        # joining
        if self.state.role is Role.MASTER:
            if key < (self.created_at, self.vid):
                self._step(FsmEvent.ALLOCATION_RECEIVED, "superseded")
                self.pending_schedule = None
                self.master_id, self.master_ts = frame.sender, frame.generated_at
                if listed:
                    self._adopt(frame, confirm=True)
            else:
                self._step(FsmEvent.ALLOCATION_RECEIVED, "ignored")
            return

        if self.master_id is None or key <= self._key() or frame.sender == self.master_id:
            self.master_id, self.master_ts = frame.sender, frame.generated_at
            if listed:
                self._step(FsmEvent.ALLOCATION_RECEIVED, "listed")
                self._adopt(frame, confirm=True)
            else:
                self._step(FsmEvent.ALLOCATION_RECEIVED, "unlisted")
        else:
            self._step(FsmEvent.ALLOCATION_RECEIVED, "ignored")

    def _adopt(self, frame: Frame, confirm: bool) -> None:
        self.schedule = schedule_from_wire(frame.allocations, self.wcfg, self.epoch)
        self.master_id = frame.sender
        self.master_ts = frame.generated_at
        self.my_slots = self.schedule.assignments[self.vid]
        self._alloc_received = True
        if confirm:
            # fresh membership: arm this window's triggers; refreshes keep the
            # triggers armed at window start (our own slots never move)
            self._confirm_pending = True
            self._slot_gen += 1
            self._arm_slots(self.epoch)

    # -- data slots --------------------------------------------------------------------

    def _arm_slots(self, w: int) -> None:
        now = self.kernel.now
        for idx in self.my_slots:
            at = slot_origin(w, idx, self.wcfg)
            if at >= now:
                self._timer(at, self._on_slot_open, (w, idx, self._slot_gen))
        slot1 = w + self.wcfg.slot_len_ns + EVAL_GUARD
        if (self.state.status is Status.IN_PLATOON
                and self.state.role is Role.MASTER and slot1 >= now):
            self._timer(slot1, self._on_master_slot1, w)

    def _on_slot_open(self, ev: Event) -> None:
        w, idx, gen = ev.payload
        if w != self.epoch or gen != self._slot_gen or idx not in self.my_slots:
            return
        if self.state.status is Status.JOINING and self._confirm_pending:
            self._confirm_pending = False
            self._step(FsmEvent.OWN_SLOT_TRIGGER)
        elif self.state.status is Status.IN_PLATOON:
            self._step(FsmEvent.OWN_SLOT_TRIGGER)
        else:
            return
        self._start_burst(idx, w, start=self.kernel.now)

    def _on_master_slot1(self, ev: Event) -> None:
        w = ev.payload
        if (w != self.epoch or self.state.status is not Status.IN_PLATOON
                or self.state.role is not Role.MASTER):
            return
        announcers = [a for a in self.heard.values() if a.sender != self.vid]
        if announcers:
            requests = [(a.sender, a.slots_requested, a.node_type) for a in announcers]
            sched, rejected = extend_schedule(self.schedule, requests, self.wcfg)
            self.rejected_joins += len(rejected)
            self.pending_schedule = sched
            self._schedule_alloc_tx(w, sched)
        else:
            self._start_burst(1, w, start=self.kernel.now)

    # The burst walks the priority queues and transmits back-to-back until the
    # next frame would cross the slot boundary. A frame that cannot fit any
    # slot transmits once per owned slot, from the slot origin, and overruns.
    # Slot-1 bursts (master only) carrier-sense each frame because that slot
    # is shared control airtime; owned data slots are exclusive and do not.

    def _start_burst(self, idx: int, w: int, start: int) -> None:
        origin = slot_origin(w, idx, self.wcfg)
        end = origin + self.wcfg.slot_len_ns
        ctx = (w, idx, origin, end, self._slot_gen)
        if start <= self.kernel.now:
            self._burst(ctx)
        else:
            self._timer(start, self._burst_step, ctx)

    def _burst_step(self, ev: Event) -> None:
        self._burst(ev.payload)

    def _burst(self, ctx) -> None:
        w, idx, origin, end, gen = ctx
        if w != self.epoch or gen != self._slot_gen:
            return
        frame = self.queues.peek()
        if frame is None:
            return
        now = self.kernel.now
        dur = tx_duration(frame.size, self.medium.cfg)
        fits = now + dur <= end
        overrun = idx != 1 and dur > self.wcfg.slot_len_ns and now == origin
        if not (fits or overrun):
            self.deferred += len(self.queues)
            return
        if idx == 1 and self.medium.is_busy(self.vid, now):
            self.deferred += len(self.queues)
            return
        self.medium.broadcast(self.vid, self.queues.pop())
        self._timer(now + dur, self._burst_step, ctx)
