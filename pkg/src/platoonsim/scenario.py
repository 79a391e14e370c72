"""Experiment fixtures: vehicle spawner, periodic beacon service, run assembly."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .csma import CsmaConfig, CsmaMac
from .frames import ANNOUNCE_SIZE, Frame, FrameKind, NodeType, PRIO_SAFETY
from .kernel import Event, EventKind, Kernel, MS, RngStreams, SEC
from .radio import Medium, Position, RadioConfig, tx_duration
from .tsnctl import TsnCtl, WindowConfig

MODE_BASELINE = "baseline"
MODE_TSNCTL = "tsnctl"

# rng stream ids: 0 = spawner geometry, 1000+vid = per-vehicle MAC/controller
SPAWNER_STREAM = 0
VEHICLE_STREAM_BASE = 1000


@dataclass(slots=True)
class ScenarioConfig:
    vehicle_count: int = 20
    spawn_interval_ns: int = 1 * MS
    area_length_m: float = 100.0
    message_interval_ns: int = 100 * MS
    payload_size_b: int = 800
    max_payload_b: int = 800
    mode: str = MODE_TSNCTL
    sim_duration_ns: int = 10 * SEC
    seed: int = 1
    repetitions: int = 5
    window: WindowConfig = field(default_factory=WindowConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    csma: CsmaConfig = field(default_factory=CsmaConfig)
    count_control_frames: bool = True
    per_receiver_counting: bool = False

    def validate(self) -> None:
        from .config import ConfigError

        try:
            if self.vehicle_count < 1:
                raise ValueError("vehicle_count must be >= 1")
            if self.spawn_interval_ns <= 0 or self.message_interval_ns <= 0:
                raise ValueError("spawn and message intervals must be positive")
            if self.sim_duration_ns <= 0:
                raise ValueError("sim_duration_ns must be positive")
            if self.payload_size_b < 1:
                raise ValueError("payload_size_b must be >= 1")
            if self.payload_size_b > self.max_payload_b:
                raise ValueError(
                    f"payload_size_b={self.payload_size_b} exceeds the "
                    f"{self.max_payload_b} B ceiling"
                )
            if self.mode not in (MODE_BASELINE, MODE_TSNCTL):
                raise ValueError(f"unknown mode {self.mode!r}")
            if self.repetitions < 1:
                raise ValueError("repetitions must be >= 1")
            if self.area_length_m < 0:
                raise ValueError("area_length_m must be >= 0")
            self.csma.validate()
            self.radio.validate()
            self.window.validate()
            if self.mode == MODE_TSNCTL:
                announce = tx_duration(ANNOUNCE_SIZE, self.radio)
                if announce > self.window.slot_len_ns:
                    raise ValueError(
                        f"an announce ({announce} ns on air) does not fit one "
                        f"{self.window.slot_len_ns} ns slot"
                    )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass(slots=True)
class VehicleSpec:
    vid: int
    position: Position
    spawn_at: int
    node_type: NodeType = NodeType.CAR


def build_vehicles(cfg: ScenarioConfig, rng: np.random.Generator) -> list[VehicleSpec]:
    """The i-th vehicle spawns at i*spawn_interval at a uniform x in the area."""
    specs = []
    for i in range(cfg.vehicle_count):
        x = float(rng.uniform(0.0, cfg.area_length_m))
        specs.append(VehicleSpec(i, Position(x, 0.0), i * cfg.spawn_interval_ns))
    return specs


class ItsService:
    """Mock awareness service: one fixed-size message every interval from spawn."""

    def __init__(self, spec: VehicleSpec, kernel: Kernel, cfg: ScenarioConfig,
                 submit) -> None:
        self.spec = spec
        self.kernel = kernel
        self.cfg = cfg
        self.submit = submit
        self.seq = 0
        self.generated = 0

    def start(self) -> None:
        self.kernel.schedule(Event(self.spec.spawn_at, self.spec.vid,
                                   EventKind.APP_TICK, self._tick))

    def _tick(self, ev: Event) -> None:
        now = self.kernel.now
        if now >= self.cfg.sim_duration_ns:
            return
        frame = Frame(
            kind=FrameKind.DATA,
            sender=self.spec.vid,
            size=self.cfg.payload_size_b,
            generated_at=now,
            priority=PRIO_SAFETY,
            seq=self.seq,
        )
        self.seq += 1
        self.generated += 1
        self.submit(frame)
        self.kernel.schedule(Event(now + self.cfg.message_interval_ns, self.spec.vid,
                                   EventKind.APP_TICK, self._tick))


@dataclass(slots=True)
class RunResult:
    cfg: ScenarioConfig
    seed: int
    medium: Medium
    specs: list[VehicleSpec]
    services: dict[int, ItsService]
    macs: dict[int, CsmaMac]
    controllers: dict[int, TsnCtl]


def run_scenario(cfg: ScenarioConfig, seed: int, *, record_outcomes: bool = False,
                 trace: bool = False) -> RunResult:
    """Execute one seeded run to sim_duration and settle all reception outcomes."""
    cfg.validate()
    kernel = Kernel(trace=trace)
    medium = Medium(kernel, cfg.radio, record_outcomes=record_outcomes)
    streams = RngStreams(seed)
    specs = build_vehicles(cfg, streams.stream(SPAWNER_STREAM))

    services: dict[int, ItsService] = {}
    macs: dict[int, CsmaMac] = {}
    controllers: dict[int, TsnCtl] = {}

    def spawn(ev: Event) -> None:
        spec: VehicleSpec = ev.payload
        rng = streams.stream(VEHICLE_STREAM_BASE + spec.vid)
        if cfg.mode == MODE_BASELINE:
            mac = CsmaMac(spec.vid, kernel, medium, cfg.csma, rng)
            macs[spec.vid] = mac
            medium.register(spec.vid, spec.position)
            submit = mac.submit
        else:
            ctl = TsnCtl(spec.vid, kernel, medium, cfg.window, rng,
                         node_type=spec.node_type)
            controllers[spec.vid] = ctl
            medium.register(spec.vid, spec.position, handler=ctl.on_frame_delivery)
            submit = lambda frame, _c=ctl: _c.enqueue_app_message(frame, frame.priority)
        service = ItsService(spec, kernel, cfg, submit)
        services[spec.vid] = service
        service.start()

    for spec in specs:
        kernel.schedule(Event(spec.spawn_at, spec.vid, EventKind.SPAWN, spawn, spec))

    kernel.run_until(cfg.sim_duration_ns)
    medium.finalize()
    return RunResult(cfg, seed, medium, specs, services, macs, controllers)
