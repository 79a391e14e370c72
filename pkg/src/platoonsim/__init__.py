"""Slot-scheduled V2V intra-platoon communication simulator with a CSMA/CA baseline."""

from .csma import CsmaConfig, CsmaMac
from .frames import Frame, FrameKind, NodeType
from .kernel import Event, EventKind, Kernel, RngStreams, MS, SEC, US, uniform
from .radio import Medium, Position, RadioConfig, Transmission, tx_duration
from .scenario import (
    MODE_BASELINE,
    MODE_TSNCTL,
    ScenarioConfig,
    VehicleSpec,
    build_vehicles,
    run_scenario,
)
from .tsnctl import (
    FsmEvent,
    FsmState,
    Role,
    SlotSchedule,
    Status,
    TsnCtl,
    WindowConfig,
    allocate,
    announce_offset,
    elect_master,
    slot_count,
    slot_origin,
    step_fsm,
)

__version__ = "0.1.0"

__all__ = [
    "CsmaConfig", "CsmaMac", "Frame", "FrameKind", "NodeType",
    "Event", "EventKind", "Kernel", "RngStreams", "MS", "SEC", "US", "uniform",
    "Medium", "Position", "RadioConfig", "Transmission", "tx_duration",
    "MODE_BASELINE", "MODE_TSNCTL", "ScenarioConfig", "VehicleSpec",
    "build_vehicles", "run_scenario",
    "FsmEvent", "FsmState", "Role", "SlotSchedule", "Status", "TsnCtl",
    "WindowConfig", "allocate", "announce_offset", "elect_master",
    "slot_count", "slot_origin", "step_fsm",
    "__version__",
]
