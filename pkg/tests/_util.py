"""Shared test helpers: scripted randomness and hand-assembled platoon scenarios."""

from __future__ import annotations

from platoonsim.kernel import Event, EventKind, Kernel, MS
from platoonsim.radio import Medium, Position, RadioConfig
from platoonsim.tsnctl import TsnCtl, WindowConfig


class ConstRng:
    """Stands in for a numpy Generator; every draw returns a clamped constant."""

    def __init__(self, value: int):
        self.value = value

    def integers(self, lo: int, hi: int, endpoint: bool = False) -> int:
        top = hi if endpoint else hi - 1
        return min(max(self.value, lo), top)


class ScriptedRng:
    """Returns a scripted sequence of draws, clamped into each requested range."""

    def __init__(self, values):
        self.values = list(values)

    def integers(self, lo: int, hi: int, endpoint: bool = False) -> int:
        top = hi if endpoint else hi - 1
        v = self.values.pop(0) if self.values else lo
        return min(max(v, lo), top)


def assemble_platoon(spawn_times: dict[int, int], offsets: dict[int, int],
                     *, slot_ms: int = 2, run_ms: int = 600,
                     positions: dict[int, Position] | None = None,
                     radio: RadioConfig | None = None, finalize: bool = True,
                     ) -> tuple[Kernel, Medium, dict[int, TsnCtl]]:
    """Build controllers with fixed spawn times and constant announce offsets.

    Pass finalize=False when the test keeps driving the returned kernel.
    """
    kernel = Kernel()
    medium = Medium(kernel, radio or RadioConfig(), record_outcomes=True)
    wcfg = WindowConfig(slot_len_ns=slot_ms * MS)
    ctls: dict[int, TsnCtl] = {}

    def spawn(ev: Event) -> None:
        vid = ev.payload
        ctl = TsnCtl(vid, kernel, medium, wcfg, ConstRng(offsets[vid]))
        ctls[vid] = ctl
        pos = (positions or {}).get(vid, Position(float(vid), 0.0))
        medium.register(vid, pos, handler=ctl.on_frame_delivery)

    for vid, at in spawn_times.items():
        kernel.schedule(Event(at, vid, EventKind.SPAWN, spawn, vid))
    kernel.run_until(run_ms * MS)
    if finalize:
        medium.finalize()
    return kernel, medium, ctls
