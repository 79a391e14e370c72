"""Collision accounting, the brute-force overlap oracle, experiment batches, CSV output."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from pathlib import Path

from .frames import KIND_BY_LABEL, FrameKind
from .radio import Position, RadioConfig, Transmission
from .scenario import MODE_BASELINE, MODE_TSNCTL, RunResult, ScenarioConfig, run_scenario


def classify_transmission(tx: Transmission) -> bool | None:
    """Sender-side convention: collided iff it collided at >= 1 in-range receiver.

    Returns None for a transmission nobody was in range to receive; such
    frames are excluded from the sent-frame denominator entirely.
    """
    if tx.receivers_expected == 0:
        return None
    return tx.receivers_collided > 0


@dataclass(slots=True)
class CollisionStats:
    frames_sent: int = 0
    frames_collided: int = 0
    control_frames_sent: int = 0
    control_frames_collided: int = 0
    data_frames_sent: int = 0
    data_frames_collided: int = 0
    receptions: int = 0
    receptions_collided: int = 0
    deferred_frames: int = 0
    rejected_joins: int = 0
    undefined_rate: bool = False

    def rate(self, count_control: bool = True, per_receiver: bool = False) -> float:
        if per_receiver:
            num, den = self.receptions_collided, self.receptions
        elif count_control:
            num, den = self.frames_collided, self.frames_sent
        else:
            num, den = self.data_frames_collided, self.data_frames_sent
        if den == 0:
            self.undefined_rate = True
            return 0.0
        return 100.0 * num / den


def collect_stats(run: RunResult) -> CollisionStats:
    s = CollisionStats()
    for tx in run.medium.log:
        flag = classify_transmission(tx)
        if flag is None:
            continue
        control = tx.frame.kind is not FrameKind.DATA
        s.frames_sent += 1
        s.frames_collided += flag
        if control:
            s.control_frames_sent += 1
            s.control_frames_collided += flag
        else:
            s.data_frames_sent += 1
            s.data_frames_collided += flag
        s.receptions += tx.receivers_expected
        s.receptions_collided += tx.receivers_collided
    for mac in run.macs.values():
        s.deferred_frames += mac.deferrals
    for ctl in run.controllers.values():
        s.deferred_frames += ctl.deferred
        s.rejected_joins += ctl.rejected_joins
    return s


# -- independent oracle --------------------------------------------------------
#
# Post-hoc checker used by tests and the `verify` command: enumerate every
# transmission pair, test plain interval overlap, and apply the range rule per
# receiver. Deliberately quadratic and structurally unrelated to the medium's
# online bookkeeping.


def brute_force_outcomes(records: list[tuple[int, int, int]],
                         positions: dict[int, Position],
                         range_m: float,
                         spawn: dict[int, int] | None = None) -> list[dict[int, bool]]:
    """Per-transmission, per-receiver collided flags from (sender, start, end) triples.

    A vehicle can only receive frames broadcast at or after its spawn time;
    with no spawn map every vehicle is assumed present from time zero.
    """
    out: list[dict[int, bool]] = []
    for i, (sender_i, start_i, end_i) in enumerate(records):
        pos_i = positions[sender_i]
        flags: dict[int, bool] = {}
        for rid, rpos in positions.items():
            if rid == sender_i:
                continue
            if spawn is not None and spawn.get(rid, 0) > start_i:
                continue
            if pos_i.distance(rpos) > range_m:
                continue
            collided = False
            for j, (sender_j, start_j, end_j) in enumerate(records):
                if j == i:
                    continue
                if start_j < end_i and start_i < end_j \
                        and positions[sender_j].distance(rpos) <= range_m:
                    collided = True
                    break
            flags[rid] = collided
        out.append(flags)
    return out


def brute_force_flags(records: list[tuple[int, int, int]],
                      positions: dict[int, Position],
                      range_m: float,
                      spawn: dict[int, int] | None = None) -> list[bool | None]:
    """Sender-side collided flag per record; None when nobody was in range."""
    flags = []
    for outcome in brute_force_outcomes(records, positions, range_m, spawn):
        flags.append(any(outcome.values()) if outcome else None)
    return flags


def oracle_check_run(run: RunResult) -> list[int]:
    """Indices of transmissions whose online flags disagree with the oracle."""
    records = [(tx.sender, tx.start, tx.end) for tx in run.medium.log]
    positions = {spec.vid: spec.position for spec in run.specs}
    spawn = {spec.vid: spec.spawn_at for spec in run.specs}
    expected = brute_force_outcomes(records, positions, run.cfg.radio.range_m, spawn)
    bad = []
    for i, tx in enumerate(run.medium.log):
        want = expected[i]
        if tx.receivers_expected != len(want):
            bad.append(i)
            continue
        if tx.receivers_collided != sum(want.values()):
            bad.append(i)
            continue
        if tx.outcomes is not None and tx.outcomes != want:
            bad.append(i)
    return bad


# -- experiment batches ----------------------------------------------------------


@dataclass(slots=True)
class ExperimentResult:
    cfg: ScenarioConfig
    per_repetition: list[CollisionStats]
    rates: list[float]
    mean_rate: float
    std_rate: float

    @property
    def seeds(self) -> list[int]:
        return [self.cfg.seed + k for k in range(len(self.per_repetition))]


def run_experiment(cfg: ScenarioConfig, *, record_outcomes: bool = False) -> ExperimentResult:
    cfg.validate()
    per_rep: list[CollisionStats] = []
    rates: list[float] = []
    for k in range(cfg.repetitions):
        run = run_scenario(cfg, cfg.seed + k, record_outcomes=record_outcomes)
        stats = collect_stats(run)
        per_rep.append(stats)
        rates.append(stats.rate(cfg.count_control_frames, cfg.per_receiver_counting))
    mean = statistics.fmean(rates)
    std = statistics.stdev(rates) if len(rates) > 1 else 0.0
    return ExperimentResult(cfg, per_rep, rates, mean, std)


CSV_HEADER = ("mode,vehicles,slot_len_ns,window_ns,payload_B,spawn_interval_ns,"
              "seed,frames_sent,frames_collided,collision_rate_pct,deferred,rejected")


def _effective_counts(cfg: ScenarioConfig, s: CollisionStats) -> tuple[int, int]:
    if cfg.per_receiver_counting:
        return s.receptions, s.receptions_collided
    if cfg.count_control_frames:
        return s.frames_sent, s.frames_collided
    return s.data_frames_sent, s.data_frames_collided


def emit_csv(result: ExperimentResult, path: str | Path) -> None:
    cfg = result.cfg
    lines = [CSV_HEADER]
    prefix = (f"{cfg.mode},{cfg.vehicle_count},{cfg.window.slot_len_ns},"
              f"{cfg.window.window_ns},{cfg.payload_size_b},{cfg.spawn_interval_ns}")
    for k, stats in enumerate(result.per_repetition):
        sent, collided = _effective_counts(cfg, stats)
        lines.append(
            f"{prefix},{cfg.seed + k},{sent},{collided},"
            f"{result.rates[k]:.2f},{stats.deferred_frames},{stats.rejected_joins}"
        )
    mean_sent = statistics.fmean(_effective_counts(cfg, s)[0] for s in result.per_repetition)
    mean_coll = statistics.fmean(_effective_counts(cfg, s)[1] for s in result.per_repetition)
    mean_def = statistics.fmean(s.deferred_frames for s in result.per_repetition)
    mean_rej = statistics.fmean(s.rejected_joins for s in result.per_repetition)
    lines.append(
        f"{prefix},{cfg.seed},{mean_sent:.2f},{mean_coll:.2f},"
        f"{result.mean_rate:.2f},{mean_def:.2f},{mean_rej:.2f}"
    )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


SWEEP_AXES = ("platoon_size", "packet_size", "slot_len")
DEFAULT_SLOT_SWEEP_NS = (1_000_000, 2_000_000, 3_000_000)


def _cfg_for(base: ScenarioConfig, axis: str, value: int, mode: str,
             slot_len_ns: int | None) -> ScenarioConfig:
    cfg = replace(base, mode=mode)
    cfg.window = replace(base.window)
    cfg.radio = replace(base.radio)
    cfg.csma = replace(base.csma)
    if axis == "platoon_size":
        cfg.vehicle_count = value
    elif axis == "packet_size":
        cfg.payload_size_b = value
    elif axis == "slot_len":
        cfg.window.slot_len_ns = value
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if slot_len_ns is not None and axis != "slot_len":
        cfg.window.slot_len_ns = slot_len_ns
    return cfg


def sweep(axis: str, values: list[int], base: ScenarioConfig,
          slot_lens_ns: tuple[int, ...] = DEFAULT_SLOT_SWEEP_NS
          ) -> list[tuple[int, str, int, ExperimentResult]]:
    """Run baseline plus the controller at each slot length for every axis value.

    Returns rows of (axis value, mode, slot_len_ns, result), ordered by
    (value, mode, slot length) for deterministic output.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not values:
        raise ValueError("sweep needs at least one value")
    out: list[tuple[int, str, int, ExperimentResult]] = []
    for value in values:
        cfg_b = _cfg_for(base, axis, value, MODE_BASELINE, None)
        out.append((value, MODE_BASELINE, cfg_b.window.slot_len_ns, run_experiment(cfg_b)))
        tsn_slots = (None,) if axis == "slot_len" else slot_lens_ns
        for slot in tsn_slots:
            cfg_t = _cfg_for(base, axis, value, MODE_TSNCTL, slot)
            out.append((value, MODE_TSNCTL, cfg_t.window.slot_len_ns, run_experiment(cfg_t)))
    return out


SWEEP_HEADER = ("axis,value,mode,slot_len_ns,repetition,seed,frames_sent,"
                "frames_collided,collision_rate_pct,mean_rate_pct,std_rate_pct")


def emit_sweep_csv(axis: str, rows: list[tuple[int, str, int, ExperimentResult]],
                   path: str | Path) -> None:
    lines = [SWEEP_HEADER]
    for value, mode, slot_len, result in rows:
        for k, stats in enumerate(result.per_repetition):
            sent, collided = _effective_counts(result.cfg, stats)
            lines.append(
                f"{axis},{value},{mode},{slot_len},{k},{result.cfg.seed + k},"
                f"{sent},{collided},{result.rates[k]:.2f},"
                f"{result.mean_rate:.2f},{result.std_rate:.2f}"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


# -- transmission log ------------------------------------------------------------
#
# Line format: sender start_ns end_ns size_B kind collided, preceded by header
# comments carrying the radio parameters and vehicle positions so the log is
# self-contained for oracle replay.

LOG_VERSION = "platoonsim transmission log v1"


def write_transmission_log(run: RunResult, path: str | Path) -> None:
    r = run.cfg.radio
    lines = [
        f"# {LOG_VERSION}",
        f"# radio range_m={r.range_m!r} data_rate_bps={r.data_rate_bps} "
        f"propagation_mps={r.propagation_mps!r} preamble_ns={r.preamble_ns}",
    ]
    for spec in run.specs:
        lines.append(f"# vehicle {spec.vid} {spec.position.x!r} {spec.position.y!r} "
                     f"{spec.spawn_at}")
    lines.append("# sender start_ns end_ns size_B kind collided")
    for tx in run.medium.log:
        lines.append(
            f"{tx.sender} {tx.start} {tx.end} {tx.frame.size} "
            f"{tx.frame.kind.label} {int(tx.collided)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


@dataclass(slots=True)
class LoadedLog:
    radio: RadioConfig
    positions: dict[int, Position]
    spawn: dict[int, int]
    records: list[tuple[int, int, int]]         # sender, start, end
    sizes: list[int]
    kinds: list[FrameKind]
    collided: list[bool]


def load_transmission_log(path: str | Path) -> LoadedLog:
    radio = RadioConfig()
    positions: dict[int, Position] = {}
    spawn: dict[int, int] = {}
    records: list[tuple[int, int, int]] = []
    sizes: list[int] = []
    kinds: list[FrameKind] = []
    collided: list[bool] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["radio"]:
                kv = dict(p.split("=", 1) for p in parts[1:])
                radio = RadioConfig(
                    range_m=float(kv["range_m"]),
                    data_rate_bps=int(kv["data_rate_bps"]),
                    propagation_mps=float(kv["propagation_mps"]),
                    preamble_ns=int(kv["preamble_ns"]),
                )
            elif parts[:1] == ["vehicle"]:
                vid = int(parts[1])
                positions[vid] = Position(float(parts[2]), float(parts[3]))
                spawn[vid] = int(parts[4]) if len(parts) > 4 else 0
            continue
        sender, start, end, size, kind, flag = line.split()
        records.append((int(sender), int(start), int(end)))
        sizes.append(int(size))
        kinds.append(KIND_BY_LABEL[kind])
        collided.append(flag == "1")
    return LoadedLog(radio, positions, spawn, records, sizes, kinds, collided)


def verify_log(path: str | Path) -> list[int]:
    """Replay a saved log through the oracle; return indices whose flag disagrees."""
    log = load_transmission_log(path)
    expected = brute_force_flags(log.records, log.positions, log.radio.range_m,
                                 log.spawn)
    bad = []
    for i, want in enumerate(expected):
        got = log.collided[i]
        if want is None:
            # nobody in range: flag must not claim a collision
            if got:
                bad.append(i)
        elif got != want:
            bad.append(i)
    return bad
