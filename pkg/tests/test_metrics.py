from dataclasses import replace

import pytest

from platoonsim.frames import Frame, FrameKind
from platoonsim.kernel import Kernel, MS, SEC, US
from platoonsim.metrics import (
    brute_force_flags,
    brute_force_outcomes,
    classify_transmission,
    collect_stats,
    emit_csv,
    emit_sweep_csv,
    load_transmission_log,
    oracle_check_run,
    run_experiment,
    sweep,
    verify_log,
    write_transmission_log,
)
from platoonsim.radio import Medium, Position, RadioConfig
from platoonsim.scenario import MODE_BASELINE, MODE_TSNCTL, ScenarioConfig, run_scenario


def _data(sender, size=800):
    return Frame(kind=FrameKind.DATA, sender=sender, size=size, generated_at=0)


def _two_sender_medium(second_start_us=500):
    k = Kernel()
    m = Medium(k, RadioConfig(range_m=100.0), record_outcomes=True)
    m.register(0, Position(0.0, 0.0))
    m.register(1, Position(20.0, 0.0))
    m.register(2, Position(40.0, 0.0))
    m.broadcast(0, _data(0))
    k.run_until(second_start_us * US)
    m.broadcast(1, _data(1))
    k.run_until(20 * MS)
    m.finalize()
    return m


def test_classify_clean_transmission():
    m = _two_sender_medium(second_start_us=2000)   # no overlap
    assert classify_transmission(m.log[0]) is False


def test_classify_counts_once_even_with_many_collided_receivers():
    m = _two_sender_medium()
    tx = m.log[0]
    assert tx.receivers_collided == 2
    assert classify_transmission(tx) is True
    stats_like = [classify_transmission(t) for t in m.log]
    assert stats_like == [True, True]


def test_classify_excludes_transmissions_nobody_could_receive():
    k = Kernel()
    m = Medium(k, RadioConfig(range_m=10.0))
    m.register(0, Position(0.0, 0.0))
    m.register(1, Position(500.0, 0.0))
    tx = m.broadcast(0, _data(0))
    k.run_until(5 * MS)
    m.finalize()
    assert classify_transmission(tx) is None


def test_brute_force_hidden_terminal_case():
    # senders out of mutual range, both in range of the middle receiver
    positions = {0: Position(0.0, 0.0), 1: Position(90.0, 0.0),
                 2: Position(180.0, 0.0)}
    records = [(0, 0, 1_000_000), (2, 500_000, 1_500_000)]
    out = brute_force_outcomes(records, positions, 100.0)
    assert out[0] == {1: True}          # ruined at the shared receiver
    assert out[1] == {1: True}
    flags = brute_force_flags(records, positions, 100.0)
    assert flags == [True, True]


def test_brute_force_respects_spawn_times():
    positions = {0: Position(0.0, 0.0), 1: Position(10.0, 0.0)}
    records = [(0, 0, 1_000_000)]
    present = brute_force_outcomes(records, positions, 100.0, {0: 0, 1: 0})
    absent = brute_force_outcomes(records, positions, 100.0, {0: 0, 1: 5_000_000})
    assert present == [{1: False}]
    assert absent == [{}]


def test_online_flags_agree_with_oracle_on_mixed_runs():
    for mode in (MODE_BASELINE, MODE_TSNCTL):
        cfg = ScenarioConfig(vehicle_count=6, mode=mode, sim_duration_ns=1 * SEC,
                             spawn_interval_ns=100 * US)
        run = run_scenario(cfg, 11, record_outcomes=True)
        assert oracle_check_run(run) == []


def test_run_experiment_is_deterministic():
    cfg = ScenarioConfig(vehicle_count=5, mode=MODE_BASELINE,
                         sim_duration_ns=1 * SEC, repetitions=3, seed=7)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.rates == b.rates
    assert a.mean_rate == b.mean_rate


def test_emit_csv_shape_and_format(tmp_path):
    cfg = ScenarioConfig(vehicle_count=4, mode=MODE_BASELINE,
                         sim_duration_ns=1 * SEC, repetitions=5, seed=3)
    result = run_experiment(cfg)
    out = tmp_path / "r.csv"
    emit_csv(result, out)
    lines = out.read_text().splitlines()
    assert len(lines) == 1 + 5 + 1                  # header, reps, summary
    assert lines[0].startswith("mode,vehicles,slot_len_ns")
    for row in lines[1:6]:
        rate = row.split(",")[9]
        assert len(rate.split(".")[1]) == 2         # two decimal places
    # summary mean equals the arithmetic mean of repetition rates
    summary_rate = float(lines[6].split(",")[9])
    rep_rates = [float(r.split(",")[9]) for r in lines[1:6]]
    assert abs(summary_rate - sum(rep_rates) / 5) < 0.01


def test_emit_csv_reruns_byte_identical(tmp_path):
    cfg = ScenarioConfig(vehicle_count=4, mode=MODE_TSNCTL,
                         sim_duration_ns=1 * SEC, repetitions=2, seed=5)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(run_experiment(cfg), a)
    emit_csv(run_experiment(cfg), b)
    assert a.read_bytes() == b.read_bytes()


def test_sweep_singleton_matches_run_experiment():
    base = ScenarioConfig(vehicle_count=4, sim_duration_ns=1 * SEC,
                          repetitions=2, seed=2)
    rows = sweep("platoon_size", [4], base, slot_lens_ns=(2 * MS,))
    assert [(v, m) for v, m, _, _ in rows] == \
        [(4, MODE_BASELINE), (4, MODE_TSNCTL)]
    direct = run_experiment(replace(base, mode=MODE_BASELINE))
    assert rows[0][3].rates == direct.rates


def test_sweep_rejects_unknown_axis_and_empty_values():
    base = ScenarioConfig()
    with pytest.raises(ValueError):
        sweep("speed", [1], base)
    with pytest.raises(ValueError):
        sweep("platoon_size", [], base)


def test_sweep_csv_is_long_format(tmp_path):
    base = ScenarioConfig(vehicle_count=3, sim_duration_ns=500 * MS,
                          repetitions=2, seed=2)
    rows = sweep("packet_size", [200, 400], base, slot_lens_ns=(2 * MS,))
    out = tmp_path / "s.csv"
    emit_sweep_csv("packet_size", rows, out)
    lines = out.read_text().splitlines()
    assert lines[0].startswith("axis,value,mode,slot_len_ns,repetition")
    assert len(lines) == 1 + len(rows) * 2          # two repetitions per row


def test_transmission_log_roundtrip_and_verify(tmp_path):
    cfg = ScenarioConfig(vehicle_count=5, mode=MODE_BASELINE,
                         sim_duration_ns=1 * SEC, spawn_interval_ns=100 * US)
    run = run_scenario(cfg, 21)
    path = tmp_path / "t.log"
    write_transmission_log(run, path)
    log = load_transmission_log(path)
    assert len(log.records) == len(run.medium.log)
    assert log.positions[0] == run.specs[0].position
    assert verify_log(path) == []


def test_verify_flags_tampered_log(tmp_path):
    cfg = ScenarioConfig(vehicle_count=5, mode=MODE_BASELINE,
                         sim_duration_ns=1 * SEC, spawn_interval_ns=100 * US)
    run = run_scenario(cfg, 22)
    path = tmp_path / "t.log"
    write_transmission_log(run, path)
    lines = path.read_text().splitlines()
    idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    fields = lines[idx].split()
    fields[-1] = "1" if fields[-1] == "0" else "0"
    lines[idx] = " ".join(fields)
    path.write_text("\n".join(lines) + "\n")
    assert verify_log(path) != []


def test_transmission_log_rerun_byte_identical(tmp_path):
    cfg = ScenarioConfig(vehicle_count=6, mode=MODE_TSNCTL, sim_duration_ns=1 * SEC)
    a, b = tmp_path / "a.log", tmp_path / "b.log"
    write_transmission_log(run_scenario(cfg, 9), a)
    write_transmission_log(run_scenario(cfg, 9), b)
    assert a.read_bytes() == b.read_bytes()


def test_rate_respects_counting_switches():
    cfg = ScenarioConfig(vehicle_count=4, mode=MODE_TSNCTL, sim_duration_ns=1 * SEC)
    run = run_scenario(cfg, 13)
    stats = collect_stats(run)
    assert stats.control_frames_sent > 0
    incl = stats.rate(count_control=True)
    excl = stats.rate(count_control=False)
    assert stats.data_frames_sent + stats.control_frames_sent == stats.frames_sent
    if stats.frames_collided == stats.data_frames_collided:
        assert excl >= incl                          # denominator shrinks
    per_rx = stats.rate(per_receiver=True)
    assert per_rx >= 0.0


def test_rate_zero_frames_flagged_undefined():
    from platoonsim.metrics import CollisionStats

    stats = CollisionStats()
    assert stats.rate() == 0.0
    assert stats.undefined_rate is True
