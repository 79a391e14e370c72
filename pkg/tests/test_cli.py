from pathlib import Path

from platoonsim.cli import main

GOOD_CONFIG = """\
[scenario]
vehicle_count = 4
spawn_interval_ns = 1000000
message_interval_ns = 100000000
payload_size_b = 800
mode = baseline
sim_duration_ns = 1000000000
seed = 7
repetitions = 2

[window]
window_ns = 100000000
slot_len_ns = 2000000
"""


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "scenario.cfg"
    path.write_text(text)
    return path


def test_run_writes_results_and_logs(tmp_path, capsys):
    cfg = _write(tmp_path, GOOD_CONFIG)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "results.csv").exists()
    assert (out / "transmissions_rep0.log").exists()
    assert (out / "transmissions_rep1.log").exists()
    assert "mean collision rate" in capsys.readouterr().out


def test_run_is_byte_deterministic(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(b)]) == 0
    assert (a / "results.csv").read_bytes() == (b / "results.csv").read_bytes()
    assert (a / "transmissions_rep0.log").read_bytes() == \
        (b / "transmissions_rep0.log").read_bytes()


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = _write(tmp_path, GOOD_CONFIG + "\n[scenario]\nwarp_factor = 9\n")
    # configparser rejects the duplicate section before our schema does
    assert main(["run", "--config", str(cfg)]) == 2
    cfg2 = _write(tmp_path, GOOD_CONFIG.replace("seed = 7", "seed = 7\nwarp_factor = 9"))
    assert main(["run", "--config", str(cfg2)]) == 2
    assert "config error" in capsys.readouterr().err


def test_bad_mode_exits_2(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG.replace("mode = baseline", "mode = aloha"))
    assert main(["run", "--config", str(cfg)]) == 2


def test_degenerate_window_exits_2(tmp_path):
    bad = GOOD_CONFIG.replace("slot_len_ns = 2000000", "slot_len_ns = 60000000")
    cfg = _write(tmp_path, bad)
    assert main(["run", "--config", str(cfg)]) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_seed_override_changes_output(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", str(cfg), "--out", str(a), "--seed", "7"]) == 0
    assert main(["run", "--config", str(cfg), "--out", str(b), "--seed", "8"]) == 0
    assert (a / "results.csv").read_bytes() != (b / "results.csv").read_bytes()


def test_sweep_writes_long_csv(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG)
    out = tmp_path / "out"
    assert main(["sweep", "--axis", "platoon_size", "--values", "3,4",
                 "--config", str(cfg), "--out", str(out)]) == 0
    text = (out / "sweep_platoon_size.csv").read_text()
    assert text.startswith("axis,value,mode")
    assert "platoon_size,3,baseline" in text
    assert "platoon_size,4,tsnctl" in text


def test_sweep_bad_values_exit_2(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG)
    assert main(["sweep", "--axis", "platoon_size", "--values", "3,x",
                 "--config", str(cfg)]) == 2


def test_verify_accepts_generated_log_and_rejects_tampered(tmp_path, capsys):
    cfg = _write(tmp_path, GOOD_CONFIG)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    log = out / "transmissions_rep0.log"
    assert main(["verify", "--log", str(log)]) == 0

    lines = log.read_text().splitlines()
    idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    fields = lines[idx].split()
    fields[-1] = "1" if fields[-1] == "0" else "0"
    lines[idx] = " ".join(fields)
    log.write_text("\n".join(lines) + "\n")
    assert main(["verify", "--log", str(log)]) == 1


def test_verify_missing_log_exits_1(tmp_path):
    assert main(["verify", "--log", str(tmp_path / "none.log")]) == 1


def test_all_module_sections_parse(tmp_path):
    cfg = _write(tmp_path, GOOD_CONFIG + """
[radio]
range_m = 250.0
data_rate_bps = 6000000
propagation_mps = 299792458
preamble_ns = 40000
cca_detect_ns = 8000

[csma]
cw_slots = 16
backoff_slot_ns = 13000

[metrics]
count_control_frames = false
per_receiver_counting = true
""")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0

    from platoonsim.config import load_config

    parsed = load_config(cfg)
    assert parsed.radio.range_m == 250.0
    assert parsed.radio.preamble_ns == 40000
    assert parsed.csma.cw_slots == 16
    assert parsed.count_control_frames is False
    assert parsed.per_receiver_counting is True
