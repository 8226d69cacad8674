from __future__ import annotations

import os


from hidpas.cli import run_command

from conftest import DATA_DIR, SCENARIO_DIR

TRAIN = os.path.join(SCENARIO_DIR, "detector_train.csv")
HISTORY = os.path.join(SCENARIO_DIR, "alert_history.csv")
SYNTH = os.path.join(DATA_DIR, "alerts_synthetic.csv")


def test_no_arguments_is_usage_error(capsys):
    assert run_command([]) == 2
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_is_usage_error(capsys):
    assert run_command(["frobnicate"]) == 2


def test_unknown_flag_is_usage_error(capsys):
    assert run_command(["transform", "--bogus"]) == 2


def test_transform_prints_pi_and_n(capsys):
    assert run_command(["transform", "0.5", "0.3", "0.2"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split(":")[1].split() == ["1", "0.5", "0.2"]
    assert out[1].split(":")[1].split() == ["0.5", "0", "0"]


def test_transform_bad_vector_is_data_error(capsys):
    assert run_command(["transform", "0.5", "0.1"]) == 1
    assert "error" in capsys.readouterr().err


def test_transform_reads_stdin(capsys, monkeypatch):
    import io

    monkeypatch.setattr("sys.stdin", io.StringIO("0.5 0.5\n"))
    assert run_command(["transform"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].split(":")[1].split() == ["1", "1"]


def test_learn_detector_bad_order_name(tmp_path, capsys):
    rc = run_command(["learn-detector", "--data", TRAIN,
                      "--out", str(tmp_path / "m.bn"), "--top-k", "2",
                      "--order", "attack_type,not_a_column"])
    assert rc == 1
    assert "not_a_column" in capsys.readouterr().err


def test_detect_missing_model_names_path(capsys, tmp_path):
    out = tmp_path / "alerts.csv"
    rc = run_command(["detect", "--model", "/no/model.bn",
                      "--data", TRAIN, "--host", "h", "--alerts-out", str(out)])
    assert rc == 1
    assert "/no/model.bn" in capsys.readouterr().err


def test_learn_detector_and_detect_round_trip(tmp_path, capsys):
    model = tmp_path / "det.bn"
    rules = tmp_path / "rules.txt"
    rc = run_command(["learn-detector", "--data", TRAIN, "--out", str(model),
                      "--top-k", "4", "--label-granularity", "attack",
                      "--rules", str(rules), "--no-timestamp"])
    assert rc == 0
    assert model.exists() and rules.exists()
    alerts = tmp_path / "alerts.csv"
    rc = run_command(["detect", "--model", str(model),
                      "--data", os.path.join(SCENARIO_DIR, "host_c.csv"),
                      "--host", "host-c", "--alerts-out", str(alerts)])
    assert rc == 0
    lines = alerts.read_text().splitlines()
    assert len(lines) == 2  # header + one alert
    assert "portsweep" in lines[1]


def test_aggregate_reports_phase_counts(tmp_path, capsys):
    out = tmp_path / "hyper.csv"
    assert run_command(["aggregate", "--alerts", SYNTH, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "50 alerts -> 6 clusters -> 4 hyper-alerts" in stdout
    rows = out.read_text().splitlines()
    assert rows[0] == "id,name,size,earliest"
    assert len(rows) == 5


def test_learn_plan_and_predict(tmp_path, capsys):
    plan = tmp_path / "plan.bn"
    rc = run_command(["learn-plan", "--alerts", HISTORY, "--out", str(plan),
                      "--slot", "60", "--no-timestamp"])
    assert rc == 0
    rc = run_command(["predict", "--model", str(plan),
                      "--observed", "portsweep"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "observed: portsweep" in out
    assert "teardrop" in out


def test_predict_threshold_selection(tmp_path, capsys):
    plan = tmp_path / "plan.bn"
    run_command(["learn-plan", "--alerts", HISTORY, "--out", str(plan),
                 "--slot", "60", "--tau", "0.7", "--no-timestamp"])
    rc = run_command(["predict", "--model", str(plan), "--observed", "portsweep",
                      "--select", "threshold", "--threshold", "0.5"])
    assert rc == 0
    table = capsys.readouterr().out
    line = next(ln for ln in table.splitlines() if ln.startswith("teardrop"))
    assert line.rstrip().endswith("True")


def test_oracle_check_small_run(capsys):
    rc = run_command(["oracle-check", "--seed", "3", "--networks", "10",
                      "--transforms", "25"])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.count(": ok") == 3


def test_cli_outputs_are_deterministic(tmp_path):
    """Identical argv + inputs yield byte-identical outputs (timestamps off)."""
    outputs = []
    for tag in ("a", "b"):
        model = tmp_path / f"det_{tag}.bn"
        plan = tmp_path / f"plan_{tag}.bn"
        clf = tmp_path / f"clf_{tag}.bn"
        hyper = tmp_path / f"hyper_{tag}.csv"
        alerts = tmp_path / f"alerts_{tag}.csv"
        assert run_command(["learn-detector", "--data", TRAIN, "--out", str(model),
                            "--top-k", "4", "--label-granularity", "attack",
                            "--no-timestamp"]) == 0
        assert run_command(["detect", "--model", str(model),
                            "--data", os.path.join(SCENARIO_DIR, "host_c.csv"),
                            "--host", "h", "--alerts-out", str(alerts)]) == 0
        assert run_command(["aggregate", "--alerts", SYNTH, "--out", str(hyper)]) == 0
        assert run_command(["learn-plan", "--alerts", HISTORY, "--out", str(plan),
                            "--classifier-out", str(clf), "--slot", "60",
                            "--no-timestamp"]) == 0
        outputs.append(tuple(p.read_bytes()
                             for p in (model, plan, clf, hyper, alerts)))
    assert outputs[0] == outputs[1]


def test_simulate_cli_writes_event_log(tmp_path, capsys):
    model = tmp_path / "det.bn"
    plan = tmp_path / "plan.bn"
    clf = tmp_path / "clf.bn"
    run_command(["learn-detector", "--data", TRAIN, "--out", str(model),
                 "--top-k", "4", "--label-granularity", "attack", "--no-timestamp"])
    run_command(["learn-plan", "--alerts", HISTORY, "--out", str(plan),
                 "--classifier-out", str(clf), "--slot", "60", "--no-timestamp"])
    conf = tmp_path / "sim.conf"
    conf.write_text(
        f"detector_model = {model}\nalert_classifier = {clf}\n"
        f"plan_model = {plan}\ntau = 0.7\n"
        f"host.host-a = {os.path.join(SCENARIO_DIR, 'host_a.csv')}\n"
        f"host.host-c = {os.path.join(SCENARIO_DIR, 'host_c.csv')}\n"
    )
    log1 = tmp_path / "e1.ndjson"
    log2 = tmp_path / "e2.ndjson"
    assert run_command(["simulate", "--config", str(conf), "--seed", "42",
                        "--log", str(log1)]) == 0
    assert run_command(["simulate", "--config", str(conf), "--seed", "42",
                        "--log", str(log2)]) == 0
    assert log1.read_bytes() == log2.read_bytes()
    assert "1 alerts, 1 predictions" in capsys.readouterr().out
