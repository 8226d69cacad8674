from __future__ import annotations

import math

import numpy as np
import pytest

from hidpas.detection import (
    ConnectionRecord,
    DetectorConfig,
    classify_connection,
    detect_stream,
    load_stream,
    train_detector,
    write_alerts_csv,
)
from hidpas.features import KDD_FEATURES, RawTable, load_kdd

from conftest import data_path


def toy_table(n_per_class: int = 12) -> RawTable:
    """attack_type is a deterministic function of protocol_type."""
    names = [n for n, _ in KDD_FEATURES] + ["attack_type"]
    kinds = [k for _, k in KDD_FEATURES] + ["categorical"]
    defaults = {"categorical": "c0", "numeric": 0.0}
    columns = []
    protos = ["tcp"] * n_per_class + ["udp"] * n_per_class
    labels = ["normal"] * n_per_class + ["dos"] * n_per_class
    for name, kind in zip(names, kinds):
        if name == "protocol_type":
            columns.append(np.array(protos, dtype=object))
        elif name == "attack_type":
            columns.append(np.array(labels, dtype=object))
        elif kind == "numeric":
            columns.append(np.zeros(2 * n_per_class))
        else:
            columns.append(np.array([defaults["categorical"]] * 2 * n_per_class,
                                    dtype=object))
    return RawTable(tuple(names), tuple(kinds), tuple(columns))


def record_from_table(table: RawTable, row: int, **meta) -> ConnectionRecord:
    values = tuple(table.columns[i][row] for i in range(41))
    return ConnectionRecord(values, **meta)


@pytest.fixture(scope="module")
def deterministic_model():
    table = toy_table()
    return train_detector(table, DetectorConfig(top_k=2, smoothing=0.0)), table


@pytest.fixture(scope="module")
def scenario_model():
    table = load_kdd(data_path("scenario", "detector_train.csv"))
    return train_detector(table, DetectorConfig(top_k=4))


def test_deterministic_class_forces_edge_and_perfect_training_fit(deterministic_model):
    model, table = deterministic_model
    proto = model.net.var_id("protocol_type")
    cls = model.class_var
    linked = (proto in model.net.dag.parents[cls]
              or cls in model.net.dag.parents[proto])
    assert linked
    for row in range(table.row_count):
        result = classify_connection(model, record_from_table(table, row))
        assert result.label == table.column("attack_type")[row]
        assert result.triple[1] == pytest.approx(1.0)
        assert result.marginal.gap(result.state) == pytest.approx(0.0)


def test_single_class_table_degenerates():
    table = toy_table()
    labels = np.array(["normal"] * table.row_count, dtype=object)
    idx = table.names.index("attack_type")
    columns = tuple(labels if i == idx else c for i, c in enumerate(table.columns))
    single = RawTable(table.names, table.kinds, columns)
    model = train_detector(single, DetectorConfig(top_k=2))
    result = classify_connection(model, record_from_table(single, 0))
    assert result.label == "normal"
    assert result.triple[1] == pytest.approx(1.0)


def test_model_has_top_k_plus_class_variables(scenario_model):
    assert len(scenario_model.net.dag.variables) == 5  # 4 features + class


def test_classification_probabilities_sum_to_one(scenario_model):
    records = load_stream(data_path("scenario", "host_c.csv"))
    for record in records:
        result = classify_connection(scenario_model, record)
        assert math.fsum(result.marginal.probability) == pytest.approx(1.0, abs=1e-9)


def test_unseen_category_flows_through_unknown_path(deterministic_model):
    model, table = deterministic_model
    record = record_from_table(table, 0)
    values = list(record.values)
    values[1] = "icmp"  # protocol value never seen in training
    result = classify_connection(model, ConnectionRecord(tuple(values)))
    assert result.unknown_values == ("protocol_type=icmp",)
    assert result.label in ("normal", "dos")


def test_symmetric_model_breaks_ties_by_state_order():
    table = toy_table()
    model = train_detector(table, DetectorConfig(top_k=0, smoothing=1.0))
    # no features: classification sees the bare class prior, which is uniform
    result = classify_connection(model, record_from_table(table, 0))
    assert result.label == model.class_states[0]


def test_probability_component_equals_plain_jt_classification(scenario_model):
    """The possibility bracket influences selection only; P comes from plain
    sum-product propagation of the same evidence."""
    from hidpas.core import Evidence
    from hidpas.detection import _record_evidence
    from hidpas.jtree import (SUM_PRODUCT, build_tree_for_net,
                              initialize_potentials, net_factors, propagate,
                              query_marginal)

    records = load_stream(data_path("scenario", "host_c.csv"))
    jt = initialize_potentials(build_tree_for_net(scenario_model.net),
                               net_factors(scenario_model.net), SUM_PRODUCT)
    for record in records:
        evidence, _ = _record_evidence(scenario_model, record)
        result = classify_connection(scenario_model, record)
        plain = query_marginal(propagate(jt, Evidence(evidence)),
                               scenario_model.class_var)
        assert tuple(plain) == result.marginal.probability


def test_detect_stream_all_normal_is_empty(scenario_model):
    records = load_stream(data_path("scenario", "host_a.csv"))
    assert detect_stream(scenario_model, records, "h") == []


def test_detect_stream_flags_the_intrusive_record(scenario_model):
    records = load_stream(data_path("scenario", "host_c.csv"))
    alerts = detect_stream(scenario_model, records, "host-c")
    assert len(alerts) == 1
    alert = alerts[0]
    assert alert.attack_type == "portsweep"
    assert alert.host == "host-c"
    assert alert.timestamp == 65.0
    assert alert.src_ip == "10.0.0.5"
    assert 0.0 <= alert.necessity <= alert.possibility <= 1.0


def test_detect_stream_empty_input(scenario_model):
    assert detect_stream(scenario_model, [], "h") == []


def test_alert_count_never_exceeds_records(scenario_model):
    for name in ("host_a", "host_b", "host_c"):
        records = load_stream(data_path("scenario", f"{name}.csv"))
        alerts = detect_stream(scenario_model, records, name)
        assert len(alerts) <= len(records)
        assert all(a.attack_type != "normal" for a in alerts)


def test_load_stream_plain_kdd_synthesizes_timestamps(tmp_path):
    lines = open(data_path("scenario", "detector_train.csv")).readlines()[:3]
    path = tmp_path / "plain.csv"
    path.write_text("".join(lines))
    records = load_stream(str(path))
    assert [r.timestamp for r in records] == [0.0, 1.0, 2.0]
    assert records[0].src_ip == ""


def test_load_stream_metadata_prefix():
    records = load_stream(data_path("scenario", "host_c.csv"))
    assert records[1].timestamp == 65.0
    assert records[1].src_ip == "10.0.0.5"
    assert records[1].dst_ip == "192.168.1.10"


def test_load_stream_rejects_bad_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3,4\n")
    with pytest.raises(Exception):
        load_stream(str(path))
    assert load_stream(str(path), on_bad="skip") == []


def test_alert_csv_format(tmp_path, scenario_model):
    records = load_stream(data_path("scenario", "host_c.csv"))
    alerts = detect_stream(scenario_model, records, "host-c")
    out = tmp_path / "alerts.csv"
    write_alerts_csv(alerts, str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == "timestamp,host,src_ip,dst_ip,type,necessity,probability,possibility"
    assert lines[1].split(",")[4] == "portsweep"
