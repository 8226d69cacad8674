"""Regenerates the bundled data fixtures. Run from this directory:

    python gen_fixtures.py

Everything is derived from fixed literals so the output is byte-stable.
"""

from __future__ import annotations

import os

HERE = os.path.dirname(os.path.abspath(__file__))

# 41 KDD feature template: name -> default value (categorical as str).
FEATURES = [
    ("duration", "0"), ("protocol_type", "tcp"), ("service", "http"),
    ("flag", "SF"), ("src_bytes", "230"), ("dst_bytes", "1280"),
    ("land", "0"), ("wrong_fragment", "0"), ("urgent", "0"), ("hot", "0"),
    ("num_failed_logins", "0"), ("logged_in", "1"), ("num_compromised", "0"),
    ("root_shell", "0"), ("su_attempted", "0"), ("num_root", "0"),
    ("num_file_creations", "0"), ("num_shells", "0"), ("num_access_files", "0"),
    ("num_outbound_cmds", "0"), ("is_host_login", "0"), ("is_guest_login", "0"),
    ("count", "4"), ("srv_count", "4"), ("serror_rate", "0"),
    ("srv_serror_rate", "0"), ("rerror_rate", "0"), ("srv_rerror_rate", "0"),
    ("same_srv_rate", "1"), ("diff_srv_rate", "0"), ("srv_diff_host_rate", "0"),
    ("dst_host_count", "20"), ("dst_host_srv_count", "20"),
    ("dst_host_same_srv_rate", "1"), ("dst_host_diff_srv_rate", "0"),
    ("dst_host_same_src_port_rate", "0.1"), ("dst_host_srv_diff_host_rate", "0"),
    ("dst_host_serror_rate", "0"), ("dst_host_srv_serror_rate", "0"),
    ("dst_host_rerror_rate", "0"), ("dst_host_srv_rerror_rate", "0"),
]


def row(**overrides) -> list[str]:
    values = dict(FEATURES)
    values.update({k: str(v) for k, v in overrides.items()})
    return [values[name] for name, _ in FEATURES]


def normal_http(count, src_bytes):
    return row(count=count, src_bytes=src_bytes)


def normal_udp(count, src_bytes):
    return row(protocol_type="udp", service="domain_u", count=count,
               src_bytes=src_bytes, logged_in="0", dst_host_same_srv_rate="0.8")


def portsweep(count):
    return row(service="private", flag="S0", src_bytes="0", dst_bytes="0",
               logged_in="0", count=count, srv_count="1", serror_rate="1",
               srv_serror_rate="1", same_srv_rate="0.05", diff_srv_rate="0.9",
               dst_host_count="255", dst_host_srv_count="2",
               dst_host_same_srv_rate="0.01", dst_host_diff_srv_rate="0.9",
               dst_host_serror_rate="1", dst_host_srv_serror_rate="1")


def write_csv(name: str, rows: list[list[str]]) -> None:
    path = os.path.join(HERE, name)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(",".join(r) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def detector_training() -> None:
    rows = []
    for i in range(16):
        rows.append(normal_http(count=2 + (i % 8), src_bytes=180 + 10 * i) + ["normal."])
    for i in range(12):
        rows.append(normal_udp(count=1 + (i % 5), src_bytes=60 + 5 * i) + ["normal."])
    for i in range(12):
        rows.append(portsweep(count=180 + 7 * i) + ["portsweep."])
    write_csv("scenario/detector_train.csv", rows)


def host_streams() -> None:
    meta = lambda ts, src, dst: [str(ts), src, dst]
    write_csv("scenario/host_a.csv", [
        meta(10, "192.168.1.50", "192.168.1.10") + normal_http(3, 200),
        meta(20, "192.168.1.50", "192.168.1.10") + normal_http(5, 240),
        meta(30, "192.168.1.51", "192.168.1.10") + normal_udp(2, 70),
    ])
    write_csv("scenario/host_b.csv", [
        meta(12, "192.168.1.60", "192.168.1.20") + normal_http(4, 260),
        meta(25, "192.168.1.61", "192.168.1.20") + normal_udp(3, 80),
    ])
    write_csv("scenario/host_c.csv", [
        meta(15, "192.168.1.70", "192.168.1.10") + normal_http(6, 210),
        meta(65, "10.0.0.5", "192.168.1.10") + portsweep(215),
        meta(80, "192.168.1.70", "192.168.1.10") + normal_http(2, 220),
    ])


def alert_history() -> None:
    """Plan-training log: teardrop always follows portsweep within the slot.

    Slot width 60 s; co-occurrences at 100/400/700 give presence in slots
    {0, 5, 10} of 11, so the learned lift of teardrop given portsweep is
    well above twice its prior.
    """
    rows = [["timestamp", "sensor", "src_ip", "src_port", "dst_ip",
             "dst_port", "attack_type"]]
    for base, port in ((100, "2001"), (400, "2001"), (700, "2003")):
        rows.append([str(base), "ids1", "10.0.0.5", port,
                     "192.168.1.10", "445", "portsweep"])
        rows.append([str(base + 5), "ids1", "10.0.0.5", port,
                     "192.168.1.10", "445", "portsweep"])
        rows.append([str(base + 10), "ids1", "10.0.0.5", "3001",
                     "192.168.1.10", "80", "teardrop"])
    write_csv("scenario/alert_history.csv", rows)


def synthetic_alert_log() -> None:
    """50 alerts with a fixed duplication design.

    Phase-1 clusters (6): scan x12 + scan x8 (different src port),
    exploit x15, dos x7 + dos x3 (different sensor/port), backdoor x5.
    Phase-2 merge by attack type: scan 20, exploit 15, dos 10, backdoor 5.
    """
    rows = [["timestamp", "sensor", "src_ip", "src_port", "dst_ip",
             "dst_port", "attack_type"]]
    groups = [
        (12, "ids1", "10.0.0.5", "2001", "192.168.1.10", "445", "scan", 0),
        (8, "ids1", "10.0.0.5", "2003", "192.168.1.10", "445", "scan", 300),
        (15, "ids2", "10.0.0.5", "3001", "192.168.1.20", "8080", "exploit", 60),
        (7, "ids1", "10.0.0.7", "4001", "192.168.1.30", "80", "dos", 120),
        (3, "ids3", "10.0.0.7", "4002", "192.168.1.30", "80", "dos", 420),
        (5, "ids2", "10.0.0.9", "5005", "192.168.1.40", "22", "backdoor", 180),
    ]
    for size, sensor, sip, sport, dip, dport, attack, t0 in groups:
        for k in range(size):
            rows.append([str(t0 + 7 * k), sensor, sip, sport, dip, dport, attack])
    write_csv("alerts_synthetic.csv", rows)


if __name__ == "__main__":
    detector_training()
    host_streams()
    alert_history()
    synthetic_alert_log()
