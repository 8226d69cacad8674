"""Network intrusion prediction: hyper-alerts, plan learning, forecasting.

Alerts are first clustered on all attributes except timestamps, then the
clusters are merged per attack-plan step (by attack type unless overridden).
Hyper-alert occurrences over fixed time slots train a binary network whose
conditional structure is read as the attack plan.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .core import BayesNet, Evidence, Variable
from .features import DataError
from .jtree import ImpossibleEvidenceError
from .learning import DiscreteDataset, LearnConfig, fit_cpts, k2_search
from .possibility import HybridMarginal, HybridPropagator

log = logging.getLogger(__name__)

ALERT_LOG_HEADER = "timestamp,sensor,src_ip,src_port,dst_ip,dst_port,attack_type"
ATTRIBUTE_FIELDS = ("src_ip", "src_port", "dst_ip", "dst_port", "attack_type")
CLASS_COLUMN = "hyper_alert"
ABSENT, PRESENT = 0, 1


@dataclass(frozen=True)
class AlertRecord:
    """One sensor alert; ports may be empty for partially observed alerts."""

    timestamp: float
    sensor: str
    src_ip: str
    src_port: str
    dst_ip: str
    dst_port: str
    attack_type: str

    def __post_init__(self):
        if not math.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")
        if not self.sensor or not self.attack_type:
            raise ValueError("sensor and attack_type are required")

    def attributes(self) -> tuple[str, ...]:
        return tuple(getattr(self, f) for f in ATTRIBUTE_FIELDS)


@dataclass(frozen=True)
class HyperAlert:
    """A cluster of alerts representing one step of an attack plan.

    attributes holds the values shared by every member; fields that differ
    across members after merging are blanked.
    """

    id: int
    name: str
    attributes: tuple[str, ...]
    members: tuple[AlertRecord, ...]

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def earliest(self) -> float:
        return min(a.timestamp for a in self.members)


def aggregate_alerts(log_records: Sequence[AlertRecord],
                     merge_key: str = "attack_type") -> list[HyperAlert]:
    """Two-phase aggregation into hyper-alerts.

    Phase 1 groups alerts identical in (sensor, src_ip, src_port, dst_ip,
    dst_port, attack_type); phase 2 merges phase-1 clusters that share the
    merge key, which names the attack-plan step. Ids follow first occurrence.
    """
    if merge_key not in ATTRIBUTE_FIELDS:
        raise ValueError(f"merge key must be one of {ATTRIBUTE_FIELDS}")

    phase1: dict[tuple, list[AlertRecord]] = {}
    for alert in log_records:
        phase1.setdefault((alert.sensor,) + alert.attributes(), []).append(alert)

    merged: dict[str, list[list[AlertRecord]]] = {}
    for key, members in phase1.items():
        step = getattr(members[0], merge_key)
        merged.setdefault(step, []).append(members)

    out: list[HyperAlert] = []
    for hid, (step, clusters) in enumerate(merged.items()):
        members = tuple(a for cluster in clusters for a in cluster)
        shared = []
        for f in ATTRIBUTE_FIELDS:
            values = {getattr(a, f) for a in members}
            shared.append(values.pop() if len(values) == 1 else "")
        out.append(HyperAlert(id=hid, name=step, attributes=tuple(shared),
                              members=members))
    return out


def phase1_cluster_count(log_records: Sequence[AlertRecord]) -> int:
    """Number of clusters before the plan-step merge (for reporting)."""
    return len({(a.sensor,) + a.attributes() for a in log_records})


# -- alert classification -----------------------------------------------------

@dataclass(frozen=True)
class AlertClassifierModel:
    """Bayesian classifier from alert attributes to hyper-alert names."""

    net: BayesNet
    class_var: int
    tau: float

    @cached_property
    def engine(self) -> HybridPropagator:
        return HybridPropagator(self.net)

    @property
    def class_states(self) -> tuple[str, ...]:
        return self.net.variable(self.class_var).states


@dataclass(frozen=True)
class AlertClassification:
    hyper_name: str
    state: int
    marginal: HybridMarginal
    low_confidence: bool = False
    unknown_values: tuple[str, ...] = ()

    @property
    def triple(self) -> tuple[float, float, float]:
        return self.marginal.triple(self.state)


def train_alert_classifier(hypers: Sequence[HyperAlert],
                           max_parents: int = 2,
                           smoothing: float = 1.0,
                           tau: float = 0.5) -> AlertClassifierModel:
    """Learn attribute -> hyper-alert structure from the labeled members."""
    if not hypers:
        raise ValueError("no hyper-alerts to train on")
    rows = [(a, h.name) for h in hypers for a in h.members]

    columns = list(ATTRIBUTE_FIELDS) + [CLASS_COLUMN]
    variables = []
    state_maps: list[dict[str, int]] = []
    for cid, col in enumerate(columns):
        if col == CLASS_COLUMN:
            observed = sorted({label for _, label in rows})
        else:
            observed = sorted({getattr(a, col) for a, _ in rows})
        if len(observed) < 2:
            observed = observed + ["__none__"]  # keep arity >= 2 for degenerate data
        variables.append(Variable(cid, col, tuple(observed)))
        state_maps.append({s: i for i, s in enumerate(observed)})

    data = np.empty((len(rows), len(columns)), dtype=np.int64)
    for r, (alert, label) in enumerate(rows):
        for cid, col in enumerate(columns):
            value = label if col == CLASS_COLUMN else getattr(alert, col)
            data[r, cid] = state_maps[cid][value]
    dataset = DiscreteDataset(tuple(variables), data)

    class_id = len(columns) - 1
    order = (class_id,) + tuple(range(class_id))
    config = LearnConfig(order=order,
                         max_parents=min(max_parents, len(columns) - 1),
                         smoothing=smoothing)
    net = fit_cpts(dataset, k2_search(dataset, config), smoothing)
    return AlertClassifierModel(net=net, class_var=class_id, tau=tau)


def classify_alert(model: AlertClassifierModel, alert: AlertRecord) -> AlertClassification:
    """Assert the alert's attributes as evidence; empty fields stay unobserved."""
    evidence: dict[int, int] = {}
    unknown: list[str] = []
    for f in ATTRIBUTE_FIELDS:
        value = getattr(alert, f)
        if value == "":
            continue
        var = model.net.variable(model.net.var_id(f))
        try:
            evidence[var.id] = var.states.index(value)
        except ValueError:
            unknown.append(f"{f}={value}")
    low = False
    try:
        marginal = model.engine.query(Evidence(evidence), [model.class_var])[model.class_var]
    except ImpossibleEvidenceError:
        log.warning("impossible alert evidence; falling back to prior")
        marginal = model.engine.query(Evidence(), [model.class_var])[model.class_var]
        low = True
    informative = [k for k in range(marginal.arity) if marginal.informative(k, model.tau)]
    pool = informative or list(range(marginal.arity))
    best = pool[0]
    for k in pool[1:]:
        if marginal.probability[k] > marginal.probability[best]:
            best = k
    return AlertClassification(
        hyper_name=model.class_states[best],
        state=best,
        marginal=marginal,
        low_confidence=low or not informative,
        unknown_values=tuple(unknown),
    )


# -- transactions and the plan model ------------------------------------------

@dataclass(frozen=True)
class TransactionMatrix:
    """Binary hyper-alert occurrence per time slot.

    Slot i covers [start + i*dt, start + (i+1)*dt); occurrence holds one row
    per slot and one column per hyper-alert.
    """

    names: tuple[str, ...]
    earliest: tuple[float, ...]
    start: float
    dt: float
    occurrence: np.ndarray
    ignored: int = 0

    def __post_init__(self):
        occ = np.asarray(self.occurrence, dtype=np.int8)
        if not np.all((occ == 0) | (occ == 1)):
            raise ValueError("occurrence entries must be binary")
        occ.setflags(write=False)
        object.__setattr__(self, "occurrence", occ)

    @property
    def slot_count(self) -> int:
        return int(self.occurrence.shape[0])


def build_transactions(hypers: Sequence[HyperAlert], dt: float,
                       start: float | None = None,
                       span: float | None = None) -> TransactionMatrix:
    """Mark each hyper-alert present in every slot holding one of its members.

    start defaults to the earliest alert; span defaults to covering the whole
    log. Alerts outside [start, start + span) are ignored and counted.
    """
    if dt <= 0:
        raise ValueError("slot width must be positive")
    if not hypers:
        raise ValueError("no hyper-alerts")
    stamps = [a.timestamp for h in hypers for a in h.members]
    if start is None:
        start = min(stamps)
    if span is not None:
        if span < dt:
            raise ValueError("span must cover at least one slot")
        m = math.ceil(span / dt)
        limit = start + span
    else:
        latest = max(stamps)
        m = max(1, math.floor((latest - start) / dt) + 1) if latest >= start else 1
        limit = start + m * dt

    occ = np.zeros((m, len(hypers)), dtype=np.int8)
    ignored = 0
    for col, h in enumerate(hypers):
        for alert in h.members:
            if not start <= alert.timestamp < limit:
                ignored += 1
                continue
            slot = int((alert.timestamp - start) // dt)
            if slot >= m:
                ignored += 1
                continue
            occ[slot, col] = 1
    if ignored:
        log.warning("%d alerts fall outside the transaction window", ignored)
    return TransactionMatrix(
        names=tuple(h.name for h in hypers),
        earliest=tuple(h.earliest for h in hypers),
        start=float(start),
        dt=float(dt),
        occurrence=occ,
        ignored=ignored,
    )


@dataclass(frozen=True)
class PlanModel:
    """Binary occurrence network over hyper-alerts, with the gap threshold."""

    net: BayesNet
    hyper_names: tuple[str, ...]
    tau: float

    @cached_property
    def engine(self) -> HybridPropagator:
        return HybridPropagator(self.net)

    def var_of(self, hyper: str | int) -> int:
        if isinstance(hyper, int):
            if not 0 <= hyper < len(self.hyper_names):
                raise ValueError(f"no hyper-alert with id {hyper}")
            return hyper
        try:
            return self.hyper_names.index(hyper)
        except ValueError:
            raise ValueError(f"no hyper-alert named {hyper!r}") from None


def train_plan_model(tm: TransactionMatrix, max_parents: int = 2,
                     smoothing: float = 1.0, tau: float = 0.5) -> PlanModel:
    """Slots are observations; K2 runs in earliest-occurrence order."""
    if tm.slot_count < 1 or not tm.names:
        raise ValueError("transaction matrix must have at least one slot and one hyper-alert")
    variables = tuple(
        Variable(i, name, ("absent", "present")) for i, name in enumerate(tm.names)
    )
    dataset = DiscreteDataset(variables, tm.occurrence.astype(np.int64))
    order = tuple(sorted(range(len(tm.names)), key=lambda i: (tm.earliest[i], i)))
    config = LearnConfig(order=order,
                         max_parents=min(max_parents, max(0, len(tm.names) - 1)),
                         smoothing=smoothing)
    net = fit_cpts(dataset, k2_search(dataset, config), smoothing)
    return PlanModel(net=net, hyper_names=tm.names, tau=tau)


@dataclass(frozen=True)
class PredictionRow:
    hyper_name: str
    necessity: float
    probability: float
    possibility: float
    informative: bool
    selected: bool

    def to_payload(self) -> dict:
        return {
            "hyper_alert": self.hyper_name,
            "necessity": self.necessity,
            "probability": self.probability,
            "possibility": self.possibility,
            "informative": self.informative,
            "selected": self.selected,
        }


@dataclass(frozen=True)
class PredictionReport:
    observed: tuple[str, ...]
    rows: tuple[PredictionRow, ...]
    selection: str

    @property
    def predicted(self) -> tuple[PredictionRow, ...]:
        """Selected rows ranked by probability, best first."""
        chosen = [r for r in self.rows if r.selected]
        chosen.sort(key=lambda r: (-r.probability, r.hyper_name))
        return tuple(chosen)

    def format_table(self) -> str:
        width = max([len("hyper_alert")] + [len(r.hyper_name) for r in self.rows])
        lines = [f"{'hyper_alert':<{width}}  {'N':>10}  {'P':>10}  {'Π':>10}  "
                 f"informative  selected"]
        for r in self.rows:
            lines.append(
                f"{r.hyper_name:<{width}}  {r.necessity:>10.6f}  {r.probability:>10.6f}  "
                f"{r.possibility:>10.6f}  {str(r.informative):<11}  {str(r.selected)}"
            )
        return "\n".join(lines)

    def to_payload(self) -> dict:
        return {
            "observed": list(self.observed),
            "selection": self.selection,
            "rows": [r.to_payload() for r in self.rows],
        }


def predict_attacks(model: PlanModel, observed: Iterable[str | int],
                    selection: str = "max", theta: float = 0.5) -> PredictionReport:
    """Forecast unobserved hyper-alerts given the observed ones as evidence.

    Observation asserts `present`; unobserved steps are never asserted
    absent. `max` selects the informative node(s) of highest probability;
    `threshold` selects every informative node with probability >= theta.
    """
    if selection not in ("max", "threshold"):
        raise ValueError("selection must be 'max' or 'threshold'")
    observed_ids = sorted({model.var_of(h) for h in observed})
    evidence = Evidence({vid: PRESENT for vid in observed_ids})
    targets = [i for i in range(len(model.hyper_names)) if i not in observed_ids]

    marginals = model.engine.query(evidence, targets) if targets else {}
    draft = []
    for vid in targets:
        n, p, pi = marginals[vid].triple(PRESENT)
        informative = (pi - n) <= model.tau
        draft.append([model.hyper_names[vid], n, p, pi, informative])

    if selection == "max":
        top = max((d[2] for d in draft if d[4]), default=None)
        flags = [d[4] and d[2] == top for d in draft]
    else:
        flags = [d[4] and d[2] >= theta for d in draft]

    rows = tuple(
        PredictionRow(name, n, p, pi, informative, selected)
        for (name, n, p, pi, informative), selected in zip(draft, flags)
    )
    return PredictionReport(
        observed=tuple(model.hyper_names[v] for v in observed_ids),
        rows=rows,
        selection=selection,
    )


def correlation_edges(model: PlanModel) -> list[tuple[str, str, tuple[float, float, float]]]:
    """Strength triple P(child present | parent present) for every plan edge."""
    out = []
    for child, parents in enumerate(model.net.dag.parents):
        for parent in parents:
            marginal = model.engine.query(Evidence({parent: PRESENT}), [child])[child]
            out.append((model.hyper_names[parent], model.hyper_names[child],
                        marginal.triple(PRESENT)))
    return out


# -- alert log I/O -------------------------------------------------------------

def load_alert_log(path: str) -> list[AlertRecord]:
    """CSV with header timestamp,sensor,src_ip,src_port,dst_ip,dst_port,attack_type."""
    out: list[AlertRecord] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError:
        raise DataError(f"alert log not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ALERT_LOG_HEADER.split(","):
            raise DataError(f"{path}: expected header {ALERT_LOG_HEADER!r}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != 7:
                raise DataError(f"{path}:{lineno}: expected 7 fields, got {len(rec)}")
            try:
                ts = float(rec[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad timestamp {rec[0]!r}") from None
            out.append(AlertRecord(ts, *(x.strip() for x in rec[1:])))
    return out


def write_hyper_csv(hypers: Sequence[HyperAlert], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id,name,size,earliest\n")
        for h in hypers:
            fh.write(f"{h.id},{h.name},{h.size},{h.earliest:.12g}\n")
