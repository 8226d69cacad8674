"""Host intrusion detection: train a connection classifier, classify streams.

A trained model discretizes incoming connection records with frozen rules,
asserts the selected feature values as evidence, and reads the class
posterior with its possibility/necessity bracket. The most probable
informative class wins; when nothing is informative the plain argmax is
returned flagged low-confidence.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence


from .core import BayesNet, Evidence
from .features import (
    DataError,
    KDD_FEATURES,
    NUMERIC,
    RawTable,
    TransformRules,
    build_rules,
    gini_rank,
    parse_connection_fields,
    select_features,
    to_discrete_dataset,
)
from .jtree import ImpossibleEvidenceError
from .learning import LearnConfig, fit_cpts, k2_search
from .possibility import HybridMarginal, HybridPropagator

log = logging.getLogger(__name__)

NORMAL_LABEL = "normal"

ALERT_CSV_HEADER = "timestamp,host,src_ip,dst_ip,type,necessity,probability,possibility"


@dataclass(frozen=True)
class ConnectionRecord:
    """One raw connection: the 41 typed feature values plus stream metadata."""

    values: tuple
    timestamp: float = 0.0
    src_ip: str = ""
    dst_ip: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        if len(self.values) != len(KDD_FEATURES):
            raise ValueError(f"expected {len(KDD_FEATURES)} feature values")

    def value(self, feature: str):
        for i, (name, _) in enumerate(KDD_FEATURES):
            if name == feature:
                return self.values[i]
        raise ValueError(f"unknown feature {feature!r}")


@dataclass(frozen=True)
class DetectionAlert:
    """A non-normal classification forwarded to the prediction layer."""

    timestamp: float
    host: str
    src_ip: str
    dst_ip: str
    attack_type: str
    necessity: float
    probability: float
    possibility: float

    def csv_row(self) -> str:
        return (f"{self.timestamp:.12g},{self.host},{self.src_ip},{self.dst_ip},"
                f"{self.attack_type},{self.necessity:.12g},"
                f"{self.probability:.12g},{self.possibility:.12g}")

    def to_payload(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "host": self.host,
            "src_ip": self.src_ip,
            "dst_ip": self.dst_ip,
            "type": self.attack_type,
            "necessity": self.necessity,
            "probability": self.probability,
            "possibility": self.possibility,
        }


@dataclass(frozen=True)
class ClassificationResult:
    label: str
    state: int
    marginal: HybridMarginal
    low_confidence: bool = False
    unknown_values: tuple[str, ...] = ()

    @property
    def triple(self) -> tuple[float, float, float]:
        return self.marginal.triple(self.state)


@dataclass(frozen=True)
class DetectorConfig:
    class_column: str = "attack_type"
    top_k: int = 9
    max_parents: int = 2
    smoothing: float = 1.0
    tau: float = 0.5
    order: tuple[str, ...] | None = None  # column names; default class-first


@dataclass(frozen=True)
class DetectorModel:
    """Everything needed to classify connections: features, rules, net, tau."""

    features: tuple[str, ...]
    rules: TransformRules
    net: BayesNet
    class_var: int
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        self.net.variable(self.class_var)
        kinds = dict(KDD_FEATURES)
        for name in self.features:
            self.net.var_id(name)  # raises when the net lacks the feature
            if kinds.get(name) == NUMERIC and name not in self.rules.means:
                raise ValueError(f"numeric feature {name!r} has no threshold rule")

    @cached_property
    def engine(self) -> HybridPropagator:
        return HybridPropagator(self.net)

    @property
    def class_states(self) -> tuple[str, ...]:
        return self.net.variable(self.class_var).states


def train_detector(table: RawTable, config: DetectorConfig = DetectorConfig()) -> DetectorModel:
    """Rank, select, discretize, learn structure and parameters."""
    ranking = gini_rank(table, config.class_column)
    selected = select_features(ranking, min(config.top_k, len(ranking.entries)))
    rules = build_rules(table, selected)
    dataset = to_discrete_dataset(table, rules, selected)

    name_to_id = {v.name: v.id for v in dataset.variables}
    if config.order is not None:
        unknown = [n for n in config.order if n not in name_to_id]
        if unknown:
            raise ValueError(
                f"order names {unknown} are not among the selected columns "
                f"{sorted(name_to_id)}"
            )
        order = tuple(name_to_id[n] for n in config.order)
    else:
        order = (name_to_id[config.class_column],) + tuple(
            name_to_id[n] for n in selected if n != config.class_column
        )
    learn = LearnConfig(order=order,
                        max_parents=min(config.max_parents, len(selected) - 1),
                        smoothing=config.smoothing)
    dag = k2_search(dataset, learn)
    net = fit_cpts(dataset, dag, config.smoothing)
    return DetectorModel(
        features=tuple(n for n in selected if n != config.class_column),
        rules=rules,
        net=net,
        class_var=name_to_id[config.class_column],
        tau=config.tau,
    )


def _record_evidence(model: DetectorModel, record: ConnectionRecord
                     ) -> tuple[dict[int, int], list[str]]:
    """Discretize one record into evidence; unseen category values carry no
    information under the model and are left unasserted."""
    kinds = dict(KDD_FEATURES)
    evidence: dict[int, int] = {}
    unknown: list[str] = []
    for name in model.features:
        var = model.net.variable(model.net.var_id(name))
        raw = record.value(name)
        if kinds[name] == NUMERIC:
            state = 0 if float(raw) < model.rules.means[name] else 1
        else:
            try:
                state = var.states.index(str(raw))
            except ValueError:
                unknown.append(f"{name}={raw}")
                continue
        evidence[var.id] = state
    return evidence, unknown


def _select_state(marginal: HybridMarginal, tau: float) -> tuple[int, bool]:
    """Most probable informative state; plain argmax (low confidence) if none."""
    informative = [k for k in range(marginal.arity) if marginal.informative(k, tau)]
    pool = informative or list(range(marginal.arity))
    best = pool[0]
    for k in pool[1:]:
        if marginal.probability[k] > marginal.probability[best]:
            best = k
    return best, not informative


def classify_connection(model: DetectorModel, record: ConnectionRecord) -> ClassificationResult:
    """Classify one connection into the most probable informative class."""
    evidence, unknown = _record_evidence(model, record)
    low = False
    try:
        marginal = model.engine.query(Evidence(evidence), [model.class_var])[model.class_var]
    except ImpossibleEvidenceError:
        # evidence combination has zero mass under the model: report the
        # prior-based answer rather than crashing the stream
        log.warning("impossible evidence for record; falling back to prior")
        marginal = model.engine.query(Evidence(), [model.class_var])[model.class_var]
        low = True
    state, uninformative = _select_state(marginal, model.tau)
    return ClassificationResult(
        label=model.class_states[state],
        state=state,
        marginal=marginal,
        low_confidence=low or uninformative,
        unknown_values=tuple(unknown),
    )


def detect_stream(model: DetectorModel, records: Iterable[ConnectionRecord],
                  host: str) -> list[DetectionAlert]:
    """Classify a record stream, emitting one alert per non-normal result."""
    alerts: list[DetectionAlert] = []
    for i, record in enumerate(records):
        try:
            result = classify_connection(model, record)
        except Exception:
            log.exception("record %d on host %s failed to classify; skipping", i, host)
            continue
        if result.label == NORMAL_LABEL:
            continue
        n, p, pi = result.triple
        alerts.append(DetectionAlert(
            timestamp=record.timestamp,
            host=host,
            src_ip=record.src_ip,
            dst_ip=record.dst_ip,
            attack_type=result.label,
            necessity=n,
            probability=p,
            possibility=pi,
        ))
    return alerts


def load_stream(path: str, on_bad: str = "abort") -> list[ConnectionRecord]:
    """Read a connection stream.

    Accepted row shapes:
      41 or 42 fields: plain KDD row (label, when present, is ignored);
          timestamps are synthesized as the 0-based row index in seconds.
      44 or 45 fields: `timestamp,src_ip,dst_ip` prefix followed by the 41
          features (and optional ignored label).
    """
    if on_bad not in ("abort", "skip"):
        raise ValueError("on_bad must be 'abort' or 'skip'")
    n_feat = len(KDD_FEATURES)
    records: list[ConnectionRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            try:
                if len(rec) in (n_feat, n_feat + 1):
                    values = parse_connection_fields(rec[:n_feat], with_label=False)
                    records.append(ConnectionRecord(values, timestamp=float(len(records))))
                elif len(rec) in (n_feat + 3, n_feat + 4):
                    try:
                        ts = float(rec[0])
                    except ValueError:
                        raise DataError(f"bad timestamp {rec[0]!r}") from None
                    values = parse_connection_fields(rec[3:3 + n_feat], with_label=False)
                    records.append(ConnectionRecord(
                        values, timestamp=ts, src_ip=rec[1].strip(), dst_ip=rec[2].strip()
                    ))
                else:
                    raise DataError(f"unexpected field count {len(rec)}")
            except DataError as exc:
                if on_bad == "abort":
                    raise DataError(f"{path}:{lineno}: {exc}") from None
                log.warning("%s:%d: skipped row (%s)", path, lineno, exc)
    return records


def write_alerts_csv(alerts: Sequence[DetectionAlert], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(ALERT_CSV_HEADER + "\n")
        for alert in alerts:
            fh.write(alert.csv_row() + "\n")
