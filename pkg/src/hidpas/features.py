"""Connection-table ingestion, Gini feature ranking, mean discretization.

The KDD connection format is headerless CSV: 41 fixed features plus one
trailing label, with labels dot-terminated in the original files.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Variable
from .learning import DiscreteDataset

log = logging.getLogger(__name__)

UNKNOWN_STATE = "__unknown__"
NUMERIC = "numeric"
CATEGORICAL = "categorical"

# Canonical KDD Cup 1999 connection features, in file order.
KDD_FEATURES: tuple[tuple[str, str], ...] = (
    ("duration", NUMERIC),
    ("protocol_type", CATEGORICAL),
    ("service", CATEGORICAL),
    ("flag", CATEGORICAL),
    ("src_bytes", NUMERIC),
    ("dst_bytes", NUMERIC),
    ("land", CATEGORICAL),
    ("wrong_fragment", NUMERIC),
    ("urgent", NUMERIC),
    ("hot", NUMERIC),
    ("num_failed_logins", NUMERIC),
    ("logged_in", CATEGORICAL),
    ("num_compromised", NUMERIC),
    ("root_shell", NUMERIC),
    ("su_attempted", NUMERIC),
    ("num_root", NUMERIC),
    ("num_file_creations", NUMERIC),
    ("num_shells", NUMERIC),
    ("num_access_files", NUMERIC),
    ("num_outbound_cmds", NUMERIC),
    ("is_host_login", CATEGORICAL),
    ("is_guest_login", CATEGORICAL),
    ("count", NUMERIC),
    ("srv_count", NUMERIC),
    ("serror_rate", NUMERIC),
    ("srv_serror_rate", NUMERIC),
    ("rerror_rate", NUMERIC),
    ("srv_rerror_rate", NUMERIC),
    ("same_srv_rate", NUMERIC),
    ("diff_srv_rate", NUMERIC),
    ("srv_diff_host_rate", NUMERIC),
    ("dst_host_count", NUMERIC),
    ("dst_host_srv_count", NUMERIC),
    ("dst_host_same_srv_rate", NUMERIC),
    ("dst_host_diff_srv_rate", NUMERIC),
    ("dst_host_same_src_port_rate", NUMERIC),
    ("dst_host_srv_diff_host_rate", NUMERIC),
    ("dst_host_serror_rate", NUMERIC),
    ("dst_host_srv_serror_rate", NUMERIC),
    ("dst_host_rerror_rate", NUMERIC),
    ("dst_host_srv_rerror_rate", NUMERIC),
)

LABEL_COLUMN = "attack_type"

# Standard 5-way grouping of the KDD attack labels.
_CATEGORY_OF = {
    "normal": "normal",
    "back": "dos", "land": "dos", "neptune": "dos", "pod": "dos",
    "smurf": "dos", "teardrop": "dos", "apache2": "dos", "udpstorm": "dos",
    "processtable": "dos", "mailbomb": "dos",
    "ipsweep": "probe", "nmap": "probe", "portsweep": "probe",
    "satan": "probe", "mscan": "probe", "saint": "probe",
    "ftp_write": "r2l", "guess_passwd": "r2l", "imap": "r2l",
    "multihop": "r2l", "phf": "r2l", "spy": "r2l", "warezclient": "r2l",
    "warezmaster": "r2l", "sendmail": "r2l", "named": "r2l",
    "snmpgetattack": "r2l", "snmpguess": "r2l", "xlock": "r2l",
    "xsnoop": "r2l", "worm": "r2l",
    "buffer_overflow": "u2r", "loadmodule": "u2r", "perl": "u2r",
    "rootkit": "u2r", "httptunnel": "u2r", "ps": "u2r",
    "sqlattack": "u2r", "xterm": "u2r",
}


class DataError(ValueError):
    """Malformed input data, reported with file/line context."""


@dataclass(frozen=True)
class RawTable:
    """Rectangular named columns, each categorical (str) or numeric (float)."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    columns: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        object.__setattr__(self, "columns", tuple(self.columns))
        if len(set(self.names)) != len(self.names):
            raise ValueError("column names must be unique")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError("columns have differing lengths")

    @property
    def row_count(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    def column(self, name: str) -> np.ndarray:
        return self.columns[self.names.index(name)]

    def kind(self, name: str) -> str:
        return self.kinds[self.names.index(name)]


@dataclass(frozen=True)
class FeatureRanking:
    """Per-feature impurity gain against the class column, best first."""

    class_column: str
    entries: tuple[tuple[str, float], ...]

    def gain(self, name: str) -> float:
        for n, g in self.entries:
            if n == name:
                return g
        raise ValueError(f"no feature named {name!r}")


@dataclass(frozen=True)
class DiscretizationRule:
    """Binary split at the column mean: v1 below, v2 at or above."""

    column: str
    threshold: float

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(values, dtype=float) < self.threshold, "v1", "v2")


@dataclass
class TransformRules:
    """Frozen per-column transforms: numeric thresholds and category states."""

    means: dict[str, float] = field(default_factory=dict)
    states: dict[str, tuple[str, ...]] = field(default_factory=dict)


def load_kdd(path: str, on_bad: str = "abort") -> RawTable:
    """Parse a KDD-format connection file (41 features + trailing label).

    Labels lose their trailing dot. on_bad is 'abort' (raise DataError with
    the line number) or 'skip' (log and drop the row). Numeric columns are
    converted in bulk; rows that fail are located individually so errors
    still name their line.
    """
    if on_bad not in ("abort", "skip"):
        raise ValueError("on_bad must be 'abort' or 'skip'")
    names = [n for n, _ in KDD_FEATURES] + [LABEL_COLUMN]
    kinds = [k for _, k in KDD_FEATURES] + [CATEGORICAL]
    expected = len(names)

    raw_rows: list[list[str]] = []
    linenos: list[int] = []
    skipped = 0
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or (len(rec) == 1 and not rec[0].strip()):
                continue
            if len(rec) != expected:
                message = f"expected {expected} fields, got {len(rec)}"
                if on_bad == "abort":
                    raise DataError(f"{path}:{lineno}: {message}")
                skipped += 1
                log.warning("%s:%d: skipped row (%s)", path, lineno, message)
                continue
            raw_rows.append(rec)
            linenos.append(lineno)

    bad_rows: dict[int, str] = {}  # row index -> reason
    columns: list[np.ndarray | None] = [None] * expected
    transposed = list(zip(*raw_rows)) if raw_rows else [()] * expected
    for i, (name, kind) in enumerate(zip(names, kinds)):
        cells = transposed[i]
        if kind != NUMERIC:
            if name == LABEL_COLUMN:
                cells = [c.strip().rstrip(".") for c in cells]
            else:
                cells = [c.strip() for c in cells]
            columns[i] = np.array(cells, dtype=object)
            continue
        try:
            arr = np.asarray(cells, dtype=float)
        except ValueError:
            arr = np.empty(len(cells))
            for r, cell in enumerate(cells):
                try:
                    arr[r] = float(cell)
                except ValueError:
                    arr[r] = np.nan
                    bad_rows.setdefault(
                        r, f"non-numeric value {cell.strip()!r} in column {name}")
        finite = np.isfinite(arr)
        if not finite.all():
            for r in np.flatnonzero(~finite):
                bad_rows.setdefault(
                    r, f"non-finite value {cells[r].strip()!r} in column {name}")
        columns[i] = arr

    if bad_rows:
        first = min(bad_rows)
        if on_bad == "abort":
            raise DataError(f"{path}:{linenos[first]}: {bad_rows[first]}")
        for r in sorted(bad_rows):
            log.warning("%s:%d: skipped row (%s)", path, linenos[r], bad_rows[r])
        skipped += len(bad_rows)
        keep = np.ones(len(raw_rows), dtype=bool)
        keep[list(bad_rows)] = False
        columns = [c[keep] for c in columns]

    if skipped:
        log.warning("%s: skipped %d malformed rows", path, skipped)
    return RawTable(tuple(names), tuple(kinds), tuple(columns))


def parse_connection_fields(rec: Sequence[str], with_label: bool) -> list:
    """One typed connection row; raises DataError on arity/parse problems."""
    expected = len(KDD_FEATURES) + (1 if with_label else 0)
    if len(rec) != expected:
        raise DataError(f"expected {expected} fields, got {len(rec)}")
    row: list = []
    for (name, kind), cell in zip(KDD_FEATURES, rec):
        cell = cell.strip()
        if kind == NUMERIC:
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"non-numeric value {cell!r} in column {name}") from None
            if not math.isfinite(value):
                raise DataError(f"non-finite value {cell!r} in column {name}")
            row.append(value)
        else:
            row.append(cell)
    if with_label:
        row.append(rec[-1].strip().rstrip("."))
    return row


def apply_label_granularity(table: RawTable, granularity: str,
                            class_column: str = LABEL_COLUMN) -> RawTable:
    """Map specific attack labels to their 5-way category, or keep them as is."""
    if granularity == "attack":
        return table
    if granularity != "category":
        raise ValueError("granularity must be 'category' or 'attack'")
    idx = table.names.index(class_column)
    mapped = np.array(
        [_CATEGORY_OF.get(v, v) for v in table.columns[idx]], dtype=object
    )
    columns = tuple(mapped if i == idx else c for i, c in enumerate(table.columns))
    return RawTable(table.names, table.kinds, columns)


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def gini_rank(table: RawTable, class_column: str) -> FeatureRanking:
    """Rank features by Gini impurity gain of the class under their split.

    gain(F) = Gini(class) - sum_v (n_v / n) * Gini(class | F = v), values are
    grouped by exact equality for both categorical and numeric columns.
    """
    if class_column not in table.names:
        raise ValueError(f"no column named {class_column!r}")
    labels = table.column(class_column)
    _, class_codes = np.unique(labels.astype(str), return_inverse=True)
    n_classes = int(class_codes.max()) + 1 if len(class_codes) else 0
    base = _gini(np.bincount(class_codes, minlength=n_classes))
    if base == 0.0:
        log.warning("class column %s is constant; all gains are 0", class_column)

    gains = []
    for pos, name in enumerate(table.names):
        if name == class_column:
            continue
        col = table.columns[pos]
        key = col if table.kinds[pos] == NUMERIC else col.astype(str)
        values, codes = np.unique(key, return_inverse=True)
        joint = np.zeros((len(values), n_classes), dtype=np.int64)
        np.add.at(joint, (codes, class_codes), 1)
        n = len(codes)
        weighted = sum(
            (row.sum() / n) * _gini(row) for row in joint if row.sum()
        )
        gains.append((name, pos, max(0.0, base - weighted)))

    gains.sort(key=lambda t: (-t[2], t[1]))  # ties keep table order
    return FeatureRanking(class_column, tuple((n, g) for n, _, g in gains))


def mean_discretize(values: Sequence[float], column: str = "") -> tuple[DiscretizationRule, np.ndarray]:
    """Binary split at the arithmetic mean; values at the mean go to v2."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot discretize an empty column")
    lo, hi = float(arr.min()), float(arr.max())
    threshold = lo if lo == hi else float(arr.mean())
    if lo == hi:
        log.warning("column %s is constant; every value lands in bin v2", column or "?")
    rule = DiscretizationRule(column, threshold)
    return rule, rule.apply(arr)


def select_features(ranking: FeatureRanking, k: int) -> list[str]:
    """Top-k ranked features plus the class column (always last)."""
    if k > len(ranking.entries):
        raise ValueError(f"k={k} exceeds the {len(ranking.entries)} ranked features")
    return [name for name, _ in ranking.entries[:k]] + [ranking.class_column]


def build_rules(table: RawTable, selected: Sequence[str]) -> TransformRules:
    """Freeze thresholds and category state lists from training data."""
    rules = TransformRules()
    for name in selected:
        if table.kind(name) == NUMERIC:
            rule, _ = mean_discretize(table.column(name), name)
            rules.means[name] = rule.threshold
        else:
            observed = sorted(set(str(v) for v in table.column(name)))
            rules.states[name] = tuple(observed)
    return rules


def to_discrete_dataset(table: RawTable, rules: TransformRules,
                        selected: Sequence[str]) -> DiscreteDataset:
    """Index-encode the selected columns under frozen rules.

    Numeric columns become binary (v1, v2). Categorical values unseen at
    rule-building time map to a reserved state appended to that variable.
    """
    variables: list[Variable] = []
    code_columns: list[np.ndarray] = []
    for out_id, name in enumerate(selected):
        kind = table.kind(name)
        col = table.column(name)
        if kind == NUMERIC:
            if name not in rules.means:
                raise ValueError(f"no discretization rule for numeric column {name!r}")
            codes = (np.asarray(col, dtype=float) >= rules.means[name]).astype(np.int64)
            states: tuple[str, ...] = ("v1", "v2")
        else:
            if name not in rules.states:
                raise ValueError(f"no state map for categorical column {name!r}")
            states = rules.states[name]
            lookup = {s: i for i, s in enumerate(states)}
            unknown = len(states)
            codes = np.fromiter(
                (lookup.get(str(v), unknown) for v in col), dtype=np.int64, count=len(col)
            )
            if np.any(codes == unknown):
                states = states + (UNKNOWN_STATE,)
        variables.append(Variable(out_id, name, states))
        code_columns.append(codes)
    rows = (np.stack(code_columns, axis=1) if code_columns
            else np.zeros((0, 0), dtype=np.int64))
    return DiscreteDataset(tuple(variables), rows)


def save_rules(rules: TransformRules, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_rules(rules))


def format_rules(rules: TransformRules) -> str:
    lines = [f"{col} mean={repr(m)}" for col, m in sorted(rules.means.items())]
    lines += [f"{col} states={','.join(states)}"
              for col, states in sorted(rules.states.items())]
    return "\n".join(lines) + "\n"


def parse_rules(text: str) -> TransformRules:
    rules = TransformRules()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            col, rule = line.split(None, 1)
            key, value = rule.split("=", 1)
        except ValueError:
            raise DataError(f"rules line {lineno}: cannot parse {line!r}") from None
        if key == "mean":
            rules.means[col] = float(value)
        elif key == "states":
            rules.states[col] = tuple(value.split(","))
        else:
            raise DataError(f"rules line {lineno}: unknown rule kind {key!r}")
    return rules


def load_rules(path: str) -> TransformRules:
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read())
