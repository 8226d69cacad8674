"""Versioned text persistence for networks and the models that wrap them.

Layout:
    HIDPAS-BN v1
    VARIABLES            one `<id> <name> <state,...>` line per variable
    EDGES                one `<parent_id> -> <child_id>` line per edge
    CPT <var_id>         one `(cfg) : p0 p1 ...` line per parent config

Model wrappers append their own sections (DETECTOR/RULES, CLASSIFIER, PLAN)
after the network. `#` starts a comment; files are UTF-8.
"""

from __future__ import annotations

import datetime as _dt
from itertools import product

import numpy as np

from .core import BayesNet, Cpt, Dag, Variable
from .features import DataError, format_rules, parse_rules

FORMAT_HEADER = "HIDPAS-BN v1"


def _check_token(kind: str, value: str) -> str:
    if not value or any(ch.isspace() for ch in value) or "," in value:
        raise ValueError(f"{kind} {value!r} must be nonempty without spaces or commas")
    return value


def format_network(net: BayesNet, timestamp: bool = True) -> str:
    lines = [FORMAT_HEADER]
    if timestamp:
        lines.append(f"# generated {_dt.datetime.now().isoformat(timespec='seconds')}")
    lines.append("VARIABLES")
    for var in net.dag.variables:
        _check_token("variable name", var.name)
        states = ",".join(_check_token("state label", s) for s in var.states)
        lines.append(f"{var.id} {var.name} {states}")
    lines.append("EDGES")
    for child, parents in enumerate(net.dag.parents):
        for p in parents:
            lines.append(f"{p} -> {child}")
    for var in net.dag.variables:
        cpt = net.cpts[var.id]
        lines.append(f"CPT {var.id}")
        configs = product(*(range(net.dag.arity(p)) for p in cpt.parents))
        for j, cfg in enumerate(configs):
            cfg_txt = "(" + ",".join(str(c) for c in cfg) + ")"
            row = " ".join(f"{p:.12g}" for p in cpt.table[j])
            lines.append(f"{cfg_txt} : {row}")
    return "\n".join(lines) + "\n"


def save_network(net: BayesNet, path: str, timestamp: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_network(net, timestamp))


def _read_sections(text: str, path: str) -> list[tuple[str, list[str]]]:
    """Split into (section header, body lines); comments and blanks dropped."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise DataError(f"{path}: missing '{FORMAT_HEADER}' header")
    sections: list[tuple[str, list[str]]] = []
    for ln in lines[1:]:
        head = ln.split()
        if head and head[0] in ("VARIABLES", "EDGES", "CPT", "DETECTOR",
                                "RULES", "CLASSIFIER", "PLAN"):
            sections.append((ln, []))
        elif not sections:
            raise DataError(f"{path}: content before first section: {ln!r}")
        else:
            sections[-1][1].append(ln)
    return sections


def parse_network(text: str, path: str = "<string>") -> tuple[BayesNet, dict[str, list[str]]]:
    """Parse the network sections; returns the net plus any extra sections."""
    sections = _read_sections(text, path)
    variables: list[Variable] = []
    parent_lists: dict[int, list[int]] = {}
    cpt_rows: dict[int, list[list[float]]] = {}
    extras: dict[str, list[str]] = {}

    for header, body in sections:
        parts = header.split()
        if parts[0] == "VARIABLES":
            for ln in body:
                try:
                    vid_s, name, states_s = ln.split(None, 2)
                    variables.append(Variable(int(vid_s), name,
                                              tuple(states_s.split(","))))
                except ValueError:
                    raise DataError(f"{path}: bad variable line {ln!r}") from None
        elif parts[0] == "EDGES":
            for ln in body:
                try:
                    p_s, arrow, c_s = ln.split()
                    if arrow != "->":
                        raise ValueError
                except ValueError:
                    raise DataError(f"{path}: bad edge line {ln!r}") from None
                parent_lists.setdefault(int(c_s), []).append(int(p_s))
        elif parts[0] == "CPT":
            if len(parts) != 2:
                raise DataError(f"{path}: bad CPT header {header!r}")
            vid = int(parts[1])
            rows = []
            for ln in body:
                try:
                    _, values = ln.split(":", 1)
                    rows.append([float(x) for x in values.split()])
                except ValueError:
                    raise DataError(f"{path}: bad CPT line {ln!r}") from None
            cpt_rows[vid] = rows
        else:
            extras[parts[0]] = body

    variables.sort(key=lambda v: v.id)
    if [v.id for v in variables] != list(range(len(variables))):
        raise DataError(f"{path}: variable ids must be 0..n-1 without gaps")
    parents = tuple(tuple(parent_lists.get(i, [])) for i in range(len(variables)))
    dag = Dag(tuple(variables), parents)
    cpts = []
    for var in variables:
        if var.id not in cpt_rows:
            raise DataError(f"{path}: no CPT section for variable {var.id}")
        table = np.asarray(cpt_rows[var.id], dtype=float)
        if table.ndim != 2:
            raise DataError(f"{path}: ragged CPT for variable {var.id}")
        cpts.append(Cpt(var.id, parents[var.id], table))
    return BayesNet(dag, tuple(cpts)), extras


def load_network(path: str) -> BayesNet:
    net, _ = parse_network(_read_file(path), path)
    return net


def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except FileNotFoundError:
        raise DataError(f"model file not found: {path}") from None


def _parse_kv(body: list[str], path: str) -> dict[str, str]:
    out = {}
    for ln in body:
        try:
            key, value = ln.split(None, 1)
        except ValueError:
            raise DataError(f"{path}: bad key-value line {ln!r}") from None
        out[key] = value
    return out


# -- detector ---------------------------------------------------------------

def format_detector(model, timestamp: bool = True) -> str:
    text = format_network(model.net, timestamp)
    meta = [
        "DETECTOR",
        f"class_var {model.class_var}",
        f"tau {model.tau!r}",
        f"features {','.join(model.features)}",
        "RULES",
        format_rules(model.rules).rstrip("\n"),
    ]
    return text + "\n".join(meta) + "\n"


def save_detector(model, path: str, timestamp: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_detector(model, timestamp))


def load_detector(path: str):
    from .detection import DetectorModel

    net, extras = parse_network(_read_file(path), path)
    if "DETECTOR" not in extras:
        raise DataError(f"{path}: not a detector model (no DETECTOR section)")
    meta = _parse_kv(extras["DETECTOR"], path)
    rules = parse_rules("\n".join(extras.get("RULES", [])))
    return DetectorModel(
        features=tuple(meta["features"].split(",")),
        rules=rules,
        net=net,
        class_var=int(meta["class_var"]),
        tau=float(meta["tau"]),
    )


# -- alert classifier ---------------------------------------------------------

def format_classifier(model, timestamp: bool = True) -> str:
    text = format_network(model.net, timestamp)
    meta = ["CLASSIFIER", f"class_var {model.class_var}", f"tau {model.tau!r}"]
    return text + "\n".join(meta) + "\n"


def save_classifier(model, path: str, timestamp: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_classifier(model, timestamp))


def load_classifier(path: str):
    from .prediction import AlertClassifierModel

    net, extras = parse_network(_read_file(path), path)
    if "CLASSIFIER" not in extras:
        raise DataError(f"{path}: not an alert classifier (no CLASSIFIER section)")
    meta = _parse_kv(extras["CLASSIFIER"], path)
    return AlertClassifierModel(net=net, class_var=int(meta["class_var"]),
                                tau=float(meta["tau"]))


# -- plan model ---------------------------------------------------------------

def format_plan(model, timestamp: bool = True) -> str:
    text = format_network(model.net, timestamp)
    meta = ["PLAN", f"tau {model.tau!r}"]
    for vid, name in enumerate(model.hyper_names):
        meta.append(f"hyper {vid} {name}")
    return text + "\n".join(meta) + "\n"


def save_plan(model, path: str, timestamp: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_plan(model, timestamp))


def load_plan(path: str):
    from .prediction import PlanModel

    net, extras = parse_network(_read_file(path), path)
    if "PLAN" not in extras:
        raise DataError(f"{path}: not a plan model (no PLAN section)")
    tau = 0.5
    names: dict[int, str] = {}
    for ln in extras["PLAN"]:
        parts = ln.split()
        if parts[0] == "tau":
            tau = float(parts[1])
        elif parts[0] == "hyper" and len(parts) == 3:
            names[int(parts[1])] = parts[2]
        else:
            raise DataError(f"{path}: bad PLAN line {ln!r}")
    if sorted(names) != list(range(len(names))):
        raise DataError(f"{path}: hyper-alert ids must be 0..n-1 without gaps")
    hyper_names = tuple(names[i] for i in range(len(names)))
    return PlanModel(net=net, hyper_names=hyper_names, tau=tau)
