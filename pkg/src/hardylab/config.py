"""YAML experiment configuration: parsing and field-level validation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigInvalid
from .halfspace import critical_mu
from .studies import STUDIES, study_defaults

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema_version", "seed", "workers", "output", "studies"}


@dataclass
class StudyConfig:
    id: str
    params: dict


@dataclass
class RunConfig:
    seed: int = 0
    workers: int = 1
    output: str = "hardylab-out"
    studies: list = field(default_factory=list)
    raw: dict = field(default_factory=dict)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _geometric(seq) -> bool:
    if len(seq) < 2:
        return True
    ratios = [b / a for a, b in zip(seq, seq[1:])]
    return all(abs(r - ratios[0]) <= 1e-9 * abs(ratios[0]) for r in ratios)


def _check_study(i: int, entry, errors: dict) -> StudyConfig | None:
    where = f"studies[{i}]"
    if isinstance(entry, str):
        entry = {"id": entry}
    if not isinstance(entry, dict) or "id" not in entry:
        errors[where] = "expected a study name or a mapping with an 'id' key"
        return None
    sid = entry["id"]
    if sid not in STUDIES:
        errors[f"{where}.id"] = f"unknown study {sid!r}; see 'hardylab list'"
        return None
    params = study_defaults(sid)
    for key, val in entry.items():
        if key == "id":
            continue
        loc = f"{where}.{key}"
        if key not in params:
            errors[loc] = f"unknown parameter for {sid}"
            continue
        if key == "tolerances":
            if not isinstance(val, dict):
                errors[loc] = "expected a mapping"
                continue
            for tk, tv in val.items():
                if tk not in params["tolerances"]:
                    errors[f"{loc}.{tk}"] = "unknown tolerance"
                elif not _is_num(tv) or tv <= 0:
                    errors[f"{loc}.{tk}"] = "tolerances must be positive numbers"
                else:
                    params["tolerances"][tk] = float(tv)
            continue
        default = params[key]
        if isinstance(default, list) or key == "window":
            if val is None and key == "window":
                params[key] = None
                continue
            if not isinstance(val, list) or not all(_is_num(v) for v in val):
                errors[loc] = "expected a list of numbers"
                continue
            val = [float(v) for v in val]
        elif isinstance(default, bool):
            if not isinstance(val, bool):
                errors[loc] = "expected true/false"
                continue
        elif isinstance(default, int):
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                errors[loc] = "expected a positive integer"
                continue
        elif isinstance(default, float):
            if not _is_num(val):
                errors[loc] = "expected a number"
                continue
            val = float(val)
        params[key] = val
    _semantic_checks(where, params, errors)
    return StudyConfig(sid, params)


def _semantic_checks(where, p, errors):
    if p["N"] not in (2, 3):
        errors[f"{where}.N"] = "only N = 2 and N = 3 are supported"
    if p["c"] <= 0:
        errors[f"{where}.c"] = "tangent ball radius must be positive"
    if p["q"] < 1:
        errors[f"{where}.q"] = "grading exponent must be >= 1"
    if "mu" in p and isinstance(p["mu"], list) and p["N"] in (2, 3):
        bad = [m for m in p["mu"] if m < critical_mu(int(p["N"]))]
        if bad:
            errors[f"{where}.mu"] = f"values below the critical constant {critical_mu(int(p['N']))}: {bad}"
    lv = p.get("levels")
    if isinstance(lv, list):
        if not lv or any(h <= 0 for h in lv) or any(b >= a for a, b in zip(lv, lv[1:])):
            errors[f"{where}.levels"] = "mesh levels must be positive and strictly decreasing"
    for key in ("eps", "widths"):
        s = p.get(key)
        if isinstance(s, list):
            if any(b >= a for a, b in zip(s, s[1:])) or any(v <= 0 for v in s):
                errors[f"{where}.{key}"] = "schedule must be positive and strictly decreasing"
            elif not _geometric(s):
                errors[f"{where}.{key}"] = "schedule must be geometric"
    w = p.get("window")
    if isinstance(w, list) and not (len(w) == 2 and 0 < w[0] < w[1]):
        errors[f"{where}.window"] = "window must be [r_min, r_max] with 0 < r_min < r_max"


def parse_config(data) -> RunConfig:
    errors: dict = {}
    if not isinstance(data, dict):
        raise ConfigInvalid("configuration must be a mapping", {"<root>": "expected a mapping"})
    for k in data:
        if k not in _TOP_KEYS:
            errors[k] = "unknown top-level key"
    if data.get("schema_version") != SCHEMA_VERSION:
        errors["schema_version"] = f"required and must equal {SCHEMA_VERSION}"
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        errors["seed"] = "expected a non-negative integer"
    workers = data.get("workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        errors["workers"] = "expected a positive integer"
    output = data.get("output", "hardylab-out")
    if not isinstance(output, str):
        errors["output"] = "expected a path string"
    studies = data.get("studies", [])
    if studies is None:
        studies = []
    if not isinstance(studies, list):
        errors["studies"] = "expected a list"
        studies = []
    parsed = [s for s in (_check_study(i, e, errors) for i, e in enumerate(studies)) if s is not None]
    if errors:
        raise ConfigInvalid("invalid configuration", errors)
    return RunConfig(seed, workers, output, parsed, data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigInvalid("configuration file not found", {"<file>": str(path)}) from None
    except yaml.YAMLError as e:
        raise ConfigInvalid("configuration is not valid YAML", {"<file>": str(e)}) from None
    return parse_config(data)
