"""Synthetic (features, label, explanation) data from declarative rules.

A config lists features with their samplers and an ordered list of rules.
Each sampled row gets the label and id of the first rule whose predicate
holds, or the defaults when none does.  Config files are JSON::

    {
      "features": [
        {"name": "Rating", "sampler": {"type": "uniform-int", "low": 1, "high": 5}},
        {"name": "Tenure", "depends_on": "Position",
         "cases": {"Executive": {"type": "uniform-int", "low": 5, "high": 25}},
         "sampler": {"type": "uniform-int", "low": 0, "high": 25}}
      ],
      "rules": [{"id": 1, "when": "Rating <= 2 and Tenure < 3", "label": 1}],
      "default_label": 0,
      "default_explanation_id": 0
    }

Samplers: ``categorical`` (values, probs), ``uniform-int`` (low, high,
inclusive), ``uniform-real`` (low, high, optional grid ``step``) and
``normal`` (mean, std, optional ``clip`` [lo, hi] and ``step``).  A feature
with ``depends_on`` picks its sampler from ``cases`` keyed by the earlier
feature's value, falling back to ``sampler``.

Predicates are Python-style expressions restricted to comparisons, ``in``,
``and``/``or``/``not``, literals and feature names (spaces in a name are
written as underscores).
"""

from __future__ import annotations

import ast
import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

CATEGORICAL = "categorical"
UNIFORM_INT = "uniform-int"
UNIFORM_REAL = "uniform-real"
NORMAL = "normal"

_DECIMALS = 10


class ConfigError(ValueError):
    """Invalid generator configuration."""


def identifier(name: str) -> str:
    """Name used for a feature inside rule predicates."""
    return name.replace(" ", "_")


_ALLOWED = (ast.Expression, ast.BoolOp, ast.And, ast.Or, ast.UnaryOp, ast.Not, ast.USub,
            ast.UAdd, ast.Compare, ast.Eq, ast.NotEq, ast.Lt, ast.LtE, ast.Gt, ast.GtE, ast.In,
            ast.NotIn, ast.Name, ast.Load, ast.Constant, ast.Tuple, ast.List)


@dataclass(frozen=True)
class Predicate:
    source: str
    code: object = field(repr=False, compare=False)
    names: frozenset = frozenset()

    @classmethod
    def parse(cls, source: str, known: Sequence[str]) -> "Predicate":
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as e:
            raise ConfigError(f"cannot parse predicate {source!r}: {e.msg}") from None
        names = set()
        for node in ast.walk(tree):
            if not isinstance(node, _ALLOWED):
                raise ConfigError(f"predicate {source!r} uses unsupported syntax "
                                  f"({type(node).__name__})")
            if isinstance(node, ast.Name):
                if node.id in ("True", "False"):
                    continue
                if node.id not in known:
                    raise ConfigError(f"predicate {source!r} references unknown feature {node.id!r}")
                names.add(node.id)
            if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float, str, bool)):
                raise ConfigError(f"predicate {source!r} has an unsupported constant")
        return cls(source, compile(tree, "<predicate>", "eval"), frozenset(names))

    def __call__(self, env: Mapping[str, object]) -> bool:
        return bool(eval(self.code, {"__builtins__": {}}, env))  # syntax whitelisted in parse


@dataclass(frozen=True)
class Sampler:
    spec: dict

    def __post_init__(self):
        s = self.spec
        kind = s.get("type")
        if kind == CATEGORICAL:
            values, probs = s.get("values"), s.get("probs")
            if not values:
                raise ConfigError("categorical sampler needs values")
            if probs is None:
                probs = [1.0 / len(values)] * len(values)
            if len(probs) != len(values) or any(p < 0 for p in probs):
                raise ConfigError("categorical probabilities must be nonnegative, one per value")
            if abs(math.fsum(probs) - 1.0) > 1e-9:
                raise ConfigError(f"categorical probabilities sum to {math.fsum(probs)}, not 1")
            if len(set(map(str, values))) != len(values):
                raise ConfigError("duplicate categorical values")
        elif kind == UNIFORM_INT:
            if int(s["low"]) != s["low"] or int(s["high"]) != s["high"] or s["low"] > s["high"]:
                raise ConfigError("uniform-int needs integer low <= high")
        elif kind == UNIFORM_REAL:
            if not s["low"] <= s["high"]:
                raise ConfigError("uniform-real needs low <= high")
            if "step" in s and not s["step"] > 0:
                raise ConfigError("grid step must be positive")
        elif kind == NORMAL:
            if not s["std"] > 0:
                raise ConfigError("normal sampler needs std > 0")
            if "clip" in s and not s["clip"][0] <= s["clip"][1]:
                raise ConfigError("normal clip needs lo <= hi")
            if "step" in s and not s["step"] > 0:
                raise ConfigError("grid step must be positive")
        else:
            raise ConfigError(f"unknown sampler type {kind!r}")

    @property
    def kind(self) -> str:
        return self.spec["type"]

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def sample(self, rng: np.random.Generator):
        s = self.spec
        if self.kind == CATEGORICAL:
            probs = s.get("probs") or [1.0 / len(s["values"])] * len(s["values"])
            return s["values"][int(rng.choice(len(s["values"]), p=probs))]
        if self.kind == UNIFORM_INT:
            return int(rng.integers(int(s["low"]), int(s["high"]) + 1))
        if self.kind == UNIFORM_REAL:
            if "step" in s:
                k = int(rng.integers(0, self._grid_count(s["low"], s["high"], s["step"])))
                return round(s["low"] + k * s["step"], _DECIMALS)
            return float(rng.uniform(s["low"], s["high"]))
        v = float(rng.normal(s["mean"], s["std"]))
        lo, hi = s.get("clip", (-math.inf, math.inf))
        v = min(max(v, lo), hi)
        if "step" in s:
            origin = lo if math.isfinite(lo) else 0.0
            k = round((v - origin) / s["step"])
            v = origin + k * s["step"]
            if v > hi:
                v -= s["step"]
            if v < lo:
                v += s["step"]
            v = round(v, _DECIMALS)
        return v

    @staticmethod
    def _grid_count(lo, hi, step) -> int:
        return int(math.floor((hi - lo) / step + 1e-9)) + 1

    def cardinality(self) -> float:
        """Number of distinct values the sampler can emit (inf if continuous)."""
        s = self.spec
        if self.kind == CATEGORICAL:
            return len(s["values"])
        if self.kind == UNIFORM_INT:
            return int(s["high"]) - int(s["low"]) + 1
        if "step" not in s:
            return math.inf
        if self.kind == UNIFORM_REAL:
            return self._grid_count(s["low"], s["high"], s["step"])
        lo, hi = s.get("clip", (-math.inf, math.inf))
        if not (math.isfinite(lo) and math.isfinite(hi)):
            return math.inf
        return self._grid_count(lo, hi, s["step"])

    def accepts(self, value) -> bool:
        if self.is_categorical:
            return str(value) in {str(v) for v in self.spec["values"]}
        return isinstance(value, (int, float, np.integer, np.floating)) and not isinstance(value, bool)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    sampler: Sampler
    depends_on: str | None = None
    cases: tuple[tuple[str, Sampler], ...] = ()

    def samplers(self) -> list[Sampler]:
        return [self.sampler] + [s for _, s in self.cases]

    def pick(self, row: Mapping[str, object]) -> Sampler:
        if self.depends_on is None:
            return self.sampler
        key = str(row[self.depends_on])
        for value, s in self.cases:
            if value == key:
                return s
        return self.sampler

    def cardinality(self) -> float:
        # conservative: the largest single sampler domain
        return max(s.cardinality() for s in self.samplers())

    def to_json(self) -> dict:
        out = {"name": self.name, "sampler": self.sampler.spec}
        if self.depends_on is not None:
            out["depends_on"] = self.depends_on
            out["cases"] = {k: s.spec for k, s in self.cases}
        return out


@dataclass(frozen=True)
class Rule:
    id: int
    predicate: Predicate
    label: int
    note: str = ""

    def to_json(self) -> dict:
        out = {"id": self.id, "when": self.predicate.source, "label": self.label}
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class TedConfig:
    features: tuple[FeatureSpec, ...]
    rules: tuple[Rule, ...]
    default_label: int = 0
    default_explanation_id: int = 0
    description: str = ""

    def __post_init__(self):
        names = [f.name for f in self.features]
        if not names:
            raise ConfigError("config needs at least one feature")
        if len(set(map(identifier, names))) != len(names):
            raise ConfigError("feature names must be unique (after replacing spaces)")
        ids = [r.id for r in self.rules]
        if len(set(ids)) != len(ids):
            raise ConfigError("rule ids must be unique")
        if self.default_explanation_id in ids:
            raise ConfigError("default explanation id collides with a rule id")
        for lab in [self.default_label] + [r.label for r in self.rules]:
            if lab not in (0, 1):
                raise ConfigError("labels must be 0 or 1")
        seen = set()
        for f in self.features:
            if f.depends_on is not None and f.depends_on not in seen:
                raise ConfigError(f"feature {f.name!r} depends on {f.depends_on!r}, "
                                  "which is not an earlier feature")
            seen.add(f.name)

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def cardinality(self) -> float:
        """Size of the declared feature space (product of per-feature domains)."""
        return math.prod(f.cardinality() for f in self.features)

    def to_json(self) -> dict:
        return {
            "description": self.description,
            "features": [f.to_json() for f in self.features],
            "rules": [r.to_json() for r in self.rules],
            "default_label": self.default_label,
            "default_explanation_id": self.default_explanation_id,
        }

    def fingerprint(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    @classmethod
    def from_json(cls, obj: Mapping) -> "TedConfig":
        try:
            features = []
            for f in obj["features"]:
                cases = tuple((str(k), Sampler(dict(v))) for k, v in f.get("cases", {}).items())
                features.append(FeatureSpec(f["name"], Sampler(dict(f["sampler"])),
                                            f.get("depends_on"), cases))
            known = [identifier(f.name) for f in features]
            rules = tuple(Rule(int(r["id"]), Predicate.parse(r["when"], known), int(r["label"]),
                               r.get("note", "")) for r in obj["rules"])
            return cls(tuple(features), rules, int(obj.get("default_label", 0)),
                       int(obj.get("default_explanation_id", 0)), obj.get("description", ""))
        except (KeyError, TypeError) as e:
            raise ConfigError(f"malformed config: {e!r}") from None


def load_config(path) -> TedConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return TedConfig.from_json(obj)


def _env(cfg: TedConfig, x) -> dict:
    if isinstance(x, Mapping):
        missing = [f.name for f in cfg.features if f.name not in x]
        if missing or len(x) != len(cfg.features):
            raise ConfigError(f"feature vector does not match the schema (missing {missing})")
        values = [x[f.name] for f in cfg.features]
    else:
        values = list(x)
        if len(values) != len(cfg.features):
            raise ConfigError(f"expected {len(cfg.features)} features, got {len(values)}")
    row = {}
    for f, v in zip(cfg.features, values):
        if not any(s.accepts(v) for s in f.samplers()):
            raise ConfigError(f"value {v!r} is outside the schema of feature {f.name!r}")
        row[identifier(f.name)] = v
    return row


def apply_rules(cfg: TedConfig, x) -> tuple[int, int]:
    """``(label, explanation id)`` of the first matching rule, else the defaults."""
    env = _env(cfg, x)
    for r in cfg.rules:
        if r.predicate(env):
            return r.label, r.id
    return cfg.default_label, cfg.default_explanation_id


def sample_row(cfg: TedConfig, rng: np.random.Generator) -> list:
    row: dict[str, object] = {}
    for f in cfg.features:
        row[f.name] = f.pick(row).sample(rng)
    return [row[f.name] for f in cfg.features]


@dataclass(frozen=True)
class TedDataset:
    feature_names: tuple[str, ...]
    rows: tuple[tuple, ...]
    Y: np.ndarray
    E: np.ndarray
    seed: int
    fingerprint: str

    @property
    def n(self) -> int:
        return len(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.feature_names) + ["Y", "E"])
        for row, y, e in zip(self.rows, self.Y, self.E):
            w.writerow([repr(v) if isinstance(v, float) else v for v in row] + [int(y), int(e)])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    def digest(self) -> str:
        return hashlib.sha256(self.to_csv().encode("utf-8")).hexdigest()


def generate(cfg: TedConfig, n: int, seed: int) -> TedDataset:
    """Sample ``n`` rows; row ``r`` draws from its own stream ``(seed, r)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    rows, Y, E = [], np.empty(n, dtype=np.int8), np.empty(n, dtype=np.int64)
    for r in range(n):
        row = sample_row(cfg, np.random.default_rng([seed, r]))
        Y[r], E[r] = apply_rules(cfg, row)
        rows.append(tuple(row))
    return TedDataset(tuple(cfg.feature_names), tuple(rows), Y, E, seed, cfg.fingerprint())


_RETENTION = {
    "description": (
        "Illustrative employee-retention config. Label 1 means the employee is "
        "likely to leave. Thresholds and organization-specific variations are "
        "invented for demonstration and do not reproduce any published rule set."
    ),
    "features": [
        {"name": "Position", "sampler": {
            "type": "categorical",
            "values": ["Associate", "Analyst", "Manager", "Senior Manager", "Director", "Executive"],
            "probs": [0.3, 0.25, 0.2, 0.12, 0.09, 0.04]}},
        {"name": "Organization", "sampler": {
            "type": "categorical",
            "values": ["Engineering", "Sales", "Finance", "HR", "Operations", "Marketing",
                       "Legal", "Research"],
            "probs": [0.2, 0.18, 0.12, 0.08, 0.15, 0.1, 0.05, 0.12]}},
        {"name": "Potential", "sampler": {
            "type": "categorical", "values": ["Low", "Medium", "High"], "probs": [0.25, 0.5, 0.25]}},
        {"name": "Rating", "sampler": {"type": "uniform-int", "low": 1, "high": 5}},
        {"name": "Rating Slope", "sampler": {"type": "uniform-real", "low": -2.0, "high": 2.0,
                                             "step": 0.5}},
        {"name": "Salary Competitiveness", "sampler": {
            "type": "normal", "mean": 1.0, "std": 0.15, "clip": [0.6, 1.4], "step": 0.01}},
        {"name": "Tenure Duration", "depends_on": "Position",
         "sampler": {"type": "uniform-int", "low": 0, "high": 20},
         "cases": {
             "Associate": {"type": "uniform-int", "low": 0, "high": 8},
             "Director": {"type": "uniform-int", "low": 4, "high": 25},
             "Executive": {"type": "uniform-int", "low": 6, "high": 30}}},
        {"name": "Position Duration", "sampler": {"type": "uniform-int", "low": 0, "high": 15}},
    ],
    "rules": [
        {"id": 1, "label": 1, "note": "strong performer stuck without promotion",
         "when": "Position_Duration >= 6 and Rating >= 4 and Potential == 'High'"},
        {"id": 2, "label": 1, "note": "severely underpaid",
         "when": "Salary_Competitiveness < 0.8"},
        {"id": 3, "label": 1, "note": "sales staff are pay sensitive",
         "when": "Organization == 'Sales' and Salary_Competitiveness < 0.95"},
        {"id": 4, "label": 1, "note": "engineers waiting for promotion",
         "when": "Organization == 'Engineering' and Position_Duration >= 4 and Rating >= 4"},
        {"id": 5, "label": 1, "note": "lowest rating",
         "when": "Rating <= 1"},
        {"id": 6, "label": 1, "note": "sharp performance decline",
         "when": "Rating_Slope <= -1.5"},
        {"id": 7, "label": 1, "note": "high potential but underpaid",
         "when": "Potential == 'High' and Salary_Competitiveness < 0.9"},
        {"id": 8, "label": 1, "note": "poor fit shortly after hiring",
         "when": "Tenure_Duration <= 1 and Rating <= 2"},
        {"id": 9, "label": 1, "note": "entry level without promotion",
         "when": "Position == 'Associate' and Position_Duration >= 4"},
        {"id": 10, "label": 0, "note": "well compensated executive",
         "when": "Position == 'Executive' and Salary_Competitiveness >= 0.9"},
        {"id": 11, "label": 0, "note": "engaged researcher",
         "when": "Organization == 'Research' and Potential == 'High' and Rating_Slope >= 0.5"},
        {"id": 12, "label": 0, "note": "long-tenured loyalty",
         "when": "Tenure_Duration >= 20"},
        {"id": 13, "label": 1, "note": "operations decline with below-market pay",
         "when": "Organization == 'Operations' and Rating_Slope < 0 and Salary_Competitiveness < 1.0"},
        {"id": 14, "label": 1, "note": "manager plateau",
         "when": "Position == 'Manager' and Position_Duration >= 5 and Potential != 'Low'"},
        {"id": 15, "label": 1, "note": "finance pay gap",
         "when": "Organization == 'Finance' and Salary_Competitiveness < 0.9"},
        {"id": 16, "label": 0, "note": "rising star paid at market",
         "when": "Rating >= 4 and Rating_Slope > 0 and Salary_Competitiveness >= 1.0"},
        {"id": 17, "label": 1, "note": "early attrition in marketing",
         "when": "Organization == 'Marketing' and Tenure_Duration <= 2"},
        {"id": 18, "label": 1, "note": "low potential and slipping",
         "when": "Potential == 'Low' and Rating <= 2 and Rating_Slope < 0"},
        {"id": 19, "label": 1, "note": "director without advancement",
         "when": "Position == 'Director' and Position_Duration >= 6"},
        {"id": 20, "label": 0, "note": "satisfied HR staff",
         "when": "Organization == 'HR' and Rating >= 3"},
        {"id": 21, "label": 0, "note": "paid well above market",
         "when": "Salary_Competitiveness >= 1.2"},
        {"id": 22, "label": 1, "note": "analyst ready for promotion",
         "when": "Position == 'Analyst' and Rating >= 4 and Position_Duration >= 3"},
        {"id": 23, "label": 0, "note": "established legal staff",
         "when": "Organization == 'Legal' and Tenure_Duration >= 5"},
        {"id": 24, "label": 1, "note": "long plateau at medium potential",
         "when": "Tenure_Duration >= 10 and Position_Duration >= 8 and Potential == 'Medium'"},
        {"id": 25, "label": 1, "note": "flat middling rating with below-market pay",
         "when": "Rating == 3 and Rating_Slope == 0 and Salary_Competitiveness < 0.95"},
    ],
    "default_label": 0,
    "default_explanation_id": 0,
}


def default_retention_config() -> TedConfig:
    return TedConfig.from_json(json.loads(json.dumps(_RETENTION)))


def retention_config_json() -> str:
    return json.dumps(_RETENTION, indent=2)
