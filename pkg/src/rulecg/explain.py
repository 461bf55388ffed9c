"""Closed-form feature importances and explanation-quality metrics.

Importances (all in [0, 1]):

* prototype:        theta_j = exp(-|x_j - x'_j| / sigma_j)
* pertinent pos.:   theta_j = 1 - exp(-|xpp_j| / sigma_j)
* pertinent neg.:   theta_j = 1 - exp(-|x_j - xpn_j| / sigma_j)

Metrics take any ``PredictFn``: a callable mapping one feature vector to the
probability of a fixed class.
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .rulemodel import RuleSet, predict
from .tabular import LiteralDescriptor

PROTO = "proto"
CEM_PP = "cem-pp"
CEM_PN = "cem-pn"
EXTERNAL = "external"
NATIVE_KINDS = (PROTO, CEM_PP, CEM_PN)

PredictFn = Callable[[np.ndarray], float]


class UndefinedMetricError(ValueError):
    """The metric has no value for these inputs (e.g. zero variance)."""


@dataclass(frozen=True)
class ImportanceVector:
    theta: np.ndarray
    kind: str = EXTERNAL

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 1:
            raise ValueError("importances must be a vector")
        if np.any(np.isnan(theta)):
            raise ValueError("importances contain NaN")
        if self.kind in NATIVE_KINDS and (np.any(theta < 0.0) or np.any(theta > 1.0)):
            raise ValueError(f"{self.kind} importances must lie in [0, 1]")
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return len(self.theta)


def _scaled_distance(diff: np.ndarray, sigma, zero_std: str) -> np.ndarray:
    diff = np.abs(np.asarray(diff, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != diff.shape:
        raise ValueError(f"sigma has shape {sigma.shape}, expected {diff.shape}")
    if np.any(sigma < 0):
        raise ValueError("standard deviations must be nonnegative")
    zero = sigma == 0.0
    if np.any(zero):
        if zero_std != "limit":
            bad = np.flatnonzero(zero).tolist()
            raise ValueError(f"zero standard deviation for features {bad}; "
                             "pass zero_std='limit' to use limit semantics")
        out = np.empty_like(diff)
        out[~zero] = diff[~zero] / sigma[~zero]
        out[zero] = np.where(diff[zero] == 0.0, 0.0, np.inf)
        return out
    return diff / sigma


def _vectors(*vs):
    arrs = [np.asarray(v, dtype=float) for v in vs]
    if any(a.shape != arrs[0].shape for a in arrs) or arrs[0].ndim != 1:
        raise ValueError("feature vectors must be 1-d and of equal length")
    return arrs


def proto_importance(x, x_proto, sigma, zero_std: str = "error") -> ImportanceVector:
    x, xp = _vectors(x, x_proto)
    return ImportanceVector(np.exp(-_scaled_distance(x - xp, sigma, zero_std)), PROTO)


def cem_pp_importance(x_pp, sigma, zero_std: str = "error") -> ImportanceVector:
    (xpp,) = _vectors(x_pp)
    return ImportanceVector(-np.expm1(-_scaled_distance(xpp, sigma, zero_std)), CEM_PP)


def cem_pn_importance(x, x_pn, sigma, zero_std: str = "error") -> ImportanceVector:
    x, xpn = _vectors(x, x_pn)
    return ImportanceVector(-np.expm1(-_scaled_distance(x - xpn, sigma, zero_std)), CEM_PN)


def _probability(f: PredictFn, v: np.ndarray) -> float:
    p = float(f(v))
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"predict function returned {p}, outside [0, 1]")
    return p


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) != len(b) or len(a) < 2:
        raise UndefinedMetricError("correlation needs two equal-length sequences of length >= 2")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise UndefinedMetricError("undefined metric: zero variance")
    da = a - a.mean()
    db = b - b.mean()
    return float(np.sum(da * db) / math.sqrt(float(np.sum(da * da)) * float(np.sum(db * db))))


@dataclass(frozen=True)
class MetricReport:
    metric: str
    value: float | bool
    order: tuple[int, ...]
    probabilities: tuple[float, ...]

    def to_json(self) -> dict:
        return {"metric": self.metric, "value": self.value,
                "probes": [{"feature": j, "probability": p}
                           for j, p in zip(self.order, self.probabilities)]}


def _inputs(x, theta, base):
    theta = theta if isinstance(theta, ImportanceVector) else ImportanceVector(theta)
    x = np.asarray(x, dtype=float)
    base = np.asarray(base, dtype=float)
    if not (x.shape == base.shape == theta.theta.shape) or x.ndim != 1:
        raise ValueError("x, theta and base must be vectors of equal length")
    return x, theta.theta, base


def faithfulness_report(f: PredictFn, x, theta, base) -> MetricReport:
    """Ablate features one at a time, most important first, and correlate.

    Probe ``k`` sets only feature ``order[k]`` to its base value (every other
    feature keeps its actual value).  The metric is minus the Pearson
    correlation between the ordered importances and the probe probabilities.
    """
    x, th, base = _inputs(x, theta, base)
    if len(x) < 2:
        raise UndefinedMetricError("faithfulness needs at least two features")
    order = sorted(range(len(th)), key=lambda j: (-th[j], j))
    probs = []
    for j in order:
        probe = x.copy()
        probe[j] = base[j]
        probs.append(_probability(f, probe))
    phi = -pearson(th[order], probs)
    return MetricReport("faithfulness", phi, tuple(order), tuple(probs))


def faithfulness(f: PredictFn, x, theta, base) -> float:
    return faithfulness_report(f, x, theta, base).value


def monotonicity_report(f: PredictFn, x, theta, base, eps: float = 1e-12) -> MetricReport:
    """Restore positive-importance features onto the base vector, least
    important first; true iff the probabilities never drop by more than
    ``eps``."""
    x, th, base = _inputs(x, theta, base)
    order = sorted(np.flatnonzero(th > 0.0).tolist(), key=lambda j: (th[j], j))
    if not order:
        raise UndefinedMetricError("monotonicity needs a feature with positive importance")
    cur = base.copy()
    probs = []
    for j in order:
        cur[j] = x[j]
        probs.append(_probability(f, cur.copy()))
    ok = all(b >= a - eps for a, b in zip(probs, probs[1:]))
    return MetricReport("monotonicity", ok, tuple(order), tuple(probs))


def monotonicity(f: PredictFn, x, theta, base, eps: float = 1e-12) -> bool:
    return monotonicity_report(f, x, theta, base, eps).value


def _literal_bits(descriptors: Sequence[LiteralDescriptor], x) -> np.ndarray:
    need = max((dsc.feature for dsc in descriptors), default=-1) + 1
    if len(x) < need:
        raise ValueError(f"feature vector has {len(x)} entries, the model reads {need}")
    return np.array([dsc.holds(x[dsc.feature]) for dsc in descriptors], dtype=bool)


def rule_predict_fn(rs: RuleSet) -> PredictFn:
    """0/1 "probability" of class 1 under a rule set, from a raw feature vector."""
    if rs.descriptors is None:
        raise ValueError("rule set has no literal descriptors")

    def f(x) -> float:
        return float(predict(rs, _literal_bits(rs.descriptors, x)[None, :])[0])
    return f


def glrm_predict_fn(model) -> PredictFn:
    """Link output of a GLRM on a raw feature vector (numeric features as floats)."""
    if not model.descriptors and model.rule_terms:
        raise ValueError("model has no literal descriptors")

    def f(x) -> float:
        bits = _literal_bits(model.descriptors, x)
        s = model.intercept
        for c, b in model.rule_terms:
            s += b * float(np.all(bits[list(c.literals)]))
        for t in model.linear_terms:
            if t.feature >= len(x):
                raise ValueError(f"feature vector has {len(x)} entries, the model reads "
                                 f"feature {t.feature}")
            s += t.coef * ((float(x[t.feature]) - t.mean) / t.std)
        if model.link == "logit":
            return float(np.exp(-np.logaddexp(0.0, -s)))
        return float(s)
    return f


class SubprocessPredictFn:
    """Black-box model behind a subprocess.

    Each call writes the feature vector as one JSON array line to the
    child's stdin and reads one line holding the probability.
    """

    def __init__(self, command: Sequence[str]):
        self.proc = subprocess.Popen(list(command), stdin=subprocess.PIPE,
                                     stdout=subprocess.PIPE, text=True, bufsize=1)

    def __call__(self, x) -> float:
        line = json.dumps([v.item() if hasattr(v, "item") else v for v in x])
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()
        reply = self.proc.stdout.readline()
        if not reply:
            raise RuntimeError("predictor process closed its output")
        return float(json.loads(reply))

    def close(self):
        if self.proc.poll() is None:
            self.proc.stdin.close()
            self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
