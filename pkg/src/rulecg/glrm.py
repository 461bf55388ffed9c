"""Generalized linear rule models and their additive (GAM) decomposition.

A model scores a sample as

    intercept + sum_k beta_k * cover_k(x) + sum_j gamma_j * (x_j - m_j) / s_j

with conjunction columns ``cover_k`` and standardized numeric linear terms,
passed through an identity or logistic link.  Training minimizes the mean
loss plus ``sum_k (lambda0 + lambda1 * degree_k) |beta_k| + lambda1 * sum_j
|gamma_j|`` by cyclic coordinate descent, and grows the rule pool by
column generation: the loss gradient becomes a weighted-conjunction
instance, searched once per coefficient sign.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .rulemodel import Conjunction
from .subproblem import FULL, PricingInstance, beam_search
from .tabular import NUMERIC, BinarizedDataset, DataError, LiteralDescriptor

logger = logging.getLogger(__name__)

IDENTITY = "identity"
LOGIT = "logit"

IMPROVE_TOL = -1e-6
KKT_TOL = 1e-8
MAX_SWEEPS = 20_000
MAX_ADD = 10


@dataclass(frozen=True)
class GlrmConfig:
    lambda0: float = 1e-3
    lambda1: float = 1e-3
    beam_width: int = 5
    max_degree: int = 3
    max_cg_iters: int = 100
    time_limit: float = 300.0
    link: str = LOGIT
    linear_terms: bool = True
    expansion: str = FULL

    def __post_init__(self):
        if self.lambda0 < 0 or self.lambda1 < 0:
            raise ValueError("lambda0 and lambda1 must be nonnegative")
        if self.link not in (IDENTITY, LOGIT):
            raise ValueError(f"unknown link {self.link!r}")
        for name in ("beam_width", "max_degree", "max_cg_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True)
class LinearTerm:
    feature: int
    name: str
    coef: float
    mean: float
    std: float


@dataclass(frozen=True)
class GlrmModel:
    link: str
    intercept: float
    rule_terms: tuple[tuple[Conjunction, float], ...]
    linear_terms: tuple[LinearTerm, ...]
    lambda0: float
    lambda1: float
    descriptors: tuple[LiteralDescriptor, ...] = ()
    feature_names: tuple[str, ...] = ()
    column_kinds: tuple[str, ...] = ()
    domains: tuple = ()

    def __post_init__(self):
        clauses = [c for c, _ in self.rule_terms]
        if len(set(clauses)) != len(clauses):
            raise ValueError("duplicate conjunctions among rule terms")

    def score(self, data: BinarizedDataset) -> np.ndarray:
        s = np.full(data.n, self.intercept)
        for c, b in self.rule_terms:
            s += b * c.coverage(data.X)
        for t in self.linear_terms:
            s += t.coef * ((_numeric_column(data, t.feature) - t.mean) / t.std)
        return s

    def predict_proba(self, data: BinarizedDataset) -> np.ndarray:
        """Link output: the score itself, or the logistic probability."""
        s = self.score(data)
        return _sigmoid(s) if self.link == LOGIT else s

    def predict(self, data: BinarizedDataset) -> np.ndarray:
        return (self.predict_proba(data) >= 0.5).astype(np.int8)

    def to_json(self) -> dict:
        return {
            "kind": "glrm",
            "link": self.link,
            "intercept": self.intercept,
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "rule_terms": [{"literals": list(c.literals), "coef": b} for c, b in self.rule_terms],
            "linear_terms": [{"feature": t.feature, "name": t.name, "coef": t.coef,
                              "mean": t.mean, "std": t.std} for t in self.linear_terms],
            "descriptors": [d.to_json() for d in self.descriptors],
            "feature_names": list(self.feature_names),
            "column_kinds": list(self.column_kinds),
            "domains": [list(d) for d in self.domains],
        }

    @classmethod
    def from_json(cls, obj) -> "GlrmModel":
        kinds = tuple(obj.get("column_kinds", []))
        domains = []
        for kind, dom in zip(kinds, obj.get("domains", [])):
            domains.append(tuple(float(v) for v in dom) if kind == NUMERIC else tuple(dom))
        return cls(
            obj["link"], float(obj["intercept"]),
            tuple((Conjunction(tuple(t["literals"])), float(t["coef"])) for t in obj["rule_terms"]),
            tuple(LinearTerm(int(t["feature"]), t["name"], float(t["coef"]), float(t["mean"]),
                             float(t["std"])) for t in obj["linear_terms"]),
            float(obj["lambda0"]), float(obj["lambda1"]),
            tuple(LiteralDescriptor.from_json(d) for d in obj.get("descriptors", [])),
            tuple(obj.get("feature_names", [])), kinds, tuple(domains))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


@dataclass
class GlrmFit:
    """Training trace: the final model, the full column pool and objectives."""

    model: GlrmModel
    pool: list[Conjunction]
    rule_coefs: np.ndarray
    linear_features: list[int]
    linear_coefs: np.ndarray
    objectives: list[float] = field(default_factory=list)
    status: str = "running"


def _sigmoid(s):
    return np.exp(-np.logaddexp(0.0, -s))


def _numeric_column(data: BinarizedDataset, feature: int) -> np.ndarray:
    try:
        k = data.numeric_features.index(feature)
    except ValueError:
        raise DataError(f"feature {feature} has no numeric values in this dataset") from None
    return data.numeric[:, k]


def _loss(link: str, y: np.ndarray, s: np.ndarray) -> float:
    if link == IDENTITY:
        return float(np.mean((y - s) ** 2) / 2.0)
    return float(np.mean(np.logaddexp(0.0, s) - y * s))


def _mean_fn(link: str, s: np.ndarray) -> np.ndarray:
    return s if link == IDENTITY else _sigmoid(s)


def loss_gradient(link: str, y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Per-sample derivative of the mean loss with respect to the score."""
    return (_mean_fn(link, s) - y) / len(y)


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def kkt_violations(G: np.ndarray, coefs: np.ndarray, penalties: np.ndarray) -> np.ndarray:
    """Subgradient residuals of the penalized objective per column."""
    return np.where(coefs == 0.0, np.maximum(np.abs(G) - penalties, 0.0),
                    np.abs(G + penalties * np.sign(coefs)))


def _inner_cd(H, g, theta, lam, tol, max_sweeps):
    """Coordinate descent on ``g.d + d'Hd/2 + sum lam |theta + d|``.

    Sweeps alternate between the active set and full passes, in the usual
    covariance-update form (each coordinate step costs O(K)).
    """
    v = theta.copy()
    q = g.copy()                                # gradient of the quadratic at v
    diag = np.diag(H).copy()
    K = len(v)
    full = True
    for _ in range(max_sweeps):
        idx = range(K) if full else np.flatnonzero(v != 0.0)
        biggest = 0.0
        for k in idx:
            a = diag[k]
            if a <= 1e-300:
                continue
            new = _soft(v[k] - q[k] / a, lam[k] / a)
            delta = new - v[k]
            if delta != 0.0:
                q += delta * H[:, k]
                v[k] = new
                biggest = max(biggest, a * abs(delta))
        if biggest <= tol:
            if full:
                break
            full = True
        else:
            full = biggest <= tol and not full
    return v


def _coordinate_descent(Z, y, link, pen, beta, b0, max_outer=500, tol=KKT_TOL):
    """Minimize mean loss + sum pen_k |beta_k| with an unpenalized intercept.

    Proximal Newton: each outer step minimizes a local quadratic model by
    coordinate descent and then backtracks along the resulting direction
    until the penalized objective decreases sufficiently.  For the identity
    link the quadratic model is exact.
    """
    n = len(y)
    Za = np.hstack([np.ones((n, 1)), Z])
    lam = np.concatenate([[0.0], pen])
    theta = np.concatenate([[b0], beta])

    def objective(th, s):
        return _loss(link, y, s) + float(lam @ np.abs(th))

    s = Za @ theta
    for _outer in range(max_outer):
        g = Za.T @ loss_gradient(link, y, s)
        viol = float(kkt_violations(g, theta, lam).max())
        if viol <= tol:
            break
        wts = np.ones(n) if link == IDENTITY else _sigmoid(s) * (1.0 - _sigmoid(s))
        H = (Za * wts[:, None]).T @ Za / n
        v = _inner_cd(H, g, theta, lam, max(0.1 * tol, 0.01 * viol), MAX_SWEEPS)
        d = v - theta
        if not np.any(d):
            break
        f0 = objective(theta, s)
        decrease = float(g @ d) + float(lam @ (np.abs(v) - np.abs(theta)))
        Zd = Za @ d
        t = 1.0
        while True:
            cand = theta + t * d
            s_new = s + t * Zd
            if objective(cand, s_new) <= f0 + 1e-4 * t * decrease:
                break
            t /= 2.0
            if t < 1e-12:
                cand, s_new = theta, s
                break
        if cand is theta:
            break
        theta, s = cand, s_new
    else:
        logger.warning("coordinate descent stopped at the iteration cap (KKT residual %.3g)", viol)
    # recompute the score from scratch so callers see no drift
    s = Za @ theta
    return theta[1:].copy(), float(theta[0]), s


def _objective(link, y, s, beta, pen):
    return _loss(link, y, s) + float(pen @ np.abs(beta))


def _target(data: BinarizedDataset, target, link: str) -> np.ndarray:
    y = np.asarray(data.labels if target is None else target, dtype=float)
    if y.shape != (data.n,):
        raise DataError(f"target has shape {y.shape}, expected ({data.n},)")
    if not np.all(np.isfinite(y)):
        raise DataError("target contains non-finite values")
    if link == LOGIT:
        if not np.all((y == 0) | (y == 1)):
            raise DataError("logit link requires 0/1 labels")
        if y.min() == y.max():
            raise DataError("logit link requires both classes")
    return y


def train_glrm(data: BinarizedDataset, cfg: GlrmConfig = GlrmConfig(), target=None) -> GlrmFit:
    """Fit a GLRM and return the full training trace.

    ``target`` overrides ``data.labels`` (real values are allowed with the
    identity link).  A constant target under the identity link yields the
    intercept-only model.
    """
    y = _target(data, target, cfg.link)
    n = data.n
    start = time.perf_counter()

    lin_feats, lin_cols, lin_mean, lin_std = [], [], [], []
    if cfg.linear_terms:
        for k, j in enumerate(data.numeric_features):
            col = data.numeric[:, k]
            m = float(np.mean(col))
            sd = float(np.sqrt(np.mean((col - m) ** 2)))
            if sd > 0.0 and not np.all(col == col[0]):
                lin_feats.append(j)
                lin_cols.append((col - m) / sd)
                lin_mean.append(m)
                lin_std.append(sd)
    L = np.column_stack(lin_cols) if lin_cols else np.zeros((n, 0))

    pool: list[Conjunction] = []
    in_pool: set[Conjunction] = set()
    R = np.zeros((n, 0))
    rule_pen = np.zeros(0)
    lin_pen = np.full(L.shape[1], float(cfg.lambda1))
    beta = np.zeros(L.shape[1])
    b0 = float(np.mean(y)) if cfg.link == IDENTITY else float(np.log(y.mean() / (1 - y.mean())))
    fit = GlrmFit(None, pool, np.zeros(0), lin_feats, np.zeros(0))

    constant = cfg.link == IDENTITY and np.all(y == y[0])
    if constant:
        b0 = float(y[0])
        fit.status = "constant_target"
    n_add = min(cfg.beam_width, MAX_ADD)
    for it in range(cfg.max_cg_iters if not constant else 0):
        Z = np.hstack([R, L])
        pen = np.concatenate([rule_pen, lin_pen])
        beta, b0, s = _coordinate_descent(Z, y, cfg.link, pen, beta, b0)
        fit.objectives.append(_objective(cfg.link, y, s, beta, pen))
        g = loss_gradient(cfg.link, y, s)
        new = []
        for sign in (1.0, -1.0):
            inst = PricingInstance(data.X, sign * g, np.full(data.d, float(cfg.lambda1)),
                                   float(cfg.lambda0), cfg.max_degree)
            res = beam_search(inst, cfg.beam_width, expansion=cfg.expansion)
            new += [(v, c) for c, v in res.candidates if v < IMPROVE_TOL and c not in in_pool]
        picked = []
        for v, c in sorted(new, key=lambda e: (e[0], e[1].degree, e[1].literals)):
            if c not in picked:
                picked.append(c)
        picked = picked[:n_add]
        logger.debug("glrm iter %d: objective %.8g, +%d", it, fit.objectives[-1], len(picked))
        if not picked:
            fit.status = "converged"
            break
        for c in picked:
            pool.append(c)
            in_pool.add(c)
        R = np.hstack([R, np.column_stack([c.coverage(data.X) for c in picked]).astype(float)])
        rule_pen = np.concatenate([rule_pen, [cfg.lambda0 + cfg.lambda1 * c.degree for c in picked]])
        beta = np.concatenate([beta[:len(pool) - len(picked)], np.zeros(len(picked)),
                               beta[len(pool) - len(picked):]])
        if time.perf_counter() - start > cfg.time_limit:
            fit.status = "time_limit"
            break
    else:
        if not constant:
            fit.status = "max_iters"

    if fit.status in ("time_limit", "max_iters"):
        Z = np.hstack([R, L])
        pen = np.concatenate([rule_pen, lin_pen])
        beta, b0, s = _coordinate_descent(Z, y, cfg.link, pen, beta, b0)
        fit.objectives.append(_objective(cfg.link, y, s, beta, pen))

    K = len(pool)
    fit.rule_coefs = beta[:K].copy()
    fit.linear_coefs = beta[K:].copy()
    rule_terms = tuple((c, float(b)) for c, b in zip(pool, beta[:K]) if b != 0.0)
    linear_terms = tuple(
        LinearTerm(j, data.feature_names[j], float(b), m, sd)
        for j, b, m, sd in zip(lin_feats, beta[K:], lin_mean, lin_std) if b != 0.0)
    domains = data.source_stats.domain if data.source_stats is not None else ()
    fit.model = GlrmModel(cfg.link, float(b0), rule_terms, linear_terms, cfg.lambda0, cfg.lambda1,
                          tuple(data.descriptors), tuple(data.feature_names),
                          tuple(data.column_kinds), tuple(domains))
    return fit


def fit_glrm(data: BinarizedDataset, cfg: GlrmConfig = GlrmConfig(), target=None) -> GlrmModel:
    return train_glrm(data, cfg, target).model


def penalized_objective(model: GlrmModel, data: BinarizedDataset, target=None) -> float:
    y = _target(data, target, model.link) if target is not None or model.link == LOGIT \
        else np.asarray(data.labels, dtype=float)
    s = model.score(data)
    pen = sum((model.lambda0 + model.lambda1 * c.degree) * abs(b) for c, b in model.rule_terms)
    pen += sum(model.lambda1 * abs(t.coef) for t in model.linear_terms)
    return _loss(model.link, y, s) + pen


@dataclass(frozen=True)
class FeatureFunction:
    """``f_j(x) = sum_steps coef * [literal holds] + slope * x``."""

    feature: int
    name: str
    kind: str
    steps: tuple[tuple[LiteralDescriptor, float], ...]
    slope: float = 0.0

    def __call__(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=object if self.kind != NUMERIC else float)
        out = np.zeros(len(values))
        for dsc, coef in self.steps:
            out += coef * dsc.evaluate(values)
        if self.slope:
            out += self.slope * values.astype(float)
        return out

    @property
    def is_zero(self) -> bool:
        return not self.steps and self.slope == 0.0


@dataclass(frozen=True)
class GamDecomposition:
    intercept: float
    functions: tuple[FeatureFunction, ...]
    importance: np.ndarray
    residual_terms: tuple[tuple[Conjunction, float], ...]
    domains: tuple = ()

    def order(self) -> list[int]:
        """Feature indices by importance, largest first (ties by index)."""
        return sorted(range(len(self.functions)), key=lambda j: (-self.importance[j], j))


def decompose_gam(model: GlrmModel, data: BinarizedDataset) -> GamDecomposition:
    """Split the model into per-feature functions plus higher-degree rules.

    Degree-1 rules become steps of their feature's function and linear
    terms become slopes (standardization folded into the intercept).
    Importance is the population variance of ``f_j(x_j)`` over ``data``.
    """
    if model.descriptors and tuple(model.descriptors) != tuple(data.descriptors):
        raise ValueError("model vocabulary does not match the dataset's literals")
    d = len(data.feature_names)
    steps: list[list] = [[] for _ in range(d)]
    slopes = [0.0] * d
    intercept = model.intercept
    residual = []
    for c, b in model.rule_terms:
        if c.degree == 1:
            dsc = data.descriptors[c.literals[0]]
            steps[dsc.feature].append((c.literals[0], b))
        else:
            residual.append((c, b))
    for t in model.linear_terms:
        slopes[t.feature] += t.coef / t.std
        intercept -= t.coef * t.mean / t.std
    functions = tuple(
        FeatureFunction(j, data.feature_names[j], data.column_kinds[j],
                        tuple((data.descriptors[lit], b) for lit, b in sorted(steps[j])), slopes[j])
        for j in range(d))

    importance = np.zeros(d)
    for j, f in enumerate(functions):
        if f.is_zero:
            continue
        # evaluate on the literal matrix so categorical features need no raw values
        v = np.zeros(data.n)
        for lit, b in sorted(steps[j]):
            v += b * data.X[:, lit]
        if f.slope:
            v += f.slope * _numeric_column(data, j)
        importance[j] = 0.0 if np.all(v == v[0]) else float(np.mean((v - v.mean()) ** 2))
    return GamDecomposition(intercept, functions, importance, tuple(residual), model.domains)


def gam_score(gam: GamDecomposition, data: BinarizedDataset) -> np.ndarray:
    """Reconstruct the model score from the decomposition on ``data``."""
    s = np.full(data.n, gam.intercept)
    for f in gam.functions:
        for dsc, b in f.steps:
            lit = data.descriptors.index(dsc)
            s += b * data.X[:, lit]
        if f.slope:
            s += f.slope * _numeric_column(data, f.feature)
    for c, b in gam.residual_terms:
        s += b * c.coverage(data.X)
    return s


def _term_text(model: GlrmModel, c: Conjunction) -> str:
    if not model.descriptors:
        return " AND ".join(f"x{j}" for j in c.literals)
    return " AND ".join(model.descriptors[j].text() for j in c.literals)


def explain_text(model: GlrmModel, higher_degree_only: bool = False) -> str:
    """Term listing sorted by absolute coefficient, largest first."""
    entries = []
    for c, b in model.rule_terms:
        if higher_degree_only and c.degree < 2:
            continue
        entries.append((-abs(b), 0, c.degree, c.literals, f"{b:+.6g}  {_term_text(model, c)}"))
    if not higher_degree_only:
        for t in model.linear_terms:
            entries.append((-abs(t.coef), 1, 1, (t.feature,),
                            f"{t.coef:+.6g}  {t.name} (linear, standardized)"))
    entries.sort(key=lambda e: e[:4])
    lines = [f"intercept  {model.intercept:.6g}"] + [e[4] for e in entries]
    return "\n".join(lines)


def export_plot_data(gam: GamDecomposition) -> list[dict]:
    """One plot series per feature, most important first.

    Numeric series carry ``breakpoints`` (domain min, sorted step
    thresholds, domain max), the step-function ``values`` on each interval
    and the linear ``slope``.  Categorical series carry ``categories`` and
    their ``values``.
    """
    out = []
    for j in gam.order():
        f = gam.functions[j]
        dom = gam.domains[j] if j < len(gam.domains) else ()
        series = {"feature": f.name, "index": j, "kind": f.kind,
                  "importance": float(gam.importance[j])}
        if f.kind == NUMERIC:
            cuts = sorted({float(dsc.value) for dsc, _ in f.steps})
            lo = float(dom[0]) if dom else (cuts[0] if cuts else 0.0)
            hi = float(dom[1]) if dom else (cuts[-1] if cuts else 0.0)
            bps = [lo] + [t for t in cuts if lo < t < hi] + [hi]
            # each interval is (left, right]; evaluate the step part at its right end
            step_only = FeatureFunction(f.feature, f.name, f.kind, f.steps, 0.0)
            rights = bps[1:] if len(bps) > 1 else bps
            values = step_only(np.array(rights, dtype=float)).tolist()
            series.update(breakpoints=bps, values=values, slope=f.slope)
        else:
            cats = list(dom) if dom else sorted({str(dsc.value) for dsc, _ in f.steps})
            values = f(np.array(cats, dtype=object)).tolist() if cats else []
            series.update(categories=cats, values=values)
        out.append(series)
    return out


def plot_rows(series: list[dict]):
    """Flatten plot series into (feature, importance, x, f) rows."""
    rows = []
    for s in series:
        if s["kind"] == NUMERIC:
            bps, vals, slope = s["breakpoints"], s["values"], s["slope"]
            for k, v in enumerate(vals):
                a = bps[k]
                b = bps[k + 1] if k + 1 < len(bps) else bps[k]
                rows.append((s["feature"], s["importance"], a, v + slope * a))
                rows.append((s["feature"], s["importance"], b, v + slope * b))
        else:
            for c, v in zip(s["categories"], s["values"]):
                rows.append((s["feature"], s["importance"], c, v))
    return rows


def plot_csv(series: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["feature", "importance", "x", "f"])
    for r in plot_rows(series):
        w.writerow([r[0], repr(r[1]), r[2] if isinstance(r[2], str) else repr(float(r[2])),
                    repr(float(r[3]))])
    return buf.getvalue()


def plot_json(series: list[dict]) -> str:
    return json.dumps(series, indent=2, allow_nan=False)
