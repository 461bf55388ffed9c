"""Command-line interface: binarize, train, predict, explain, metric, ted, sweep.

Exit codes: 0 success, 2 usage error, 3 data error, 4 training failure,
5 undefined metric.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import explain as xp
from . import tedgen
from .brcg import BrcgConfig, fit
from .glrm import (IDENTITY, LOGIT, GlrmConfig, GlrmModel, decompose_gam, explain_text,
                   export_plot_data, plot_csv, plot_json, train_glrm)
from .lp import LpError
from .rulemodel import RuleSet, complexity, predict, render
from .tabular import (NUMERIC, DataError, TabularDataset, apply_descriptors, binarize,
                      compute_stats, load_csv, split)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_TRAINING = 4
EXIT_METRIC = 5

JOBS_ENV = "RULECG_JOBS"
SWEEP_HEADER = ["lambda0", "lambda1", "beam", "seed", "complexity", "train_acc", "test_acc",
                "seconds"]


class UsageError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


# ---------------------------------------------------------------- helpers

def _floats(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",") if t.strip()], dtype=float)
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _kinds(text: str | None) -> dict[str, str]:
    out = {}
    for item in (text or "").split(","):
        if not item.strip():
            continue
        name, sep, kind = item.partition("=")
        if not sep or kind.strip() not in ("numeric", "categorical"):
            raise UsageError(f"bad kind override {item!r}; use name=numeric|categorical")
        out[name.strip()] = kind.strip()
    return out


def _write(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load(args) -> TabularDataset:
    return load_csv(args.data, args.label, args.positive, _kinds(args.kinds))


def _accuracy(pred, labels) -> float:
    return float(np.mean(np.asarray(pred) == np.asarray(labels)))


def _schema(ds: TabularDataset, args) -> dict:
    return {"feature_names": list(ds.feature_names), "column_kinds": list(ds.column_kinds),
            "label_column": args.label, "positive": args.positive}


def _load_for_model(path, schema: dict, label: str | None, positive: str | None):
    """Read ``path`` and project it onto the model's feature columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    overrides = {n: k for n, k in zip(schema["feature_names"], schema["column_kinds"])
                 if n in header}
    ds = load_csv(path, label, positive, overrides)
    missing = [n for n in schema["feature_names"] if n not in ds.feature_names]
    if missing:
        raise DataError(f"{path}: missing feature columns {missing}")
    idx = [ds.feature_names.index(n) for n in schema["feature_names"]]
    return TabularDataset(tuple(schema["feature_names"]), tuple(schema["column_kinds"]),
                          tuple(ds.columns[j] for j in idx), ds.labels)


def _read_model(path) -> dict:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"no such model file: {path}") from None
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid model JSON ({e})") from None
    if obj.get("kind") not in ("brcg", "glrm"):
        raise DataError(f"{path}: unknown model kind {obj.get('kind')!r}")
    return obj


def _model_object(obj: dict):
    if obj["kind"] == "brcg":
        return RuleSet.from_json(obj["model"])
    return GlrmModel.from_json(obj["model"])


# ---------------------------------------------------------------- binarize

def cmd_binarize(args) -> int:
    ds = _load(args)
    b = binarize(ds, num_thresholds=args.thresholds, include_complements=not args.no_complements)
    _write(args.out, json.dumps(b.sidecar(), indent=2) + "\n")
    print(f"{b.n} samples, {b.d} literals", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- train

def cmd_train(args) -> int:
    ds = _load(args)
    test = None
    if args.test_fraction:
        ds, test = split(ds, args.test_fraction, args.seed)
    ds.require_both_classes()
    b = binarize(ds, num_thresholds=args.thresholds, include_complements=not args.no_complements)
    envelope = {"kind": args.algo, "schema": _schema(ds, args)}
    try:
        if args.algo == "brcg":
            cfg = BrcgConfig(args.lambda0, args.lambda1, args.beam_width,
                             args.max_degree or 10, args.max_cg_iters, args.time_limit,
                             args.cnf, args.seed)
            rs, log = fit(b, cfg)
            envelope["model"] = rs.to_json()
            envelope["config"] = asdict(cfg)
            report = render(rs)
            train_pred = predict(rs, b)
            log_text = log.to_jsonl()
            model = rs
        else:
            if args.cnf:
                raise UsageError("--cnf applies to brcg only")
            cfg = GlrmConfig(args.lambda0, args.lambda1, args.beam_width, args.max_degree or 3,
                             args.max_cg_iters, args.time_limit, args.link)
            trace = train_glrm(b, cfg)
            model = trace.model
            envelope["model"] = model.to_json()
            envelope["config"] = asdict(cfg)
            report = explain_text(model, args.higher_degree_only)
            train_pred = model.predict(b)
            log_text = "".join(json.dumps({"iteration": k, "objective": v}) + "\n"
                               for k, v in enumerate(trace.objectives))
            log_text += json.dumps({"status": trace.status}) + "\n"
    except LpError as e:
        raise TrainingError(str(e)) from e
    _write(args.out, json.dumps(envelope, indent=2) + "\n")
    if args.log:
        _write(args.log, log_text)
    print(report)
    print(f"train accuracy {_accuracy(train_pred, b.labels):.6f}")
    if args.algo == "brcg":
        print(f"complexity {complexity(model).complexity}")
    if test is not None:
        tb = apply_descriptors(test, b.descriptors, b.source_stats)
        pred = predict(model, tb) if args.algo == "brcg" else model.predict(tb)
        print(f"test accuracy {_accuracy(pred, tb.labels):.6f}")
    return EXIT_OK


# ---------------------------------------------------------------- predict

def cmd_predict(args) -> int:
    obj = _read_model(args.model)
    schema = obj["schema"]
    ds = _load_for_model(args.data, schema, args.label,
                         args.positive if args.positive is not None else schema.get("positive"))
    model = _model_object(obj)
    b = apply_descriptors(ds, model.descriptors)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if obj["kind"] == "brcg":
        pred = predict(model, b)
        w.writerow(["prediction"])
        w.writerows([[int(p)] for p in pred])
    else:
        prob = model.predict_proba(b)
        pred = model.predict(b)
        w.writerow(["prediction", "score" if model.link == IDENTITY else "probability"])
        w.writerows([[int(p), repr(float(q))] for p, q in zip(pred, prob)])
    _write(args.out, buf.getvalue())
    if args.label:
        print(f"accuracy {_accuracy(pred, ds.labels):.6f}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- explain

def _sigma(args, d: int) -> np.ndarray:
    if args.sigma:
        sigma = _floats(args.sigma)
    elif args.data:
        ds = load_csv(args.data, args.label, args.positive, _kinds(args.kinds))
        sigma = compute_stats(ds).std
    else:
        raise UsageError("give --sigma or --data to estimate standard deviations")
    if len(sigma) != d:
        raise UsageError(f"sigma has {len(sigma)} entries, expected {d}")
    return sigma


def cmd_explain(args) -> int:
    zero = "limit" if args.zero_std_limit else "error"
    if args.method == "gam":
        return _explain_gam(args)
    if args.method == "proto":
        x, ref = _floats(args.x), _floats(args.proto)
        theta = xp.proto_importance(x, ref, _sigma(args, len(x)), zero)
    elif args.method == "cem-pp":
        ref = _floats(args.pp)
        theta = xp.cem_pp_importance(ref, _sigma(args, len(ref)), zero)
    else:
        x, ref = _floats(args.x), _floats(args.pn)
        theta = xp.cem_pn_importance(x, ref, _sigma(args, len(x)), zero)
    report = {"kind": theta.kind, "theta": theta.theta.tolist()}
    _write(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


def _explain_gam(args) -> int:
    if not args.model or not args.data:
        raise UsageError("gam explanations need --model and --data")
    obj = _read_model(args.model)
    if obj["kind"] != "glrm":
        raise UsageError("gam explanations need a glrm model")
    model = GlrmModel.from_json(obj["model"])
    ds = _load_for_model(args.data, obj["schema"], args.label, args.positive)
    b = apply_descriptors(ds, model.descriptors, compute_stats(ds))
    gam = decompose_gam(model, b)
    series = export_plot_data(gam)
    print(explain_text(model, args.higher_degree_only))
    if args.plot_csv:
        _write(args.plot_csv, plot_csv(series))
    if args.plot_json:
        _write(args.plot_json, plot_json(series) + "\n")
    report = {"importance": {gam.functions[j].name: float(gam.importance[j])
                             for j in gam.order()}}
    _write(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- metric

def _predict_fn(args):
    if args.predictor_cmd:
        return xp.SubprocessPredictFn(args.predictor_cmd.split())
    if args.model:
        model = _model_object(_read_model(args.model))
        return xp.rule_predict_fn(model) if isinstance(model, RuleSet) else xp.glrm_predict_fn(model)
    raise UsageError("give --model or --predictor-cmd")


def _base(args, d: int) -> np.ndarray:
    if args.base:
        base = _floats(args.base)
    elif args.data:
        ds = load_csv(args.data, args.label, args.positive, _kinds(args.kinds))
        if any(k != NUMERIC for k in ds.column_kinds):
            raise UsageError("default base vectors need numeric features; pass --base")
        base = compute_stats(ds).mean
    else:
        raise UsageError("give --base or --data for the default base vector")
    if len(base) != d:
        raise UsageError(f"base has {len(base)} entries, expected {d}")
    return base


def cmd_metric(args) -> int:
    x, theta = _floats(args.x), _floats(args.theta)
    base = _base(args, len(x))
    f = _predict_fn(args)
    try:
        if args.metric == "faithfulness":
            report = xp.faithfulness_report(f, x, theta, base)
        else:
            report = xp.monotonicity_report(f, x, theta, base, args.eps)
    finally:
        if isinstance(f, xp.SubprocessPredictFn):
            f.close()
    _write(args.out, json.dumps(report.to_json(), indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- ted

def cmd_ted(args) -> int:
    if args.action == "config":
        _write(args.out, tedgen.retention_config_json() + "\n")
        return EXIT_OK
    cfg = tedgen.load_config(args.config) if args.config else tedgen.default_retention_config()
    if args.action == "info":
        info = {"features": cfg.feature_names, "rules": len(cfg.rules),
                "cardinality": cfg.cardinality(), "fingerprint": cfg.fingerprint()}
        _write(args.out, json.dumps(info, indent=2) + "\n")
        return EXIT_OK
    data = tedgen.generate(cfg, args.n, args.seed)
    _write(args.out, data.to_csv())
    return EXIT_OK


# ---------------------------------------------------------------- sweep

@dataclass(frozen=True)
class SweepSpec:
    grid: tuple[tuple[float, float], ...]
    beams: tuple[int, ...] = (1, 3, 5)
    max_degree: int = 3
    seeds: tuple[int, ...] = (0,)
    test_fraction: float = 0.2
    time_limit: float = 300.0
    thresholds: int = 9

    def __post_init__(self):
        if not self.grid:
            raise UsageError("sweep grid is empty")
        if any(a < 0 or b < 0 for a, b in self.grid):
            raise UsageError("lambda values must be nonnegative")
        if not self.beams or not self.seeds:
            raise UsageError("beam widths and seeds must be non-empty")

    def jobs(self):
        for l0, l1 in self.grid:
            for beam in self.beams:
                for seed in self.seeds:
                    yield l0, l1, beam, seed


@dataclass(frozen=True)
class TradeoffPoint:
    lambda0: float
    lambda1: float
    beam: int
    seed: int
    complexity: int | None
    train_acc: float | None
    test_acc: float | None
    seconds: float

    @property
    def failed(self) -> bool:
        return self.complexity is None


def _sweep_job(ds: TabularDataset, spec: SweepSpec, job) -> TradeoffPoint:
    l0, l1, beam, seed = job
    start = time.perf_counter()
    try:
        train, test = split(ds, spec.test_fraction, seed)
        b = binarize(train, num_thresholds=spec.thresholds)
        tb = apply_descriptors(test, b.descriptors, b.source_stats)
        rs, _ = fit(b, BrcgConfig(l0, l1, beam, spec.max_degree, time_limit=spec.time_limit,
                                  seed=seed))
        return TradeoffPoint(l0, l1, beam, seed, complexity(rs).complexity,
                             _accuracy(predict(rs, b), b.labels),
                             _accuracy(predict(rs, tb), tb.labels), time.perf_counter() - start)
    except (DataError, LpError, ValueError) as e:
        logger.warning("sweep point %s failed: %s", job, e)
        return TradeoffPoint(l0, l1, beam, seed, None, None, None, time.perf_counter() - start)


def _sweep_worker(payload):
    ds, spec, job = payload
    return _sweep_job(ds, spec, job)


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
    if hasattr(os, "sched_getaffinity"):
        return max(1, len(os.sched_getaffinity(0)))
    return os.cpu_count() or 1


def run_sweep(ds: TabularDataset, spec: SweepSpec, jobs: int = 1) -> list[TradeoffPoint]:
    """Train every (grid point, beam width, seed); results follow spec order."""
    work = list(spec.jobs())
    if jobs <= 1 or len(work) <= 1:
        return [_sweep_job(ds, spec, j) for j in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_worker, [(ds, spec, j) for j in work]))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def points_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for p in points:
        w.writerow([_fmt(p.lambda0), _fmt(p.lambda1), p.beam, p.seed, _fmt(p.complexity),
                    _fmt(p.train_acc), _fmt(p.test_acc), f"{p.seconds:.3f}"])
    return buf.getvalue()


def read_points_csv(text: str) -> list[TradeoffPoint]:
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for r in rows:
        def opt(key, cast):
            return cast(r[key]) if r[key] != "" else None
        out.append(TradeoffPoint(float(r["lambda0"]), float(r["lambda1"]), int(r["beam"]),
                                 int(r["seed"]), opt("complexity", int), opt("train_acc", float),
                                 opt("test_acc", float), float(r["seconds"])))
    return out


@dataclass(frozen=True)
class SummaryPoint:
    lambda0: float
    lambda1: float
    beam: int
    n: int
    complexity_mean: float
    complexity_se: float
    test_acc_mean: float
    test_acc_se: float


def _se(values) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def summarize(points) -> list[SummaryPoint]:
    """Mean and standard error across seeds per (lambda0, lambda1, beam)."""
    groups: dict[tuple, list[TradeoffPoint]] = {}
    for p in points:
        if not p.failed:
            groups.setdefault((p.lambda0, p.lambda1, p.beam), []).append(p)
    out = []
    for (l0, l1, beam), ps in groups.items():
        comp = [float(p.complexity) for p in ps]
        acc = [p.test_acc for p in ps]
        out.append(SummaryPoint(l0, l1, beam, len(ps), float(np.mean(comp)), _se(comp),
                                float(np.mean(acc)), _se(acc)))
    return out


def summary_csv(summary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda0", "lambda1", "beam", "n", "complexity_mean", "complexity_se",
                "test_acc_mean", "test_acc_se"])
    for s in summary:
        w.writerow([repr(s.lambda0), repr(s.lambda1), s.beam, s.n, repr(s.complexity_mean),
                    repr(s.complexity_se), repr(s.test_acc_mean), repr(s.test_acc_se)])
    return buf.getvalue()


def pareto_front(points):
    """Points not dominated in (lower complexity, higher accuracy), by complexity.

    ``points`` are ``(complexity, accuracy, ...)`` tuples.
    """
    pts = sorted(points, key=lambda p: (p[0], -p[1]))
    front = []
    for p in pts:
        dominated = any(q[0] <= p[0] and q[1] >= p[1] and (q[0] < p[0] or q[1] > p[1])
                        for q in pts)
        if not dominated and not any(q[0] == p[0] and q[1] == p[1] for q in front):
            front.append(p)
    return front


def _best_within(front, budget) -> float:
    accs = [p[1] for p in front if p[0] <= budget]
    return max(accs) if accs else -math.inf


def dominance_fraction(front_a, front_b) -> float:
    """Share of complexity budgets at which ``front_a`` is at least as accurate.

    Budgets are the complexities of both fronts; at each budget a front
    scores its best accuracy among points no more complex than the budget.
    """
    budgets = sorted({p[0] for p in front_a} | {p[0] for p in front_b})
    if not budgets:
        return 0.0
    wins = sum(_best_within(front_a, c) >= _best_within(front_b, c) for c in budgets)
    return wins / len(budgets)


def fronts_by_beam(summary) -> dict[int, list]:
    out = {}
    for beam in sorted({s.beam for s in summary}):
        pts = [(s.complexity_mean, s.test_acc_mean, s.test_acc_se) for s in summary
               if s.beam == beam]
        out[beam] = pareto_front(pts)
    return out


COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH, HEIGHT = 800, 600
MARGIN = dict(left=80, right=150, top=40, bottom=70)


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def render_svg(points) -> str:
    """Pareto plot (complexity vs. test accuracy), one polyline per beam width."""
    fronts = fronts_by_beam(summarize(points))
    allp = [p for f in fronts.values() for p in f]
    if allp:
        xlo, xhi = 0.0, max(p[0] for p in allp) * 1.05 or 1.0
        ylo = min(p[1] - p[2] for p in allp)
        yhi = max(p[1] + p[2] for p in allp)
    else:
        xlo, xhi, ylo, yhi = 0.0, 1.0, 0.0, 1.0
    pad = max((yhi - ylo) * 0.05, 0.005)
    ylo, yhi = max(ylo - pad, 0.0), min(yhi + pad, 1.0)
    if yhi <= ylo:
        ylo, yhi = max(ylo - 0.01, 0.0), ylo + 0.01
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + (v - xlo) / (xhi - xlo) * pw

    def sy(v):
        return MARGIN["top"] + (yhi - v) / (yhi - ylo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    x0, y0 = MARGIN["left"], MARGIN["top"] + ph
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + pw}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{MARGIN["top"]}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for t in _ticks(xlo, xhi):
        out.append(f'<line x1="{sx(t):.2f}" y1="{y0}" x2="{sx(t):.2f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{y0 + 20}" text-anchor="middle">{t:.1f}</text>')
    for t in _ticks(ylo, yhi):
        out.append(f'<line x1="{x0 - 5}" y1="{sy(t):.2f}" x2="{x0}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.3f}</text>')
    out.append(f'<text x="{x0 + pw / 2:.2f}" y="{HEIGHT - 20}" text-anchor="middle">complexity</text>')
    out.append(f'<text x="20" y="{MARGIN["top"] + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 20 {MARGIN["top"] + ph / 2:.2f})">test accuracy</text>')
    for k, (beam, front) in enumerate(fronts.items()):
        color = COLORS[k % len(COLORS)]
        coords = " ".join(f"{sx(p[0]):.2f},{sy(p[1]):.2f}" for p in front)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>')
        for c, acc, se in front:
            out.append(f'<line x1="{sx(c):.2f}" y1="{sy(acc - se):.2f}" x2="{sx(c):.2f}" '
                       f'y2="{sy(acc + se):.2f}" stroke="{color}"/>')
            out.append(f'<circle cx="{sx(c):.2f}" cy="{sy(acc):.2f}" r="3" fill="{color}"/>')
        ly = MARGIN["top"] + 20 * k
        lx = WIDTH - MARGIN["right"] + 20
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">B = {beam}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_sweep(args) -> int:
    ds = _load(args)
    l0s, l1s = _floats(args.lambda0), _floats(args.lambda1)
    if args.paired:
        if len(l0s) != len(l1s):
            raise UsageError("--paired needs equally long --lambda0 and --lambda1 lists")
        grid = tuple(zip(l0s.tolist(), l1s.tolist()))
    else:
        grid = tuple((a, b) for a in l0s.tolist() for b in l1s.tolist())
    spec = SweepSpec(grid, tuple(_ints(args.beams)), args.max_degree, tuple(_ints(args.seeds)),
                     args.test_fraction, args.time_limit, args.thresholds)
    jobs = args.jobs if args.jobs is not None else default_jobs()
    points = run_sweep(ds, spec, jobs)
    text = points_csv(points)
    _write(args.out, text)
    if args.summary:
        _write(args.summary, summary_csv(summarize(points)))
    if args.svg:
        _write(args.svg, render_svg(read_points_csv(text)))
    failed = sum(p.failed for p in points)
    if failed:
        print(f"{failed} of {len(points)} sweep points failed", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _data_args(p, label_required=True):
    p.add_argument("--data", required=label_required, help="CSV file with a header row")
    p.add_argument("--label", required=label_required, help="label column name")
    p.add_argument("--positive", help="label value mapped to 1 (default: labels are 0/1)")
    p.add_argument("--kinds", help="column kind overrides, e.g. zip=categorical,age=numeric")


def _binarize_args(p):
    p.add_argument("--thresholds", type=int, default=9, help="quantile thresholds per feature")
    p.add_argument("--no-complements", action="store_true",
                   help="emit only <= and == literals")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rulecg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("binarize", help="binarize a CSV and write the literal sidecar")
    _data_args(p)
    _binarize_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("train", help="train a Boolean rule set or a GLRM")
    _data_args(p)
    _binarize_args(p)
    p.add_argument("--algo", choices=["brcg", "glrm"], default="brcg")
    p.add_argument("--lambda0", type=float, default=1e-3)
    p.add_argument("--lambda1", type=float, default=1e-3)
    p.add_argument("--beam-width", type=int, default=5)
    p.add_argument("--max-degree", type=int, default=None,
                   help="degree cap (default 10 for brcg, 3 for glrm)")
    p.add_argument("--max-cg-iters", type=int, default=100)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--cnf", action="store_true", help="learn a CNF rule (brcg)")
    p.add_argument("--link", choices=[LOGIT, IDENTITY], default=LOGIT, help="glrm link")
    p.add_argument("--higher-degree-only", action="store_true",
                   help="list only rules of degree >= 2 (glrm)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=None,
                   help="hold out this fraction and report test accuracy")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--log", help="column-generation log (JSON lines)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="apply a saved model to a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", help="label column, if present, to report accuracy")
    p.add_argument("--positive")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", help="feature importances and GAM listings")
    p.add_argument("method", choices=["proto", "cem-pp", "cem-pn", "gam"])
    p.add_argument("--x", help="instance feature vector (comma-separated)")
    p.add_argument("--proto", help="prototype vector")
    p.add_argument("--pp", help="pertinent positive vector")
    p.add_argument("--pn", help="pertinent negative vector")
    p.add_argument("--sigma", help="per-feature standard deviations")
    p.add_argument("--zero-std-limit", action="store_true",
                   help="treat zero standard deviations by their limit instead of failing")
    p.add_argument("--model", help="glrm model JSON (gam)")
    p.add_argument("--higher-degree-only", action="store_true")
    p.add_argument("--plot-csv")
    p.add_argument("--plot-json")
    p.add_argument("--out", default="-")
    _data_args(p, label_required=False)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("metric", help="faithfulness or monotonicity of an explanation")
    p.add_argument("metric", choices=["faithfulness", "monotonicity"])
    p.add_argument("--x", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--base", help="base vector (default: feature means of --data)")
    p.add_argument("--model", help="saved model JSON")
    p.add_argument("--predictor-cmd",
                   help="command reading JSON vectors on stdin, writing probabilities")
    p.add_argument("--eps", type=float, default=1e-12)
    p.add_argument("--out", default="-")
    _data_args(p, label_required=False)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("ted", help="synthetic data with explanations")
    p.add_argument("action", choices=["generate", "config", "info"])
    p.add_argument("--config", help="config JSON (default: built-in retention config)")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ted)

    p = sub.add_parser("sweep", help="accuracy/complexity trade-off sweep")
    _data_args(p)
    p.add_argument("--thresholds", type=int, default=9)
    p.add_argument("--lambda0", default="1e-4,1e-3,1e-2")
    p.add_argument("--lambda1", default="1e-4,1e-3,1e-2")
    p.add_argument("--paired", action="store_true", help="zip the lambda lists instead of crossing")
    p.add_argument("--beams", default="1,3,5")
    p.add_argument("--max-degree", type=int, default=3)
    p.add_argument("--seeds", default="0")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--jobs", type=int, default=None,
                   help=f"parallel workers (default: ${JOBS_ENV} or the CPU count)")
    p.add_argument("--out", default="-", help="trade-off CSV")
    p.add_argument("--summary", help="per-configuration mean/standard-error CSV")
    p.add_argument("--svg", help="Pareto plot")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except xp.UndefinedMetricError as e:
        msg = str(e)
        print(msg if msg.startswith("undefined metric") else f"undefined metric: {msg}",
              file=sys.stderr)
        return EXIT_METRIC
    except (DataError, tedgen.ConfigError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, LpError) as e:
        print(f"training failed: {e}", file=sys.stderr)
        return EXIT_TRAINING
    except ValueError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
