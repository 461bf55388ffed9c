"""Boolean rule learning by column generation with beam-search pricing.

Each iteration solves the restricted master LP over the clause pool, turns
its duals into a pricing instance, and adds the clauses with negative
reduced cost that the beam search finds.  When pricing fails (or a cap is
hit) the 0/1 master over the final pool is solved by beam search as well.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .lp import LpSolution, build_master, solve, solve_final_ip_via_beam
from .rulemodel import CNF, DNF, Conjunction, RuleSet, predict
from .subproblem import FULL, PricingInstance, beam_search
from .tabular import BinarizedDataset, DataError

logger = logging.getLogger(__name__)

IMPROVE_TOL = -1e-6
MAX_ADD = 10


@dataclass(frozen=True)
class BrcgConfig:
    lambda0: float = 1e-3
    lambda1: float = 1e-3
    beam_width: int = 5
    max_degree: int = 10
    max_cg_iters: int = 100
    time_limit: float = 300.0
    cnf: bool = False
    seed: int = 0
    expansion: str = FULL
    prune: bool = False
    # None: positives weigh 1/n in the final 0/1 master, as in the LP.
    final_positive_weight: float | None = None

    def __post_init__(self):
        if self.lambda0 < 0 or self.lambda1 < 0:
            raise ValueError("lambda0 and lambda1 must be nonnegative")
        for name in ("beam_width", "max_degree", "max_cg_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass
class CgRecord:
    iteration: int
    lp_objective: float
    best_pricing_value: float
    clauses_added: list[list[int]]
    added_values: list[float]
    pool_size: int
    seconds: float


@dataclass
class CgLog:
    records: list[CgRecord] = field(default_factory=list)
    status: str = "running"
    final_lp_objective: float = float("nan")
    final_objective: float = float("nan")
    duals: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def lp_objectives(self) -> list[float]:
        return [r.lp_objective for r in self.records]

    def to_jsonl(self) -> str:
        lines = [json.dumps(asdict(r)) for r in self.records]
        lines.append(json.dumps({"status": self.status,
                                 "final_lp_objective": self.final_lp_objective,
                                 "final_objective": self.final_objective}))
        return "\n".join(lines) + "\n"


def pricing_from_duals(data: BinarizedDataset, duals, lambda0: float, lambda1: float,
                       max_degree: int) -> PricingInstance:
    """Pricing problem for the current duals of the positive-coverage rows.

    A clause covering positives ``Pc`` and negatives ``Zc`` has value
    ``|Zc|/n - sum_{i in Pc} mu_i + lambda0 + lambda1 * degree``.
    """
    duals = np.asarray(duals, dtype=float)
    pos = data.pos_idx
    if duals.shape != (len(pos),):
        raise ValueError(f"expected {len(pos)} duals, got shape {duals.shape}")
    w = np.full(data.n, 1.0 / data.n)
    w[pos] = -duals
    return PricingInstance(data.X, w, np.full(data.d, float(lambda1)), float(lambda0), max_degree)


def _final_objective(S, data, cfg, rs: RuleSet) -> float:
    lp = build_master(list(rs.clauses), data, cfg.lambda0, cfg.lambda1)
    return lp.binary_objective(range(lp.num_clauses))


def fit(data: BinarizedDataset, cfg: BrcgConfig = BrcgConfig()):
    """Learn a DNF (or CNF) rule set.  Returns ``(RuleSet, CgLog)``."""
    n_pos = int(data.labels.sum())
    if n_pos == 0 or n_pos == data.n:
        raise DataError("training requires at least one positive and one negative sample")
    work = data.with_labels(1 - data.labels) if cfg.cnf else data
    form = CNF if cfg.cnf else DNF
    log = CgLog()
    start = time.perf_counter()
    pool: list[Conjunction] = []
    in_pool: set[Conjunction] = set()
    n_add = min(cfg.beam_width, MAX_ADD)
    sol: LpSolution | None = None

    for it in range(cfg.max_cg_iters):
        lp = build_master(pool, work, cfg.lambda0, cfg.lambda1)
        sol = solve(lp)
        log.duals.append(sol.duals)
        inst = pricing_from_duals(work, sol.duals, cfg.lambda0, cfg.lambda1, cfg.max_degree)
        res = beam_search(inst, cfg.beam_width, expansion=cfg.expansion, prune=cfg.prune)
        new = [(c, v) for c, v in res.candidates if v < IMPROVE_TOL and c not in in_pool][:n_add]
        log.records.append(CgRecord(it, sol.objective, res.value,
                                    [list(c.literals) for c, _ in new], [v for _, v in new],
                                    len(pool), time.perf_counter() - start))
        logger.debug("cg iter %d: lp %.6g, pricing %.3g, +%d", it, sol.objective, res.value, len(new))
        if not new:
            log.status = "converged"
            break
        for c, _ in new:
            pool.append(c)
            in_pool.add(c)
        if time.perf_counter() - start > cfg.time_limit:
            log.status = "time_limit"
            break
    else:
        log.status = "max_iters"

    if log.status != "converged":
        lp = build_master(pool, work, cfg.lambda0, cfg.lambda1)
        sol = solve(lp)
    log.final_lp_objective = sol.objective if sol is not None else float("nan")
    rs = solve_final_ip_via_beam(pool, work, cfg.lambda0, cfg.lambda1, cfg.beam_width,
                                 cfg.expansion, cfg.final_positive_weight, form=form,
                                 lp_solution=sol)
    log.final_objective = _final_objective(pool, work, cfg, rs)
    return rs, log


class BooleanRuleCG:
    """Estimator-style wrapper around :func:`fit`."""

    def __init__(self, config: BrcgConfig | None = None, **kwargs):
        self.config = config if config is not None else BrcgConfig(**kwargs)
        self.rules_: RuleSet | None = None
        self.log_: CgLog | None = None

    def fit(self, data: BinarizedDataset) -> "BooleanRuleCG":
        self.rules_, self.log_ = fit(data, self.config)
        return self

    def predict(self, data) -> np.ndarray:
        if self.rules_ is None:
            raise RuntimeError("model is not fitted")
        return predict(self.rules_, data)
