"""Weighted-conjunction minimization and its beam-search / brute-force solvers.

A :class:`PricingInstance` asks for a conjunction ``c`` of columns minimizing

    sum_i weights[i] * cover_i(c) + fixed_cost + sum_{j in c} col_penalty[j]

where ``cover_i(c) = prod_{j in c} A[i, j]``.  The BRCG pricing problem, the
restricted integer master and GLRM column generation are all instances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .rulemodel import Conjunction

ENUMERATION_BUDGET = 10**6

CANONICAL = "canonical"
FULL = "full"


@dataclass(frozen=True)
class PricingInstance:
    A: np.ndarray
    weights: np.ndarray
    col_penalty: np.ndarray
    fixed_cost: float = 0.0
    degree_cap: int = 1
    _AT: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=bool)
        w = np.ascontiguousarray(self.weights, dtype=float)
        pen = np.ascontiguousarray(self.col_penalty, dtype=float)
        if A.ndim != 2:
            raise ValueError("A must be a 2-d matrix")
        n, m = A.shape
        if w.shape != (n,):
            raise ValueError(f"weights have shape {w.shape}, expected ({n},)")
        if pen.shape != (m,):
            raise ValueError(f"col_penalty has shape {pen.shape}, expected ({m},)")
        if np.any(pen < 0) or self.fixed_cost < 0:
            raise ValueError("penalties must be nonnegative")
        if self.degree_cap < 1:
            raise ValueError("degree_cap must be >= 1")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "col_penalty", pen)
        object.__setattr__(self, "fixed_cost", float(self.fixed_cost))
        object.__setattr__(self, "_AT", np.ascontiguousarray(A.T))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    def baseline(self) -> float:
        """Value of covering every sample with no column cost."""
        return float(_loss(self.weights, np.ones((1, self.n), dtype=bool))[0]) + self.fixed_cost

    def to_json(self) -> dict:
        return {
            "A": self.A.astype(int).tolist(),
            "weights": [float.hex(float(v)) for v in self.weights],
            "col_penalty": [float.hex(float(v)) for v in self.col_penalty],
            "fixed_cost": float.hex(self.fixed_cost),
            "degree_cap": self.degree_cap,
        }

    @classmethod
    def from_json(cls, obj) -> "PricingInstance":
        return cls(np.array(obj["A"], dtype=bool),
                   np.array([float.fromhex(v) for v in obj["weights"]]),
                   np.array([float.fromhex(v) for v in obj["col_penalty"]]),
                   float.fromhex(obj["fixed_cost"]), int(obj["degree_cap"]))


def _loss(weights: np.ndarray, cov_rows: np.ndarray) -> np.ndarray:
    # Row-wise reduction over a contiguous axis: the same summation order is
    # used for one row or many, which keeps beam values bit-identical to
    # evaluate_objective.
    return np.where(cov_rows, weights, 0.0).sum(axis=1)


def _penalty(inst: PricingInstance, literals) -> float:
    return math.fsum(inst.col_penalty[j] for j in literals)


def _values(inst: PricingInstance, cov_rows: np.ndarray, penalties: np.ndarray) -> np.ndarray:
    return (_loss(inst.weights, cov_rows) + inst.fixed_cost) + penalties


def coverage(inst: PricingInstance, c: Conjunction) -> np.ndarray:
    if c.literals[-1] >= inst.m:
        raise IndexError(f"literal {c.literals[-1]} out of range for {inst.m} columns")
    return np.all(inst._AT[list(c.literals)], axis=0)


def evaluate_objective(inst: PricingInstance, c: Conjunction) -> float:
    if c.degree > inst.degree_cap:
        raise ValueError(f"degree {c.degree} exceeds cap {inst.degree_cap}")
    cov = coverage(inst, c)[None, :]
    return float(_values(inst, cov, np.array([_penalty(inst, c.literals)]))[0])


@dataclass(frozen=True)
class BeamResult:
    best: Conjunction
    value: float
    candidates: tuple[tuple[Conjunction, float], ...]
    evaluated: int = 0


def _key(value: float, lits: tuple[int, ...]):
    return (value, len(lits), lits)


def _top(entries, k):
    entries.sort(key=lambda e: _key(e[1], e[0]))
    return entries[:k]


def _retain(lits, scores, k):
    order = sorted(range(len(lits)), key=lambda i: (scores[i], len(lits[i]), lits[i]))
    return order[:k]


def beam_search(inst: PricingInstance, beam_width: int = 5, expansion: str = FULL,
                prune: bool = False, lb_weight: float = 0.0) -> BeamResult:
    """Levelwise beam search over conjunctions up to ``inst.degree_cap``.

    Level 1 evaluates every single column.  Each later level extends every
    beam member by one more column (``canonical``: only columns with a larger
    index than the member's largest; ``full``: any unused column, duplicates
    merged), evaluates the whole level, and keeps ``beam_width`` members.
    Members are ranked by ``(1 - lb_weight) * value + lb_weight * bound``
    where ``bound`` is the value the conjunction would reach if an extension
    kept all of its negative-weight coverage and shed the rest; with
    ``lb_weight=0`` the beam keeps the lowest-value conjunctions.

    The best conjunction seen at any level is returned, together with the
    overall ``beam_width`` best by exact value.  Ties go to lower degree,
    then to the lexicographically smaller index tuple.

    With ``prune`` a member is not extended when even its most favourable
    extension (all negative-weight coverage kept, cheapest extra column)
    would be worse than the incumbent.
    """
    if not 0.0 <= lb_weight <= 1.0:
        raise ValueError("lb_weight must lie in [0, 1]")
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if expansion not in (CANONICAL, FULL):
        raise ValueError(f"unknown expansion mode {expansion!r}")
    m = inst.m
    if m < 1:
        raise ValueError("instance has no columns")
    AT = inst._AT
    neg_w = np.minimum(inst.weights, 0.0)

    def score(covs, pens, vals):
        if lb_weight == 0.0:
            return vals
        bound = (_loss(neg_w, covs) + inst.fixed_cost) + pens
        return (1.0 - lb_weight) * vals + lb_weight * bound

    lits = [(j,) for j in range(m)]
    pens = inst.col_penalty.copy()
    covs = AT
    vals = _values(inst, covs, pens)
    evaluated = m
    best_all = _top(list(zip(lits, vals.tolist())), beam_width)
    keep = _retain(lits, score(covs, pens, vals).tolist(), beam_width)
    beam = [lits[k] for k in keep]
    beam_covs = covs[keep]
    beam_pens = pens[keep]

    for _depth in range(2, inst.degree_cap + 1):
        incumbent = best_all[0][1]
        cand_lits, parents, extra = [], [], []
        seen = set()
        for b, mlits in enumerate(beam):
            start = mlits[-1] + 1 if expansion == CANONICAL else 0
            rest = [j for j in range(start, m) if j not in mlits]
            if prune:
                lb = float(_loss(neg_w, beam_covs[b:b + 1])[0]) + inst.fixed_cost \
                    + float(beam_pens[b])
                if not rest or lb + float(inst.col_penalty[rest].min()) > incumbent:
                    continue
            for j in rest:
                new = tuple(sorted(mlits + (j,)))
                if new in seen:
                    continue
                seen.add(new)
                cand_lits.append(new)
                parents.append(b)
                extra.append(j)
        if not cand_lits:
            break
        covs = beam_covs[parents] & AT[extra]
        pens = np.array([_penalty(inst, l) for l in cand_lits])
        vals = _values(inst, covs, pens)
        evaluated += len(cand_lits)
        best_all = _top(best_all + list(zip(cand_lits, vals.tolist())), beam_width)
        keep = _retain(cand_lits, score(covs, pens, vals).tolist(), beam_width)
        beam = [cand_lits[k] for k in keep]
        beam_covs = covs[keep]
        beam_pens = pens[keep]

    cands = tuple((Conjunction(l), v) for l, v in best_all)
    return BeamResult(cands[0][0], cands[0][1], cands, evaluated)


def count_conjunctions(m: int, degree_cap: int) -> int:
    return sum(comb(m, d) for d in range(1, min(degree_cap, m) + 1))


def iter_conjunctions(m: int, degree_cap: int):
    for d in range(1, min(degree_cap, m) + 1):
        yield from itertools.combinations(range(m), d)


def brute_force(inst: PricingInstance, budget: int = ENUMERATION_BUDGET):
    """Exact minimizer over all nonempty conjunctions of degree <= cap.

    Returns ``(conjunction, value)`` with the same tie-break as
    :func:`beam_search`.
    """
    total = count_conjunctions(inst.m, inst.degree_cap)
    if total > budget:
        raise ValueError(f"{total} conjunctions exceed the enumeration budget {budget}")
    best = None
    for d in range(1, min(inst.degree_cap, inst.m) + 1):
        combos = list(itertools.combinations(range(inst.m), d))
        for start in range(0, len(combos), 4096):
            chunk = combos[start:start + 4096]
            covs = np.all(inst._AT[np.array(chunk)], axis=1)
            pens = np.array([_penalty(inst, l) for l in chunk])
            vals = _values(inst, covs, pens)
            for l, v in zip(chunk, vals.tolist()):
                if best is None or _key(v, l) < _key(best[1], best[0]):
                    best = (l, v)
    return Conjunction(best[0]), best[1]
