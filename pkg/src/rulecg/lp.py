"""Restricted master problem of Boolean rule column generation.

The master chooses clause weights ``w`` and false-negative slacks ``xi``::

    min  (1/n) sum_{i in P} xi_i + sum_k (c_k + (1/n) sum_{i in Z} b_ik) w_k
    s.t. xi_i + sum_k b_ik w_k >= 1,   i in P
         xi, w >= 0            (LP relaxation; w binary in the final step)

:func:`solve` is a dense revised simplex.  It prices by most negative
reduced cost and falls back to Bland's rule after a run of degenerate
pivots, so it cannot cycle; there is no randomization, so solutions (and
the dual multipliers ``mu`` used for pricing) are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .rulemodel import DNF, Conjunction, RuleSet, finalize
from .subproblem import FULL, PricingInstance, beam_search, evaluate_objective
from .tabular import BinarizedDataset

FEAS_TOL = 1e-9
COST_TOL = 1e-12
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
# consecutive degenerate pivots before switching to Bland's rule
STALL_LIMIT = 50


class LpError(RuntimeError):
    """Simplex failed to reach an optimal basis (numerical fault)."""


@dataclass(frozen=True)
class MasterLp:
    coverage: np.ndarray        # n x K, coverage[i, k] = b_ik
    clause_costs: np.ndarray    # c_k = lambda0 + lambda1 * degree
    neg_coverage_cost: np.ndarray
    n: int
    pos_idx: np.ndarray
    neg_idx: np.ndarray
    clauses: tuple[Conjunction, ...] = ()

    @property
    def num_clauses(self) -> int:
        return self.coverage.shape[1]

    @property
    def column_costs(self) -> np.ndarray:
        return self.clause_costs + self.neg_coverage_cost

    @property
    def pos_coverage(self) -> np.ndarray:
        return self.coverage[self.pos_idx]

    def objective(self, w, xi) -> float:
        return float(np.sum(xi) / self.n + self.column_costs @ np.asarray(w, dtype=float))

    def binary_objective(self, selected) -> float:
        """Master objective of a 0/1 clause selection with the induced slacks."""
        sel = np.zeros(self.num_clauses)
        sel[list(selected)] = 1.0
        covered = (self.pos_coverage @ sel) >= 1.0 if self.num_clauses else np.zeros(len(self.pos_idx), bool)
        return self.objective(sel, (~covered).astype(float))


def build_master(S: Sequence[Conjunction], data: BinarizedDataset, lambda0: float,
                 lambda1: float) -> MasterLp:
    if lambda0 < 0 or lambda1 < 0:
        raise ValueError("complexity costs must be nonnegative")
    n = data.n
    for c in S:
        if c.literals[-1] >= data.d:
            raise ValueError(f"clause {c} references literals absent from the data")
    if S:
        cov = np.column_stack([c.coverage(data.X) for c in S])
    else:
        cov = np.zeros((n, 0), dtype=bool)
    costs = np.array([lambda0 + lambda1 * c.degree for c in S], dtype=float)
    neg = cov[data.neg_idx].sum(axis=0) / n if S else np.zeros(0)
    return MasterLp(cov, costs, np.asarray(neg, dtype=float), n, data.pos_idx, data.neg_idx,
                    tuple(S))


@dataclass(frozen=True)
class LpSolution:
    w: np.ndarray
    xi: np.ndarray
    objective: float
    duals: np.ndarray
    basis: tuple[tuple[str, int], ...]
    iterations: int

    @property
    def dual_objective(self) -> float:
        return float(np.sum(self.duals))


def _standard_form(cov: np.ndarray, col_costs: np.ndarray, slack_costs: np.ndarray):
    p, K = cov.shape
    M = np.hstack([cov.astype(float), np.eye(p), -np.eye(p)])
    c = np.concatenate([col_costs, slack_costs, np.zeros(p)])
    keys = [("w", k) for k in range(K)] + [("xi", i) for i in range(p)] + [("s", i) for i in range(p)]
    return M, c, keys


def _simplex(M, c, basis, max_iter):
    """Primal revised simplex from a feasible basis for ``M x = 1, x >= 0``."""
    p = M.shape[0]
    b = np.ones(p)
    basis = list(basis)
    Binv = np.linalg.inv(M[:, basis])
    xB = Binv @ b
    since_refactor = 0
    stalled = 0
    for it in range(max_iter):
        if since_refactor >= REFACTOR_EVERY:
            Binv = np.linalg.inv(M[:, basis])
            xB = Binv @ b
            since_refactor = 0
        y = c[basis] @ Binv
        d = c - y @ M
        d[basis] = 0.0
        candidates = np.flatnonzero(d < -COST_TOL)
        if len(candidates) == 0:
            if since_refactor:
                # confirm optimality on a fresh factorization
                Binv = np.linalg.inv(M[:, basis])
                xB = Binv @ b
                since_refactor = 0
                y = c[basis] @ Binv
                d = c - y @ M
                d[basis] = 0.0
                if np.any(d < -COST_TOL):
                    continue
            return basis, Binv, xB, it
        bland = stalled >= STALL_LIMIT
        if bland:
            q = int(candidates[0])                  # lowest index enters
        else:
            q = int(candidates[np.argmin(d[candidates])])
        u = Binv @ M[:, q]
        pos = np.flatnonzero(u > PIVOT_TOL)
        if len(pos) == 0:
            raise LpError("LP reported unbounded; the master LP is always bounded")
        ratios = np.maximum(xB[pos], 0.0) / u[pos]
        tmin = ratios.min()
        ties = pos[ratios <= tmin + 1e-12 * max(1.0, tmin)]
        if bland:
            r = int(min(ties, key=lambda i: basis[i]))  # lowest basic index leaves
        else:
            r = int(ties[np.argmax(u[ties])])
        theta = max(xB[r], 0.0) / u[r]
        stalled = stalled + 1 if theta <= FEAS_TOL else 0
        xB = xB - theta * u
        xB[r] = theta
        piv = Binv[r] / u[r]
        Binv = Binv - np.outer(u, piv)
        Binv[r] = piv
        basis[r] = q
        since_refactor += 1
    raise LpError(f"simplex did not converge within {max_iter} iterations")


def solve(lp: MasterLp, warm_basis: Sequence[tuple[str, int]] | None = None,
          aggregate: bool = True, max_iter: int = 100_000) -> LpSolution:
    """Solve the LP relaxation.

    With ``aggregate`` positives sharing a coverage pattern are merged into
    one row whose slack costs ``multiplicity / n``; per-sample duals are the
    group dual split evenly.  ``warm_basis`` (a previous solution's basis)
    is only honoured without aggregation.
    """
    p = len(lp.pos_idx)
    K = lp.num_clauses
    if p == 0:
        return LpSolution(np.zeros(K), np.zeros(0), 0.0, np.zeros(0), (), 0)
    cov = lp.pos_coverage
    if aggregate:
        rows, group, mult = np.unique(cov, axis=0, return_inverse=True, return_counts=True)
        group = group.reshape(-1)
        if K == 0:
            rows = np.zeros((1, 0), dtype=bool)
    else:
        rows, group, mult = cov, np.arange(p), np.ones(p, dtype=int)
    g = rows.shape[0]
    M, c, keys = _standard_form(rows, lp.column_costs, mult / lp.n)

    basis = list(range(K, K + g))
    if warm_basis is not None and not aggregate:
        index = {k: j for j, k in enumerate(keys)}
        cand = [index.get(tuple(k)) for k in warm_basis]
        if len(cand) == g and None not in cand and len(set(cand)) == g:
            try:
                if np.all(np.linalg.solve(M[:, cand], np.ones(g)) >= -FEAS_TOL):
                    basis = cand
            except np.linalg.LinAlgError:
                pass
    basis, Binv, xB, iters = _simplex(M, c, basis, max_iter)

    if np.any(xB < -FEAS_TOL):
        raise LpError("final basis is primal infeasible")
    x = np.zeros(M.shape[1])
    x[basis] = np.maximum(xB, 0.0)
    y = c[basis] @ Binv
    mu = y[group] / mult[group]
    inv_n = 1.0 / lp.n
    mu[mu < 0.0] = 0.0
    # snap values within rounding of the box bound 1/n onto it
    mu[np.abs(mu - inv_n) <= 1e-12 * inv_n] = inv_n
    w = x[:K]
    xi = x[K:K + g][group]
    obj = float(lp.column_costs @ w + np.sum(xi) / lp.n)
    return LpSolution(w, xi, obj, mu, tuple(keys[j] for j in basis), iters)


def restricted_ip_instance(lp: MasterLp, positive_weight: float | None = None) -> PricingInstance:
    """The restricted 0/1 master as a weighted-conjunction instance.

    Columns are the clauses of ``S``; a positive sample stays "uncovered by
    the rule" while every selected clause misses it, so its consistency
    entry is ``1 - b_ik``.  Each positive carries weight ``1/n`` (the
    master's loss scaling) unless ``positive_weight`` overrides it.
    """
    wpos = 1.0 / lp.n if positive_weight is None else positive_weight
    A = ~lp.pos_coverage
    weights = np.full(len(lp.pos_idx), wpos)
    return PricingInstance(A, weights, lp.column_costs, 0.0, max(lp.num_clauses, 1))


def solve_final_ip_via_beam(S: Sequence[Conjunction], data: BinarizedDataset, lambda0: float,
                            lambda1: float, beam_width: int = 5, expansion: str = FULL,
                            positive_weight: float | None = None, prune: bool = True,
                            form: str = DNF, lp_solution: LpSolution | None = None) -> RuleSet:
    """Pick a 0/1 subset of ``S`` by beam search.

    The empty selection is always considered.  When the LP solution over
    ``S`` is supplied, its support and its 1/2-rounding are scored too; the
    lowest-objective selection wins (ties favour fewer clauses).
    """
    if not S:
        return RuleSet((), form, data.descriptors)
    lp = build_master(S, data, lambda0, lambda1)
    inst = restricted_ip_instance(lp, positive_weight)
    res = beam_search(inst, beam_width, expansion=expansion, prune=prune)
    options = [(inst.baseline(), ())]
    options.append((res.value, res.best.literals))
    if lp_solution is not None and len(lp_solution.w) == len(S):
        for sel in (np.flatnonzero(lp_solution.w > FEAS_TOL), np.flatnonzero(lp_solution.w >= 0.5)):
            if len(sel):
                c = Conjunction(tuple(sel.tolist()))
                options.append((evaluate_objective(inst, c), c.literals))
    value, chosen = min(options, key=lambda o: (o[0], len(o[1]), o[1]))
    return finalize([S[k] for k in chosen], data.X, form, data.descriptors)
