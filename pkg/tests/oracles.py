"""Independent reference implementations used as test oracles.

Nothing here calls into the package's solvers: LPs are solved by exhaustive
vertex enumeration, 0/1 masters by subset enumeration, and correlations by
the textbook two-pass formula.
"""

import itertools
import math

import numpy as np

from rulecg.tabular import NUMERIC, TabularDataset


def vertex_lp_min(c, A, b, tol=1e-9):
    """min c.x  s.t.  A x >= b, x >= 0, by enumerating all basic solutions.

    Returns ``(value, x)``.  Only for tiny problems.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    m, nv = A.shape
    # every constraint as a row of G x >= h
    G = np.vstack([A, np.eye(nv)])
    h = np.concatenate([b, np.zeros(nv)])
    best = (math.inf, None)
    for rows in itertools.combinations(range(m + nv), nv):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x >= h - tol):
            v = float(c @ x)
            if v < best[0] - 1e-12:
                best = (v, x)
    return best


def master_lp_oracle(pos_cov, col_costs, n):
    """Primal and dual optimum of the restricted master by vertex enumeration.

    Primal variables are ``[w, xi]``; the dual is ``max sum mu`` subject to
    ``pos_cov.T mu <= col_costs``, ``mu <= 1/n``, ``mu >= 0``.
    """
    pos_cov = np.asarray(pos_cov, float)
    p, K = pos_cov.shape
    A = np.hstack([pos_cov, np.eye(p)])
    c = np.concatenate([col_costs, np.full(p, 1.0 / n)])
    primal, x = vertex_lp_min(c, A, np.ones(p))
    # dual as a minimization: min -sum mu  s.t.  -[pos_cov.T; I] mu >= -[costs; 1/n]
    D = -np.vstack([pos_cov.T, np.eye(p)])
    e = -np.concatenate([col_costs, np.full(p, 1.0 / n)])
    neg_dual, mu = vertex_lp_min(-np.ones(p), D, e)
    return primal, x, -neg_dual, mu


def best_subset(pos_cov, col_costs, n):
    """Exact 0/1 restricted master: min over all clause subsets (empty included)."""
    pos_cov = np.asarray(pos_cov, bool)
    p, K = pos_cov.shape
    best = (p / n, ())
    for r in range(1, K + 1):
        for sub in itertools.combinations(range(K), r):
            covered = pos_cov[:, list(sub)].any(axis=1)
            v = float(np.sum(~covered)) / n + float(sum(col_costs[k] for k in sub))
            if v < best[0] - 1e-15:
                best = (v, sub)
    return best


def pearson_two_pass(a, b):
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    n = len(a)
    ma = sum(a) / n
    mb = sum(b) / n
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    return sab / math.sqrt(saa * sbb)


def planted_dataset(n=500, d=10, seed=0, clauses=((0, 1), (2, 3))):
    """Binary features labeled by a planted DNF over "feature == 1" literals."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n, d))
    labels = np.zeros(n, dtype=np.int8)
    for c in clauses:
        labels |= np.all(bits[:, list(c)] == 1, axis=1).astype(np.int8)
    names = tuple(f"f{j}" for j in range(d))
    cols = tuple(bits[:, j].astype(float) for j in range(d))
    return TabularDataset(names, (NUMERIC,) * d, cols, labels)


def random_binary_dataset(rng, n=None, d=None):
    n = n or int(rng.integers(8, 30))
    d = d or int(rng.integers(2, 5))
    while True:
        bits = rng.integers(0, 2, size=(n, d))
        labels = rng.integers(0, 2, size=n).astype(np.int8)
        if 0 < labels.sum() < n and all(0 < bits[:, j].sum() < n for j in range(d)):
            break
    cols = tuple(bits[:, j].astype(float) for j in range(d))
    return TabularDataset(tuple(f"b{j}" for j in range(d)), (NUMERIC,) * d, cols, labels)
