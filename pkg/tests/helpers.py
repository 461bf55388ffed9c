"""Random problem generators and checks shared by several test modules."""

import numpy as np
import pytest

from rulecg.glrm import IDENTITY, LOGIT, GlrmConfig, _loss
from rulecg.lp import build_master
from rulecg.rulemodel import Conjunction
from oracles import master_lp_oracle
from rulecg.tabular import BinarizedDataset, NUMERIC, TabularDataset, binarize


def bin_data(X, labels):
    X = np.asarray(X, bool)
    return BinarizedDataset(X, (), np.asarray(labels, np.int8),
                            tuple(f"b{j}" for j in range(X.shape[1])), (NUMERIC,) * X.shape[1])


def random_master(rng, max_vars=8):
    """A restricted master with |S| + |P| <= max_vars."""
    while True:
        n = int(rng.integers(3, 10))
        d = int(rng.integers(2, 6))
        X = rng.random((n, d)) < 0.5
        y = (rng.random(n) < 0.5).astype(np.int8)
        p = int(y.sum())
        if 1 <= p and p < max_vars:
            break
    K = int(rng.integers(0, max_vars - p + 1))
    S = {Conjunction(tuple(sorted(rng.choice(d, size=int(rng.integers(1, 3)), replace=False))))
         for _ in range(K)}
    data = bin_data(X, y)
    lam0, lam1 = (float(v) for v in rng.choice([0.0, 0.01, 0.05, 0.2], size=2))
    return build_master(sorted(S), data, lam0, lam1), data, (lam0, lam1)


def check_lp(lp, sol):
    primal, _, dual, _ = master_lp_oracle(lp.pos_coverage, lp.column_costs, lp.n)
    assert sol.objective == pytest.approx(primal, abs=1e-7)
    assert sol.dual_objective == pytest.approx(dual, abs=1e-7)
    assert sol.objective == pytest.approx(sol.dual_objective, abs=1e-7)
    mu = sol.duals
    assert np.all(mu >= 0) and np.all(mu <= 1 / lp.n + 1e-9)
    cov = lp.pos_coverage.astype(float)
    # feasibility of primal and dual
    assert np.all(sol.xi + cov @ sol.w >= 1 - 1e-9)
    assert np.all(cov.T @ mu <= lp.column_costs + 1e-9)
    # complementary slackness
    assert np.all(np.abs(mu * (sol.xi + cov @ sol.w - 1)) <= 1e-7)
    assert np.all(np.abs(sol.w * (lp.column_costs - cov.T @ mu)) <= 1e-7)
    assert np.all(np.abs(sol.xi * (1 / lp.n - mu)) <= 1e-7)


def numeric_ds(cols, labels=None):
    n = len(cols[0])
    labels = np.zeros(n, np.int8) if labels is None else np.asarray(labels, np.int8)
    return TabularDataset(tuple(f"x{j}" for j in range(len(cols))), (NUMERIC,) * len(cols),
                          tuple(np.asarray(c, float) for c in cols), labels)


def design(fit, data):
    """Rebuild the fitted design matrix (rule columns, then standardized linear columns)."""
    cols = [c.coverage(data.X).astype(float) for c in fit.pool]
    model = fit.model
    for j in fit.linear_features:
        k = data.numeric_features.index(j)
        x = data.numeric[:, k]
        m = float(np.mean(x))
        cols.append((x - m) / float(np.sqrt(np.mean((x - m) ** 2))))
    Z = np.column_stack(cols) if cols else np.zeros((data.n, 0))
    coefs = np.concatenate([fit.rule_coefs, fit.linear_coefs])
    pen = np.array([model.lambda0 + model.lambda1 * c.degree for c in fit.pool]
                   + [model.lambda1] * len(fit.linear_features))
    return Z, coefs, pen


def random_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(40, 120))
    cols = [rng.normal(size=n), rng.integers(0, 4, size=n).astype(float), rng.uniform(0, 10, n),
            np.full(n, 3.0)]
    s = 1.5 * (cols[0] > 0.3) - (cols[1] <= 1) * (cols[2] > 5) + 0.2 * cols[2]
    link = LOGIT if seed % 2 else IDENTITY
    if link == LOGIT:
        y = (rng.random(n) < 1 / (1 + np.exp(-(s - s.mean())))).astype(np.int8)
        target = None
    else:
        y = None
        target = s + 0.3 * rng.normal(size=n)
    data = binarize(numeric_ds(cols, y), num_thresholds=int(rng.integers(2, 6)))
    cfg = GlrmConfig(lambda0=float(rng.choice([1e-3, 5e-3])), lambda1=float(rng.choice([1e-3, 1e-2])),
                     beam_width=3, max_degree=2, link=link)
    return data, cfg, target


def check_kkt_and_gradients(fit, data, target):
    model = fit.model
    y = np.asarray(data.labels if target is None else target, float)
    Z, coefs, pen = design(fit, data)
    b0 = model.intercept

    def loss(c, b):
        return _loss(model.link, y, b + Z @ c)

    s = b0 + Z @ coefs
    mu = s if model.link == IDENTITY else 1 / (1 + np.exp(-s))
    grad = Z.T @ ((mu - y) / len(y))
    g0 = float(np.mean(mu - y))
    zero = coefs == 0
    assert abs(g0) <= 1e-5
    assert np.all(np.abs(grad[zero]) <= pen[zero] + 1e-5)
    assert np.all(np.abs(grad[~zero] + pen[~zero] * np.sign(coefs[~zero])) <= 1e-5)
    # central finite differences, step 1e-6
    h = 1e-6
    for k in range(len(coefs)):
        e = np.zeros_like(coefs)
        e[k] = h
        fd = (loss(coefs + e, b0) - loss(coefs - e, b0)) / (2 * h)
        assert fd == pytest.approx(grad[k], rel=1e-4, abs=1e-8)
    fd0 = (loss(coefs, b0 + h) - loss(coefs, b0 - h)) / (2 * h)
    assert fd0 == pytest.approx(g0, rel=1e-4, abs=1e-8)
