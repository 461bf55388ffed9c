import json

import numpy as np
import pytest

from helpers import check_kkt_and_gradients, numeric_ds, random_problem
from rulecg.glrm import (IDENTITY, LOGIT, GlrmConfig, GlrmModel, LinearTerm,
                         decompose_gam, explain_text, export_plot_data, fit_glrm, gam_score,
                         penalized_objective, plot_csv, plot_json, train_glrm)
from rulecg.rulemodel import Conjunction
from rulecg.tabular import (CATEGORICAL, LE, NUMERIC, DataError, LiteralDescriptor,
                            TabularDataset, apply_descriptors, binarize)


class TestFit:
    def test_planted_indicator(self):
        x = np.repeat(np.arange(1.0, 7.0), 10)
        data = binarize(numeric_ds([x]), num_thresholds=5, include_complements=False)
        target = 2.0 * (x <= 3)
        cfg = GlrmConfig(lambda0=1e-6, lambda1=1e-6, link=IDENTITY, linear_terms=False)
        model = fit_glrm(data, cfg, target)
        assert len(model.rule_terms) == 1
        (c, coef), = model.rule_terms
        assert model.descriptors[c.literals[0]].value == 3.5
        assert coef == pytest.approx(2.0, abs=1e-3)
        assert model.intercept == pytest.approx(0.0, abs=1e-3)

    def test_constant_target(self):
        data = binarize(numeric_ds([np.arange(10.0)]), num_thresholds=3)
        fit = train_glrm(data, GlrmConfig(link=IDENTITY), np.full(10, 4.25))
        assert fit.status == "constant_target"
        assert fit.model.intercept == 4.25
        assert fit.model.rule_terms == () and fit.model.linear_terms == ()

    def test_separable_logit_stays_bounded(self):
        x = np.tile([0.0, 1.0], 20)
        # without complements: x <= 0.5 and x > 0.5 would split the L1 mass between them
        data = binarize(numeric_ds([x], labels=x), num_thresholds=1, include_complements=False)
        cfg = GlrmConfig(lambda0=0.0, lambda1=0.1, link=LOGIT, linear_terms=False)
        fit = train_glrm(data, cfg)
        assert len(fit.model.rule_terms) == 1
        coef = fit.model.rule_terms[0][1]
        assert np.isfinite(coef)
        # penalty alone cannot exceed the objective of the intercept-only model
        assert 0.1 * abs(coef) <= np.log(2)
        objs = fit.objectives
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))

    def test_logit_rejects_real_labels(self):
        data = binarize(numeric_ds([np.arange(4.0)], labels=[0, 1, 0, 1]), num_thresholds=1)
        with pytest.raises(DataError, match="0/1"):
            fit_glrm(data, GlrmConfig(link=LOGIT), target=[0.5, 1, 0, 1])

    def test_logit_single_class(self):
        data = binarize(numeric_ds([np.arange(4.0)], labels=[1, 1, 1, 1]), num_thresholds=1)
        with pytest.raises(DataError, match="both classes"):
            fit_glrm(data, GlrmConfig(link=LOGIT))

    @pytest.mark.parametrize("seed", range(6))
    def test_optimality_conditions(self, seed):
        data, cfg, target = random_problem(seed)
        fit = train_glrm(data, cfg, target)
        assert fit.status == "converged"
        check_kkt_and_gradients(fit, data, target)
        objs = fit.objectives
        assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))
        assert penalized_objective(fit.model, data, target) == pytest.approx(objs[-1], abs=1e-12)

    def test_json_round_trip(self):
        data, cfg, target = random_problem(1)
        model = fit_glrm(data, cfg, target)
        again = GlrmModel.from_json(json.loads(model.dumps()))
        assert again == model
        assert np.array_equal(again.score(data), model.score(data))


class TestDecompose:
    def single_feature(self, values, steps, linear=()):
        ds = numeric_ds([values])
        desc = tuple(LiteralDescriptor(0, "x0", LE, t) for t in steps)
        data = apply_descriptors(ds, desc)
        terms = tuple((Conjunction.of(k), b) for k, b in enumerate([1.5] * len(steps)))
        return data, GlrmModel(IDENTITY, 0.0, terms, tuple(linear), 0.0, 0.0, desc, ("x0",),
                               (NUMERIC,), ((float(min(values)), float(max(values))),))

    def test_single_step_variance(self):
        data, model = self.single_feature([1.0, 3.0], [2.0])
        gam = decompose_gam(model, data)
        assert gam.functions[0]([1.0, 3.0]).tolist() == [1.5, 0.0]
        assert gam.importance[0] == 0.5625

    def test_only_interactions(self):
        data = binarize(numeric_ds([np.arange(6.0), np.arange(6.0) % 3]), num_thresholds=2)
        model = GlrmModel(IDENTITY, 0.3, ((Conjunction.of(0, 3), 1.0),), (), 0, 0,
                          data.descriptors, data.feature_names, data.column_kinds)
        gam = decompose_gam(model, data)
        assert all(f.is_zero for f in gam.functions)
        assert gam.importance.tolist() == [0.0, 0.0]
        assert gam.residual_terms == model.rule_terms
        assert np.allclose(gam_score(gam, data), model.score(data), atol=1e-12, rtol=0)

    def test_constant_feature_has_zero_importance(self):
        ds = numeric_ds([np.arange(6.0), np.full(6, 2.0)])
        data = apply_descriptors(ds, (LiteralDescriptor(0, "x0", LE, 2.5),
                                      LiteralDescriptor(1, "x1", LE, 5.0)))
        model = GlrmModel(IDENTITY, 0.0, ((Conjunction.of(1), 7.0),),
                          (LinearTerm(1, "x1", 3.0, 2.0, 1.0),), 0, 0, data.descriptors,
                          data.feature_names, data.column_kinds)
        gam = decompose_gam(model, data)
        assert gam.importance[1] == 0.0

    def test_linear_term_slope(self):
        x = np.array([1.0, 2.0, 3.0, 6.0])
        data = binarize(numeric_ds([x]), num_thresholds=1)
        model = GlrmModel(IDENTITY, 0.5, (), (LinearTerm(0, "x0", 2.0, 3.0, 2.0),), 0, 0,
                          data.descriptors, data.feature_names, data.column_kinds)
        gam = decompose_gam(model, data)
        assert gam.functions[0].slope == 1.0
        assert gam.intercept == 0.5 - 3.0
        assert np.allclose(gam_score(gam, data), model.score(data), atol=1e-12, rtol=0)
        assert gam.importance[0] == pytest.approx(np.var(x), abs=1e-12)

    @pytest.mark.parametrize("seed", range(6))
    def test_exact_reconstruction_on_fitted_models(self, seed):
        data, cfg, target = random_problem(seed)
        model = fit_glrm(data, cfg, target)
        gam = decompose_gam(model, data)
        assert np.max(np.abs(gam_score(gam, data) - model.score(data))) <= 1e-9
        assert gam.importance[3] == 0.0
        assert np.all(gam.importance >= 0)

    def test_importance_ignores_column_order(self):
        data, cfg, target = random_problem(2)
        model = fit_glrm(data, cfg, target)
        perm = np.random.default_rng(0).permutation(data.d)
        where = {int(old): new for new, old in enumerate(perm)}
        ds = numeric_ds([data.numeric[:, k] for k in range(data.numeric.shape[1])])
        shuffled = apply_descriptors(ds, tuple(data.descriptors[k] for k in perm))
        terms = tuple((Conjunction(tuple(sorted(where[j] for j in c.literals))), b)
                      for c, b in model.rule_terms)
        remapped = GlrmModel(model.link, model.intercept, terms, model.linear_terms,
                             model.lambda0, model.lambda1, shuffled.descriptors,
                             shuffled.feature_names, shuffled.column_kinds, model.domains)
        a = decompose_gam(model, data).importance
        b = decompose_gam(remapped, shuffled).importance
        assert np.allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_categorical_steps(self):
        colors = np.array(["red", "blue", "red", "green"], dtype=object)
        ds = TabularDataset(("c",), (CATEGORICAL,), (colors,), np.zeros(4, np.int8))
        data = binarize(ds)
        lit = [d.value for d in data.descriptors].index("red")
        model = GlrmModel(IDENTITY, 0.0, ((Conjunction.of(lit), 2.0),), (), 0, 0,
                          data.descriptors, data.feature_names, data.column_kinds,
                          data.source_stats.domain)
        gam = decompose_gam(model, data)
        assert gam.importance[0] == pytest.approx(1.0)   # values {2, 0, 2, 0}
        (series,) = export_plot_data(gam)
        assert series["categories"] == ["blue", "green", "red"]
        assert series["values"] == [0.0, 0.0, 2.0]


class TestTextAndPlots:
    def model(self):
        data = binarize(numeric_ds([np.arange(8.0), np.arange(8.0) % 4]), num_thresholds=3)
        terms = ((Conjunction.of(0), 0.3), (Conjunction.of(1, 5), -0.9))
        return GlrmModel(IDENTITY, 0.25, terms, (), 0, 0, data.descriptors,
                         data.feature_names, data.column_kinds), data

    def test_sorted_by_magnitude(self):
        lines = explain_text(self.model()[0]).splitlines()
        assert lines[0] == "intercept  0.25"
        assert lines[1].startswith("-0.9  ") and " AND " in lines[1]
        assert lines[2].startswith("+0.3  ")

    def test_higher_degree_only(self):
        lines = explain_text(self.model()[0], higher_degree_only=True).splitlines()
        assert len(lines) == 2 and lines[1].startswith("-0.9")

    def test_empty_model(self):
        model = GlrmModel(LOGIT, -0.5, (), (), 0, 0)
        assert explain_text(model) == "intercept  -0.5"

    def test_breakpoints_and_plateaus(self):
        x = np.array([0.0, 1.0, 4.0, 8.0, 10.0])
        desc = (LiteralDescriptor(0, "x0", LE, 2.5), LiteralDescriptor(0, "x0", LE, 7.1))
        data = apply_descriptors(numeric_ds([x]), desc)
        model = GlrmModel(IDENTITY, 0.0, ((Conjunction.of(0), 1.0), (Conjunction.of(1), 2.0)),
                          (), 0, 0, desc, ("x0",), (NUMERIC,), ((0.0, 10.0),))
        (series,) = export_plot_data(decompose_gam(model, data))
        assert series["breakpoints"] == [0.0, 2.5, 7.1, 10.0]
        assert series["values"] == [3.0, 2.0, 0.0]

    def test_series_ordered_by_importance(self):
        x0 = np.array([0.0, 1.0, 2.0, 3.0])
        desc = (LiteralDescriptor(0, "x0", LE, 1.5), LiteralDescriptor(1, "x1", LE, 1.5),
                LiteralDescriptor(2, "x2", LE, 1.5))
        data = apply_descriptors(numeric_ds([x0, x0, x0]), desc)
        # step sizes sqrt(0.4) and sqrt(2) give variances 0.1 and 0.5
        terms = ((Conjunction.of(0), np.sqrt(0.4)), (Conjunction.of(1), np.sqrt(2.0)))
        model = GlrmModel(IDENTITY, 0.0, terms, (), 0, 0, desc, ("x0", "x1", "x2"),
                          (NUMERIC,) * 3, ((0.0, 3.0),) * 3)
        series = export_plot_data(decompose_gam(model, data))
        assert [s["feature"] for s in series] == ["x1", "x0", "x2"]
        assert [s["importance"] for s in series] == pytest.approx([0.5, 0.1, 0.0])
        assert series[2]["values"] == [0.0]
        csv_text = plot_csv(series)
        assert csv_text.splitlines()[0] == "feature,importance,x,f"
        assert json.loads(plot_json(series))[0]["feature"] == "x1"
