"""Interpretable rule learning by column generation.

Boolean rule sets (DNF/CNF) and generalized linear rule models, closed-form
explanation importances and metrics, and a synthetic explanation-labeled
data generator.
"""

from .brcg import BooleanRuleCG, BrcgConfig, fit
from .glrm import GlrmConfig, GlrmModel, decompose_gam, fit_glrm
from .rulemodel import CNF, DNF, Conjunction, RuleSet, complexity, predict, render
from .tabular import TabularDataset, binarize, load_csv, split

__version__ = "0.1.0"

__all__ = [
    "BooleanRuleCG", "BrcgConfig", "fit", "GlrmConfig", "GlrmModel", "decompose_gam",
    "fit_glrm", "CNF", "DNF", "Conjunction", "RuleSet", "complexity", "predict", "render",
    "TabularDataset", "binarize", "load_csv", "split",
]
