"""Specification tests for parametric transformation classes.

Thin wrappers over the C++ core. Configuration dictionaries use the same
keys as the JSON config of the ``transpec`` command-line tool.
"""

import json

import numpy as np

from . import _transpec
from ._transpec import (
    NormalizedTransform,
    NptEstimate,
    TranspecError,
    bootstrap_quantile,
    yeo_johnson,
    yeo_johnson_grad,
)

__version__ = _transpec.__version__

__all__ = [
    "NormalizedTransform",
    "NptEstimate",
    "TranspecError",
    "bootstrap_quantile",
    "estimate_h",
    "gof_test",
    "read_dataset",
    "relevant_test",
    "run",
    "simulate",
    "test_statistic",
    "yeo_johnson",
    "yeo_johnson_grad",
]


def _dump(config):
    return json.dumps(config or {})


def run(config):
    """Run a command config; returns (report dict, side-table CSV text)."""
    report, csv = _transpec.run(_dump(config))
    return json.loads(report), csv


def estimate_h(y, x, npt=None):
    """Nonparametric transformation estimate, callable on arrays of y."""
    return _transpec.estimate_h(y, x, _dump({"npt": npt} if npt else {}))


def test_statistic(y, x, config=None):
    """T_n and the minimizer (c1, c2, theta)."""
    return json.loads(_transpec.test_statistic(y, x, _dump(config)))


def gof_test(y, x, seed, config=None):
    """Smooth-bootstrap test of the parametric class."""
    cfg = dict(config or {})
    cfg["seed"] = int(seed)
    return json.loads(_transpec.gof_test(y, x, _dump(cfg)))


def relevant_test(y, x, eta, config=None, seed=0):
    cfg = dict(config or {})
    cfg.setdefault("relevant", {})
    cfg["relevant"] = dict(cfg["relevant"], eta=float(eta))
    cfg["seed"] = int(seed)
    return json.loads(_transpec.relevant_test(y, x, _dump(cfg)))


def simulate(theta0, n, seed, r="", c=0.0, local=False):
    """(y, x) drawn from the simulation design h(Y) = 4X - 1 + e."""
    return _transpec.simulate(float(theta0), int(n), int(seed), r, float(c), bool(local))


def read_dataset(path):
    y, x, dx = _transpec.read_dataset(str(path))
    return y, (x if dx == 1 else np.asarray(x).reshape(-1, dx))
