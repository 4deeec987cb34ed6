"""scikit-learn style wrappers around the growth analyses.

The estimators follow the usual contract: hyperparameters in ``__init__``,
learned state in trailing-underscore attributes, ``fit`` returns ``self``.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .growth import (
    certify_gap,
    estimate_cogrowth,
    estimate_rate,
    free_group_rate,
    verify_inequalities,
)
from .schreier import DEFAULT_VERTEX_BUDGET, bfs_ball, confinement_check, loop_counts
from .validation import check_counts, check_graph, check_radius, check_words


class GrowthRateEstimator(BaseEstimator):
    """Fit an exponential growth rate to sphere (or ball) counts.

    ``predict(k)`` returns the fitted ``ln|B(k)|``.
    """

    def __init__(self, window=None, kind="sphere"):
        self.window = window
        self.kind = kind

    def fit(self, X, y=None):
        counts = check_counts(X)
        est = estimate_rate(counts.tolist(), self.window, self.kind)
        self.estimate_ = est
        self.rate_ = est.rate
        self.stderr_ = est.stderr
        self.intercept_ = est.intercept
        self.window_ = est.window
        return self

    def predict(self, X):
        check_is_fitted(self, "rate_")
        k = np.asarray(X, dtype=float).ravel()
        return self.intercept_ + self.rate_ * k


class CogrowthEstimator(BaseEstimator):
    """Estimate ω_H of a coset graph from closed non-backtracking walks at the root."""

    def __init__(self, max_len=18, window=None, budget=DEFAULT_VERTEX_BUDGET):
        self.max_len = max_len
        self.window = window
        self.budget = budget

    def fit(self, X, y=None):
        g = check_graph(X)
        max_len = check_radius(self.max_len, 4, "max_len")
        self.loop_counts_ = loop_counts(g, max_len, self.budget)
        self.estimate_ = estimate_cogrowth(self.loop_counts_, self.window)
        self.rate_ = self.estimate_.rate
        self.stderr_ = self.estimate_.stderr
        return self


class GrowthTightnessAnalyzer(TransformerMixin, BaseEstimator):
    """Full confined-growth analysis of coset graphs.

    ``fit(graph)`` records confinement, quotient growth, cogrowth, the gap
    certificate and the inequality verdicts for one graph.  ``transform``
    maps a list of graphs to rows ``[omega_quot, omega_H, bound, omega_G]``
    (``nan`` bound when no certificate holds).
    """

    def __init__(self, radius=10, max_len=18, P=None, tol=0.05, budget=DEFAULT_VERTEX_BUDGET):
        self.radius = radius
        self.max_len = max_len
        self.P = P
        self.tol = tol
        self.budget = budget

    def _analyze(self, g):
        radius = check_radius(self.radius, 1)
        ball = bfs_ball(g, radius, self.budget)
        quot = estimate_rate(ball.counts)
        cog = CogrowthEstimator(self.max_len, budget=self.budget).fit(g).estimate_
        confinement = None
        if self.P:
            confinement = confinement_check(g, check_words(self.P, g.rank, "P"), radius, ball)
        cert = certify_gap(g, radius, budget=self.budget) if g.rank >= 2 else None
        omega_G = free_group_rate(g.rank)
        hypothesis = cert is not None and cert.certified and (confinement is None or confinement.holds)
        ineq = verify_inequalities(omega_G, quot, cog, self.tol,
                                   gap=cert.gap if hypothesis else None,
                                   gap_reason="hypothesis not met: not confined")
        return ball, quot, cog, confinement, cert, omega_G, ineq

    def fit(self, X, y=None):
        g = check_graph(X)
        (self.ball_, self.quotient_rate_, self.cogrowth_, self.confinement_,
         self.certificate_, self.omega_G_, self.inequalities_) = self._analyze(g)
        return self

    def transform(self, X):
        check_is_fitted(self, "quotient_rate_")
        graphs = [X] if not isinstance(X, (list, tuple)) else X
        rows = []
        for g in graphs:
            _, quot, cog, _, cert, omega_G, _ = self._analyze(check_graph(g))
            bound = cert.bound if cert is not None and cert.certified else math.nan
            rows.append([quot.rate, cog.rate, bound, omega_G.rate])
        return np.asarray(rows, dtype=float)
