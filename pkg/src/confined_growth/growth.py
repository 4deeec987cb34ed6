"""Growth rates, Poincaré partial sums and the explicit gap bounds.

All rates are natural logarithms (nats per unit length).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .errors import InputError
from .schreier import (
    DEFAULT_VERTEX_BUDGET,
    CosetGraph,
    bfs_ball,
    format_vertex,
    tree_ball_radius,
)

BISECTION_TOL = 1e-9


@dataclass
class GrowthEstimate:
    """A windowed growth-rate estimate.

    ``rate`` is the least-squares slope of the log-counts over ``window``
    (inclusive index range); ``limsup`` is the largest ``ln|B(k)|/k`` in the
    window, reported so truncation bias is visible.
    """

    counts: list
    window: tuple
    rate: float
    method: str
    stderr: float = 0.0
    intercept: float = 0.0
    limsup: float | None = None
    raw: list = field(default_factory=list)
    kind: str = "sphere"
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "kind": self.kind,
            "window": list(self.window) if self.window else None,
            "rate": self.rate,
            "stderr": self.stderr,
            "limsup": self.limsup,
            "note": self.note,
            "counts": list(self.counts),
        }


def default_window(n_points: int) -> tuple[int, int]:
    """Top half of the available indices 0..n_points-1."""
    last = n_points - 1
    return (last // 2, last)


def _check_window(window, n_points: int) -> tuple[int, int]:
    lo, hi = (int(window[0]), int(window[1]))
    if not 0 <= lo <= hi < n_points:
        raise InputError(f"window {window} outside available indices 0..{n_points - 1}")
    if hi - lo + 1 < 4:
        raise InputError(f"window {window} has {hi - lo + 1} entries; at least 4 are required")
    return lo, hi


def _fit(ks, ys):
    fit = stats.linregress(ks, ys)
    stderr = float(fit.stderr) if np.isfinite(fit.stderr) else 0.0
    return float(fit.slope), stderr, float(fit.intercept)


def estimate_rate(counts: Sequence[int], window=None, kind: str = "sphere") -> GrowthEstimate:
    """Least-squares slope of ln|B(k)| over ``window``.

    ``kind="sphere"`` takes |S_k| and accumulates ball sizes; ``kind="ball"``
    takes |B(k)| directly.  A zero sphere inside the window means the graph
    is finite and the rate is exactly 0.
    """
    counts = [int(c) for c in counts]
    if kind not in ("sphere", "ball"):
        raise InputError(f"kind must be 'sphere' or 'ball', got {kind!r}")
    if any(c < 0 for c in counts):
        raise InputError("counts must be nonnegative")
    window = default_window(len(counts)) if window is None else window
    lo, hi = _check_window(window, len(counts))
    if kind == "sphere":
        if any(c == 0 for c in counts[lo: hi + 1]):
            return GrowthEstimate(counts, (lo, hi), 0.0, "exact-formula", kind=kind, limsup=0.0,
                                  note="finite support: a sphere inside the window is empty")
        balls = np.cumsum(counts)
        raw = [math.log(counts[k]) / k for k in range(1, len(counts)) if counts[k] > 0]
    else:
        if any(c == 0 for c in counts[lo: hi + 1]):
            raise InputError("ball counts must be positive inside the window")
        balls = np.asarray(counts)
        raw = []
    ks = np.arange(lo, hi + 1)
    ys = np.log(balls[lo: hi + 1].astype(float))
    rate, stderr, intercept = _fit(ks, ys)
    limsup = max((y / k for k, y in zip(ks, ys) if k > 0), default=None)
    return GrowthEstimate(counts, (lo, hi), rate, "regression", stderr, intercept,
                          None if limsup is None else float(limsup), raw, kind)


def free_group_rate(rank: int) -> GrowthEstimate:
    if rank < 1:
        raise InputError(f"rank must be >= 1, got {rank}")
    return GrowthEstimate([], (), math.log(2 * rank - 1), "exact-formula",
                          note=f"log(2n-1) for the free group of rank {rank}")


def estimate_cogrowth(closed_counts: Sequence[int], window=None) -> GrowthEstimate:
    """Growth rate of H from closed non-backtracking walk counts c_0..c_K.

    If every closed walk has length divisible by some d > 1 (bipartite-like
    quotients), ln c_k is regressed on the multiples of d only.  Otherwise
    ``max(ln c_k, ln c_{k+1})`` is regressed against k, which smooths the
    milder parity oscillation of aperiodic graphs.
    """
    c = [int(x) for x in closed_counts]
    if len(c) < 5:
        raise InputError("need closed-walk counts up to length >= 4")
    support = [k for k in range(1, len(c)) if c[k] > 0]
    if not support:
        return GrowthEstimate(c, (), 0.0, "exact-formula", kind="closed-walks", limsup=0.0,
                              note="no nontrivial closed walks: H is trivial within the window")
    period = math.gcd(*support)
    with np.errstate(divide="ignore"):
        logs = np.log(np.asarray(c, dtype=float))
    if period > 1:
        series = logs
        note = f"closed walks only at lengths divisible by {period}; regressed on those lengths"
    else:
        series = np.maximum(logs[:-1], logs[1:])
        note = "parity-paired max(ln c_k, ln c_k+1)"
    window = default_window(len(series)) if window is None else window
    lo, hi = _check_window(window, len(series))
    ks = np.arange(lo, hi + 1)
    ys = series[lo: hi + 1]
    ok = np.isfinite(ys) & (ks % period == 0)
    if ok.sum() < 4:
        raise InputError(f"fewer than 4 usable closed-walk counts in window {window}; raise max_len")
    rate, stderr, intercept = _fit(ks[ok], ys[ok])
    limsup = max(float(y / k) for k, y in zip(ks[ok], ys[ok]) if k > 0)
    return GrowthEstimate(c, (lo, hi), rate, "regression", stderr, intercept, limsup,
                          kind="closed-walks", note=note)


def poincare_partial(counts: Sequence[int], s: float, depth: int | None = None) -> float:
    """Partial Poincaré sum: sum over k <= depth of |S_k| e^{-sk}."""
    if s < 0:
        raise InputError(f"s must be >= 0, got {s}")
    depth = len(counts) - 1 if depth is None else depth
    if not 0 <= depth < len(counts):
        raise InputError(f"depth {depth} exceeds available counts (0..{len(counts) - 1})")
    return math.fsum(counts[k] * math.exp(-s * k) for k in range(depth + 1))


def negligible_ratio(counts: Sequence[int], rank: int) -> list[float]:
    """|B_{G/H}(k)| e^{-k log(2n-1)} for every k, from sphere counts."""
    base = math.log(2 * rank - 1)
    balls = np.cumsum([int(c) for c in counts])
    return [float(math.exp(math.log(b) - k * base)) for k, b in enumerate(balls)]


def appendix1_gap(d: int, R: int) -> float:
    """log(d-1) minus the appendix1 bound, computed without cancellation."""
    if d < 3:
        raise InputError(f"degree d must be >= 3 (the bound degenerates), got {d}")
    if R < 1:
        raise InputError(f"R must be >= 1, got {R}")
    return -math.log1p(-float(d - 1) ** (-2 * R)) / (2 * R)


def appendix1_bound(d: int, R: int) -> float:
    """log((d-1)^{2R} - 1) / (2R): growth bound for d-regular graphs whose
    tree-like subgraphs have diameter at most R."""
    return math.log(d - 1) - appendix1_gap(d, R)


def appendix2_gap(n: int, m: int) -> float:
    """log(2n-1) - log(alpha) > 0, exact even when 64-bit subtraction would round it away."""
    if n < 2:
        raise InputError(f"rank n must be >= 2 for a nontrivial bound, got {n}")
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    return -math.log1p(-float(2 * n - 1) ** (-2 * m)) / (2 * m)


def appendix2_bound(n: int, m: int) -> tuple[float, float]:
    """(alpha, log alpha) with alpha = ((2n-1)^{2m} - 1)^{1/(2m)}.

    Bounds the growth of any graph of degree <= 2n with no tree ball B_n(m).
    """
    log_alpha = math.log(2 * n - 1) - appendix2_gap(n, m)
    return math.exp(log_alpha), log_alpha


@dataclass
class GapCertificate:
    n: int
    m: int | None
    alpha: float | None
    bound: float | None
    omega_free: float
    radius_verified: int
    audit_radius: int
    audited_vertices: int
    empirical_rate: GrowthEstimate
    holds_hypothesis: bool
    uncertified_vertex: object = None
    note: str = ""

    @property
    def inconclusive(self) -> bool:
        return not self.holds_hypothesis

    @property
    def empirical_ok(self) -> bool:
        if self.bound is None:
            return False
        return self.empirical_rate.rate <= self.bound + 2 * self.empirical_rate.stderr

    @property
    def certified(self) -> bool:
        return self.holds_hypothesis and self.empirical_ok

    @property
    def status(self) -> str:
        if not self.holds_hypothesis:
            return "inconclusive"
        return "certified" if self.empirical_ok else "empirical-rate-above-bound"

    @property
    def gap(self) -> float | None:
        return None if self.m is None else appendix2_gap(self.n, self.m)

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "bound": self.bound,
            "omega_free": self.omega_free,
            "gap": self.gap,
            "radius_verified": self.radius_verified,
            "audit_radius": self.audit_radius,
            "audited_vertices": self.audited_vertices,
            "holds_hypothesis": self.holds_hypothesis,
            "uncertified_vertex": format_vertex(self.uncertified_vertex),
            "empirical_rate": self.empirical_rate.to_dict(),
            "note": self.note,
        }


def certify_gap(g: CosetGraph, radius: int, audit_radius: int | None = None,
                budget: int = DEFAULT_VERTEX_BUDGET) -> GapCertificate:
    """Certify ω_{G/H} < log(2n-1) from the tree-ball bound.

    Every vertex within ``audit_radius`` (default ``radius // 2``) gets its
    tree-ball radius measured with horizon ``radius - d(root, v)``; the
    largest certified value plus one is the m fed into the sphere-counting
    bound.  A vertex with no cycle inside its horizon makes the certificate
    inconclusive.
    """
    n = g.rank
    if n < 2:
        raise InputError(f"certification needs rank >= 2, got {n}")
    if radius < 1:
        raise InputError(f"radius must be >= 1, got {radius}")
    audit_radius = radius // 2 if audit_radius is None else audit_radius
    if not 0 <= audit_radius < radius:
        raise InputError(f"audit radius must lie in [0, {radius - 1}], got {audit_radius}")
    ball = bfs_ball(g, radius, budget)
    empirical = estimate_rate(ball.counts)
    omega_free = math.log(2 * n - 1)
    worst = 0
    audited = 0
    for v in ball.vertices(audit_radius):
        audited += 1
        tb = tree_ball_radius(g, ball, v)
        if not tb.certified:
            return GapCertificate(n, None, None, None, omega_free, radius, audit_radius, audited,
                                  empirical, False, v,
                                  note=f"no cycle within distance {tb.value} of an audited vertex; "
                                       "tree-ball hypothesis not established")
        worst = max(worst, tb.value)
    m = worst + 1
    alpha, bound = appendix2_bound(n, m)
    return GapCertificate(n, m, alpha, bound, omega_free, radius, audit_radius, audited, empirical, True,
                          note="tree-ball condition checked with the non-induced subgraph criterion")


@dataclass(frozen=True)
class GapFunctionParams:
    """Parameters of ρ(s) = s − θ ln(1 + e^{−sR}); θ = 0 is a degenerate test case."""

    theta: float
    R: float

    def __post_init__(self):
        if not 0 <= self.theta <= 1:
            raise InputError(f"theta must lie in (0, 1], got {self.theta}")
        if not self.R > 0:
            raise InputError(f"R must be positive, got {self.R}")


def _softplus_neg(x: float) -> float:
    # ln(1 + e^{-x}) without overflow for negative x
    if x >= 0:
        return math.log1p(math.exp(-x))
    return -x + math.log1p(math.exp(x))


def rho_deficit(params: GapFunctionParams, s: float) -> float:
    """s - ρ(s) = θ ln(1 + e^{-sR}), evaluated directly so it stays positive."""
    return params.theta * _softplus_neg(s * params.R)


def rho(params: GapFunctionParams, s: float) -> float:
    return s - rho_deficit(params, s)


@dataclass(frozen=True)
class GapOmega:
    omega: float
    omega_prime: float
    rho_value: float
    margin: float
    iterations: int

    def to_dict(self) -> dict:
        return {"omega": self.omega, "omega_prime": self.omega_prime,
                "rho_omega_prime": self.rho_value, "margin": self.margin}


def find_gap_omega(params: GapFunctionParams, omega: float, tol: float = BISECTION_TOL) -> GapOmega:
    """Find ω' > ω with ρ(ω') ≤ ω − δ and report δ > 0.

    Works in the offset h = ω' − ω.  The deficit
    f(h) = θ ln(1 + e^{−(ω+h)R}) − h is decreasing with f(0) > 0, so its root
    h* is bracketed by [0, θ ln 2 + ...] and bisected (relative tolerance
    ``tol``).  Taking ω' = ω + h_lo/2 guarantees δ = f(h_lo/2) ≥ h*/2.
    """
    if params.theta <= 0:
        raise InputError("theta must be > 0 for a strict gap")
    if omega < 0:
        raise InputError(f"omega must be >= 0, got {omega}")
    th, R = params.theta, params.R

    def deficit(h):
        return th * _softplus_neg((omega + h) * R) - h

    lo, hi = 0.0, th * math.log(2.0) + 1.0
    while deficit(hi) > 0:
        hi *= 2
    it = 0
    while hi - lo > tol * hi and it < 2000:
        mid = 0.5 * (lo + hi)
        if deficit(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    h = 0.5 * lo if lo > 0 else 0.5 * hi
    omega_prime = omega + h
    if omega_prime <= omega:
        omega_prime = math.nextafter(omega, math.inf)
    h = omega_prime - omega
    margin = deficit(h)
    value = rho(params, omega_prime)
    return GapOmega(omega, omega_prime, value, margin, it)


def _rate(x, name):
    if x is None:
        raise InputError(f"missing growth estimate {name}")
    return (x.rate, x) if isinstance(x, GrowthEstimate) else (float(x), None)


def verify_inequalities(omega_G, omega_quot, omega_H, tol: float = 0.05,
                        gap: float | None = None, gap_reason: str = "") -> dict:
    """Check ω_{G/H}/2 + ω_H ≥ ω_G, the tightness gap, and ω_H ≥ ω_G/2.

    ``gap`` is the certified ω_G − bound; without one the tightness verdict
    fails with ``gap_reason``.
    """
    G, g_est = _rate(omega_G, "omega_G")
    q, q_est = _rate(omega_quot, "omega_quot")
    h, h_est = _rate(omega_H, "omega_H")
    eq1 = q / 2 + h - G
    out = {
        "omega_G": G,
        "omega_quot": q,
        "omega_H": h,
        "tol": tol,
        "windows": {
            "omega_G": list(g_est.window) if g_est and g_est.window else None,
            "omega_quot": list(q_est.window) if q_est and q_est.window else None,
            "omega_H": list(h_est.window) if h_est and h_est.window else None,
        },
        "verdicts": {
            "quotient_cogrowth_sum": {"holds": eq1 >= -tol, "slack": eq1,
                                  "statement": "omega_quot/2 + omega_H >= omega_G - tol"},
        },
    }
    if gap is None:
        tight = {"holds": False, "slack": None, "gap": None,
                 "statement": "omega_quot <= omega_G - gap",
                 "reason": gap_reason or "no certified gap"}
    else:
        slack = (G - gap) - q
        tight = {"holds": slack >= 0, "slack": slack, "gap": gap,
                 "statement": "omega_quot <= omega_G - gap"}
    out["verdicts"]["growth_tightness"] = tight
    half = h - G / 2
    out["verdicts"]["cogrowth_half"] = {"holds": half >= -tol, "slack": half,
                                        "statement": "omega_H >= omega_G/2 - tol"}
    out["all_hold"] = all(v["holds"] for v in out["verdicts"].values())
    return out
