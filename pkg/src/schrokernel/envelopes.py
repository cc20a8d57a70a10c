"""Closed-form two-sided envelopes for Schrödinger heat kernels.

All bounds take their constants explicitly.  A two-sided estimate
f ≍ g is read as c1 f(c2 .) <= g <= c3 f(c4 .); the multiplicative
constants c1, c3 and the argument constants c2, c4 live in
:class:`EnvelopeParams` and are fitted by :mod:`schrokernel.verify`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .freekernel import norm, q, t0


@dataclass(frozen=True)
class EnvelopeParams:
    """Constants of c1 f(c2 .) <= g <= c3 f(c4 .).

    The argument constants are floats, or tuples for families with several
    independent constants (``n_args`` > 1).
    """

    mult_lower: float = 1.0
    arg_lower: float | tuple = 1.0
    mult_upper: float = 1.0
    arg_upper: float | tuple = 1.0

    def __post_init__(self):
        flat = [self.mult_lower, self.mult_upper]
        for a in (self.arg_lower, self.arg_upper):
            flat.extend(a if isinstance(a, tuple) else (a,))
        if min(flat) <= 0:
            raise ValueError("envelope constants must be positive")

    def to_dict(self):
        d = asdict(self)
        for k in ("arg_lower", "arg_upper"):
            if isinstance(d[k], tuple):
                d[k] = list(d[k])
        return d


class RegimeLabel(str, enum.Enum):
    DIAGONAL_LOCAL = "diagonal_local"
    OFFDIAG_GAUSSIAN = "offdiag_gaussian"
    LARGE_TIME_GLOBAL = "large_time_global"
    GROWTH_LOCAL = "growth_local"
    GROWTH_SPATIAL = "growth_spatial"


def _check_long_range(alpha):
    if not 0 < alpha < 2:
        raise ValueError("alpha must lie in (0, 2)")


def large_time_exponent(alpha):
    """(2 - alpha) / (2 + alpha)."""
    return (2.0 - alpha) / (2.0 + alpha)


def _norms(x, y):
    return np.asarray(norm(x), dtype=float), np.asarray(norm(y), dtype=float)


def decay_exponent_pos(t, x, y, alpha):
    """min(t / (1 + max(|x|,|y|))^alpha, t^((2-alpha)/(2+alpha)))."""
    _check_long_range(alpha)
    nx, ny = _norms(x, y)
    m = np.maximum(nx, ny)
    t = np.asarray(t, dtype=float)
    return np.minimum(t / (1.0 + m) ** alpha, t ** large_time_exponent(alpha))


def weight_pos(t, x, y, alpha, c=1.0):
    """exp(-c min(t/(1+max)^alpha, t^((2-alpha)/(2+alpha)))), a weight in (0, 1]."""
    return np.exp(-c * decay_exponent_pos(t, x, y, alpha))


def growth_exponent_neg(t, x, y, alpha, growth_c=1.0, spatial_c=1.0):
    """max(growth_c t/(1+min)^alpha, growth_c t - spatial_c (1+min)^2 / t)."""
    nx, ny = _norms(x, y)
    m = np.minimum(nx, ny)
    t = np.asarray(t, dtype=float)
    return np.maximum(growth_c * t / (1.0 + m) ** alpha,
                      growth_c * t - spatial_c * (1.0 + m) ** 2 / t)


def weight_neg(t, x, y, alpha, growth_c=1.0, spatial_c=1.0):
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return np.exp(growth_exponent_neg(t, x, y, alpha, growth_c, spatial_c))


def neg_branch_crossover_radius(t, alpha, growth_c=1.0, spatial_c=1.0):
    """Smallest radius m >= 0 where the two branches of ``weight_neg`` coincide
    at time t, or None when they never do."""
    from scipy.optimize import brentq

    def gap(m):
        return (growth_c * t / (1 + m) ** alpha
                - (growth_c * t - spatial_c * (1 + m) ** 2 / t))

    if gap(0.0) == 0:
        return 0.0
    top = math.sqrt(growth_c / spatial_c) * t  # spatial branch is negative beyond
    ms = np.concatenate([[0.0], np.geomspace(1e-6, max(top, 1.0), 2000)])
    g = gap(ms)
    k = np.nonzero(np.sign(g[1:]) != np.sign(g[:-1]))[0]
    if k.size == 0:
        return None
    return brentq(gap, ms[k[0]], ms[k[0] + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)


def survival_bound_pos(t, x, alpha, C1=1.0, C2=1.0):
    """C1 [exp(-C2 t/(1+|x|)^alpha) + exp(-C2 t^((2-alpha)/(2+alpha)))]."""
    _check_long_range(alpha)
    r = np.asarray(norm(x), dtype=float)
    t = np.asarray(t, dtype=float)
    return C1 * (np.exp(-C2 * t / (1.0 + r) ** alpha)
                 + np.exp(-C2 * t ** large_time_exponent(alpha)))


def survival_bound_neg(t, x, alpha, C1=1.0, C2=1.0):
    """C1 exp(C2 max(t/(1+|x|)^alpha, t - (1+|x|^2)/t))."""
    r = np.asarray(norm(x), dtype=float)
    t = np.asarray(t, dtype=float)
    return C1 * np.exp(C2 * np.maximum(t / (1.0 + r) ** alpha,
                                       t - (1.0 + r * r) / t))


def green_log_factor(x, y, alpha):
    nx, ny = _norms(x, y)
    scale = (1.0 + np.maximum(nx, ny)) ** (0.5 * alpha)
    dist = np.asarray(norm(np.asarray(x, float) - np.asarray(y, float)))
    return 1.0 + np.maximum(np.log(scale / dist), 0.0)


def green_envelope(x, y, alpha, d, c=1.0):
    """|x-y|^-(d-2) exp(-c |x-y| / (1+max)^(alpha/2)), times the log factor in d = 2."""
    _check_long_range(alpha)
    if d < 2:
        raise ValueError("green_envelope needs d >= 2")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dist = np.asarray(norm(x - y))
    if np.any(dist == 0):
        raise ValueError("green_envelope is singular at x = y")
    nx, ny = _norms(x, y)
    scale = (1.0 + np.maximum(nx, ny)) ** (0.5 * alpha)
    out = dist ** (2.0 - d) * np.exp(-c * dist / scale)
    if d == 2:
        out = out * green_log_factor(x, y, alpha)
    return out


def weight_zhang(t, x, y, alpha, side, C=1.0):
    """Earlier weights: lower exp(-C a), upper exp(-C a^((2-alpha)/4)), a = t/(1+max)^alpha."""
    nx, ny = _norms(x, y)
    a = np.asarray(t, dtype=float) / (1.0 + np.maximum(nx, ny)) ** alpha
    if side == "lower":
        return np.exp(-C * a)
    if side == "upper":
        return np.exp(-C * a ** ((2.0 - alpha) / 4.0))
    raise ValueError("side must be 'upper' or 'lower'")


def weight_zhang_critical(t, x, theta):
    """Display-only weight (max(t/(1+|x|)^2, 1))^-theta of the alpha = 2 case."""
    r = np.asarray(norm(x), dtype=float)
    return np.maximum(np.asarray(t, float) / (1.0 + r) ** 2, 1.0) ** (-theta)


def regime(t, x, y, alpha, case="positive"):
    """Envelope branch active at (t, x, y), with unit constants."""
    nx, ny = float(norm(x)), float(norm(y))
    if case == "positive":
        m = max(nx, ny)
        if t > t0(m, alpha):
            return RegimeLabel.LARGE_TIME_GLOBAL
        dist2 = float(norm(np.asarray(x, float) - np.asarray(y, float))) ** 2
        if dist2 / t >= t / (1.0 + m) ** alpha:
            return RegimeLabel.OFFDIAG_GAUSSIAN
        return RegimeLabel.DIAGONAL_LOCAL
    if case == "negative":
        m = min(nx, ny)
        if t / (1.0 + m) ** alpha >= t - (1.0 + m) ** 2 / t:
            return RegimeLabel.GROWTH_LOCAL
        return RegimeLabel.GROWTH_SPATIAL
    raise ValueError("case must be 'positive' or 'negative'")


# ---------------------------------------------------------------------------
# envelope families with one argument-constant slot, as used by verify


def _log_q(t, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = x.shape[-1]
    t = np.asarray(t, dtype=float)
    dist2 = np.sum((x - y) ** 2, axis=-1)
    return -0.5 * d * np.log(2.0 * np.pi * t) - dist2 / (2.0 * t)


def _family(log_fn, name):
    """Envelope (t, x, y, c) -> value, with the log form kept as ``.log``."""
    def env(t, x, y, c):
        return np.exp(log_fn(t, x, y, c))
    env.log = log_fn
    env.family = name
    env.n_args = 1
    return env


def kernel_envelope_pos(alpha):
    """(t, x, y, c) -> q(t,x,y) exp(-c min(...)) for positive potentials."""
    return _family(lambda t, x, y, c: _log_q(t, x, y) - c * decay_exponent_pos(t, x, y, alpha),
                   "weight_pos")


def kernel_envelope_neg(alpha, spatial_ratio=None):
    """(t, x, y, c) -> q(t,x,y) exp(max(c_g t/(1+min)^alpha, c_g t - c_s (1+min)^2/t)).

    By default c = (c_g, c_s) carries independent growth and spatial
    constants (``n_args = 2``).  With ``spatial_ratio`` a scalar c is used
    and c_s = c * spatial_ratio.
    """
    if spatial_ratio is None:
        fam = _family(lambda t, x, y, c: _log_q(t, x, y)
                      + growth_exponent_neg(t, x, y, alpha, c[0], c[1]), "weight_neg")
        fam.n_args = 2
        return fam
    return _family(lambda t, x, y, c: _log_q(t, x, y)
                   + growth_exponent_neg(t, x, y, alpha, c, c * spatial_ratio), "weight_neg")


def kernel_envelope_zhang(alpha, side):
    def log_fn(t, x, y, c):
        nx, ny = _norms(x, y)
        a = np.asarray(t, dtype=float) / (1.0 + np.maximum(nx, ny)) ** alpha
        expo = a if side == "lower" else a ** ((2.0 - alpha) / 4.0)
        return _log_q(t, x, y) - c * expo
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'upper' or 'lower'")
    return _family(log_fn, f"weight_zhang_{side}")


def green_envelope_family(alpha, d):
    """(t, x, y, c) -> green_envelope(x, y, c); t is ignored."""
    _check_long_range(alpha)

    def log_fn(t, x, y, c):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dist = np.asarray(norm(x - y))
        nx, ny = _norms(x, y)
        scale = (1.0 + np.maximum(nx, ny)) ** (0.5 * alpha)
        out = (2.0 - d) * np.log(dist) - c * dist / scale
        if d == 2:
            out = out + np.log(green_log_factor(x, y, alpha))
        return out
    return _family(log_fn, "green")


def ball_kernel_envelope(R, d):
    """(t, x, y, c) -> t^(-d/2) exp(-c (|x-y|^2/t + t/R^2)), the killed-ball shape."""
    def log_fn(t, x, y, c):
        dist = np.asarray(norm(np.asarray(x, float) - np.asarray(y, float)))
        t = np.asarray(t, dtype=float)
        return -0.5 * d * np.log(t) - c * (dist * dist / t + t / (R * R))
    return _family(log_fn, "dirichlet_ball")


FAMILIES = ("weight_pos", "weight_neg", "weight_zhang_lower", "weight_zhang_upper",
            "green", "dirichlet_ball")


def make_family(name, alpha=1.0, d=2, R=1.0):
    """Envelope family by name (one of ``FAMILIES``)."""
    if name == "weight_pos":
        return kernel_envelope_pos(alpha)
    if name == "weight_neg":
        return kernel_envelope_neg(alpha)
    if name in ("weight_zhang_lower", "weight_zhang_upper"):
        return kernel_envelope_zhang(alpha, name.rsplit("_", 1)[1])
    if name == "green":
        return green_envelope_family(alpha, d)
    if name == "dirichlet_ball":
        return ball_kernel_envelope(R, d)
    raise ValueError(f"unknown family {name!r}; known: {', '.join(FAMILIES)}")
