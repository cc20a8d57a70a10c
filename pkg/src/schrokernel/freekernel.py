"""Gaussian kernel of 1/2 Δ, Brownian samplers and the transition time t0."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import special


def _as_points(x, d=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    if d is not None and x.shape[-1] != d:
        raise ValueError(f"point has dimension {x.shape[-1]}, expected {d}")
    return x


def norm(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return abs(float(x))
    return np.sqrt(np.sum(x * x, axis=-1))


def q_dist(t, r, d):
    """Free kernel as a function of the distance r = |x - y|."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("q needs t > 0")
    r = np.asarray(r, dtype=float)
    return (2.0 * np.pi * t) ** (-0.5 * d) * np.exp(-(r * r) / (2.0 * t))


def q(t, x, y, d=None):
    """Transition density (2πt)^(-d/2) exp(-|x-y|^2 / 2t) of standard BM.

    ``x`` and ``y`` are points of shape (..., d); plain scalars are treated
    as 1-d points.
    """
    x = _as_points(x, d)
    y = _as_points(y, d)
    d = x.shape[-1]
    diff = x - y
    return q_dist(t, np.sqrt(np.sum(diff * diff, axis=-1)), d)


def t0(s, alpha):
    """Transition time (1 + s)^(1 + alpha/2)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (1.0 + np.asarray(s, dtype=float)) ** (1.0 + 0.5 * alpha)


def free_green(r, d):
    """∫_0^∞ q dt = Γ(d/2 - 1) / (2 π^{d/2}) r^{2-d}, d >= 3."""
    if d < 3:
        raise ValueError("the free Green function is infinite for d <= 2")
    r = np.asarray(r, dtype=float)
    return special.gamma(0.5 * d - 1) / (2.0 * np.pi ** (0.5 * d)) * r ** (2.0 - d)


def free_time_integral(r, d, a, b=np.inf):
    """∫_a^b q_dist(t, r, d) dt in closed form via incomplete gamma functions."""
    r = float(r)
    if r <= 0:
        raise ValueError("need r > 0")
    pref = 0.5 * np.pi ** (-0.5 * d) * r ** (2.0 - d)
    s = 0.5 * d - 1.0
    ua = np.inf if a == 0 else r * r / (2.0 * a)
    ub = 0.0 if np.isinf(b) else r * r / (2.0 * b)

    def upper(u):  # Γ(s, u)
        if np.isinf(u):
            return 0.0
        if s == 0:
            return special.exp1(u) if u > 0 else np.inf
        if s < 0:
            # Γ(-1/2, u) for d = 1: recurrence Γ(s, u) = (Γ(s+1, u) - u^s e^-u) / s
            return (special.gammaincc(s + 1, u) * special.gamma(s + 1)
                    - u ** s * np.exp(-u)) / s
        return special.gammaincc(s, u) * special.gamma(s)

    return pref * (upper(ub) - upper(ua))


# ---------------------------------------------------------------------------
# random streams


def stream(seed, block):
    """Counter-based generator for the stream (seed, block).

    Philox is keyed by the pair so every block of paths owns an independent,
    reproducible stream no matter which worker evaluates it.
    """
    key = (int(seed) & (2**64 - 1)) | (int(block) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def as_generator(rng):
    if isinstance(rng, np.random.Generator):
        return rng
    return stream(0 if rng is None else rng, 0)


# ---------------------------------------------------------------------------
# paths


@dataclass
class Path:
    """Sampled path: ``times`` has n+1 entries from 0 to t, ``points`` is (n+1, d)."""

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        if self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        if len(self.points) != len(self.times):
            raise ValueError("points and times must have equal length")

    @property
    def dim(self):
        return self.points.shape[-1]

    @property
    def t(self):
        return float(self.times[-1])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s"] + [f"x_{i + 1}" for i in range(self.dim)])
            for s, p in zip(self.times, self.points):
                w.writerow([repr(float(s))] + [repr(float(v)) for v in p])


def uniform_times(t, n_steps):
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    times = np.linspace(0.0, t, n_steps + 1)
    times[-1] = t
    return times


def bm_paths(t, x, n_steps, n_paths, rng, antithetic=False):
    """Brownian paths from x, array of shape (n_steps+1, n_paths, d).

    With ``antithetic`` the second half of the paths uses negated increments
    of the first half (n_paths must then be even).
    """
    x = _as_points(x)
    d = x.shape[-1]
    dt = t / n_steps
    m = n_paths // 2 if antithetic else n_paths
    z = rng.standard_normal((n_steps, m, d))
    if antithetic:
        if n_paths % 2:
            raise ValueError("antithetic sampling needs an even path count")
        z = np.concatenate([z, -z], axis=1)
    out = np.empty((n_steps + 1, n_paths, d))
    out[0] = x
    np.cumsum(z, axis=0, out=out[1:])
    out[1:] *= np.sqrt(dt)
    out[1:] += x
    return out


def bridge_paths(t, x, y, n_steps, n_paths, rng, antithetic=False):
    """Brownian bridges x -> y on [0, t], array of shape (n_steps+1, n_paths, d).

    Built as B_s = x + W_s - (s/t) W_t + (s/t)(y - x), which has exactly the
    conditional law of BM given B_t = y.  Endpoints are copied, so they are
    bit-exact.
    """
    x = _as_points(x)
    y = _as_points(y, x.shape[-1])
    w = bm_paths(t, np.zeros_like(x), n_steps, n_paths, rng, antithetic)
    frac = (np.arange(n_steps + 1) / n_steps)[:, None, None]
    w -= frac * w[-1]
    w += x + frac * (y - x)
    w[0] = x
    w[-1] = y
    return w


def sample_bm(t, x, n_steps, rng):
    """One Brownian path from x on a uniform grid of n_steps steps."""
    pts = bm_paths(t, x, n_steps, 1, as_generator(rng))[:, 0, :]
    return Path(uniform_times(t, n_steps), pts)


def sample_bridge(t, x, y, n_steps, rng):
    """One Brownian bridge from x at time 0 to y at time t."""
    if t <= 0:
        raise ValueError("t must be positive")
    pts = bridge_paths(t, x, y, n_steps, 1, as_generator(rng))[:, 0, :]
    return Path(uniform_times(t, n_steps), pts)
