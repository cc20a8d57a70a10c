"""Feynman–Kac Monte Carlo for p(t,x,y), T_t^V 1(x) and G(x,y).

Kernel values use the bridge reduction

    p(t, x, y) = q(t, x, y) * E[exp(-∫_0^t V(b_s) ds)],

with b a Brownian bridge from x to y, so no density estimation is needed.

Paths are generated in fixed-size blocks.  Block ``b`` draws from the
counter-based stream ``(seed, b)`` and block results are combined in block
order, so estimates are bit-identical for any number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import integrate

from .envelopes import large_time_exponent
from .freekernel import (Path, bm_paths, bridge_paths, free_time_integral, norm,
                         q, q_dist, stream)
from .potentials import PotentialSpec

QUADRATURES = ("left", "midpoint", "trapezoid")
BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class McConfig:
    n_paths: int = 10_000
    n_steps: int = 64
    seed: int = 0
    quadrature: str = "trapezoid"
    antithetic: bool = False
    step_halving_check: bool = False
    threads: int = 1
    compensated: bool = False
    t_cap: float = 30.0

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be >= 1")
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"quadrature must be one of {QUADRATURES}")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even n_paths")

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass
class KernelEstimate:
    """Monte Carlo value with its standard error.

    ``stderr`` is the sample standard deviation over √n; with antithetic
    sampling the pair averages are the samples.
    """

    value: float
    stderr: float
    n_paths: int
    n_steps: int
    method: str
    bias_probe: float | None = None
    extras: dict = field(default_factory=dict)

    def record(self, **context):
        out = dict(context)
        out.update(value=self.value, stderr=self.stderr, n_paths=self.n_paths,
                   n_steps=self.n_steps, method=self.method)
        if self.bias_probe is not None:
            out["bias_probe"] = self.bias_probe
        out.update(self.extras)
        return out

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# path functionals


def _path_integrals(pot, pts, t, quadrature):
    """∫_0^t V along each path; ``pts`` has shape (n+1, n_paths, d)."""
    n = pts.shape[0] - 1
    r = np.sqrt(np.einsum("kpd,kpd->kp", pts, pts))
    v = pot.radial(r)
    dt = t / n
    if quadrature == "trapezoid":
        return dt * (v[1:-1].sum(axis=0) + 0.5 * (v[0] + v[-1]))
    if quadrature == "left":
        return dt * v[:-1].sum(axis=0)
    if n % 2:
        raise ValueError("midpoint quadrature needs an even number of fine steps")
    return 2.0 * dt * v[1::2].sum(axis=0)


def _weights(pot, pts, t, quadrature):
    return np.exp(-_path_integrals(pot, pts, t, quadrature))


def path_weight(pot: PotentialSpec, path: Path, quadrature="trapezoid"):
    """exp(-Q) with Q the chosen quadrature of s -> V(path(s)).

    For ``midpoint`` the odd nodes of the path serve as the midpoints of a
    grid with half as many cells.
    """
    steps = np.diff(path.times)
    if not np.allclose(steps, steps[0], rtol=1e-12, atol=0):
        raise ValueError("path_weight expects a uniform time grid")
    pts = path.points[:, None, :]
    return float(_weights(pot, pts, path.t, quadrature)[0])


# ---------------------------------------------------------------------------
# block engine


def block_size(n_steps, d, antithetic=False):
    b = BLOCK_ELEMENTS // ((n_steps + 1) * d)
    b = int(min(8192, max(64, b)))
    return b - (b % 2) if antithetic else b


def _moments(w, compensated):
    n = w.size
    if np.all(w == w[0]):
        return n, float(w[0]), 0.0
    if compensated:
        mean = math.fsum(w) / n
        return n, mean, math.fsum((w - mean) ** 2)
    mean = float(w.mean())
    return n, mean, float(np.sum((w - mean) ** 2))


def _combine(parts):
    n, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta * delta * (n * nb / tot)
        n = tot
    return n, mean, m2


def mc_mean(sample_weights, n_paths, n_steps, d, seed, antithetic=False,
            threads=1, compensated=False):
    """Mean and standard error of per-path weights.

    ``sample_weights(rng, n)`` returns n weights; with ``antithetic`` the
    second half must mirror the first half and pairs are averaged.
    """
    bs = block_size(n_steps, d, antithetic)
    sizes = [bs] * (n_paths // bs)
    if n_paths % bs:
        sizes.append(n_paths % bs)

    def work(b):
        w = sample_weights(stream(seed, b), sizes[b])
        if antithetic:
            h = w.size // 2
            w = 0.5 * (w[:h] + w[h:])
        return _moments(w, compensated)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(b) for b in range(len(sizes))]
    n, mean, m2 = _combine(parts)
    if m2 == 0.0 or n < 2:
        return mean, 0.0
    return mean, math.sqrt(m2 / (n - 1) / n)


def _fine_steps(cfg, n_steps):
    return 2 * n_steps if cfg.quadrature == "midpoint" else n_steps


def _check_sign_cap(pot, t, cfg):
    if pot.sign < 0 and not pot.is_constant and t > cfg.t_cap:
        raise ValueError(f"negative-potential estimates limited to t <= t_cap={cfg.t_cap}")


def _estimate_mean(pot, t, x, y, cfg, n_steps):
    """Bridge (y given) or free-path (y None) average of the path weight."""
    d = np.atleast_1d(np.asarray(x, float)).size
    fine = _fine_steps(cfg, n_steps)

    def weights(rng, n):
        if y is None:
            pts = bm_paths(t, x, fine, n, rng, cfg.antithetic)
        else:
            pts = bridge_paths(t, x, y, fine, n, rng, cfg.antithetic)
        return _weights(pot, pts, t, cfg.quadrature)

    return mc_mean(weights, cfg.n_paths, fine, d, cfg.seed, cfg.antithetic,
                   cfg.threads, cfg.compensated)


def estimate_survival(pot: PotentialSpec, t, x, cfg: McConfig) -> KernelEstimate:
    """T_t^V 1(x) = E_x[exp(-∫_0^t V(B_s) ds)] over free Brownian paths."""
    if t <= 0:
        raise ValueError("t must be positive")
    _check_sign_cap(pot, t, cfg)
    mean, se = _estimate_mean(pot, t, x, None, cfg, cfg.n_steps)
    probe = None
    if cfg.step_halving_check:
        probe, _ = _estimate_mean(pot, t, x, None, cfg, 2 * cfg.n_steps)
    return KernelEstimate(mean, se, cfg.n_paths, cfg.n_steps, "fkmc_survival", probe)


def estimate_kernel(pot: PotentialSpec, t, x, y, cfg: McConfig) -> KernelEstimate:
    """p(t,x,y) as q(t,x,y) times the bridge average of the path weight."""
    if t <= 0:
        raise ValueError("t must be positive")
    _check_sign_cap(pot, t, cfg)
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    q0 = float(q(t, x, y))
    mean, se = _estimate_mean(pot, t, x, y, cfg, cfg.n_steps)
    probe = None
    if cfg.step_halving_check:
        m2, _ = _estimate_mean(pot, t, x, y, cfg, 2 * cfg.n_steps)
        probe = q0 * m2
    return KernelEstimate(q0 * mean, q0 * se, cfg.n_paths, cfg.n_steps,
                          "fkmc_bridge", probe)


# ---------------------------------------------------------------------------
# Green function


def node_seed(seed, j):
    return int(np.random.SeedSequence([int(seed) & (2**63 - 1), int(j)])
               .generate_state(1, np.uint64)[0])


def _green_tails(pot, r, d, t_min, t_max, ratio_at_tmax):
    """Small-t and large-t tail contributions for the Green quadrature."""
    if pot.is_constant:
        c = pot.constant_value
        if c == 0:
            small = free_time_integral(r, d, 0.0, t_min)
            large = free_time_integral(r, d, t_max) if d >= 3 else np.inf
            return small, large
        f = lambda s: math.exp(-c * s) * float(q_dist(s, r, d))
        small = integrate.quad(f, 0.0, t_min, limit=200)[0]
        large = integrate.quad(f, t_max, np.inf, limit=200)[0]
        return small, large
    small = free_time_integral(r, d, 0.0, t_min)
    g = large_time_exponent(pot.alpha)
    base = t_max ** g
    f = lambda s: float(q_dist(s, r, d)) * math.exp(-(s ** g - base))
    large = ratio_at_tmax * integrate.quad(f, t_max, np.inf, limit=400)[0]
    return small, large


def estimate_green(pot: PotentialSpec, x, y, cfg: McConfig, t_min, t_max,
                   n_time_nodes=None, nodes_per_decade=40, steps_per_time=8.0,
                   max_steps=2048) -> KernelEstimate:
    """G(x,y) = ∫_0^∞ p(t,x,y) dt by log-spaced quadrature of estimate_kernel.

    The interval [t_min, t_max] is integrated with the trapezoid rule in
    log t.  The piece below t_min uses the free kernel (p <= q and p ≈ q
    at small t).  The piece above t_max continues the observed ratio
    p/q at t_max with the large-time decay exp(-t^((2-alpha)/(2+alpha)))
    at unit constant.  Both tails are reported in ``extras``.
    """
    if pot.sign < 0 and not (pot.is_constant and pot.amplitude == 0):
        raise ValueError("Green function estimates need a nonnegative potential")
    if not pot.is_constant and not 0 < pot.alpha < 2:
        raise ValueError("Green function estimates need alpha in (0, 2)")
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    d = x.size
    if d < 2:
        raise ValueError("Green function estimates need d >= 2")
    r = float(norm(x - y))
    if r == 0:
        raise ValueError("x and y must differ")
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    if n_time_nodes is None:
        n_time_nodes = int(math.ceil(nodes_per_decade * math.log10(t_max / t_min))) + 1
    ts = np.geomspace(t_min, t_max, n_time_nodes)
    vals = np.empty(n_time_nodes)
    ses = np.empty(n_time_nodes)
    for j, t in enumerate(ts):
        steps = int(min(max_steps, max(cfg.n_steps, math.ceil(steps_per_time * t))))
        est = estimate_kernel(pot, t, x, y, cfg.with_(n_steps=steps,
                                                      seed=node_seed(cfg.seed, j),
                                                      step_halving_check=False))
        vals[j], ses[j] = est.value, est.stderr
    h = np.diff(np.log(ts))
    w = np.zeros(n_time_nodes)
    w[:-1] += 0.5 * h
    w[1:] += 0.5 * h
    w *= ts
    middle = float(np.dot(w, vals))
    se = float(np.sqrt(np.dot(w * w, ses * ses)))
    ratio = vals[-1] / float(q(ts[-1], x, y))
    small, large = _green_tails(pot, r, d, t_min, t_max, ratio)
    extras = {"tail_small_t": small, "tail_large_t": large, "quadrature_part": middle,
              "n_time_nodes": n_time_nodes, "t_min": t_min, "t_max": t_max}
    if d >= 3:
        extras["tail_large_t_free_bound"] = free_time_integral(r, d, t_max)
    return KernelEstimate(middle + small + large, se, cfg.n_paths, cfg.n_steps,
                          "fkmc_green", None, extras)
