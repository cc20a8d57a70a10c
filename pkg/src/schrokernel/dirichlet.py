"""Dirichlet heat kernels of balls and the first-exit decomposition.

q_B(t,x,y) is the density of Brownian motion killed on leaving the ball B.
For d = 1 the ball is an interval and the eigenfunction series is exact.
For any d the killed kernel is estimated as q(t,x,y) times the probability
that a Brownian bridge from x to y stays in B.  Between grid nodes the
bridge may leave and come back; that chance is accounted for with the
bridge crossing probability exp(-2 a_u a_v / Δ) of a flat boundary at
distances a_u, a_v from the two nodes.  In d = 1 the boundary is flat and
the correction is exact per endpoint; in d >= 2 the sphere is replaced by
its tangent plane.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .fkmc import KernelEstimate, McConfig, estimate_kernel, mc_mean, node_seed
from .freekernel import bm_paths, bridge_paths, norm, q
from .pde import GridConfig, solve_1d


@dataclass(frozen=True)
class Ball:
    center: tuple
    R: float

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        object.__setattr__(self, "center", tuple(np.atleast_1d(np.asarray(self.center, float))))

    @property
    def dim(self):
        return len(self.center)

    def contains(self, x):
        return bool(norm(np.atleast_1d(np.asarray(x, float)) - np.array(self.center)) < self.R)

    def in_closure(self, x):
        return bool(norm(np.atleast_1d(np.asarray(x, float)) - np.array(self.center)) <= self.R)


# ---------------------------------------------------------------------------
# exact interval kernel


def interval_terms_needed(t, R, tol=1e-12):
    """Smallest N with (1/R) Σ_{n>N} exp(-n^2 π^2 t / (8 R^2)) < tol."""
    a = math.pi ** 2 * t / (8.0 * R * R)
    sa = math.sqrt(a)
    n = 1
    # integral bound: Σ_{n>N} e^{-a n^2} <= (1/2) sqrt(π/a) erfc(N sqrt(a))
    while 0.5 * math.sqrt(math.pi / a) * special.erfc(n * sa) / R >= tol:
        n *= 2
    lo, hi = n // 2, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if 0.5 * math.sqrt(math.pi / a) * special.erfc(mid * sa) / R < tol:
            hi = mid
        else:
            lo = mid
    return max(hi, 1)


def interval_kernel_exact(t, x, y, R, n_terms=None):
    """Dirichlet kernel of 1/2 d^2/dx^2 on (-R, R) by its sine series.

    Σ_n (1/R) sin(nπ(x+R)/2R) sin(nπ(y+R)/2R) exp(-n^2 π^2 t / 8R^2); by
    default enough terms are summed for a tail below 1e-12.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(x) >= R) or np.any(np.abs(y) >= R):
        raise ValueError("x and y must lie in (-R, R)")
    if n_terms is None:
        n_terms = interval_terms_needed(float(t.min()), R)
    n = np.arange(1, n_terms + 1)
    k = n * math.pi / (2.0 * R)
    decay = np.exp(-0.5 * np.multiply.outer(t, k * k))
    xs = np.sin(np.multiply.outer(x + R, k))
    ys = np.sin(np.multiply.outer(y + R, k))
    return np.sum(xs * ys * decay, axis=-1) / R


# ---------------------------------------------------------------------------
# killed bridges


def _boundary_distances(pts, ball):
    """Signed distance to the boundary, positive inside; shape (n+1, P)."""
    c = np.array(ball.center)
    if pts.shape[-1] == 1:
        u = pts[..., 0] - c[0]
        return ball.R - np.abs(u), u
    diff = pts - c
    return ball.R - np.sqrt(np.einsum("kpd,kpd->kp", diff, diff)), None


def survival_weights(pts, ball, t):
    """Probability that each piecewise bridge stays in the ball, given its nodes."""
    n = pts.shape[0] - 1
    dt = t / n
    c = ball.center[0]
    if pts.shape[-1] == 1:
        u = pts[..., 0]
        lo = u - (c - ball.R)
        hi = (c + ball.R) - u
        inside = np.all((lo > 0) & (hi > 0), axis=0)
        lo = np.maximum(lo, 0.0)
        hi = np.maximum(hi, 0.0)
        p_lo = np.exp(-2.0 * lo[:-1] * lo[1:] / dt)
        p_hi = np.exp(-2.0 * hi[:-1] * hi[1:] / dt)
        with np.errstate(divide="ignore"):
            log_s = np.sum(np.log1p(-p_lo) + np.log1p(-p_hi), axis=0)
    else:
        dist, _ = _boundary_distances(pts, ball)
        inside = np.all(dist > 0, axis=0)
        dist = np.maximum(dist, 0.0)
        p = np.exp(-2.0 * dist[:-1] * dist[1:] / dt)
        with np.errstate(divide="ignore"):
            log_s = np.sum(np.log1p(-p), axis=0)
    return np.where(inside, np.exp(log_s), 0.0)


def _killed_mean(t, x, y, ball, cfg, n_steps):
    d = x.size

    def weights(rng, m):
        pts = bridge_paths(t, x, y, n_steps, m, rng, cfg.antithetic)
        return survival_weights(pts, ball, t)

    return mc_mean(weights, cfg.n_paths, n_steps, d, cfg.seed, cfg.antithetic,
                   cfg.threads, cfg.compensated)


def estimate_killed_kernel(t, x, y, center, R, d, cfg: McConfig) -> KernelEstimate:
    """q_B(t,x,y) for B = B(center, R) by killed Brownian bridges."""
    if t <= 0:
        raise ValueError("t must be positive")
    ball = Ball(center, R)
    x = np.atleast_1d(np.asarray(x, float))
    y = np.atleast_1d(np.asarray(y, float))
    if x.size != d or y.size != d or ball.dim != d:
        raise ValueError("x, y and center must have dimension d")
    if not (ball.contains(x) and ball.contains(y)):
        raise ValueError("x and y must lie inside the ball")
    q0 = float(q(t, x, y))
    mean, se = _killed_mean(t, x, y, ball, cfg, cfg.n_steps)
    probe = None
    if cfg.step_halving_check:
        m2, _ = _killed_mean(t, x, y, ball, cfg, 2 * cfg.n_steps)
        probe = q0 * m2
    est = KernelEstimate(q0 * mean, q0 * se, cfg.n_paths, cfg.n_steps, "killed_bridge", probe)
    est.extras.update({"R": float(R), "center": [float(c) for c in ball.center]})
    return est


@dataclass
class DecayFit:
    rate: float
    c: float
    r2: float


def fit_decay_rate(ts, values, R):
    """Least-squares fit log v = a - λ t; reports λ and c = λ R^2."""
    ts = np.asarray(ts, float)
    lv = np.log(np.asarray(values, float))
    A = np.vstack([np.ones_like(ts), ts]).T
    coef, *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - A @ coef
    ss = float(np.sum((lv - lv.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return DecayFit(-coef[1], -coef[1] * R * R, r2)


# ---------------------------------------------------------------------------
# first-exit decomposition


@dataclass
class ExitIdentityReport:
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float
    combined_stderr: float
    passed: bool
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        return {"lhs": self.lhs, "lhs_stderr": self.lhs_stderr, "rhs": self.rhs,
                "rhs_stderr": self.rhs_stderr, "combined_stderr": self.combined_stderr,
                "pass": self.passed, **self.extras}


def _exit_weights(pot, pts, t, a, b, boundary_kernel):
    """Per-path value of exp(-∫_0^τ V) p(t - τ, B_τ, y) 1{τ <= t}.

    Exit inside a step is accounted for by its bridge crossing probability
    (Rao-Blackwellised: every step adds its crossing mass instead of
    sampling the crossing), with τ placed at the step midpoint.
    """
    n = pts.shape[0] - 1
    dt = t / n
    u = pts[..., 0]
    v_pot = pot.radial(np.abs(u))
    m = u.shape[1]
    alive = np.ones(m)
    integral = np.zeros(m)
    out = np.zeros(m)
    for k in range(n):
        tau = (k + 0.5) * dt
        f_a, f_b = boundary_kernel(t - tau)
        u0, u1 = u[k], u[k + 1]
        w = alive * np.exp(-integral - 0.5 * dt * v_pot[k])
        out_lo = u1 <= a
        out_hi = u1 >= b
        gone = out_lo | out_hi
        lo0, lo1 = u0 - a, np.maximum(u1 - a, 0.0)
        hi0, hi1 = b - u0, np.maximum(b - u1, 0.0)
        p_lo = np.where(out_lo, 1.0, np.exp(-2.0 * lo0 * lo1 / dt))
        p_hi = np.where(out_hi, 1.0, np.where(out_lo, 0.0, np.exp(-2.0 * hi0 * hi1 / dt)))
        p_lo = np.where(out_hi, 0.0, p_lo)
        out += w * (p_lo * f_a + p_hi * f_b)
        alive = np.where(gone, 0.0, alive * np.clip(1.0 - p_lo - p_hi, 0.0, 1.0))
        integral += 0.5 * dt * (v_pot[k] + v_pot[k + 1])
    return out


def check_exit_identity(pot, t, x, y, U: Ball, cfg: McConfig,
                        pde_cfg: GridConfig | None = None) -> ExitIdentityReport:
    """Compare p(t,x,y) with E_x[exp(-∫_0^τ V) p(t-τ, B_τ, y); τ <= t] in d = 1.

    The left side is ``estimate_kernel``; the right side samples free paths
    from x, and p(., B_τ, y) comes from one Crank–Nicolson solve started at
    y whose values at the two interval ends are kept at every time level.
    """
    if U.dim != 1:
        raise ValueError("the exit identity check is implemented for d = 1")
    x = float(np.atleast_1d(x)[0])
    y = float(np.atleast_1d(y)[0])
    if not U.contains(x):
        raise ValueError("x must lie in U")
    if U.in_closure(y):
        raise ValueError("y must lie outside the closure of U")
    a = U.center[0] - U.R
    b = U.center[0] + U.R
    if pde_cfg is None:
        pde_cfg = GridConfig(n_space=4000, n_time=2000)
    extent = max(abs(a), abs(b), abs(y)) + 6.0 * math.sqrt(t) + 1.0
    sol = solve_1d(pot, t, y, pde_cfg if pde_cfg.extent else
                   GridConfig(**{**pde_cfg.__dict__, "extent": extent}), record_at=[a, b])
    ht = np.concatenate([[0.0], sol.history_times])
    ha = np.concatenate([[0.0], sol.history[:, 0]])
    hb = np.concatenate([[0.0], sol.history[:, 1]])

    def boundary_kernel(T):
        return float(np.interp(T, ht, ha)), float(np.interp(T, ht, hb))

    lhs = estimate_kernel(pot, t, x, y, cfg.with_(seed=node_seed(cfg.seed, 0)))
    rhs_cfg = cfg.with_(seed=node_seed(cfg.seed, 1), antithetic=False)
    x0 = np.array([x])

    def weights(rng, m):
        pts = bm_paths(t, x0, rhs_cfg.n_steps, m, rng)
        return _exit_weights(pot, pts, t, a, b, boundary_kernel)

    mean, se = mc_mean(weights, rhs_cfg.n_paths, rhs_cfg.n_steps, 1, rhs_cfg.seed,
                       False, rhs_cfg.threads, rhs_cfg.compensated)
    comb = math.sqrt(lhs.stderr ** 2 + se ** 2)
    passed = abs(lhs.value - mean) <= 3.0 * comb
    return ExitIdentityReport(lhs.value, lhs.stderr, mean, se, comb, passed,
                              {"t": t, "x": x, "y": y, "R": U.R, "center": [float(c) for c in U.center],
                               "pde_mass": sol.mass})
