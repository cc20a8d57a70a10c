"""Crank–Nicolson oracle for p(t, x0, .) of ∂_t u = 1/2 Δu - V u.

``solve_1d`` works on a full line grid, ``solve_radial`` on a radius grid
for sources at the origin in d = 2, 3.  Both start from the mollified delta
q(eps, x0, .) at time eps and step to t on a graded time mesh
(s_k = eps + (t - eps)(k/n)^2), which resolves the narrow initial Gaussian
without a tiny uniform step.  The first two Crank–Nicolson steps are
replaced by four implicit Euler half steps (Rannacher start-up) to damp
the high-frequency content of the initial data.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.special import erf

from .freekernel import q_dist


@dataclass(frozen=True)
class GridConfig:
    """Discretisation settings.

    ``extent`` is the half width of the 1-d domain or r_max of the radial
    grid; None picks |x0| + 6√t.  ``eps`` None means t/1000.  With
    ``initial_correction`` the initial data are q(eps, x0, x) times
    exp(-eps (V(x0) + V(x)) / 2), the short-time Feynman–Kac weight of the
    straight bridge, which removes the O(eps) offset of a bare q(eps, ...)
    start.
    """

    n_space: int = 800
    n_time: int = 400
    extent: float | None = None
    eps: float | None = None
    initial_correction: bool = True
    rannacher_steps: int = 2
    boundary: str = "dirichlet_truncation"

    def __post_init__(self):
        if self.n_space < 16 or self.n_time < 2:
            raise ValueError("need n_space >= 16 and n_time >= 2")
        if self.boundary != "dirichlet_truncation":
            raise ValueError("only dirichlet_truncation is supported")

    def refined(self, factor=2):
        return replace(self, n_space=self.n_space * factor, n_time=self.n_time * factor)


@dataclass
class PdeSolution:
    grid: np.ndarray
    values: np.ndarray
    t: float
    d: int
    eps: float
    mass: float
    n_space: int
    n_time: int
    radial: bool
    min_value: float
    flags: tuple = ()
    history_times: np.ndarray | None = None
    history: np.ndarray | None = None

    def at(self, points):
        """Cubic interpolation of the profile (radius for radial solves)."""
        spline = CubicSpline(self.grid, self.values)
        return spline(np.asarray(points, dtype=float))

    def to_csv(self, path):
        col = "r" if self.radial else "x"
        with open(path, "w", newline="") as fh:
            fh.write(f"# t={self.t!r} d={self.d} eps={self.eps!r} "
                     f"n_space={self.n_space} n_time={self.n_time}\n")
            w = csv.writer(fh)
            w.writerow([col, "value"])
            for g, v in zip(self.grid, self.values):
                w.writerow([repr(float(g)), repr(float(v))])


def _time_mesh(eps, t, n):
    k = np.arange(n + 1) / n
    s = eps + (t - eps) * k * k
    s[-1] = t
    return s


def _march(lower, diag, upper, u, times, probe=None):
    """Integrate u' = A u with A tridiagonal (lower, diag, upper) over ``times``.

    ``probe(u)`` is called at every mesh time after the first; its results
    are returned as the history.
    """
    n = len(u)
    ab = np.zeros((3, n))
    flags = []
    steps = []
    dts = np.diff(times)
    for j, dt in enumerate(dts):
        if j < 2:
            steps += [("euler", 0.5 * dt, False), ("euler", 0.5 * dt, True)]
        else:
            steps.append(("cn", dt, True))
    min_val = float(u.min())
    history = [probe(u)] if probe is not None else None
    for kind, dt, at_node in steps:
        theta = 1.0 if kind == "euler" else 0.5
        # (I - theta dt A) u_new = (I + (1 - theta) dt A) u
        rhs = u.copy()
        if theta < 1.0:
            c = (1.0 - theta) * dt
            rhs = u + c * diag * u
            rhs[1:] += c * lower * u[:-1]
            rhs[:-1] += c * upper * u[1:]
        ab[0, 1:] = -theta * dt * upper
        ab[1, :] = 1.0 - theta * dt * diag
        ab[2, :-1] = -theta * dt * lower
        u = solve_banded((1, 1), ab, rhs, check_finite=False)
        min_val = min(min_val, float(u.min()))
        if probe is not None and at_node:
            history.append(probe(u))
    if min_val < -1e-12 * float(np.abs(u).max()):
        flags.append("negative_values")
    return u, min_val, flags, history


def _eps_for(t, cfg):
    eps = cfg.eps if cfg.eps is not None else t / 1000.0
    if not 0 < eps < t / 10:
        raise ValueError("need 0 < eps < t/10")
    return eps


def _resolution_flags(h, eps, n_time, t):
    flags = []
    if h > 0.5 * math.sqrt(eps):
        flags.append("coarse_space_vs_eps")
    if n_time < 50:
        flags.append("few_time_steps")
    return flags


def solve_1d(pot, t, x0, cfg: GridConfig = GridConfig(), record_at=None) -> PdeSolution:
    """p(t, x0, .) on the line by Crank–Nicolson.

    With ``record_at`` (points of the line) the solution at those points is
    kept at every mesh time s_k in ``history`` (shape (n_time+1, n_points),
    linear interpolation between nodes), with the times in ``history_times``.
    """
    eps = _eps_for(t, cfg)
    half = cfg.extent if cfg.extent is not None else abs(x0) + 6.0 * math.sqrt(t)
    if half < abs(x0) + 6.0 * math.sqrt(t) - 1e-12:
        raise ValueError("extent must be at least |x0| + 6 sqrt(t)")
    x = np.linspace(-half, half, cfg.n_space + 1)
    h = x[1] - x[0]
    xi = x[1:-1]
    v = pot.radial(np.abs(xi))
    u = q_dist(eps, xi - x0, 1)
    if cfg.initial_correction:
        u = u * np.exp(-0.5 * eps * (pot.radial(abs(x0)) + v))
    m = len(xi)
    lower = np.full(m - 1, 0.5 / h**2)
    upper = np.full(m - 1, 0.5 / h**2)
    diag = -1.0 / h**2 - v
    probe = None
    if record_at is not None:
        pts = np.atleast_1d(np.asarray(record_at, float))
        if np.any(np.abs(pts) > half):
            raise ValueError("record_at points must lie inside the grid")
        pos = (pts + half) / h
        i0 = np.clip(np.floor(pos).astype(int), 0, cfg.n_space - 1)
        frac = pos - i0

        def probe(u_in):
            full = np.concatenate([[0.0], u_in, [0.0]])
            return full[i0] * (1.0 - frac) + full[i0 + 1] * frac

    mesh = _time_mesh(eps, t, cfg.n_time)
    u, min_val, flags, hist = _march(lower, diag, upper, u, mesh, probe)
    vals = np.concatenate([[0.0], u, [0.0]])
    mass = float(np.trapezoid(vals, x))
    flags += _resolution_flags(h, eps, cfg.n_time, t)
    return PdeSolution(x, vals, t, 1, eps, mass, cfg.n_space, cfg.n_time, False,
                       min_val, tuple(flags),
                       mesh if hist is not None else None,
                       np.array(hist) if hist is not None else None)


def _sphere_area(d):
    return 2.0 * math.pi ** (0.5 * d) / math.gamma(0.5 * d)


def _cell_average_q(eps, a, b, d):
    """∫_a^b q_dist(eps, r, d) r^(d-1) dr, exact; cells must not straddle 0."""
    ea = np.exp(-a * a / (2 * eps))
    eb = np.exp(-b * b / (2 * eps))
    if d == 2:
        return (ea - eb) / (2 * np.pi)
    s = np.sqrt(2 * eps)
    prim = lambda r, e: -eps * r * e + eps * np.sqrt(0.5 * np.pi * eps) * erf(r / s)
    return (prim(b, eb) - prim(a, ea)) * (2 * np.pi * eps) ** -1.5


def solve_radial(pot, t, d, cfg: GridConfig = GridConfig()) -> PdeSolution:
    """p(t, 0, r) for a radial potential in d = 2 or 3.

    Finite-volume discretisation of 1/2 r^(1-d) (r^(d-1) u_r)_r on cells
    centred at r_i = i h, with a zero-flux half cell at the origin
    (the u_r(0) = 0 regularity condition) and u = 0 at r_max.
    """
    if d not in (2, 3):
        raise ValueError("solve_radial supports d = 2, 3")
    eps = _eps_for(t, cfg)
    rmax = cfg.extent if cfg.extent is not None else 6.0 * math.sqrt(t)
    if rmax < 6.0 * math.sqrt(t) - 1e-12:
        raise ValueError("r_max must be at least 6 sqrt(t)")
    r = np.linspace(0.0, rmax, cfg.n_space + 1)
    h = r[1] - r[0]
    ri = r[:-1]
    faces = ri + 0.5 * h
    area = faces ** (d - 1)
    lo_edge = np.maximum(ri - 0.5 * h, 0.0)
    vol = (faces**d - lo_edge**d) / d
    v = pot.radial(ri)
    # cell averages, not point values: the origin cells are too coarse to
    # carry the initial mass by point sampling
    u = _cell_average_q(eps, lo_edge, np.minimum(faces, rmax), d) / vol
    if cfg.initial_correction:
        u = u * np.exp(-0.5 * eps * (pot.radial(0.0) + v))
    coef = 0.5 / h
    upper = coef * area[:-1] / vol[:-1]
    lower = coef * area[:-1] / vol[1:]
    diag = -coef * area / vol - v
    diag[1:] -= coef * area[:-1] / vol[1:]
    u, min_val, flags, _ = _march(lower, diag, upper, u, _time_mesh(eps, t, cfg.n_time))
    vals = np.concatenate([u, [0.0]])
    mass = float(_sphere_area(d) * np.dot(vol, u))
    flags += _resolution_flags(h, eps, cfg.n_time, t)
    return PdeSolution(r, vals, t, d, eps, mass, cfg.n_space, cfg.n_time, True,
                       min_val, tuple(flags))


@dataclass
class RichardsonResult:
    value: np.ndarray
    fine: np.ndarray
    error: np.ndarray
    points: np.ndarray


def richardson(solve, points, cfg: GridConfig, order=2):
    """Solve at cfg and at doubled resolution; extrapolate at ``points``.

    ``solve`` maps a GridConfig to a PdeSolution.  The error estimate is
    |fine - coarse| / (2^order - 1).
    """
    coarse = solve(cfg).at(points)
    fine_sol = solve(cfg.refined())
    fine = fine_sol.at(points)
    if fine_sol.flags:
        warnings.warn(f"PDE solve flags: {fine_sol.flags}")
    k = 2**order - 1
    return RichardsonResult(fine + (fine - coarse) / k, fine,
                            np.abs(fine - coarse) / k, np.asarray(points, float))
