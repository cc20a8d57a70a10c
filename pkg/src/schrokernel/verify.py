"""Turning two-sided estimates into checks.

``fit_sandwich`` fits the constants of c1 f(c2 .) <= g <= c3 f(c4 .) to a
table of estimates, ``slope_fit`` reads off stretched exponents and
``regime_scan`` locates the switch between the short-time and the
large-time branch.  The ``suite_*`` functions assemble complete runs from a
potential and a Monte Carlo configuration; they are what the command line
``verify`` and ``scan`` subcommands execute.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import envelopes as env_mod
from .dirichlet import (Ball, check_exit_identity, estimate_killed_kernel, fit_decay_rate,
                        interval_kernel_exact)
from .envelopes import EnvelopeParams, large_time_exponent, regime as regime_label
from .fkmc import McConfig, estimate_green, estimate_kernel, node_seed
from .freekernel import norm, q, t0
from .potentials import PotentialSpec

CSV_COLUMNS = ("t", "x_norm", "y_norm", "dist", "estimate", "stderr", "envelope",
               "ratio", "regime")
DEFAULT_CEILINGS = {"mc": 25.0, "pde": 8.0}


def arg_grid(n=17, lo=1 / 8, hi=8.0):
    return np.geomspace(lo, hi, n)


@dataclass
class VerifyReport:
    """Outcome of a sandwich fit.

    ``ratio_min`` = c1 is the smallest estimate / lower envelope and
    ``ratio_max`` = c3 the largest estimate / upper envelope.  ``band`` is
    the widest pointwise sandwich c3 f(c4 .) / (c1 f(c2 .)) over the
    table; it is >= 1 and equals ratio_max / ratio_min when c2 = c4.
    """

    fitted: EnvelopeParams
    ratio_min: float
    ratio_max: float
    band: float
    band_ceiling: float
    passed: bool
    valid: bool
    table: list
    n_rejected: int = 0
    n_excluded: int = 0
    n_outside: int = 0
    family: str = ""
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"family": self.family, "fitted": self.fitted.to_dict(),
                "ratio_min": self.ratio_min, "ratio_max": self.ratio_max,
                "band": self.band, "band_ceiling": self.band_ceiling,
                "pass": self.passed, "valid": self.valid,
                "n_points": len(self.table), "n_rejected": self.n_rejected,
                "n_excluded": self.n_excluded, "n_outside": self.n_outside,
                "notes": list(self.notes), "table": self.table}

    def to_csv(self, path_or_buf=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.table:
            w.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        text = buf.getvalue()
        if path_or_buf is not None:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return text


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating, int, np.integer)) else str(v)


def fit_sandwich(estimates, envelope, band_ceiling=25.0, regime=None, c_grid=None,
                 min_points=10):
    """Fit c1 f(c2 .) <= g <= c3 f(c4 .) over a table of estimates.

    Parameters
    ----------
    estimates : sequence of (t, x, y, value, stderr)
    envelope : callable (t, x, y, c) -> f with argument constant c
    band_ceiling : float
        The fit passes when the band is at most this.
    regime : callable (t, x, y) -> str, optional
        Labels the table rows.
    c_grid : array, optional
        Candidate argument constants, default 17 log-spaced in [1/8, 8].
        Families with ``n_args`` = k search the k-fold product of the grid.

    Nonpositive values are rejected (more than 20% makes the report
    invalid).  Values below 10 stderr are left out of the fit and are only
    required to lie within 3 stderr of the fitted sandwich.
    """
    if len(estimates) < min_points:
        raise ValueError(f"need at least {min_points} estimates")
    c_grid = arg_grid() if c_grid is None else np.asarray(c_grid, float)
    n_args = getattr(envelope, "n_args", 1)
    if n_args == 1:
        cands = [float(c) for c in c_grid]
        size = np.abs(np.log(c_grid))
    else:
        cands = [tuple(float(v) for v in c) for c in itertools.product(c_grid, repeat=n_args)]
        size = np.array([np.abs(np.log(c)).sum() for c in cands])
    rows = []
    rejected = 0
    for t, x, y, v, se in estimates:
        if not v > 0:
            rejected += 1
            continue
        rows.append((float(t), np.atleast_1d(np.asarray(x, float)),
                     np.atleast_1d(np.asarray(y, float)), float(v), float(se)))
    valid = rejected <= 0.2 * len(estimates)
    g = np.array([r[3] for r in rows])
    se = np.array([r[4] for r in rows])
    fit_mask = g >= 10.0 * se
    if fit_mask.sum() < 2:
        raise ValueError("fewer than two points are resolved above 10 stderr")
    log_env = getattr(envelope, "log", None)
    if log_env is None:
        with np.errstate(divide="ignore"):
            log_env = lambda t, x, y, c: np.log(envelope(t, x, y, c))
    LE = np.array([[float(log_env(t, x, y, c)) for (t, x, y, _, _) in rows] for c in cands])
    if not np.all(np.isfinite(LE)):
        raise ValueError("envelope must be positive and finite at every point")
    lg = np.log(g)
    log_e = LE[:, fit_mask]
    lr = lg[fit_mask][None, :] - log_e
    lo_ratio = lr.min(axis=1)         # log c1 for each lower constant
    hi_ratio = lr.max(axis=1)         # log c3 for each upper constant
    # widest pointwise sandwich for each (lower, upper) pair
    spread = (log_e[None, :, :] - log_e[:, None, :]).max(axis=2)
    width = hi_ratio[None, :] - lo_ratio[:, None] + spread
    score = width + 1e-12 * (size[:, None] + size[None, :])
    i, j = np.unravel_index(np.argmin(score), score.shape)
    c1, c3 = float(math.exp(lo_ratio[i])), float(math.exp(hi_ratio[j]))
    band = float(math.exp(width[i, j]))
    lower = np.exp(lo_ratio[i] + LE[i])
    upper = np.exp(hi_ratio[j] + LE[j])
    slack = 1e-9  # rounding of points lying on the fitted envelope
    outside = int(np.sum((g < lower * (1 - slack) - 3 * se) | (g > upper * (1 + slack) + 3 * se)))
    table = []
    for k, (t, x, y, v, s) in enumerate(rows):
        mid = math.exp(0.5 * (LE[i, k] + LE[j, k]))
        table.append({"t": t, "x_norm": float(norm(x)), "y_norm": float(norm(y)),
                      "dist": float(norm(x - y)), "estimate": v, "stderr": s,
                      "envelope": mid, "ratio": math.exp(lg[k] - 0.5 * (LE[i, k] + LE[j, k])),
                      "regime": str(regime(t, x, y)) if regime else "n/a",
                      "in_fit": bool(fit_mask[k])})
    passed = bool(valid and band <= band_ceiling and outside == 0)
    notes = []
    if not valid:
        notes.append("more than 20% of the points were rejected")
    return VerifyReport(EnvelopeParams(c1, cands[i], c3, cands[j]),
                        c1, c3, band, float(band_ceiling), passed, valid, table,
                        rejected, int((~fit_mask).sum()), outside,
                        getattr(envelope, "family", ""), notes)


# ---------------------------------------------------------------------------
# stretched exponents


@dataclass
class SlopeFit:
    slope: float
    r2: float
    normalizer: float
    valid: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"slope": self.slope, "r2": self.r2, "normalizer": self.normalizer,
                "valid": self.valid, "notes": list(self.notes)}


def _fit_ab(lt, lv, gamma):
    A = np.vstack([np.ones_like(lt), -np.exp(gamma * lt)]).T
    coef, res, *_ = np.linalg.lstsq(A, lv, rcond=None)
    resid = lv - A @ coef
    return coef, float(resid @ resid)


def slope_fit(series, model="stretched_exp", gamma_bounds=(0.02, 2.0)):
    """Stretched exponent of values ≈ A exp(-B t^gamma).

    The normalizer 1/A is fitted first (least squares of log value over
    log A and B for each gamma, best gamma kept), then log(-log(value / A))
    is regressed on log t; the slope of that line is the exponent.
    """
    if model != "stretched_exp":
        raise ValueError("only the stretched_exp model is available")
    t = np.array([s[0] for s in series], float)
    v = np.array([s[1] for s in series], float)
    if t.size < 5:
        raise ValueError("need at least 5 points")
    if np.any(v <= 0):
        raise ValueError("values must be positive")
    if t.max() / t.min() < 10:
        raise ValueError("times must spread over at least one decade")
    order = np.argsort(t)
    t, v = t[order], v[order]
    lt, lv = np.log(t), np.log(v)
    res = minimize_scalar(lambda g: _fit_ab(lt, lv, g)[1], bounds=gamma_bounds,
                          method="bounded", options={"xatol": 1e-10})
    (log_a, b), _ = _fit_ab(lt, lv, res.x)
    notes = []
    z = log_a - lv  # -log(value / A)
    valid = bool(b > 0 and np.all(z > 0) and np.all(np.diff(z) > 0))
    if not valid:
        notes.append("-log(value / normalizer) is not positive and increasing")
    if np.all(z > 0):
        y = np.log(z)
        A = np.vstack([np.ones_like(lt), lt]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        ss = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
        slope = float(coef[1])
    else:
        slope, r2 = float("nan"), float("nan")
    return SlopeFit(slope, r2, float(math.exp(-log_a)), valid, notes)


# ---------------------------------------------------------------------------
# regime crossover


@dataclass
class SampleGrid:
    """Times crossed with (x, y) pairs."""

    times: tuple
    pairs: tuple

    def points(self):
        for x, y in self.pairs:
            for t in self.times:
                yield float(t), np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(y, float))


@dataclass
class ScanResult:
    rows: list
    switch_time: float | None
    t0: float | None
    within_window: bool
    degenerate: bool
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {"switch_time": self.switch_time, "t0": self.t0,
                "within_window": self.within_window, "degenerate": self.degenerate,
                "notes": list(self.notes), "rows": self.rows}

    def to_csv(self, path=None):
        cols = ("t", "x_norm", "y_norm", "log_ratio", "stderr_log", "branch", "regime")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in cols])
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def locate_switch(times, neg_log_ratio, gamma):
    """Hinge fit of L = -log(p/q): slope 1 in log-log below t_s, slope gamma above.

    Returns (t_s, residual sum of squares).  The hinge is continuous, so
    t_s is where the linear-in-t decay meets the stretched one.
    """
    lt = np.log(np.asarray(times, float))
    ll = np.log(np.asarray(neg_log_ratio, float))
    cand = np.linspace(lt.min() - math.log(10), lt.max() + math.log(10), 4001)

    def sse(ls):
        shape = np.where(lt <= ls, lt, ls + gamma * (lt - ls))
        off = np.mean(ll - shape)
        r = ll - shape - off
        return float(r @ r)

    vals = np.array([sse(c) for c in cand])
    k = int(np.argmin(vals))
    return float(math.exp(cand[k])), float(vals[k])


def regime_scan(pot: PotentialSpec, alpha, grid: SampleGrid, estimator="fkmc",
                cfg: McConfig | None = None, steps_per_time=4.0, window=3.0):
    """Tabulate log(p/q) over the grid and locate the branch switch.

    The switch is located per (x, y) pair with ``locate_switch`` and
    compared with t0(max(|x|, |y|)); the reported switch is that of the
    first pair.  A potential that vanishes gives log(p/q) = 0 and the
    scan is reported as degenerate.
    """
    if estimator != "fkmc":
        raise ValueError("regime_scan supports the fkmc estimator")
    cfg = cfg or McConfig()
    gamma = large_time_exponent(alpha)
    rows = []
    for j, (t, x, y) in enumerate(grid.points()):
        steps = max(cfg.n_steps, int(math.ceil(steps_per_time * t)))
        est = estimate_kernel(pot, t, x, y, cfg.with_(n_steps=steps, seed=node_seed(cfg.seed, j)))
        q0 = float(q(t, x, y))
        ratio = est.value / q0
        m = max(float(norm(x)), float(norm(y)))
        branch = "local" if t <= t0(m, alpha) else "global"
        rows.append({"t": t, "x_norm": float(norm(x)), "y_norm": float(norm(y)),
                     "log_ratio": math.log(ratio) if ratio > 0 else float("-inf"),
                     "stderr_log": est.stderr / est.value if est.value > 0 else float("inf"),
                     "branch": branch,
                     "regime": regime_label(t, x, y, alpha, "positive").value})
    x0, y0 = grid.pairs[0]
    first = [r for r in rows[: len(grid.times)]]
    L = -np.array([r["log_ratio"] for r in first])
    m0 = max(float(norm(x0)), float(norm(y0)))
    tt = t0(m0, alpha)
    if np.all(np.abs(L) < 1e-12):
        return ScanResult(rows, None, float(tt), False, True,
                          ["log(p/q) vanishes on the grid; no switch to detect"])
    if np.any(L <= 0):
        return ScanResult(rows, None, float(tt), False, False,
                          ["log(p/q) is not negative everywhere; hinge fit skipped"])
    ts, _ = locate_switch(grid.times, L, gamma)
    inside = tt / window <= ts <= tt * window
    return ScanResult(rows, ts, float(tt), bool(inside), False)


# ---------------------------------------------------------------------------
# suites


def _pot_or_default(pot, alpha, dim, sign=1):
    return pot if pot is not None else PotentialSpec.power(alpha, 1.0, sign=sign, dim=dim,
                                                           K1=1.0, K2=1.0)


def _point(norm_x, d, angle=0.0):
    p = np.zeros(d)
    if d == 1:
        p[0] = norm_x
    else:
        p[0], p[1] = norm_x * math.cos(angle), norm_x * math.sin(angle)
    return p


def sandwich_points(d=2, n=60, t_range=(0.5, 100.0), r_max=20.0):
    """Deterministic design over t, |x| and |x - y|.

    For each of five log-spaced times and |x| in {0, 2, 8, r_max} three
    partners y are used: y = x, y on the same sphere at chord 1.5 sqrt(t),
    and y moved radially by up to 3 sqrt(t).  Separations stay within a
    few sqrt(t) so that q itself does not underflow.
    """
    ts = np.geomspace(*t_range, 5)
    pts = []
    for t in ts:
        s = math.sqrt(t)
        for rx in (0.0, 2.0, 8.0, r_max):
            x = _point(rx, d)
            pts.append((float(t), x, x.copy()))
            if rx == 0.0 or d == 1:
                chord = min(1.5 * s, r_max)
                y = _point(chord, d) if rx == 0.0 else _point(rx - min(chord, 2 * rx), d)
            else:
                chord = min(1.5 * s, 2 * rx)
                y = _point(rx, d, 2.0 * math.asin(chord / (2 * rx)))
            pts.append((float(t), x, y))
            step = min(3.0 * s, rx) if rx > 0 else min(3.0 * s, r_max)
            y = _point(rx - step, d) if rx > 0 else _point(step, d, math.pi / 2)
            pts.append((float(t), x, y))
    return pts[:n]


def estimate_points(pot, points, cfg, steps_per_time=2.0, max_steps=512):
    out = []
    for j, (t, x, y) in enumerate(points):
        steps = int(min(max_steps, max(cfg.n_steps, math.ceil(steps_per_time * t))))
        est = estimate_kernel(pot, t, x, y, cfg.with_(n_steps=steps, seed=node_seed(cfg.seed, j)))
        out.append((t, x, y, est.value, est.stderr))
    return out


def suite_sandwich_pos(alpha=1.0, d=2, cfg=None, pot=None, band_ceiling=25.0, n_points=60):
    """Long-range positive potential: p̂ against q·weight_pos."""
    cfg = cfg or McConfig(n_paths=20_000, n_steps=64)
    pot = _pot_or_default(pot, alpha, d)
    pts = sandwich_points(d, n_points)
    est = estimate_points(pot, pts, cfg)
    rep = fit_sandwich(est, env_mod.kernel_envelope_pos(alpha), band_ceiling,
                       regime=lambda t, x, y: regime_label(t, x, y, alpha, "positive").value)
    return rep


def growth_points(d=2, t_range=(1.0, 20.0), radii=(0.0, 2.0, 5.0, 10.0), n_t=6):
    ts = np.geomspace(*t_range, n_t)
    return [(float(t), _point(r, d), _point(r, d)) for r in radii for t in ts]


def suite_growth_neg(alpha=1.0, d=2, cfg=None, pot=None, band_ceiling=25.0, spatial_ratio=None):
    """Negative potential on the diagonal: growth against q·weight_neg."""
    cfg = cfg or McConfig(n_paths=20_000, n_steps=64)
    pot = _pot_or_default(pot, alpha, d, sign=-1)
    est = estimate_points(pot, growth_points(d), cfg, steps_per_time=4.0)
    rep = fit_sandwich(est, env_mod.kernel_envelope_neg(alpha, spatial_ratio), band_ceiling,
                       regime=lambda t, x, y: regime_label(t, x, y, alpha, "negative").value)
    lower_ok = all(v / float(q(t, x, y)) >= 1.0 - 3.0 * s / v for t, x, y, v, s in est)
    rep.notes.append(f"p/q >= 1 - 3 rel. stderr everywhere: {lower_ok}")
    rep.passed = bool(rep.passed and lower_ok)
    return rep


def green_pairs(d=3):
    """Twelve (x, y) pairs: distances from 0.3 to 20 at several positions."""
    pairs = []
    for base in (0.0, 5.0, 15.0):
        for dist in (0.3, 1.5, 6.0, 20.0):
            x = _point(base, d)
            y = x + _point(dist, d, math.pi / 2)
            pairs.append((x, y))
    return pairs


def suite_green(alpha=1.0, d=3, cfg=None, pot=None, band_ceiling=25.0,
                t_min=1e-3, t_max=400.0, pairs=None, nodes_per_decade=8):
    cfg = cfg or McConfig(n_paths=4000, n_steps=16)
    pot = _pot_or_default(pot, alpha, d)
    pairs = green_pairs(d) if pairs is None else pairs
    est = []
    for j, (x, y) in enumerate(pairs):
        g = estimate_green(pot, x, y, cfg.with_(seed=node_seed(cfg.seed, j)), t_min, t_max,
                           nodes_per_decade=nodes_per_decade, steps_per_time=2.0, max_steps=512)
        est.append((0.0, x, y, g.value, g.stderr))
    return fit_sandwich(est, env_mod.green_envelope_family(alpha, d), band_ceiling, min_points=10)


def report_json(payload, timestamp=None):
    """Canonical JSON: sorted keys, fixed float repr; timestamp kept separate."""
    body = dict(payload)
    if timestamp is not None:
        body["timestamp"] = timestamp
    return json.dumps(body, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o)}")


@dataclass
class LargeTimeReport:
    times: list
    values: list
    stderrs: list
    fit: SlopeFit
    expected: float
    tolerance: float
    passed: bool

    def to_dict(self):
        return {"times": self.times, "values": self.values, "stderrs": self.stderrs,
                "fit": self.fit.to_dict(), "expected_exponent": self.expected,
                "tolerance": self.tolerance, "pass": self.passed}

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t", "value", "stderr"))
        for row in zip(self.times, self.values, self.stderrs):
            w.writerow([_fmt(v) for v in row])
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


def suite_largetime(alpha=1.0, d=2, cfg=None, pot=None, times=(8, 16, 32, 64, 128),
                    steps_per_time=8.0, tolerance=0.1, min_r2=0.9):
    """Stretched exponent of p(t,0,0) (2πt)^(d/2) against (2-alpha)/(2+alpha)."""
    cfg = cfg or McConfig(n_paths=100_000, n_steps=64)
    pot = _pot_or_default(pot, alpha, d)
    o = np.zeros(d)
    vals, ses = [], []
    for j, t in enumerate(times):
        steps = max(cfg.n_steps, int(math.ceil(steps_per_time * t)))
        est = estimate_kernel(pot, t, o, o, cfg.with_(n_steps=steps, seed=node_seed(cfg.seed, j)))
        norm_q = (2.0 * math.pi * t) ** (0.5 * d)
        vals.append(est.value * norm_q)
        ses.append(est.stderr * norm_q)
    fit = slope_fit(list(zip(times, vals)))
    gamma = large_time_exponent(alpha)
    ok = bool(fit.valid and abs(fit.slope - gamma) <= tolerance and fit.r2 >= min_r2)
    return LargeTimeReport([float(t) for t in times], vals, ses, fit, gamma, tolerance, ok)


def suite_crossover(alpha=1.0, d=2, cfg=None, pot=None, radius=8.0,
                    times=None, steps_per_time=2.0, window=3.0):
    """regime_scan along the diagonal x = y at |x| = radius."""
    cfg = cfg or McConfig(n_paths=10_000, n_steps=32)
    pot = _pot_or_default(pot, alpha, d)
    if times is None:
        tt = float(t0(radius, alpha))
        times = tuple(float(v) for v in np.geomspace(tt / 27.0, tt * 27.0, 13))
    x = _point(radius, d)
    return regime_scan(pot, alpha, SampleGrid(tuple(times), ((x, x.copy()),)), "fkmc", cfg,
                       steps_per_time, window)


@dataclass
class DirichletReport:
    rows: list
    decay: dict
    exit_checks: list
    passed: bool

    def to_dict(self):
        return {"rows": self.rows, "decay": self.decay, "exit_checks": self.exit_checks,
                "pass": self.passed}

    def to_csv(self, path=None):
        cols = ("t", "x", "y", "estimate", "stderr", "exact", "z")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in cols])
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(buf.getvalue())
        return buf.getvalue()


EXIT_CONFIGS = ((2.0, 0.2, 1.5), (1.0, 0.0, 1.2), (3.0, -0.5, 2.0), (1.5, 0.6, -1.4),
                (4.0, 0.0, 2.5))


def suite_dirichlet(cfg=None, pot=None, R=1.0, times=(0.25, 0.5, 1.0, 2.0),
                    pairs=((0.0, 0.0), (0.3, -0.2), (0.5, 0.5), (-0.7, 0.1), (0.8, -0.6)),
                    decay_times=(1.0, 1.5, 2.0, 2.5, 3.0), exit_configs=EXIT_CONFIGS,
                    decay_factor=3.0):
    """Interval (-R, R): killed Monte Carlo against the sine series, the
    leading decay rate against π²/8 and the first-exit decomposition."""
    cfg = cfg or McConfig(n_paths=20_000, n_steps=64)
    pot = _pot_or_default(pot, 1.0, 1)
    rows = []
    j = 0
    for t in times:
        for x, y in pairs:
            est = estimate_killed_kernel(t, [x], [y], [0.0], R, 1, cfg.with_(seed=node_seed(cfg.seed, j)))
            ex = float(interval_kernel_exact(t, x, y, R))
            z = (est.value - ex) / est.stderr if est.stderr > 0 else 0.0
            rows.append({"t": float(t), "x": x, "y": y, "estimate": est.value,
                         "stderr": est.stderr, "exact": ex, "z": z})
            j += 1
    vals = []
    for t in decay_times:
        est = estimate_killed_kernel(t, [0.0], [0.0], [0.0], R, 1,
                                     cfg.with_(seed=node_seed(cfg.seed, j)))
        vals.append(est.value)
        j += 1
    fit = fit_decay_rate(decay_times, vals, R)
    target = math.pi ** 2 / 8.0
    decay_ok = bool(target / decay_factor <= fit.c <= target * decay_factor)
    decay = {"times": list(decay_times), "values": vals, "rate": float(fit.rate),
             "c": float(fit.c), "target": target, "r2": float(fit.r2), "pass": decay_ok}
    exits = []
    for k, (t, x, y) in enumerate(exit_configs):
        rep = check_exit_identity(pot, t, x, y, Ball((0.0,), R),
                                  cfg.with_(seed=node_seed(cfg.seed, 1000 + k)))
        exits.append(rep.to_dict())
    ok = all(abs(r["z"]) <= 3.0 for r in rows) and decay_ok and all(e["pass"] for e in exits)
    return DirichletReport(rows, decay, exits, bool(ok))


SUITES = {"thm1.1": suite_sandwich_pos, "thm1.2": suite_growth_neg, "green": suite_green,
          "largetime": suite_largetime, "crossover": suite_crossover,
          "dirichlet": suite_dirichlet}
