"""Command line front end.

Usage::

    schrokernel [--config FILE] [--seed N] [--threads N] [--out DIR]
                [--format json|csv] [--alpha A] [--dim D] [--K K] [--sign S]
                SUBCOMMAND [options]

Subcommands are ``kernel``, ``survival``, ``green``, ``dirichlet``,
``duhamel``, ``verify``, ``scan`` and ``selftest``.  The config file is a
sectioned key-value file with sections ``potential``, ``mc``, ``pde``,
``grid`` and ``verify``; flags override it.  Exit codes: 0 success, 2 a
verification failed, 1 usage or configuration error.

The worker count never enters the output, so the same config and seed give
byte-identical JSON for any ``--threads`` (apart from the timestamp line).
"""
from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import verify as vf
from .dirichlet import estimate_killed_kernel, interval_kernel_exact
from .duhamel import DuhamelGrid, duhamel_sum, duhamel_term
from .envelopes import weight_pos
from .fkmc import McConfig, estimate_green, estimate_kernel, estimate_survival
from .freekernel import free_green, free_time_integral, q, t0
from .pde import GridConfig, solve_1d, solve_radial
from .potentials import PotentialSpec

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

# accepted keys per section with their parsers
_bool = lambda s: s.strip().lower() in ("1", "true", "yes", "on")
_floats = lambda s: tuple(float(v) for v in s.replace(",", " ").split())
SCHEMA = {
    "potential": {"kind": str, "alpha": float, "K": float, "sign": int, "dim": int,
                  "K1": float, "K2": float, "c": float, "profile": str},
    "mc": {"n_paths": int, "n_steps": int, "seed": int, "quadrature": str,
           "antithetic": _bool, "compensated": _bool, "t_cap": float,
           "steps_per_time": float, "max_steps": int},
    "pde": {"n_space": int, "n_time": int, "extent": float, "eps": float,
            "initial_correction": _bool, "rannacher_steps": int},
    "grid": {"t_min": float, "t_max": float, "times": _floats, "n_time": int,
             "nodes_per_decade": int, "radius": float, "n_terms": int},
    "verify": {"suite": str, "band_ceiling": float},
}


class UsageError(Exception):
    pass


def load_config(path):
    """Read the config file into {section: {key: value}} with typed values."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if "potential" not in cp.sections():
        raise UsageError(f"config {path} has no [potential] section")
    out = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise UsageError(f"unknown section [{sec}]; valid sections: {', '.join(SCHEMA)}")
        keys = SCHEMA[sec]
        out[sec] = {}
        for k, v in cp.items(sec):
            if k not in keys:
                raise UsageError(f"unknown key '{k}' in [{sec}]; valid keys: {', '.join(keys)}")
            try:
                out[sec][k] = keys[k](v)
            except ValueError:
                raise UsageError(f"bad value for {sec}.{k}: {v!r}") from None
    return out


def _point(text, name):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise UsageError(f"--{name} must be comma-separated numbers, got {text!r}") from None


def _threads(args):
    if args.threads is not None:
        return args.threads
    env = os.environ.get("SCHRO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"SCHRO_THREADS must be an integer, got {env!r}") from None
    return 1


def build_potential(conf, args):
    p = dict(conf.get("potential", {}))
    for key, flag in (("alpha", args.alpha), ("dim", args.dim), ("K", args.K),
                      ("sign", args.sign)):
        if flag is not None:
            p[key] = flag
    kind = p.get("kind", "power_decay")
    dim = p.get("dim", 2)
    try:
        if kind == "constant":
            return PotentialSpec.constant(p.get("c", 0.0), dim=dim)
        if kind == "custom_radial":
            if "profile" not in p:
                raise UsageError("custom_radial needs potential.profile (r,value CSV)")
            return PotentialSpec.from_profile_csv(p["profile"], alpha=p.get("alpha", 1.0),
                                                  sign=p.get("sign", 1), dim=dim,
                                                  K1=p.get("K1", 1.0), K2=p.get("K2", 1.0))
        if kind != "power_decay":
            raise UsageError(f"unknown potential kind {kind!r}")
        return PotentialSpec.power(p.get("alpha", 1.0), p.get("K", 1.0), sign=p.get("sign", 1),
                                   dim=dim, K1=p.get("K1"), K2=p.get("K2"))
    except ValueError as exc:
        raise UsageError(f"invalid potential: {exc}") from None


def build_mc(conf, args, **defaults):
    m = {**defaults, **conf.get("mc", {})}
    if args.seed is not None:
        m["seed"] = args.seed
    keys = ("n_paths", "n_steps", "seed", "quadrature", "antithetic", "compensated", "t_cap")
    try:
        return McConfig(**{k: m[k] for k in keys if k in m}, threads=_threads(args))
    except ValueError as exc:
        raise UsageError(f"invalid [mc] settings: {exc}") from None


def build_grid_config(conf):
    try:
        return GridConfig(**conf.get("pde", {}))
    except ValueError as exc:
        raise UsageError(f"invalid [pde] settings: {exc}") from None


def _mc_public(cfg):
    """McConfig fields that enter the output; the worker count does not."""
    return {"n_paths": cfg.n_paths, "n_steps": cfg.n_steps, "seed": cfg.seed,
            "quadrature": cfg.quadrature, "antithetic": cfg.antithetic,
            "compensated": cfg.compensated}


def _pot_public(pot):
    return {"kind": pot.kind, "alpha": pot.alpha, "K": pot.amplitude, "sign": pot.sign,
            "dim": pot.dim, "K1": pot.class_lower, "K2": pot.class_upper}


def _check_dim(pot, *points):
    for p in points:
        if p.size != pot.dim:
            raise UsageError(f"point has dimension {p.size} but the potential has dim {pot.dim}")


# ---------------------------------------------------------------------------
# subcommands; each returns (payload, csv_text or None, passed, summary)


def cmd_kernel(args, conf):
    pot = build_potential(conf, args)
    x, y = _point(args.x, "x"), _point(args.y, "y")
    _check_dim(pot, x, y)
    if args.method == "pde":
        pcfg = build_grid_config(conf)
        if pot.dim == 1:
            sol = solve_1d(pot, args.t, float(x[0]), pcfg)
            val = float(sol.at(float(y[0])))
        elif np.all(x == 0) and pot.dim in (2, 3):
            sol = solve_radial(pot, args.t, pot.dim, pcfg)
            val = float(sol.at(float(np.linalg.norm(y))))
        else:
            raise UsageError("the pde method needs d = 1, or d in {2, 3} with x = 0")
        rec = {"t": args.t, "x": x.tolist(), "y": y.tolist(), "value": val, "stderr": 0.0,
               "n_paths": 0, "n_steps": sol.n_time, "method": "pde", "seed": None,
               "flags": list(sol.flags)}
        return {"potential": _pot_public(pot), "record": rec}, None, True, f"p = {val:.6e} (pde)"
    cfg = build_mc(conf, args)
    steps = max(cfg.n_steps, int(math.ceil(conf.get("mc", {}).get("steps_per_time", 0) * args.t)))
    est = estimate_kernel(pot, args.t, x, y, cfg.with_(n_steps=steps))
    rec = est.record(t=args.t, x=x.tolist(), y=y.tolist(), seed=cfg.seed)
    payload = {"potential": _pot_public(pot), "record": rec}
    return payload, None, True, f"p = {est.value:.6e} +- {est.stderr:.2e}"


def cmd_survival(args, conf):
    pot = build_potential(conf, args)
    x = _point(args.x, "x")
    _check_dim(pot, x)
    cfg = build_mc(conf, args)
    est = estimate_survival(pot, args.t, x, cfg)
    rec = est.record(t=args.t, x=x.tolist(), y=None, seed=cfg.seed)
    return ({"potential": _pot_public(pot), "record": rec}, None, True,
            f"T_t^V 1 = {est.value:.6e} +- {est.stderr:.2e}")


def cmd_green(args, conf):
    pot = build_potential(conf, args)
    x, y = _point(args.x, "x"), _point(args.y, "y")
    _check_dim(pot, x, y)
    cfg = build_mc(conf, args, n_paths=4000, n_steps=16)
    g = conf.get("grid", {})
    m = conf.get("mc", {})
    try:
        est = estimate_green(pot, x, y, cfg, g.get("t_min", 1e-3), g.get("t_max", 400.0),
                             nodes_per_decade=g.get("nodes_per_decade", 40),
                             steps_per_time=m.get("steps_per_time", 2.0),
                             max_steps=m.get("max_steps", 512))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rec = est.record(x=x.tolist(), y=y.tolist(), seed=cfg.seed)
    return ({"potential": _pot_public(pot), "record": rec}, None, True,
            f"G = {est.value:.6e} +- {est.stderr:.2e}")


def cmd_dirichlet(args, conf):
    x, y = _point(args.x, "x"), _point(args.y, "y")
    c = _point(args.center, "center") if args.center else np.zeros(x.size)
    cfg = build_mc(conf, args)
    try:
        est = estimate_killed_kernel(args.t, x, y, c, args.R, x.size, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rec = est.record(t=args.t, x=x.tolist(), y=y.tolist(), seed=cfg.seed)
    if x.size == 1:
        rec["exact"] = float(interval_kernel_exact(args.t, float(x[0] - c[0]),
                                                   float(y[0] - c[0]), args.R))
    return {"record": rec}, None, True, f"q_U = {est.value:.6e} +- {est.stderr:.2e}"


def cmd_duhamel(args, conf):
    pot = build_potential(conf, args)
    g = conf.get("grid", {})
    if pot.dim not in (1, 3):
        raise UsageError("the Duhamel series is available for dim 1 and 3")
    try:
        grid = DuhamelGrid.build(pot.dim, g.get("t_max", args.t_max), g.get("n_time", 50))
        rep = duhamel_sum(pot, grid, n_max=g.get("n_terms", args.n_terms))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    summ = rep.summary()
    core = grid.core_mask()
    ratio = rep.total[core] / grid.q()[core]
    summ.update(t_max=grid.t_max, n_time=grid.n_time, n_space=int(grid.space.size),
                p_over_q_min=float(ratio.min()), p_over_q_max=float(ratio.max()))
    text = (f"{len(rep.terms) - 1} terms, observed ratio {rep.observed_ratio:.4g}, "
            f"diverged={rep.diverged}")
    return {"potential": _pot_public(pot), "duhamel": summ}, None, True, text


def _suite_kwargs(name, args, conf, pot):
    v = conf.get("verify", {})
    g = conf.get("grid", {})
    kw = {"pot": pot, "cfg": build_mc(conf, args, **_SUITE_MC[name])}
    if name in ("thm1.1", "thm1.2", "green") and "band_ceiling" in v:
        kw["band_ceiling"] = v["band_ceiling"]
    if name != "dirichlet":
        kw["alpha"] = pot.alpha
        kw["d"] = pot.dim
    if name in ("largetime", "crossover") and "times" in g:
        kw["times"] = g["times"]
    if name == "crossover" and "radius" in g:
        kw["radius"] = g["radius"]
    if name == "green":
        for k in ("t_min", "t_max", "nodes_per_decade"):
            if k in g:
                kw[k] = g[k]
    return kw


_SUITE_MC = {"thm1.1": dict(n_paths=20_000, n_steps=64),
             "thm1.2": dict(n_paths=20_000, n_steps=64),
             "green": dict(n_paths=4000, n_steps=16),
             "largetime": dict(n_paths=100_000, n_steps=64),
             "crossover": dict(n_paths=10_000, n_steps=32),
             "dirichlet": dict(n_paths=20_000, n_steps=64)}
_SUITE_SIGN = {"thm1.2": -1}


def cmd_verify(args, conf):
    name = args.suite or conf.get("verify", {}).get("suite")
    if name not in vf.SUITES:
        raise UsageError(f"unknown suite {name!r}; valid suites: {', '.join(vf.SUITES)}")
    if "potential" in conf or any(f is not None for f in (args.alpha, args.dim, args.K, args.sign)):
        pot = build_potential(conf, args)
        if name in _SUITE_SIGN and args.sign is None and "sign" not in conf.get("potential", {}):
            pot = PotentialSpec.power(pot.alpha, pot.amplitude, sign=-1, dim=pot.dim,
                                      K1=pot.class_lower, K2=pot.class_upper)
    else:
        d = {"green": 3, "dirichlet": 1}.get(name, 2)
        pot = PotentialSpec.power(1.0, 1.0, sign=_SUITE_SIGN.get(name, 1), dim=d)
    try:
        rep = vf.SUITES[name](**_suite_kwargs(name, args, conf, pot))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if isinstance(rep, vf.ScanResult):
        passed = rep.within_window
    else:
        passed = rep.passed
    body = rep.to_dict()
    payload = {"suite": name, "potential": _pot_public(pot),
               "mc": _mc_public(_suite_kwargs(name, args, conf, pot)["cfg"]),
               "report": body, "pass": bool(passed)}
    detail = f"band {rep.band:.3g}" if isinstance(rep, vf.VerifyReport) else ""
    summary = f"suite {name}: {'PASS' if passed else 'FAIL'} {detail}".rstrip()
    return payload, rep.to_csv(), bool(passed), summary


def cmd_scan(args, conf):
    pot = build_potential(conf, args)
    g = conf.get("grid", {})
    radius = args.radius if args.radius is not None else g.get("radius", 8.0)
    cfg = build_mc(conf, args, **_SUITE_MC["crossover"])
    times = g.get("times")
    rep = vf.suite_crossover(alpha=pot.alpha, d=pot.dim, cfg=cfg, pot=pot, radius=radius,
                             times=times)
    payload = {"potential": _pot_public(pot), "mc": _mc_public(cfg), "scan": rep.to_dict()}
    ok = rep.within_window or rep.degenerate
    st = "none" if rep.switch_time is None else f"{rep.switch_time:.4g}"
    return payload, rep.to_csv(), bool(ok), f"switch at t = {st}, t0 = {rep.t0:.4g}"


def selftest_checks():
    """Exact oracles that must hold to rounding or quadrature accuracy."""
    checks = []

    def add(name, value, ref, tol):
        err = abs(value - ref) / abs(ref)
        checks.append({"name": name, "value": float(value), "reference": float(ref),
                       "rel_error": float(err), "tol": tol, "pass": bool(err <= tol)})

    cfg = McConfig(n_paths=2000, n_steps=16, seed=7)
    x, y = np.array([0.3, -0.2]), np.array([1.0, 0.4])
    est = estimate_kernel(PotentialSpec.constant(0.0, dim=2), 1.3, x, y, cfg)
    add("zero potential: kernel = q", est.value, float(q(1.3, x, y)), 1e-13)
    checks[-1]["pass"] = bool(checks[-1]["pass"] and est.stderr == 0.0)
    c = 0.4
    est = estimate_kernel(PotentialSpec.constant(c, dim=2), 1.3, x, y, cfg)
    add("constant potential: kernel = exp(-ct) q", est.value,
        math.exp(-c * 1.3) * float(q(1.3, x, y)), 1e-12)
    pot = PotentialSpec.constant(-0.2, dim=1)
    grid = DuhamelGrid.build(1, 1.0, n_time=50)
    mask = grid.core_mask()
    q0 = grid.q()
    prev = q0
    for n in (1, 2, 3):
        prev = duhamel_term(pot, n, grid, prev)
        ref = (0.2 * grid.times[-1]) ** n / math.factorial(n)
        last = mask[-1]
        add(f"constant potential: duhamel p_{n} = (ct)^n/n! q (V = -c)",
            float(np.mean(prev[-1, last] / q0[-1, last])), ref, 1e-3)
    for alpha, s in ((0.5, 0.0), (1.0, 8.0), (1.5, 3.0)):
        tt = float(t0(s, alpha))
        w_local = math.exp(-tt / (1 + s) ** alpha)
        add(f"weight_pos branches meet at t0 (alpha={alpha}, |x|={s})",
            float(weight_pos(tt, [s, 0.0], [s, 0.0], alpha)), w_local, 1e-12)
        add(f"weight_pos large-time branch at t0 (alpha={alpha}, |x|={s})",
            float(weight_pos(tt, [s, 0.0], [s, 0.0], alpha)),
            math.exp(-tt ** ((2 - alpha) / (2 + alpha))), 1e-12)
    add("free Green function d=3 closed form", free_time_integral(1.7, 3, 0.0),
        float(free_green(1.7, 3)), 1e-10)
    add("interval kernel, R -> infinity", float(interval_kernel_exact(0.5, 0.1, -0.3, 60.0)),
        float(q(0.5, [0.1], [-0.3])), 1e-10)
    return checks


def cmd_selftest(args, conf):
    checks = selftest_checks()
    ok = all(c["pass"] for c in checks)
    n_ok = sum(c["pass"] for c in checks)
    return {"checks": checks, "pass": ok}, None, ok, f"selftest: {n_ok}/{len(checks)} checks passed"


COMMANDS = {"kernel": cmd_kernel, "survival": cmd_survival, "green": cmd_green,
            "dirichlet": cmd_dirichlet, "duhamel": cmd_duhamel, "verify": cmd_verify,
            "scan": cmd_scan, "selftest": cmd_selftest}


def build_parser():
    p = argparse.ArgumentParser(prog="schrokernel",
                                description="Heat kernels of -1/2 Δ + V for decaying V.")
    p.add_argument("--config", help="sectioned key-value config file")
    p.add_argument("--out", help="output directory; stdout when omitted")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker threads (env SCHRO_THREADS)")
    p.add_argument("--format", choices=("json", "csv"), default="json",
                   help="what to print on stdout when --out is not given")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    p.add_argument("--alpha", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--K", type=float)
    p.add_argument("--sign", type=int, choices=(-1, 1))
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", help="p(t,x,y)")
    k.add_argument("--t", type=float, required=True)
    k.add_argument("--x", required=True)
    k.add_argument("--y", required=True)
    k.add_argument("--method", choices=("fkmc", "pde"), default="fkmc")

    s = sub.add_parser("survival", help="T_t^V 1(x)")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--x", required=True)

    g = sub.add_parser("green", help="G(x,y)")
    g.add_argument("--x", required=True)
    g.add_argument("--y", required=True)

    dr = sub.add_parser("dirichlet", help="killed kernel q_U in a ball")
    dr.add_argument("--t", type=float, required=True)
    dr.add_argument("--x", required=True)
    dr.add_argument("--y", required=True)
    dr.add_argument("--R", type=float, default=1.0)
    dr.add_argument("--center")

    du = sub.add_parser("duhamel", help="Duhamel series terms and convergence")
    du.add_argument("--t-max", type=float, default=1.0)
    du.add_argument("--n-terms", type=int, default=12)

    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("--suite", choices=tuple(vf.SUITES))

    sc = sub.add_parser("scan", help="regime scan along the diagonal")
    sc.add_argument("--radius", type=float)

    sub.add_parser("selftest", help="exact oracle checks")
    return p


def _positive(args):
    for name in ("t", "R", "t_max"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            raise UsageError(f"--{name.replace('_', '-')} must be positive")
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be >= 1")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        _positive(args)
        conf = load_config(args.config) if args.config else {}
        payload, csv_text, passed, summary = COMMANDS[args.command](args, conf)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = {"command": args.command, **payload}
    stamp = None if args.no_timestamp else _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = vf.report_json(payload, timestamp=stamp)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{args.command}.json").write_text(text)
        if csv_text is not None:
            (out / f"{args.command}.csv").write_text(csv_text)
        print(f"{summary} -> {out}")
    elif args.format == "csv":
        if csv_text is None:
            print(f"error: {args.command} has no CSV output", file=sys.stderr)
            return EXIT_USAGE
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if passed else EXIT_FAIL


run = main
