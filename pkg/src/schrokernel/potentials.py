"""Radial potential models V for the Schrödinger operator -1/2 Δ + V.

Three kinds are supported:

* ``power_decay``   V(x) = sign * K * (1 + |x|)^(-alpha)
* ``custom_radial`` V(x) = profile(|x|), piecewise linear on a radius table
* ``constant``      V(x) = c everywhere (used for exact oracles, c may be 0)
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path as FilePath

import numpy as np

KINDS = ("power_decay", "custom_radial", "constant")


class PotentialRangeError(ValueError):
    """A custom radial profile was queried beyond its last radius."""


@dataclass(frozen=True)
class PotentialSpec:
    """Immutable description of a radial potential.

    Parameters
    ----------
    sign : int
        +1 for Case 1 (positive potentials), -1 for Case 2 (negative).
    alpha : float
        Decay exponent.
    amplitude : float
        K in ``sign * K * (1 + |x|)^(-alpha)``.  For ``constant`` the value
        of the potential is ``sign * amplitude`` and amplitude may be 0.
    class_lower, class_upper : float
        Envelope-class constants K1 <= K <= K2.
    dim : int
        Space dimension d.
    kind : str
        One of ``KINDS``.
    radii, values : arrays, optional
        Profile table for ``custom_radial``.
    """

    sign: int = 1
    alpha: float = 1.0
    amplitude: float = 1.0
    class_lower: float | None = None
    class_upper: float | None = None
    dim: int = 2
    kind: str = "power_decay"
    radii: tuple = field(default=(), repr=False)
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.kind == "constant":
            if self.amplitude < 0:
                raise ValueError("constant amplitude must be >= 0")
        else:
            if not self.alpha > 0:
                raise ValueError("alpha must be positive")
            if not self.amplitude > 0:
                raise ValueError("amplitude must be positive")
        if self.class_lower is None:
            object.__setattr__(self, "class_lower", self.amplitude)
        if self.class_upper is None:
            object.__setattr__(self, "class_upper", self.amplitude)
        if self.kind == "power_decay" and not (
            0 < self.class_lower <= self.amplitude <= self.class_upper
        ):
            raise ValueError("need 0 < K1 <= K <= K2")
        if self.kind == "custom_radial":
            r = np.asarray(self.radii, dtype=float)
            v = np.asarray(self.values, dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise ValueError("profile needs matching 1-d radius/value tables")
            if r[0] != 0.0 or np.any(np.diff(r) <= 0):
                raise ValueError("profile radii must start at 0 and increase")
            if not np.all(np.isfinite(v)):
                raise ValueError("profile values must be finite")
            object.__setattr__(self, "radii", tuple(r.tolist()))
            object.__setattr__(self, "values", tuple(v.tolist()))

    # construction helpers -------------------------------------------------

    @classmethod
    def power(cls, alpha, K, sign=1, dim=2, K1=None, K2=None):
        return cls(sign=sign, alpha=alpha, amplitude=K, class_lower=K1,
                   class_upper=K2, dim=dim, kind="power_decay")

    @classmethod
    def constant(cls, c, dim=1):
        return cls(sign=1 if c >= 0 else -1, alpha=1.0, amplitude=abs(c),
                   dim=dim, kind="constant")

    @classmethod
    def custom(cls, radii, values, alpha=1.0, sign=1, dim=2, K1=1.0, K2=1.0):
        return cls(sign=sign, alpha=alpha, amplitude=K2,
                   class_lower=K1, class_upper=K2, dim=dim,
                   kind="custom_radial", radii=tuple(radii), values=tuple(values))

    @classmethod
    def from_profile_csv(cls, path, **kw):
        """Read a ``r,value`` CSV file into a ``custom_radial`` potential."""
        with open(FilePath(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        r = [float(row["r"]) for row in rows]
        v = [float(row["value"]) for row in rows]
        return cls.custom(r, v, **kw)

    # evaluation ------------------------------------------------------------

    @property
    def r_max(self):
        return self.radii[-1] if self.kind == "custom_radial" else np.inf

    @property
    def is_constant(self):
        return self.kind == "constant"

    @property
    def constant_value(self):
        return self.sign * self.amplitude

    def radial(self, r):
        """V as a function of the radius |x| (vectorised)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "power_decay":
            return self.sign * self.amplitude * (1.0 + r) ** (-self.alpha)
        if self.kind == "constant":
            return np.full_like(r, self.constant_value)
        if np.any(r > self.r_max):
            raise PotentialRangeError(
                f"radius {float(np.max(r)):g} beyond profile r_max={self.r_max:g}")
        return np.interp(r, self.radii, self.values)

    def __call__(self, x):
        """V(x) for points ``x`` of shape (..., d); scalars are 1-d points."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            r = np.abs(x)
        else:
            r = np.sqrt(np.sum(x * x, axis=-1))
        return self.radial(r)

    def value_range(self):
        """(inf V, sup V) over all of R^d."""
        if self.kind == "constant":
            c = self.constant_value
            return c, c
        if self.kind == "power_decay":
            top = self.sign * self.amplitude
            return (0.0, top) if self.sign > 0 else (top, 0.0)
        v = np.asarray(self.values)
        return float(v.min()), float(v.max())

    def bounds_on_ball(self, center, radius):
        """Exact (inf, sup) of V over the closed ball B(center, radius)."""
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        c = np.atleast_1d(np.asarray(center, dtype=float))
        rc = float(np.sqrt(np.sum(c * c)))
        lo_r, hi_r = max(0.0, rc - radius), rc + radius
        if self.kind == "custom_radial":
            nodes = [r for r in self.radii if lo_r < r < hi_r]
            vals = self.radial(np.array([lo_r, hi_r] + nodes))
            return float(vals.min()), float(vals.max())
        a, b = self.radial(np.array([lo_r, hi_r]))
        return float(min(a, b)), float(max(a, b))


def evaluate(pot: PotentialSpec, x):
    return pot(x)


def bounds_on_ball(pot: PotentialSpec, center, radius):
    return pot.bounds_on_ball(center, radius)


def validate_class(pot: PotentialSpec, n_samples: int, r_max: float, rng_seed=0):
    """Check K1 (1+r)^-alpha <= |V| <= K2 (1+r)^-alpha on sampled radii.

    Returns ``(passed, worst_violation)`` where the violation is measured
    relative to the envelope (1+r)^-alpha and is 0 when nothing is violated.
    Points with the wrong sign count as violations of the lower bound.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(rng_seed)
    top = min(r_max, pot.r_max)
    r = np.concatenate([[0.0, top], rng.uniform(0.0, top, size=n_samples)])
    env = (1.0 + r) ** (-pot.alpha)
    v = pot.sign * pot.radial(r)  # positive when the sign is right
    lower = (pot.class_lower * env - v) / env
    upper = (v - pot.class_upper * env) / env
    worst = float(max(0.0, lower.max(), upper.max()))
    return worst == 0.0, worst
