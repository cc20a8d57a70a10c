"""
Fitting the envelope of a repulsive potential
=============================================

Monte Carlo values of p(t, x, y) for V = (1 + |x|)^-1 in the plane are
compared with q(t, x, y) times the positive-potential weight, whose constants
are fitted by ``fit_sandwich``.
"""
import numpy as np

from schrokernel import McConfig, PotentialSpec, estimate_kernel, fit_sandwich, q
from schrokernel.envelopes import make_family

pot = PotentialSpec(sign=1, alpha=1.0, amplitude=1.0, dim=2)
cfg = McConfig(n_paths=4000, n_steps=64, seed=5)

rng = np.random.default_rng(0)
rows = []
for t in np.geomspace(0.5, 20.0, 12):
    x = rng.uniform(-4, 4, 2)
    y = x + rng.normal(scale=np.sqrt(t) / 2, size=2)
    est = estimate_kernel(pot, t, x, y, cfg)
    rows.append((t, x, y, est.value, est.stderr))

rep = fit_sandwich(rows, make_family("weight_pos", alpha=1.0))
print(f"fitted constants {rep.fitted.to_dict()}")
print(f"band {rep.band:.2f}, pass {rep.passed}")

# estimate / fitted envelope along the table
for row in rep.table[:5]:
    print(f"t={row['t']:6.2f}  |x-y|={row['dist']:.2f}  ratio={row['ratio']:.3f}")
