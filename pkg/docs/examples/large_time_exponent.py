"""
Large-time decay at the origin
==============================

For V = (1 + |x|)^-alpha with alpha < 2 the on-diagonal kernel at the
origin decays like q(t, 0, 0) exp(-B t^gamma) with gamma = (2-alpha)/(2+alpha).
We estimate gamma from a Monte Carlo time series.
"""
from schrokernel import McConfig
from schrokernel.verify import suite_largetime

rep = suite_largetime(alpha=1.0, d=2, cfg=McConfig(n_paths=20_000, n_steps=64, seed=2),
                      times=(8, 16, 32, 64, 128))
for t, v, s in zip(rep.times, rep.values, rep.stderrs):
    print(f"t={t:5.0f}  p(t,0,0) 2 pi t = {v:.4e} +- {s:.1e}")
print(f"fitted exponent {rep.fit.slope:.3f} (expected {rep.expected:.3f}), R^2 {rep.fit.r2:.4f}")
