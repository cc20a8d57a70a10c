"""
Killed Brownian motion in an interval
=====================================

The kernel of Brownian motion killed on leaving (-1, 1) from bridges with
exit correction, against the exact sine series, then the first-exit
decomposition of a Schrödinger kernel.
"""
import numpy as np

from schrokernel import (Ball, McConfig, PotentialSpec, check_exit_identity,
                         estimate_killed_kernel, interval_kernel_exact)

cfg = McConfig(n_paths=20_000, n_steps=64, seed=3)
for t in (0.25, 0.5, 1.0, 2.0):
    est = estimate_killed_kernel(t, [0.2], [-0.3], [0.0], 1.0, 1, cfg)
    exact = float(interval_kernel_exact(t, 0.2, -0.3, 1.0))
    z = (est.value - exact) / est.stderr
    print(f"t={t:4.2f}  mc {est.value:.5f} +- {est.stderr:.1e}  exact {exact:.5f}  z {z:+.2f}")

# with y outside U = (-1, 1), p(t,x,y) is carried by the paths that leave U before t
pot = PotentialSpec(sign=1, alpha=1.0, amplitude=1.0, dim=1)
rep = check_exit_identity(pot, 2.0, [0.2], [1.5], Ball(np.zeros(1), 1.0), cfg)
print(f"exit identity: lhs {rep.lhs:.5f}, rhs {rep.rhs:.5f}, "
      f"combined stderr {rep.combined_stderr:.1e}, pass {rep.passed}")
