"""Heat kernels of -1/2 Δ + V for power-decaying potentials.

Monte Carlo (Feynman–Kac with Brownian bridges), Crank–Nicolson and
Duhamel-series solvers, closed-form envelopes and the fitting tools that
compare them.
"""
from .potentials import PotentialSpec, PotentialRangeError, validate_class
from .freekernel import q, t0, free_green, stream, sample_bm, sample_bridge
from .envelopes import (EnvelopeParams, RegimeLabel, weight_pos, weight_neg, green_envelope, regime,
                        make_family)
from .fkmc import McConfig, KernelEstimate, estimate_kernel, estimate_survival, estimate_green
from .pde import GridConfig, solve_1d, solve_radial, richardson
from .duhamel import DuhamelGrid, duhamel_term, duhamel_sum, check_equ1, check_convolution_bound
from .dirichlet import Ball, interval_kernel_exact, estimate_killed_kernel, check_exit_identity
from .verify import VerifyReport, fit_sandwich, slope_fit, regime_scan, SampleGrid, SUITES

__version__ = "0.1.0"
