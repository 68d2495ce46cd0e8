"""Time-periodic, spatially localized solutions (breathers) of g(x) w_tt - w_xx + gamma delta_0 (w_t^3)_t = 0.

The pipeline runs media -> floquet -> functional -> solver -> reconstruct:
admissible piecewise-constant media, their decaying mode profiles, the
quartic energy on odd Fourier sequences, its minimization, and
reconstruction of the space-time field with a posteriori checks.
"""

__version__ = "0.1.0"
