"""Pseudospectral solver and experiments for the fourth-order mu-Camassa-Holm
equation m_t + 2 m u_x + m_x u = 0, m = (mu - d_x^2 + d_x^4) u, on the unit circle."""

from .dynamics import (BlowUpError, ConfigError, DiagnosticsRecord, SimConfig, Trajectory,
                       diagnostics, energy, integrate, mollifier_kernel, mollify, rhs_convective,
                       rhs_p_form, rhs_viscous, step)
from .experiments import (ApproxSolutionSpec, DecayReport, ExperimentReport, PeakonSpec,
                          approx_solution, nonuniform_experiment, peakon_error, peakon_profile,
                          residual_decay_rate, residual_direct, residual_F)
from .operator import (a_mu_apply, a_mu_inverse_apply, green_closed, green_convolve, green_series,
                       mu_multiplier)
from .spectral import (PeriodicField, Spectrum, dealias, derivative, from_spectrum, lp_norm, mean,
                       product, sobolev_norm, to_spectrum)

__version__ = "0.1.0"
