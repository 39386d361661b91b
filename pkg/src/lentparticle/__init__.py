"""Carre du champ matrices for functionals of Poisson random measures.

The package samples marked point configurations on [0, T] x E with
intensity dt x nu, evaluates functionals of the configuration, and
computes their Malliavin-type matrices Gamma[F] by the lent particle
rule: add a particle, differentiate in its mark, remove it, integrate
against the configuration. On top of that sit density-existence
diagnostics (rank and determinant statistics of Gamma) and a chaos
decomposition cross-check via the pathwise exponential identity.
"""

from ._backend import BACKEND
from .chaos import (PowerSums, bell_polynomial, exponential_identity_residuals,
                    multiple_integral, power_sums)
from .diagnostics import (DiagnosticsReport, kde, kde2d, rank_statistics,
                          run_monte_carlo)
from .errors import (ConfigError, InvalidInput, LentParticleError, NumericError,
                     PreconditionError, QuadratureError, SizeError)
from .functionals import (Composite, LinearCompensated, PiecewisePath,
                          RunningSupremum, Stacked, StochIntegral,
                          TriangularSystem, VectorStochIntegral, make_functional)
from .intensity import (BottomStructure, PairMeasure, PowerLawMeasure,
                        SymmetricPowerLawMeasure, UniformMeasure, gamma_bottom,
                        levy_structure, make_measure, truncated_mass)
from .lent_particle import (GammaSample, SharpSampler, carre_du_champ,
                            epsilon_minus, epsilon_plus,
                            gamma_of_added_particle, insertion_jacobian,
                            sharp_sample)
from .point_process import (LaplaceResult, MarkedConfiguration,
                            PointConfiguration, attach_auxiliary_marks,
                            integrate_N, integrate_N_compensated,
                            laplace_characteristic, laplace_target,
                            merge_configurations, sample_configuration)
from .registry import get_field, get_smooth

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BottomStructure", "Composite", "ConfigError",
    "DiagnosticsReport", "GammaSample", "InvalidInput", "LaplaceResult",
    "LentParticleError", "LinearCompensated", "MarkedConfiguration",
    "NumericError", "PairMeasure", "PiecewisePath", "PointConfiguration",
    "PowerLawMeasure", "PowerSums", "PreconditionError", "QuadratureError",
    "RunningSupremum", "SharpSampler", "SizeError", "Stacked",
    "StochIntegral", "SymmetricPowerLawMeasure", "TriangularSystem",
    "UniformMeasure", "VectorStochIntegral", "attach_auxiliary_marks",
    "bell_polynomial", "carre_du_champ", "epsilon_minus", "epsilon_plus",
    "exponential_identity_residuals", "gamma_bottom", "gamma_of_added_particle",
    "get_field", "get_smooth", "insertion_jacobian", "integrate_N",
    "integrate_N_compensated", "kde", "kde2d", "laplace_characteristic",
    "laplace_target", "levy_structure", "make_functional", "make_measure",
    "merge_configurations", "multiple_integral", "power_sums",
    "rank_statistics", "run_monte_carlo", "sample_configuration",
    "sharp_sample", "truncated_mass", "__version__",
]
