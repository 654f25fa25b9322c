"""Special functions: modified Bessel functions, gamma, adaptive quadrature."""

from .bessel import (BesselEvalConfig, OutOfRegionWarning, bessel_i, bessel_ie,
                     bessel_ik_scaled, bessel_k, bessel_ke, in_validated_region,
                     log_bessel_ik_scaled)
from .gamma import EULER_GAMMA, gamma_fn, rgamma
from .quadrature import QuadResult, composite_gauss, gauss_legendre, graded_edges, integrate_adaptive
