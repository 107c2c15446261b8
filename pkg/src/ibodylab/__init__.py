"""Numerical laboratory for the intersection-body map on star bodies
near the unit ball.

Layers, bottom up: quadrature rules (`quadrature`), zonal and full
spherical harmonic representations (`zonal`, `sphharm`), norms and
spectral multipliers (`analysis`), the spherical Radon transform with
independent spectral and geometric routes (`radon`), star bodies and
the intersection-body operator (`bodies`), the corrected fixed-point
iteration and its experiments (`iteration`), and a command line driver
(`cli`).
"""

__version__ = "0.1.0"

from .analysis import (
    apply_multiplier,
    approx_decay_norm,
    c2_norm,
    cutoff_profile,
    degree_energies,
    derivative_sup_norms,
    l2_norm,
    mean_value,
    project_degree,
    smooth_cutoff,
    sup_norm,
)
from .bodies import (
    LinearMap,
    PositivityError,
    StarBody,
    apply_linear_map,
    ball_body,
    ball_volume,
    direction_map_distortion,
    ellipsoid_body,
    ellipsoid_intersection_closed_form,
    intersection_body,
    radon_of_power,
    section_volume,
    sphere_area,
)
from .iteration import (
    CapScalingResult,
    DivergenceError,
    IterationOptions,
    IterationReport,
    StepRecord,
    ball_distance_proxies,
    cap_scaling_exponents,
    fit_degree2_correction,
    iterate_step,
    linearized_spectrum,
    quadratic_form_profile,
    run_iteration,
)
from .quadrature import JacobiRule, S2Grid, even_moment, gauss_jacobi_rule, integrate, s2_grid
from .radon import (
    SmoothingGainResult,
    radon_coefficient,
    radon_geometric_s2,
    radon_geometric_zonal,
    radon_multiplier,
    radon_spectral,
    smoothing_gain_experiment,
)
from .seeding import make_rng
from .sphharm import (
    S2Function,
    analyze_s2,
    default_s2_grid,
    eval_s2_at_points,
    legendre_table,
    sh_degrees,
    sh_index,
    synthesize_s2,
)
from .zonal import (
    ZonalProfile,
    analyze_zonal,
    default_rule,
    sphere_exponent,
    subsphere_rule,
    synthesize_zonal,
    zonal_basis_eval,
    zonal_basis_matrix,
)

__all__ = [name for name in dir() if not name.startswith("_")]
