"""Shared builders for randomized test inputs.

Everything here routes through make_rng so each test pins its own seed and
reruns reproduce the same numbers bit for bit.
"""

import numpy as np

from ibodylab import S2Function, StarBody, ZonalProfile, make_rng, sh_degrees


def random_even_zonal(d: int, band_limit: int, seed: int, decay: float = 1.0) -> ZonalProfile:
    rng = make_rng(seed)
    k = np.arange(band_limit + 1)
    coeffs = np.where(k % 2 == 0, rng.standard_normal(band_limit + 1), 0.0)
    coeffs = coeffs * (1.0 + k) ** (-decay)
    return ZonalProfile.from_coeffs(d, coeffs)


def random_even_s2(band_limit: int, seed: int, decay: float = 1.5) -> S2Function:
    rng = make_rng(seed)
    degs = sh_degrees(band_limit)
    coeffs = rng.standard_normal(degs.size)
    coeffs[degs % 2 == 1] = 0.0
    coeffs = coeffs * (1.0 + degs) ** (-decay)
    return S2Function.from_coeffs(coeffs)


def zonal_body(d: int, band_limit: int, pert: dict[int, float]) -> StarBody:
    """Ball plus the given {degree: coefficient} zonal perturbation."""
    coeffs = np.zeros(band_limit + 1)
    coeffs[0] = 1.0
    for k, c in pert.items():
        coeffs[k] = c
    return StarBody(ZonalProfile.from_coeffs(d, coeffs))


def s2_body(band_limit: int, seed: int, scale: float, decay: float = 1.5) -> StarBody:
    """Ball plus a random even perturbation scaled to sup norm `scale`."""
    from ibodylab import sup_norm

    phi = random_even_s2(band_limit, seed, decay)
    coeffs = phi.coeffs.copy()
    coeffs[0] = 0.0
    phi = S2Function.from_coeffs(coeffs)
    s = sup_norm(phi)
    coeffs = coeffs * (scale / s)
    coeffs[0] = 1.0
    return StarBody(S2Function.from_coeffs(coeffs))


def random_points_on_sphere(n: int, dim: int, seed: int) -> np.ndarray:
    rng = make_rng(seed)
    x = rng.standard_normal((n, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)
