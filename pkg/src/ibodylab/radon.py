"""Spherical Radon transform: spectral route and geometric quadrature routes.

The transform averages a function over unit subspheres x . xi = 0 and is
normalized so constants are fixed.  On harmonics of even degree k it
multiplies by (-1)^(k/2) v(d, k) where v is the explicit ratio of odd
products computed in `radon_coefficient`; odd degrees are annihilated.

Two implementations are kept deliberately separate: `radon_spectral`
multiplies coefficients, while the geometric routes integrate over the
subspheres by quadrature without touching the multiplier table.  Their
agreement on random band-limited inputs is the package's primary oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sphharm import S2Function, sh_degrees
from .zonal import ZonalProfile, subsphere_rule


def radon_coefficient(d: int, k: int) -> float:
    """Magnitude v(d, k) of the transform's action on degree-k harmonics.

    v(d, 0) = 1 and v(d, k) = v(d, k-2) (k-1)/(d+k-3) for even k; the signed
    multiplier is (-1)^(k/2) v(d, k).  Odd degrees are rejected: the
    transform annihilates them.
    """
    if int(d) != d or d < 3:
        raise ValueError(f"sphere dimension must be an integer >= 3, got {d}")
    if int(k) != k or k < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {k}")
    if k % 2 == 1:
        raise ValueError("odd degrees are annihilated; no eigenvalue is defined")
    out = 1.0
    for j in range(2, k + 1, 2):
        out *= (j - 1.0) / (d + j - 3.0)
    return out


def radon_multiplier(d: int, kmax: int) -> np.ndarray:
    """Signed per-degree multipliers for degrees 0..kmax (0 at odd degrees)."""
    out = np.zeros(kmax + 1)
    out[0] = 1.0
    v = 1.0
    for k in range(2, kmax + 1, 2):
        v *= (k - 1.0) / (d + k - 3.0)
        out[k] = (-1.0) ** (k // 2) * v
    return out


def radon_spectral(f):
    """Apply the transform by multiplying coefficients degree by degree."""
    if isinstance(f, ZonalProfile):
        mult = radon_multiplier(f.dim, f.band_limit)
        return ZonalProfile.from_coeffs(f.dim, f.coeffs * mult, f.rule)
    mult = radon_multiplier(3, f.band_limit)
    return S2Function.from_coeffs(f.coeffs * mult[sh_degrees(f.band_limit)], f.grid)


def radon_geometric_zonal(f: ZonalProfile, subsphere_order: int | None = None) -> ZonalProfile:
    """Geometric route for zonal profiles.

    For output direction at height t the subsphere average reduces to a
    one-dimensional integral of f(s sqrt(1 - t^2)) against the normalized
    weight (1 - s^2)^((d-4)/2); for d = 3 that weight is the arcsine density
    of a great-circle coordinate.
    """
    d = f.dim
    if subsphere_order is None:
        subsphere_order = f.band_limit + 8
    sub = subsphere_rule(d, subsphere_order)
    radial = np.sqrt(np.clip(1.0 - f.rule.nodes**2, 0.0, None))
    args = np.outer(radial, sub.nodes)
    out_vals = f.eval_at(args.ravel()).reshape(args.shape) @ sub.weights
    return ZonalProfile.from_values(d, f.band_limit, out_vals, f.rule)


def radon_geometric_s2(f: S2Function, circle_points: int | None = None) -> S2Function:
    """Geometric route on S^2: trapezoid average over great circles.

    A band-L function restricted to a circle is a trigonometric polynomial
    of degree L, so M >= L + 1 equally spaced samples average it exactly;
    the default M = 2L + 9 leaves margin.
    """
    if circle_points is None:
        circle_points = 2 * f.band_limit + 9
    tau = 2.0 * np.pi * np.arange(circle_points) / circle_points
    cs, sn = np.cos(tau), np.sin(tau)
    dirs = f.grid.points().reshape(-1, 3)
    # orthonormal frames for all directions at once
    a = np.zeros_like(dirs)
    pick = np.abs(dirs[:, 0]) <= 0.9
    a[pick, 0] = 1.0
    a[~pick, 1] = 1.0
    u = np.cross(a, dirs)
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v = np.cross(dirs, u)
    circles = cs[None, :, None] * u[:, None, :] + sn[None, :, None] * v[:, None, :]
    vals = f.eval_at_points(circles.reshape(-1, 3)).reshape(len(dirs), circle_points)
    out_vals = vals.mean(axis=1).reshape(f.grid.weights.shape)
    return S2Function.from_values(f.band_limit, out_vals, f.grid)


# ---------------------------------------------------------------------------
# tail-energy transfer experiment

@dataclass(frozen=True)
class SmoothingGainResult:
    """Per-tail energy transfer of the transform on a synthetic spectrum
    and the log-log slopes fitted to it.

    energy_ratios[i] is the harmonic energy the transform keeps above
    degree tail_indices[i], relative to the input's energy there; its
    fitted slope is expected near -(d-2).  l2_ratios are the square
    roots, with slope half that."""
    dim: int
    decay: float
    band_limit: int
    tail_indices: np.ndarray
    energy_ratios: np.ndarray
    energy_slope: float
    l2_slope: float


def smoothing_gain_experiment(d: int, decay: float = 2.0,
                              band_limit: int = 4096,
                              tail_indices=None) -> SmoothingGainResult:
    """Measure how fast the transform damps high-degree tails.

    A synthetic even spectrum with energies (1 + k)^(-2 decay) is pushed
    through the multiplier table; for each n in tail_indices the ratio
    (output energy above degree n) / (input energy above degree n) is
    recorded and a straight line is fitted in log-log.  tail_indices
    must stay below band_limit / 4 so the truncated tails are honest.
    """
    if int(d) != d or d < 3:
        raise ValueError(f"sphere dimension must be an integer >= 3, got {d}")
    if not decay > 0.5:
        raise ValueError("decay must exceed 1/2 for summable tail energies")
    if tail_indices is None:
        tail_indices = np.unique(np.geomspace(32, 512, 12).astype(int))
    tail_indices = np.asarray(tail_indices, dtype=int)
    if tail_indices.size < 2 or np.any(tail_indices < 1):
        raise ValueError("need at least two positive tail indices")
    if int(tail_indices.max()) > band_limit // 4:
        raise ValueError("largest tail index must not exceed band_limit / 4")
    k = np.arange(band_limit + 1)
    energies = np.where(k % 2 == 0, (1.0 + k) ** (-2.0 * decay), 0.0)
    out_energies = energies * radon_multiplier(d, band_limit) ** 2
    tail_in = np.cumsum(energies[::-1])[::-1]
    tail_out = np.cumsum(out_energies[::-1])[::-1]
    ratios = tail_out[tail_indices + 1] / tail_in[tail_indices + 1]
    logs = np.log(tail_indices)
    energy_slope = float(np.polyfit(logs, np.log(ratios), 1)[0])
    return SmoothingGainResult(
        dim=int(d), decay=float(decay), band_limit=int(band_limit),
        tail_indices=tail_indices, energy_ratios=ratios,
        energy_slope=energy_slope, l2_slope=0.5 * energy_slope)
