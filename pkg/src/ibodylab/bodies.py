"""Origin-symmetric star bodies, linear actions, and the intersection-body map.

A body is stored through its radial function rho on the sphere, band-limited
in one of the two representations.  The intersection-body operator sends rho
to the normalized subsphere average of rho^(d-1); with the unit-mass Radon
normalization used here the unit ball is an exact fixed point, and outputs
are rescaled to surface mean 1 so that iterations live in the quotient by
dilations.

The GL(d) action on radial functions is (T f)(x) = f(Tx/|Tx|) / |Tx|,
which corresponds to replacing the body K by T^(-1) K.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .quadrature import gauss_jacobi_rule, s2_grid
from .radon import radon_geometric_s2, radon_geometric_zonal, radon_multiplier
from .seeding import make_rng
from .sphharm import S2Function, default_s2_grid, sh_degrees
from .zonal import ZonalProfile, sphere_exponent, subsphere_rule

EVENNESS_TOL = 1e-12


class PositivityError(RuntimeError):
    """Raised when a radial function fails strict positivity."""


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere S^n in R^(n+1)."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Invertible linear map with cached operator norms."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("linear map must be a square matrix")
        object.__setattr__(self, "matrix", m)
        det = float(np.linalg.det(m))
        if abs(det) < 1e-300:
            raise ValueError("linear map must be invertible")
        object.__setattr__(self, "_det", det)
        s = np.linalg.svd(m, compute_uv=False)
        object.__setattr__(self, "_op_norm", float(s[0]))
        object.__setattr__(self, "_inv_norm", float(1.0 / s[-1]))

    @property
    def det(self) -> float:
        return self._det

    @property
    def op_norm(self) -> float:
        return self._op_norm

    @property
    def inv_norm(self) -> float:
        return self._inv_norm


def _as_matrix(T) -> np.ndarray:
    if isinstance(T, LinearMap):
        return T.matrix
    return LinearMap(np.asarray(T, dtype=float)).matrix


@dataclass(frozen=True, eq=False)
class StarBody:
    """Band-limited origin-symmetric star body with strictly positive radial."""

    profile: "ZonalProfile | S2Function"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = self.profile.node_values if isinstance(self.profile, ZonalProfile) \
            else self.profile.values
        if float(np.min(vals)) <= 0.0:
            raise PositivityError(
                f"radial function not strictly positive (min = {float(np.min(vals)):.3e})"
            )
        e = self.profile.energies()
        odd = float(e[1::2].sum())
        total = float(e.sum())
        if odd > EVENNESS_TOL * total:
            raise ValueError(
                f"body is not origin-symmetric: odd-degree energy {odd:.3e} "
                f"of total {total:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.profile.dim if isinstance(self.profile, ZonalProfile) else 3

    @property
    def band_limit(self) -> int:
        return self.profile.band_limit

    @property
    def representation(self) -> str:
        return "zonal" if isinstance(self.profile, ZonalProfile) else "s2"

    def radial_eval(self, arg):
        """Radial function: at heights t for zonal bodies, at unit points
        (..., 3) for s2 bodies."""
        if isinstance(self.profile, ZonalProfile):
            return self.profile.eval_at(arg)
        return self.profile.eval_at_points(arg)

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": 1,
            "dim": self.dim,
            "band_limit": self.band_limit,
            "representation": self.representation,
            "coeffs": [float(c) for c in self.profile.coeffs],
        })

    @classmethod
    def from_json(cls, text: str) -> "StarBody":
        obj = json.loads(text)
        coeffs = np.asarray(obj["coeffs"], dtype=float)
        if obj["representation"] == "zonal":
            prof = ZonalProfile.from_coeffs(int(obj["dim"]), coeffs)
        elif obj["representation"] == "s2":
            if int(obj["dim"]) != 3:
                raise ValueError("s2 representation requires dim 3")
            prof = S2Function.from_coeffs(coeffs)
        else:
            raise ValueError(f"unknown representation {obj['representation']!r}")
        if prof.band_limit != int(obj["band_limit"]):
            raise ValueError("coefficient length does not match band_limit")
        return cls(prof)


def ball_body(d: int, band_limit: int, representation: str = "zonal") -> StarBody:
    """The unit ball, rho = 1."""
    if representation == "zonal":
        c = np.zeros(band_limit + 1)
        c[0] = 1.0
        return StarBody(ZonalProfile.from_coeffs(d, c))
    if d != 3:
        raise ValueError("s2 representation requires d = 3")
    c = np.zeros((band_limit + 1) ** 2)
    c[0] = 1.0
    return StarBody(S2Function.from_coeffs(c))


# ---------------------------------------------------------------------------
# GL(d) action

def _axis_form(m: np.ndarray) -> tuple[float, float]:
    """Decompose m = diag(a, ..., a, b); error out otherwise."""
    d = m.shape[0]
    scale = float(np.abs(m).max())
    off = m - np.diag(np.diag(m))
    if np.abs(off).max() > 1e-12 * scale:
        raise ValueError("zonal profiles support only axis-fixing diagonal maps")
    diag = np.diag(m)
    if d > 1 and np.abs(diag[:-1] - diag[0]).max() > 1e-12 * scale:
        raise ValueError("zonal profiles require diag(a, ..., a, b) maps")
    return float(diag[0]), float(diag[-1])


def apply_linear_map(f, T):
    """The action (T f)(x) = f(Tx/|Tx|) / |Tx| on radial functions.

    Accepts a ZonalProfile, an S2Function, or a StarBody (acted on through
    its profile).  For a zonal profile T must have the axis-fixing form
    diag(a, ..., a, b); a general invertible 3x3 matrix is accepted for s2
    functions.  The result is re-analyzed at the same band limit (the
    action does not preserve band-limitedness exactly; the discarded tail
    is O(|T - I|) times the top-band content for maps near the identity).
    """
    if isinstance(f, StarBody):
        return StarBody(apply_linear_map(f.profile, T), meta=dict(f.meta))
    m = _as_matrix(T)
    if isinstance(f, ZonalProfile):
        if m.shape[0] != f.dim:
            raise ValueError("map dimension does not match the profile")
        a, b = _axis_form(m)
        t = f.rule.nodes
        stretch = np.sqrt(a * a * (1.0 - t * t) + b * b * t * t)
        vals = f.eval_at(b * t / stretch) / stretch
        return ZonalProfile.from_values(f.dim, f.band_limit, vals, f.rule)
    if m.shape[0] != 3:
        raise ValueError("s2 functions require 3x3 maps")
    pts = f.grid.points().reshape(-1, 3)
    mapped = pts @ m.T
    norms = np.linalg.norm(mapped, axis=1)
    vals = f.eval_at_points(mapped / norms[:, None]) / norms
    return S2Function.from_values(f.band_limit, vals.reshape(f.grid.weights.shape), f.grid)


def direction_map_distortion(T, samples: int = 8192, seed: int = 0) -> float:
    """max |Tx/|Tx| - x| over the sphere, for T = I + Q with Q symmetric,
    |Q| < 1/2 (operator norm).

    Sampled deterministically: seeded unit vectors plus the eigenvector
    combinations of Q where the maximum of such quadratic-form distortions
    sits in practice.
    """
    m = _as_matrix(T)
    d = m.shape[0]
    q = m - np.eye(d)
    if np.abs(q - q.T).max() > 1e-10 * max(1.0, np.abs(m).max()):
        raise ValueError("distortion bound requires a symmetric perturbation")
    qnorm = float(np.abs(np.linalg.eigvalsh(0.5 * (q + q.T))).max())
    if qnorm >= 0.5:
        raise ValueError(f"perturbation norm {qnorm:.3f} is not below 1/2")
    rng = make_rng(seed)
    pts = rng.standard_normal((samples, d))
    _, vecs = np.linalg.eigh(0.5 * (q + q.T))
    cand = [vecs[:, i] for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            cand.append((vecs[:, i] + vecs[:, j]) / np.sqrt(2.0))
            cand.append((vecs[:, i] - vecs[:, j]) / np.sqrt(2.0))
    pts = np.vstack([pts, np.asarray(cand)])
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    mapped = pts @ m.T
    mapped /= np.linalg.norm(mapped, axis=1, keepdims=True)
    return float(np.linalg.norm(mapped - pts, axis=1).max())


# ---------------------------------------------------------------------------
# intersection-body operator

def _truncate_after_multiplier(coeffs_ext, keep: int, degrees=None):
    if degrees is None:  # zonal layout
        kept = coeffs_ext[:keep + 1].copy()
        lost = float(np.sqrt((coeffs_ext[keep + 1:] ** 2).sum()))
    else:
        mask = degrees <= keep
        kept = coeffs_ext[mask].copy()
        lost = float(np.sqrt((coeffs_ext[~mask] ** 2).sum()))
    return kept, lost


def radon_of_power(body: StarBody, method: str = "spectral",
                   normalize: bool = True) -> StarBody:
    """Transform of the radial power: R(rho^(d-1)), the intersection-body
    map up to scale.

    The power is formed on a quadrature set exact for its degree,
    transformed (spectrally by default, or by subsphere quadrature with
    method="geometric"), and truncated back to the body's band limit with
    the discarded coefficient mass recorded in meta["trunc_loss"].  With
    normalize=True the output is rescaled to surface mean 1 and the mean
    it had before rescaling is recorded in meta["mean_power"]; with
    normalize=False the raw transform is returned.  Raises PositivityError
    if the result is not a star body.
    """
    if method not in ("spectral", "geometric"):
        raise ValueError(f"unknown method {method!r}")
    d = body.dim
    f = body.profile
    K = body.band_limit
    if isinstance(f, ZonalProfile):
        k_ext = (d - 1) * K
        work = gauss_jacobi_rule(d, sphere_exponent(d), k_ext + 8)
        powered = f.eval_at(work.nodes) ** (d - 1)
        pe = ZonalProfile.from_values(d, k_ext, powered, work)
        if method == "spectral":
            out_ext = pe.coeffs * radon_multiplier(d, k_ext)
        else:
            out_ext = radon_geometric_zonal(pe).coeffs
        mean_power = float(out_ext[0])
        if normalize:
            out_ext = out_ext / mean_power
        kept, lost = _truncate_after_multiplier(out_ext, K)
        prof = ZonalProfile.from_coeffs(d, kept, f.rule)
    else:
        k_ext = 2 * K
        powered = f.values**2
        pe = S2Function.from_values(k_ext, powered, f.grid)
        if method == "spectral":
            mult = radon_multiplier(3, k_ext)[sh_degrees(k_ext)]
            out_ext = pe.coeffs * mult
        else:
            out_ext = radon_geometric_s2(pe).coeffs
        mean_power = float(out_ext[0])
        if normalize:
            out_ext = out_ext / mean_power
        kept, lost = _truncate_after_multiplier(out_ext, K, sh_degrees(k_ext))
        prof = S2Function.from_coeffs(kept, f.grid)
    vals = prof.node_values if isinstance(prof, ZonalProfile) else prof.values
    if float(np.min(vals)) <= 0.0:
        raise PositivityError(
            "intersection body has a nonpositive radial function; "
            "the input is too far from the ball for this band limit"
        )
    meta = {"trunc_loss": lost, "method": method}
    if normalize:
        meta["mean_power"] = mean_power
    return StarBody(prof, meta=meta)


def intersection_body(body: StarBody, method: str = "spectral") -> StarBody:
    """Image of the body under the intersection-body map, mean-normalized.

    Shape only: the true section volumes carry an extra constant factor
    that mean normalization removes (the ball maps to the ball).  See
    radon_of_power for the computation and the recorded metadata.
    """
    return radon_of_power(body, method=method, normalize=True)


def section_volume(body: StarBody, direction) -> float:
    """(d-1)-volume of the central hyperplane section orthogonal to the
    direction, by direct polar quadrature over the subsphere.

    For zonal bodies the direction may be given as its height t = <xi, axis>
    (scalar) or as a d-vector; for s2 bodies it is a unit 3-vector.
    """
    d = body.dim
    f = body.profile
    if isinstance(f, ZonalProfile):
        arr = np.asarray(direction, dtype=float)
        if arr.ndim == 1 and arr.size == d:
            t = float(arr[-1] / np.linalg.norm(arr))
        else:
            t = float(arr)
        if not -1.0 <= t <= 1.0:
            raise ValueError("zonal direction must be a height in [-1, 1]")
        sub = subsphere_rule(d, f.band_limit + 8)
        args = np.sqrt(max(1.0 - t * t, 0.0)) * sub.nodes
        avg = float(f.eval_at(args) ** (d - 1) @ sub.weights)
        return sphere_area(d - 2) / (d - 1) * avg
    xi = np.asarray(direction, dtype=float)
    xi = xi / np.linalg.norm(xi)
    n = 2 * f.band_limit + 9
    tau = 2.0 * np.pi * np.arange(n) / n
    a = np.array([1.0, 0.0, 0.0]) if abs(xi[0]) <= 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(a, xi)
    u /= np.linalg.norm(u)
    v = np.cross(xi, u)
    circle = np.outer(np.cos(tau), u) + np.outer(np.sin(tau), v)
    avg = float((f.eval_at_points(circle) ** 2).mean())
    return sphere_area(1) / 2.0 * avg


# ---------------------------------------------------------------------------
# ellipsoids

def _check_spd(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("ellipsoid matrix must be square")
    if np.abs(a - a.T).max() > 1e-12 * np.abs(a).max():
        raise ValueError("ellipsoid matrix must be symmetric")
    if np.linalg.eigvalsh(a).min() <= 0.0:
        raise ValueError("ellipsoid matrix must be positive definite")
    return a


def _ellipsoid_profile(a: np.ndarray, band_limit: int, representation: str | None):
    """Band-limited projection of x -> 1/|a x| with recorded projection error."""
    d = a.shape[0]
    if representation is None:
        representation = "s2" if d == 3 else "zonal"
    if representation == "zonal":
        try:
            aa, bb = _axis_form(a)
        except ValueError as exc:
            raise ValueError("zonal ellipsoids require diag(a, ..., a, b)") from exc
        rule = gauss_jacobi_rule(d, sphere_exponent(d), 2 * band_limit + 8)
        t = rule.nodes
        vals = 1.0 / np.sqrt(aa * aa * (1.0 - t * t) + bb * bb * t * t)
        prof = ZonalProfile.from_values(d, band_limit, vals, rule)
        fine = gauss_jacobi_rule(d, sphere_exponent(d), 4 * rule.order)
        exact = 1.0 / np.sqrt(aa * aa * (1.0 - fine.nodes**2) + bb * bb * fine.nodes**2)
        err = float(np.abs(prof.eval_at(fine.nodes) - exact).max() / np.abs(exact).max())
        return prof, err
    if d != 3:
        raise ValueError("s2 representation requires d = 3")
    grid = default_s2_grid(band_limit)
    pts = grid.points()
    vals = 1.0 / np.linalg.norm(pts @ a.T, axis=-1)
    prof = S2Function.from_values(band_limit, vals, grid)
    fine = s2_grid(2 * (grid.n_theta - 1))
    fp = fine.points()
    exact = 1.0 / np.linalg.norm(fp @ a.T, axis=-1)
    err = float(np.abs(prof.eval_at_points(fp) - exact).max() / np.abs(exact).max())
    return prof, err


def ellipsoid_body(a, band_limit: int = 32, representation: str | None = None) -> StarBody:
    """The ellipsoid {x : |a^(-1) x| <= 1} (image of the ball under a),
    radial function 1/|a^(-1) xi|, projected to the band limit."""
    a = _check_spd(a)
    prof, err = _ellipsoid_profile(np.linalg.inv(a), band_limit, representation)
    return StarBody(prof, meta={"projection_error": err})


def ellipsoid_intersection_closed_form(a, band_limit: int = 32,
                                       representation: str | None = None) -> StarBody:
    """Exact (mean-normalized) intersection body of the ellipsoid above:
    radial function proportional to 1/|a xi|."""
    a = _check_spd(a)
    prof, err = _ellipsoid_profile(a, band_limit, representation)
    coeffs = prof.coeffs / prof.coeffs[0]
    if isinstance(prof, ZonalProfile):
        prof = ZonalProfile.from_coeffs(prof.dim, coeffs, prof.rule)
    else:
        prof = S2Function.from_coeffs(coeffs, prof.grid)
    return StarBody(prof, meta={"projection_error": err})
