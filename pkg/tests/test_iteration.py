"""Corrected power iteration: the step map, full runs, and the experiments."""

import json
import math

import numpy as np
import pytest

from ibodylab import (
    DivergenceError,
    IterationOptions,
    S2Function,
    StarBody,
    ZonalProfile,
    ball_body,
    ball_distance_proxies,
    cap_scaling_exponents,
    default_rule,
    ellipsoid_body,
    fit_degree2_correction,
    iterate_step,
    linearized_spectrum,
    quadratic_form_profile,
    run_iteration,
    sup_norm,
)
from helpers import random_even_s2, random_even_zonal, s2_body, zonal_body


# ---------------------------------------------------------------------------
# the degree-2 correction fit

def test_fit_zero_on_flat_profile():
    phi = ZonalProfile.from_coeffs(3, np.zeros(5))
    Q = fit_degree2_correction(phi)
    assert np.array_equal(Q, np.zeros((3, 3)))


def test_fit_recovers_height_squared():
    rule = default_rule(3, 4)
    phi = ZonalProfile.from_values(3, 4, rule.nodes**2 - 1.0 / 3.0, rule)
    Q = fit_degree2_correction(phi)
    want = np.diag([-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0])
    assert np.max(np.abs(Q - want)) <= 1e-12


@pytest.mark.parametrize("rep", ["zonal", "s2"])
def test_fit_pointwise_residual(rep):
    if rep == "zonal":
        f = random_even_zonal(5, 8, seed=23)
        c = f.coeffs.copy()
        c[0] = 0.0
        c[3:] = 0.0  # keep only the degree 2 part plus nothing else
        phi = f.with_coeffs(c)
    else:
        g = random_even_s2(6, seed=23)
        c = g.coeffs.copy()
        c[0] = 0.0
        c[9:] = 0.0
        phi = S2Function.from_coeffs(c)
    Q = fit_degree2_correction(phi)
    assert abs(np.trace(Q)) <= 1e-12
    assert np.max(np.abs(Q - Q.T)) <= 1e-14
    resid = quadratic_form_profile(Q, phi)
    assert np.max(np.abs(resid.coeffs - phi.coeffs)) <= 1e-10


def test_fit_rejects_nonzero_mean():
    c = np.zeros(5)
    c[0] = 0.2
    phi = ZonalProfile.from_coeffs(3, c)
    with pytest.raises(ValueError):
        fit_degree2_correction(phi)


def test_linearized_spectrum_values():
    for d in (3, 4, 7):
        mu = linearized_spectrum(d, 12)
        assert mu[0] == pytest.approx(d - 1.0, abs=1e-15)
        assert mu[2] == pytest.approx(-1.0, abs=1e-15)
        assert mu[4] == pytest.approx(3.0 / (d + 1), abs=1e-15)
        assert np.sum(np.abs(mu[1::2])) == 0.0
        mags = np.abs(mu[2::2])
        assert np.all(np.diff(mags) < 0)


# ---------------------------------------------------------------------------
# single steps

def test_step_fixes_ball():
    body = ball_body(3, 16)
    out, rec = iterate_step(body, IterationOptions())
    assert math.isnan(rec.ratio)
    assert rec.gamma == 1.0
    assert rec.q_norm == 0.0
    assert rec.sup <= 1e-12
    dev = out.profile.coeffs.copy()
    dev[0] -= 1.0
    assert np.max(np.abs(dev)) <= 1e-12


def test_step_contracts_degree_four_at_known_rate():
    eps = 1e-4
    body = zonal_body(3, 12, {4: eps})
    _, rec = iterate_step(body, IterationOptions())
    # dominant surviving mode contracts by (d-1)|v_4| = 3/4 per step
    assert rec.ratio == pytest.approx(0.75, abs=1e-3)


def test_step_degree_two_without_correction():
    eps = 1e-4
    body = zonal_body(3, 8, {2: eps})
    out, _ = iterate_step(body, IterationOptions(kill_h2=False))
    c2 = out.profile.coeffs[2]
    assert c2 / eps == pytest.approx(-1.0, abs=1e-2)


def test_step_degree_two_with_correction():
    eps = 1e-4
    body = zonal_body(3, 8, {2: eps})
    out, rec = iterate_step(body, IterationOptions(kill_h2=True))
    e2 = float(out.profile.energies()[2])
    assert e2 <= (10.0 * eps**2) ** 2
    assert rec.q_norm > 0


def test_step_rejects_large_deviation():
    body = zonal_body(3, 8, {4: 0.2})  # sup of Z4 part exceeds 1/2
    with pytest.raises(ValueError):
        iterate_step(body, IterationOptions())


def test_step_rejects_large_correction():
    # sup stays below 1/2 but the fitted degree-2 form does not
    body = zonal_body(3, 8, {2: 0.23, 4: -0.02})
    with pytest.raises(ValueError, match="correction"):
        iterate_step(body, IterationOptions())


def _deviation_l2(body) -> float:
    c = body.profile.coeffs.copy()
    c[0] -= 1.0
    return float(np.sqrt(np.sum(c * c)))


def test_step_gamma_near_one():
    body = zonal_body(3, 12, {4: 1e-3, 6: 5e-4})
    phi_l2 = _deviation_l2(body)
    _, rec = iterate_step(body, IterationOptions())
    assert rec.gamma > 0
    assert abs(rec.gamma - 1.0) <= 5.0 * phi_l2


# ---------------------------------------------------------------------------
# full runs

def test_run_on_ball_converges_immediately():
    rep = run_iteration(ball_body(3, 8), IterationOptions(max_steps=12))
    assert rep.stopped_reason == "converged"
    assert len(rep.records) == 1
    assert rep.records[0].l2 == 0.0


def _mix_body(d: int) -> StarBody:
    eps = 1e-3 / np.sqrt(3.0)
    return zonal_body(d, 16, {4: eps, 6: eps, 8: eps})


def test_run_d3_reaches_dominant_rate():
    rep = run_iteration(_mix_body(3), IterationOptions(max_steps=10))
    assert abs(rep.asymptotic_ratio - 0.75) <= 0.02
    assert rep.monotone_after_first
    assert rep.stopped_reason == "max_steps"


def test_run_d4_reaches_dominant_rate():
    rep = run_iteration(_mix_body(4), IterationOptions(max_steps=10))
    assert abs(rep.asymptotic_ratio - 0.60) <= 0.02


def test_run_matches_linear_oracle():
    # at eps = 1e-3 the run should track the linearized dynamics: each mode
    # scaled by its multiplier, h2 removed, independently recomputed here
    d = 3
    rep = run_iteration(_mix_body(d), IterationOptions(max_steps=10))
    mu = np.abs(linearized_spectrum(d, 16))
    mu[2] = 0.0  # killed by the correction
    c = _mix_body(d).profile.coeffs.copy()
    c[0] = 0.0
    prev = float(np.sqrt(np.sum(c * c)))
    for rec in rep.records[1:]:
        c = c * mu
        cur = float(np.sqrt(np.sum(c * c)))
        assert rec.ratio == pytest.approx(cur / prev, abs=5e-3)
        prev = cur


def test_run_per_step_invariants():
    rep = run_iteration(_mix_body(3), IterationOptions(max_steps=10))
    prev = None
    for rec in rep.records:
        assert rec.l2 >= 0 and rec.sup >= 0
        assert rec.gamma > 0
        assert rec.q_matrix.shape == (3, 3)
        assert abs(np.trace(rec.q_matrix)) <= 1e-12
        assert np.max(np.abs(rec.q_matrix - rec.q_matrix.T)) <= 1e-12
        if prev is not None:
            assert abs(rec.gamma - 1.0) <= 5.0 * prev.l2
            assert rec.ratio <= 0.8
        prev = rec


def test_correction_residual_quadratic_in_eps():
    # energy left at degree 2 after one corrected step falls at least a
    # factor 5 per epsilon decade, i.e. behaves like eps^2 not eps
    resid = []
    for eps in (1e-2, 1e-3, 1e-4):
        body = zonal_body(3, 8, {2: eps})
        out, _ = iterate_step(body, IterationOptions(kill_h2=True))
        resid.append(np.sqrt(float(out.profile.energies()[2])) / eps)
    assert resid[1] <= resid[0] / 5.0
    assert resid[2] <= resid[1] / 5.0


def test_raw_power_envelope():
    eps = 0.05
    body = zonal_body(3, 16, {4: eps / 3.0})
    # scale so the initial deviation has sup exactly eps
    phi = body.profile.coeffs.copy()
    phi[0] = 0.0
    f = body.profile.with_coeffs(phi)
    scale = eps / sup_norm(f)
    c = phi * scale
    c[0] = 1.0
    body = StarBody(body.profile.with_coeffs(c))
    opts = IterationOptions(raw_power_mode=True, max_steps=4, kill_h2=False)
    rep = run_iteration(body, opts)
    for k, rec in enumerate(rep.records):
        lo = (1.0 - eps) ** ((3 - 1) ** k) - 1e-9
        hi = (1.0 + eps) ** ((3 - 1) ** k) + 1e-9
        assert lo <= rec.min_radial <= rec.max_radial <= hi


def test_raw_power_divergence_guard():
    body = zonal_body(3, 8, {2: 0.2})
    opts = IterationOptions(raw_power_mode=True, max_steps=12, kill_h2=False)
    with pytest.raises(DivergenceError) as ei:
        run_iteration(body, opts)
    rep = ei.value.report
    assert rep.stopped_reason == "diverged"
    assert len(rep.records) >= 2
    assert rep.records[-1].l2 > rep.records[-2].l2


def test_tracked_norms_stay_sane():
    opts = IterationOptions(max_steps=8, track_decay_alpha=4.0, track_c2=True)
    rep = run_iteration(_mix_body(3), opts)
    for rec in rep.records:
        assert rec.c2 is not None and rec.c2 <= 2.0
        assert rec.u_alpha is not None and np.isfinite(rec.u_alpha)


def test_options_validation():
    with pytest.raises(ValueError):
        IterationOptions(max_steps=0)
    with pytest.raises(ValueError):
        IterationOptions(stop_tol=0.0)
    with pytest.raises(ValueError):
        IterationOptions(method="nope")


# ---------------------------------------------------------------------------
# report serialization

def test_report_csv_layout():
    rep = run_iteration(_mix_body(3), IterationOptions(max_steps=3))
    text = rep.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "m,l2,sup,ratio,gamma,q_norm,trunc_loss"
    first = lines[1].split(",")
    assert first[0] == "0"
    assert first[3] == ""  # no ratio before the first step
    assert len(lines) == len(rep.records) + 1


def test_report_json_fields():
    rep = run_iteration(_mix_body(3), IterationOptions(max_steps=2))
    doc = json.loads(rep.to_json())
    assert doc["schema_version"] == 1
    assert doc["kind"] == "iteration_report"
    assert doc["dim"] == 3
    assert doc["stopped_reason"] == "max_steps"
    assert len(doc["steps"]) == 3
    assert doc["steps"][0]["ratio"] is None  # nan is serialized as null


# ---------------------------------------------------------------------------
# distance proxies and cap scaling

def test_proxies_vanish_on_ball():
    assert ball_distance_proxies(ball_body(3, 8), budget=40) == (0.0, 0.0)


def test_proxies_small_for_linear_images():
    body = ellipsoid_body(np.diag([1.01, 1.01, 0.99]), band_limit=16)
    l2p, supp = ball_distance_proxies(body, budget=80)
    assert l2p <= 1e-4 and supp <= 1e-4
    rng = np.random.default_rng(3)
    B = rng.standard_normal((3, 3))
    Q, _ = np.linalg.qr(B)
    A = Q @ np.diag([0.99, 1.0, 1.01]) @ Q.T
    l2p, supp = ball_distance_proxies(ellipsoid_body(A, band_limit=16), budget=80)
    assert l2p <= 1e-4 and supp <= 1e-4


def test_proxies_bounded_by_plain_deviation():
    body = s2_body(8, seed=31, scale=0.05)
    l2p, supp = ball_distance_proxies(body, budget=60)
    c = body.profile.coeffs.copy()
    c[0] -= 1.0
    assert l2p <= float(np.linalg.norm(c)) + 1e-12
    assert supp <= sup_norm(S2Function.from_coeffs(c)) + 1e-9


def test_cap_scaling_exponents_d3():
    res = cap_scaling_exponents(3)
    assert abs(res.exponent_sup - 2.0 / 3.0) <= 0.1
    assert abs(res.exponent_grad - 1.0 / 3.0) <= 0.1
    finer = cap_scaling_exponents(3, resolution=8192)
    assert abs(finer.exponent_sup - res.exponent_sup) <= 0.02
    assert abs(finer.exponent_grad - res.exponent_grad) <= 0.02


def test_cap_scaling_validation():
    with pytest.raises(ValueError):
        cap_scaling_exponents(2)
    with pytest.raises(ValueError):
        cap_scaling_exponents(3, widths=[0.3])
    with pytest.raises(ValueError):
        cap_scaling_exponents(3, widths=[0.3, 2.0])
    with pytest.raises(ValueError):
        cap_scaling_exponents(3, resolution=32)
