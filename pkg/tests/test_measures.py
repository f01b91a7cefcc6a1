import math

import numpy as np
import pytest

from qmod.errors import DomainError, ValidationError
from qmod.geometry import euclidean_radius, make_neighborhood
from qmod.measures import (
    ScalarField, ball_integral, constant_field, field_from_spec, fmo_profile, fubini_bracket,
    fubini_sandwich, hyperbolic_ball_volume, hyperbolic_sphere_area, indicator_annulus,
    inverse_distance_field, log_field, q_stats, shell_integral, sphere_area, sphere_integral,
    sphere_quadrature,
)
from qmod.mobius import generate_group, translation, trivial_group


def nbhd_at(n, radius=1.0):
    return make_neighborhood(trivial_group(n), np.zeros(n), radius)


def off_center(n):
    """Non-radial evaluation path: a field centered away from the chart center."""
    c = np.zeros(n)
    c[0] = 0.2
    return ScalarField(lambda x: np.ones(np.shape(x)[:-1]), "one-off-center", c)


@pytest.mark.parametrize("n,omega", [(2, 2 * math.pi), (3, 4 * math.pi)])
def test_quadrature_weights_sum_to_sphere_area(n, omega):
    assert abs(sphere_quadrature(n).weights.sum() - omega) < 1e-9
    assert sphere_area(n) == pytest.approx(omega, rel=1e-15)


def test_n3_quadrature_has_enough_nodes():
    assert len(sphere_quadrature(3).weights) >= 590


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("r", [0.1, 0.5, 0.9])
def test_sphere_integral_of_one_is_hyperbolic_area(n, r):
    rho = float(euclidean_radius(r))
    closed = sphere_area(n) * rho ** (n - 1) * (2 / (1 - rho ** 2)) ** (n - 1)
    nb = nbhd_at(n)
    assert sphere_integral(nb, r, constant_field(1.0, np.zeros(n))) == pytest.approx(closed, rel=1e-12)
    assert sphere_integral(nb, r, off_center(n)) == pytest.approx(closed, rel=1e-9)
    assert hyperbolic_sphere_area(n, r) == pytest.approx(closed, rel=1e-12)


def test_sphere_integral_of_zero():
    assert sphere_integral(nbhd_at(2), 0.4, constant_field(0.0)) == 0.0


def test_sphere_integral_linear():
    nb = nbhd_at(3)
    Q1 = log_field(np.zeros(3), 2.0)
    Q2 = off_center(3)
    combo = ScalarField(lambda x: 2 * Q1(x) + 3 * Q2(x), "combo", None)
    lhs = sphere_integral(nb, 0.6, combo)
    rhs = 2 * sphere_integral(nb, 0.6, Q1) + 3 * sphere_integral(nb, 0.6, Q2)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_sphere_integral_rejects_radius_beyond_neighborhood():
    with pytest.raises(DomainError):
        sphere_integral(nbhd_at(2, 0.5), 0.7, constant_field(1.0))


def test_sphere_integral_invariant_under_orbit_translate():
    g = generate_group([translation(2, 1.2)], 3)
    x0 = np.array([0.05, 0.1])
    a = make_neighborhood(g, x0, 0.5)
    b = make_neighborhood(g, g.motions[1](x0), 0.5)
    one = ScalarField(lambda x: np.ones(np.shape(x)[:-1]), "one", None)
    assert sphere_integral(a, 0.4, one) == pytest.approx(sphere_integral(b, 0.4, one), rel=1e-6)


@pytest.mark.parametrize("r0", [0.25, 0.5, 1.0])
def test_ball_integral_disk_area(r0):
    exact = 4 * math.pi * math.sinh(r0 / 2) ** 2
    res = ball_integral(nbhd_at(2, 1.0), r0, off_center(2), method="mc")
    assert abs(res.value - exact) < 3 * res.stderr + 1e-12
    assert hyperbolic_ball_volume(2, r0) == pytest.approx(exact, rel=1e-12)


def test_ball_integral_matches_frozen_radial_oracle(frozen):
    for case in frozen["volume"]:
        n, r0 = case["n"], case["r0"]
        Q = constant_field(1.0, np.zeros(n)) if case["field"] == "constant" else log_field(np.zeros(n), 2.0)
        nb = nbhd_at(n)
        assert ball_integral(nb, r0, Q, method="radial").value == pytest.approx(case["volume"], rel=1e-8)
        mc = ball_integral(nb, r0, Q, method="mc")
        assert abs(mc.value - case["volume"]) < 4 * mc.stderr


def test_ball_integral_zero_field():
    assert ball_integral(nbhd_at(2), 0.5, constant_field(0.0), method="mc").value == 0.0


def test_ball_integral_budget_validation():
    with pytest.raises(ValidationError):
        ball_integral(nbhd_at(2), 0.5, constant_field(1.0), budget=0)


def test_ball_integral_monotone_in_radius():
    nb = nbhd_at(3)
    Q = log_field(np.zeros(3), 3.0)
    vals = [ball_integral(nb, r, Q).value for r in (0.2, 0.4, 0.6, 0.8)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_ball_derivative_matches_sphere_integral():
    nb = nbhd_at(2)
    Q = log_field(np.zeros(2), 3.0)
    r, h = 0.5, 1e-4
    dV = (ball_integral(nb, r + h, Q).value - ball_integral(nb, r - h, Q).value) / (2 * h)
    assert dV == pytest.approx(sphere_integral(nb, r, Q), rel=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_fubini_sandwich_constant_field(n):
    res = fubini_sandwich(nbhd_at(n), 0.5, constant_field(1.0, np.zeros(n)))
    lo, hi = fubini_bracket(n, 0.5)
    assert lo == 2 ** (n - 1)
    assert res.inside
    assert res.hyperbolic_ratio == pytest.approx(1.0, abs=4 * res.volume.rel_err)


def test_fubini_zero_field():
    res = fubini_sandwich(nbhd_at(2), 0.5, constant_field(0.0))
    assert res.volume.value == 0.0 and res.shell_euclidean == 0.0 and res.inside


def test_indicator_shell_reduces_to_subinterval():
    nb = nbhd_at(2)
    Q = indicator_annulus(np.zeros(2), 0.2, 0.35)
    full = shell_integral(nb, 0.0, 0.5, Q)
    sub = shell_integral(nb, 0.2, 0.35, constant_field(1.0, np.zeros(2)))
    assert full == pytest.approx(sub, rel=1e-10)


def test_q_stats_constant_field():
    nb = nbhd_at(3)
    r = 0.7
    s = q_stats(nb, r, constant_field(1.0, np.zeros(3)))
    assert s.q_norm == pytest.approx(hyperbolic_sphere_area(3, r) ** 0.5, rel=1e-12)
    assert s.identity_residual < 1e-9


def test_q_stats_homogeneous():
    nb = nbhd_at(2)
    a = q_stats(nb, 0.5, log_field(np.zeros(2), 2.0))
    b = q_stats(nb, 0.5, log_field(np.zeros(2), 2.0) * 3.0)
    assert b.q_mean == pytest.approx(3 * a.q_mean) and b.q_norm == pytest.approx(3 * a.q_norm)


def test_fmo_constant_field_is_zero():
    prof = fmo_profile(nbhd_at(2), constant_field(2.0, np.zeros(2)), [0.4, 0.2, 0.1])
    assert np.all(prof.values == 0.0) and prof.bounded


@pytest.mark.parametrize("n", [2, 3])
def test_fmo_log_field_bounded(n):
    prof = fmo_profile(nbhd_at(n), log_field(np.zeros(n), 2.0), [0.4, 0.2, 0.1, 0.05, 0.025])
    assert prof.values.max() <= 2 * np.median(prof.values)
    assert prof.bounded


def test_fmo_inverse_distance_unbounded():
    prof = fmo_profile(nbhd_at(2), inverse_distance_field(np.zeros(2)), [0.4, 0.2, 0.1, 0.05, 0.025])
    assert np.all(np.diff(prof.values) > 0) and not prof.bounded


def test_fields_finite_almost_everywhere(rng):
    x = rng.uniform(-0.5, 0.5, size=(10000, 2))
    assert log_field(np.zeros(2), 2.0).nonfinite_fraction(x) < 1e-3


def test_field_spec_rejects_unknown_kind():
    with pytest.raises(ValidationError):
        field_from_spec({"kind": "nope"}, np.zeros(2), 2)
