import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from qmod.distortion import (
    MapSample, calderon_check, fd_jacobian, finite_distortion_fraction, multiplicity_estimate,
    operator_norm_and_jacobian, orlicz_energy, outer_dilatation,
)
from qmod.errors import DomainError, ValidationError

from oracles import det_by_permutations, largest_singular_value_bisection


def test_norm_and_det_diagonal():
    assert operator_norm_and_jacobian(np.diag([2.0, 1.0])) == pytest.approx((2.0, 2.0))


def test_norm_and_det_rotation():
    c, s = math.cos(0.4), math.sin(0.4)
    assert operator_norm_and_jacobian([[c, -s], [s, c]]) == pytest.approx((1.0, 1.0))


def test_norm_and_det_against_frozen_oracle(frozen):
    for case in frozen["singular"]:
        norm, det = operator_norm_and_jacobian(case["J"])
        assert abs(norm - case["norm"]) < 1e-9
        assert abs(det - case["det"]) < 1e-9


def test_norm_against_live_bisection_oracle(rng):
    for _ in range(20):
        J = rng.normal(size=(3, 3))
        assert abs(operator_norm_and_jacobian(J)[0] - largest_singular_value_bisection(J)) < 1e-9
        assert abs(operator_norm_and_jacobian(J)[1] - det_by_permutations(J)) < 1e-9


def test_norm_rejects_non_square():
    with pytest.raises(ValidationError):
        operator_norm_and_jacobian(np.ones((2, 3)))


@pytest.mark.parametrize("J,expected", [
    (np.eye(3), 1.0),
    (np.diag([2.0, 1.0]), 2.0),
    (np.zeros((2, 2)), 1.0),
    (np.zeros((3, 3)), 1.0),
    (np.diag([1.0, 0.0]), math.inf),
    (np.array([[1.0, 2.0], [2.0, 4.0]]), math.inf),
    (np.diag([3.0, 0.0, 1.0]), math.inf),
])
def test_outer_dilatation_branches(J, expected):
    assert outer_dilatation(J) == expected


finite = st.floats(-10, 10, allow_nan=False)


@given(arrays(np.float64, (3, 3), elements=finite))
def test_outer_dilatation_at_least_one(J):
    assert outer_dilatation(J) >= 1.0


@given(arrays(np.float64, (2, 2), elements=finite), st.floats(0.01, 100.0), st.booleans())
def test_outer_dilatation_scale_invariant(J, c, neg):
    k = outer_dilatation(J)
    kc = outer_dilatation((-c if neg else c) * J)
    if math.isinf(k):
        assert math.isinf(kc)
    else:
        assert kc == pytest.approx(k, rel=1e-9)


def test_fd_jacobian_linear_map(rng):
    A = rng.normal(size=(3, 3))
    J = fd_jacobian(lambda x: A @ x, np.array([0.1, 0.2, -0.3]))
    assert np.allclose(J, A, atol=1e-9)


def test_richardson_gap_small_on_smooth_map():
    f = MapSample(lambda x: np.array([math.sin(x[0]) * x[1], x[0] ** 2 + math.exp(x[1])]))
    assert f.richardson_gap(np.array([0.2, -0.1])) < 1e-7


def test_calderon_cubic_converges_to_one():
    res = calderon_check(lambda t: t ** 3, 3)
    assert res.verdict == "converges"
    assert res.partial_integrals[-1] == pytest.approx(1.0, abs=1e-12)


def test_calderon_linear_diverges():
    res = calderon_check(lambda t: t, 3, T_max=2.0 ** 30)
    assert res.verdict == "diverges/inconclusive"
    assert res.partial_integrals[-1] == pytest.approx(2.0 ** 30 - 1, rel=1e-10)


def test_calderon_log_squared_converges():
    res = calderon_check(lambda t: t * t * math.log(math.e + t) ** 2, 3)
    assert res.verdict == "converges"


def test_calderon_borderline_log_not_reported_convergent():
    res = calderon_check(lambda t: t * t * math.log(math.e + t), 3)
    assert res.verdict == "diverges/inconclusive"


def test_calderon_rejects_decreasing_phi():
    with pytest.raises(ValidationError):
        calderon_check(lambda t: 1.0 / t, 3)


def test_calderon_needs_n_at_least_three():
    with pytest.raises(DomainError):
        calderon_check(lambda t: t ** 3, 2)


def _annulus_grid(step=0.004):
    g = np.arange(-1, 1, step)
    X, Y = np.meshgrid(g, g)
    P = np.column_stack([X.ravel(), Y.ravel()])
    r = np.linalg.norm(P, axis=1)
    return P[(r > 0.5) & (r < 1.0)]


def test_multiplicity_affine_map():
    f = MapSample(lambda x: 2.0 * x + 0.1)
    rep = multiplicity_estimate(f, _annulus_grid(), np.array([1.5, 0.3]), 5e-3)
    assert rep.count == 1 and not rep.degenerate


def test_multiplicity_square_map():
    f = MapSample(lambda z: np.stack([z[..., 0] ** 2 - z[..., 1] ** 2, 2 * z[..., 0] * z[..., 1]], -1))
    rep = multiplicity_estimate(f, _annulus_grid(), np.array([0.5, 0.2]), 5e-3)
    assert rep.count == 2


def test_multiplicity_constant_map_flags_degenerate():
    f = MapSample(lambda x: np.zeros_like(x) + 0.3)
    rep = multiplicity_estimate(f, _annulus_grid(0.02), np.array([0.3, 0.3]), 5e-3)
    assert rep.degenerate and rep.count == 1


def test_multiplicity_rejects_bad_tol():
    with pytest.raises(ValidationError):
        multiplicity_estimate(MapSample(lambda x: x), np.zeros((1, 2)), np.zeros(2), 0.0)


def test_orlicz_energy_of_dilation():
    f = MapSample(lambda x: 3.0 * x, lambda x: 3.0 * np.eye(2))
    est = orlicz_energy(f, lambda s: s ** 2, 0.5, 2, samples=2000, grad_bound=3.0)
    assert est.value == pytest.approx(18.0 * math.pi * 0.25, rel=1e-12)
    assert est.value <= est.bound and est.finite


def test_finite_distortion_fraction():
    good = MapSample(lambda x: x, lambda x: np.eye(2))
    fold = MapSample(lambda x: x, lambda x: np.diag([1.0, 0.0]))
    pts = np.zeros((5, 2))
    assert finite_distortion_fraction(good, pts) == 0.0
    assert finite_distortion_fraction(fold, pts) == 1.0
