import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pparab import (
    Params,
    RangeError,
    Weights,
    appendix_quadratic,
    appendix_roots,
    certify_uniform,
    coefficient_arrays,
    coefficients,
    lambda_select,
    matrix_M_regularized,
    matrix_M_smooth,
    matrix_N,
    mixed_term_poly,
    one_dim_coefficient,
    region_map,
    region_map_csv,
    weights_case_i,
    weights_case_ii,
    weights_smooth,
    x1x2_bounds,
)

SQRT2_MINUS_HALF = math.sqrt(2.0) - 0.5


def par(p=3.0, gamma=0.0, s=-1.0, epsilon=1e-2):
    return Params(n=2, p=p, gamma=gamma, s=s, epsilon=epsilon)


ps = st.floats(min_value=1.05, max_value=7.5)
gammas = st.floats(min_value=-0.95, max_value=1.4)
thetas = st.floats(min_value=0.0, max_value=1.0)


# ------------------------------------------------------------ coefficients


def test_coefficients_worked_instance():
    c = coefficients(Weights(3.0, 2.0, 1.0, 2.0), par(), 0.5)
    assert (c.c1, c.c2, c.c3, c.c4) == (3.5, -0.5, 3.0, -1.0)


def test_coefficients_reject_theta_outside_unit_interval():
    w = Weights(1.0, 1.0, 0.0, 0.0)
    for bad in (-0.1, 1.1):
        with pytest.raises(RangeError):
            coefficients(w, par(), bad)


@given(ps, gammas, thetas)
def test_coefficient_special_form_at_coupling_exponent(p, gamma, theta):
    # at s = 2 - p the first products collapse: c2 = -2 w3 theta kappa and
    # c4 = -(w2 gamma + w4 (2 + gamma) kappa) theta
    w = Weights(1.3, 0.7, 2.1, 0.9)
    c = coefficients(w, par(p=p, gamma=gamma, s=2.0 - p), theta)
    kappa = 1.0 - theta
    assert c.c2 == pytest.approx(-2.0 * w.w3 * theta * kappa, rel=1e-12, abs=1e-13)
    expect_c4 = -(w.w2 * gamma + w.w4 * (2.0 + gamma) * kappa) * theta
    assert c.c4 == pytest.approx(expect_c4, rel=1e-12, abs=1e-13)


@given(ps, gammas, st.floats(min_value=-3.0, max_value=3.0), thetas)
def test_matrix_N_is_M_minus_c1_identity(p, gamma, s, theta):
    c = coefficients(Weights(2.0, 1.5, 0.5, 1.0), par(p=p, gamma=gamma, s=s), theta)
    M = matrix_M_regularized(c)
    N = matrix_N(c)
    assert M.m11 - N.m11 == pytest.approx(c.c1, rel=1e-13)
    assert M.m22 - N.m22 == pytest.approx(c.c1, rel=1e-13)
    assert M.m12 == N.m12


def test_coefficient_arrays_match_scalar_path():
    w = Weights(3.0, 2.0, 1.0, 2.0)
    p = par(gamma=0.3, s=-0.7)
    theta = np.linspace(0.0, 1.0, 17)
    arr = coefficient_arrays(w, p, theta)
    for k, th in enumerate(theta):
        c = coefficients(w, p, float(th))
        M = matrix_M_regularized(c)
        assert arr["c1"][k] == pytest.approx(c.c1, rel=1e-14)
        assert arr["c4"][k] == pytest.approx(c.c4, rel=1e-14, abs=1e-15)
        assert arr["m12"][k] == pytest.approx(M.m12, rel=1e-13, abs=1e-14)
        assert arr["m22"][k] == pytest.approx(M.m22, rel=1e-13, abs=1e-14)


# ------------------------------------------------------- vanishing mixed term


def test_mixed_term_poly_worked_coefficients():
    # a2 = (4-p+gamma) w4 - 2 w3, a1 = (p-2-gamma)(w4-w2), a0 = (p-gamma) w2 - 2 w1
    a2, a1, a0 = mixed_term_poly(Weights(1.0, 2.0, 0.0, 0.0), 3.0, 0.0)
    # a2 = 0*0 - 0 = 0, a1 = (3-2-0)(0-2) = -2, a0 = 3*2 - 2*1 = 4
    assert (a2, a1, a0) == (0.0, -2.0, 4.0)


@given(ps, st.floats(min_value=-0.95, max_value=0.91))
def test_uniform_pair_kills_the_mixed_term_exactly(p, gamma):
    w = weights_case_ii(p, gamma)
    assert mixed_term_poly(w, p, gamma) == (0.0, 0.0, 0.0)


@given(ps, st.floats(min_value=-0.95, max_value=0.91), thetas)
def test_mixed_entry_reconstructs_from_poly(p, gamma, theta):
    # 2 m12 at s = 2 - p equals the kappa-polynomial a2 k^2 + a1 k + a0
    w = Weights(1.7, 0.6, 1.1, 2.3)
    c = coefficients(w, par(p=p, gamma=gamma, s=2.0 - p), theta)
    M = matrix_M_regularized(c)
    a2, a1, a0 = mixed_term_poly(w, p, gamma)
    kappa = 1.0 - theta
    expect = 0.5 * (a2 * kappa * kappa + a1 * kappa + a0)
    scale = abs(M.m11) + abs(M.m22) + abs(c.c1) + 1.0
    assert M.m12 == pytest.approx(expect, abs=1e-13 * scale)


# ----------------------------------------------------- degenerate-regime data


def test_x1x2_worked_instance():
    sup_x1, inf_x2, theta2 = x1x2_bounds(3.0, 0.0)
    # (sqrt 2 - 1)^2 = 3 - 2 sqrt 2
    assert sup_x1 == pytest.approx(3.0 - 2.0 * math.sqrt(2.0), rel=1e-15)
    assert inf_x2 == 4.0
    assert theta2 is None


def test_x1x2_interior_stationary_point():
    # (p-2) gamma > 0 with the candidate inside (0, 1): p=4, gamma=0.8
    # theta2 = (p-2-gamma)/((p-2) gamma) = 1.2/1.6 = 0.75
    _, _, theta2 = x1x2_bounds(4.0, 0.8)
    assert theta2 == pytest.approx(0.75, rel=1e-15)


def test_x1x2_rejects_gamma_outside_open_interval():
    for g in (1.0, 1.5, -1.0):
        with pytest.raises(RangeError):
            x1x2_bounds(3.0, g)


@settings(max_examples=150)
@given(st.floats(min_value=1.05, max_value=7.5), st.floats(min_value=-0.95, max_value=0.95))
def test_x1x2_closed_forms_against_dense_grid(p, gamma):
    sup_x1, inf_x2, _ = x1x2_bounds(p, gamma)
    theta = np.linspace(0.0, 1.0, 20001)
    p_t = (p - 2.0) * theta + 1.0
    r_t = 1.0 - gamma * theta
    x1 = (np.sqrt(p_t) - np.sqrt(r_t)) ** 2
    x2 = (np.sqrt(p_t) + np.sqrt(r_t)) ** 2
    assert sup_x1 == pytest.approx(float(x1.max()), abs=1e-7)
    assert inf_x2 <= float(np.minimum(x2, 4.0).min()) + 1e-12
    assert inf_x2 == pytest.approx(float(np.minimum(x2, 4.0).min()), abs=1e-7)


def test_weights_case_i_shape_and_admissibility():
    w = weights_case_i(3.0, 0.0, eta=0.05)
    assert (w.w2, w.w3, w.w4) == (2.0, 0.0, 0.0)
    assert w.w1 == pytest.approx(3.0 - 2.0 * math.sqrt(2.0) + 0.05, rel=1e-14)
    with pytest.raises(RangeError):
        weights_case_i(3.0, 0.0, eta=0.0)
    # eta large enough to overshoot inf_x2 is refused
    with pytest.raises(RangeError):
        weights_case_i(3.0, 0.0, eta=10.0)


@settings(max_examples=150)
@given(st.floats(min_value=1.05, max_value=5.0), st.floats(min_value=-0.95, max_value=0.95))
def test_case_i_determinant_factorization(p, gamma):
    # with (w1, 2, 0, 0) at s = 2 - p the regularized determinant factors as
    # (X2(theta) - w1)(w1 - X1(theta)); spot check on a theta grid
    try:
        w = weights_case_i(p, gamma, eta=1e-3)
    except RangeError:
        return
    pr = par(p=p, gamma=gamma, s=2.0 - p)
    for theta in np.linspace(0.0, 1.0, 21):
        c = coefficients(w, pr, float(theta))
        M = matrix_M_regularized(c)
        det = M.m11 * M.m22 - M.m12**2
        p_t = (p - 2.0) * theta + 1.0
        r_t = 1.0 - gamma * theta
        x1 = (math.sqrt(p_t) - math.sqrt(r_t)) ** 2
        x2 = (math.sqrt(p_t) + math.sqrt(r_t)) ** 2
        assert det == pytest.approx((x2 - w.w1) * (w.w1 - x1), rel=1e-10, abs=1e-11)


def test_weights_case_ii_formula_and_strictness():
    assert weights_case_ii(3.0, 0.0).as_tuple() == (3.0, 2.0, 1.0, 2.0)
    assert weights_case_ii(5.0, 0.9).as_tuple() == (4.1, 2.0, 4.0 - 5.0 + 0.9, 2.0)
    with pytest.raises(RangeError):
        weights_case_ii(3.0, 0.95)
    # diagnostic mode still hands out the formula past the threshold
    assert weights_case_ii(3.0, 0.95, strict=False).as_tuple() == (3.0 - 0.95, 2.0, 1.95, 2.0)


# ------------------------------------------------------------ smooth weights


def test_weights_smooth_planar_pair():
    w = weights_smooth(2, 3.0, 0.0, 1.0)
    assert w.as_tuple() == (5.0, 4.0, 0.0, 0.0)


def test_weights_smooth_planar_gives_positive_definite_form():
    w = weights_smooth(2, 3.0, 0.0, 1.0)
    M = matrix_M_smooth(2, 3.0, 0.0, 1.0, w.w1, w.w2)
    assert M.m11 > 0.0
    assert M.det > 0.0


def test_weights_smooth_degenerate_window_case():
    # s = gamma turns the determinant quadratic into a line; the chosen w2
    # sits one unit past the ray endpoint (n-2)/(n-1) + 1/6 for these values
    w = weights_smooth(3, 2.0, 0.0, 0.0)
    assert w.w1 == 1.0
    assert w.w2 == pytest.approx(0.5 + 1.0 / 6.0 + 1.0, rel=1e-14)
    M = matrix_M_smooth(3, 2.0, 0.0, 0.0, w.w1, w.w2)
    assert M.det > 0.0


def test_weights_smooth_rejects_out_of_range_s():
    with pytest.raises(RangeError):
        weights_smooth(2, 3.0, 0.0, -2.0)  # s = gamma + 1 - p exactly


def test_appendix_worked_instance():
    root_plus, root_minus, disc = appendix_roots(2, 3.0, 0.0, 1.0)
    assert disc == 96.0
    assert root_plus == pytest.approx(20.0 - 8.0 * math.sqrt(6.0), rel=1e-13)
    assert root_minus == pytest.approx(20.0 + 8.0 * math.sqrt(6.0), rel=1e-13)
    a, b, c = appendix_quadratic(2, 3.0, 0.0, 1.0)
    assert (a, b, c) == (-0.25, 10.0, -4.0)
    assert b * b - 4.0 * a * c == disc


def test_appendix_roots_degenerate_branch():
    root_plus, root_minus, _ = appendix_roots(3, 2.0, 0.0, 0.0)
    assert math.isinf(root_minus)
    assert root_plus == pytest.approx(1.0 / 6.0, rel=1e-14)


def test_appendix_roots_rejects_nonpositive_building_blocks():
    with pytest.raises(RangeError):
        appendix_roots(2, 3.0, 0.0, -3.0)  # E = s + 1 + (p-1) = 0


@settings(max_examples=150)
@given(
    st.integers(min_value=2, max_value=5),
    st.floats(min_value=1.3, max_value=6.0),
    st.floats(min_value=-0.9, max_value=1.2),
    st.floats(min_value=-0.8, max_value=3.0),
)
def test_appendix_quadratic_discriminant_identity(n, p, gamma, s):
    P, K = p - 1.0, gamma + 1.0
    G = p - 1.0 + s - gamma
    E = s + 1.0 + (p - 1.0) / (n - 1.0)
    if min(P, K, G, E) <= 1e-3 or abs(G - P) < 0.1:
        return
    a, b, c = appendix_quadratic(n, p, gamma, s)
    root_plus, root_minus, disc = appendix_roots(n, p, gamma, s)
    scale = abs(b) + abs(disc) + 1.0
    assert b * b - 4.0 * a * c == pytest.approx(disc, abs=1e-10 * scale)
    # the closed-form window endpoints are the zeros of the quadratic
    for x in (root_plus, root_minus):
        val = a * x * x + b * x + c
        assert abs(val) <= 1e-9 * (abs(a) * x * x + abs(b) * abs(x) + abs(c) + 1.0)


@settings(max_examples=100)
@given(
    st.integers(min_value=3, max_value=5),
    st.floats(min_value=1.3, max_value=6.0),
    st.floats(min_value=-0.9, max_value=1.2),
    st.floats(min_value=-0.8, max_value=3.0),
)
def test_smooth_matrix_det_equals_quadratic(n, p, gamma, s):
    # det M_smooth(w1=1, w2) as a function of x = w2 - (n-2)/(n-1) is the
    # appendix quadratic; fuzz the identity at a few x values
    pr = Params(n=n, p=p, gamma=gamma, s=s, epsilon=0.0)
    try:
        Pq = appendix_quadratic(n, p, gamma, s)
    except RangeError:
        return
    a, b, c = Pq
    shift = (n - 2.0) / (n - 1.0)
    for x in (-1.0, 0.3, 2.0, 7.0):
        M = matrix_M_smooth(n, p, gamma, s, 1.0, shift + x)
        expect = a * x * x + b * x + c
        scale = abs(a * x * x) + abs(b * x) + abs(c) + 1.0
        assert M.det == pytest.approx(expect, abs=1e-11 * scale)


# ------------------------------------------------------------- lambda pick


def test_lambda_select_worked_values():
    # floor 1, all norms 1: min(1, 1/2, 1/2, 1/16)/2 = 1/32
    assert lambda_select(1.0, 1.0, 1.0, 1.0) == 0.03125
    # floor 0.1, norms (3, 5, 2): last branch 0.1/256 dominates
    assert lambda_select(0.1, 3.0, 5.0, 2.0) == 0.5 * 0.1 / 256.0


def test_lambda_select_rejects_nonpositive_inputs():
    for args in [(0.0, 1, 1, 1), (1, 0.0, 1, 1), (1, 1, -1.0, 1), (1, 1, 1, math.inf)]:
        with pytest.raises(RangeError):
            lambda_select(*args)


@given(
    st.floats(min_value=1e-6, max_value=10.0),
    st.floats(min_value=1e-3, max_value=50.0),
    st.floats(min_value=1e-3, max_value=50.0),
    st.floats(min_value=1e-3, max_value=50.0),
)
def test_lambda_select_bounds(c, nm, nn, nc2):
    lam = lambda_select(c, nm, nn, nc2)
    assert 0.0 < lam <= 0.5
    assert lam <= 0.5 * c / (nc2 + c) + 1e-18
    assert lam <= 0.5 * c / (4.0 * (nm + nn) ** 2) + 1e-18


# ------------------------------------------------------------ certification


def test_certify_uniform_worked_report():
    rep = certify_uniform(weights_case_ii(3.0, 0.0), par())
    assert rep.ok
    assert rep.min_2c1_c2 == 6.0
    assert rep.min_c3 == 2.0
    assert rep.min_c3c4 == 1.75
    assert rep.min_c1 == 3.0
    assert rep.floor_c == 2.0
    assert rep.min_detM == pytest.approx(7.600406705826543, rel=1e-12)
    assert rep.norm_M == pytest.approx(4.0 * math.sqrt(2.0), rel=1e-12)
    assert rep.norm_N == pytest.approx(math.sqrt(2.0), rel=1e-12)
    assert rep.norm_c2 == pytest.approx(0.5, rel=1e-12)
    # lambda folds the smallest c1: select(2, ...) = 0.005, times 3
    assert rep.lambda_ == pytest.approx(0.015, rel=1e-12)
    assert rep.argmin_theta["c3c4"] == pytest.approx(0.75, abs=1e-9)


def test_certify_uniform_failure_witness_past_threshold():
    rep = certify_uniform(weights_case_ii(3.0, 0.95, strict=False), par(gamma=0.95))
    assert not rep.ok
    # interior minimum of c3 + c4: value 2(1-gamma) - 1/(2(2+gamma)) at
    # kappa = 1/(2(2+gamma))
    expect = 2.0 * (1.0 - 0.95) - 1.0 / (2.0 * 2.95)
    assert rep.min_c3c4 == pytest.approx(expect, rel=1e-13)
    assert rep.argmin_theta["c3c4"] == pytest.approx(1.0 - 1.0 / (2.0 * 2.95), abs=1e-12)


def test_certify_uniform_stable_under_grid_refinement():
    w = weights_case_ii(2.5, 0.4)
    p = par(p=2.5, gamma=0.4, s=-0.5)
    a = certify_uniform(w, p, grid_points=4097)
    b = certify_uniform(w, p, grid_points=8193)
    assert a.ok == b.ok
    assert a.floor_c == pytest.approx(b.floor_c, rel=1e-6)
    assert a.min_detM == pytest.approx(b.min_detM, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1.1, max_value=7.0), st.floats(min_value=-0.9, max_value=0.9))
def test_certified_matrix_is_positive_definite_on_samples(p, gamma):
    if gamma >= SQRT2_MINUS_HALF:
        return
    w = weights_case_ii(p, gamma)
    pr = par(p=p, gamma=gamma, s=2.0 - p)
    rep = certify_uniform(w, pr)
    assert rep.ok
    # Sylvester on a random theta: leading minor m11 and det both clear the
    # certified floor (up to grid resolution slack)
    for theta in (0.0, 0.37, 0.5, 0.91, 1.0):
        c = coefficients(w, pr, theta)
        M = matrix_M_regularized(c)
        assert M.m11 >= rep.floor_c * (1.0 - 1e-9) - 1e-12
        assert M.det >= -1e-9


def test_one_dim_alternate_form():
    rs = np.random.RandomState(11)
    for _ in range(300):
        p = 1.0 + 6.0 * rs.rand()
        gamma = -0.9 + 2.2 * rs.rand()
        s = -3.0 + 6.0 * rs.rand()
        th = rs.rand()
        got = one_dim_coefficient(p, gamma, s, th)
        alt = 1.0 + (2.0 * p - 4.0 + s - gamma) * th + (p - 2.0) * (p - 2.0 + s - gamma) * th * th
        assert got == pytest.approx(alt, rel=1e-11, abs=1e-12)


def test_one_dim_coefficient_rejects_theta_outside():
    with pytest.raises(RangeError):
        one_dim_coefficient(3.0, 0.0, -1.0, 1.5)


# --------------------------------------------------------------- region map


def test_region_map_small_grid_rows():
    rows = region_map([2.0, 4.0], [0.0, 1.0], s=None)
    assert len(rows) == 4
    byc = {(r["p"], r["gamma"]): r for r in rows}
    assert byc[(2.0, 0.0)]["theorem_case"] == "both"
    assert byc[(2.0, 0.0)]["case_ii_ok"] is True
    assert byc[(2.0, 1.0)]["case_ii_ok"] is False
    assert byc[(4.0, 0.0)]["case_i_ok"] is True
    # gamma = 1 sits outside the degenerate-regime admissible range
    assert byc[(2.0, 1.0)]["case_i_ok"] is False
    assert math.isnan(byc[(2.0, 1.0)]["case_i_min_det"])


def test_region_map_csv_shape():
    text = region_map_csv(region_map([2.0], [0.0]))
    lines = text.strip().splitlines()
    assert lines[0] == "p,gamma,theorem_case,case_i_ok,case_i_min_det,case_ii_ok,case_ii_min_c3c4,smooth_range_ok"
    assert len(lines) == 2
    assert "true" in lines[1]
