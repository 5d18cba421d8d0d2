import math

import numpy as np
import pytest
import sympy as sp

from diracbag.dalgarno_lewis import (
    DLConsistencyError,
    DLCorrection,
    _quadrature_dimensionless,
    dl_correction,
    dl_residual,
    dl_shift,
    dl_shift_quadrature,
    dl_total,
    nonrel_shift,
    shift_closed_form,
)
from diracbag.matrix_elements import Perturbation
from diracbag.perturbation import Truncation, method_II_total, shift_level_free
from diracbag.spectrum import BagModel, Parity, Sign, solve_level

BRANCHES = [(p, s) for p in Parity for s in Sign]
LAM1 = Perturbation(1.0)

x, k, e, m, N, lam = sp.symbols("x k epsilon m N lambda", real=True)


def symbolic_first_order(eta):
    """First-order spinor written with an explicit parity sign (a = 1).

    Odd parity takes eta = -1 with the roles of cos and sin exchanged.
    """
    C, S = (sp.cos(k * x), sp.sin(k * x)) if eta == 1 else (sp.sin(k * x), sp.cos(k * x))
    u1 = lam * N / (2 * k ** 2) * (m * x * C + eta * e * k * (x ** 2 - 1) * S
                                   - eta * m * k / (2 * e) * (1 / (e + m) + 2) * S)
    v1 = lam * m * N / (2 * e * k ** 2) * (eta * e / (e + m) * k * x * S
                                           + (sp.Rational(1, 2) - (e - m) + e ** 2 * (e - m) / m * (x ** 2 - 1)) * C)
    if eta == 1:
        u0, v0 = N * sp.cos(k * x), -N * k * sp.sin(k * x) / (e + m)
    else:
        u0, v0 = N * sp.sin(k * x), N * k * sp.cos(k * x) / (e + m)
    return u1, v1, u0, v0


@pytest.mark.parametrize("eta", [1, -1])
def test_symbolic_residual_vanishes(eta):
    u1, v1, u0, v0 = symbolic_first_order(eta)
    r1 = -sp.diff(v1, x) + (m - e) * u1 + lam * x * u0
    r2 = sp.diff(u1, x) - (m + e) * v1 + lam * x * v0
    sub = {e: sp.sqrt(k ** 2 + m ** 2)}
    assert sp.simplify((r1 * (e + m)).subs(sub)) == 0
    assert sp.simplify((r2 * (e + m)).subs(sub)) == 0


@pytest.mark.parametrize("eta", [1, -1])
def test_symbolic_boundary_condition(eta):
    # u1(1) + v1(1) vanishes once tan k = (eta eps + m)/k is imposed
    u1, v1, _, _ = symbolic_first_order(eta)
    t = sp.symbols("t")
    bc = (u1 + v1).subs(x, 1)
    if eta == 1:
        bc = bc.subs({sp.sin(k): t * sp.cos(k)})
    else:
        bc = bc.subs({sp.cos(k): t * sp.sin(k)})
    bc = sp.simplify(bc.subs(t, (eta * e + m) / k) if eta == 1 else bc.subs(t, k / (eta * e + m)))
    assert sp.simplify(bc.subs(e, sp.sqrt(k ** 2 + m ** 2))) == 0


@pytest.mark.parametrize("ma", [0.4, 1.0, 3.0])
@pytest.mark.parametrize("parity,sign", BRANCHES)
def test_matches_symbolic_values(ma, parity, sign):
    eta = parity.eta
    u1, v1, _, _ = symbolic_first_order(eta)
    fu = sp.lambdify((x, k, e, m, N, lam), u1, "numpy")
    fv = sp.lambdify((x, k, e, m, N, lam), v1, "numpy")
    model = BagModel(ma)
    lv = solve_level(model, parity, sign, 2)
    xs = np.linspace(-1, 1, 11)
    got = dl_correction(lv, model, Perturbation(0.7), xs)
    assert np.allclose(got.u, fu(xs, lv.k, lv.eps, ma, lv.N, 0.7), rtol=1e-12, atol=1e-14)
    assert np.allclose(got.v, fv(xs, lv.k, lv.eps, ma, lv.N, 0.7), rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("ma,a", [(0.5, 1.0), (1.0, 1.0), (3.0, 1.0), (1.0, 0.4), (2.0, 2.5)])
@pytest.mark.parametrize("parity,sign", BRANCHES)
def test_residual_and_boundary(ma, a, parity, sign):
    model = BagModel.from_ma(ma, a)
    pert = Perturbation(1.3)
    xs = np.linspace(-a, a, 401)
    for n in (0, 3, 20):
        lv = solve_level(model, parity, sign, n)
        r = dl_residual(lv, model, pert, xs)
        assert max(np.max(np.abs(r.u)), np.max(np.abs(r.v))) < 1e-12 * max(1.0, lv.k * a)
        u_hi, v_hi = dl_correction(lv, model, pert, a)
        u_lo, v_lo = dl_correction(lv, model, pert, -a)
        assert u_hi == pytest.approx(-v_hi, abs=1e-13)
        assert u_lo == pytest.approx(v_lo, abs=1e-13)


def test_derivative_against_finite_difference():
    model = BagModel.from_ma(1.7, 1.6)
    corr = DLCorrection(solve_level(model, Parity.ODD, Sign.NEGATIVE, 1), model, Perturbation(0.9))
    xs = np.linspace(-1.5, 1.5, 13)
    h = 1e-6
    up, um = corr(xs + h), corr(xs - h)
    d = corr.derivative(xs)
    assert np.allclose(d.u, (up.u - um.u) / (2 * h), atol=1e-8)
    assert np.allclose(d.v, (up.v - um.v) / (2 * h), atol=1e-8)


def test_massless_lower_component():
    # the m prefactor cancels against 1/m: v1 = lam N (x^2 - a^2) cos(kx) / 2 for even levels
    a = 1.7
    model = BagModel(0.0, a)
    lv = solve_level(model, Parity.EVEN, Sign.POSITIVE, 0)
    xs = np.linspace(-a, a, 9)
    v = dl_correction(lv, model, Perturbation(0.6), xs).v
    assert np.allclose(v, 0.6 * lv.N * (xs ** 2 - a ** 2) * np.cos(lv.k * xs) / 2, atol=1e-14)
    assert np.max(np.abs(v)) > 0.1


def test_zero_outside():
    model = BagModel(1.0)
    lv = solve_level(model, Parity.EVEN, Sign.POSITIVE, 0)
    assert dl_correction(lv, model, LAM1, 1.5) == (0.0, 0.0)


@pytest.mark.parametrize("ma", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("parity,sign", BRANCHES)
def test_closed_form_equals_quadrature(ma, parity, sign):
    model = BagModel(ma)
    for n in range(6):
        lv = solve_level(model, parity, sign, n)
        closed = dl_shift(lv, model, LAM1, strict=False)
        quad = dl_shift_quadrature(lv, model, LAM1)
        assert closed == pytest.approx(quad, rel=1e-8)


@pytest.mark.parametrize("ma", [0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("parity,sign", BRANCHES)
def test_equals_free_sum(ma, parity, sign):
    model = BagModel(ma)
    for n in range(6):
        lv = solve_level(model, parity, sign, n)
        assert dl_shift(lv, model, LAM1) == pytest.approx(shift_level_free(model, LAM1, lv), rel=1e-6)


def test_ground_state_m1_matches_free():
    model = BagModel(1.0)
    lv = solve_level(model, Parity.EVEN, Sign.POSITIVE, 0)
    assert dl_shift(lv, model, LAM1) == pytest.approx(shift_level_free(model, LAM1, "0++"), rel=1e-9)


def test_massless_shift_vanishes():
    model = BagModel(0.0)
    for p, s in BRANCHES:
        for n in (0, 5, 40):
            lv = solve_level(model, p, s, n)
            assert dl_shift(lv, model, LAM1) == 0.0
            assert abs(dl_shift_quadrature(lv, model, LAM1)) < 1e-14


def test_mirror_antisymmetry():
    model = BagModel(1.4)
    for n in range(5):
        up = solve_level(model, Parity.EVEN, Sign.POSITIVE, n)
        down = solve_level(model, Parity.ODD, Sign.NEGATIVE, n)
        assert dl_shift(up, model, LAM1) == pytest.approx(-dl_shift(down, model, LAM1), rel=1e-13)


def test_scaling_lambda_a3():
    m1, m2 = BagModel.from_ma(1.2, 1.0), BagModel.from_ma(1.2, 2.0)
    s1 = dl_shift(solve_level(m1, Parity.ODD, Sign.POSITIVE, 1), m1, LAM1)
    s2 = dl_shift(solve_level(m2, Parity.ODD, Sign.POSITIVE, 1), m2, Perturbation(-0.5))
    assert s2 == pytest.approx(0.25 * 8 * s1, rel=1e-13)


def test_strict_mismatch_raises():
    model = BagModel(1.0)
    lv = solve_level(model, Parity.EVEN, Sign.POSITIVE, 30)
    # an under-resolved rule cannot integrate k ~ 95 oscillations
    bad = float(_quadrature_dimensionless(np.array([lv.k]), np.array([lv.eps]), np.array([lv.N]), 1.0, 0.0, order=8)[0])
    assert abs(bad - dl_shift(lv, model, LAM1)) > 1e-6
    import diracbag.dalgarno_lewis as dlm
    orig = dlm.dl_shift_quadrature
    try:
        dlm.dl_shift_quadrature = lambda *args, **kw: bad
        with pytest.raises(DLConsistencyError):
            dl_shift(lv, model, LAM1)
        assert dl_shift(lv, model, LAM1, strict=False) != bad
    finally:
        dlm.dl_shift_quadrature = orig


def test_closed_form_broadcasts():
    k = np.array([1.1, 2.0, 5.0])
    e = np.sqrt(k ** 2 + 1.0)
    assert shift_closed_form(k, e, 1.0).shape == (3,)
    assert shift_closed_form(k, e, 0.0).tolist() == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("ma", [0.5, 1.0, 3.0])
def test_total_equals_free_total(ma):
    model = BagModel(ma)
    d = dl_total(model, LAM1)
    f = method_II_total(model, LAM1)
    assert d.method == "dalgarno-lewis"
    assert d.diagnostics["quadrature_ok"]
    assert d.w_total == pytest.approx(f.w_total, rel=1e-8)
    assert d.w_bound == pytest.approx(f.w_bound, rel=1e-9)


def test_total_massless_zero():
    rep = dl_total(BagModel(0.0), LAM1, Truncation(n_max=50))
    assert rep.w_total == 0.0 and rep.tail_estimate == 0.0


class TestNonrel:
    def test_value(self):
        model = BagModel.from_ma(5.0, 2.0)
        k = math.pi / 4.0
        expected = 0.49 * 2.5 * (4 * (math.pi / 2) ** 2 - 15) / (24 * k ** 4)
        assert nonrel_shift(model, Perturbation(0.7)) == pytest.approx(expected, rel=1e-14)
        assert nonrel_shift(BagModel(1.0), LAM1) == pytest.approx(2 * (math.pi ** 2 - 15) / (3 * math.pi ** 4))

    def test_rejects_massless(self):
        with pytest.raises(ValueError):
            nonrel_shift(BagModel(0.0), LAM1)

    def test_ratio_about_two_at_ma3(self):
        model = BagModel(3.0)
        lv = solve_level(model, Parity.EVEN, Sign.POSITIVE, 0)
        assert 1.5 <= dl_shift(lv, model, LAM1) / nonrel_shift(model, LAM1) <= 2.5

    def test_approach_from_above(self):
        ratios = []
        for ma in (3.0, 10.0, 30.0, 100.0, 1000.0, 1e5):
            model = BagModel(ma)
            lv = solve_level(model, Parity.EVEN, Sign.POSITIVE, 0)
            ratios.append(dl_shift(lv, model, LAM1) / nonrel_shift(model, LAM1))
        assert all(r > 1 for r in ratios)
        assert all(b < a for a, b in zip(ratios, ratios[1:]))
        # leading correction is 2/ma
        assert (ratios[-1] - 1) * 1e5 == pytest.approx(2.0, rel=1e-4)
