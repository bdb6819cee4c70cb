import math
import random
from fractions import Fraction

import numpy as np
import pytest

from polykahan import cases, darboux, maps
from polykahan.poly import Polynomial, RationalFunction, param, x
from polykahan.scheme import H, PolyOdeSystem


def beam_params(**kw):
    defaults = dict(a=1, b=-2, c=Fraction(3, 4), h=Fraction(1, 10))
    defaults.update(kw)
    return cases.BeamParams(**defaults)


# -- Lotka-Volterra -----------------------------------------------------------


def test_lv_scheme_matches_displayed_form():
    case = cases.lotka_volterra()
    assert case.scheme.equations == case.expected_scheme.equations


def test_lv_symbolic_parameter_passthrough():
    case = cases.lotka_volterra()
    names = {v.name for e in case.scheme.equations for v in e.vars() if v.is_param}
    assert names == {"alpha", "h"}


def test_lv_rejects_zero_alpha():
    with pytest.raises(ValueError):
        cases.lotka_volterra(0)


# -- quartic oscillator --------------------------------------------------------


def test_quartic_params_derived_values():
    qp = cases.QuarticParams(1, 2, 3, 5, Fraction(1, 10))
    assert qp.alpha == Fraction(1, 100)
    assert qp.beta == Fraction(1, 150)
    assert qp.gamma == Fraction(101, 100)
    assert qp.delta == Fraction(1, 20)


def test_quartic_solved_map_closed_form_numeric():
    qp = cases.QuarticParams(1, 2, 3, 5, Fraction(1, 10))
    case = cases.quartic_oscillator(qp)
    assert case.bound_map.forward[1] == RationalFunction(case.qrt_num, case.qrt_den)


def test_duffing_map_is_odd_symmetric():
    # b = d = 0 leaves an odd force; conjugation by x -> -x fixes the map
    case = cases.quartic_oscillator()
    m = case.map.bind({"b": 0, "d": 0})
    flip = {
        x(1, 0): -Polynomial.var(x(1, 0)),
        x(1, 1): -Polynomial.var(x(1, 1)),
    }
    for rf in m.forward:
        assert rf.substitute(flip) == -rf


# -- Weierstrass-type case ------------------------------------------------------


def test_weierstrass_elimination_symbolic():
    case = cases.kahan_weierstrass()
    assert cases.weierstrass_elimination_matches(case)


def test_weierstrass_additive_map_form():
    case = cases.kahan_weierstrass()
    # forward: (x, y) -> (y, g(y) - x)
    g_shifted = RationalFunction(
        case.additive_rhs.num.shift_states(1), case.additive_rhs.den.shift_states(1)
    )
    expected = g_shifted - RationalFunction(Polynomial.var(x(1, 0)))
    assert case.additive_map.forward[1] == expected


def test_weierstrass_pencil_members_invariant_symbolic():
    case = cases.kahan_weierstrass()
    for member in (case.pencil.P1, case.pencil.P2):
        cert = darboux.verify_darboux(member, case.additive_map)
        assert cert.valid


def test_weierstrass_darboux_recovers_pencil_numeric():
    case = cases.kahan_weierstrass(3, 1, Fraction(1, 2))
    certs = darboux.find_darboux(case.additive_map, 4)
    assert len(certs) == 2
    basis = [c.P for c in certs]
    assert darboux.in_span(basis, case.pencil.P1)
    assert darboux.in_span(basis, case.pencil.P2)


def test_weierstrass_vs_qrt_pencils_differ():
    case = cases.kahan_weierstrass()
    assert darboux.pencil_compare(case.pencil, case.qrt_pencil_alpha0).verdict == "different"


# -- beam, shift-averaged --------------------------------------------------------


def test_beam_params_constraints():
    with pytest.raises(cases.AffineConstraintViolated):
        cases.BeamParams(1, 1, 1, Fraction(1, 10), alpha=(1, 1, 0, 0, 0, 0))
    with pytest.raises(cases.AffineConstraintViolated):
        cases.BeamParams(1, 1, 1, Fraction(1, 10), beta=(Fraction(9, 10), 0, 0, 0))
    p = cases.BeamParams.normal_form(1, Fraction(1, 4), Fraction(1, 10))
    assert (p.a, p.b, p.c) == (1, -2, Fraction(3, 4))


def test_beam_symmetrized_load_matches_closed_form():
    p = beam_params()
    case = cases.beam_symmetric(p)
    recentred = case.rhs_full.shift_states(-2)
    assert recentred == case.expected_quartic + case.expected_quadratic + Polynomial.const(p.c)


def test_beam_quartic_and_quadratic_term_counts():
    p = beam_params()
    case = cases.beam_symmetric(p)
    assert len(list(case.expected_quartic.terms())) == 5
    assert len(list(case.expected_quadratic.terms())) == 10


def test_beam_load_symmetry_and_density_ratio():
    case = cases.beam_symmetric(beam_params())
    rep = cases.beam_measure_check(case)
    assert rep.symmetry_holds
    assert rep.max_rel_gap <= 1e-9


def test_beam_linear_case_has_unit_determinant():
    case = cases.beam_symmetric(beam_params(a=0, b=0))
    _, det = maps.jacobian(case.map)
    assert det == RationalFunction(Polynomial.const(1))


def test_beam_determinant_symbolic_quotient():
    # det equals (1 - h^4 G at the image window) / (1 - h^4 H at the state)
    case = cases.beam_symmetric(beam_params())
    _, det = maps.jacobian(case.map)
    F = case.rhs_full
    G = F.derivative(x(1, 0))
    Hi = F.derivative(x(1, 4))
    h4 = Polynomial.var(H) ** 4
    g_img = G.substitute({x(1, 4): case.map.forward[-1]})
    expected = (1 - h4 * g_img) / RationalFunction(1 - h4 * Hi)
    assert det == expected


# -- beam, variational -----------------------------------------------------------


def test_lagrangian_onsite_weights_collapse():
    a, b, c = (Polynomial.var(param(s)) for s in "abc")
    w0 = Polynomial.var(x(1, 0))
    rhs = cases.expected_lagrangian_rhs(a, b, c, cases.ONSITE_ALPHA, cases.ONSITE_BETA)
    assert rhs == a * w0**4 + b * w0**2 + c


def test_euler_lagrange_matches_closed_form_symbolic_weights():
    al = [Polynomial.var(param(f"alpha{i}")) for i in range(6)]
    be = [Polynomial.var(param(f"beta{i}")) for i in range(4)]
    a, b, c = (Polynomial.var(param(s)) for s in "abc")
    L = cases.discrete_lagrangian(a, b, c, al, be)
    h4 = Polynomial.var(H) ** 4
    expected = cases.beam_difference_kernel(0) - h4 * cases.expected_lagrangian_rhs(a, b, c, al, be)
    assert L.euler_lagrange() == expected


def test_euler_lagrange_under_affine_constraint():
    # substitute the constraint alpha5 = 1 - sum(others), beta3 = 1 - sum
    al = [Polynomial.var(param(f"alpha{i}")) for i in range(5)]
    al.append(1 - sum(al, Polynomial.zero()))
    be = [Polynomial.var(param(f"beta{i}")) for i in range(3)]
    be.append(1 - sum(be, Polynomial.zero()))
    a, b, c = (Polynomial.var(param(s)) for s in "abc")
    L = cases.discrete_lagrangian(a, b, c, al, be)
    h4 = Polynomial.var(H) ** 4
    expected = cases.beam_difference_kernel(0) - h4 * cases.expected_lagrangian_rhs(a, b, c, al, be)
    assert L.euler_lagrange() == expected


def test_beam_maps_coincide_for_constant_load():
    p = beam_params(a=0, b=0)
    sym = cases.beam_symmetric(p)
    lag = cases.beam_lagrangian(p)
    assert lag.euler_lagrange.shift_states(2) == sym.scheme.equations[0]
    assert sym.map.forward == lag.map.forward


def test_lagrangian_map_solves_euler_lagrange():
    p = beam_params()
    lag = cases.beam_lagrangian(p)
    orbit = maps.iterate(lag.map, [0.1, 0.1, 0.1, 0.1], 0.1, 20)
    assert orbit.status == "complete"
    assert max(maps.orbit_residuals(lag.map, orbit)) <= 1e-10


# -- Ostrogradsky transform --------------------------------------------------------


def test_ostrogradsky_linear_case_is_linear():
    p = beam_params(a=0, b=0, c=0)
    L = cases.discrete_lagrangian(p.a, p.b, p.c, p.alpha, p.beta)
    for j in (1, 2):
        assert L.partial(j).degree() == 1  # pure difference kernel is quadratic


def test_ostrogradsky_round_trip_exact():
    p = beam_params()
    L = cases.discrete_lagrangian(p.a, p.b, p.c, p.alpha, p.beta)
    window = [Fraction(1, 3), Fraction(-1, 7), Fraction(2, 5), Fraction(1, 2)]
    state = cases.ostrogradsky_transform(L, window, p.h)
    assert cases.ostrogradsky_inverse(L, state, p.h) == window


def test_ostrogradsky_fixed_window_maps_to_fixed_state():
    rep = cases.beam_fixed_point_analysis(1, Fraction(1, 4), Fraction(1, 10), "lagrangian")
    w = rep.primary
    p = rep.params
    L = cases.discrete_lagrangian(p.a, p.b, p.c, p.alpha, p.beta)
    state = cases.ostrogradsky_transform(L, [w] * 4, p.h)
    lag = cases.beam_lagrangian(p)
    image_window = maps.step(lag.map, [w] * 4, float(p.h))
    image_state = cases.ostrogradsky_transform(L, image_window, p.h)
    assert np.allclose(state.as_list(), image_state.as_list(), rtol=0, atol=1e-9)


# -- symplecticity ------------------------------------------------------------------


def test_symplectic_defect_linear_beam():
    lag = cases.beam_lagrangian(beam_params(a=0, b=0))
    rep = cases.symplecticity_check(lag)
    assert rep.defect <= 1e-12


@pytest.mark.parametrize("alpha,beta", [
    (cases.ONSITE_ALPHA, cases.ONSITE_BETA),
    (cases.UNIFORM_ALPHA, cases.UNIFORM_BETA),
])
def test_symplectic_defect_nonlinear_beam(alpha, beta):
    lag = cases.beam_lagrangian(beam_params(alpha=alpha, beta=beta))
    rep = cases.symplecticity_check(lag)
    assert rep.defect <= 1e-8


def test_symmetric_map_symplectic_defect_recorded():
    # contrast experiment: conjugate the non-variational map the same way;
    # no bound asserted, the defect is only recorded
    p = beam_params()
    sym = cases.beam_symmetric(p)
    lag = cases.beam_lagrangian(p)
    contrast = cases.BeamLagrangianCase(
        params=p,
        lagrangian=lag.lagrangian,
        euler_lagrange=lag.euler_lagrange,
        map=sym.map,
        expected_rhs=lag.expected_rhs,
    )
    rep = cases.symplecticity_check(contrast)
    assert rep.defect >= 0.0


# -- fixed points and spectra ----------------------------------------------------------


def test_fixed_point_values_and_growth_rate():
    rep = cases.beam_fixed_point_analysis(1, Fraction(1, 4), Fraction(1, 10), "symmetric")
    assert rep.primary == pytest.approx(math.sqrt(1.5), rel=1e-12)
    assert rep.continuous_growth == pytest.approx(6 ** 0.125, rel=1e-12)
    assert sorted(rep.fixed_points) == pytest.approx(
        sorted([math.sqrt(1.5), -math.sqrt(1.5), math.sqrt(0.5), -math.sqrt(0.5)])
    )


def test_fixed_point_residual_exact_for_rational_sqrt_delta():
    for which in ("symmetric", "lagrangian"):
        rep = cases.beam_fixed_point_analysis(1, Fraction(1, 4), Fraction(1, 10), which)
        assert rep.exact_residual_ok is True


def test_fixed_points_are_numeric_fixed_points():
    rep = cases.beam_fixed_point_analysis(1, Fraction(1, 4), Fraction(1, 10), "symmetric")
    case = cases.beam_symmetric(rep.params)
    for w in rep.fixed_points:
        image = maps.step(case.map, [w] * 4, 0.1)
        assert max(abs(v - w) for v in image) <= 1e-12


def test_no_real_fixed_point():
    with pytest.raises(cases.NoRealFixedPoint):
        cases.beam_fixed_point_analysis(-1, Fraction(1, 4), Fraction(1, 10))


@pytest.mark.parametrize("which", ["symmetric", "lagrangian"])
def test_saddle_center_spectrum_at_primary(which):
    rep = cases.beam_fixed_point_analysis(1, Fraction(1, 4), Fraction(1, 10), which)
    sp = rep.spectra[rep.primary]
    assert sp.palindromic_defect <= 1e-8
    real = sorted(
        [z for z in sp.roots if abs(z.imag) <= 1e-7 and abs(abs(z) - 1) > 1e-7],
        key=lambda z: z.real,
    )
    complex_pair = [z for z in sp.roots if abs(z.imag) > 1e-7]
    assert len(real) == 2 and len(complex_pair) == 2
    assert abs(real[0].real * real[1].real - 1.0) <= 1e-8
    for z in complex_pair:
        assert abs(abs(z) - 1.0) <= 1e-7
    assert sorted(sp.classification) == ["inside", "outside", "unit", "unit"]


def test_spectrum_matrix_reproduces_charpoly():
    rep = cases.beam_fixed_point_analysis(1, Fraction(1, 4), Fraction(1, 10), "symmetric")
    sp = rep.spectra[rep.primary]
    assert sp.residual <= 1e-8
