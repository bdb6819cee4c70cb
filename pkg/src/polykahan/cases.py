"""Worked systems: Lotka-Volterra, the quartic oscillator, the quadratic
Weierstrass-type oscillator, and the static nonlinear beam.

Each constructor returns the system together with hand-built expected
formulas (schemes, closed-form maps, invariant polynomials, pencils), so
tests can compare the generic machinery against the known answers by exact
polynomial identity.  The beam gets two discretizations: the shift-averaged
one (measure-preserving) and a variational one derived from a discrete
Lagrangian (symplectic); both are analyzed around their fixed points.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import darboux, maps
from .maps import BirationalMap, SingularStep, solve_forward
from .poly import DenominatorVanished, Polynomial, RationalFunction, Var, param, x
from .scheme import H, ImplicitScheme, PolyOdeSystem, discretize, symmetrize


class AffineConstraintViolated(ValueError):
    """A weight vector of the discrete Lagrangian does not sum to 1."""


class NoRealFixedPoint(ValueError):
    """The requested parameter range has no real constant fixed point."""


def _P(v) -> Polynomial:
    if isinstance(v, Polynomial):
        return v
    return Polynomial.const(Fraction(v))


def _W(k: int) -> Polynomial:
    return Polynomial.var(x(1, k))


# ---------------------------------------------------------------------------
# Lotka-Volterra (order 1, two species)
# ---------------------------------------------------------------------------


@dataclass
class LotkaVolterraCase:
    system: PolyOdeSystem
    scheme: ImplicitScheme
    expected_scheme: ImplicitScheme
    map: BirationalMap


def lotka_volterra(alpha: Fraction | int | None = None) -> LotkaVolterraCase:
    """dx/dt = alpha x (1 - y), dy/dt = y (x - 1); alpha None keeps it symbolic.

    The expected scheme is the classical Kahan form written out by hand:
    (x~ - x)/h = alpha/2 (x(1 - y~) + x~(1 - y)) and its companion.
    """
    a = Polynomial.var(param("alpha")) if alpha is None else _P(alpha)
    if alpha is not None and alpha == 0:
        raise ValueError("alpha must be nonzero")
    X, Y = Polynomial.var(x(1)), Polynomial.var(x(2))
    sys = PolyOdeSystem(1, 2, (a * X - a * X * Y, Y * X - Y))
    sch = discretize(sys)
    h = Polynomial.var(H)
    Xn, Yn = Polynomial.var(x(1, 1)), Polynomial.var(x(2, 1))
    e1 = Xn - X - h * a * Fraction(1, 2) * (X * (1 - Yn) + Xn * (1 - Y))
    e2 = Yn - Y - h * Fraction(1, 2) * (Y * (Xn - 1) + Yn * (X - 1))
    expected = ImplicitScheme(1, 2, H, (e1, e2))
    return LotkaVolterraCase(sys, sch, expected, solve_forward(sch))


# ---------------------------------------------------------------------------
# Quartic oscillator (order 2, cubic force)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuarticParams:
    """Force coefficients of x'' = -a x^3 - b x^2 - c x - d and the step."""

    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction
    h: Fraction

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        object.__setattr__(self, "h", Fraction(self.h))

    @property
    def alpha(self) -> Fraction:
        return self.a * self.h**2

    @property
    def beta(self) -> Fraction:
        return self.b * self.h**2 / 3

    @property
    def gamma(self) -> Fraction:
        return 1 + self.c * self.h**2 / 3

    @property
    def delta(self) -> Fraction:
        return self.d * self.h**2


def _qrt_invariants(al, be, ga, de) -> tuple[Polynomial, Polynomial]:
    """The two invariant polynomials of the planar quartic-oscillator map,
    from the coefficients of the solved update rule."""
    al, be, ga, de = _P(al), _P(be), _P(ga), _P(de)
    X, Y = _W(0), _W(1)
    density = al * X * Y + be * (X + Y) + ga
    eps = al * de + be * (3 - ga)
    zeta = be * de + ga * (3 - ga)
    invariant = (
        (al * ga - be**2) * X**2 * Y**2
        + eps * X * Y * (X + Y)
        + zeta * (X**2 + Y**2)
        - (3 - ga) ** 2 * X * Y
        + (3 - ga) * de * (X + Y)
        - de**2
    )
    return density, invariant


def _qrt_closed_form(al, be, ga, de) -> tuple[Polynomial, Polynomial]:
    """Numerator and denominator of the solved second-order update
    x^(2) = ((3-gamma) x^(1) - delta - (beta x^(1) + gamma) x^(0))
            / (beta x^(1) + gamma + (alpha x^(1) + beta) x^(0))."""
    al, be, ga, de = _P(al), _P(be), _P(ga), _P(de)
    lo, mid = _W(0), _W(1)
    num = (3 - ga) * mid - de - (be * mid + ga) * lo
    den = be * mid + ga + (al * mid + be) * lo
    return num, den


@dataclass
class QuarticCase:
    params: QuarticParams | None
    system: PolyOdeSystem
    scheme: ImplicitScheme
    map: BirationalMap  # parameters bound when params given; h stays symbolic
    bound_map: BirationalMap | None  # everything bound, incl. h (numeric case)
    qrt_num: Polynomial
    qrt_den: Polynomial
    density_poly: Polynomial  # degree-(1,1) invariant: the measure denominator
    invariant_poly: Polynomial  # biquadratic partner; their ratio is conserved


def quartic_oscillator(params: QuarticParams | None = None) -> QuarticCase:
    """x'' = -a x^3 - b x^2 - c x - d with its solved planar map and the two
    invariant polynomials; ``params=None`` keeps every coefficient symbolic."""
    if params is None:
        a, b, c, d = (Polynomial.var(param(s)) for s in "abcd")
        h2 = Polynomial.var(H) ** 2
        al, be, ga, de = a * h2, b * h2 / 3, 1 + c * h2 / 3, d * h2
    else:
        a, b, c, d = params.a, params.b, params.c, params.d
        al, be, ga, de = params.alpha, params.beta, params.gamma, params.delta
    X = Polynomial.var(x(1))
    sys = PolyOdeSystem(2, 1, (-(_P(a) * X**3) - _P(b) * X**2 - _P(c) * X - _P(d),))
    sch = discretize(sys)
    m = solve_forward(sch)
    bound = None
    if params is not None:
        bound = m.bind({"h": params.h})
    num, den = _qrt_closed_form(al, be, ga, de)
    density, invariant = _qrt_invariants(al, be, ga, de)
    return QuarticCase(params, sys, sch, m, bound, num, den, density, invariant)


# ---------------------------------------------------------------------------
# Weierstrass-type case: quadratic force, order 1 in two variables
# ---------------------------------------------------------------------------


@dataclass
class WeierstrassCase:
    system: PolyOdeSystem
    kahan_map: BirationalMap  # planar map in (x, p)
    additive_scheme: ImplicitScheme  # second-order form x~ + x_ = g(x)
    additive_map: BirationalMap
    additive_rhs: RationalFunction  # g(x) = (4x - 2 delta)/(3 beta x + 2)
    pencil: darboux.Pencil  # invariant pencil of the additive map
    qrt_pencil_alpha0: darboux.Pencil  # the alpha=0, gamma=1 member family


def kahan_weierstrass(
    b: Fraction | int | None = None,
    d: Fraction | int | None = None,
    h: Fraction | int | None = None,
) -> WeierstrassCase:
    """Kahan discretization of  x' = p, p' = -b x^2 - d  and its elimination
    to the additive second-order form; None arguments stay symbolic."""
    bp = Polynomial.var(param("b")) if b is None else _P(b)
    dp = Polynomial.var(param("d")) if d is None else _P(d)
    hp = Polynomial.var(H) if h is None else _P(h)
    X, P = Polynomial.var(x(1)), Polynomial.var(x(2))
    sys = PolyOdeSystem(1, 2, (P, -bp * X**2 - dp))
    sch = discretize(sys)
    kmap = solve_forward(sch)
    beta = bp * hp**2 / 3
    delta = dp * hp**2
    lo, mid = _W(0), _W(1)
    hi = _W(2)
    additive_eq = (lo + hi) * (3 * beta * mid + 2) - (4 * mid - 2 * delta)
    asch = ImplicitScheme(2, 1, H, (additive_eq,))
    amap = solve_forward(asch)
    g = RationalFunction(4 * _W(0) - 2 * delta, 3 * beta * _W(0) + 2)
    Xv, Yv = _W(0), _W(1)
    p2 = (
        -(beta**2) * Xv**2 * Yv**2
        + Fraction(4, 3) * beta * Xv * Yv * (Xv + Yv)
        + Fraction(4, 3) * (Xv**2 + Yv**2)
        - Fraction(2, 3) * (4 + beta * delta) * Xv * Yv
        + Fraction(4, 3) * delta * (Xv + Yv)
    )
    pencil = darboux.Pencil(Polynomial.const(1), p2)
    q_density, q_invariant = _qrt_invariants(0, beta, 1, delta)
    return WeierstrassCase(
        system=sys,
        kahan_map=kmap,
        additive_scheme=asch,
        additive_map=amap,
        additive_rhs=g,
        pencil=pencil,
        qrt_pencil_alpha0=darboux.Pencil(q_density, q_invariant),
    )


def weierstrass_elimination_matches(case: WeierstrassCase) -> bool:
    """Check x~ + x_ = g(x) exactly: the sum of the forward and backward
    x-components of the planar Kahan map must be independent of p and equal
    to the additive right-hand side."""
    fx = case.kahan_map.forward[0]
    bx = case.kahan_map.backward[0]
    return fx + bx == case.additive_rhs


# ---------------------------------------------------------------------------
# Nonlinear static beam, order 4
# ---------------------------------------------------------------------------

UNIFORM_ALPHA = tuple(Fraction(1, 6) for _ in range(6))
UNIFORM_BETA = tuple(Fraction(1, 4) for _ in range(4))
ONSITE_ALPHA = (0, 0, 0, 0, 0, Fraction(1))
ONSITE_BETA = (0, 0, 0, Fraction(1))


@dataclass(frozen=True)
class BeamParams:
    """Load coefficients of w'''' = a w^4 + b w^2 + c, a step, and the affine
    weight vectors of the variational discretization."""

    a: Fraction
    b: Fraction
    c: Fraction
    h: Fraction
    alpha: tuple = ONSITE_ALPHA
    beta: tuple = ONSITE_BETA

    def __post_init__(self):
        for name in "abch":
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        object.__setattr__(self, "alpha", tuple(Fraction(v) for v in self.alpha))
        object.__setattr__(self, "beta", tuple(Fraction(v) for v in self.beta))
        if len(self.alpha) != 6 or sum(self.alpha) != 1:
            raise AffineConstraintViolated("quartic weights must be 6 values summing to 1")
        if len(self.beta) != 4 or sum(self.beta) != 1:
            raise AffineConstraintViolated("quadratic weights must be 4 values summing to 1")

    @staticmethod
    def normal_form(
        epsilon: int, delta: Fraction | int, h: Fraction | int, alpha=ONSITE_ALPHA, beta=ONSITE_BETA
    ) -> "BeamParams":
        """Scaled load a=1, b=-2 epsilon, c=1-delta with epsilon = +-1."""
        if epsilon not in (1, -1):
            raise ValueError("epsilon must be +1 or -1")
        return BeamParams(1, -2 * epsilon, 1 - Fraction(delta), h, alpha, beta)


@dataclass
class BeamSymmetricCase:
    params: BeamParams
    system: PolyOdeSystem
    scheme: ImplicitScheme  # window 0..4
    recentred: ImplicitScheme  # window -2..2 for display/comparison
    map: BirationalMap
    rhs_full: Polynomial  # shift-averaged load on the 0..4 window
    expected_quartic: Polynomial  # on the -2..2 window
    expected_quadratic: Polynomial


def beam_symmetric(p: BeamParams) -> BeamSymmetricCase:
    """Shift-averaged discretization of the beam; the averaged quartic load
    is a/5 times the five 4-subsets of the window, the quadratic load b/10
    times the ten pairs."""
    X = Polynomial.var(x(1))
    rhs = _P(p.a) * X**4 + _P(p.b) * X**2 + _P(p.c)
    sys = PolyOdeSystem(4, 1, (rhs,))
    sch = discretize(sys)
    window = [-2, -1, 0, 1, 2]
    quartic = Polynomial()
    for skip in window:
        prod = Polynomial.const(1)
        for k in window:
            if k != skip:
                prod = prod * _W(k)
        quartic = quartic + prod
    quartic = _P(p.a) / 5 * quartic
    quadratic = Polynomial()
    for i, ki in enumerate(window):
        for kj in window[i + 1 :]:
            quadratic = quadratic + _W(ki) * _W(kj)
    quadratic = _P(p.b) / 10 * quadratic
    return BeamSymmetricCase(
        params=p,
        system=sys,
        scheme=sch,
        recentred=sch.recentered(-2),
        map=solve_forward(sch),
        rhs_full=symmetrize(rhs, 4),
        expected_quartic=quartic,
        expected_quadratic=quadratic,
    )


@dataclass
class MeasureReport:
    symmetry_holds: bool  # dF/d(lowest) equals dF/d(highest) as functions
    max_rel_gap: float  # worst |det - density ratio| / |det| over samples
    samples: int
    density_description: str


def beam_measure_check(
    case: BeamSymmetricCase, n_points: int = 20, seed: int = 7
) -> MeasureReport:
    """Volume-form check for the shift-averaged beam map.

    The load F on the 0..4 window has dF/dw^(0) = G(w^(1..4)) and
    dF/dw^(4) = H(w^(0..3)) with G and H the same symmetric function; the
    Jacobian determinant then equals (1 - h^4 G)/(1 - h^4 H), i.e. the
    density 1/(1 - h^4 H) is invariant.  The exponent is the scheme's order:
    clearing Delta^4 w = F of its h^(-4) prefactor puts h^4 on the load.
    """
    F = case.rhs_full
    G = F.derivative(x(1, 0))
    Hi = F.derivative(x(1, 4))
    symmetry = G.shift_states(-1) == Hi
    _, det = maps.jacobian(case.map)
    h = float(case.params.h)
    rng = random.Random(seed)
    worst = 0.0
    done = 0
    while done < n_points:
        state = [rng.uniform(-1.0, 1.0) for _ in range(4)]
        point = {x(1, k): state[k] for k in range(4)}
        point[H] = h
        try:
            w4 = case.map.forward[-1].eval(point)
            det_val = det.eval(point)
        except (ZeroDivisionError, DenominatorVanished):
            continue
        g_val = G.eval({x(1, k): (state[k] if k < 4 else w4) for k in range(1, 5)})
        h_val = Hi.eval({x(1, k): state[k] for k in range(4)})
        ratio = (1 - h**4 * g_val) / (1 - h**4 * h_val)
        worst = max(worst, abs(det_val - ratio) / max(abs(det_val), 1e-30))
        done += 1
    return MeasureReport(
        symmetry_holds=symmetry,
        max_rel_gap=worst,
        samples=n_points,
        density_description="dw^(-2)^dw^(-1)^dw^(0)^dw^(1) / (1 - h^4*H)",
    )


# -- discrete Lagrangian ---------------------------------------------------


@dataclass
class DiscreteLagrangian:
    """Three-point discrete Lagrangian of the beam, stored as h^4 * L.

    The difference kernel carries a 1/h^4 prefactor that is not polynomial
    in h, so the polynomial field keeps the h^4-scaled Lagrangian; momenta
    and Euler-Lagrange equations divide the scaling back out where needed
    (scaling a Lagrangian by a constant does not change its equations).
    """

    scaled: Polynomial  # h^4 * (T - V) in w^(0), w^(1), w^(2)
    step: Var

    def partial(self, j: int) -> Polynomial:
        """h^4 times the derivative of L with respect to window slot j."""
        if j not in (0, 1, 2):
            raise ValueError("slot must be 0, 1 or 2")
        return self.scaled.derivative(x(1, j))

    def euler_lagrange(self) -> Polynomial:
        """h^4 times the discrete Euler-Lagrange expression on window -2..2:
        dL/dslot0 at (w0,w1,w2) + dL/dslot1 at (w-1,w0,w1)
        + dL/dslot2 at (w-2,w-1,w0)."""
        return (
            self.partial(0)
            + self.partial(1).shift_states(-1)
            + self.partial(2).shift_states(-2)
        )


def discrete_lagrangian(a, b, c, alpha: Sequence, beta: Sequence) -> DiscreteLagrangian:
    """Build h^4*(T - V5 - V3 - linear) from load coefficients and affine
    weights; arguments may be rationals or polynomials (symbolic weights)."""
    a, b, c = _P(a), _P(b), _P(c)
    al = [_P(v) for v in alpha]
    be = [_P(v) for v in beta]
    w0, w1, w2 = _W(0), _W(1), _W(2)
    kinetic = Fraction(1, 2) * (
        2 * (w0 - w1) ** 2 - (w0 - w2) ** 2 + 2 * (w1 - w2) ** 2
    )
    v5 = (
        al[0] * w0 * w1**3 * w2
        + Fraction(1, 2) * al[1] * (w0**2 * w1**3 + w1**2 * w2**3)
        + Fraction(1, 2) * al[2] * (w1**2 * w0**3 + w2**2 * w1**3)
        + Fraction(1, 2) * al[3] * (w0 * w1**4 + w1 * w2**4)
        + Fraction(1, 2) * al[4] * (w1 * w0**4 + w2 * w1**4)
        + Fraction(1, 3) * al[5] * (w0**5 + w1**5 + w2**5)
    ) * a / 5
    v3 = (
        be[0] * w0 * w1 * w2
        + Fraction(1, 2) * be[1] * (w0 * w1**2 + w1 * w2**2)
        + Fraction(1, 2) * be[2] * (w1 * w0**2 + w2 * w1**2)
        + Fraction(1, 3) * be[3] * (w0**3 + w1**3 + w2**3)
    ) * b / 3
    linear = c / 3 * (w0 + w1 + w2)
    h4 = Polynomial.var(H) ** 4
    return DiscreteLagrangian(scaled=kinetic - h4 * (v5 + v3 + linear), step=H)


def expected_lagrangian_rhs(a, b, c, alpha: Sequence, beta: Sequence) -> Polynomial:
    """The explicit variational load on the -2..2 window (quartic plus
    quadratic plus constant), written out from its closed form."""
    a, b, c = _P(a), _P(b), _P(c)
    al = [_P(v) for v in alpha]
    be = [_P(v) for v in beta]
    wm2, wm1, w0, w1, w2 = _W(-2), _W(-1), _W(0), _W(1), _W(2)
    f4 = (
        al[0] * (wm2 * wm1**3 + 3 * wm1 * w0**2 * w1 + w1**3 * w2)
        + al[1] * (3 * wm1**2 * w0**2 + 2 * w0 * w1**3)
        + al[2] * (2 * wm1**3 * w0 + 3 * w0**2 * w1**2)
        + al[3] * (4 * wm1 * w0**3 + w1**4)
        + al[4] * (wm1**4 + 4 * w0**3 * w1)
        + 5 * al[5] * w0**4
    ) * a / 5
    f2 = (
        be[0] * (wm2 * wm1 + wm1 * w1 + w1 * w2)
        + be[1] * (2 * wm1 * w0 + w1**2)
        + be[2] * (wm1**2 + 2 * w0 * w1)
        + 3 * be[3] * w0**2
    ) * b / 3
    return f4 + f2 + c


def beam_difference_kernel(center: int = 0) -> Polynomial:
    """w^(c-2) - 4w^(c-1) + 6w^(c) - 4w^(c+1) + w^(c+2)."""
    k = center
    return _W(k - 2) - 4 * _W(k - 1) + 6 * _W(k) - 4 * _W(k + 1) + _W(k + 2)


@dataclass
class BeamLagrangianCase:
    params: BeamParams
    lagrangian: DiscreteLagrangian
    euler_lagrange: Polynomial  # on window -2..2, h^4-cleared
    map: BirationalMap
    expected_rhs: Polynomial  # variational load on window -2..2


def beam_lagrangian(p: BeamParams) -> BeamLagrangianCase:
    """Variational beam discretization: build the three-point Lagrangian,
    form its discrete Euler-Lagrange equation, and solve the (linear)
    highest shift into a 4D map."""
    L = discrete_lagrangian(p.a, p.b, p.c, p.alpha, p.beta)
    el = L.euler_lagrange()
    sch = ImplicitScheme(4, 1, H, (el.shift_states(2),))
    return BeamLagrangianCase(
        params=p,
        lagrangian=L,
        euler_lagrange=el,
        map=solve_forward(sch),
        expected_rhs=expected_lagrangian_rhs(p.a, p.b, p.c, p.alpha, p.beta),
    )


# -- Ostrogradsky variables and symplecticity --------------------------------


@dataclass
class OstrogradskyState:
    q1: float | Fraction
    q2: float | Fraction
    p1: float | Fraction
    p2: float | Fraction

    def as_list(self):
        return [self.q1, self.q2, self.p1, self.p2]


def _slot_point(u0, u1, u2):
    return {x(1, 0): u0, x(1, 1): u1, x(1, 2): u2}


def ostrogradsky_transform(
    L: DiscreteLagrangian, window: Sequence, h: Fraction | float
) -> OstrogradskyState:
    """Canonical variables from a length-4 window (w^(-2), w^(-1), w^(0), w^(1)):

        q1 = w^(0),  q2 = w^(1),
        p2 = L_2(w^(-1), w^(0), w^(1)),
        p1 = L_1(w^(-1), w^(0), w^(1)) + L_2(w^(-2), w^(-1), w^(0)),

    with L_j the slot-j partial of the Lagrangian on consecutive windows.
    Exact when the window and h are rational.
    """
    wm2, wm1, w0, w1 = window
    exact = not any(isinstance(v, float) for v in (*window, h))
    hv = Fraction(h) if exact else float(h)
    scale = hv**4
    l1 = L.partial(1)
    l2 = L.partial(2)
    hbind = {H: hv}
    p2 = l2.eval({**_slot_point(wm1, w0, w1), **hbind}) / scale
    p1 = (
        l1.eval({**_slot_point(wm1, w0, w1), **hbind})
        + l2.eval({**_slot_point(wm2, wm1, w0), **hbind})
    ) / scale
    return OstrogradskyState(q1=w0, q2=w1, p1=p1, p2=p2)


def ostrogradsky_inverse(
    L: DiscreteLagrangian, state: OstrogradskyState, h: Fraction | float
) -> list:
    """Recover the window from canonical variables by two linear solves
    (the slot-2 partial is linear in its first argument)."""
    exact = not any(isinstance(v, float) for v in (*state.as_list(), h))
    hv = Fraction(h) if exact else float(h)
    scale = hv**4
    l1, l2 = L.partial(1), L.partial(2)
    u0 = x(1, 0)

    def solve_first_slot(poly: Polynomial, u1, u2, target):
        partial_eval = poly.subs_poly({x(1, 1): _P(u1) if exact else Polynomial.const(Fraction(u1)), x(1, 2): _P(u2) if exact else Polynomial.const(Fraction(u2))})
        pieces = partial_eval.split_by(u0)
        if max(pieces) != 1:
            raise ValueError("slot-2 partial is not linear in its first argument")
        lin = pieces[1].eval({H: Fraction(hv) if exact else hv})
        const = pieces.get(0, Polynomial.zero()).eval({H: Fraction(hv) if exact else hv})
        if lin == 0:
            raise ZeroDivisionError("degenerate window solve")
        val = (target - const) / lin
        return val if exact else float(val)

    q1, q2 = state.q1, state.q2
    wm1 = solve_first_slot(l2, q1, q2, state.p2 * scale)
    rem = state.p1 * scale - l1.eval({**_slot_point(wm1, q1, q2), H: hv})
    wm2 = solve_first_slot(l2, wm1, q1, rem)
    return [wm2, wm1, q1, q2]


@dataclass
class SymplecticityReport:
    defect: float
    samples: int
    resampled: int


_OMEGA = np.array(
    [
        [0.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 0.0, -1.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
    ]
)


def symplecticity_check(
    case: BeamLagrangianCase, n_states: int = 20, seed: int = 11
) -> SymplecticityReport:
    """Numeric check that the variational beam map preserves the canonical
    two-form in Ostrogradsky coordinates.

    The map is conjugated through the transform's Jacobian: with C the
    window-to-canonical derivative, M = C(Phi(s)) DPhi(s) C(s)^-1 must
    satisfy M^T Omega M = Omega; the defect is the worst infinity-norm gap
    over random window states.
    """
    L = case.lagrangian
    h = float(case.params.h)
    scale = h**4
    # Canonical coordinates as polynomials on the map's own 0..3 window
    # (s0..s3) = (w^(-2), w^(-1), w^(0), w^(1)).
    p2_poly = L.partial(2).shift_states(1)
    p1_poly = L.partial(1).shift_states(1) + L.partial(2)
    c_polys = [Polynomial.var(x(1, 2)), Polynomial.var(x(1, 3)), p1_poly, p2_poly]
    c_scale = [1.0, 1.0, scale, scale]
    state_vars = case.map.state_vars
    dC = [[poly.derivative(v) for v in state_vars] for poly in c_polys]
    Jm, _ = maps.jacobian(case.map)
    rng = random.Random(seed)
    worst = 0.0
    done = 0
    resampled = 0
    while done < n_states:
        s = [rng.uniform(-1.0, 1.0) for _ in range(4)]
        try:
            image = maps.step(case.map, s, h)
        except SingularStep:
            resampled += 1
            continue
        pt = {v: val for v, val in zip(state_vars, s)}
        pt[H] = h
        pt_im = {v: val for v, val in zip(state_vars, image)}
        pt_im[H] = h
        try:
            dphi = np.array([[rf.eval(pt) for rf in row] for row in Jm])
            C_here = np.array(
                [[p.eval(pt) / c_scale[i] for p in row] for i, row in enumerate(dC)]
            )
            C_image = np.array(
                [[p.eval(pt_im) / c_scale[i] for p in row] for i, row in enumerate(dC)]
            )
            M = C_image @ dphi @ np.linalg.inv(C_here)
        except (ZeroDivisionError, DenominatorVanished, np.linalg.LinAlgError):
            resampled += 1
            continue
        worst = max(worst, float(np.max(np.abs(M.T @ _OMEGA @ M - _OMEGA))))
        done += 1
    return SymplecticityReport(defect=worst, samples=n_states, resampled=resampled)


# -- fixed points and spectra ---------------------------------------------------


@dataclass
class BeamFixedPointReport:
    params: BeamParams
    fixed_points: list[float]
    primary: float  # sqrt(epsilon + sqrt(delta)) when real
    continuous_growth: float  # (4 w* sqrt(delta))^(1/4)
    spectra: dict[float, maps.SpectrumReport]
    exact_residual_ok: bool | None  # rational-arithmetic check when sqrt(delta) is rational


def _rational_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    num = math.isqrt(q.numerator)
    den = math.isqrt(q.denominator)
    if num * num == q.numerator and den * den == q.denominator:
        return Fraction(num, den)
    return None


def beam_fixed_point_analysis(
    epsilon: int,
    delta: Fraction,
    h: Fraction,
    which: str = "symmetric",
    alpha=ONSITE_ALPHA,
    beta=ONSITE_BETA,
) -> BeamFixedPointReport:
    """Constant fixed points w = +-sqrt(epsilon +- sqrt(delta)) of both beam
    discretizations, their linearizations and spectra.

    Both maps fix exactly the equilibria of the continuous equation, since a
    constant window zeroes the difference kernel and the averaged load
    collapses to the load itself.  Raises NoRealFixedPoint when the
    parameter range yields none.
    """
    delta = Fraction(delta)
    if delta < 0:
        raise NoRealFixedPoint("delta must be >= 0 for real fixed points")
    p = BeamParams.normal_form(epsilon, delta, h, alpha, beta)
    case = beam_symmetric(p) if which == "symmetric" else beam_lagrangian(p)
    sd = math.sqrt(float(delta))
    squares = [epsilon + sd, epsilon - sd]
    ws: list[float] = []
    for t in squares:
        if t > 0:
            r = math.sqrt(t)
            ws.extend([r, -r])
    if not ws:
        raise NoRealFixedPoint(f"no real fixed points for epsilon={epsilon}, delta={delta}")
    spectra = {}
    for w in ws:
        M = maps.linearize_at(case.map, [w] * 4, float(h))
        spectra[w] = maps.char_poly_and_roots(M, fixed_point=[w] * 4)
    primary = math.sqrt(epsilon + sd) if epsilon + sd > 0 else ws[0]
    gamma = (4.0 * primary * sd) ** 0.25 if sd > 0 else 0.0
    exact_ok = None
    rsd = _rational_sqrt(delta)
    if rsd is not None:
        exact_ok = _constant_window_residual_zero(case, Fraction(epsilon) + rsd)
    return BeamFixedPointReport(
        params=p,
        fixed_points=ws,
        primary=primary,
        continuous_growth=gamma,
        spectra=spectra,
        exact_residual_ok=exact_ok,
    )


def _constant_window_residual_zero(case, wsq: Fraction) -> bool:
    """Exact check that w = sqrt(wsq) zeroes the scheme on a constant window:
    substitute every shift by one symbol W, then reduce even powers via
    W^2 = wsq; the odd and even parts must both vanish."""
    sch = case.scheme if hasattr(case, "scheme") else ImplicitScheme(4, 1, H, (case.euler_lagrange.shift_states(2),))
    Wsym = Polynomial.var(x(1, 0))
    ok = True
    for e in sch.equations:
        const = e.subs_poly({x(1, k): Wsym for k in range(0, 5)})
        even = Polynomial()
        odd = Polynomial()
        for pw, coeff_poly in const.split_by(x(1, 0)).items():
            lifted = coeff_poly * Polynomial.const(wsq ** (pw // 2))
            if pw % 2 == 0:
                even = even + lifted
            else:
                odd = odd + lifted
        ok = ok and even.is_zero() and odd.is_zero()
    return ok
