"""Darboux polynomials of birational maps, with Jacobian cofactor.

A polynomial P is Darboux for the map Phi when P(Phi(x)) = J(x) P(x) with J
the Jacobian determinant.  Such a P makes the 2-form dx^dy / P invariant,
and the ratio of two Darboux polynomials with the same cofactor is a first
integral.  The search reduces to exact linear algebra: write P as an ansatz
over all monomials up to a degree bound, clear all denominators of the
relation, and take the nullspace of the resulting coefficient system.

The search is exact and intended for planar maps; it also runs in higher
dimension (the 4D beam maps), where it is experimental and may well return
nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import linalg
from .maps import BirationalMap, jacobian
from .poly import Monomial, Polynomial, RationalFunction, Var, _grlex_key, param, x


class CofactorMismatch(ArithmeticError):
    """Certificates do not share a cofactor, or a witness is nonzero."""


@dataclass
class DarbouxCertificate:
    """A Darboux polynomial with its cofactor and a residual-zero witness.

    ``witness`` is the fully denominator-cleared polynomial
    P(Phi) * clear - J * P * clear and must be identically zero; it is kept
    as evidence rather than re-derived on use.
    """

    P: Polynomial
    cofactor: RationalFunction
    degree_bound: int
    witness: Polynomial
    map: BirationalMap

    def __post_init__(self):
        self.P = self.P.primitive()

    @property
    def valid(self) -> bool:
        return self.witness.is_zero()

    def to_text(self) -> str:
        """Canonical serialization (graded-lex term order)."""
        return str(self.P)


@dataclass
class Pencil:
    """The family lambda*P1 + P2 of invariant curves of a planar map."""

    P1: Polynomial
    P2: Polynomial

    def describe(self) -> str:
        return f"lambda*({self.P1}) + ({self.P2}) = 0"

    def level(self, point) -> float:
        """The lambda-level of the member passing through a point."""
        p1 = self.P1.eval(point)
        if p1 == 0:
            raise ZeroDivisionError("base member vanishes at the point")
        return -self.P2.eval(point) / p1


def jacobian_det_2d(m: BirationalMap) -> RationalFunction:
    """Jacobian determinant of a planar map as a reduced rational function."""
    if m.dim != 2:
        raise ValueError("expected a two-dimensional map")
    return jacobian(m)[1]


def _monomial_basis(vars_: Sequence[Var], maxdeg: int) -> list[Monomial]:
    """All monomials of total degree <= maxdeg, ascending graded-lex."""
    out = []
    k = len(vars_)
    for total in range(maxdeg + 1):
        for combo in itertools.combinations_with_replacement(range(k), total):
            exps = [0] * k
            for i in combo:
                exps[i] += 1
            out.append(Monomial.from_pairs(list(zip(vars_, exps))))
    universe = tuple(sorted(vars_, key=lambda v: v.sort_key()))
    out.sort(key=lambda m: _grlex_key(m, universe))
    return out


def _require_bound(m: BirationalMap):
    free = m.free_parameters()
    for e in m.scheme.equations:
        if m.scheme.step in e.vars():
            free = free | {m.scheme.step}
            break
    if free:
        raise ValueError(
            f"Darboux search needs bound parameters, free: {sorted(map(str, free))}"
        )
    if m.forward is None:
        raise ValueError("Darboux search needs the symbolic map")


def _cleared_images(m: BirationalMap, maxdeg: int, basis: list[Monomial]):
    """Per ansatz monomial: the cleared composition and the cleared identity
    side, so that the Darboux relation becomes one polynomial identity."""
    J = jacobian(m)[1]
    comps = list(m.forward)
    dens = [c.den for c in comps]
    common = Polynomial.const(1)
    for d in dens:
        common = common * d
    num_pows = [_pows(c.num, maxdeg) for c in comps]
    den_pows = [_pows(d, maxdeg) for d in dens]
    clear_pow = _pows(common, maxdeg)
    rows = []
    for mono in basis:
        exps = [mono.exponent(v) for v in m.state_vars]
        total = sum(exps)
        lhs = Polynomial.const(1)
        for i, e in enumerate(exps):
            lhs = lhs * num_pows[i][e] * den_pows[i][maxdeg - e]
        # lhs == (mono o Phi) * common^maxdeg exactly
        lhs = lhs * J.den
        rhs = J.num * Polynomial.monomial(mono) * clear_pow[maxdeg]
        rows.append(lhs - rhs)
    return rows


def _pows(p: Polynomial, emax: int) -> list[Polynomial]:
    out = [Polynomial.const(1)]
    for _ in range(emax):
        out.append(out[-1] * p)
    return out


def find_darboux(m: BirationalMap, maxdeg: int) -> list[DarbouxCertificate]:
    """All Darboux polynomials of total degree <= maxdeg, cofactor J.

    Returns a deterministic (echelonized, primitive) basis of the solution
    space; an empty list is a legitimate outcome.  Parameters and the step
    symbol must be bound to exact rationals first.
    """
    if maxdeg < 0:
        raise ValueError("maxdeg must be >= 0")
    _require_bound(m)
    basis = _monomial_basis(m.state_vars, maxdeg)
    combo_polys = _cleared_images(m, maxdeg, basis)
    all_monos: set[Monomial] = set()
    for p in combo_polys:
        all_monos.update(mm for mm, _ in p.terms())
    universe = tuple(
        sorted(
            {v for mm in all_monos for v in mm.vars()}, key=lambda v: v.sort_key()
        )
    )
    rows_index = sorted(all_monos, key=lambda mm: _grlex_key(mm, universe))
    system = [
        [p.coefficient(mm) for p in combo_polys] for mm in rows_index
    ]
    null = linalg.nullspace(system, ncols=len(basis))
    certs = []
    J = jacobian(m)[1]
    for vec in null:
        P = Polynomial()
        for u, mono in zip(vec, basis):
            if u:
                P = P + Polynomial.monomial(mono, u)
        witness = Polynomial()
        for u, comb in zip(vec, combo_polys):
            if u:
                witness = witness + comb * u
        certs.append(
            DarbouxCertificate(
                P=P, cofactor=J, degree_bound=maxdeg, witness=witness, map=m
            )
        )
    return certs


def verify_darboux(
    P: Polynomial, m: BirationalMap, degree_bound: int | None = None
) -> DarbouxCertificate:
    """Exact check that P(Phi) = J*P; parameters may stay symbolic.

    Raises CofactorMismatch when the relation fails.
    """
    if m.forward is None:
        raise ValueError("needs the symbolic map")
    J = jacobian(m)[1]
    sigma = {v: rf for v, rf in zip(m.state_vars, m.forward)}
    residual = P.substitute(sigma) - J * RationalFunction(P)
    if not residual.num.is_zero():
        raise CofactorMismatch(f"P = {P} is not Darboux: residual {residual.num}")
    return DarbouxCertificate(
        P=P,
        cofactor=J,
        degree_bound=degree_bound if degree_bound is not None else P.degree(),
        witness=residual.num,
        map=m,
    )


@dataclass
class InvariantMeasure:
    density: Polynomial
    form: str

    def __str__(self) -> str:
        return self.form


def invariant_measure(cert: DarbouxCertificate) -> InvariantMeasure:
    """The invariant volume form dx_1^...^dx_d / P certified by ``cert``.

    The certificate equation P(Phi) = J*P is exactly the change-of-variables
    identity for this form; a nonzero witness is a CofactorMismatch.
    """
    if not cert.valid:
        raise CofactorMismatch("certificate witness is nonzero")
    wedge = "^".join(f"d{v}" for v in cert.map.state_vars)
    return InvariantMeasure(density=cert.P, form=f"({wedge}) / ({cert.P})")


def first_integral(
    c1: DarbouxCertificate, c2: DarbouxCertificate
) -> RationalFunction:
    """The ratio c2.P / c1.P, verified invariant under the map exactly."""
    if c1.map is not c2.map and c1.cofactor != c2.cofactor:
        raise CofactorMismatch("certificates have different cofactors")
    if not (c1.valid and c2.valid):
        raise CofactorMismatch("certificate witness is nonzero")
    m = c1.map
    sigma = {v: rf for v, rf in zip(m.state_vars, m.forward)}
    K = RationalFunction(c2.P, c1.P)
    pulled = c2.P.substitute(sigma) / c1.P.substitute(sigma)
    if pulled != K:
        raise CofactorMismatch("ratio is not invariant under the map")
    return K


def in_span(polys: Sequence[Polynomial], candidate: Polynomial) -> bool:
    """Exact membership of ``candidate`` in the rational span of ``polys``."""
    vecs, _ = _coefficient_matrix(list(polys) + [candidate])
    base = vecs[:-1]
    return linalg.rank(base) == linalg.rank(vecs)


def _coefficient_matrix(polys: Sequence[Polynomial]):
    monos: set[Monomial] = set()
    for p in polys:
        monos.update(m for m, _ in p.terms())
    universe = tuple(
        sorted({v for m in monos for v in m.vars()}, key=lambda v: v.sort_key())
    )
    index = sorted(monos, key=lambda m: _grlex_key(m, universe))
    return [[p.coefficient(m) for m in index] for p in polys], index


@dataclass
class PencilComparison:
    equal: bool
    witness: Polynomial | None = None  # a member of one span not in the other

    @property
    def verdict(self) -> str:
        return "equal" if self.equal else "different"


def pencil_compare(p: Pencil, q: Pencil) -> PencilComparison:
    """Decide whether two pencils span the same family of curves.

    Exact linear algebra on coefficient vectors over the rationals; on a
    negative answer the witness is a member of one pencil that is not in the
    span of the other.
    """
    span_p = [p.P1, p.P2]
    span_q = [q.P1, q.P2]
    for member in span_q:
        if not in_span(span_p, member):
            return PencilComparison(equal=False, witness=member)
    for member in span_p:
        if not in_span(span_q, member):
            return PencilComparison(equal=False, witness=member)
    return PencilComparison(equal=True)


@dataclass
class ContinuumLimitReport:
    """Exact h-expansion checks of the two invariant polynomials of the
    quartic-oscillator map under alpha = a h^2, beta = b h^2/3,
    gamma = 1 + c h^2/3, delta = d h^2 and y = x + h p."""

    p1_order0_is_one: bool
    p1_order1_is_zero: bool
    p2_order0_is_zero: bool
    p2_order1_is_zero: bool
    p2_order2_is_four_h: bool
    p1_series: dict[int, Polynomial]
    p2_series: dict[int, Polynomial]

    @property
    def all_hold(self) -> bool:
        return (
            self.p1_order0_is_one
            and self.p1_order1_is_zero
            and self.p2_order0_is_zero
            and self.p2_order1_is_zero
            and self.p2_order2_is_four_h
        )


def continuum_limit_check(
    P1: Polynomial,
    P2: Polynomial,
    step_var: Var | None = None,
) -> ContinuumLimitReport:
    """Verify P1 = 1 + O(h^2) and P2 = 4 H h^2 + O(h^3) exactly.

    ``P1``/``P2`` are polynomials in the planar variables x = x1^(0),
    y = x1^(1) and the parameters alpha, beta, gamma, delta; the check
    substitutes the step-scalings and the momentum expansion y = x + h p,
    then compares h-coefficients with the Hamiltonian
    H = p^2/2 + a x^4/4 + b x^3/3 + c x^2/2 + d x.
    """
    hvar = step_var if step_var is not None else param("h")
    h = Polynomial.var(hvar)
    a, b, c, d, p = (Polynomial.var(param(s)) for s in ("a", "b", "c", "d", "p"))
    xv = Polynomial.var(x(1, 0))
    sigma = {
        param("alpha"): a * h**2,
        param("beta"): b * h**2 / 3,
        param("gamma"): 1 + c * h**2 / 3,
        param("delta"): d * h**2,
        x(1, 1): xv + h * p,
    }
    s1 = P1.subs_poly(sigma).split_by(hvar)
    s2 = P2.subs_poly(sigma).split_by(hvar)
    hamiltonian4 = (
        2 * p**2 + a * xv**4 + Fraction(4, 3) * b * xv**3 + 2 * c * xv**2 + 4 * d * xv
    )
    return ContinuumLimitReport(
        p1_order0_is_one=s1.get(0, Polynomial()) == Polynomial.const(1),
        p1_order1_is_zero=s1.get(1, Polynomial.zero()).is_zero(),
        p2_order0_is_zero=s2.get(0, Polynomial.zero()).is_zero(),
        p2_order1_is_zero=s2.get(1, Polynomial.zero()).is_zero(),
        p2_order2_is_four_h=s2.get(2, Polynomial()) == hamiltonian4,
        p1_series=s1,
        p2_series=s2,
    )
