"""Exact sparse multivariate polynomials and rational functions over Q.

Variables come in two kinds: lattice state variables addressed by
(component, shift) -- component ``j`` at time shift ``k``, printed as ``xj``
with one apostrophe per forward shift and one underscore prefix per backward
shift -- and named symbolic parameters such as ``a`` or ``h``.

Coefficients are ``fractions.Fraction`` throughout, so polynomial identity
is decidable and every algebraic check in this package is exact.  The zero
polynomial stores no terms; nonzero polynomials never store a zero
coefficient, so two equal polynomials have identical term dictionaries.

All values are immutable after construction.  Arithmetic never mutates its
operands, which makes every object here safe to share between threads.

Component 0 is reserved for the dummy state variable that is identically 1;
it is eliminated when a monomial is built and never appears in a stored
polynomial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Scalar = Union[int, Fraction]
Number = Union[int, float, Fraction]


class DenominatorVanished(ArithmeticError):
    """Raised when a rational function is evaluated where its denominator is 0."""


class NotLinear(ValueError):
    """Raised by :func:`collect_linear` when a monomial is jointly nonlinear."""


@dataclass(frozen=True, slots=True)
class Var:
    """A single variable: a lattice state variable or a named parameter.

    State variables have ``name == ''`` and carry (component, shift);
    parameters have a nonempty name and zero component/shift.
    """

    comp: int = 0
    shift: int = 0
    name: str = ""

    @property
    def is_param(self) -> bool:
        return self.name != ""

    def sort_key(self):
        # States order before parameters; within each kind the order is
        # (component, shift) resp. name, fixing canonical monomial keys.
        if self.name:
            return (1, 0, 0, self.name)
        return (0, self.comp, self.shift, "")

    def __lt__(self, other: "Var") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        if self.name:
            return self.name
        if self.shift >= 0:
            return f"x{self.comp}" + "'" * self.shift
        return "_" * (-self.shift) + f"x{self.comp}"

    __repr__ = __str__


def x(comp: int, shift: int = 0) -> Var:
    """State variable for component ``comp`` (>= 1) at lattice shift ``shift``."""
    if comp < 0:
        raise ValueError("state component must be >= 0")
    return Var(comp=comp, shift=shift)


def param(name: str) -> Var:
    """Named symbolic parameter."""
    if not name:
        raise ValueError("parameter name must be nonempty")
    return Var(name=name)


@dataclass(frozen=True, slots=True)
class Monomial:
    """A product of variables with positive integer exponents.

    Stored as a tuple of (Var, exponent) pairs sorted by the canonical
    variable order.  The empty tuple is the constant monomial 1.
    """

    factors: tuple[tuple[Var, int], ...] = ()

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[Var, int]]) -> "Monomial":
        acc: dict[Var, int] = {}
        for v, e in pairs:
            if e < 0:
                raise ValueError("negative exponent in monomial")
            if e == 0:
                continue
            if not v.is_param and v.comp == 0:
                continue  # dummy variable x0 == 1
            acc[v] = acc.get(v, 0) + e
        return Monomial(tuple(sorted(acc.items(), key=lambda it: it[0].sort_key())))

    @property
    def degree(self) -> int:
        return sum(e for _, e in self.factors)

    def degree_in(self, vars: frozenset[Var] | set[Var]) -> int:
        return sum(e for v, e in self.factors if v in vars)

    def state_degree(self) -> int:
        return sum(e for v, e in self.factors if not v.is_param)

    def exponent(self, v: Var) -> int:
        for w, e in self.factors:
            if w == v:
                return e
        return 0

    def vars(self) -> tuple[Var, ...]:
        return tuple(v for v, _ in self.factors)

    def __mul__(self, other: "Monomial") -> "Monomial":
        return Monomial.from_pairs(self.factors + other.factors)

    def without(self, v: Var) -> "Monomial":
        return Monomial(tuple((w, e) for w, e in self.factors if w != v))

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        parts = []
        for v, e in self.factors:
            parts.append(str(v) if e == 1 else f"{v}^{e}")
        return "*".join(parts)

    __repr__ = __str__


_ONE = Monomial()


def _grlex_key(m: Monomial, universe: tuple[Var, ...]):
    # Graded lexicographic key relative to a fixed, canonically sorted
    # variable universe; larger key = larger monomial.
    return (m.degree, tuple(m.exponent(v) for v in universe))


class Polynomial:
    """Sparse multivariate polynomial with exact rational coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Monomial, Scalar] | None = None):
        canon: dict[Monomial, Fraction] = {}
        if terms:
            for m, c in terms.items():
                c = Fraction(c)
                if c:
                    canon[m] = c
        self._terms = canon

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero() -> "Polynomial":
        return Polynomial()

    @staticmethod
    def const(c: Scalar) -> "Polynomial":
        return Polynomial({_ONE: Fraction(c)})

    @staticmethod
    def var(v: Var) -> "Polynomial":
        return Polynomial({Monomial.from_pairs([(v, 1)]): Fraction(1)})

    @staticmethod
    def monomial(m: Monomial, c: Scalar = 1) -> "Polynomial":
        return Polynomial({m: Fraction(c)})

    # -- inspection ----------------------------------------------------

    def terms(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m.degree == 0 for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"not a constant polynomial: {self}")
        return self._terms.get(_ONE, Fraction(0))

    def vars(self) -> set[Var]:
        out: set[Var] = set()
        for m in self._terms:
            out.update(m.vars())
        return out

    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def degree_in(self, vars: set[Var] | frozenset[Var]) -> int:
        vs = frozenset(vars)
        return max((m.degree_in(vs) for m in self._terms), default=0)

    def state_degree(self) -> int:
        return max((m.state_degree() for m in self._terms), default=0)

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        """Terms in descending graded-lex order (canonical printing order)."""
        universe = tuple(sorted(self.vars(), key=lambda v: v.sort_key()))
        return sorted(
            self._terms.items(),
            key=lambda it: _grlex_key(it[0], universe),
            reverse=True,
        )

    def leading_coefficient(self) -> Fraction:
        if not self._terms:
            return Fraction(0)
        return self.sorted_terms()[0][1]

    def coefficient(self, m: Monomial) -> Fraction:
        return self._terms.get(m, Fraction(0))

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other) -> "Polynomial":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            s = out.get(m, Fraction(0)) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        p = Polynomial.__new__(Polynomial)
        p._terms = out
        return p

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        p = Polynomial.__new__(Polynomial)
        p._terms = {m: -c for m, c in self._terms.items()}
        return p

    def __sub__(self, other) -> "Polynomial":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            if not other:
                return Polynomial()
            c0 = Fraction(other)
            p = Polynomial.__new__(Polynomial)
            p._terms = {m: c * c0 for m, c in self._terms.items()}
            return p
        if not isinstance(other, Polynomial):
            return NotImplemented
        out: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = m1 * m2
                s = out.get(m, Fraction(0)) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        p = Polynomial.__new__(Polynomial)
        p._terms = out
        return p

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            if not other:
                raise ZeroDivisionError("division of polynomial by zero scalar")
            return self * (Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, e: int) -> "Polynomial":
        if not isinstance(e, int) or e < 0:
            raise ValueError("polynomial exponent must be a nonnegative integer")
        out = Polynomial.const(1)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base if e > 1 else base
            e >>= 1
        return out

    def __eq__(self, other) -> bool:
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        raise TypeError("Polynomial is not hashable")

    # -- calculus and structure -----------------------------------------

    def derivative(self, v: Var) -> "Polynomial":
        out: dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            e = m.exponent(v)
            if not e:
                continue
            dm = Monomial.from_pairs([(w, k) for w, k in m.factors if w != v] + [(v, e - 1)])
            s = out.get(dm, Fraction(0)) + c * e
            if s:
                out[dm] = s
            else:
                out.pop(dm, None)
        p = Polynomial.__new__(Polynomial)
        p._terms = out
        return p

    def map_vars(self, fn) -> "Polynomial":
        """Rename variables via ``fn: Var -> Var`` (merging is allowed)."""
        out = Polynomial()
        for m, c in self._terms.items():
            nm = Monomial.from_pairs([(fn(v), e) for v, e in m.factors])
            out = out + Polynomial.monomial(nm, c)
        return out

    def shift_states(self, offset: int) -> "Polynomial":
        """Shift every state variable's lattice index by ``offset``."""
        return self.map_vars(
            lambda v: v if v.is_param else Var(comp=v.comp, shift=v.shift + offset)
        )

    def split_by(self, v: Var) -> dict[int, "Polynomial"]:
        """Group terms by the exponent of ``v``, removing ``v`` itself."""
        out: dict[int, Polynomial] = {}
        for m, c in self._terms.items():
            e = m.exponent(v)
            out.setdefault(e, Polynomial())
            out[e] = out[e] + Polynomial.monomial(m.without(v), c)
        return out

    def eval(self, point: Mapping[Var, Number]):
        """Evaluate at a point binding every variable.

        Returns a Fraction when all bound values are exact, a float as soon
        as any value is a float.
        """
        inexact = any(isinstance(val, float) for val in point.values())
        total = 0.0 if inexact else Fraction(0)
        for m, c in self._terms.items():
            term = float(c) if inexact else c
            for v, e in m.factors:
                try:
                    val = point[v]
                except KeyError:
                    raise KeyError(f"unbound variable {v} in evaluation") from None
                term *= (float(val) if inexact else Fraction(val)) ** e
            total += term
        return total

    def substitute(self, sigma: Mapping[Var, object]) -> "RationalFunction":
        """Exact composition: replace variables by rational functions.

        Values of ``sigma`` may be RationalFunction, Polynomial, Var or
        scalars; unmapped variables stay fixed.  The result is computed over
        one common denominator so no intermediate blowup occurs.
        """
        subs: dict[Var, RationalFunction] = {}
        relevant = self.vars()
        for v, val in sigma.items():
            if v in relevant:
                subs[v] = _coerce_rational(val)
        if not subs:
            return RationalFunction(self)
        for v, rf in subs.items():
            if rf.den.is_zero():
                raise DenominatorVanished(f"substitution for {v} has zero denominator")
        # Per-variable exponent ceiling fixes the common denominator.
        emax = {v: 0 for v in subs}
        for m, _ in self._terms.items():
            for v in subs:
                emax[v] = max(emax[v], m.exponent(v))
        num_pows = {v: _powers(subs[v].num, emax[v]) for v in subs}
        den_pows = {v: _powers(subs[v].den, emax[v]) for v in subs}
        num = Polynomial()
        for m, c in self._terms.items():
            piece = Polynomial.monomial(
                Monomial.from_pairs([(v, e) for v, e in m.factors if v not in subs]), c
            )
            for v in subs:
                e = m.exponent(v)
                piece = piece * num_pows[v][e] * den_pows[v][emax[v] - e]
            num = num + piece
        den = Polynomial.const(1)
        for v in subs:
            den = den * den_pows[v][emax[v]]
        return RationalFunction(num, den)

    def subs_poly(self, sigma: Mapping[Var, object]) -> "Polynomial":
        """Substitution whose result must be polynomial (constant denominator)."""
        return self.substitute(sigma).as_polynomial()

    # -- normalization ---------------------------------------------------

    def content(self) -> Fraction:
        """Positive rational c such that self/c has coprime integer coefficients."""
        if not self._terms:
            return Fraction(1)
        den_lcm = 1
        for c in self._terms.values():
            den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
        num_gcd = 0
        for c in self._terms.values():
            num_gcd = math.gcd(num_gcd, abs(c.numerator * (den_lcm // c.denominator)))
        return Fraction(num_gcd, den_lcm)

    def primitive(self) -> "Polynomial":
        """Scaled copy with coprime integer coefficients and positive leading
        coefficient in graded-lex order."""
        if not self._terms:
            return self
        p = self / self.content()
        if p.leading_coefficient() < 0:
            p = -p
        return p

    # -- printing --------------------------------------------------------

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts: list[str] = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            neg = c < 0
            mag = -c if neg else c
            if m.degree == 0:
                body = str(mag)
            elif mag == 1:
                body = str(m)
            else:
                body = f"{mag}*{m}"
            if i == 0:
                parts.append(("-" if neg else "") + body)
            else:
                parts.append(("- " if neg else "+ ") + body)
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"<Polynomial {self}>"


def _coerce_poly(v) -> Polynomial:
    if isinstance(v, Polynomial):
        return v
    if isinstance(v, (int, Fraction)):
        return Polynomial.const(v)
    if isinstance(v, Var):
        return Polynomial.var(v)
    return NotImplemented


def _powers(p: Polynomial, emax: int) -> list[Polynomial]:
    out = [Polynomial.const(1)]
    for _ in range(emax):
        out.append(out[-1] * p)
    return out


def _coerce_rational(v) -> "RationalFunction":
    if isinstance(v, RationalFunction):
        return v
    p = _coerce_poly(v)
    if p is NotImplemented:
        raise TypeError(f"cannot interpret {v!r} as a rational function")
    return RationalFunction(p)


def poly(c: Scalar = 0, *vars_: Var) -> Polynomial:
    """Convenience: ``poly(c, v1, v2, ...)`` is the monomial c*v1*v2*..."""
    return Polynomial.monomial(Monomial.from_pairs([(v, 1) for v in vars_]), c)


def try_divide(p: Polynomial, q: Polynomial) -> Polynomial | None:
    """Exact polynomial quotient p/q, or None when q does not divide p."""
    if q.is_zero():
        return None
    if q.is_constant():
        return p / q.constant_value()
    if p.is_zero():
        return Polynomial()
    universe = tuple(sorted(p.vars() | q.vars(), key=lambda v: v.sort_key()))
    q_sorted = sorted(q.terms(), key=lambda it: _grlex_key(it[0], universe), reverse=True)
    qm, qc = q_sorted[0]
    quotient = Polynomial()
    rem = p
    while not rem.is_zero():
        rm, rc = max(rem.terms(), key=lambda it: _grlex_key(it[0], universe))
        # Leading-term division: fail fast if the monomial does not divide.
        diff: list[tuple[Var, int]] = []
        for v, e in rm.factors:
            d = e - qm.exponent(v)
            if d < 0:
                return None
            if d:
                diff.append((v, d))
        if any(rm.exponent(v) < e for v, e in qm.factors):
            return None
        t = Polynomial.monomial(Monomial.from_pairs(diff), rc / qc)
        quotient = quotient + t
        rem = rem - t * q
    return quotient


class RationalFunction:
    """Quotient of two polynomials, kept partially reduced.

    Construction reduces by the common rational content and by monomial
    factors shared between numerator and denominator, and normalizes the
    denominator to coprime integer coefficients with positive leading
    coefficient.  Full gcd reduction is not attempted: equality is decided
    by cross-multiplication, so correctness never depends on it.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Polynomial | Scalar = 1):
        num = _coerce_poly(num)
        den = _coerce_poly(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator polynomial")
        if num.is_zero():
            self.num, self.den = Polynomial(), Polynomial.const(1)
            return
        # Shared monomial factor across all terms of num and den.
        common = _common_monomial(num, den)
        if common.factors:
            num = _strip_monomial(num, common)
            den = _strip_monomial(den, common)
        scale = den.content()
        if den.leading_coefficient() < 0:
            scale = -scale
        self.num = num / scale
        self.den = den / scale

    # -- basic structure -------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def as_polynomial(self) -> Polynomial:
        if self.den.is_constant():
            return self.num / self.den.constant_value()
        q = try_divide(self.num, self.den)
        if q is not None:
            return q
        raise ValueError(f"not a polynomial: ({self.num}) / ({self.den})")

    def vars(self) -> set[Var]:
        return self.num.vars() | self.den.vars()

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other) -> "RationalFunction":
        other = _coerce_rational(other)
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        q = try_divide(other.den, self.den)
        if q is not None:
            return RationalFunction(self.num * q + other.num, other.den)
        q = try_divide(self.den, other.den)
        if q is not None:
            return RationalFunction(self.num + other.num * q, self.den)
        return RationalFunction(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    __radd__ = __add__

    def __neg__(self) -> "RationalFunction":
        out = RationalFunction.__new__(RationalFunction)
        out.num, out.den = -self.num, self.den
        return out

    def __sub__(self, other) -> "RationalFunction":
        return self + (-_coerce_rational(other))

    def __rsub__(self, other) -> "RationalFunction":
        return (-self) + other

    def __mul__(self, other) -> "RationalFunction":
        other = _coerce_rational(other)
        n1, d2 = _cancel(self.num, other.den)
        n2, d1 = _cancel(other.num, self.den)
        return RationalFunction(n1 * n2, d1 * d2)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFunction":
        other = _coerce_rational(other)
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return self * RationalFunction(other.den, other.num)

    def __rtruediv__(self, other) -> "RationalFunction":
        return _coerce_rational(other) / self

    def __pow__(self, e: int) -> "RationalFunction":
        if e < 0:
            return RationalFunction(self.den, self.num) ** (-e)
        return RationalFunction(self.num**e, self.den**e)

    def __eq__(self, other) -> bool:
        try:
            other = _coerce_rational(other)
        except TypeError:
            return NotImplemented
        # a/b == c/d  iff  a*d - c*b == 0, avoiding any gcd requirement.
        return self.num * other.den == other.num * self.den

    def __hash__(self):
        raise TypeError("RationalFunction is not hashable")

    # -- analysis ----------------------------------------------------------

    def derivative(self, v: Var) -> "RationalFunction":
        return RationalFunction(
            self.num.derivative(v) * self.den - self.num * self.den.derivative(v),
            self.den * self.den,
        )

    def substitute(self, sigma: Mapping[Var, object]) -> "RationalFunction":
        return self.num.substitute(sigma) / self.den.substitute(sigma)

    def eval(self, point: Mapping[Var, Number]):
        d = self.den.eval(point)
        if d == 0:
            raise DenominatorVanished(f"denominator vanished at {dict(point)}")
        return self.num.eval(point) / d

    def __str__(self) -> str:
        if self.den == Polynomial.const(1):
            return str(self.num)
        return f"({self.num}) / ({self.den})"

    def __repr__(self) -> str:
        return f"<RationalFunction {self}>"


def _common_monomial(*polys: Polynomial) -> Monomial:
    shared: dict[Var, int] | None = None
    for p in polys:
        for m, _ in p.terms():
            exps = dict(m.factors)
            if shared is None:
                shared = exps
            else:
                shared = {
                    v: min(e, exps.get(v, 0)) for v, e in shared.items() if exps.get(v, 0)
                }
            if not shared:
                return _ONE
    return Monomial.from_pairs((shared or {}).items())


def _strip_monomial(p: Polynomial, m: Monomial) -> Polynomial:
    out: dict[Monomial, Fraction] = {}
    for mm, c in p.terms():
        out[Monomial.from_pairs([(v, e - m.exponent(v)) for v, e in mm.factors])] = c
    q = Polynomial.__new__(Polynomial)
    q._terms = out
    return q


def _cancel(n: Polynomial, d: Polynomial) -> tuple[Polynomial, Polynomial]:
    if d.is_constant():
        return n, d
    q = try_divide(n, d)
    if q is not None:
        return q, Polynomial.const(1)
    return n, d


def collect_linear(
    p: Polynomial, vars: set[Var] | frozenset[Var]
) -> tuple[dict[Var, Polynomial], Polynomial]:
    """Split ``p = sum_v coeff[v]*v + remainder`` for jointly linear ``vars``.

    Raises NotLinear if any monomial of ``p`` has joint degree >= 2 in
    ``vars``.  Coefficients and remainder are free of ``vars``.
    """
    vs = frozenset(vars)
    coeffs: dict[Var, Polynomial] = {}
    remainder = Polynomial()
    for m, c in p.terms():
        deg = m.degree_in(vs)
        if deg == 0:
            remainder = remainder + Polynomial.monomial(m, c)
        elif deg == 1:
            v = next(w for w in m.vars() if w in vs)
            coeffs.setdefault(v, Polynomial())
            coeffs[v] = coeffs[v] + Polynomial.monomial(m.without(v), c)
        else:
            raise NotLinear(f"monomial {m} has degree {deg} in {sorted(vs)}")
    return coeffs, remainder
