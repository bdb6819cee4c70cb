"""Explicit birational maps from implicit schemes, and their numerics.

Because the scheme equations are jointly linear in the highest shifts, they
solve to rational update rules: the map on the nN-dimensional window state
(x_1^(0)..x_N^(0), ..., x_1^(n-1)..x_N^(n-1)) copies the upper blocks down
and fills the last block with the solved highest shifts.  Linearity in the
lowest shifts gives the inverse the same way, so the map is birational.

Symbolic solutions (Cramer on the polynomial coefficient matrix) are built
for N <= 3; numeric stepping always goes through an LU solve of the
evaluated N x N system, so larger systems iterate fine without closed
forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import linalg
from .poly import Polynomial, RationalFunction, Var, collect_linear, x
from .scheme import ImplicitScheme, PolyOdeSystem, discretize

SYMBOLIC_DIM_LIMIT = 3  # Cramer's rule is built only for N at most this


class ZeroDeterminant(ArithmeticError):
    """The symbolic coefficient determinant of the linear solve is zero."""


class SingularStep(ArithmeticError):
    """A denominator or linear system became singular at a concrete state."""

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class NotFixedPoint(ValueError):
    """linearize_at was called at a point the map does not fix."""


class NoConvergence(ArithmeticError):
    """Root iteration failed to reach the target residual."""


class BirationalMap:
    """Explicit forward/backward rational update rules on the window state.

    ``state_vars`` fixes the coordinate order; ``forward``/``backward`` are
    tuples of RationalFunctions in those variables (plus h and any unbound
    parameters), or None above the symbolic dimension limit.  Instances are
    immutable in use; a small evaluation cache is built lazily.
    """

    def __init__(
        self,
        scheme: ImplicitScheme,
        forward: tuple[RationalFunction, ...] | None,
        backward: tuple[RationalFunction, ...] | None,
        top_system: tuple[list[list[Polynomial]], list[Polynomial]],
        bottom_system: tuple[list[list[Polynomial]], list[Polynomial]],
    ):
        self.scheme = scheme
        self.n = scheme.order
        self.N = scheme.dim
        self.dim = self.n * self.N
        self.state_vars = tuple(
            x(j, k) for k in range(self.n) for j in range(1, self.N + 1)
        )
        self.forward = forward
        self.backward = backward
        self._top = top_system
        self._bottom = bottom_system
        self._cache: dict = {}

    # -- construction helpers ------------------------------------------------

    def free_parameters(self) -> set[Var]:
        out: set[Var] = set()
        for e in self.scheme.equations:
            out.update(v for v in e.vars() if v.is_param)
        out.discard(self.scheme.step)
        return out

    def bind(self, values: Mapping[str, int | Fraction]) -> "BirationalMap":
        """Substitute exact rational values for named parameters."""
        sigma = {Var(name=k): Polynomial.const(Fraction(v)) for k, v in values.items()}
        bound = ImplicitScheme(
            self.scheme.order,
            self.scheme.dim,
            self.scheme.step,
            tuple(e.subs_poly(sigma) for e in self.scheme.equations),
        )
        return solve_forward(bound)

    def __str__(self) -> str:
        rows = []
        for v, rf in zip(self.state_vars, self.forward or ()):
            rows.append(f"{v} -> {rf}")
        return "\n".join(rows) if rows else f"<numeric map, dim {self.dim}>"

    # -- numeric stepping ------------------------------------------------------

    def _stepper(self, h: float, direction: str) -> "_Stepper":
        key = (direction, float(h))
        st = self._cache.get(key)
        if st is None:
            st = _Stepper(self, h, direction)
            self._cache[key] = st
        return st


def solve_forward(scheme: ImplicitScheme) -> BirationalMap:
    """Solve the scheme for the highest and lowest shifts.

    Raises NotLinear if a joint-linearity assumption fails and
    ZeroDeterminant if the symbolic coefficient determinant vanishes
    identically (N <= 3 only; larger N skips the closed form).
    """
    n, N = scheme.order, scheme.dim
    top_vars = scheme.shift_vars(n)
    bottom_vars = scheme.shift_vars(0)
    top = _linear_system(scheme.equations, top_vars, [x(j, n) for j in range(1, N + 1)])
    bottom = _linear_system(
        scheme.equations, bottom_vars, [x(j, 0) for j in range(1, N + 1)]
    )
    forward = backward = None
    if N <= SYMBOLIC_DIM_LIMIT:
        solved_top = _cramer(*top)
        solved_bottom = _cramer(*bottom)
        shift_up = tuple(
            RationalFunction(Polynomial.var(x(j, k)))
            for k in range(1, n)
            for j in range(1, N + 1)
        )
        forward = shift_up + tuple(solved_top)
        # The lowest-shift solution lives on levels 1..n; rename to 0..n-1.
        down = tuple(
            RationalFunction(r.num.shift_states(-1), r.den.shift_states(-1))
            for r in solved_bottom
        )
        shift_down = tuple(
            RationalFunction(Polynomial.var(x(j, k)))
            for k in range(0, n - 1)
            for j in range(1, N + 1)
        )
        backward = down + shift_down
    return BirationalMap(scheme, forward, backward, top, bottom)


def _linear_system(equations, vars_set, var_order):
    A: list[list[Polynomial]] = []
    r: list[Polynomial] = []
    for e in equations:
        coeffs, rem = collect_linear(e, vars_set)
        A.append([coeffs.get(v, Polynomial()) for v in var_order])
        r.append(rem)
    return A, r


def _cramer(A: list[list[Polynomial]], r: list[Polynomial]) -> list[RationalFunction]:
    det = linalg.det_poly(A)
    if det.is_zero():
        raise ZeroDeterminant("coefficient determinant is identically zero")
    out = []
    for j in range(len(A)):
        col = [[-r[i] if c == j else A[i][c] for c in range(len(A))] for i in range(len(A))]
        out.append(RationalFunction(linalg.det_poly(col), det))
    return out


class _Stepper:
    """Compiled float evaluation of one map direction at a fixed h."""

    def __init__(self, m: BirationalMap, h: float, direction: str):
        self.m = m
        self.h = float(h)
        free = m.free_parameters()
        if free:
            raise ValueError(f"parameters must be bound before stepping: {sorted(map(str, free))}")
        n, N = m.n, m.N
        consts = {m.scheme.step: self.h}
        if direction == "forward":
            A, r = m._top
            slots = {v: i for i, v in enumerate(m.state_vars)}
        else:
            A, r = m._bottom
            # Backward solves for level 0 given levels 1..n: the state vector
            # is read as those upper levels.
            slots = {
                x(j, k + 1): k * N + (j - 1) for k in range(n) for j in range(1, N + 1)
            }
        self.A = [[_compile(p, slots, consts) for p in row] for row in A]
        self.r = [_compile(p, slots, consts) for p in r]
        self.direction = direction

    def solved_block(self, state: Sequence[float]) -> list[float]:
        N = self.m.N
        try:
            return self._solved_block(state)
        except OverflowError:
            raise SingularStep(f"float overflow at state {list(state)}") from None

    def _solved_block(self, state: Sequence[float]) -> list[float]:
        N = self.m.N
        if N == 1:
            den = _ceval(self.A[0][0], state)
            num = -_ceval(self.r[0], state)
            if den == 0.0 or not math.isfinite(num / den if den else math.inf):
                raise SingularStep(f"vanishing denominator at state {list(state)}")
            return [num / den]
        A = np.array([[_ceval(c, state) for c in row] for row in self.A], dtype=float)
        rhs = np.array([-_ceval(c, state) for c in self.r], dtype=float)
        try:
            sol = np.linalg.solve(A, rhs)  # LU with partial pivoting
        except np.linalg.LinAlgError:
            raise SingularStep(
                f"singular linear system at state {list(state)}",
                condition=float(np.linalg.cond(A)),
            ) from None
        if not np.all(np.isfinite(sol)):
            raise SingularStep(
                f"non-finite solve at state {list(state)}",
                condition=float(np.linalg.cond(A)),
            )
        return list(map(float, sol))

    def __call__(self, state: Sequence[float]) -> list[float]:
        N = self.m.N
        block = self.solved_block(state)
        if self.direction == "forward":
            return [float(v) for v in state[N:]] + block
        return block + [float(v) for v in state[:-N]]


def _compile(p: Polynomial, slots: dict[Var, int], consts: Mapping[Var, float]):
    """Flatten a polynomial to (coeff, ((slot, exp), ...)) terms for fast eval."""
    terms = []
    for m, c in p.terms():
        coeff = float(c)
        idx = []
        for v, e in m.factors:
            if v in slots:
                idx.append((slots[v], e))
            elif v in consts:
                coeff *= consts[v] ** e
            else:
                raise ValueError(f"unbound variable {v} in numeric evaluation")
        terms.append((coeff, tuple(idx)))
    return terms


def _ceval(terms, state: Sequence[float]) -> float:
    total = 0.0
    for coeff, idx in terms:
        t = coeff
        for i, e in idx:
            t *= state[i] ** e
        total += t
    return total


def step(m: BirationalMap, state: Sequence[float], h: float) -> list[float]:
    """One forward application of the map at step size h (float path)."""
    return m._stepper(h, "forward")(state)


def step_back(m: BirationalMap, state: Sequence[float], h: float) -> list[float]:
    """One application of the inverse map (solved from the lowest shifts)."""
    return m._stepper(h, "backward")(state)


def eval_exact(
    m: BirationalMap, state: Sequence[Fraction | int], h: Fraction
) -> list[Fraction]:
    """Exact-rational forward step through the symbolic solution."""
    if m.forward is None:
        raise ValueError("no symbolic forward map available")
    point: dict[Var, Fraction] = {v: Fraction(s) for v, s in zip(m.state_vars, state)}
    point[m.scheme.step] = Fraction(h)
    return [rf.eval(point) for rf in m.forward]


@dataclass
class Orbit:
    h: float
    points: list[list[float]]
    status: str = "complete"
    singular_step: int | None = None

    def column(self, i: int) -> list[float]:
        return [p[i] for p in self.points]


def iterate(m: BirationalMap, state: Sequence[float], h: float, steps: int) -> Orbit:
    """Iterate the map; a singular step ends the orbit with a status, not an
    exception, since birational maps legitimately have indeterminacy loci."""
    st = m._stepper(h, "forward")
    points = [[float(v) for v in state]]
    cur = points[0]
    for k in range(steps):
        try:
            cur = st(cur)
        except SingularStep:
            return Orbit(h, points, status=f"singular-at-step {k + 1}", singular_step=k + 1)
        points.append(cur)
    return Orbit(h, points)


def scheme_residual(m: BirationalMap, window: Sequence[float], h: float) -> float:
    """Relative residual of the scheme equations on an (n+1)-level window.

    ``window`` holds N values per level, levels 0..n; the residual is
    normalized by the largest term magnitude so it is scale-free.
    """
    n, N = m.n, m.N
    slots = {x(j, k): k * N + (j - 1) for k in range(n + 1) for j in range(1, N + 1)}
    consts = {m.scheme.step: float(h)}
    worst = 0.0
    for e in m.scheme.equations:
        terms = _compile(e, slots, consts)
        total = 0.0
        scale = 0.0
        for coeff, idx in terms:
            t = coeff
            for i, ee in idx:
                t *= window[i] ** ee
            total += t
            scale = max(scale, abs(t))
        worst = max(worst, abs(total) / max(scale, 1.0))
    return worst


def orbit_residuals(m: BirationalMap, orbit: Orbit) -> list[float]:
    """Scheme residuals along consecutive orbit windows."""
    N = m.N
    out = []
    for a, b in zip(orbit.points, orbit.points[1:]):
        window = list(a) + list(b[-N:])
        out.append(scheme_residual(m, window, orbit.h))
    return out


# -- derivatives and spectra ----------------------------------------------------


def jacobian(
    m: BirationalMap,
) -> tuple[list[list[RationalFunction]], RationalFunction]:
    """Exact Jacobian matrix of the forward map and its determinant."""
    if m.forward is None:
        raise ValueError("no symbolic forward map available")
    J = [[rf.derivative(v) for v in m.state_vars] for rf in m.forward]
    return J, linalg.det_rational(J)


def linearize_at(
    m: BirationalMap, p: Sequence[float], h: float, tol: float = 1e-9
) -> np.ndarray:
    """Numeric Jacobian at an (approximate) fixed point of the map."""
    image = step(m, p, h)
    err = max(abs(a - b) for a, b in zip(image, p))
    if err > tol:
        raise NotFixedPoint(f"|m(p) - p| = {err:.3e} exceeds {tol}")
    J, _ = jacobian(m)
    point: dict[Var, float] = {v: float(s) for v, s in zip(m.state_vars, p)}
    point[m.scheme.step] = float(h)
    return np.array([[rf.eval(point) for rf in row] for row in J], dtype=float)


@dataclass
class SpectrumReport:
    fixed_point: list[float]
    matrix: np.ndarray
    char_coeffs: list[float]  # monic, highest power first
    roots: list[complex]
    palindromic_defect: float
    classification: list[str]  # per root: "inside" | "unit" | "outside"
    residual: float
    unit_tol: float = 1e-7


def char_poly_and_roots(
    M: np.ndarray,
    fixed_point: Sequence[float] | None = None,
    unit_tol: float = 1e-7,
) -> SpectrumReport:
    """Characteristic polynomial via Faddeev-LeVerrier, roots via
    Durand-Kerner with deterministic starting points on a scaled circle."""
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if d > 8:
        raise ValueError("spectrum helper is intended for dimension <= 8")
    coeffs = [1.0]
    Mk = np.array(M)
    for k in range(1, d + 1):
        ck = -np.trace(Mk) / k
        coeffs.append(float(ck))
        if k < d:
            Mk = M @ (Mk + ck * np.eye(d))
    roots, residual = _durand_kerner(coeffs)
    scale = max(abs(c) for c in coeffs)
    defect = max(abs(coeffs[k] - coeffs[d - k]) for k in range(d + 1)) / scale
    classes = []
    for z in roots:
        r = abs(z)
        if abs(r - 1.0) <= unit_tol:
            classes.append("unit")
        elif r < 1.0:
            classes.append("inside")
        else:
            classes.append("outside")
    return SpectrumReport(
        fixed_point=list(fixed_point) if fixed_point is not None else [],
        matrix=M,
        char_coeffs=coeffs,
        roots=roots,
        palindromic_defect=float(defect),
        classification=classes,
        residual=residual,
        unit_tol=unit_tol,
    )


def _polyval(coeffs: Sequence[float], z: complex) -> complex:
    out = 0j
    for c in coeffs:
        out = out * z + c
    return out


def _durand_kerner(
    coeffs: Sequence[float], tol: float = 1e-12, max_iter: int = 10_000
) -> tuple[list[complex], float]:
    d = len(coeffs) - 1
    if d == 0:
        return [], 0.0
    scale = max(1.0, max(abs(c) for c in coeffs))
    radius = 1.0 + max(abs(c) for c in coeffs[1:]) / abs(coeffs[0])
    # Offset angle keeps the start away from real-axis root symmetry.
    roots = [
        radius * complex(math.cos(2 * math.pi * k / d + 0.4), math.sin(2 * math.pi * k / d + 0.4))
        for k in range(d)
    ]
    for _ in range(max_iter):
        new_roots = []
        moved = 0.0
        for k, z in enumerate(roots):
            denom = complex(coeffs[0])
            for j, w in enumerate(roots):
                if j != k:
                    denom *= z - w
            if denom == 0:
                denom = 1e-300
            dz = _polyval(coeffs, z) / denom
            new_roots.append(z - dz)
            moved = max(moved, abs(dz))
        roots = new_roots
        residual = max(abs(_polyval(coeffs, z)) for z in roots) / scale
        if residual <= tol or moved < 1e-16:
            return sorted(roots, key=lambda z: (round(z.real, 12), round(z.imag, 12))), residual
    if residual <= 1e-8:
        return sorted(roots, key=lambda z: (round(z.real, 12), round(z.imag, 12))), residual
    raise NoConvergence(f"root iteration stalled at residual {residual:.3e}")


# -- continuum-limit validation ---------------------------------------------------


@dataclass
class ConvergenceReport:
    hs: list[float]
    errors: list[float]
    slope: float
    excluded: list[float] = field(default_factory=list)
    oracle_gap: float = 0.0


def first_order_field(sys: PolyOdeSystem) -> Callable[[np.ndarray], np.ndarray]:
    """Vector field of the equivalent first-order system on (x, x', ..)."""
    n, N = sys.order, sys.dim
    free = set()
    for p in sys.rhs:
        free.update(v for v in p.vars() if v.is_param)
    if free:
        raise ValueError(f"parameters must be bound: {sorted(map(str, free))}")
    slots = {x(j): j - 1 for j in range(1, N + 1)}
    compiled = [_compile(p, slots, {}) for p in sys.rhs]

    def field(y: np.ndarray) -> np.ndarray:
        out = np.empty_like(y)
        out[: (n - 1) * N] = y[N:]
        head = y[:N]
        for i, terms in enumerate(compiled):
            out[(n - 1) * N + i] = _ceval(terms, head)
        return out

    return field


def _rk4_to(field, y: np.ndarray, t0: float, t1: float, max_step: float) -> np.ndarray:
    span = t1 - t0
    if span <= 0:
        return y
    m = max(1, math.ceil(span / max_step))
    dt = span / m
    for _ in range(m):
        k1 = field(y)
        k2 = field(y + 0.5 * dt * k1)
        k3 = field(y + 0.5 * dt * k2)
        k4 = field(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def reference_solution(
    sys: PolyOdeSystem,
    init: Sequence[float],
    times: Sequence[float],
    max_step: float,
    check: bool = True,
) -> list[np.ndarray]:
    """High-accuracy samples of the continuous solution at given times.

    Classical one-step 4th-order integration at ``max_step``; when ``check``
    is set the run is repeated at half the step and the two must agree,
    which guards against an untrustworthy oracle.
    """
    init = np.asarray(init, dtype=float)
    samples = _rk4_samples(sys, init, times, max_step)
    if check and times:
        finer = _rk4_samples(sys, init, times, max_step / 2.0)
        gap = max(float(np.max(np.abs(a - b))) for a, b in zip(samples, finer))
        scale = max(1.0, max(float(np.max(np.abs(s))) for s in samples))
        if gap / scale > 1e-8:
            raise NoConvergence(f"reference oracle self-check gap {gap:.3e}")
        samples = finer
    return samples


def _rk4_samples(sys, init, times, max_step):
    field = first_order_field(sys)
    out = []
    y = np.asarray(init, dtype=float).copy()
    t = 0.0
    for tk in times:
        y = _rk4_to(field, y, t, tk, max_step)
        t = tk
        out.append(y.copy())
    return out


def convergence_order(
    sys: PolyOdeSystem,
    init: Sequence[float],
    T: float,
    hs: Sequence[float],
    oracle_step: float | None = None,
) -> ConvergenceReport:
    """Measured order of the scheme against the high-accuracy oracle.

    The window is seeded from the continuous initial-value problem (initial
    position and derivatives), the map is iterated to time T, and the slope
    of log(error) against log(h) is fit by least squares.  Steps where the
    map hits a singularity are excluded and reported.
    """
    n, N = sys.order, sys.dim
    m = solve_forward(discretize(sys))
    if oracle_step is None:
        oracle_step = min(hs) / 100.0
    ref_T = reference_solution(sys, init, [T], oracle_step)[0]
    hs_used: list[float] = []
    errors: list[float] = []
    excluded: list[float] = []
    for h in hs:
        window_times = [k * h for k in range(n)]
        window_states = reference_solution(sys, init, window_times, oracle_step, check=False)
        state = [float(s[j]) for s in window_states for j in range(N)]
        steps = round(T / h)
        orbit = iterate(m, state, h, steps)
        if orbit.status != "complete":
            excluded.append(h)
            continue
        # After s steps the first block sits at time s*h.
        err = max(abs(orbit.points[-1][j] - ref_T[j]) for j in range(N))
        hs_used.append(h)
        errors.append(err)
    positive = [(h, e) for h, e in zip(hs_used, errors) if e > 0]
    if len(positive) >= 2:
        slope = float(
            np.polyfit(
                np.log([h for h, _ in positive]), np.log([e for _, e in positive]), 1
            )[0]
        )
    else:
        slope = float("nan")
    return ConvergenceReport(hs=hs_used, errors=errors, slope=slope, excluded=excluded)
