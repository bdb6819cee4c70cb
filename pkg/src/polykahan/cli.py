"""Command-line front end: discretize systems, iterate orbits, search for
Darboux polynomials, and analyze the beam cases, emitting CSV, SVG and text
reports.

Polynomial text syntax: a term is a product of factors joined by ``*``;
``x3`` is state component 3 at shift 0, each apostrophe shifts forward
(``x1''`` is component 1 at shift +2), each leading underscore shifts
backward (``_x1`` is shift -1), and any other identifier (``a``, ``h``) is
a parameter.  Exponents use a caret (``x1^3``) or, after apostrophes, bare
digits (``x1'2``).  Coefficients are integers, fractions (``3/2``) or
decimals (``0.1``, read exactly).

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Values with commas are vectors (beam weight vectors, initial windows);
unrecognized numeric keys become system parameters.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import cases, darboux, linalg, maps
from .poly import DenominatorVanished, Monomial, Polynomial, Var, param, x
from .scheme import H, DegreeTooHigh, ImplicitScheme, PolyOdeSystem, discretize


class ParseError(ValueError):
    def __init__(self, reason: str, line: int | None = None):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Polynomial text parser
# ---------------------------------------------------------------------------

_STATE_RE = re.compile(r"^(_*)x(\d+)('*)(?:\^(\d+)|(\d+))?$")
_PARAM_RE = re.compile(r"^([A-Za-z][A-Za-z0-9_]*)(?:\^(\d+))?$")
_NUMBER_RE = re.compile(r"^(\d+(?:/\d+)?|\d*\.\d+)$")


def parse_poly(text: str, line: int | None = None) -> Polynomial:
    """Parse the polynomial text syntax described in the module docstring."""
    compact = text.replace(" ", "").replace("\t", "")
    if not compact:
        raise ParseError("empty polynomial", line)
    out = Polynomial()
    for chunk in re.findall(r"[+-]?[^+-]+", compact):
        sign = 1
        body = chunk
        while body and body[0] in "+-":
            if body[0] == "-":
                sign = -sign
            body = body[1:]
        if not body:
            raise ParseError(f"dangling sign in {chunk!r}", line)
        coeff = Fraction(sign)
        factors: list[tuple[Var, int]] = []
        for factor in body.split("*"):
            if not factor:
                raise ParseError(f"empty factor in term {chunk!r}", line)
            m = _NUMBER_RE.match(factor)
            if m:
                coeff *= Fraction(factor)
                continue
            m = _STATE_RE.match(factor)
            if m:
                unders, comp, ticks, exp_caret, exp_bare = m.groups()
                # bare digits can only follow apostrophes; otherwise the
                # greedy component match has already absorbed them
                exp = int(exp_caret or exp_bare or 1)
                factors.append((x(int(comp), len(ticks) - len(unders)), exp))
                continue
            m = _PARAM_RE.match(factor)
            if m:
                name, exp = m.groups()
                factors.append((param(name), int(exp or 1)))
                continue
            raise ParseError(f"cannot parse factor {factor!r}", line)
        out = out + Polynomial.monomial(Monomial.from_pairs(factors), coeff)
    return out


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

PRESETS = ("lv", "quartic", "weierstrass", "beam-sym", "beam-lag")

_KNOWN_KEYS = {
    "preset",
    "rhs",
    "order",
    "dim",
    "h",
    "steps",
    "init",
    "init_ode",
    "out",
    "darboux_maxdeg",
    "epsilon",
    "seed",
    "plot",
}


@dataclass
class RunConfig:
    preset: str | None = None
    rhs_text: list[str] = field(default_factory=list)
    order: int | None = None
    dim: int | None = None
    params: dict[str, Fraction] = field(default_factory=dict)
    h: Fraction = Fraction(1, 10)
    steps: int = 1000
    init: list[float] | None = None
    init_ode: list[float] | None = None
    out: str = "."
    darboux_maxdeg: int = 4
    epsilon: int = 1
    alpha: tuple | None = None
    beta: tuple | None = None
    seed: int = 7
    plot: tuple[int, int] = (0, 1)

    def validate(self):
        if bool(self.preset) == bool(self.rhs_text):
            raise ValidationError("exactly one of 'preset' and 'rhs' is required")
        if self.preset and self.preset not in PRESETS:
            raise ValidationError(f"unknown preset {self.preset!r}; choose from {PRESETS}")
        if self.rhs_text and self.order is None:
            raise ValidationError("inline systems need 'order'")
        if self.h <= 0:
            raise ValidationError("h must be positive")
        if self.steps < 0:
            raise ValidationError("steps must be >= 0")
        if self.epsilon not in (1, -1):
            raise ValidationError("epsilon must be +1 or -1")
        for name, vec, size in (("alpha", self.alpha, 6), ("beta", self.beta, 4)):
            if vec is not None:
                if len(vec) != size:
                    raise ValidationError(f"{name} needs {size} entries")
                if sum(vec) != 1:
                    raise ValidationError(f"{name} entries must sum to 1")


def _fraction(value: str, line: int) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"expected a number, got {value!r}", line) from None


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not value:
            raise ParseError(f"missing value for {key!r}", lineno)
        if key == "preset":
            cfg.preset = value
        elif key == "rhs":
            cfg.rhs_text = [part.strip() for part in value.split(";") if part.strip()]
        elif key == "order":
            cfg.order = int(_fraction(value, lineno))
        elif key == "dim":
            cfg.dim = int(_fraction(value, lineno))
        elif key == "h":
            cfg.h = _fraction(value, lineno)
        elif key == "steps":
            cfg.steps = int(_fraction(value, lineno))
        elif key == "init":
            cfg.init = [float(_fraction(v.strip(), lineno)) for v in value.split(",")]
        elif key == "init_ode":
            cfg.init_ode = [float(_fraction(v.strip(), lineno)) for v in value.split(",")]
        elif key == "out":
            cfg.out = value
        elif key == "darboux_maxdeg":
            cfg.darboux_maxdeg = int(_fraction(value, lineno))
        elif key == "epsilon":
            cfg.epsilon = int(_fraction(value, lineno))
        elif key == "seed":
            cfg.seed = int(_fraction(value, lineno))
        elif key == "plot":
            parts = [int(_fraction(v.strip(), lineno)) for v in value.split(",")]
            if len(parts) != 2:
                raise ParseError("plot needs two coordinate indices", lineno)
            cfg.plot = (parts[0], parts[1])
        elif key in ("alpha", "beta") and "," in value:
            vec = tuple(_fraction(v.strip(), lineno) for v in value.split(","))
            setattr(cfg, key, vec)
        elif re.fullmatch(r"[A-Za-z][A-Za-z0-9_]*", key):
            cfg.params[key] = _fraction(value, lineno)
        else:
            raise ParseError(f"unrecognized key {key!r}", lineno)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Case assembly
# ---------------------------------------------------------------------------


@dataclass
class CaseBundle:
    name: str
    system: PolyOdeSystem | None
    scheme: ImplicitScheme
    map: maps.BirationalMap  # h symbolic
    invariant_pair: tuple[Polynomial, Polynomial] | None = None  # (density, partner)
    default_init: list[float] | None = None
    beam_sym: cases.BeamSymmetricCase | None = None
    beam_lag: cases.BeamLagrangianCase | None = None


def _beam_params(cfg: RunConfig) -> cases.BeamParams:
    delta = cfg.params.get("delta", Fraction(1, 4))
    if "a" in cfg.params or "b" in cfg.params or "c" in cfg.params:
        return cases.BeamParams(
            cfg.params.get("a", 1),
            cfg.params.get("b", -2),
            cfg.params.get("c", Fraction(3, 4)),
            cfg.h,
            cfg.alpha or cases.ONSITE_ALPHA,
            cfg.beta or cases.ONSITE_BETA,
        )
    return cases.BeamParams.normal_form(
        cfg.epsilon, delta, cfg.h, cfg.alpha or cases.ONSITE_ALPHA, cfg.beta or cases.ONSITE_BETA
    )


def build_case(cfg: RunConfig) -> CaseBundle:
    if cfg.rhs_text:
        rhs = tuple(parse_poly(t) for t in cfg.rhs_text)
        dim = cfg.dim or len(rhs)
        sys_ = PolyOdeSystem(cfg.order, dim, rhs)
        sch = discretize(sys_)
        m = maps.solve_forward(sch)
        if cfg.params:
            m = m.bind(cfg.params)
        return CaseBundle("inline", sys_, sch, m)
    if cfg.preset == "lv":
        case = cases.lotka_volterra(cfg.params.get("alpha", Fraction(1)))
        return CaseBundle("lv", case.system, case.scheme, case.map, default_init=[1.2, 0.9])
    if cfg.preset == "quartic":
        qp = cases.QuarticParams(
            cfg.params.get("a", 1),
            cfg.params.get("b", 2),
            cfg.params.get("c", 3),
            cfg.params.get("d", 5),
            cfg.h,
        )
        case = cases.quartic_oscillator(qp)
        return CaseBundle(
            "quartic",
            case.system,
            case.scheme,
            case.map,
            invariant_pair=(case.density_poly, case.invariant_poly),
            default_init=[0.31, 0.30],
        )
    if cfg.preset == "weierstrass":
        # d < 0 gives a stable equilibrium at x = sqrt(-d/b); the default
        # orbit circles it, so the conserved-ratio drift is meaningful.
        case = cases.kahan_weierstrass(
            cfg.params.get("b", 1), cfg.params.get("d", -1), cfg.h
        )
        return CaseBundle(
            "weierstrass",
            case.system,
            case.additive_scheme,
            case.additive_map,
            invariant_pair=(case.pencil.P1, case.pencil.P2),
            default_init=[1.05, 1.1],
        )
    p = _beam_params(cfg)
    w0 = 1.1
    if cfg.preset == "beam-sym":
        case = cases.beam_symmetric(p)
        return CaseBundle(
            "beam-sym", case.system, case.scheme, case.map,
            default_init=[w0] * 4, beam_sym=case,
        )
    case = cases.beam_lagrangian(p)
    sch = ImplicitScheme(4, 1, H, (case.euler_lagrange.shift_states(2),))
    return CaseBundle(
        "beam-lag", None, sch, case.map, default_init=[w0] * 4, beam_lag=case,
    )


# ---------------------------------------------------------------------------
# Artifact writers
# ---------------------------------------------------------------------------


def state_names(m: maps.BirationalMap) -> list[str]:
    return [f"x{v.comp}_{v.shift}" for v in m.state_vars]


def write_csv(path: Path, orbit: maps.Orbit, names: list[str]):
    lines = ["step," + ",".join(names)]
    for k, pt in enumerate(orbit.points):
        lines.append(str(k) + "," + ",".join(repr(v) for v in pt))
    path.write_text("\n".join(lines) + "\n")


def write_svg(path: Path, xs: list[float], ys: list[float]):
    width, height, margin = 640.0, 480.0, 40.0
    if not xs:
        body = ""
    else:
        xmin, xmax = min(xs), max(xs)
        ymin, ymax = min(ys), max(ys)
        xspan = (xmax - xmin) or 1.0
        yspan = (ymax - ymin) or 1.0

        def sx(v):
            return margin + (v - xmin) / xspan * (width - 2 * margin)

        def sy(v):
            return height - margin - (v - ymin) / yspan * (height - 2 * margin)

        pts = " ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in zip(xs, ys))
        body = (
            f'  <polyline points="{pts}" fill="none" stroke="#1f5fa8" stroke-width="0.8"/>\n'
        )
        if len(xs) <= 200:
            dots = "".join(
                f'  <circle cx="{sx(a):.3f}" cy="{sy(b):.3f}" r="1.6" fill="#a83232"/>\n'
                for a, b in zip(xs, ys)
            )
            body += dots
    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">\n'
        f'  <rect width="100%" height="100%" fill="white"/>\n'
        f"{body}</svg>\n"
    )
    path.write_text(svg)


# ---------------------------------------------------------------------------
# Analyses feeding the report
# ---------------------------------------------------------------------------


def orbit_section(bundle: CaseBundle, cfg: RunConfig, out: Path) -> list[str]:
    init = cfg.init or bundle.default_init
    if init is None:
        raise ValidationError("this run needs 'init' (window values)")
    if cfg.init_ode is not None:
        sysv = bundle.system
        if sysv is None:
            raise ValidationError("init_ode needs a polynomial system")
        n = sysv.order
        times = [k * float(cfg.h) for k in range(n)]
        samples = maps.reference_solution(sysv, cfg.init_ode, times, float(cfg.h) / 100.0)
        init = [float(s[j]) for s in samples for j in range(sysv.dim)]
    if len(init) != bundle.map.dim:
        raise ValidationError(
            f"init needs {bundle.map.dim} values, got {len(init)}"
        )
    orbit = maps.iterate(bundle.map, init, float(cfg.h), cfg.steps)
    names = state_names(bundle.map)
    write_csv(out / "orbit.csv", orbit, names)
    i, j = cfg.plot
    write_svg(out / "phase.svg", orbit.column(i), orbit.column(j))
    lines = [
        "[orbit]",
        f"initial = {init}",
        f"h = {float(cfg.h)!r}",
        f"steps requested = {cfg.steps}",
        f"points = {len(orbit.points)}",
        f"status = {orbit.status}",
    ]
    if orbit.points[1:]:
        res = maps.orbit_residuals(bundle.map, orbit)
        lines.append(f"max scheme residual = {max(res)!r}")
    if bundle.invariant_pair is not None and orbit.points:
        density, partner = bundle.invariant_pair
        vals = []
        hval = float(cfg.h)
        for pt in orbit.points:
            point = {v: val for v, val in zip(bundle.map.state_vars, pt)}
            point[H] = hval
            try:
                num = partner.eval(point)
                den = density.eval(point)
                if den == 0:
                    continue
                vals.append(num / den)
            except KeyError:
                break
        if vals:
            k0 = vals[0]
            drift = max(abs(v - k0) for v in vals) / max(abs(k0), 1e-300)
            lines.append(f"conserved ratio at start = {k0!r}")
            lines.append(f"conserved ratio max relative drift = {drift!r}")
    return lines


def darboux_section(bundle: CaseBundle, cfg: RunConfig) -> list[str]:
    m = bundle.map.bind({"h": cfg.h, **bundle_params_for_bind(bundle, cfg)})
    certs = darboux.find_darboux(m, cfg.darboux_maxdeg)
    lines = [
        "[darboux]",
        f"degree bound = {cfg.darboux_maxdeg}",
        f"solution space dimension = {len(certs)}",
    ]
    for k, cert in enumerate(certs):
        lines.append(f"P[{k}] = {cert.to_text()}")
        lines.append(f"P[{k}] witness identically zero = {cert.valid}")
    if len(certs) >= 2:
        try:
            integral = darboux.first_integral(certs[0], certs[1])
            lines.append(f"first integral P[1]/P[0] = {integral}")
        except darboux.CofactorMismatch as e:
            lines.append(f"first integral check failed: {e}")
        measure = darboux.invariant_measure(certs[0])
        lines.append(f"invariant measure = {measure}")
    return lines


def bundle_params_for_bind(bundle: CaseBundle, cfg: RunConfig) -> dict:
    # Preset systems fold their numeric parameters into the ring already;
    # inline systems may still carry named parameters.
    free = {v.name for v in bundle.map.free_parameters()}
    return {k: v for k, v in cfg.params.items() if k in free}


def beam_section(cfg: RunConfig) -> list[str]:
    p = _beam_params(cfg)
    lines = ["[beam]"]
    lines.append(f"load: a = {p.a}, b = {p.b}, c = {p.c}, h = {p.h}")
    sym_case = cases.beam_symmetric(p)
    measure = cases.beam_measure_check(sym_case, seed=cfg.seed)
    lines.append(f"shift-averaged: load symmetry G == H exact = {measure.symmetry_holds}")
    lines.append(f"shift-averaged: max |det - density ratio| rel = {measure.max_rel_gap!r}")
    lag_case = cases.beam_lagrangian(p)
    symp = cases.symplecticity_check(lag_case, seed=cfg.seed)
    lines.append(f"variational: symplectic defect = {symp.defect!r} over {symp.samples} states")
    delta = cfg.params.get("delta", Fraction(1, 4))
    try:
        for which in ("symmetric", "lagrangian"):
            rep = cases.beam_fixed_point_analysis(
                cfg.epsilon, delta, cfg.h, which,
                cfg.alpha or cases.ONSITE_ALPHA, cfg.beta or cases.ONSITE_BETA,
            )
            sp = rep.spectra[rep.primary]
            lines.append(f"{which}: fixed points w = {sorted(rep.fixed_points)}")
            lines.append(f"{which}: primary w* = {rep.primary!r}")
            lines.append(f"{which}: continuous growth rate = {rep.continuous_growth!r}")
            lines.append(f"{which}: characteristic coefficients = {[repr(c) for c in sp.char_coeffs]}")
            lines.append(f"{which}: palindromic defect = {sp.palindromic_defect!r}")
            roots = ", ".join(f"{z.real!r}{z.imag:+}j (|.|={abs(z)!r})" for z in sp.roots)
            lines.append(f"{which}: eigenvalues = {roots}")
            lines.append(f"{which}: classification = {sp.classification}")
            lines.append(f"{which}: exact residual at w* = {rep.exact_residual_ok}")
    except cases.NoRealFixedPoint as e:
        lines.append(f"fixed points: none ({e})")
    return lines


def scheme_section(bundle: CaseBundle) -> list[str]:
    lines = ["[scheme]"]
    for i, e in enumerate(bundle.scheme.equations):
        lines.append(f"E[{i}] = 0 with E[{i}] = {e}")
    if bundle.map.forward is not None:
        lines.append("[map]")
        for v, rf in zip(bundle.map.state_vars, bundle.map.forward):
            lines.append(f"{v} -> {rf}")
    return lines


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _load_config(args) -> RunConfig:
    if args.config:
        cfg = parse_config(Path(args.config).read_text())
    elif args.preset:
        cfg = RunConfig(preset=args.preset)
        cfg.validate()
    else:
        raise ValidationError("need --config or --preset")
    if args.out:
        cfg.out = args.out
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="polykahan",
        description="Discretize polynomial ODEs and analyze the resulting birational maps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("discretize", "print the implicit scheme and solved map"),
        ("orbit", "iterate the map; write orbit.csv, phase.svg, report.txt"),
        ("darboux", "search for Darboux polynomials of the planar map"),
        ("analyze-beam", "measure, symplecticity and spectra of the beam maps"),
        ("report", "run every analysis that applies to the configuration"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="path to a key = value configuration file")
        p.add_argument("--preset", choices=PRESETS, help="named case with defaults")
        p.add_argument("--out", help="output directory (default: current)")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
    except (ParseError, ValidationError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    try:
        return _run(args.command, cfg)
    except (ParseError, ValidationError, DegreeTooHigh) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (
        maps.SingularStep,
        maps.ZeroDeterminant,
        maps.NoConvergence,
        maps.NotFixedPoint,
        linalg.SingularMatrix,
        darboux.CofactorMismatch,
        cases.NoRealFixedPoint,
        DenominatorVanished,
        ZeroDivisionError,
    ) as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2


def _run(command: str, cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sections: list[str] = ["[config]"]
    sections.append(f"preset = {cfg.preset or 'inline'}")
    for k in sorted(cfg.params):
        sections.append(f"param {k} = {cfg.params[k]}")
    sections.append(f"h = {cfg.h}")
    needs_beam = cfg.preset in ("beam-sym", "beam-lag")
    bundle = None
    if command in ("discretize", "orbit", "darboux", "report") or not needs_beam:
        bundle = build_case(cfg)
    if command == "discretize":
        sections += scheme_section(bundle)
    elif command == "orbit":
        sections += orbit_section(bundle, cfg, out)
    elif command == "darboux":
        if bundle.map.dim != 2:
            raise ValidationError("darboux search needs a two-dimensional map")
        sections += darboux_section(bundle, cfg)
    elif command == "analyze-beam":
        if not needs_beam:
            raise ValidationError("analyze-beam needs a beam preset")
        sections += beam_section(cfg)
    else:  # report
        sections += scheme_section(bundle)
        sections += orbit_section(bundle, cfg, out)
        if bundle.map.dim == 2:
            sections += darboux_section(bundle, cfg)
        if needs_beam:
            sections += beam_section(cfg)
    report = "\n".join(sections) + "\n"
    (out / "report.txt").write_text(report)
    sys.stdout.write(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
