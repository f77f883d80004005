"""Numeric Lie brackets of scalar-state fields g(J(x)) and field-family constructors.

For scalar state the bracket is [f, g](x) = g'(x) f(x) - f'(x) g(x).  Spatial
derivatives use the central-difference policy of the costs module; nested
brackets are differentiated numerically again, with the step widened tenfold
per nesting level because each level's output carries the previous level's
finite-difference noise (a literal sqrt-widening per level overshoots the
truncation error of the Richardson stencil).

The constructors realize the derivative-generating families:

  make_generating_pair(N, c): (g1, g2) with length-N bracket -c J^(N-1); the
      sign of g1(z) = s c z is calibrated numerically (s = (-1)^N).
  make_wronskian_pair(phi, a): (g1, g2) with [g1otJ, g2otJ] = -phi(J) grad J.
  make_triple_family(phi2, a): adds g3 = -phi2 so the triple bracket is
      -phi2(J)^2 J''.
  make_quadruple_family(phi3, a): triple family with phi2 = sqrt(phi3) plus
      g4 = -phi3, giving length-4 bracket -phi3(J)^2 J'''.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .costs import FD_BASE_STEP, CostFunction, make_power_cost
from .errors import CalibrationError, InvalidParameterError, NumericFailureError

__all__ = [
    "ScalarField",
    "BracketIndex",
    "bracket2",
    "iterated_bracket",
    "make_generating_pair",
    "make_wronskian_pair",
    "make_triple_family",
    "make_quadruple_family",
    "shape_by_name",
    "adaptive_simpson",
]

BracketIndex = tuple  # ordered channel indices (i1, ..., il), right-iterated

_NEST_WIDEN = 10.0  # step multiplier per additional nesting level


@dataclass(frozen=True)
class ScalarField:
    """A field x -> shape(J(x)) built from a shape acting on the cost value."""

    shape: Callable[[float], float]
    cost: CostFunction
    name: str = ""

    def __call__(self, x: float) -> float:
        return self.shape(self.cost.eval(x))


def _fd_step(x: float, level: int) -> float:
    base = max(FD_BASE_STEP, FD_BASE_STEP * abs(x))
    return base * _NEST_WIDEN ** (level - 1)


def _deriv(fn: Callable[[float], float], x: float, level: int) -> float:
    h = _fd_step(x, level)
    d_h = (fn(x + h) - fn(x - h)) / (2 * h)
    d_h2 = (fn(x + h / 2) - fn(x - h / 2)) / h
    val = (4 * d_h2 - d_h) / 3
    if not math.isfinite(val):
        raise NumericFailureError(f"bracket derivative at x={x} is not finite")
    return val


def _bracket_fn(f: Callable, g: Callable, level: int) -> Callable[[float], float]:
    def value(x: float) -> float:
        return _deriv(g, x, level) * f(x) - _deriv(f, x, level) * g(x)

    return value


def bracket2(f: ScalarField, g: ScalarField, x: float) -> float:
    """First-order bracket [f, g](x) = g' f - f' g of two composed fields."""
    if f.cost is not g.cost:
        raise InvalidParameterError("bracket fields must share one cost function")
    return _bracket_fn(f, g, level=1)(x)


def iterated_bracket(fields: Sequence[ScalarField], idx: BracketIndex, x: float) -> float:
    """Right-iterated bracket [[...[f_{i1}, f_{i2}], ...], f_{il}] evaluated at x.

    Inner brackets are re-differentiated numerically, one nesting level per
    letter beyond the second.
    """
    if not 1 <= len(idx) <= 4:
        raise InvalidParameterError(f"bracket index length must be 1..4, got {len(idx)}")
    if any(i < 1 or i > len(fields) for i in idx):
        raise InvalidParameterError(f"bracket index {idx} outside system arity {len(fields)}")
    current: Callable[[float], float] = fields[idx[0] - 1]
    for level, i in enumerate(idx[1:], start=1):
        current = _bracket_fn(current, fields[i - 1], level)
    val = current(x)
    if not math.isfinite(val):
        raise NumericFailureError(f"iterated bracket {idx} at x={x} is not finite")
    return val


def shape_by_name(name: str, gain: float = 1.0) -> Callable[[float], float]:
    """Named shapes for configuration surfaces: linear, constant, sin, cos, neg-linear."""
    if name == "linear":
        fn = lambda z: gain * z
        fn.affine = (0.0, gain)
    elif name == "neg-linear":
        fn = lambda z: -gain * z
        fn.affine = (0.0, -gain)
    elif name == "constant":
        fn = lambda z: gain
        fn.affine = (gain, 0.0)
    elif name == "sin":
        fn = lambda z: gain * math.sin(z)
    elif name == "cos":
        fn = lambda z: gain * math.cos(z)
    else:
        raise InvalidParameterError(f"unknown shape name {name!r}")
    return fn


# ---------------------------------------------------------------------------
# generating families
# ---------------------------------------------------------------------------

def make_generating_pair(N: int, c: float = 1.0) -> tuple[Callable, Callable]:
    """Shapes (g1(z) = s c z, g2(z) = 1) whose length-N bracket is -c J^(N-1).

    The sign s is calibrated against the numeric bracket oracle on a power
    test cost rather than taken from a closed-form prefactor.
    """
    if N not in (2, 3, 4):
        raise InvalidParameterError(f"N must be 2, 3 or 4, got {N}")
    if c <= 0:
        raise InvalidParameterError(f"gain c must be positive, got {c}")

    test_cost = make_power_cost(1.0, 0.0, N)
    x_test = 0.7
    target = -c * test_cost.analytic_derivs[N - 2](x_test)
    idx = (1,) + (2,) * (N - 1)
    best = None
    for s in (1.0, -1.0):
        g1 = lambda z, s=s: s * c * z
        g2 = lambda z: 1.0
        fields = [ScalarField(g1, test_cost), ScalarField(g2, test_cost)]
        val = iterated_bracket(fields, idx, x_test)
        err = abs(val - target)
        if best is None or err < best[0]:
            best = (err, s, abs(val))
    err, s, mag = best
    if mag < 1e-12 or err > 1e-3 * max(abs(target), 1.0):
        raise CalibrationError(
            f"generating pair calibration failed for N={N}: residual {err:.3e}"
        )
    g1 = lambda z, s=s: s * c * z
    g1.affine = (0.0, s * c)
    g2 = lambda z: 1.0
    g2.affine = (1.0, 0.0)
    return g1, g2


def adaptive_simpson(fn: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-10, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of fn over [a, b]."""
    if a == b:
        return 0.0

    def simpson(lo, hi, flo, fmid, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, hi, flo, fmid, fhi, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fn(lm), fn(rm)
        left = simpson(lo, mid, flo, flm, fmid)
        right = simpson(mid, hi, fmid, frm, fhi)
        if depth >= max_depth:
            raise NumericFailureError("adaptive Simpson did not converge")
        if abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, flo, flm, fmid, left, tol / 2, depth + 1)
                + recurse(mid, hi, fmid, frm, fhi, right, tol / 2, depth + 1))

    fa, fm, fb = fn(a), fn(0.5 * (a + b)), fn(b)
    if not all(map(math.isfinite, (fa, fm, fb))):
        raise NumericFailureError("integrand not finite on the quadrature range")
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def make_wronskian_pair(phi: Callable[[float], float], a: Callable[[float], float],
                        domain: tuple[float, float] | None = None,
                        cost: CostFunction | None = None) -> tuple[Callable, Callable]:
    """Shapes (g1 = a, g2 = b) with Wronskian g1 g2' - g1' g2 = -phi.

    b(z) = a(z) (C - int_{z0}^{z} phi(s)/a(s)^2 ds) with C = 0.  The base
    point z0 is 0 when a does not vanish between 0 and the working z-range;
    otherwise it is moved to the |a|-maximizing point of the range (for
    a = sin on (0, pi) this lands on pi/2 and reproduces b = cos).  The
    working z-range is the image of the cost over the given x-domain, or a
    default interval around 0.
    """
    if domain is not None and cost is not None:
        lo, hi = domain
        zs = [cost.eval(lo + (hi - lo) * k / 64) for k in range(65)]
        z_lo, z_hi = min(zs), max(zs)
    else:
        z_lo, z_hi = -1.0, 1.0

    span_lo, span_hi = min(z_lo, 0.0), max(z_hi, 0.0)
    samples = [span_lo + (span_hi - span_lo) * k / 256 for k in range(257)]
    floor = 1e-8 * max(max(abs(a(z)) for z in samples), 1.0)
    if all(abs(a(z)) > floor for z in samples):
        z0 = 0.0
    else:
        zr = [z_lo + (z_hi - z_lo) * k / 256 for k in range(257)]
        z0 = max(zr, key=lambda z: abs(a(z)))
        if abs(a(z0)) <= floor:
            raise InvalidParameterError("seed a(z) vanishes on the whole working range")
        # refine to the true |a| extremum (where a' changes sign) so the
        # integration constant C = 0 is taken at a stationary base point;
        # a value-based search stalls at sqrt(eps) on the flat maximum
        step = (z_hi - z_lo) / 256
        lo_r, hi_r = max(z_lo, z0 - step), min(z_hi, z0 + step)

        def da(z: float) -> float:
            hz = 1e-6 * max(1.0, abs(z))
            return (a(z + hz) - a(z - hz)) / (2 * hz)

        sa0 = math.copysign(1.0, a(z0))
        dlo, dhi = sa0 * da(lo_r), sa0 * da(hi_r)
        if dlo > 0 > dhi:
            for _ in range(80):
                mid = 0.5 * (lo_r + hi_r)
                if sa0 * da(mid) > 0:
                    lo_r = mid
                else:
                    hi_r = mid
            z0 = 0.5 * (lo_r + hi_r)
        else:
            z0 = lo_r if abs(a(lo_r)) > abs(a(hi_r)) else hi_r
        inner = [z0 + (z - z0) * k / 64 for z in (z_lo, z_hi) for k in range(65)]
        if any(abs(a(z)) <= floor for z in inner):
            raise InvalidParameterError("seed a(z) vanishes inside the working range")

    def w(z: float) -> float:
        return -adaptive_simpson(lambda s: phi(s) / a(s) ** 2, z0, z)

    return (lambda z: a(z)), (lambda z: a(z) * w(z))


def make_triple_family(phi2: Callable[[float], float],
                       a: Callable[[float], float] = lambda z: 1.0,
                       domain: tuple[float, float] | None = None,
                       cost: CostFunction | None = None) -> tuple[Callable, Callable, Callable]:
    """(g1, g2, g3) with [[g1oJ, g2oJ], g3oJ] = -phi2(J)^2 J''."""
    g1, g2 = make_wronskian_pair(phi2, a, domain, cost)
    g3 = lambda z: -phi2(z)
    return g1, g2, g3


def make_quadruple_family(phi3: Callable[[float], float],
                          a: Callable[[float], float] = lambda z: 1.0,
                          domain: tuple[float, float] | None = None,
                          cost: CostFunction | None = None) -> tuple[Callable, ...]:
    """(g1..g4) with [[[g1oJ, g2oJ], g3oJ], g4oJ] = -phi3(J)^2 J'''.

    g1..g3 form the triple family for sqrt(phi3); the closing field is
    calibrated over g4 = -phi3 and +phi3 against the bracket oracle on a
    quartic test cost (the derivation gives -phi3 exactly, the oracle guards
    against a sign regression).
    """
    probe = [phi3(z) for z in (0.0, 0.25, 1.0, 2.0)]
    if any(v < 0 for v in probe):
        raise InvalidParameterError("phi3 must be nonnegative")

    phi2 = lambda z: math.sqrt(phi3(z))
    g1, g2, g3 = make_triple_family(phi2, a, domain, cost)

    test_cost = make_power_cost(1.0, 0.0, 4)
    x_test = 0.8
    target = -phi3(test_cost.eval(x_test)) ** 2 * test_cost.analytic_derivs[2](x_test)
    best = None
    for s in (-1.0, 1.0):
        g4 = lambda z, s=s: s * phi3(z)
        fields = [ScalarField(g, test_cost) for g in (g1, g2, g3, g4)]
        val = iterated_bracket(fields, (1, 2, 3, 4), x_test)
        err = abs(val - target)
        if best is None or err < best[0]:
            best = (err, s)
    err, s = best
    if err > 1e-3 * max(abs(target), 1.0):
        raise CalibrationError(f"quadruple family calibration failed: residual {err:.3e}")
    return g1, g2, g3, (lambda z, s=s: s * phi3(z))
