"""Cost-function models, numeric differentiation, and empirical assumption checkers.

A cost is a scalar function J of a scalar state x with an isolated minimum at
x*.  Derivatives up to order 4 are served analytically when declared and by
Richardson-extrapolated central differences otherwise.  The assumption
checkers fit the tightest constants of the power-function growth inequalities
on a grid and validate them on a refined grid, so that constants that only
work at grid scale are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import InvalidDomainError, InvalidParameterError, NumericFailureError

__all__ = [
    "CostFunction",
    "AssumptionReport",
    "make_power_cost",
    "make_abs_cost",
    "derivative",
    "check_assumption",
    "check_derivatives",
]

# Base step for first-order central differences; higher orders widen the step
# to keep the stencil roundoff (~eps/h^k) below the Richardson truncation.
FD_BASE_STEP = 1e-4
_FD_ORDER_STEP = {1: 1e-4, 2: 2e-3, 3: 1e-2, 4: 2e-2}


@dataclass(frozen=True)
class CostFunction:
    """Evaluable objective with optional analytic derivatives and known minimizer.

    analytic_derivs[k] is the derivative of order k+1; the list may be shorter
    than 4 (missing orders fall back to finite differences).
    """

    eval: Callable[[float], float]
    analytic_derivs: tuple[Callable[[float], float], ...] = ()
    xstar: float | None = None
    jstar: float | None = None
    degree: int | None = None

    def __post_init__(self):
        if self.degree is not None and self.degree < 2:
            raise InvalidParameterError(f"cost degree must be >= 2, got {self.degree}")
        if self.xstar is not None and self.jstar is not None:
            if abs(self.eval(self.xstar) - self.jstar) > 1e-12:
                raise InvalidParameterError(
                    "declared minimum value disagrees with eval at the minimizer"
                )

    def __call__(self, x: float) -> float:
        return self.eval(x)


@dataclass
class AssumptionReport:
    """Result of fitting one assumption's inequality constants on a grid."""

    assumption_id: int
    constants: dict[str, float]
    domain: tuple[float, float]
    satisfied: bool
    witness: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)


def make_power_cost(alpha: float, xstar: float, m: int) -> CostFunction:
    """J(x) = alpha * (x - xstar)^m with analytic derivatives up to order 4."""
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    if int(m) != m or m < 2:
        raise InvalidParameterError(f"degree m must be an integer >= 2, got {m}")
    m = int(m)

    def _deriv(order: int) -> Callable[[float], float]:
        if order > m:
            return lambda x: 0.0
        coeff = alpha * math.prod(range(m - order + 1, m + 1))
        p = m - order
        return lambda x, c=coeff, p=p: c * (x - xstar) ** p

    return CostFunction(
        eval=lambda x: alpha * (x - xstar) ** m,
        analytic_derivs=tuple(_deriv(k) for k in range(1, 5)),
        xstar=xstar,
        jstar=0.0,
        degree=m,
    )


def make_abs_cost(xstar: float = 0.0) -> CostFunction:
    """J(x) = |x - xstar|; kinked at the minimizer, useful as a counterexample."""
    return CostFunction(eval=lambda x: abs(x - xstar), xstar=xstar, jstar=0.0, degree=2)


def _central_diff(func: Callable[[float], float], order: int, x: float, h: float) -> float:
    if order == 0:
        return func(x)
    if order == 1:
        return (func(x + h) - func(x - h)) / (2 * h)
    if order == 2:
        return (func(x + h) - 2 * func(x) + func(x - h)) / h**2
    if order == 3:
        return (func(x + 2 * h) - 2 * func(x + h) + 2 * func(x - h) - func(x - 2 * h)) / (2 * h**3)
    if order == 4:
        return (
            func(x + 2 * h) - 4 * func(x + h) + 6 * func(x) - 4 * func(x - h) + func(x - 2 * h)
        ) / h**4
    raise InvalidParameterError(f"derivative order must be in 0..4, got {order}")


def fd_derivative(func: Callable[[float], float], x: float, order: int = 1,
                  h: float | None = None) -> float:
    """Central difference of the given order with one Richardson level (h, h/2).

    Both stencils have O(h^2) truncation, so the (4 D(h/2) - D(h)) / 3
    combination is O(h^4) accurate.
    """
    if order == 0:
        return func(x)
    if h is None:
        h = _FD_ORDER_STEP[order] * max(1.0, abs(x))
    d_h = _central_diff(func, order, x, h)
    d_h2 = _central_diff(func, order, x, h / 2)
    val = (4 * d_h2 - d_h) / 3
    if not math.isfinite(val):
        raise NumericFailureError(f"finite difference of order {order} at x={x} is not finite")
    return val


def derivative(cost: CostFunction, order: int, x: float) -> float:
    """Derivative of the cost at x, analytic when declared, else finite differences."""
    if order < 0 or order > 4:
        raise InvalidParameterError(f"derivative order must be in 0..4, got {order}")
    if order == 0:
        return cost.eval(x)
    if len(cost.analytic_derivs) >= order:
        val = cost.analytic_derivs[order - 1](x)
        if not math.isfinite(val):
            raise NumericFailureError(f"analytic derivative of order {order} at x={x} is not finite")
        return val
    return fd_derivative(cost.eval, x, order)


def check_derivatives(cost: CostFunction, domain: tuple[float, float],
                      points: int = 17, rtol: float = 1e-6,
                      exclude: Sequence[float] = ()) -> bool:
    """Verify declared analytic derivatives against finite differences on a grid.

    Points within 1e-3 of any excluded (singular) location are skipped.
    Comparison is relative to max(|analytic|, 1).
    """
    lo, hi = domain
    for k in range(points):
        x = lo + (hi - lo) * k / (points - 1)
        if any(abs(x - s) < 1e-3 for s in exclude):
            continue
        for order in range(1, len(cost.analytic_derivs) + 1):
            an = cost.analytic_derivs[order - 1](x)
            fd = fd_derivative(cost.eval, x, order)
            if abs(fd - an) > rtol * max(abs(an), 1.0):
                return False
    return True


# ---------------------------------------------------------------------------
# assumption checkers
# ---------------------------------------------------------------------------

def _ratio_grids(cost: CostFunction, domain: tuple[float, float], grid_points: int):
    """Fit grid plus a refined validation grid (midpoints and points near x*)."""
    lo, hi = domain
    xs = [lo + (hi - lo) * k / (grid_points - 1) for k in range(grid_points)]
    fit = [x for x in xs if abs(x - cost.xstar) > 1e-9]
    mids = [(a + b) / 2 for a, b in zip(xs, xs[1:])]
    near = []
    h = (hi - lo) / (grid_points - 1)
    for k in range(1, 7):
        step = h / 2**k
        for x in (cost.xstar - step, cost.xstar + step):
            if lo < x < hi:
                near.append(x)
    check = [x for x in mids + near if abs(x - cost.xstar) > 1e-9]
    return fit, check


def _inequalities(cost: CostFunction, assumption_id: int, m: int):
    """Per-assumption list of (name, kind, ratio) with kind 'lower' or 'upper'.

    Each inequality is written as ratio(x) >= c (lower) or ratio(x) <= c
    (upper), with the constant fitted as the grid extremum of the ratio.
    """
    xstar = cost.xstar
    jstar = cost.jstar if cost.jstar is not None else cost.eval(xstar)

    def excess(x):
        return cost.eval(x) - jstar

    def dist(x):
        return abs(x - xstar)

    if assumption_id == 1:
        return [
            ("alpha1", "lower", lambda x: excess(x) / dist(x) ** m),
            ("alpha2", "upper", lambda x: excess(x) / dist(x) ** m),
            ("beta1", "lower", lambda x: abs(derivative(cost, 1, x)) / excess(x) ** (1 - 1 / m)),
            ("beta2", "upper", lambda x: abs(derivative(cost, 1, x)) / excess(x) ** (1 - 1 / m)),
            ("mu", "upper", lambda x: abs(derivative(cost, 2, x)) / excess(x) ** (1 - 2 / m)),
        ]
    if assumption_id == 2:
        return [
            ("alpha1", "lower", lambda x: excess(x) / dist(x) ** m),
            ("alpha2", "upper", lambda x: excess(x) / dist(x) ** m),
            ("beta1", "lower", lambda x: derivative(cost, m - 1, x) * (x - xstar) / dist(x) ** 2),
            ("beta2", "upper", lambda x: abs(derivative(cost, m - 1, x)) / dist(x)),
        ]
    if assumption_id == 3:
        return [
            ("alpha1", "lower", lambda x: excess(x) / dist(x) ** m),
            ("alpha2", "upper", lambda x: excess(x) / dist(x) ** m),
            ("beta11", "lower", lambda x: derivative(cost, 1, x) * (x - xstar) / dist(x) ** m),
            ("beta12", "upper", lambda x: abs(derivative(cost, 1, x)) / dist(x) ** (m - 1)),
            ("beta21", "lower", lambda x: derivative(cost, 3, x) * (x - xstar) / dist(x) ** (m - 2)),
            ("beta22", "upper", lambda x: abs(derivative(cost, 3, x))),
        ]
    raise InvalidParameterError(f"assumption_id must be 1, 2 or 3, got {assumption_id}")


def check_assumption(cost: CostFunction, assumption_id: int,
                     domain: tuple[float, float], grid_points: int = 33) -> AssumptionReport:
    """Fit the assumption's constants on a grid and validate on a refined grid.

    The fitted constants trivially satisfy the inequalities at the fit points,
    so satisfaction is decided at midpoints and at points approaching the
    minimizer: functions whose local behavior does not match the declared
    degree produce diverging ratios there and are reported unsatisfied.
    """
    if cost.xstar is None:
        raise InvalidParameterError("check_assumption needs a cost with a declared minimizer")
    lo, hi = domain
    if not (lo < cost.xstar < hi):
        raise InvalidDomainError(f"domain {domain} must strictly contain x*={cost.xstar}")
    if grid_points < 16:
        raise InvalidParameterError(f"grid_points must be >= 16, got {grid_points}")

    m = cost.degree if cost.degree is not None else 2
    fit_xs, check_xs = _ratio_grids(cost, domain, grid_points)
    constants: dict[str, float] = {}
    witness: dict[str, float] = {}
    failures: list[str] = []
    slack = 1 + 1e-6

    def _safe(ratio, x):
        try:
            v = ratio(x)
        except (ValueError, ZeroDivisionError, OverflowError):
            return math.inf
        return v if not isinstance(v, complex) else math.inf

    for name, kind, ratio in _inequalities(cost, assumption_id, m):
        if assumption_id == 3 and m == 2 and name == "beta21":
            constants[name] = 0.0
            witness[name] = cost.xstar
            continue
        vals = [(_safe(ratio, x), x) for x in fit_xs]
        if kind == "lower":
            c, wx = min(vals)
            c = max(c, 0.0)
            ok = all(_safe(ratio, x) >= c / slack - 1e-12 for x in check_xs)
            if name in ("alpha1", "beta1", "beta11") and c <= 0:
                ok = False
        else:
            c, wx = max(vals)
            ok = all(_safe(ratio, x) <= c * slack + 1e-12 for x in check_xs)
        if not math.isfinite(c):
            ok = False
        constants[name] = c
        witness[name] = wx
        if not ok:
            failures.append(name)

    return AssumptionReport(
        assumption_id=assumption_id,
        constants=constants,
        domain=domain,
        satisfied=not failures,
        witness=witness,
        failures=failures,
    )
