"""ES system assembly and fixed-step integration of full and averaged dynamics.

The full dynamics are x' = sum_k g_k(J(x)) u_k(t) with eps-periodic dithers.
Integration is classical fixed-step RK4: the forcing has a known fastest
harmonic, so the resolution is chosen a priori and the result is
deterministic.  Dither values are precomputed on the step/half-step grid of
one period and reused for every period.  When every channel shape is affine
in the cost value (all built-in designs are), the per-step right-hand side
reduces to J(x) * Q(t) + P(t) with precomputed tables P, Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .costs import CostFunction, derivative
from .dither import DitherSpec, eval_dither, make_pair, make_triple, check_resonances
from .errors import (
    ConstructionError,
    DivergenceError,
    InvalidParameterError,
    ResolutionError,
)
from .lie import make_generating_pair

__all__ = [
    "ESSystem",
    "IntegratorConfig",
    "Trajectory",
    "const_shape",
    "linear_shape",
    "build_two_input",
    "build_three_input",
    "build_mixed",
    "integrate",
    "integrate_lbs",
    "write_trajectory_csv",
    "read_trajectory_csv",
]

DIVERGENCE_LIMIT = 1e12


def const_shape(c: float) -> Callable[[float], float]:
    fn = lambda z: c
    fn.affine = (c, 0.0)
    return fn


def linear_shape(c: float) -> Callable[[float], float]:
    fn = lambda z: c * z
    fn.affine = (0.0, c)
    return fn


@dataclass(frozen=True)
class ESSystem:
    """Cost plus ordered (shape, dither) channels sharing one period."""

    cost: CostFunction
    channels: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 1 <= len(self.channels) <= 4:
            raise InvalidParameterError(f"system arity must be 1..4, got {len(self.channels)}")
        eps = self.channels[0][1].epsilon
        if any(abs(d.epsilon - eps) > 1e-15 * eps for _, d in self.channels):
            raise InvalidParameterError("all channels must share one dither period")

    @property
    def arity(self) -> int:
        return len(self.channels)

    @property
    def epsilon(self) -> float:
        return self.channels[0][1].epsilon

    @property
    def dithers(self) -> list[DitherSpec]:
        return [d for _, d in self.channels]

    @property
    def shapes(self) -> list[Callable[[float], float]]:
        return [g for g, _ in self.channels]

    @property
    def fields(self):
        from .lie import ScalarField

        return [ScalarField(g, self.cost) for g, _ in self.channels]

    @property
    def fastest_harmonic(self) -> int:
        return max(d.fastest_harmonic for d in self.dithers)


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings; decimation keeps every k-th step (k | steps)."""

    total_time: float
    steps_per_period: int = 4096
    decimation: int = 1

    def __post_init__(self):
        if self.total_time <= 0:
            raise InvalidParameterError(f"total_time must be positive, got {self.total_time}")
        if self.steps_per_period < 16:
            raise InvalidParameterError("steps_per_period must be >= 16")
        if self.decimation < 1 or self.steps_per_period % self.decimation:
            raise InvalidParameterError(
                f"decimation {self.decimation} must divide steps_per_period {self.steps_per_period}"
            )


@dataclass
class Trajectory:
    """Uniformly spaced states with recorded cost values."""

    times: np.ndarray
    states: np.ndarray
    cost_values: np.ndarray
    epsilon: float
    meta: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if len(self.times) > 1 else 0.0

    def strobe(self) -> tuple[np.ndarray, np.ndarray]:
        """Samples at integer multiples of epsilon (nearest stored step)."""
        if self.epsilon <= 0 or self.dt <= 0:
            return self.times, self.states
        stride = self.epsilon / self.dt
        n = int(math.floor(round(float(self.times[-1]) / self.epsilon, 9)))
        idx = [min(int(round(k * stride)), len(self.times) - 1) for k in range(n + 1)]
        return self.times[idx], self.states[idx]


def build_two_input(cost: CostFunction, N: int, kappa: int = 1,
                    epsilon: float = 1e-4, gain: float = 1.0,
                    kind: str | None = None) -> ESSystem:
    """Generating pair of order N matched with the bracket-exciting dither pair of order N."""
    if N not in (2, 3, 4):
        raise InvalidParameterError(f"N must be 2, 3 or 4, got {N}")
    default_kind = {2: "first12", 3: "second122", 4: "third1222"}[N]
    kind = kind or default_kind
    g1, g2 = make_generating_pair(N, gain)
    d1, d2 = make_pair(kind, epsilon, kappa)
    return ESSystem(cost=cost, channels=((g1, d1), (g2, d2)),
                    meta={"builder": "two_input", "N": N, "kappa": kappa, "gain": gain,
                          "kind": kind})


def build_three_input(cost: CostFunction, phi2, epsilon: float = 1e-4,
                      kappa: int = 1, excitation_tol: float = 1e-3) -> ESSystem:
    """Triple family fields with the three-dither [[g1,g2],g3] exciter.

    phi2 may be a positive constant (fast affine path, fields (1, -phi2 z,
    -phi2)) or a callable shape.  The dither triple is gated by
    verify_excitation before the system is returned.
    """
    from .chenfliess import verify_excitation
    from .lie import make_triple_family

    if callable(phi2):
        probe = max(abs(phi2(z)) for z in np.linspace(0.0, 4.0, 33))
        if probe < 1e-12:
            raise ConstructionError("phi2 is numerically zero: the target bracket is null")
        g1, g2, g3 = make_triple_family(phi2, cost=cost)
        shapes = (g1, g2, g3)
    else:
        phi = float(phi2)
        if abs(phi) < 1e-12:
            raise ConstructionError("phi2 is zero: the target bracket is null")
        shapes = (const_shape(1.0), linear_shape(-phi), const_shape(-phi))

    dithers = make_triple(epsilon, kappa)
    report = verify_excitation(dithers, (1, 2, 3), tol=excitation_tol)
    if not report.ok:
        raise ConstructionError(
            f"dither triple failed excitation verification "
            f"(target {report.target_coeff:.3e}, worst off-target {report.max_offtarget:.3e})",
            report=report,
        )
    return ESSystem(cost=cost, channels=tuple(zip(shapes, dithers)),
                    meta={"builder": "three_input", "kappa": kappa, "epsilon": epsilon,
                          "excitation": {"target_coeff": report.target_coeff,
                                         "max_offtarget": report.max_offtarget}})


def build_mixed(cost: CostFunction, kappa12: int, kappa1222: int,
                gamma1: float, gamma3: float, epsilon: float = 1e-4) -> ESSystem:
    """First-order pair plus third-order pair with non-resonant frequencies.

    Averaged target: x' = -gamma1 J' - gamma3 J'''.
    """
    if gamma1 < 0 or gamma3 < 0:
        raise InvalidParameterError("gains gamma1, gamma3 must be nonnegative")
    report = check_resonances([kappa12], [kappa1222, 3 * kappa1222])
    if not report.ok:
        raise ConstructionError(
            f"dither frequencies ({kappa12}, {kappa1222}) resonate: {report.violations}",
            report=report,
        )
    w1 = const_shape(1.0)
    w2 = linear_shape(-gamma1)
    if gamma3 > 0:
        g3, g4 = make_generating_pair(4, gamma3)
    else:
        g3, g4 = linear_shape(0.0), const_shape(1.0)
    d1, d2 = make_pair("first12", epsilon, kappa12)
    d3, d4 = make_pair("third1222", epsilon, kappa1222)
    return ESSystem(cost=cost, channels=((w1, d1), (w2, d2), (g3, d3), (g4, d4)),
                    meta={"builder": "mixed", "kappa12": kappa12, "kappa1222": kappa1222,
                          "gamma1": gamma1, "gamma3": gamma3})


def _dither_tables(system: ESSystem, steps: int):
    """Per-channel samples on the step/half-step grid of one period."""
    eps = system.epsilon
    m = 2 * steps
    ts = np.arange(m) * (eps / m)
    return [np.array([eval_dither(d, t) for t in ts]) for d in system.dithers]


def integrate(system: ESSystem, x0: float, config: IntegratorConfig) -> Trajectory:
    """Fixed-step RK4 over whole periods; raises DivergenceError past 1e12."""
    eps = system.epsilon
    S = config.steps_per_period
    if S < 16 * system.fastest_harmonic:
        raise ResolutionError(
            f"{S} steps/period resolve the fastest harmonic "
            f"({system.fastest_harmonic}/period) with fewer than 16 samples"
        )
    n_periods = max(1, int(round(config.total_time / eps)))
    tables = _dither_tables(system, S)

    dec = config.decimation
    h = eps / S
    hh = 0.5 * h
    h6 = h / 6.0
    J = system.cost.eval
    m2 = 2 * S
    lim = DIVERGENCE_LIMIT

    states = [x0]
    affine = [getattr(g, "affine", None) for g in system.shapes]
    x = x0
    step_idx = 0
    store = states.append

    try:
        if all(a is not None for a in affine):
            P = sum(a[0] * u for a, u in zip(affine, tables))
            Q = sum(a[1] * u for a, u in zip(affine, tables))
            P = P.tolist()
            Q = Q.tolist()
            for _ in range(n_periods):
                i2 = 0
                while i2 < m2:
                    ap, aq = P[i2], Q[i2]
                    bp, bq = P[i2 + 1], Q[i2 + 1]
                    j = (i2 + 2) % m2
                    cp, cq = P[j], Q[j]
                    k1 = J(x) * aq + ap
                    k2 = J(x + hh * k1) * bq + bp
                    k3 = J(x + hh * k2) * bq + bp
                    k4 = J(x + h * k3) * cq + cp
                    x = x + h6 * (k1 + 2.0 * (k2 + k3) + k4)
                    if not (-lim < x < lim):
                        raise DivergenceError(
                            f"state exceeded {lim:g} at t={step_idx * h:.6g}",
                            last_time=step_idx * h,
                        )
                    i2 += 2
                    step_idx += 1
                    if step_idx % dec == 0:
                        store(x)
        else:
            shapes = system.shapes
            U = [u.tolist() for u in tables]
            n_ch = len(shapes)
            for _ in range(n_periods):
                i2 = 0
                while i2 < m2:
                    j = (i2 + 2) % m2

                    def rhs(xv, col):
                        z = J(xv)
                        return sum(shapes[c](z) * U[c][col] for c in range(n_ch))

                    k1 = rhs(x, i2)
                    k2 = rhs(x + hh * k1, i2 + 1)
                    k3 = rhs(x + hh * k2, i2 + 1)
                    k4 = rhs(x + h * k3, j)
                    x = x + h6 * (k1 + 2.0 * (k2 + k3) + k4)
                    if not (-lim < x < lim):
                        raise DivergenceError(
                            f"state exceeded {lim:g} at t={step_idx * h:.6g}",
                            last_time=step_idx * h,
                        )
                    i2 += 2
                    step_idx += 1
                    if step_idx % dec == 0:
                        store(x)
    except OverflowError:
        # a stage evaluation blew past float range before the post-step check
        raise DivergenceError(
            f"state overflow at t={step_idx * h:.6g}", last_time=step_idx * h
        ) from None

    xs = np.array(states)
    times = np.arange(len(states)) * (h * dec)
    cost_values = np.array([J(v) for v in states])
    meta = dict(system.meta)
    meta.update({"x0": x0, "steps_per_period": S, "decimation": dec,
                 "epsilon": eps, "periods": n_periods})
    return Trajectory(times=times, states=xs, cost_values=cost_values,
                      epsilon=eps, meta=meta)


def integrate_lbs(cost: CostFunction, bracket_terms: Sequence[tuple[int, float]],
                  x0: float, total_time: float, steps: int,
                  record_epsilon: float | None = None) -> Trajectory:
    """RK4 on the averaged system x' = -sum_j gamma_j J^(j)(x), orders j <= 3."""
    terms = [(int(j), float(g)) for j, g in bracket_terms]
    for j, g in terms:
        if not 1 <= j <= 3:
            raise InvalidParameterError(f"derivative order must be 1..3, got {j}")
        if g < 0:
            raise InvalidParameterError(f"gains must be nonnegative, got {g}")
    if steps < 1 or total_time <= 0:
        raise InvalidParameterError("need steps >= 1 and total_time > 0")

    def rhs(xv: float) -> float:
        return -sum(g * derivative(cost, j, xv) for j, g in terms)

    h = total_time / steps
    hh = 0.5 * h
    h6 = h / 6.0
    x = x0
    states = [x0]
    for i in range(steps):
        k1 = rhs(x)
        k2 = rhs(x + hh * k1)
        k3 = rhs(x + hh * k2)
        k4 = rhs(x + h * k3)
        x = x + h6 * (k1 + 2.0 * (k2 + k3) + k4)
        if not (-DIVERGENCE_LIMIT < x < DIVERGENCE_LIMIT):
            raise DivergenceError(f"averaged state exceeded {DIVERGENCE_LIMIT:g} at t={i * h:.6g}",
                                  last_time=i * h)
        states.append(x)
    xs = np.array(states)
    times = np.arange(len(states)) * h
    return Trajectory(times=times, states=xs,
                      cost_values=np.array([cost.eval(v) for v in states]),
                      epsilon=record_epsilon if record_epsilon is not None else h,
                      meta={"builder": "lbs", "terms": terms, "x0": x0})


def write_trajectory_csv(traj: Trajectory, path: str) -> None:
    """CSV with header t,x,J and 17 significant digits per value."""
    with open(path, "w") as fh:
        fh.write("t,x,J\n")
        for t, x, j in zip(traj.times, traj.states, traj.cost_values):
            fh.write(f"{t:.17g},{x:.17g},{j:.17g}\n")


def read_trajectory_csv(path: str, epsilon: float = 0.0) -> Trajectory:
    times, xs, js = [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "t,x,J":
            raise InvalidParameterError(f"unexpected trajectory header {header!r}")
        for line in fh:
            t, x, j = line.strip().split(",")
            times.append(float(t))
            xs.append(float(x))
            js.append(float(j))
    return Trajectory(times=np.array(times), states=np.array(xs),
                      cost_values=np.array(js), epsilon=epsilon, meta={"source": path})
