"""Bracket-exciting periodic input signals and the non-resonance checker.

Every dither is an eps-periodic, zero-mean signal of the form
u(t) = eps^(1/N - 1) * v(t/eps), where N is the length of the Lie bracket the
signal family excites.  The built-in kinds and their per-period log-signature
coefficients (measured by the chenfliess module, target coefficient exactly 1):

  first12    (N=2): v1 = 2 sqrt(kappa pi) cos(2 kappa pi tau),
                    v2 = 2 sqrt(kappa pi) sin(2 kappa pi tau)         -> [g1,g2]
  classic    (N=2): same pair, the traditional two-input gradient exciter
  second122  (N=3): v1 = -2 (4 kappa pi)^(2/3) cos(4 kappa pi tau),
                    v2 =    (4 kappa pi)^(2/3) cos(2 kappa pi tau)    -> [[g1,g2],g2]
  third1222  (N=4): v1 = 6 (2 kappa pi)^(3/4) sin(6 kappa pi tau),
                    v2 = 2 (2 kappa pi)^(3/4) cos(2 kappa pi tau)     -> [[[g1,g2],g2],g2]
  triple123  (N=3, three channels): each channel superposes two cosine
                    harmonics from the frequency sets (2,3,5) and (4,11,15);
                    the two sum-resonances 2+3=5 and 4+11=15 are combined with
                    amplitudes that cancel the [[g1,g3],g2] component, leaving
                    only [[g1,g2],g3].
  custom-harmonic:  a single cos/sin/|cos| harmonic with caller-chosen
                    amplitude and bracket length.

The second122 channel-2 waveform is a plain cosine: a rectified |cos| variant
(available through custom-harmonic) excites [[g1,g2],g1] more than four times
stronger than the intended bracket and is not a usable exciter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "DitherSpec",
    "ResonanceReport",
    "eval_dither",
    "sample_dither",
    "period_mean",
    "make_pair",
    "make_triple",
    "check_resonances",
    "KIND_BRACKET_LENGTH",
    "TRIPLE123_FREQS",
    "TRIPLE123_AMPS",
]

KIND_BRACKET_LENGTH = {
    "first12": 2,
    "classic": 2,
    "second122": 3,
    "third1222": 4,
    "triple123": 3,
}

# Two-resonance triple design: channel j carries
#   A_j cos(2 pi f_j kappa tau) + B_j cos(2 pi f'_j kappa tau)
# with (f_j) = (2,3,5), (f'_j) = (4,11,15).  Amplitudes solve
#   sum over designs of m_D / (16 pi^2 p_D q_D) = 0   (kills [[g1,g3],g2])
#   resulting [[g1,g2],g3] coefficient = 1,
# where m_D is the product of the design's three amplitude factors and the
# per-design coefficient law is K = -m_D / (16 pi^2 p_D r_D).
TRIPLE123_FREQS = ((2, 3, 5), (4, 11, 15))


def _triple123_amps() -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    (p1, q1, r1), (p2, q2, r2) = TRIPLE123_FREQS
    m1 = -16 * math.pi**2 * p1 / (1.0 / r1 - q2 / (q1 * r2))
    m2 = -m1 * (p2 * q2) / (p1 * q1)
    a = abs(m1) ** (1 / 3)
    b = abs(m2) ** (1 / 3)
    sa = math.copysign(1.0, m1)
    sb = math.copysign(1.0, m2)
    return (sa * a, a, a), (b, b, sb * b)


TRIPLE123_AMPS = _triple123_amps()


@dataclass(frozen=True)
class DitherSpec:
    """One eps-periodic input channel.

    kappa multiplies every frequency in the waveform; epsilon is the period.
    For custom-harmonic the waveform is
    amplitude * {cos|sin|abscos}(2 pi harmonic kappa t / eps), scaled by
    eps^(1/bracket_length - 1); demean subtracts the period mean (only abscos
    has one).
    """

    kind: str
    channel: int
    epsilon: float
    kappa: int = 1
    amplitude: float = 1.0
    harmonic: int = 1
    waveform: str = "cos"
    bracket_length: int | None = None
    demean: bool = True

    def __post_init__(self):
        if self.kind not in KIND_BRACKET_LENGTH and self.kind != "custom-harmonic":
            raise InvalidParameterError(f"unknown dither kind {self.kind!r}")
        if self.epsilon <= 0:
            raise InvalidParameterError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.kappa) != self.kappa or self.kappa < 1:
            raise InvalidParameterError(f"kappa must be a positive integer, got {self.kappa}")
        n_ch = 3 if self.kind == "triple123" else (1 if self.kind == "custom-harmonic" else 2)
        if not 1 <= self.channel <= n_ch:
            raise InvalidParameterError(
                f"channel must be in 1..{n_ch} for kind {self.kind!r}, got {self.channel}"
            )
        if self.kind == "custom-harmonic":
            if self.waveform not in ("cos", "sin", "abscos"):
                raise InvalidParameterError(f"unknown waveform {self.waveform!r}")
            if self.bracket_length is None or not 2 <= self.bracket_length <= 4:
                raise InvalidParameterError("custom-harmonic needs bracket_length in 2..4")
            if self.harmonic < 1 or int(self.harmonic) != self.harmonic:
                raise InvalidParameterError(f"harmonic must be a positive integer, got {self.harmonic}")

    @property
    def length(self) -> int:
        """Length N of the bracket this dither family excites."""
        if self.kind == "custom-harmonic":
            return self.bracket_length
        return KIND_BRACKET_LENGTH[self.kind]

    @property
    def amplitude_exponent(self) -> Fraction:
        """Exponent p of the eps^(-p) amplitude scaling, p = 1 - 1/N."""
        return Fraction(1) - Fraction(1, self.length)

    @property
    def fastest_harmonic(self) -> int:
        """Number of full oscillations of the fastest component per period."""
        if self.kind in ("first12", "classic"):
            return self.kappa
        if self.kind == "second122":
            return 2 * self.kappa
        if self.kind == "third1222":
            return 3 * self.kappa
        if self.kind == "triple123":
            return max(f[self.channel - 1] for f in TRIPLE123_FREQS) * self.kappa
        return self.harmonic * self.kappa


def eval_dither(spec: DitherSpec, t: float) -> float:
    """Full signal value u(t) = eps^(1/N-1) v(t/eps) at time t."""
    eps = spec.epsilon
    kap = spec.kappa
    tau = t / eps
    pre = eps ** (1.0 / spec.length - 1.0)
    if spec.kind in ("first12", "classic"):
        amp = 2.0 * math.sqrt(kap * math.pi)
        ang = 2.0 * kap * math.pi * tau
        return pre * amp * (math.cos(ang) if spec.channel == 1 else math.sin(ang))
    if spec.kind == "second122":
        amp = (4.0 * kap * math.pi) ** (2.0 / 3.0)
        if spec.channel == 1:
            return pre * -2.0 * amp * math.cos(4.0 * kap * math.pi * tau)
        return pre * amp * math.cos(2.0 * kap * math.pi * tau)
    if spec.kind == "third1222":
        amp = (2.0 * kap * math.pi) ** 0.75
        if spec.channel == 1:
            return pre * 6.0 * amp * math.sin(6.0 * kap * math.pi * tau)
        return pre * 2.0 * amp * math.cos(2.0 * kap * math.pi * tau)
    if spec.kind == "triple123":
        j = spec.channel - 1
        val = 0.0
        for freqs, amps in zip(TRIPLE123_FREQS, TRIPLE123_AMPS):
            val += amps[j] * math.cos(2.0 * math.pi * freqs[j] * kap * tau)
        return pre * val
    # custom-harmonic
    ang = 2.0 * math.pi * spec.harmonic * kap * tau
    if spec.waveform == "cos":
        val = math.cos(ang)
    elif spec.waveform == "sin":
        val = math.sin(ang)
    else:
        val = abs(math.cos(ang)) - (2.0 / math.pi if spec.demean else 0.0)
    return pre * spec.amplitude * val


def sample_dither(spec: DitherSpec, n: int, t0: float = 0.0, t1: float | None = None):
    """n+1 uniform samples of the dither over [t0, t1] (default one period)."""
    if t1 is None:
        t1 = t0 + spec.epsilon
    ts = np.linspace(t0, t1, n + 1)
    return np.array([eval_dither(spec, t) for t in ts])


def period_mean(spec: DitherSpec, quadrature_steps: int = 256) -> float:
    """Composite-Simpson mean of the signal over one period."""
    if quadrature_steps < 64:
        raise InvalidParameterError(f"quadrature_steps must be >= 64, got {quadrature_steps}")
    n = quadrature_steps + (quadrature_steps % 2)   # Simpson needs an even count
    h = spec.epsilon / n
    total = eval_dither(spec, 0.0) + eval_dither(spec, spec.epsilon)
    for k in range(1, n):
        total += (4 if k % 2 else 2) * eval_dither(spec, k * h)
    return total * h / 3.0 / spec.epsilon


def make_pair(kind: str, epsilon: float, kappa: int = 1) -> tuple[DitherSpec, DitherSpec]:
    """The two channels of a built-in pair kind."""
    if kind not in ("first12", "classic", "second122", "third1222"):
        raise InvalidParameterError(f"{kind!r} is not a two-channel kind")
    return (DitherSpec(kind, 1, epsilon, kappa), DitherSpec(kind, 2, epsilon, kappa))


def make_triple(epsilon: float, kappa: int = 1) -> tuple[DitherSpec, DitherSpec, DitherSpec]:
    """The three channels of the [[g1,g2],g3]-exciting design."""
    return tuple(DitherSpec("triple123", ch, epsilon, kappa) for ch in (1, 2, 3))


@dataclass
class ResonanceReport:
    """Integer resonances n1*a + n2*b = 0 of order |n1|+|n2| <= 4 across two frequency sets."""

    pairs: list[tuple[float, float]]
    violations: list[tuple[tuple[float, float], tuple[int, int]]]
    ok: bool


def check_resonances(freqs_a: Sequence[int], freqs_b: Sequence[int],
                     max_order: int = 4) -> ResonanceReport:
    """Search all cross pairs for small integer resonances."""
    if not freqs_a or not freqs_b:
        raise InvalidParameterError("frequency lists must be nonempty")
    for f in list(freqs_a) + list(freqs_b):
        if f <= 0:
            raise InvalidParameterError(f"frequencies must be positive, got {f}")
    pairs = [(a, b) for a in freqs_a for b in freqs_b]
    violations = []
    for a, b in pairs:
        for n1 in range(-max_order, max_order + 1):
            for n2 in range(-max_order, max_order + 1):
                if n1 == 0 and n2 == 0:
                    continue
                if abs(n1) + abs(n2) > max_order:
                    continue
                if n1 * a + n2 * b == 0:
                    violations.append(((a, b), (n1, n2)))
    return ResonanceReport(pairs=pairs, violations=violations, ok=not violations)
