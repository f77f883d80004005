"""Iterated integrals of dither signals, truncated signature logarithm, and
excitation verification.

The signature stores the iterated integrals

    I_w = int_0^eps u_{i1}(s1) int_0^{s1} u_{i2}(s2) ... ds_l ... ds_1,

for words w = (i1 ... il): the first letter takes the outermost (latest)
integration variable.  Reversing every word turns this into the path-ordered
signature, whose tensor logarithm is a Lie element; expanding that logarithm
over right-iterated brackets [[...[e_{v1}, e_{v2}], ...], e_{vl}] and dividing
by eps yields the per-period bracket coefficients that weight the averaged
dynamics: over one period the state moves by

    x(eps) - x0 = sum_v  coeff_v * eps * (bracket_v of the fields)(x0) + R.

Basis label words are chosen per degree by a deterministic greedy sweep that
prefers Lyndon words, so the targets (1,2), (1,2,2), (1,2,3), (1,2,2,2) are
always labels.  The projection solves a small exact-rank least-squares system;
its residual measures how far the computed logarithm is from a Lie element
and is dominated by quadrature error.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, ResolutionError
from .dither import DitherSpec, eval_dither
from .lie import iterated_bracket

__all__ = [
    "Signature",
    "BracketCoefficients",
    "ExcitationReport",
    "compute_signature",
    "log_signature",
    "verify_excitation",
    "endpoint_prediction",
    "shuffles",
    "shuffle_residual",
    "basis_labels",
    "expand_bracket",
    "tensor_log",
    "tensor_exp",
]

MAX_DEPTH = 4


# ---------------------------------------------------------------------------
# words, shuffles, bracket expansions
# ---------------------------------------------------------------------------

def words_up_to(n_channels: int, depth: int):
    for ell in range(1, depth + 1):
        yield from product(range(1, n_channels + 1), repeat=ell)


def shuffles(w1: tuple, w2: tuple):
    """All interleavings of w1 and w2 preserving internal order (with multiplicity)."""
    if not w1:
        yield w2
        return
    if not w2:
        yield w1
        return
    for s in shuffles(w1[1:], w2):
        yield (w1[0],) + s
    for s in shuffles(w1, w2[1:]):
        yield (w2[0],) + s


@lru_cache(maxsize=None)
def expand_bracket(word: tuple) -> dict:
    """Word-space expansion of the right-iterated bracket indexed by `word`."""
    if len(word) == 1:
        return {word: 1}
    prev = expand_bracket(word[:-1])
    last = word[-1]
    out: dict = {}
    for w, c in prev.items():
        right = w + (last,)
        left = (last,) + w
        out[right] = out.get(right, 0) + c
        out[left] = out.get(left, 0) - c
    return {w: c for w, c in out.items() if c}


def _lie_dimension(n: int, ell: int) -> int:
    """Necklace-count dimension of the degree-ell free Lie algebra component."""
    def mobius(m: int) -> int:
        if m == 1:
            return 1
        res, x, p = 1, m, 2
        count = 0
        while p * p <= x:
            if x % p == 0:
                x //= p
                count += 1
                if x % p == 0:
                    return 0
            p += 1
        if x > 1:
            count += 1
        return -1 if count % 2 else 1

    total = sum(mobius(d) * n ** (ell // d) for d in range(1, ell + 1) if ell % d == 0)
    return total // ell


def _is_lyndon(w: tuple) -> bool:
    return all(w < w[i:] + w[:i] for i in range(1, len(w)))


def _rank_increases(rows: list[dict], new: dict) -> bool:
    """Exact Fraction Gaussian elimination: does `new` extend the span of `rows`?"""
    cols = sorted(set().union(*[r.keys() for r in rows], new.keys()))
    idx = {c: i for i, c in enumerate(cols)}
    mat = []
    for r in rows + [new]:
        row = [Fraction(0)] * len(cols)
        for c, v in r.items():
            row[idx[c]] = Fraction(v)
        mat.append(row)
    rank = 0
    m, n = len(mat), len(cols)
    for col in range(n):
        pivot = next((r for r in range(rank, m) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        pv = mat[rank][col]
        for r in range(m):
            if r != rank and mat[r][col] != 0:
                f = mat[r][col] / pv
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
    return rank == len(rows) + 1


@lru_cache(maxsize=None)
def basis_labels(n_channels: int, ell: int) -> tuple:
    """Label words whose right-iterated brackets form a basis of degree ell.

    Lyndon words are tried first in lexicographic order, then all remaining
    words; a word is accepted when its bracket expansion enlarges the span.
    """
    dim = _lie_dimension(n_channels, ell)
    all_words = list(product(range(1, n_channels + 1), repeat=ell))
    candidates = [w for w in all_words if _is_lyndon(w)]
    candidates += [w for w in all_words if not _is_lyndon(w)]
    labels: list[tuple] = []
    rows: list[dict] = []
    for w in candidates:
        exp = expand_bracket(w)
        if not exp:
            continue
        if _rank_increases(rows, exp):
            labels.append(w)
            rows.append(exp)
        if len(labels) == dim:
            break
    if len(labels) != dim:
        raise RuntimeError(f"bracket basis construction failed for n={n_channels}, ell={ell}")
    return tuple(labels)


# ---------------------------------------------------------------------------
# graded tensor arithmetic
# ---------------------------------------------------------------------------

def _tensor_mul(A: dict, B: dict, depth: int) -> dict:
    out: dict = {}
    for wa, ca in A.items():
        for wb, cb in B.items():
            w = wa + wb
            if len(w) <= depth:
                out[w] = out.get(w, 0.0) + ca * cb
    return out


def tensor_log(entries: dict, depth: int) -> dict:
    """log(1 + X) truncated at the given depth; entries hold X (no empty word)."""
    out: dict = {}
    power = dict(entries)
    sign = 1.0
    for k in range(1, depth + 1):
        for w, c in power.items():
            out[w] = out.get(w, 0.0) + sign * c / k
        if k < depth:
            power = _tensor_mul(power, entries, depth)
        sign = -sign
    return out


def tensor_exp(entries: dict, depth: int) -> dict:
    """exp(X) - 1 truncated at the given depth."""
    out: dict = {}
    power = dict(entries)
    fact = 1.0
    for k in range(1, depth + 1):
        fact *= k
        for w, c in power.items():
            out[w] = out.get(w, 0.0) + c / fact
        if k < depth:
            power = _tensor_mul(power, entries, depth)
    return out


# ---------------------------------------------------------------------------
# signature computation
# ---------------------------------------------------------------------------

@dataclass
class Signature:
    """Iterated integrals of a dither set over one period."""

    depth: int
    n_channels: int
    epsilon: float
    quadrature_steps: int
    entries: dict = field(default_factory=dict)

    def entry(self, word: tuple) -> float:
        return self.entries[tuple(word)]


@dataclass
class BracketCoefficients:
    """Per-period bracket coefficients: the eps-normalized signature logarithm."""

    depth: int
    n_channels: int
    epsilon: float
    coefficients: dict = field(default_factory=dict)
    projection_residual: float = 0.0

    def coefficient(self, index: tuple) -> float:
        return self.coefficients[tuple(index)]

    def labels(self, length: int | None = None):
        if length is None:
            return sorted(self.coefficients, key=lambda w: (len(w), w))
        return [w for w in sorted(self.coefficients) if len(w) == length]


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.empty_like(y)
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) * (0.5 * dt), out=out[1:])
    return out


def compute_signature(dithers: Sequence[DitherSpec], depth: int = MAX_DEPTH,
                      quadrature_steps: int | None = None) -> Signature:
    """All iterated integrals over one period on a uniform grid.

    The integrals accumulate progressively: the suffix antiderivative of each
    word is the running trapezoid integral of (channel sample * inner suffix),
    so suffixes shared between words are computed once.
    """
    if not dithers:
        raise InvalidParameterError("need at least one dither channel")
    if depth < 1 or depth > MAX_DEPTH:
        raise InvalidParameterError(f"depth must be 1..{MAX_DEPTH}, got {depth}")
    eps = dithers[0].epsilon
    if any(abs(d.epsilon - eps) > 1e-15 * eps for d in dithers):
        raise InvalidParameterError("all dither channels must share one period")
    fastest = max(d.fastest_harmonic for d in dithers)
    if quadrature_steps is None:
        env = os.environ.get("LIEES_QUAD_STEPS")
        if env is not None:
            try:
                quadrature_steps = int(env)
            except ValueError:
                raise InvalidParameterError(
                    f"LIEES_QUAD_STEPS must be an integer, got {env!r}"
                )
        else:
            quadrature_steps = max(4096, 512 * fastest)
    if quadrature_steps < 16 * fastest:
        raise ResolutionError(
            f"{quadrature_steps} steps resolve the fastest harmonic ({fastest}/period) "
            f"with fewer than 16 samples"
        )

    n = len(dithers)
    m = quadrature_steps
    dt = eps / m
    ts = np.linspace(0.0, eps, m + 1)
    us = [np.array([eval_dither(d, t) for t in ts]) for d in dithers]

    suffix: dict = {(): np.ones(m + 1)}

    def suffix_integral(word: tuple) -> np.ndarray:
        if word in suffix:
            return suffix[word]
        inner = suffix_integral(word[1:])
        val = _cumtrapz(us[word[0] - 1] * inner, dt)
        suffix[word] = val
        return val

    entries = {w: float(suffix_integral(w)[-1]) for w in words_up_to(n, depth)}
    return Signature(depth=depth, n_channels=n, epsilon=eps,
                     quadrature_steps=m, entries=entries)


def shuffle_residual(sig: Signature, pairs: Sequence[tuple] | None = None) -> float:
    """Worst violation of entry(w1) entry(w2) = sum of shuffle entries.

    Scaled per pair by the depth-matched magnitude eps^(|w|/N_min) so the
    residual is comparable across word lengths.
    """
    if pairs is None:
        ws = [w for w in sig.entries if len(w) <= sig.depth - 1]
        pairs = [(w1, w2) for w1 in ws for w2 in ws if len(w1) + len(w2) <= sig.depth]
    worst = 0.0
    scale = max(abs(v) for v in sig.entries.values()) or 1.0
    for w1, w2 in pairs:
        lhs = sig.entry(w1) * sig.entry(w2)
        rhs = sum(sig.entry(s) for s in shuffles(tuple(w1), tuple(w2)))
        denom = max(abs(lhs), abs(rhs), scale)
        worst = max(worst, abs(lhs - rhs) / denom)
    return worst


# ---------------------------------------------------------------------------
# logarithm and projection
# ---------------------------------------------------------------------------

def log_signature(sig: Signature) -> BracketCoefficients:
    """Tensor logarithm projected on the right-iterated bracket basis, per eps."""
    # word reversal converts the stored integrals into the path-ordered
    # convention in which the logarithm pairs with same-index field brackets
    std = {tuple(reversed(w)): v for w, v in sig.entries.items()}
    log = tensor_log(std, sig.depth)

    coeffs: dict = {}
    worst_abs = 0.0
    global_scale = 0.0
    for ell in range(1, sig.depth + 1):
        labels = basis_labels(sig.n_channels, ell)
        all_words = list(product(range(1, sig.n_channels + 1), repeat=ell))
        col_of = {w: i for i, w in enumerate(all_words)}
        A = np.zeros((len(all_words), len(labels)))
        for j, lab in enumerate(labels):
            for w, c in expand_bracket(lab).items():
                A[col_of[w], j] = c
        b = np.array([log.get(w, 0.0) for w in all_words])
        sol, *_ = np.linalg.lstsq(A, b, rcond=None)
        worst_abs = max(worst_abs, float(np.abs(b - A @ sol).max()))
        global_scale = max(global_scale, float(np.abs(b).max()))
        for j, lab in enumerate(labels):
            coeffs[lab] = float(sol[j]) / sig.epsilon

    return BracketCoefficients(depth=sig.depth, n_channels=sig.n_channels,
                               epsilon=sig.epsilon, coefficients=coeffs,
                               projection_residual=worst_abs / max(global_scale, 1e-300))


@dataclass
class ExcitationReport:
    target: tuple
    target_coeff: float
    max_offtarget: float
    offtarget_index: tuple | None
    tol: float
    ok: bool


def _canonical_target(target: tuple, n_channels: int) -> tuple[tuple, float]:
    """Map a bracket index to the equal-or-negated basis label representing it."""
    target = tuple(target)
    labels = basis_labels(n_channels, len(target))
    if target in labels:
        return target, 1.0
    exp = expand_bracket(target)
    for lab in labels:
        lab_exp = expand_bracket(lab)
        if exp == lab_exp:
            return lab, 1.0
        if exp == {w: -c for w, c in lab_exp.items()}:
            return lab, -1.0
    raise InvalidParameterError(
        f"bracket index {target} is not (up to sign) a basis label; valid labels: {labels}"
    )


def verify_excitation(dithers: Sequence[DitherSpec], target: tuple, tol: float = 1e-3,
                      quadrature_steps: int | None = None) -> ExcitationReport:
    """Check that exactly the target bracket is excited up to depth max(4, len)."""
    target = tuple(target)
    if not 2 <= len(target) <= MAX_DEPTH:
        raise InvalidParameterError(f"target length must be 2..{MAX_DEPTH}, got {len(target)}")
    depth = max(MAX_DEPTH, len(target))
    label, sign = _canonical_target(target, len(dithers))
    sig = compute_signature(dithers, depth, quadrature_steps)
    coeffs = log_signature(sig)
    target_coeff = sign * coeffs.coefficient(label)
    worst, worst_w = 0.0, None
    for w, v in coeffs.coefficients.items():
        if w == label:
            continue
        if abs(v) > worst:
            worst, worst_w = abs(v), w
    ok = abs(target_coeff) > tol and worst < tol * abs(target_coeff)
    return ExcitationReport(target=target, target_coeff=target_coeff,
                            max_offtarget=worst, offtarget_index=worst_w,
                            tol=tol, ok=ok)


def endpoint_prediction(system, x0: float, order: int = MAX_DEPTH,
                        quadrature_steps: int | None = None) -> float:
    """Truncated one-period endpoint x0 + sum coeff * eps * bracket(x0)."""
    from .sim import ESSystem  # local import to avoid a cycle

    if not isinstance(system, ESSystem):
        raise InvalidParameterError("endpoint_prediction expects an ESSystem")
    sig = compute_signature(system.dithers, order, quadrature_steps)
    coeffs = log_signature(sig)
    fields = system.fields
    x = x0
    for w, c in coeffs.coefficients.items():
        if abs(c) < 1e-12:
            continue
        x += c * system.epsilon * iterated_bracket(fields, w, x0)
    return x
