"""Sinc-product smoothing kernels and their Fourier calculus.

Five kernels are supported, all built from s(x) = sin(x)/x:

    K_plus / K_minus   (2*tau +- delta) * s(pi*delta*a) * s(pi*(2*tau +- delta)*a)
    K1                 s(pi*delta*a)^2
    K2_plus / K2_minus ((2*tau +- delta) * s(pi*(2*tau +- delta)*a))^2
    K_lower            (tau * s(pi*tau*a))^2

The Fourier transforms of K_minus/K_plus are trapezoids sandwiching the
indicator of (-tau, tau); K1 transforms to the triangle
delta^-1 * max(0, 1 - |t|/delta) and K_lower to max(0, tau - |t|).

`sandwich_residual` checks the indicator sandwich by truncated adaptive
quadrature: each kernel is split by product-to-sum into cosines over the
envelope a^-2, the head [0, x0] is integrated by plain adaptive
Gauss-Kronrod, and each cosine tail by QUADPACK's oscillatory-weight rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import NumericError, ValidationError
from .intervals import IntervalUnion

K_PLUS = "K_plus"
K_MINUS = "K_minus"
K1 = "K1"
K2_PLUS = "K2_plus"
K2_MINUS = "K2_minus"
K_LOWER = "K_sec9"

_KINDS = (K_PLUS, K_MINUS, K1, K2_PLUS, K2_MINUS, K_LOWER)


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    tau: float
    delta: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown kernel kind {self.kind!r}")
        if not 0 < self.delta <= self.tau <= 1:
            raise ValidationError("need 0 < delta <= tau <= 1")


def _sinc(x: float) -> float:
    """sin(x)/x with a 4-term Taylor series below |x| < 1e-3 to avoid
    cancellation at the removable singularity."""
    if abs(x) < 1e-3:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0 - x2 * x2 * x2 / 5040.0
    return math.sin(x) / x


def eval_kernel(spec: KernelSpec, alpha: float) -> float:
    """Pointwise kernel value (exact limits at alpha = 0)."""
    tau, delta = spec.tau, spec.delta
    a = alpha
    if spec.kind in (K_PLUS, K_MINUS):
        wide = 2 * tau + (delta if spec.kind == K_PLUS else -delta)
        return wide * _sinc(math.pi * delta * a) * _sinc(math.pi * wide * a)
    if spec.kind == K1:
        return _sinc(math.pi * delta * a) ** 2
    if spec.kind in (K2_PLUS, K2_MINUS):
        wide = 2 * tau + (delta if spec.kind == K2_PLUS else -delta)
        return (wide * _sinc(math.pi * wide * a)) ** 2
    # K_LOWER
    return (tau * _sinc(math.pi * tau * a)) ** 2


def fourier_k1(t: float, delta: float) -> float:
    """Closed-form transform of K1: the triangle delta^-1*max(0,1-|t|/delta)."""
    if delta <= 0:
        raise ValidationError("delta must be positive")
    return max(0.0, 1.0 - abs(t) / delta) / delta


def fourier_k_lower(t: float, tau: float) -> float:
    """Closed-form transform of the lower-bound kernel: max(0, tau - |t|)."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    return max(0.0, tau - abs(t))


def fourier_sandwich(t: float, spec: KernelSpec) -> float:
    """Closed-form transform of K_minus/K_plus (trapezoid profiles).

    K_minus: 1 on |t| <= tau-delta, linear down to 0 at |t| = tau.
    K_plus:  1 on |t| <= tau, linear down to 0 at |t| = tau+delta.
    """
    tau, delta = spec.tau, spec.delta
    t = abs(t)
    if spec.kind == K_MINUS:
        hi, lo = tau, tau - delta
    elif spec.kind == K_PLUS:
        hi, lo = tau + delta, tau
    else:
        raise ValidationError("fourier_sandwich applies to K_plus/K_minus only")
    if t <= lo:
        return 1.0
    if t >= hi:
        return 0.0
    return (hi - t) / delta


def indicator_sandwich(t: float, spec: KernelSpec) -> tuple[float, float]:
    """The (lower, upper) indicator pair bounding the transform of the spec."""
    tau, delta = spec.tau, spec.delta
    if spec.kind == K_MINUS:
        lower, upper = tau - delta, tau
    elif spec.kind == K_PLUS:
        lower, upper = tau, tau + delta
    else:
        raise ValidationError("sandwich applies to K_plus/K_minus only")
    return (1.0 if abs(t) < lower else 0.0), (1.0 if abs(t) < upper else 0.0)


# ---------------------------------------------------------------------------
# cosine decompositions:  K(a) = sum_j c_j cos(2 pi w_j a) / (scale * a^2)
# ---------------------------------------------------------------------------


def _cosine_terms(spec: KernelSpec) -> tuple[float, list[tuple[float, float]]]:
    """Return (scale, [(coeff, freq), ...]) with K(a) = sum c*cos(2 pi w a)/(scale*a^2)."""
    tau, delta = spec.tau, spec.delta
    if spec.kind == K_MINUS:
        return 2 * math.pi**2 * delta, [(1.0, tau - delta), (-1.0, tau)]
    if spec.kind == K_PLUS:
        return 2 * math.pi**2 * delta, [(1.0, tau), (-1.0, tau + delta)]
    if spec.kind == K1:
        return 2 * math.pi**2 * delta**2, [(1.0, 0.0), (-1.0, delta)]
    if spec.kind == K2_MINUS:
        return 2 * math.pi**2, [(1.0, 0.0), (-1.0, 2 * tau - delta)]
    if spec.kind == K2_PLUS:
        return 2 * math.pi**2, [(1.0, 0.0), (-1.0, 2 * tau + delta)]
    return 2 * math.pi**2, [(1.0, 0.0), (-1.0, tau)]  # K_LOWER


def _modulated_terms(spec: KernelSpec, t: float) -> tuple[float, dict[float, float]]:
    """Cosine terms of 2*K(a)*cos(2 pi t a), frequencies folded to >= 0."""
    scale, base = _cosine_terms(spec)
    terms: dict[float, float] = {}
    for c, w in base:
        for wc in (w + t, w - t):
            key = abs(wc)
            terms[key] = terms.get(key, 0.0) + c
    return scale, terms


def decay_envelope(spec: KernelSpec, alpha: float) -> float:
    """The standard decay majorant min(tau, 1/|a|, 1/(delta*a^2))."""
    a = abs(alpha)
    if a == 0:
        return spec.tau
    return min(spec.tau, 1.0 / a, 1.0 / (spec.delta * a * a))


def truncation_tail(spec: KernelSpec, A: float) -> float:
    """Exact integral of the decay majorant over |alpha| > A.

    This is a certified bound for the discarded tail of the sandwich
    transform once A >= 1/delta (where the majorant dominates |K| pointwise).
    """
    tau, delta = spec.tau, spec.delta
    a1, a2 = 1.0 / tau, 1.0 / delta
    A = max(A, 0.0)
    total = 0.0
    if A < a1:
        total += tau * (a1 - A)
        A = a1
    if A < a2:
        total += math.log(a2 / A)
        A = a2
    total += 1.0 / (delta * A)
    return 2.0 * total


def truncation_radius(spec: KernelSpec, tail_tol: float) -> float:
    """Smallest A (up to slack) with truncation_tail(A) <= tail_tol."""
    if tail_tol <= 0:
        raise ValidationError("tail tolerance must be positive")
    return max(2.0 / (spec.delta * tail_tol), 1.0 / spec.delta)


@dataclass
class QuadratureRecord:
    """Diagnostics for one truncated transform evaluation."""

    value: float
    error_estimate: float
    tail_bound: float
    nodes: int


def fourier_numeric(
    spec: KernelSpec,
    t: float,
    A: float,
    quad_tol: float = 1e-9,
    head: float = 1.0,
) -> QuadratureRecord:
    """Truncated transform  int_{-A}^{A} e(alpha t) K(alpha) d alpha  by
    adaptive quadrature.

    The integrand is even, so the integral is 2*int_0^A K cos(2 pi t a).
    [0, head] goes to plain Gauss-Kronrod; on [head, A] each product-to-sum
    cosine component rides QUADPACK's oscillatory rule over the smooth
    envelope a^-2.  Zero-frequency components integrate exactly.
    """
    if A <= head:
        raise ValidationError("truncation radius must exceed the head interval")
    total_err = 0.0
    nodes = 0

    def head_integrand(a: float) -> float:
        return 2.0 * eval_kernel(spec, a) * math.cos(2 * math.pi * t * a)

    value, err, info = quad(
        head_integrand, 0.0, head, epsabs=quad_tol, limit=200, full_output=True
    )[:3]
    total_err += err
    nodes += info["neval"]

    scale, terms = _modulated_terms(spec, t)
    for w, c in terms.items():
        if abs(c) < 1e-15:
            continue
        if w * A < 1e-9:  # effectively constant over [head, A]
            piece, perr, pnodes = 1.0 / head - 1.0 / A, 0.0, 0
        else:
            out = quad(
                lambda a: a**-2.0,
                head,
                A,
                weight="cos",
                wvar=2 * math.pi * w,
                epsabs=quad_tol,
                limit=800,
                maxp1=100,
                full_output=True,
            )
            if len(out) > 3:
                # QAWO's moment recursion occasionally gives up on the very
                # first panel with an untrustworthy value; redo the piece as
                # a semi-infinite Fourier integral (QAWF).  The extra
                # [A, inf) mass it includes is below the 1/A envelope bound,
                # which goes into the error estimate.
                out = quad(
                    lambda a: a**-2.0,
                    head,
                    np.inf,
                    weight="cos",
                    wvar=2 * math.pi * w,
                    epsabs=quad_tol,
                    limit=400,
                    full_output=True,
                )
                if len(out) > 3:
                    raise NumericError(
                        f"oscillatory quadrature failed for {spec.kind} at t={t}",
                        diagnostics={"freq": w, "message": str(out[3])},
                    )
                out = (out[0], out[1] + 1.0 / A, out[2])
            piece, perr, pnodes = out[0], out[1], out[2]["neval"]
        value += (c / scale) * piece
        total_err += abs(c / scale) * perr
        nodes += pnodes
    return QuadratureRecord(value, total_err, truncation_tail(spec, A), nodes)


def sandwich_residual(
    t: float,
    spec: KernelSpec,
    A: Optional[float] = None,
    tail_tol: float = 5e-4,
    quad_tol: float = 1e-9,
) -> tuple[float, float]:
    """Signed gaps of the truncated transform against the indicator sandwich.

    Returns (lower_gap, upper_gap) = (I - lower_indicator, upper_indicator - I);
    both must be >= -(tail bound + quadrature error) for the sandwich to hold.
    """
    if spec.kind not in (K_PLUS, K_MINUS):
        raise ValidationError("sandwich_residual applies to K_plus/K_minus only")
    if A is None:
        A = truncation_radius(spec, tail_tol)
    rec = fourier_numeric(spec, t, A, quad_tol=quad_tol)
    lo, hi = indicator_sandwich(t, spec)
    return rec.value - lo, hi - rec.value


# ---------------------------------------------------------------------------
# quadratic forms of H_{eta, Z} against K1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HSupport:
    """Support Z (an interval union) and unit-modulus phase weights eta."""

    support: IntervalUnion
    eta: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if len(self.support) and self.eta is not None:
            mus = _low_discrepancy_points(self.support, 64)
            if not np.allclose(np.abs(self.eta(mus)), 1.0, atol=1e-9):
                raise ValidationError("|eta| must equal 1 on the support")


def _triangle_psi(u: np.ndarray, delta: float) -> np.ndarray:
    """Second antiderivative (up to affine terms) of the triangle
    delta^-1*max(0, 1-|u|/delta); piecewise cubic, Psi(-delta) = 0."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    d = delta
    left = u <= -d
    mid_neg = (~left) & (u <= 0)
    mid_pos = (u > 0) & (u < d)
    right = u >= d
    out[left] = 0.0
    un = u[mid_neg]
    out[mid_neg] = un / 2 + un**2 / (2 * d) + un**3 / (6 * d * d) + d / 6
    up = u[mid_pos]
    out[mid_pos] = d / 6 + up / 2 + up**2 / (2 * d) - up**3 / (6 * d * d)
    out[right] = u[right]
    return out


def h_l2_k1(support: HSupport, delta: float, samples: int = 1 << 14) -> float:
    """The mean value  int |H_{eta,Z}|^2 K1  computed on the Fourier side.

    For eta == 1 this is the exact double integral of the triangle kernel
    over Z x Z, evaluated in closed form pairwise (only pairs within delta
    of each other contribute).  For general unit-modulus eta a deterministic
    low-discrepancy estimate over Z x Z is used instead.
    """
    if delta <= 0:
        raise ValidationError("delta must be positive")
    z = support.support
    if len(z) == 0:
        return 0.0
    if support.eta is not None:
        return _h_l2_k1_qmc(support, delta, samples)[0]
    total = 0.0
    starts, ends = z.starts, z.ends
    for i in range(len(z)):
        p, q = starts[i], ends[i]
        # pairs (i, j) with gap > delta contribute nothing
        for j in range(i, len(z)):
            r, s = starts[j], ends[j]
            if r - q >= delta:
                break
            block = _triangle_block(p, q, r, s, delta)
            total += block if i == j else 2.0 * block
    return float(total)


def _triangle_block(p: float, q: float, r: float, s: float, delta: float) -> float:
    """int_{x in [p,q]} int_{y in [r,s]} tri_delta(x - y) dy dx, closed form."""
    psi = lambda u: float(_triangle_psi(np.array([u]), delta)[0])
    return psi(q - r) - psi(p - r) - psi(q - s) + psi(p - s)


def _low_discrepancy_points(z: IntervalUnion, n: int) -> np.ndarray:
    """Map a Halton sequence through the measure parameterization of Z."""
    from scipy.stats import qmc

    u = qmc.Halton(d=1, scramble=False).random(n)[:, 0]
    lengths = z.ends - z.starts
    cum = np.concatenate(([0.0], np.cumsum(lengths)))
    x = u * cum[-1]
    idx = np.clip(np.searchsorted(cum, x, side="right") - 1, 0, len(z) - 1)
    return z.starts[idx] + (x - cum[idx])


def _h_l2_k1_qmc(support: HSupport, delta: float, n: int) -> tuple[float, float]:
    """Deterministic 2-D low-discrepancy estimate with a declared error
    (difference between the n- and n/2-point estimates)."""
    from scipy.stats import qmc

    z = support.support
    measure = z.measure
    pts = qmc.Halton(d=2, scramble=False).random(n)
    lengths = z.ends - z.starts
    cum = np.concatenate(([0.0], np.cumsum(lengths)))

    def lift(u):
        x = u * cum[-1]
        idx = np.clip(np.searchsorted(cum, x, side="right") - 1, 0, len(z) - 1)
        return z.starts[idx] + (x - cum[idx])

    mu, nu = lift(pts[:, 0]), lift(pts[:, 1])
    eta = support.eta
    vals = (
        np.conj(eta(mu)) * eta(nu) * fourier_k1_vec(mu - nu, delta)
    ).real * measure**2
    full = float(np.mean(vals))
    half = float(np.mean(vals[: n // 2]))
    return full, abs(full - half)


def fourier_k1_vec(t: np.ndarray, delta: float) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(t) / delta) / delta
