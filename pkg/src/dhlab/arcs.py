"""Arc dissections of the real line and of the unit interval.

Two flavours live here:

* the whole-line major/minor/trivial split driven by cutoffs S(P)*P^-k and
  T(P) (the real-line method for inequalities), and
* rational-arc families on [0, 1): the classical arcs around a/q with
  q <= P/(2k) and width P^(1-k)/(2k), plus the two narrower families used
  for cubic forms (width P^(-9/4) with q <= P^(3/4), and width
  (log P)^B * P^-3 with q <= (log P)^B).

Classification into rational arcs goes through continued fractions: at the
widths above, any in-arc witness satisfies |alpha - a/q| < 1/(2 q^2), so it
must be a convergent, and uniqueness is asserted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import arith, expsums
from .errors import ValidationError
from .forms import DiagonalForm, GrowthFn

DH = "DH"
HL_N = "HL_N"
V_CUBIC = "V_sec8"
W_CUBIC = "W_sec8"

MAJOR = "Major"
MINOR = "Minor"
TRIVIAL = "Trivial"
COMPLEMENT = "Complement"

# The wide rational family's nominal log-power exponent is astronomically
# large at desk scale ((log P)^100 >> P^3 for any reachable P, which would
# classify every point as major); experiments default to this tamer value
# and the nominal one stays available via `w_log_exponent`.
W_LOG_EXPONENT_DEFAULT = 3.0
W_LOG_EXPONENT_NOMINAL = 100.0


@dataclass(frozen=True)
class ArcDissection:
    """Whole-line dissection at cutoffs S(P)*P^-k (major/minor) and T(P)
    (minor/trivial)."""

    p: float
    k: int
    s_handle: GrowthFn
    t_handle: GrowthFn

    def __post_init__(self):
        if self.p <= 1 or self.k < 2:
            raise ValidationError("need P > 1 and k >= 2")
        s_val, t_val = self.s_of_p, self.t_of_p
        if not (t_val >= s_val >= 1.0):
            raise ValidationError(
                f"cut ordering violated: need T(P) >= S(P) >= 1, got S={s_val}, T={t_val}"
            )

    @property
    def s_of_p(self) -> float:
        return self.s_handle(self.p)

    @property
    def t_of_p(self) -> float:
        return self.t_handle(self.p)

    @property
    def major_cut(self) -> float:
        return self.s_of_p * self.p ** (-self.k)

    @property
    def l_of_p(self) -> float:
        return max(1.0, math.log(self.t_of_p))


@dataclass(frozen=True)
class ArcLabel:
    """Classification of a point: DH class or rational-arc membership."""

    cls: str
    witness: Optional[arith.RationalApprox] = None

    @property
    def in_arc(self) -> bool:
        return self.witness is not None


def dh_classify(alpha: float, dissection: ArcDissection) -> ArcLabel:
    """Major iff |a| <= S(P)P^-k; Minor iff below |a| <= T(P); else Trivial.

    Boundaries are closed on the inner side, so the three classes partition
    the line.
    """
    a = abs(alpha)
    if a <= dissection.major_cut:
        return ArcLabel(MAJOR)
    if a <= dissection.t_of_p:
        return ArcLabel(MINOR)
    return ArcLabel(TRIVIAL)


def _family_geometry(family: str, p: float, k: int, w_log_exponent: float):
    """(q_max, width, reduce_mod_1) for a rational arc family."""
    if family == HL_N:
        return (2 * k) ** -1 * p, (2 * k) ** -1 * p ** (1 - k), False
    if family == V_CUBIC:
        if k != 3:
            raise ValidationError("the narrow cubic family is defined for k = 3")
        return p ** 0.75, p ** -2.25, True
    if family == W_CUBIC:
        if k != 3:
            raise ValidationError("the wide cubic family is defined for k = 3")
        lg = math.log(max(p, 2.0)) ** w_log_exponent
        return lg, lg * p**-3.0, True
    raise ValidationError(f"unknown rational arc family {family!r}")


def hl_classify(
    alpha: float,
    p: float,
    k: int,
    family: str = HL_N,
    w_log_exponent: float = W_LOG_EXPONENT_DEFAULT,
) -> ArcLabel:
    """Find the unique arc (a, q) of the family containing alpha, if any.

    Candidates come from the continued fraction of alpha (for these widths
    any witness is a best approximation); the classifier double-checks that
    at most one candidate passes, which is the arcs-are-disjoint invariant.
    """
    q_max, width, mod_one = _family_geometry(family, p, k, w_log_exponent)
    q_cap = math.floor(q_max)
    if q_cap < 1:
        return ArcLabel(COMPLEMENT)
    if width * q_cap >= 0.5:
        raise ValidationError(
            f"family {family} at P={p} has overlapping arcs (width*q_max >= 1/2); "
            "classification by best approximation is not sound there"
        )
    y = alpha % 1.0 if mod_one else alpha
    hits = []
    for conv in arith.convergents(y, q_cap):
        if abs(conv.denominator * y - conv.numerator) <= width:
            hits.append(conv)
    if not hits:
        return ArcLabel(COMPLEMENT)
    if len(hits) > 1:
        # nested convergent hits can only share the point if arcs overlap
        raise ValidationError(
            f"arc overlap detected for family {family}: {[(h.numerator, h.denominator) for h in hits]}"
        )
    return ArcLabel(f"InArc({hits[0].numerator},{hits[0].denominator})", hits[0])


def hl_classify_brute(alpha: float, p: float, k: int, family: str = HL_N) -> ArcLabel:
    """Oracle: scan all (a, q) with q <= q_max directly."""
    q_max, width, mod_one = _family_geometry(family, p, k, W_LOG_EXPONENT_DEFAULT)
    y = alpha % 1.0 if mod_one else alpha
    hits = []
    for q in range(1, math.floor(q_max) + 1):
        a = round(q * y)
        if math.gcd(a, q) == 1 and abs(q * y - a) <= width:
            hits.append(arith.RationalApprox(a, q, abs(q * y - a)))
    if not hits:
        return ArcLabel(COMPLEMENT)
    if len(hits) > 1:
        raise ValidationError(f"arc overlap: {[(h.numerator, h.denominator) for h in hits]}")
    return ArcLabel(f"InArc({hits[0].numerator},{hits[0].denominator})", hits[0])


def choose_T(lam1: float, lam2: float, s_handle: GrowthFn, p: float, k: int) -> float:
    """A concrete monotone trivial-arc cutoff T(P).

    Takes the largest continued-fraction denominator q_n of lam1/lam2 with
    q_n <= P^(k/2), clamped into [S(P), P^k].  If the ratio's expansion
    terminates (rational to double precision), falls back to S(P)^2 with a
    warning: no genuinely growing cutoff exists in that case.
    """
    ratio = lam1 / lam2
    cap = p ** (k / 2.0)
    cf = arith.convergents(ratio, max(1, math.floor(cap)))
    terminated = cf[-1].residual <= abs(ratio) * 2.0**-48
    if terminated or len(cf) < 2:
        warnings.warn(
            "coefficient ratio has no usable convergents (rational?); "
            "falling back to T(P) = S(P)^2",
            stacklevel=2,
        )
        return s_handle(p) ** 2
    q_n = cf[-1].denominator
    return float(min(max(float(q_n), s_handle(p)), p**k))


def minor_sup_profile(
    form: DiagonalForm,
    s_handle: GrowthFn,
    p_values: list[float],
    grid_size: int = 1000,
    seed: int = 0,
    t_handle: Optional[GrowthFn] = None,
) -> list[dict]:
    """Empirical sup of |f1 f2| / P^2 over minor-arc samples, per P.

    Sampling is stratified: log-uniform across the minor range, plus points
    hugging both arc boundaries and the continued-fraction rationals of
    lambda2/lambda1 (where coherence peaks live).  Purely observational:
    rows carry the sup and trend data, no theoretical assertion.
    """
    if grid_size < 1:
        raise ValidationError("grid_size must be >= 1")
    lam1, lam2 = form.coefficients[0], form.coefficients[1]
    rng = np.random.default_rng(seed)
    rows = []
    for p in p_values:
        if t_handle is None:
            t_val = choose_T(lam1, lam2, s_handle, p, form.k)
            dis = ArcDissection(p, form.k, s_handle, GrowthFn("const", (t_val,)))
        else:
            dis = ArcDissection(p, form.k, s_handle, t_handle)
        lo, hi = dis.major_cut, dis.t_of_p
        n_bulk = max(1, grid_size // 2)
        alphas = [math.exp(v) for v in rng.uniform(math.log(lo), math.log(hi), n_bulk)]
        # boundary-hugging strata
        for eps in np.geomspace(1e-6, 0.5, (grid_size - n_bulk) // 2 + 1):
            alphas.append(lo * (1 + eps))
            alphas.append(hi * (1 - eps * 0.999))
        # near-coherent points: lambda_1 * alpha integral at convergent
        # denominators of lambda2/lambda1, where |f1 f2| peaks
        for conv in arith.convergents(lam2 / lam1, 10**6):
            a_r = conv.denominator / abs(lam1)
            if lo < a_r <= hi:
                alphas.append(a_r)
        alphas = np.array([a for a in alphas if lo < a <= hi][: grid_size + 64])
        pm = int(p)
        f1 = expsums.sum_over_grid(np.arange(1, pm + 1), form.k, lam1 * alphas)
        f2 = expsums.sum_over_grid(np.arange(1, pm + 1), form.k, lam2 * alphas)
        prod = np.abs(f1 * f2) / pm**2
        best = int(np.argmax(prod))
        witness = arith.best_approximation(float(alphas[best]), max(2, pm))
        rows.append(
            {
                "P": p,
                "sup_ratio": float(prod[best]),
                "alpha": float(alphas[best]),
                "class": MINOR,
                "q": witness.denominator,
                "a": witness.numerator,
                "residual": witness.residual,
                "S": dis.s_of_p,
                "T": dis.t_of_p,
                "samples": len(alphas),
            }
        )
    for i, row in enumerate(rows):
        row["decreasing_so_far"] = all(
            rows[j + 1]["sup_ratio"] < rows[j]["sup_ratio"] for j in range(i)
        )
    return rows
