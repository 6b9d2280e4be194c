"""Core domain types: diagonal forms, tolerance parameters, windows, boxes,
diminishing ranges, growth-function handles, and stored parameter tables.

Everything here is an immutable value type, freely shareable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from . import arith
from .errors import ResourceLimitError, ValidationError

# ---------------------------------------------------------------------------
# growth-function handles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFn:
    """A named monotone nondecreasing function handle, always >= 1.

    Recorded by name+params in configs and reports so that every experiment
    states which S, T, L, psi, U it actually ran with.
    """

    kind: str
    params: tuple[float, ...] = ()
    child: Optional["GrowthFn"] = None

    def __call__(self, p: float) -> float:
        if self.kind == "const":
            return max(1.0, self.params[0])
        if self.kind == "log_power":
            (nu,) = self.params
            return max(1.0, math.log(max(p, 1.0))) ** nu
        if self.kind == "power":
            coeff, gamma = self.params
            return max(1.0, coeff * p**gamma)
        if self.kind == "loglog":
            return max(1.0, math.log(math.log(max(p, 3.0))))
        if self.kind == "log_of":
            return max(1.0, math.log(max(self.child(p), 1.0)))
        if self.kind == "min_with_linear":
            (slope,) = self.params
            return max(1.0, min(self.child(p), slope * p))
        raise ValidationError(f"unknown growth function kind {self.kind!r}")

    def describe(self) -> str:
        inner = f",{self.child.describe()}" if self.child else ""
        params = ",".join(repr(x) for x in self.params)
        return f"{self.kind}({params}{inner})"


def growth_const(c: float) -> GrowthFn:
    return GrowthFn("const", (float(c),))


def growth_log_power(nu: float) -> GrowthFn:
    return GrowthFn("log_power", (float(nu),))


def growth_power(coeff: float, gamma: float) -> GrowthFn:
    return GrowthFn("power", (float(coeff), float(gamma)))


def growth_loglog() -> GrowthFn:
    return GrowthFn("loglog")


def growth_log_of(child: GrowthFn) -> GrowthFn:
    return GrowthFn("log_of", (), child)


def growth_min_with_linear(child: GrowthFn, slope: float) -> GrowthFn:
    """min(child(P), slope*P) -- the standard major-arc cutoff cap."""
    return GrowthFn("min_with_linear", (float(slope),), child)


# ---------------------------------------------------------------------------
# diagonal forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalForm:
    """F(x) = lambda_1 x_1^k + ... + lambda_s x_s^k with nonzero real
    coefficients.

    `irrational_pair`, when set, designates indices (i, j) whose coefficient
    ratio the user asserts to be irrational.  The assertion is sanity-checked
    (no exact rational detected among continued-fraction denominators up to
    10^6) but cannot be proven from floats.
    """

    k: int
    coefficients: tuple[float, ...]
    irrational_pair: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError("exponent k must be >= 2")
        if len(self.coefficients) < 1:
            raise ValidationError("at least one coefficient required")
        if any(c == 0 or not math.isfinite(c) for c in self.coefficients):
            raise ValidationError("coefficients must be nonzero finite reals")
        if self.irrational_pair is not None:
            i, j = self.irrational_pair
            if not (0 <= i < self.s and 0 <= j < self.s and i != j):
                raise ValidationError("irrational_pair indices out of range")
            ratio = self.coefficients[i] / self.coefficients[j]
            cf = arith.convergents(ratio, 1_000_000)
            # residual within a few ulps of the ratio means the float is
            # indistinguishable from a small-denominator rational
            last = cf[-1]
            if last.residual <= abs(ratio) * 2.0**-48:
                raise ValidationError(
                    f"ratio lambda_{i}/lambda_{j} = {ratio} detected rational "
                    f"({last.numerator}/{last.denominator}); cannot flag irrational"
                )

    @property
    def s(self) -> int:
        return len(self.coefficients)

    def value(self, x) -> float:
        return float(sum(c * xi**self.k for c, xi in zip(self.coefficients, x)))

    def with_appended(self, *coeffs: float) -> "DiagonalForm":
        return DiagonalForm(self.k, self.coefficients + tuple(coeffs), self.irrational_pair)


@dataclass(frozen=True)
class ToleranceParams:
    """tau in (0, 1] plus the slow-growth handles L, psi, U.

    delta(P) = tau / L(P) <= tau since L >= 1 everywhere.
    """

    tau: float
    L: GrowthFn
    psi: GrowthFn = field(default_factory=growth_loglog)
    U: GrowthFn = field(default_factory=lambda: growth_log_power(1.0))

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValidationError("tau must lie in (0, 1]")

    def delta(self, p: float) -> float:
        return self.tau / self.L(p)


@dataclass(frozen=True)
class Window:
    """A target interval [start, start + length)."""

    start: float
    length: float

    def __post_init__(self):
        if not (math.isfinite(self.start) and math.isfinite(self.length)):
            raise ValidationError("window endpoints must be finite")
        if self.length <= 0:
            raise ValidationError("window length must be positive")

    @property
    def end(self) -> float:
        return self.start + self.length


# ---------------------------------------------------------------------------
# search boxes
# ---------------------------------------------------------------------------

POSITIVE = "positive"
ZERO_INCLUSIVE = "zero-inclusive"


@dataclass(frozen=True)
class SearchBox:
    """Per-variable integer ranges [lo_i, hi_i] for solution enumeration."""

    ranges: tuple[tuple[int, int], ...]
    convention: str = POSITIVE

    def __post_init__(self):
        if self.convention not in (POSITIVE, ZERO_INCLUSIVE):
            raise ValidationError(f"unknown box convention {self.convention!r}")
        for lo, hi in self.ranges:
            if lo > hi:
                raise ValidationError(f"empty range [{lo}, {hi}]")

    @classmethod
    def cube(cls, s: int, p: int, convention: str = POSITIVE) -> "SearchBox":
        lo = 0 if convention == ZERO_INCLUSIVE else 1
        return cls(tuple((lo, p) for _ in range(s)), convention)

    @classmethod
    def for_window(
        cls,
        form: DiagonalForm,
        window: Window,
        tau: float,
        convention: str = POSITIVE,
        slack: float = 1.0,
        indefinite_cap: Optional[int] = None,
    ) -> "SearchBox":
        """Derive per-variable bounds from the target window.

        In definite directions |x_i| <= ((|N0| + M + tau + slack)/|lambda_i|)^(1/k);
        for odd k with sign freedom the same cap applies to the magnitude and the
        box stays one-sided per the stated convention (box-exceptional semantics:
        enlarging the box can only grow the representable set).
        """
        bound = abs(window.start) + window.length + tau + slack
        lo0 = 0 if convention == ZERO_INCLUSIVE else 1
        ranges = []
        for lam in form.coefficients:
            cap = int(math.floor((bound / abs(lam)) ** (1.0 / form.k)))
            if indefinite_cap is not None:
                cap = min(cap, indefinite_cap)
            ranges.append((lo0, max(lo0, cap)))
        return cls(tuple(ranges), convention)

    @property
    def s(self) -> int:
        return len(self.ranges)

    def sizes(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.ranges)

    def volume(self) -> int:
        v = 1
        for n in self.sizes():
            v *= n
        return v

    def half_split(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Greedy balanced split of variable indices for meet-in-the-middle."""
        order = sorted(range(self.s), key=lambda i: -self.sizes()[i])
        left, right = [], []
        lv = rv = 1
        for i in order:
            if lv <= rv:
                left.append(i)
                lv *= self.sizes()[i]
            else:
                right.append(i)
                rv *= self.sizes()[i]
        return tuple(sorted(left)), tuple(sorted(right))

    def half_volumes(self) -> tuple[int, int]:
        left, right = self.half_split()
        lv = rv = 1
        for i in left:
            lv *= self.sizes()[i]
        for i in right:
            rv *= self.sizes()[i]
        return lv, rv

    def validate_budget(self, budget: int) -> None:
        lv, rv = self.half_volumes()
        if max(lv, rv) > budget:
            raise ResourceLimitError(
                f"half-box products ({lv}, {rv}) exceed enumeration budget {budget}",
                suggestion="shrink per-variable ranges or raise the budget",
            )


# ---------------------------------------------------------------------------
# diminishing ranges
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiminishingRanges:
    """P_j = c^-j * P^((1-1/k)^(j-1)) for j = 1..t, strictly decreasing."""

    base: float
    k: int
    c: float
    ranges: tuple[float, ...]

    @property
    def t(self) -> int:
        return len(self.ranges)

    @property
    def m_max(self) -> float:
        """Short-interval cap P_t^(k-1)."""
        return self.ranges[-1] ** (self.k - 1)


def p_from_n(n: float, k: int) -> float:
    """The box size P = N^(1/k)."""
    if n <= 0:
        raise ValidationError("N must be positive")
    return n ** (1.0 / k)


def diminishing_ranges(p: float, k: int, t: int, c: float) -> DiminishingRanges:
    if c <= 1:
        raise ValidationError("c must exceed 1")
    if t < 1:
        raise ValidationError("t must be >= 1")
    if k < 2:
        raise ValidationError("k must be >= 2")
    if p <= c**t:
        raise ValidationError(f"degenerate ranges: need P > c^t = {c ** t}")
    ranges = tuple(c ** (-j) * p ** ((1 - 1 / k) ** (j - 1)) for j in range(1, t + 1))
    assert all(a > b for a, b in zip(ranges, ranges[1:]))
    return DiminishingRanges(p, k, c, ranges)


# ---------------------------------------------------------------------------
# stored parameter tables
# ---------------------------------------------------------------------------

# (k -> (s0, u0, sigma_inv)): smooth-pair parameters for 4 <= k <= 20.
_TABLE1 = {
    4: (12, 4, 8),
    5: (18, 6, 16),
    6: (25, 7, 32),
    7: (33, 0, 58),
    8: (42, 0, 70),
    9: (50, 0, 83),
    10: (59, 0, 95),
    11: (67, 0, 108),
    12: (76, 0, 120),
    13: (84, 0, 133),
    14: (92, 0, 146),
    15: (100, 0, 158),
    16: (109, 0, 171),
    17: (117, 0, 184),
    18: (125, 0, 197),
    19: (134, 0, 210),
    20: (142, 0, 223),
}

# ((k, s) -> beta): slim exceptional-set exponents, exact rationals.
_TABLE2 = {
    (3, 7): Fraction(1, 3),
    (4, 13): Fraction(5, 8),
    (4, 14): Fraction(1, 2),
    (4, 15): Fraction(7, 16),
    (5, 25): Fraction(3, 4),
    (5, 26): Fraction(7, 10),
    (5, 27): Fraction(13, 20),
    (5, 28): Fraction(3, 5),
    (5, 29): Fraction(23, 40),
    (5, 30): Fraction(11, 20),
    (5, 31): Fraction(3, 8),
}

# (k -> (u, v, w)): auxiliary exponents for the small-k solubility argument.
_TABLE3 = {
    4: (5, 12, 8),
    5: (8, 20, 12),
    6: (12, 26, 16),
}

# ((u, k) -> theta): smooth mean-value exponents int_0^1 |g|^(2u) << P^(2u-k+theta+eps).
_THETA = {
    (5, 4): 0.213431,
    (8, 5): 0.077363,
    (12, 6): 0.0,
}

# Admissible exponent for sixth moments of smooth cubic Weyl sums, and the
# induced lower-bound exponent for the represented-measure growth rate.
DELTA_3_3 = (math.sqrt(2833) - 43) / 41  # 0.249413...
GAMMA_3_3 = (166 - math.sqrt(2833)) / 123  # 0.916903... > 11/12


def sigma_star_inv(k: int) -> int:
    """1/sigma*(k) from the classical/efficient-congruencing Weyl regime."""
    if k in (6, 7):
        return 2 ** (k - 1)
    if k >= 8:
        return 2 * k * (k - 2)
    raise ValidationError("sigma* is tabulated for k >= 6")


def accessible_triple(k: int, flavor: str = "default") -> dict:
    """Preset accessible triples (s1, sigma1, U-handle) for the classical sum.

    flavor 'default' picks the small-k (2^k, 2^(1-k), log-power) triple for
    3 <= k <= 5 and the (2k^2-2k-8, sigma*, power) triple for k >= 6.
    """
    if flavor == "default":
        flavor = "small_k" if k <= 5 else "large_k"
    if flavor == "small_k":
        if not 3 <= k <= 5:
            raise ValidationError("small_k preset covers 3 <= k <= 5")
        return {"s1": 2**k, "sigma1": 2.0 ** (1 - k), "U": growth_log_power(1.0)}
    if flavor == "large_k":
        if k < 6:
            raise ValidationError("large_k preset requires k >= 6")
        return {"s1": 2 * k * k - 2 * k - 8, "sigma1": 1.0 / sigma_star_inv(k), "U": growth_power(1.0, 0.5)}
    if flavor == "large_k_wide":
        if k < 6:
            raise ValidationError("large_k_wide preset requires k >= 6")
        return {"s1": 2 * k * k - 2, "sigma1": 1.0 / sigma_star_inv(k), "U": growth_power(1.0, 1.0 / k - 1e-6)}
    raise ValidationError(f"unknown accessible-triple flavor {flavor!r}")


@dataclass(frozen=True)
class ParameterTable:
    """Verbatim stored parameter data (data, not derivation)."""

    table1: dict = field(default_factory=lambda: dict(_TABLE1))
    table2: dict = field(default_factory=lambda: dict(_TABLE2))
    table3: dict = field(default_factory=lambda: dict(_TABLE3))
    theta: dict = field(default_factory=lambda: dict(_THETA))
    delta_3_3: float = DELTA_3_3
    gamma_3_3: float = GAMMA_3_3

    def to_json(self) -> str:
        payload = {
            "table1": {str(k): list(v) for k, v in sorted(self.table1.items())},
            "table2": {f"{k},{s}": f"{b.numerator}/{b.denominator}" for (k, s), b in sorted(self.table2.items())},
            "table3": {str(k): list(v) for k, v in sorted(self.table3.items())},
            "theta": {f"{u},{k}": v for (u, k), v in sorted(self.theta.items())},
            "delta_3_3": self.delta_3_3,
            "gamma_3_3": self.gamma_3_3,
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ParameterTable":
        raw = json.loads(text)
        return cls(
            table1={int(k): tuple(v) for k, v in raw["table1"].items()},
            table2={
                tuple(int(x) for x in key.split(",")): Fraction(val)
                for key, val in raw["table2"].items()
            },
            table3={int(k): tuple(v) for k, v in raw["table3"].items()},
            theta={tuple(int(x) for x in key.split(",")): float(v) for key, v in raw["theta"].items()},
            delta_3_3=raw["delta_3_3"],
            gamma_3_3=raw["gamma_3_3"],
        )


PARAMETERS = ParameterTable()


def parameter_lookup(k: int, table: str, s: Optional[int] = None):
    """Verbatim record lookup; raises ValidationError when out of range.

    table1 -> (s0, u0, sigma_inv); table2 needs s and returns beta as an
    exact Fraction; table3 -> (u, v, w); theta needs s=u and returns a float.
    """
    if table == "table1":
        if k not in PARAMETERS.table1:
            raise ValidationError(f"table1 has no entry for k={k}")
        return PARAMETERS.table1[k]
    if table == "table2":
        if (k, s) not in PARAMETERS.table2:
            raise ValidationError(f"table2 has no entry for (k={k}, s={s})")
        return PARAMETERS.table2[(k, s)]
    if table == "table3":
        if k not in PARAMETERS.table3:
            raise ValidationError(f"table3 has no entry for k={k}")
        return PARAMETERS.table3[k]
    if table == "theta":
        if (s, k) not in PARAMETERS.theta:
            raise ValidationError(f"no theta entry for (u={s}, k={k})")
        return PARAMETERS.theta[(s, k)]
    raise ValidationError(f"unknown table id {table!r}")
