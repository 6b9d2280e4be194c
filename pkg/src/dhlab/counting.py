"""Exact solution counting and representable/exceptional measures.

Counting |F(x) - mu| < tau over an integer box runs meet-in-the-middle:
variables split into two halves, each half's partial sums are sorted, and
pair counts come from a sliding binary-search window (strict at both ends).

Representable unions never materialize the full |box| sum set: the larger
half is sorted once and translated by each value of the smaller half; each
translate's tau-neighbourhood collapses to an interval union in one
vectorized sweep, and the running union absorbs them (it saturates quickly,
so memory stays O(|larger half| + output)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import analysis, arith
from .errors import ResourceLimitError, ValidationError
from .forms import DiagonalForm, DiminishingRanges, GrowthFn, SearchBox, Window
from .intervals import IntervalUnion, union_accumulator

DEFAULT_BUDGET = 20_000_000


@dataclass(frozen=True)
class CountResult:
    count: int
    mu: float
    tau: float
    box: SearchBox
    cost: dict = field(default_factory=dict)


def _half_sums(form: DiagonalForm, box: SearchBox, indices: Sequence[int]) -> np.ndarray:
    """All values of sum_{i in indices} lambda_i x_i^k over the box, sorted."""
    sums = np.zeros(1)
    for i in indices:
        lo, hi = box.ranges[i]
        vals = form.coefficients[i] * np.arange(lo, hi + 1, dtype=float) ** form.k
        sums = (sums[:, None] + vals[None, :]).ravel()
    sums.sort()
    return sums


def count_solutions(
    form: DiagonalForm,
    mu: float,
    tau: float,
    box: SearchBox,
    budget: int = DEFAULT_BUDGET,
    halves: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> CountResult:
    """Exact number of x in the box with |F(x) - mu| < tau (strict ends)."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    if box.s != form.s:
        raise ValidationError("box arity does not match the form")
    box.validate_budget(budget)
    if halves is None:
        left, right = box.half_split()
        halves = (_half_sums(form, box, left), _half_sums(form, box, right))
    a, b = halves
    hi = np.searchsorted(b, (mu + tau) - a, side="left")
    lo = np.searchsorted(b, (mu - tau) - a, side="right")
    count = int(np.sum(hi - lo))
    return CountResult(
        count, mu, tau, box, cost={"half_sizes": (len(a), len(b)), "searches": 2 * len(a)}
    )


def count_solutions_naive(form: DiagonalForm, mu: float, tau: float, box: SearchBox) -> int:
    """Oracle: the s-fold loop."""
    if box.volume() > 2_000_000:
        raise ResourceLimitError("naive oracle capped at 2e6 points")
    count = 0
    for x in itertools.product(*(range(lo, hi + 1) for lo, hi in box.ranges)):
        if abs(form.value(x) - mu) < tau:
            count += 1
    return count


def representable_union(
    form: DiagonalForm,
    box: SearchBox,
    tau: float,
    window: Window,
    budget: int = DEFAULT_BUDGET,
) -> IntervalUnion:
    """Union of (F(x) - tau, F(x) + tau) over the box, clipped to the window."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    box.validate_budget(budget)
    left, right = box.half_split()
    a = _half_sums(form, box, left)
    b = _half_sums(form, box, right)
    if len(b) > len(a):
        a, b = b, a
    b = np.unique(b)
    acc = union_accumulator()
    w0, w1 = window.start, window.end
    for off in b:
        if a[0] + off - tau >= w1:  # offsets ascend; nothing later can reach
            break
        if a[-1] + off + tau <= w0:
            continue
        lo = np.searchsorted(a, w0 - tau - off, side="left")
        hi = np.searchsorted(a, w1 + tau - off, side="right")
        if hi > lo:
            acc.add(IntervalUnion.from_sorted_points(a[lo:hi] + off, tau).clip(w0, w1))
    return acc.result()


def exceptional_measure(
    form: DiagonalForm,
    box: SearchBox,
    tau: float,
    window: Window,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Window length minus the representable measure.

    With the zero-inclusive box convention this is an upper bound for the
    true exceptional measure (solutions outside the box only shrink it);
    reports label it "box-exceptional measure".
    """
    rep = representable_union(form, box, tau, window, budget)
    return window.length - rep.measure


def representable_measure_Y(
    form: DiagonalForm,
    box: SearchBox,
    tau: float,
    n: float,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Measure of the representable union over the symmetric window [-N, N]."""
    window = Window(-n, 2 * n)
    return representable_union(form, box, tau, window, budget).measure


# ---------------------------------------------------------------------------
# diagonal-only difference counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalCheck:
    count: int
    all_diagonal: bool
    off_diagonal_count: int


def diagonal_difference_check(
    coefficients: Sequence[float],
    ranges: Sequence[tuple[int, int]],
    k: int,
    delta: float,
    shift: float,
    budget: int = DEFAULT_BUDGET,
) -> DiagonalCheck:
    """Exhaustively count |sum_j c_j (x_j^k - y_j^k) + shift| < delta with
    x_j, y_j integers in (lo_j, hi_j], and report whether every solution is
    fully diagonal (x_j == y_j for all j)."""
    if len(coefficients) != len(ranges):
        raise ValidationError("one coefficient per range required")
    cost = 1
    for lo, hi in ranges:
        n = max(0, hi - lo)
        cost *= n * n
    if cost > budget:
        raise ResourceLimitError(f"difference enumeration cost {cost} over budget {budget}")
    values = np.zeros(1)
    diagonal = np.ones(1, dtype=bool)
    for c, (lo, hi) in zip(coefficients, ranges):
        xs = np.arange(lo + 1, hi + 1, dtype=float) ** k
        if len(xs) == 0:
            return DiagonalCheck(0, True, 0)
        diff = c * (xs[:, None] - xs[None, :]).ravel()
        diag = np.eye(len(xs), dtype=bool).ravel()
        values = (values[:, None] + diff[None, :]).ravel()
        diagonal = (diagonal[:, None] & diag[None, :]).ravel()
    hit = np.abs(values + shift) < delta
    count = int(np.sum(hit))
    off = int(np.sum(hit & ~diagonal))
    return DiagonalCheck(count, off == 0, off)


def diagonal_solution_check(
    tail_coefficients: Sequence[float],
    ranges: DiminishingRanges,
    delta: float,
    shift: float,
    budget: int = DEFAULT_BUDGET,
) -> DiagonalCheck:
    """The diminishing-ranges diagonality experiment: variables run over
    (P_j, 2 P_j], and |shift| (= |mu - nu|) must respect the short-interval
    cap P_t^(k-1)."""
    if len(tail_coefficients) != ranges.t:
        raise ValidationError("need one tail coefficient per diminishing range")
    if abs(shift) > ranges.m_max:
        raise ValidationError(
            f"|mu - nu| = {abs(shift)} exceeds the short-interval cap {ranges.m_max}"
        )
    int_ranges = [(math.floor(pj), math.floor(2 * pj)) for pj in ranges.ranges]
    return diagonal_difference_check(
        tail_coefficients, int_ranges, ranges.k, delta, shift, budget
    )


# ---------------------------------------------------------------------------
# two-prime approximation scan
# ---------------------------------------------------------------------------


def two_prime_scan(
    lam1: float,
    lam2: float,
    tau: float,
    x_limit: int,
    window: Window,
) -> tuple[IntervalUnion, float]:
    """Union of tau-neighbourhoods of lambda1*p1 + lambda2*p2 over primes
    <= X, clipped to the window, plus the complementary (exceptional)
    measure."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    primes = np.array(arith.sieve_primes(x_limit).primes, dtype=float)
    if len(primes) == 0:
        return IntervalUnion.empty(), window.length
    a = np.sort(lam1 * primes)
    b = np.sort(lam2 * primes)
    acc = union_accumulator()
    w0, w1 = window.start, window.end
    for off in b:
        if a[0] + off - tau >= w1:
            break
        if a[-1] + off + tau <= w0:
            continue
        lo = np.searchsorted(a, w0 - tau - off, side="left")
        hi = np.searchsorted(a, w1 + tau - off, side="right")
        if hi > lo:
            acc.add(IntervalUnion.from_sorted_points(a[lo:hi] + off, tau).clip(w0, w1))
    rep = acc.result()
    return rep, window.length - rep.measure


# ---------------------------------------------------------------------------
# asymptotic-formula error scan
# ---------------------------------------------------------------------------


def asymptotic_error_scan(
    form: DiagonalForm,
    n: float,
    tau: float,
    grid: int,
    psi: GrowthFn,
    budget: int = DEFAULT_BUDGET,
    threads: int = 1,
) -> dict:
    """Scan mu over a uniform grid of (N/2, N], comparing the exact count
    against the main term and flagging failures of the expected formula.

    Returns rows (mu, count, main_term, rel_error, flagged) and the flagged
    fraction scaled to a measure estimate for the failure set.
    """
    if grid < 1:
        raise ValidationError("grid must have at least one point")
    p = math.floor(n ** (1.0 / form.k))
    box = SearchBox.cube(form.s, p)
    box.validate_budget(budget)
    left, right = box.half_split()
    halves = (_half_sums(form, box, left), _half_sums(form, box, right))
    threshold = n ** (form.s / form.k - 1.0) / psi(n)
    mus = n / 2 + (np.arange(grid) + 1) * (n / 2) / grid

    def one(mu: float) -> dict:
        res = count_solutions(form, mu, tau, box, budget, halves=halves)
        main = analysis.main_term(form, mu, n, tau)
        err = abs(res.count - main)
        rel = err / main if main > 0 else math.inf
        return {
            "mu": mu,
            "count": res.count,
            "main_term": main,
            "rel_error": rel,
            "flagged": bool(err > threshold),
        }

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, (float(m) for m in mus)))
    else:
        rows = [one(float(m)) for m in mus]
    flagged = sum(1 for r in rows if r["flagged"])
    return {
        "rows": rows,
        "threshold": threshold,
        "flagged_fraction": flagged / grid,
        "failure_measure_estimate": (flagged / grid) * (n / 2),
        "p": p,
    }
