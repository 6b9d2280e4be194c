"""Integer and arithmetic-function primitives.

Primes, smooth (friable) sets, continued-fraction best approximations,
complete exponential sums S_k(q,a) = sum_r e(a r^k / q), Ramanujan sums
c_q(h), the multiplicative weight w_k, and the power-residue pair count
rho(d) = #{(x,y) in [1,d]^2 : x^k == y^k mod d}.

All functions here are pure; tables are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import ResourceLimitError, ValidationError

# Sieve allocations above this limit are refused (desk scale).
SIEVE_LIMIT = 50_000_000
# q, d caps for the exact exponential-sum arithmetic (64-bit safe range).
MODULUS_LIMIT = 1_000_000


@dataclass(frozen=True)
class PrimeTable:
    """All primes <= limit, ascending."""

    limit: int
    primes: tuple[int, ...]

    def __contains__(self, n: int) -> bool:
        if n > self.limit:
            raise ValidationError(f"prime table only covers [0, {self.limit}]")
        i = _bisect(self.primes, n)
        return i < len(self.primes) and self.primes[i] == n


@dataclass(frozen=True)
class SmoothSet:
    """Integers n in [1, P] whose prime factors are all <= R, ascending."""

    bound: int
    smoothness: int
    members: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class RationalApprox:
    """A continued-fraction convergent a/q of some real x, with |q*x - a|."""

    numerator: int
    denominator: int
    residual: float

    @property
    def value(self) -> float:
        return self.numerator / self.denominator


def _bisect(seq: Sequence[int], value: int) -> int:
    lo, hi = 0, len(seq)
    while lo < hi:
        mid = (lo + hi) // 2
        if seq[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


def sieve_primes(limit: int) -> PrimeTable:
    """Sieve of Eratosthenes up to `limit` inclusive."""
    if limit < 0:
        raise ValidationError("limit must be >= 0")
    if limit > SIEVE_LIMIT:
        raise ResourceLimitError(
            f"prime sieve limit {limit} exceeds budget {SIEVE_LIMIT}",
            suggestion="raise dhlab.arith.SIEVE_LIMIT explicitly if you have the memory",
        )
    if limit < 2:
        return PrimeTable(limit, ())
    flags = bytearray([1]) * (limit + 1)
    flags[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            start = p * p
            flags[start :: p] = bytes(len(range(start, limit + 1, p)))
    return PrimeTable(limit, tuple(i for i, f in enumerate(flags) if f))


@dataclass(frozen=True)
class ArithmeticFnCache:
    """Smallest-prime-factor sieve with Moebius and Euler-phi tables.

    mu(1) = 1, sum_{d|n} mu(d) = [n == 1], and phi is multiplicative;
    these are exercised by the test suite.
    """

    limit: int
    spf: tuple[int, ...] = field(repr=False)
    mu: tuple[int, ...] = field(repr=False)
    phi: tuple[int, ...] = field(repr=False)

    @classmethod
    def build(cls, limit: int) -> "ArithmeticFnCache":
        if limit < 1:
            raise ValidationError("limit must be >= 1")
        if limit > SIEVE_LIMIT:
            raise ResourceLimitError(f"cache limit {limit} exceeds budget {SIEVE_LIMIT}")
        spf = list(range(limit + 1))
        for p in range(2, math.isqrt(limit) + 1):
            if spf[p] == p:
                for m in range(p * p, limit + 1, p):
                    if spf[m] == m:
                        spf[m] = p
        mu = [0] * (limit + 1)
        phi = [0] * (limit + 1)
        mu[1] = phi[1] = 1
        for n in range(2, limit + 1):
            p = spf[n]
            m = n // p
            if m % p == 0:
                mu[n] = 0
                phi[n] = phi[m] * p
            else:
                mu[n] = -mu[m]
                phi[n] = phi[m] * (p - 1)
        return cls(limit, tuple(spf), tuple(mu), tuple(phi))

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization [(p, multiplicity), ...] for 1 <= n <= limit."""
        if not 1 <= n <= self.limit:
            raise ValidationError(f"{n} outside cache range [1, {self.limit}]")
        out = []
        while n > 1:
            p = self.spf[n]
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def divisors(self, n: int) -> list[int]:
        divs = [1]
        for p, e in self.factorize(n):
            divs = [d * p**j for d in divs for j in range(e + 1)]
        return sorted(divs)


_CACHE: ArithmeticFnCache | None = None


def default_cache(limit: int = 10_000) -> ArithmeticFnCache:
    """Shared factorization cache, grown on demand."""
    global _CACHE
    if _CACHE is None or _CACHE.limit < limit:
        _CACHE = ArithmeticFnCache.build(max(limit, 10_000))
    return _CACHE


def smooth_set(P: int, R: int) -> SmoothSet:
    """The set of R-smooth integers in [1, P].

    1 is always a member (its factorization is empty, so the smoothness
    condition holds vacuously).
    """
    if P < 1 or R < 1:
        raise ValidationError("P and R must be >= 1")
    if P > SIEVE_LIMIT:
        raise ResourceLimitError(f"smooth sieve bound {P} exceeds budget {SIEVE_LIMIT}")
    if R >= P:
        return SmoothSet(P, R, tuple(range(1, P + 1)))
    # Sieve of largest prime factors: divide out primes <= R, survivors == 1.
    residue = list(range(P + 1))
    for p in range(2, R + 1):
        if residue[p] == p:  # p survived smaller primes, hence prime
            for m in range(p, P + 1, p):
                while residue[m] % p == 0:
                    residue[m] //= p
    return SmoothSet(P, R, tuple(n for n in range(1, P + 1) if residue[n] == 1))


def c_set(P: int, R: int) -> SmoothSet:
    """Products l*m with l <= sqrt(R), m <= P/sqrt(R), and every prime of m
    in (sqrt(R), R]; deduplicated and sorted.

    All comparisons against sqrt(R) are done with exact integer squares.
    """
    if P < 1:
        raise ValidationError("P must be >= 1")
    if R < 4:
        raise ValidationError("R must be >= 4 (sqrt(R) < 2 admits no primes)")
    l_max = math.isqrt(R)  # l <= sqrt(R)
    m_max = math.isqrt(P * P // R)  # m <= P / sqrt(R)  <=>  m^2 * R <= P^2
    cache = default_cache(max(m_max, 2))
    members = set()
    for m in range(1, m_max + 1):
        ok = all(p * p > R and p <= R for p, _ in cache.factorize(m))
        if ok:
            for l in range(1, l_max + 1):
                members.add(l * m)
    return SmoothSet(P, R, tuple(sorted(members)))


def convergents(x: float, q_max: int) -> list[RationalApprox]:
    """Continued-fraction convergents a/q of x with q <= q_max, increasing q.

    The expansion runs on the exact rational value of the float, so the
    recurrence is deterministic and rational inputs terminate exactly.
    Convergents whose residual falls below 2^-52 * |x| are treated as float
    noise and iteration stops there.
    """
    if q_max < 1:
        raise ValidationError("q_max must be >= 1")
    if not math.isfinite(x):
        raise ValidationError("x must be finite")
    noise = Fraction(abs(x)) / (1 << 52)
    rem = Fraction(x)
    p_prev, q_prev = 1, 0
    p_cur, q_cur = int(math.floor(x)), 1
    rem -= p_cur
    out = [RationalApprox(p_cur, 1, abs(float(Fraction(x) - p_cur)))]
    while rem != 0:
        rem = 1 / rem
        a = rem.numerator // rem.denominator
        rem -= a
        p_next = a * p_cur + p_prev
        q_next = a * q_cur + q_prev
        if q_next > q_max:
            break
        residual = abs(q_next * Fraction(x) - p_next)
        assert math.gcd(p_next, q_next) == 1, "convergents are already reduced"
        out.append(RationalApprox(p_next, q_next, float(residual)))
        p_prev, q_prev, p_cur, q_cur = p_cur, q_cur, p_next, q_next
        if residual != 0 and residual < noise:
            break
    return out


def best_approximation(x: float, q_max: int) -> RationalApprox:
    """The convergent of x with the smallest |q*x - a| among q <= q_max."""
    return min(convergents(x, q_max), key=lambda r: r.residual)


def complete_sum(q: int, a: int, k: int) -> complex:
    """S_k(q, a) = sum_{r=1..q} e(a r^k / q), with exact integer phases.

    Phases a*r^k mod q are computed in integer arithmetic and the terms are
    grouped by residue, so each distinct phase costs one complex exponential.
    """
    if q < 1:
        raise ValidationError("q must be >= 1")
    if q > MODULUS_LIMIT:
        raise ResourceLimitError(f"q={q} exceeds modulus budget {MODULUS_LIMIT}")
    if k < 2:
        raise ValidationError("k must be >= 2")
    if math.gcd(a, q) != 1:
        raise ValidationError(f"gcd(a, q) must be 1, got gcd({a}, {q}) != 1")
    counts = [0] * q
    for r in range(1, q + 1):
        counts[(a * pow(r, k, q)) % q] += 1
    return sum(
        c * cmath.exp(2j * math.pi * m / q) for m, c in enumerate(counts) if c
    )


def ramanujan(q: int, h: int) -> int:
    """Ramanujan's sum c_q(h) via the divisor formula sum_{d | (q,h)} d*mu(q/d)."""
    if q < 1:
        raise ValidationError("q must be >= 1")
    cache = default_cache(q)
    g = q if h == 0 else math.gcd(q, h)
    return sum(d * cache.mu[q // d] for d in cache.divisors(g) if cache.mu[q // d])


def ramanujan_direct(q: int, h: int) -> complex:
    """Oracle: c_q(h) summed directly over residues coprime to q."""
    return sum(
        cmath.exp(2j * math.pi * a * h / q)
        for a in range(1, q + 1)
        if math.gcd(a, q) == 1
    )


def weight_wk(q: int, k: int) -> float:
    """The multiplicative weight with w_k(p^(uk+v)) = k*p^(-u-1/2) for v = 1
    and p^(-u-1) for 2 <= v <= k; w_k(1) = 1."""
    if q < 1:
        raise ValidationError("q must be >= 1")
    if k < 2:
        raise ValidationError("k must be >= 2")
    out = 1.0
    for p, e in default_cache(max(q, 2)).factorize(q):
        u, v = divmod(e - 1, k)
        v += 1
        if v == 1:
            out *= k * p ** (-u - 0.5)
        else:
            out *= float(p) ** (-u - 1)
    return out


def _rho_prime_power(p: int, h: int, k: int) -> int:
    """rho(p^h) by histogramming x^k mod p^h over one period."""
    d = p**h
    counts: dict[int, int] = {}
    for x in range(1, d + 1):
        m = pow(x, k, d)
        counts[m] = counts.get(m, 0) + 1
    return sum(c * c for c in counts.values())


def rho(d: int, k: int) -> int:
    """Number of pairs (x, y) in [1, d]^2 with x^k == y^k (mod d).

    Multiplicative in d; computed prime power by prime power via CRT.  The
    O(d) single-modulus histogram (`rho_direct`) is kept as the oracle.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    if d > MODULUS_LIMIT:
        raise ResourceLimitError(f"d={d} exceeds modulus budget {MODULUS_LIMIT}")
    if k < 2:
        raise ValidationError("k must be >= 2")
    out = 1
    for p, e in default_cache(max(d, 2)).factorize(d):
        out *= _rho_prime_power(p, e, k)
    return out


def rho_direct(d: int, k: int) -> int:
    """Oracle: rho(d) from a single histogram of x^k mod d (no CRT)."""
    return _rho_prime_power_direct(d, k)


def _rho_prime_power_direct(d: int, k: int) -> int:
    counts: dict[int, int] = {}
    for x in range(1, d + 1):
        m = pow(x, k, d)
        counts[m] = counts.get(m, 0) + 1
    return sum(c * c for c in counts.values())
