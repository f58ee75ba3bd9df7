"""Nonparametric tests used by the evaluation protocol.

Both tests enumerate the exact null distribution at desk scale (the
default cutoff is 12 effective observations) and fall back to a normal
approximation with tie and continuity corrections above it. Exact
p-values are ratios of integer counts and are carried as Fractions next
to their float rendering.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from statistics import fmean, median

from .errors import DegenerateSampleError, PreconditionError

EXACT_CUTOFF = 12

ALTERNATIVES = ("two_sided", "greater", "less")


@dataclass(frozen=True)
class PairedSample:
    """Per-unit (x, y) pairs, e.g. human vs model jargon counts per abstract."""

    pairs: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise PreconditionError("paired sample must be non-empty")
        for x, y in self.pairs:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise PreconditionError("paired sample values must be finite")

    @classmethod
    def of(cls, pairs) -> "PairedSample":
        return cls(tuple((float(x), float(y)) for x, y in pairs))

    def differences(self) -> list[float]:
        return [x - y for x, y in self.pairs]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # exact | normal_approx
    n_effective: int
    p_exact: Fraction | None = None


def _check_alternative(alternative: str) -> None:
    if alternative not in ALTERNATIVES:
        raise PreconditionError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")


def _midranks(values: list[float]) -> list[Fraction]:
    """Mid-rank of each value (ties share the average of their positions)."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks: list[Fraction] = [Fraction(0)] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        rank = Fraction(i + 1 + j + 1, 2)  # average of 1-based positions i+1 .. j+1
        for idx in order[i : j + 1]:
            ranks[idx] = rank
        i = j + 1
    return ranks


def _tie_term(values: list[float]) -> int:
    """Sum of t^3 - t over groups of tied values."""
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return sum(t**3 - t for t in counts.values() if t > 1)


def _normal_sf(z: float) -> float:
    """P(Z >= z) for a standard normal."""
    return 0.5 * math.erfc(z / math.sqrt(2))


def _two_sided_from_counts(count_le: int, count_ge: int, total: int) -> Fraction:
    p = 2 * Fraction(min(count_le, count_ge), total)
    return min(p, Fraction(1))


def wilcoxon_signed_rank(
    sample: PairedSample,
    alternative: str = "two_sided",
    exact_cutoff: int = EXACT_CUTOFF,
    method: str = "auto",
) -> TestResult:
    """Wilcoxon signed-rank test on paired differences.

    Zero differences are discarded; absolute differences are mid-ranked.
    The reported statistic is min(W+, W-). ``alternative="greater"`` means
    x tends to exceed y. Exact p-values enumerate all sign assignments;
    the approximation applies tie and continuity corrections.
    """
    _check_alternative(alternative)
    diffs = [d for d in sample.differences() if d != 0.0]
    n = len(diffs)
    if n == 0:
        raise DegenerateSampleError("degenerate sample: all differences are zero")

    ranks = _midranks([abs(d) for d in diffs])
    w_plus = sum((r for d, r in zip(diffs, ranks) if d > 0), Fraction(0))
    w_minus = sum(ranks, Fraction(0)) - w_plus
    statistic = float(min(w_plus, w_minus))

    use_exact = method == "exact" or (method == "auto" and n <= exact_cutoff)
    if method not in ("auto", "exact", "normal_approx"):
        raise PreconditionError(f"method must be auto|exact|normal_approx, got {method!r}")

    if use_exact:
        total = 2**n
        count_le = 0
        count_ge = 0
        for signs in itertools.product((False, True), repeat=n):
            w = sum((r for pos, r in zip(signs, ranks) if pos), Fraction(0))
            if w <= w_plus:
                count_le += 1
            if w >= w_plus:
                count_ge += 1
        if alternative == "two_sided":
            p = _two_sided_from_counts(count_le, count_ge, total)
        elif alternative == "greater":
            p = Fraction(count_ge, total)
        else:
            p = Fraction(count_le, total)
        return TestResult(statistic, float(p), "exact", n, p_exact=p)

    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0 - _tie_term([abs(d) for d in diffs]) / 48.0
    if var <= 0:
        raise DegenerateSampleError("degenerate sample: zero variance under the null")
    sd = math.sqrt(var)
    w = float(w_plus)
    if alternative == "two_sided":
        delta = w - mean
        z = (delta - 0.5 * _sign(delta)) / sd
        p_float = min(1.0, 2 * _normal_sf(abs(z)))
    elif alternative == "greater":
        z = (w - mean - 0.5) / sd
        p_float = _normal_sf(z)
    else:
        z = (w - mean + 0.5) / sd
        p_float = 1.0 - _normal_sf(z)
    return TestResult(statistic, p_float, "normal_approx", n)


def _sign(x: float) -> float:
    return 0.0 if x == 0 else math.copysign(1.0, x)


def mann_whitney_u(
    a: list[float],
    b: list[float],
    alternative: str = "two_sided",
    exact_cutoff: int = EXACT_CUTOFF,
    method: str = "auto",
) -> TestResult:
    """Mann-Whitney U test for two independent samples.

    U counts pairs where a-values exceed b-values, with ties counting one
    half. ``alternative="greater"`` means a tends to exceed b. The exact
    path enumerates all assignments of the pooled values to group sizes
    (na, nb); the approximation applies tie and continuity corrections.
    """
    _check_alternative(alternative)
    if not a or not b:
        raise PreconditionError("both samples must be non-empty")
    na, nb = len(a), len(b)
    n = na + nb

    def u_of(group_a: list[float], group_b: list[float]) -> Fraction:
        u = Fraction(0)
        for x in group_a:
            for y in group_b:
                if x > y:
                    u += 1
                elif x == y:
                    u += Fraction(1, 2)
        return u

    u_obs = u_of(list(a), list(b))
    statistic = float(u_obs)

    use_exact = method == "exact" or (method == "auto" and n <= exact_cutoff)
    if method not in ("auto", "exact", "normal_approx"):
        raise PreconditionError(f"method must be auto|exact|normal_approx, got {method!r}")

    if use_exact:
        pooled = list(a) + list(b)
        count_le = 0
        count_ge = 0
        total = 0
        indices = range(n)
        for picked in itertools.combinations(indices, na):
            picked_set = set(picked)
            ga = [pooled[i] for i in picked]
            gb = [pooled[i] for i in indices if i not in picked_set]
            u = u_of(ga, gb)
            total += 1
            if u <= u_obs:
                count_le += 1
            if u >= u_obs:
                count_ge += 1
        if alternative == "two_sided":
            p = _two_sided_from_counts(count_le, count_ge, total)
        elif alternative == "greater":
            p = Fraction(count_ge, total)
        else:
            p = Fraction(count_le, total)
        return TestResult(statistic, float(p), "exact", n, p_exact=p)

    mu = na * nb / 2.0
    tie_term = _tie_term(list(a) + list(b))
    var = (na * nb / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        raise DegenerateSampleError("degenerate sample: zero variance under the null")
    sd = math.sqrt(var)
    u = float(u_obs)
    if alternative == "two_sided":
        delta = u - mu
        z = (delta - 0.5 * _sign(delta)) / sd
        p_float = min(1.0, 2 * _normal_sf(abs(z)))
    elif alternative == "greater":
        z = (u - mu - 0.5) / sd
        p_float = _normal_sf(z)
    else:
        z = (u - mu + 0.5) / sd
        p_float = 1.0 - _normal_sf(z)
    return TestResult(statistic, p_float, "normal_approx", n)


@dataclass(frozen=True)
class Descriptives:
    median: float
    mean: float
    count: int


def descriptives(values: list[float | None]) -> Descriptives:
    """Median / mean / count after dropping undefined (None or NaN) entries."""
    kept = [float(v) for v in values if v is not None and not math.isnan(float(v))]
    if not kept:
        raise DegenerateSampleError("no defined values to describe")
    return Descriptives(median=float(median(kept)), mean=fmean(kept), count=len(kept))
