"""Dimensions of the source and target of the ansatz map.

Target: degree-D antisymmetric polynomials in N particles, i.e. N-element sets
of distinct monomials (three variables) whose degrees add up to D.
Source: per column, degree-d polynomials symmetric in the tail slots.

Each space has an exact count, the bound used in the dimension-counting
argument, and that argument's leading-order asymptotic.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from functools import lru_cache
from math import comb, prod

import mpmath

from .combinat import (
    ASYMPTOTIC_PRECISION,
    DegreeProfile,
    dim_sym,
    enumerate_partitions,
    enumerate_profiles,
)

SEC3_BINOMIAL = "sec3-binomial"
BALANCED_PROFILE_CLAIM = "balanced-profile-claim"
BELOW_GUARD = "below-degree-guard"


class DimensionError(ValueError):
    pass


@dataclass
class DimensionReport:
    n: int
    formula: str
    degree: int | None = None
    profile: tuple[int, ...] | None = None
    exact: int | None = None
    paper_bound: int | None = None
    asymptotic: mpmath.mpf | None = None
    notes: list[str] = field(default_factory=list)
    discrepancy_flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        out = asdict(self)
        out["profile"] = list(self.profile) if self.profile is not None else None
        out["asymptotic"] = format_mpf(self.asymptotic)
        return out


def format_mpf(x) -> str | None:
    if x is None:
        return None
    return mpmath.nstr(x, 20, min_fixed=-5, max_fixed=25)


# ---------------------------------------------------------------------------
# target
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _target_table(max_n: int, max_degree: int) -> tuple[tuple[int, ...], ...]:
    # table[k][s]: k-subsets of monomials of degree <= max_degree, degree sum s
    table = [[0] * (max_degree + 1) for _ in range(max_n + 1)]
    table[0][0] = 1
    for delta in range(max_degree + 1):
        block = dim_sym(delta)
        new = [row[:] for row in table]
        for k in range(max_n + 1):
            for s in range(max_degree + 1):
                v = table[k][s]
                if not v:
                    continue
                for take in range(1, min(block, max_n - k) + 1):
                    s2 = s + take * delta
                    if s2 > max_degree:
                        break
                    new[k + take][s2] += v * comb(block, take)
        table = new
    return tuple(tuple(row) for row in table)


def target_dim_exact(n: int, degree: int) -> int:
    """Dimension of the degree-D slice of the N-th exterior power."""
    if n < 1 or degree < 0:
        raise DimensionError("need n >= 1 and D >= 0")
    return _target_table(n, degree)[n][degree]


def _strict_sequences(n: int, total: int, low: int):
    """Strictly increasing n-tuples with entries >= low summing to total."""
    if n == 0:
        if total == 0:
            yield ()
        return
    # the smallest admissible tail after p is p+1, ..., p+n-1
    p = low
    while n * p + n * (n - 1) // 2 <= total:
        for rest in _strict_sequences(n - 1, total - p, p + 1):
            yield (p, *rest)
        p += 1


def target_dim_paper_lower(n: int, degree: int) -> int:
    """Restricted sum over p_1 < ... < p_N with p_1 >= ceil(D / 2N) of prod C(p_j + 2, 2)."""
    if n < 1 or degree < 0:
        raise DimensionError("need n >= 1 and D >= 0")
    cutoff = -(-degree // (2 * n))
    return sum(prod(dim_sym(p) for p in seq) for seq in _strict_sequences(n, degree, cutoff))


def target_dim_asymptotic(n: int, degree: int) -> mpmath.mpf:
    """D^(3N-1) e^(2N-1) / (pi 2^(4N) N^(4N-2))."""
    if n < 1 or degree < 1:
        raise DimensionError("need n >= 1 and D >= 1")
    with mpmath.workprec(ASYMPTOTIC_PRECISION):
        log_value = (
            (3 * n - 1) * mpmath.log(degree)
            + (2 * n - 1)
            - mpmath.log(mpmath.pi)
            - 4 * n * mpmath.log(2)
            - (4 * n - 2) * mpmath.log(n)
        )
        return mpmath.exp(log_value)


def target_report(n: int, degree: int) -> DimensionReport:
    report = DimensionReport(
        n=n,
        formula="target",
        degree=degree,
        exact=target_dim_exact(n, degree),
        paper_bound=target_dim_paper_lower(n, degree),
        asymptotic=target_dim_asymptotic(n, degree) if degree >= 1 else None,
        discrepancy_flags=[SEC3_BINOMIAL],
    )
    report.notes.append("paper_bound is the strictly-increasing-degree sub-sum with p_1 >= ceil(D/2N)")
    report.notes.append("dim S^d W* taken as C(d+2,2), not C(d+1,2)")
    if degree < n * n:
        report.discrepancy_flags.append(BELOW_GUARD)
    return report


# ---------------------------------------------------------------------------
# source
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _multiset_table(k: int, max_degree: int) -> tuple[tuple[int, ...], ...]:
    # table[j][t]: multisets of j monomials (three variables) with total degree t
    table = [[0] * (max_degree + 1) for _ in range(k + 1)]
    table[0][0] = 1
    for delta in range(max_degree + 1):
        block = dim_sym(delta)
        new = [row[:] for row in table]
        for j in range(k + 1):
            for t in range(max_degree + 1):
                v = table[j][t]
                if not v:
                    continue
                for take in range(1, k - j + 1):
                    t2 = t + take * delta
                    if t2 > max_degree:
                        break
                    new[j + take][t2] += v * comb(block + take - 1, take)
        table = new
    return tuple(tuple(row) for row in table)


def tail_multisets(k: int, degree: int) -> int:
    """Multisets of k monomials in three variables with total degree ``degree``."""
    if degree < 0:
        return 0
    return _multiset_table(k, degree)[k][degree]


@lru_cache(maxsize=None)
def column_dim_exact(n: int, d: int) -> int:
    """Dimension of degree-d polynomials in (x; y_2..y_n) symmetric in the y's."""
    return sum(dim_sym(z) * tail_multisets(n - 1, d - z) for z in range(d + 1))


@lru_cache(maxsize=None)
def column_dim_paper(n: int, d: int) -> int:
    """Product count sum_z sum_{delta nondecreasing} C(z+2,2) prod C(delta_i+2,2)."""
    total = 0
    for z in range(d + 1):
        for part in enumerate_partitions(n - 1, d - z):
            total += dim_sym(z) * prod(dim_sym(p) for p in part.parts)
    return total


def _profile(n: int, profile) -> DegreeProfile:
    if not isinstance(profile, DegreeProfile):
        profile = DegreeProfile(tuple(profile))
    if profile.n != n:
        raise DimensionError(f"profile {profile} has {profile.n} entries, expected {n}")
    return profile


def source_dim_exact(n: int, profile) -> int:
    profile = _profile(n, profile)
    return sum(column_dim_exact(n, d) for d in profile)


def source_dim_paper(n: int, profile) -> int:
    profile = _profile(n, profile)
    return sum(column_dim_paper(n, d) for d in profile)


def source_dim_asymptotic(n: int, degree: int) -> mpmath.mpf:
    """D^(3N-1) e^(2N-3) / (N^(7N-4) 2^(N+1) pi)."""
    if n < 1 or degree < 1:
        raise DimensionError("need n >= 1 and D >= 1")
    with mpmath.workprec(ASYMPTOTIC_PRECISION):
        log_value = (
            (3 * n - 1) * mpmath.log(degree)
            + (2 * n - 3)
            - (7 * n - 4) * mpmath.log(n)
            - (n + 1) * mpmath.log(2)
            - mpmath.log(mpmath.pi)
        )
        return mpmath.exp(log_value)


def source_report(n: int, profile) -> DimensionReport:
    profile = _profile(n, profile)
    degree = profile.total
    return DimensionReport(
        n=n,
        formula="source",
        degree=degree,
        profile=profile.degrees,
        exact=source_dim_exact(n, profile),
        paper_bound=source_dim_paper(n, profile),
        asymptotic=source_dim_asymptotic(n, degree) if degree >= 1 else None,
        notes=["exact counts tail orbits; paper_bound counts f (x) h_2 (x) ... (x) h_N products"],
    )


def balanced_profile(n: int, degree: int) -> DegreeProfile:
    low, extra = divmod(degree, n)
    return DegreeProfile((low,) * (n - extra) + (low + 1,) * extra)


def best_profile(n: int, degree: int) -> tuple[DegreeProfile, int]:
    """Profile maximizing ``source_dim_exact``; ties go to the first in enumeration order."""
    best, best_dim = None, -1
    for profile in enumerate_profiles(n, degree):
        dim = source_dim_exact(n, profile)
        if dim > best_dim:
            best, best_dim = profile, dim
    return best, best_dim


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


def min_degree(n: int) -> int:
    """Smallest D admitting N distinct monomials: fill degree blocks greedily."""
    if n < 1:
        raise DimensionError("need n >= 1")
    total, left, delta = 0, n, 0
    while left:
        take = min(left, dim_sym(delta))
        total += take * delta
        left -= take
        delta += 1
    return total


def determinant_count_bound(n: int) -> int:
    """N^(3N-3), the number of summands below which sums stay in a proper subvariety."""
    if n < 2:
        raise DimensionError("need n >= 2")
    return n ** (3 * n - 3)


@dataclass
class GapReport:
    n: int
    degree: int
    target: DimensionReport
    source: DimensionReport
    balanced: DimensionReport
    determinant_count_bound: int
    exact_ratio: str
    asymptotic_ratio: str | None
    discrepancy_flags: list[str]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "degree": self.degree,
            "target": self.target.to_json(),
            "source": self.source.to_json(),
            "balanced": self.balanced.to_json(),
            "determinant_count_bound": self.determinant_count_bound,
            "exact_ratio": self.exact_ratio,
            "asymptotic_ratio": self.asymptotic_ratio,
            "discrepancy_flags": self.discrepancy_flags,
        }


def gap_report(n: int, degree: int) -> GapReport:
    """Target versus best-profile source, with the bounds and asymptotics of both."""
    if degree < min_degree(n):
        raise DimensionError(f"D = {degree} is below the minimal degree {min_degree(n)} for N = {n}")
    target = target_report(n, degree)
    profile, _ = best_profile(n, degree)
    source = source_report(n, profile)
    source.notes.append("profile maximizing the exact source dimension over all profiles")
    balanced = source_report(n, balanced_profile(n, degree))
    balanced.notes.append("most balanced profile")
    flags = list(target.discrepancy_flags)
    if balanced.exact < source.exact:
        flags.append(BALANCED_PROFILE_CLAIM)
    with mpmath.workprec(ASYMPTOTIC_PRECISION):
        exact_ratio = mpmath.mpf(target.exact) / source.exact
        asym_ratio = None
        if target.asymptotic is not None:
            asym_ratio = format_mpf(target.asymptotic / source.asymptotic)
    return GapReport(
        n=n,
        degree=degree,
        target=target,
        source=source,
        balanced=balanced,
        determinant_count_bound=determinant_count_bound(n) if n >= 2 else 1,
        exact_ratio=format_mpf(exact_ratio),
        asymptotic_ratio=asym_ratio,
        discrepancy_flags=flags,
    )
