"""Partition counts and monomial-space dimensions.

``pbar(k, m)`` counts partitions of m into at most k parts and ``qbar(k, m)``
counts strictly decreasing partitions of m with k or k - 1 parts.  Both are
exact big integers; the enumerators are the brute-force counterparts.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterator

import mpmath

ENUMERATION_LIMIT = 10**7
ASYMPTOTIC_PRECISION = 96  # bits of mantissa


class CombinatError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    parts: tuple[int, ...]

    def __post_init__(self):
        if any(p <= 0 for p in self.parts) or list(self.parts) != sorted(self.parts, reverse=True):
            raise CombinatError(f"{self.parts} is not a partition")

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)


@dataclass(frozen=True)
class DegreeProfile:
    degrees: tuple[int, ...]

    def __post_init__(self):
        degs = tuple(int(d) for d in self.degrees)
        object.__setattr__(self, "degrees", degs)
        if not degs:
            raise CombinatError("empty degree profile")
        if any(d < 0 for d in degs):
            raise CombinatError(f"negative degree in profile {degs}")
        if list(degs) != sorted(degs):
            raise CombinatError(f"profile {degs} is not nondecreasing")

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def total(self) -> int:
        return sum(self.degrees)

    def __iter__(self):
        return iter(self.degrees)

    def __len__(self) -> int:
        return len(self.degrees)

    def __str__(self) -> str:
        return ",".join(map(str, self.degrees))


# Row k holds pbar(k, 0..len-1).  Rows only ever grow, under the lock.
_pbar_rows: dict[int, list[int]] = {}
_pbar_lock = threading.Lock()


def _pbar_row(k: int, m: int) -> list[int]:
    row = _pbar_rows.get(k)
    if row is not None and len(row) > m:
        return row
    if k == 1:
        row = [1] * (m + 1)
    else:
        prev = _pbar_row(k - 1, m)
        # pbar_k(m) = sum_{i>=0} pbar_{k-1}(m - i k); peeling off i = 0 leaves
        # the same sum at m - k, i.e. pbar_k(m) = pbar_{k-1}(m) + pbar_k(m - k).
        row = list(_pbar_rows.get(k, []))
        for j in range(len(row), m + 1):
            row.append(prev[j] + (row[j - k] if j >= k else 0))
    _pbar_rows[k] = row
    return row


def pbar(k: int, m: int) -> int:
    """Number of partitions of ``m`` with at most ``k`` parts."""
    if m < 0:
        return 0
    if k < 0:
        raise CombinatError("k must be nonnegative")
    if k == 0:
        return 1 if m == 0 else 0
    with _pbar_lock:
        return _pbar_row(k, m)[m]


def pbar_sum(k: int, m: int) -> int:
    """``pbar`` through the unrolled sum over the multiplicity of the part k."""
    if k == 1:
        return 1
    return sum(pbar(k - 1, m - i * k) for i in range(m // k + 1))


def qbar(k: int, m: int) -> int:
    """Strict partitions of ``m`` with k or k - 1 parts.

    Adding the staircase (k-1, ..., 1, 0) to a partition with at most k parts
    is a bijection onto these, so above the staircase weight this is a shifted
    ``pbar``.
    """
    if k < 1:
        raise CombinatError("k must be positive")
    shift = comb(k, 2)
    if m >= shift:
        return pbar(k, m - shift)
    return sum(1 for _ in enumerate_partitions(k, m, strict=True))


def pbar_asymptotic(k: int, m: int) -> mpmath.mpf:
    """Leading term m^(k-1) / (k! (k-1)!)."""
    if k < 1 or m < 1:
        raise CombinatError("need k >= 1 and m >= 1")
    with mpmath.workprec(ASYMPTOTIC_PRECISION):
        return mpmath.mpf(m) ** (k - 1) / (factorial(k) * factorial(k - 1))


def dim_sym(d: int) -> int:
    """Number of degree-d monomials in three variables."""
    if d < 0:
        return 0
    return (d + 1) * (d + 2) // 2


def enumerate_partitions(k: int, m: int, strict: bool = False) -> Iterator[Partition]:
    """Partitions of ``m`` in decreasing lexicographic order.

    Non-strict: at most ``k`` parts.  Strict: strictly decreasing parts, k or
    k - 1 of them.
    """
    if k < 0 or m < 0:
        raise CombinatError("k and m must be nonnegative")
    expected = pbar(k, m - comb(k, 2)) if strict else pbar(k, m)
    if expected > ENUMERATION_LIMIT:
        raise CombinatError(f"enumeration of {expected} partitions exceeds guard {ENUMERATION_LIMIT}")

    def rec(remaining: int, max_part: int, slots: int, prefix: list[int]):
        if remaining == 0:
            yield Partition(tuple(prefix))
            return
        if slots == 0:
            return
        step = 1 if strict else 0
        for part in range(min(remaining, max_part), 0, -1):
            # strict parts below ``part`` can sum to at most part*(part-1)/2
            if strict and remaining - part > part * (part - 1) // 2:
                break
            if not strict and remaining - part > part * (slots - 1):
                break
            prefix.append(part)
            yield from rec(remaining - part, part - step, slots - 1, prefix)
            prefix.pop()

    if strict:
        for part in rec(m, m, k, []):
            if part.length in (k, k - 1):
                yield part
    else:
        yield from rec(m, m, k, [])


def enumerate_profiles(n: int, total: int) -> Iterator[DegreeProfile]:
    """Nondecreasing n-tuples of nonnegative integers summing to ``total``, lexicographic."""
    if n < 1 or total < 0:
        raise CombinatError("need n >= 1 and total >= 0")

    def rec(slots: int, remaining: int, low: int, prefix: list[int]):
        if slots == 1:
            if remaining >= low:
                yield DegreeProfile(tuple(prefix + [remaining]))
            return
        for d in range(low, remaining // slots + 1):
            prefix.append(d)
            yield from rec(slots - 1, remaining - d, d, prefix)
            prefix.pop()

    yield from rec(n, total, 0, [])
