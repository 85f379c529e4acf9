"""Tail-symmetric orbitals and the backflow determinant.

An orbital phi(x; y_2, ..., y_N) is a polynomial in N slots: slot 1 is the
particle the orbital is evaluated at, slots 2..N are the remaining particles,
and phi must not change when the tail slots are permuted.  Slot k is stored as
particle k of an N-particle :class:`Polynomial`.

Row i of the backflow matrix puts particle i in slot 1 and the others, in
increasing order, in slots 2..N; the determinant of that matrix is totally
antisymmetric.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations_with_replacement, groupby, permutations, product
from math import lcm, prod
from typing import Mapping, Sequence

from .combinat import DegreeProfile, enumerate_profiles
from .polyalg import (
    QQ,
    ParticlePermutation,
    Polynomial,
    PolynomialError,
    pack,
    sum_of_products,
    symmetry_check,
)

MAX_EXPANSION = 8


class AnsatzError(ValueError):
    pass


@lru_cache(maxsize=None)
def monomials3(d: int) -> tuple[tuple[int, int, int], ...]:
    """Exponent triples of degree ``d`` in lexicographically decreasing order."""
    return tuple((a, b, d - a - b) for a in range(d, -1, -1) for b in range(d - a, -1, -1))


@dataclass(frozen=True)
class BasisLabel:
    """Index of an orbit-sum basis element.

    ``own`` is the slot-1 monomial of degree ``z``; ``tail`` is the sorted
    multiset of tail monomials with degrees ``tail_degrees``.
    """

    z: int
    tail_degrees: tuple[int, ...]
    own: tuple[int, int, int]
    tail: tuple[tuple[int, int, int], ...]

    def to_json(self) -> dict:
        return {
            "z": self.z,
            "tail_degrees": list(self.tail_degrees),
            "own": list(self.own),
            "tail": [list(m) for m in self.tail],
        }


@dataclass(frozen=True)
class TailSymBasis:
    n: int
    degree: int
    elements: tuple[Polynomial, ...]
    labels: tuple[BasisLabel, ...]
    kind: str = "backflow"

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __getitem__(self, i: int) -> Polynomial:
        return self.elements[i]


def _tail_tuples(n: int, t: int):
    """Sorted tuples of n - 1 monomials with total degree t, one per multiset."""
    if n == 1:
        if t == 0:
            yield (), ()
        return
    for profile in enumerate_profiles(n - 1, t):
        runs = [(deg, len(list(g))) for deg, g in groupby(profile.degrees)]
        choices = [combinations_with_replacement(monomials3(deg), length) for deg, length in runs]
        for picked in product(*choices):
            tail = tuple(m for run in picked for m in run)
            yield profile.degrees, tail


@lru_cache(maxsize=None)
def tail_sym_basis(n: int, d: int) -> TailSymBasis:
    """Orbit-sum basis of the degree-d polynomials symmetric in slots 2..n.

    Each element is m0(slot 1) times the sum of the distinct monomials obtained
    by distributing a multiset of tail monomials over slots 2..n.  Elements
    are ordered by their leading monomial, largest first.
    """
    if n < 1 or d < 0:
        raise AnsatzError("need n >= 1 and d >= 0")
    found = []
    for z in range(d + 1):
        for tail_degrees, tail in _tail_tuples(n, d - z):
            orbit = set(permutations(tail))
            for own in monomials3(z):
                keys = {pack(n, own + tuple(e for m in arrangement for e in m)) for arrangement in orbit}
                poly = Polynomial(n, dict.fromkeys(keys, 1))
                found.append((max(keys), poly, BasisLabel(z, tail_degrees, own, tail)))
    found.sort(key=lambda item: item[0], reverse=True)
    return TailSymBasis(n, d, tuple(p for _, p, _ in found), tuple(lab for _, _, lab in found))


@lru_cache(maxsize=None)
def slater_basis(n: int, d: int) -> TailSymBasis:
    """Degree-d monomials in slot 1 only: the orbitals of a Slater determinant."""
    elements, labels = [], []
    tail_degrees = (0,) * (n - 1)
    tail = ((0, 0, 0),) * (n - 1)
    for own in monomials3(d):
        elements.append(Polynomial(n, {pack(n, own + (0,) * (3 * n - 3)): 1}))
        labels.append(BasisLabel(d, tail_degrees, own, tail))
    return TailSymBasis(n, d, tuple(elements), tuple(labels), kind="slater")


@dataclass(frozen=True)
class PhiFunction:
    """A tail-symmetric orbital; ``degree`` is None for inhomogeneous input."""

    poly: Polynomial
    degree: int | None = None

    @classmethod
    def of(cls, poly: Polynomial, check: bool = True) -> PhiFunction:
        if check and not symmetry_check(poly, "symmetric_tail"):
            raise AnsatzError("polynomial is not symmetric in the tail slots")
        degree = None
        if poly.is_homogeneous():
            degree = poly.degree if not poly.is_zero() else 0
        return cls(poly, degree)

    @property
    def n(self) -> int:
        return self.poly.n


def assemble_phi(basis: TailSymBasis, coeffs: Sequence[object], field=QQ) -> PhiFunction:
    if len(coeffs) != len(basis):
        raise AnsatzError(f"expected {len(basis)} coefficients, got {len(coeffs)}")
    out: dict[int, object] = {}
    for c, element in zip(coeffs, basis.elements):
        c = field.coerce(c)
        if c == 0:
            continue
        for key in element.terms:
            out[key] = out.get(key, 0) + c
    poly = Polynomial(basis.n, out, field) if field == QQ else Polynomial(
        basis.n, {k: v % field.p for k, v in out.items()}, field
    )
    return PhiFunction(poly, basis.degree)


@lru_cache(maxsize=None)
def row_substitution(n: int, i: int) -> ParticlePermutation:
    """Slot 1 -> particle i, slots 2..n -> the other particles in increasing order."""
    others = [k for k in range(1, n + 1) if k != i]
    return ParticlePermutation((i, *others))


def _as_poly(phi) -> Polynomial:
    return phi.poly if isinstance(phi, PhiFunction) else phi


def _validated(phis) -> list[Polynomial]:
    polys = [_as_poly(phi) for phi in phis]
    if not polys:
        raise AnsatzError("need at least one orbital")
    n = len(polys)
    for j, poly in enumerate(polys, start=1):
        if poly.n != n:
            raise AnsatzError(f"orbital {j} has {poly.n} slots, expected {n}")
        if not symmetry_check(poly, "symmetric_tail"):
            raise AnsatzError(f"orbital {j} is not symmetric in its tail slots")
    if len({p.field for p in polys}) != 1:
        raise AnsatzError("orbitals mix scalar modes")
    return polys


def backflow_matrix(phis: Sequence[PhiFunction | Polynomial]) -> list[list[Polynomial]]:
    """Entry (i, j) is orbital j evaluated with particle i in slot 1."""
    polys = _validated(phis)
    n = len(polys)
    return [[poly.permute(row_substitution(n, i)) for poly in polys] for i in range(1, n + 1)]


class MinorExpansion:
    """Memoized Laplace expansion of a square matrix of polynomials.

    ``det(rows, cols)`` expands along the first listed row; minors are shared
    between every determinant and cofactor requested from the same instance.
    """

    def __init__(self, matrix: Sequence[Sequence[Polynomial]]):
        n = len(matrix)
        if n == 0 or any(len(row) != n for row in matrix):
            raise AnsatzError("matrix must be square and nonempty")
        if n > MAX_EXPANSION:
            raise AnsatzError(f"determinant expansion limited to N <= {MAX_EXPANSION}")
        self.n = n
        first = matrix[0][0]
        self.nvars = first.n
        self.field = first.field
        # Over QQ each column is rescaled to integer coefficients; integer
        # products are far cheaper than Fraction products.
        self.scales = [1] * n
        if self.field == QQ:
            for j in range(n):
                dens = [c.denominator for row in matrix for c in row[j].terms.values() if isinstance(c, Fraction)]
                self.scales[j] = lcm(*dens) if dens else 1
            matrix = [[entry.scale(self.scales[j]) if self.scales[j] != 1 else entry
                       for j, entry in enumerate(row)] for row in matrix]
        self.matrix = matrix
        self._memo: dict[tuple[tuple[int, ...], tuple[int, ...]], Polynomial] = {}

    def det(self, rows: tuple[int, ...], cols: tuple[int, ...]) -> Polynomial:
        value = self._minor(rows, cols)
        scale = prod(self.scales[c] for c in cols)
        return value if scale == 1 else value.scale(Fraction(1, scale))

    def _minor(self, rows: tuple[int, ...], cols: tuple[int, ...]) -> Polynomial:
        if not rows:
            return Polynomial.constant(self.nvars, 1, self.field)
        key = (rows, cols)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        r, rest = rows[0], rows[1:]
        terms = []
        for pos, c in enumerate(cols):
            entry = self.matrix[r][c]
            if entry.is_zero():
                continue
            sub = self._minor(rest, cols[:pos] + cols[pos + 1:])
            if sub.is_zero():
                continue
            terms.append((1 if pos % 2 == 0 else -1, entry, sub))
        value = sum_of_products(terms, self.nvars, self.field)
        self._memo[key] = value
        return value

    def determinant(self) -> Polynomial:
        full = tuple(range(self.n))
        return self.det(full, full)

    def cofactor(self, i: int, j: int) -> Polynomial:
        """Signed minor with row i and column j removed (0-based)."""
        full = tuple(range(self.n))
        minor = self.det(full[:i] + full[i + 1:], full[:j] + full[j + 1:])
        return minor if (i + j) % 2 == 0 else -minor


def determinant(matrix: Sequence[Sequence[Polynomial]]) -> Polynomial:
    return MinorExpansion(matrix).determinant()


def backflow_det(phis: Sequence[PhiFunction | Polynomial]) -> Polynomial:
    return determinant(backflow_matrix(phis))


def special_ansatz(kind: str, n: int, data: Sequence[Polynomial] | None = None) -> list[PhiFunction]:
    """Slater orbitals (slot-1 polynomials from ``data``) or Vandermonde powers x[1][1]^(j-1)."""
    if kind == "vandermonde":
        return [PhiFunction(Polynomial.monomial(n, {(1, 1): j}), j) for j in range(n)]
    if kind == "slater":
        if data is None or len(data) != n:
            raise AnsatzError(f"slater ansatz needs {n} orbitals")
        out = []
        for j, poly in enumerate(data, start=1):
            if poly.n != n:
                raise AnsatzError(f"orbital {j} has {poly.n} slots, expected {n}")
            if not poly.particles_used() <= {1}:
                raise AnsatzError(f"orbital {j} depends on slots other than slot 1")
            out.append(PhiFunction.of(poly, check=False))
        return out
    raise AnsatzError(f"unknown special ansatz {kind!r}")


@dataclass(frozen=True)
class AnsatzConfig:
    """Degree profile plus one basis per column; the source of the ansatz map."""

    n: int
    profile: DegreeProfile
    bases: tuple[TailSymBasis, ...]

    def __post_init__(self):
        if len(self.profile) != self.n or len(self.bases) != self.n:
            raise AnsatzError("profile and bases must have one entry per particle")
        for j, (d, basis) in enumerate(zip(self.profile, self.bases), start=1):
            if basis.n != self.n or basis.degree != d:
                raise AnsatzError(f"basis of column {j} does not match degree {d}")
        if self.parameter_count == 0:
            raise AnsatzError("configuration has no parameters")

    @classmethod
    def from_profile(cls, n: int, profile, kind: str = "backflow") -> AnsatzConfig:
        if not isinstance(profile, DegreeProfile):
            profile = DegreeProfile(tuple(profile))
        make = {"backflow": tail_sym_basis, "slater": slater_basis}.get(kind)
        if make is None:
            raise AnsatzError(f"unknown basis kind {kind!r}")
        return cls(n, profile, tuple(make(n, d) for d in profile))

    @property
    def degree(self) -> int:
        return self.profile.total

    @property
    def column_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.bases)

    @property
    def parameter_count(self) -> int:
        return sum(self.column_sizes)

    def offsets(self) -> list[int]:
        out, acc = [], 0
        for size in self.column_sizes:
            out.append(acc)
            acc += size
        return out

    def split(self, coeffs: Sequence[object]) -> list[Sequence[object]]:
        if len(coeffs) != self.parameter_count:
            raise AnsatzError(f"expected {self.parameter_count} coefficients, got {len(coeffs)}")
        return [coeffs[o:o + s] for o, s in zip(self.offsets(), self.column_sizes)]

    def phis(self, coeffs: Sequence[object], field=QQ) -> list[PhiFunction]:
        return [assemble_phi(b, c, field) for b, c in zip(self.bases, self.split(coeffs))]


def load_spec(obj: Mapping) -> tuple[AnsatzConfig, list[PhiFunction]]:
    """Read an ansatz spec ``{"n", "profile", "columns": [{"coeffs": [...]}, ...]}``.

    Coefficients index the canonical order of :func:`tail_sym_basis`.
    """
    try:
        n = int(obj["n"])
        profile = DegreeProfile(tuple(int(d) for d in obj["profile"]))
        columns = obj["columns"]
        kind = obj.get("basis", "backflow")
        config = AnsatzConfig.from_profile(n, profile, kind)
        if len(columns) != n:
            raise AnsatzError(f"spec lists {len(columns)} columns for n = {n}")
        coeffs = [c if isinstance(c, int) else QQ.coerce(str(c)) for col in columns for c in col["coeffs"]]
    except (KeyError, TypeError, PolynomialError) as exc:
        raise AnsatzError(f"malformed ansatz spec: {exc}") from None
    return config, config.phis(coeffs)
