"""Exact sparse polynomials in the coordinates ``x[i][a]`` of N particles in R^3.

Particles are numbered 1..N and coordinates 1..3.  Coefficients live either in
the rationals (``QQ``) or in a prime field (``GF(p)``).

Internally a monomial is packed into one Python int::

    key = deg << (16 * 3N) | e(1,1) << 16*(3N-1) | ... | e(N,3)

so that multiplying monomials is integer addition and sorting keys numerically
is graded lexicographic order on the flattened exponent vector.  Every public
entry point speaks in terms of ``(i, a) -> e`` exponent maps; keys never leak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import permutations
from numbers import Rational
from typing import Iterable, Iterator, Literal, Mapping, Sequence

BITS = 16
MAX_VAR_DEGREE = (1 << BITS) - 1
_MASK = MAX_VAR_DEGREE
_BLOCK_MASK = (1 << (3 * BITS)) - 1

# Degree of the zero polynomial.  Compares below every int.
ZERO_DEGREE = -math.inf


class PolynomialError(ValueError):
    """Raised on incompatible operands or malformed polynomial data."""


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------


class Rationals:
    """Exact rationals.  Coefficients are ``int`` or ``Fraction`` in lowest terms."""

    name = "QQ"
    characteristic = 0

    def coerce(self, c) -> Rational:
        if isinstance(c, bool):
            c = int(c)
        if isinstance(c, int):
            return c
        if isinstance(c, str):
            c = parse_scalar(c)[0]
        if isinstance(c, float):
            raise PolynomialError("floating-point coefficients are not supported")
        c = Fraction(c)
        return c.numerator if c.denominator == 1 else c

    def normalize(self, c):
        if isinstance(c, Fraction) and c.denominator == 1:
            return c.numerator
        return c

    def inverse(self, c):
        if c == 0:
            raise ZeroDivisionError("inverse of zero")
        return self.normalize(Fraction(1) / c)

    def format(self, c) -> str:
        c = Fraction(c)
        return f"{c.numerator}/{c.denominator}"

    def __repr__(self) -> str:
        return "QQ"

    def __eq__(self, other) -> bool:
        return isinstance(other, Rationals)

    def __hash__(self) -> int:
        return hash("QQ")


class PrimeField:
    """The field F_p; elements are ints reduced into [0, p)."""

    def __init__(self, p: int):
        from sympy import isprime

        if not isinstance(p, int) or not isprime(p):
            raise PolynomialError(f"modulus {p!r} is not prime")
        self.p = p
        self.characteristic = p
        self.name = f"GF({p})"

    def coerce(self, c) -> int:
        if isinstance(c, str):
            value, field = parse_scalar(c)
            if field is not None and field != self:
                raise PolynomialError(f"scalar {c!r} is not in {self.name}")
            c = value
        if isinstance(c, Fraction) or (isinstance(c, Rational) and not isinstance(c, int)):
            c = Fraction(c)
            if c.denominator % self.p == 0:
                raise ZeroDivisionError(f"denominator of {c} vanishes mod {self.p}")
            return c.numerator * pow(c.denominator, -1, self.p) % self.p
        return int(c) % self.p

    def normalize(self, c) -> int:
        return c % self.p

    def inverse(self, c) -> int:
        if c % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(c, -1, self.p)

    def format(self, c) -> str:
        return f"{c % self.p} mod {self.p}"

    def __repr__(self) -> str:
        return self.name

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self) -> int:
        return hash(("GF", self.p))


QQ = Rationals()


@lru_cache(maxsize=None)
def GF(p: int) -> PrimeField:
    return PrimeField(p)


def parse_scalar(text: str):
    """Parse ``"num/den"``, ``"int"`` or ``"v mod p"`` into ``(value, field)``.

    ``field`` is None for rational input.
    """
    text = text.strip()
    if " mod " in text:
        value, p = text.split(" mod ")
        field = GF(int(p))
        return int(value) % field.p, field
    try:
        return Fraction(text), None
    except ValueError:
        raise PolynomialError(f"cannot parse scalar {text!r}") from None


# ---------------------------------------------------------------------------
# monomial packing
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _layout(n: int):
    nvars = 3 * n
    shifts = tuple(BITS * (nvars - 1 - v) for v in range(nvars))
    block_shifts = tuple(3 * BITS * (n - 1 - i) for i in range(n))
    return shifts, block_shifts, BITS * nvars


def pack(n: int, exponents: Sequence[int]) -> int:
    """Pack a flat exponent vector of length 3n into a monomial key."""
    shifts, _, deg_shift = _layout(n)
    if len(exponents) != len(shifts):
        raise PolynomialError(f"expected {len(shifts)} exponents, got {len(exponents)}")
    key = 0
    for e, s in zip(exponents, shifts):
        if e < 0 or e > MAX_VAR_DEGREE:
            raise PolynomialError(f"exponent {e} out of range")
        key |= e << s
    return key | (sum(exponents) << deg_shift)


def unpack(n: int, key: int) -> tuple[int, ...]:
    shifts, _, _ = _layout(n)
    return tuple((key >> s) & _MASK for s in shifts)


def key_degree(n: int, key: int) -> int:
    return key >> _layout(n)[2]


def key_blocks(n: int, key: int) -> tuple[int, ...]:
    """Per-particle exponent blocks (each block packs that particle's 3 exponents)."""
    _, block_shifts, _ = _layout(n)
    return tuple((key >> s) & _BLOCK_MASK for s in block_shifts)


def block_degree(block: int) -> int:
    return (block >> 2 * BITS) + ((block >> BITS) & _MASK) + (block & _MASK)


def _exponent_map_to_flat(n: int, exps: Mapping[tuple[int, int], int]) -> list[int]:
    flat = [0] * (3 * n)
    for (i, a), e in exps.items():
        if not (1 <= i <= n and 1 <= a <= 3):
            raise PolynomialError(f"variable x[{i}][{a}] outside N={n} particles")
        flat[3 * (i - 1) + (a - 1)] += e
    return flat


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParticlePermutation:
    """A bijection of {1..N}; ``images[i-1]`` is the image of particle i."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(self.images)
        object.__setattr__(self, "images", images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise PolynomialError(f"{images} is not a permutation of 1..{len(images)}")

    @property
    def n(self) -> int:
        return len(self.images)

    @cached_property
    def sign(self) -> int:
        seen = [False] * self.n
        transpositions = 0
        for start in range(self.n):
            length = 0
            i = start
            while not seen[i]:
                seen[i] = True
                i = self.images[i] - 1
                length += 1
            if length:
                transpositions += length - 1
        return -1 if transpositions % 2 else 1

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def compose(self, other: ParticlePermutation) -> ParticlePermutation:
        """``self ∘ other``: apply ``other`` first."""
        return ParticlePermutation(tuple(self(other(i)) for i in range(1, self.n + 1)))

    def inverse(self) -> ParticlePermutation:
        inv = [0] * self.n
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return ParticlePermutation(tuple(inv))

    @classmethod
    def identity(cls, n: int) -> ParticlePermutation:
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> ParticlePermutation:
        images = list(range(1, n + 1))
        images[i - 1], images[j - 1] = j, i
        return cls(tuple(images))

    @classmethod
    def all(cls, n: int) -> Iterator[ParticlePermutation]:
        for images in permutations(range(1, n + 1)):
            yield cls(images)


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


class Polynomial:
    """Immutable sparse polynomial in the 3N variables ``x[i][a]``."""

    __slots__ = ("n", "field", "_terms")

    def __init__(self, n: int, terms: Mapping[int, object] | None = None, field=QQ):
        # ``terms`` maps packed keys to coefficients already in ``field``.
        if n < 1:
            raise PolynomialError("particle count must be positive")
        self.n = n
        self.field = field
        self._terms = {k: c for k, c in (terms or {}).items() if c != 0}

    # -- construction -------------------------------------------------------

    @classmethod
    def zero(cls, n: int, field=QQ) -> Polynomial:
        return cls(n, {}, field)

    @classmethod
    def constant(cls, n: int, c, field=QQ) -> Polynomial:
        return cls(n, {0: field.coerce(c)}, field)

    @classmethod
    def variable(cls, n: int, i: int, a: int, field=QQ) -> Polynomial:
        return cls.monomial(n, {(i, a): 1}, 1, field)

    @classmethod
    def monomial(cls, n: int, exponents: Mapping[tuple[int, int], int], coef=1, field=QQ) -> Polynomial:
        key = pack(n, _exponent_map_to_flat(n, exponents))
        return cls(n, {key: field.coerce(coef)}, field)

    @classmethod
    def from_terms(
        cls, n: int, terms: Iterable[tuple[Mapping[tuple[int, int], int], object]], field=QQ
    ) -> Polynomial:
        """Build from ``(exponent map, coefficient)`` pairs; repeated monomials add up."""
        out: dict[int, object] = {}
        for exps, c in terms:
            key = pack(n, _exponent_map_to_flat(n, exps))
            out[key] = out.get(key, 0) + field.coerce(c)
        return cls(n, _reduce(out, field), field)

    # -- inspection ---------------------------------------------------------

    @property
    def terms(self) -> dict[int, object]:
        return dict(self._terms)

    def items(self):
        """Terms as ``(exponent map, coefficient)`` pairs in canonical order."""
        for key in self.sorted_keys():
            yield self.exponents(key), self._terms[key]

    def sorted_keys(self) -> list[int]:
        # graded lex, largest first
        return sorted(self._terms, reverse=True)

    def exponents(self, key: int) -> dict[tuple[int, int], int]:
        flat = unpack(self.n, key)
        return {(v // 3 + 1, v % 3 + 1): e for v, e in enumerate(flat) if e}

    def coefficient(self, exponents: Mapping[tuple[int, int], int]):
        key = pack(self.n, _exponent_map_to_flat(self.n, exponents))
        return self._terms.get(key, 0)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def degree(self):
        if not self._terms:
            return ZERO_DEGREE
        return key_degree(self.n, max(self._terms))

    def is_homogeneous(self) -> bool:
        degs = {key_degree(self.n, k) for k in self._terms}
        return len(degs) <= 1

    def particles_used(self) -> set[int]:
        used = set()
        for key in self._terms:
            for i, b in enumerate(key_blocks(self.n, key), start=1):
                if b:
                    used.add(i)
        return used

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: Polynomial):
        if not isinstance(other, Polynomial):
            raise TypeError(f"expected Polynomial, got {type(other).__name__}")
        if other.n != self.n:
            raise PolynomialError(f"particle-count mismatch: {self.n} vs {other.n}")
        if other.field != self.field:
            raise PolynomialError(f"scalar-mode mismatch: {self.field} vs {other.field}")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            return self + Polynomial.constant(self.n, other, self.field)
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return Polynomial(self.n, _reduce(out, self.field), self.field)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, _reduce({k: -c for k, c in self._terms.items()}, self.field), self.field)

    def __sub__(self, other):
        if not isinstance(other, Polynomial):
            return self + (-self.field.coerce(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return self.scale(other)
        self._check(other)
        a, b = self._terms, other._terms
        if len(a) < len(b):
            a, b = b, a
        out: dict[int, object] = {}
        get = out.get
        for kb, cb in b.items():
            for ka, ca in a.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
        if out and max(out) >> _layout(self.n)[2] > MAX_VAR_DEGREE:
            raise PolynomialError("product degree exceeds packed exponent range")
        return Polynomial(self.n, _reduce(out, self.field), self.field)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c) -> Polynomial:
        c = self.field.coerce(c)
        if c == 0:
            return Polynomial.zero(self.n, self.field)
        return Polynomial(self.n, _reduce({k: v * c for k, v in self._terms.items()}, self.field), self.field)

    def __pow__(self, e: int) -> Polynomial:
        if e < 0:
            raise PolynomialError("negative power")
        result = Polynomial.constant(self.n, 1, self.field)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            if self.is_zero():
                return other == 0
            return NotImplemented
        return self.n == other.n and self.field == other.field and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n, self.field, frozenset(self._terms.items())))

    def to_field(self, field) -> Polynomial:
        """Map coefficients into ``field`` (e.g. reduce rationals mod p)."""
        if field == self.field:
            return self
        if self.field != QQ:
            raise PolynomialError(f"cannot convert from {self.field} to {field}")
        return Polynomial(self.n, {k: field.coerce(c) for k, c in self._terms.items()}, field)

    # -- evaluation and relabelling ----------------------------------------

    def evaluate(self, point: Sequence[Sequence[object]]):
        """Value at ``point``, an N x 3 array of scalars."""
        if len(point) != self.n or any(len(row) != 3 for row in point):
            raise PolynomialError(f"point must be {self.n} x 3")
        field = self.field
        flat = [field.coerce(v) for row in point for v in row]
        p = getattr(field, "p", None)
        total = 0
        for key, c in self._terms.items():
            term = c
            for v, e in zip(flat, unpack(self.n, key)):
                if e:
                    term = term * (pow(v, e, p) if p else v**e)
            total += term
        return field.normalize(field.coerce(total) if p is None else total % p)

    def permute(self, sigma: ParticlePermutation) -> Polynomial:
        """Relabel particle i as particle sigma(i) in every monomial."""
        if sigma.n != self.n:
            raise PolynomialError(f"permutation on {sigma.n} points acting on N={self.n}")
        _, block_shifts, deg_shift = _layout(self.n)
        targets = [block_shifts[j - 1] for j in sigma.images]
        deg_mask = ~((1 << deg_shift) - 1)
        out = {}
        for key, c in self._terms.items():
            new = key & deg_mask
            for s, t in zip(block_shifts, targets):
                new |= ((key >> s) & _BLOCK_MASK) << t
            out[new] = c
        return Polynomial(self.n, out, self.field)

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for key in self.sorted_keys():
            flat = unpack(self.n, key)
            exp = [[v // 3 + 1, v % 3 + 1, e] for v, e in enumerate(flat) if e]
            terms.append({"exp": exp, "coef": self.field.format(self._terms[key])})
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_json(cls, obj: Mapping, field=None) -> Polynomial:
        try:
            n = int(obj["n"])
            raw = obj["terms"]
        except (KeyError, TypeError, ValueError) as exc:
            raise PolynomialError(f"malformed polynomial JSON: {exc}") from None
        parsed = []
        for term in raw:
            value, f = parse_scalar(str(term["coef"]))
            if field is None:
                field = f or QQ
            elif f is not None and f != field:
                raise PolynomialError("mixed scalar modes in polynomial JSON")
            exps = {}
            for i, a, e in term["exp"]:
                exps[(int(i), int(a))] = exps.get((int(i), int(a)), 0) + int(e)
            parsed.append((exps, value))
        return cls.from_terms(n, parsed, field or QQ)

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for exps, c in self.items():
            factors = [f"x[{i}][{a}]^{e}" for (i, a), e in sorted(exps.items())]
            parts.append(" * ".join([str(c), *factors]))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"Polynomial(n={self.n}, field={self.field!r}, {self})"


def _reduce(terms: dict[int, object], field) -> dict[int, object]:
    p = getattr(field, "p", None)
    if p is None:
        return {k: (c.numerator if isinstance(c, Fraction) and c.denominator == 1 else c)
                for k, c in terms.items() if c != 0}
    out = {}
    for k, c in terms.items():
        c %= p
        if c:
            out[k] = c
    return out


def poly_arith(p: Polynomial, q: Polynomial, op: Literal["add", "sub", "mul"]) -> Polynomial:
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    raise PolynomialError(f"unknown operation {op!r}")


def evaluate(p: Polynomial, point) -> object:
    return p.evaluate(point)


def permute_particles(p: Polynomial, sigma: ParticlePermutation) -> Polynomial:
    return p.permute(sigma)


# ---------------------------------------------------------------------------
# symmetry
# ---------------------------------------------------------------------------


def antisymmetrize(p: Polynomial) -> Polynomial:
    """Signed average over all N! particle permutations."""
    n = p.n
    if p.field.characteristic and p.field.characteristic <= n:
        raise PolynomialError(f"N! is not invertible in {p.field}")
    total = Polynomial.zero(n, p.field)
    for sigma in ParticlePermutation.all(n):
        image = p.permute(sigma)
        total = total + image if sigma.sign > 0 else total - image
    return total.scale(p.field.inverse(p.field.coerce(math.factorial(n))))


SymmetryKind = Literal["antisymmetric_all", "symmetric_tail"]


def symmetry_check(p: Polynomial, kind: SymmetryKind) -> bool:
    """Check (anti)symmetry on adjacent transpositions, which generate the group.

    ``symmetric_tail`` treats particles 2..N as the tail.
    """
    if kind == "antisymmetric_all":
        first, sign = 1, -1
    elif kind == "symmetric_tail":
        first, sign = 2, 1
    else:
        raise PolynomialError(f"unknown symmetry kind {kind!r}")
    n = p.n
    terms = p._terms
    _, block_shifts, _ = _layout(n)
    modulus = getattr(p.field, "p", None)

    def matches(c, other) -> bool:
        if sign > 0:
            return c == other
        if modulus is not None:
            return (c + other) % modulus == 0
        # rationals: compare lowest-terms parts, no Fraction arithmetic
        return other.numerator == -c.numerator and other.denominator == c.denominator

    for i in range(first, n):
        hi, lo = block_shifts[i - 1], block_shifts[i]
        hi_mask, lo_mask = _BLOCK_MASK << hi, _BLOCK_MASK << lo
        for key, c in terms.items():
            a, b = (key >> hi) & _BLOCK_MASK, (key >> lo) & _BLOCK_MASK
            swapped = (key & ~(hi_mask | lo_mask)) | (b << hi) | (a << lo)
            other = terms.get(swapped)
            if other is None or not matches(c, other):
                return False
    return True


@dataclass(frozen=True)
class Grading:
    degree: int | float
    components: dict[int, Polynomial]
    multidegrees: frozenset[tuple[int, ...]]


def grading(p: Polynomial) -> Grading:
    """Split ``p`` into homogeneous components.

    ``multidegrees`` lists the per-particle degree vectors occurring in ``p``.
    """
    parts: dict[int, dict[int, object]] = {}
    multi = set()
    for key, c in p._terms.items():
        parts.setdefault(key_degree(p.n, key), {})[key] = c
        multi.add(tuple(block_degree(b) for b in key_blocks(p.n, key)))
    components = {d: Polynomial(p.n, t, p.field) for d, t in sorted(parts.items())}
    return Grading(p.degree, components, frozenset(multi))


def sum_of_products(
    terms: Iterable[tuple[int, Polynomial, Polynomial]], n: int, field=QQ
) -> Polynomial:
    """``sum(sign * a * b)`` accumulated into a single term map.

    Avoids the intermediate polynomials a chain of ``+`` would allocate.
    """
    out: dict[int, object] = {}
    get = out.get
    for sign, a, b in terms:
        if a.n != n or b.n != n:
            raise PolynomialError("particle-count mismatch")
        if a.field != field or b.field != field:
            raise PolynomialError("scalar-mode mismatch")
        ta, tb = a._terms, b._terms
        if len(ta) < len(tb):
            ta, tb = tb, ta
        for kb, cb in tb.items():
            cb = cb if sign > 0 else -cb
            for ka, ca in ta.items():
                k = ka + kb
                out[k] = get(k, 0) + ca * cb
    if out and max(out) >> _layout(n)[2] > MAX_VAR_DEGREE:
        raise PolynomialError("product degree exceeds packed exponent range")
    return Polynomial(n, _reduce(out, field), field)
