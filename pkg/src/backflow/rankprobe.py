"""Generic Jacobian rank, secant ranks and surjectivity verdicts over F_p.

The determinant is linear in each column orbital, so the partial derivative
with respect to the coefficient of basis element b in column j is the
determinant with column j replaced by b.  Expanding along column j, that is
``sum_i b(row i) * cofactor(i, j)``; the cofactors are shared by every basis
element of the column.

Ranks are taken at seeded random points of F_p.  A rank observed mod p never
exceeds the generic rank over Q, so an observed full rank is evidence of
surjectivity while a deficient rank is only evidence of the opposite.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ansatz import AnsatzConfig, MinorExpansion, backflow_matrix, row_substitution
from .combinat import DegreeProfile, enumerate_profiles
from .dimension import best_profile, determinant_count_bound, min_degree, target_dim_exact
from .polyalg import GF, QQ, Polynomial, PrimeField, key_blocks, sum_of_products

DEFAULT_PRIME = 2_147_483_647  # 2^31 - 1
DEFAULT_TRIALS = 3
DEFAULT_MAX_ROWS = 100_000
MAX_ROWS_ENV = "BACKFLOW_MAX_ROWS"
DENSE_LIMIT = 20_000_000  # matrix entries handled by the numpy path


class RankProbeError(ValueError):
    pass


class ResourceGuardError(RankProbeError):
    pass


def max_rows() -> int:
    raw = os.environ.get(MAX_ROWS_ENV)
    return int(raw) if raw else DEFAULT_MAX_ROWS


def _prime_field(prime: int) -> PrimeField:
    if prime <= 2**30:
        raise RankProbeError(f"prime {prime} must exceed 2^30")
    return GF(prime)


@dataclass(frozen=True)
class CoeffVector:
    config: AnsatzConfig
    values: tuple[int, ...]
    seed: str
    prime: int

    @property
    def field(self) -> PrimeField:
        return GF(self.prime)


def random_point(config: AnsatzConfig, seed, field=None) -> CoeffVector:
    """Uniform coefficients in F_p from a generator seeded by ``seed``."""
    field = GF(DEFAULT_PRIME) if field is None else field
    if field == QQ or not isinstance(field, PrimeField):
        raise RankProbeError("random points are sampled in prime-field mode only")
    rng = random.Random(f"backflow-point:{seed}:{field.p}:{config.n}:{config.profile}")
    values = tuple(rng.randrange(field.p) for _ in range(config.parameter_count))
    return CoeffVector(config, values, str(seed), field.p)


@dataclass
class JacobianMatrix:
    """Columns are coefficient polynomials, labelled (column j, basis index b), 1-based j."""

    n: int
    degree: int
    prime: int
    labels: list[tuple[int, int]]
    columns: list[Polynomial]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_support()), len(self.columns)

    def row_support(self) -> list[int]:
        keys = set()
        for col in self.columns:
            keys.update(col.terms)
        return sorted(keys, reverse=True)

    def vectors(self, antisymmetric: bool = True) -> list[dict[int, int]]:
        if not antisymmetric:
            return [c.terms for c in self.columns]
        keep = {k for k in self.row_support() if is_canonical_row(self.n, k)}
        return [{k: c for k, c in col.terms.items() if k in keep} for col in self.columns]

    def rank(self, antisymmetric: bool = True) -> int:
        return rank_mod_p(self.vectors(antisymmetric), self.prime)


def column_vector(poly: Polynomial, antisymmetric: bool = True) -> dict[int, int]:
    """Coefficient map of ``poly``; optionally only on canonical antisymmetric rows.

    For an antisymmetric polynomial the coefficient of a monomial is +-1 times
    the coefficient of its block-sorted rearrangement, and vanishes when two
    particles share a block, so the rows with strictly decreasing blocks carry
    all the information.
    """
    terms = poly.terms
    if not antisymmetric:
        return terms
    return {k: c for k, c in terms.items() if is_canonical_row(poly.n, k)}


def is_canonical_row(n: int, key: int) -> bool:
    blocks = key_blocks(n, key)
    return all(blocks[i] > blocks[i + 1] for i in range(n - 1))


def jacobian(config: AnsatzConfig, point: CoeffVector) -> JacobianMatrix:
    if (point.config is not config and point.config != config) or len(point.values) != config.parameter_count:
        raise RankProbeError("point does not belong to this configuration")
    field = point.field
    n = config.n
    phis = config.phis(point.values, field)
    expansion = MinorExpansion(backflow_matrix(phis))
    labels, columns = [], []
    for j, basis in enumerate(config.bases):
        cofactors = [expansion.cofactor(i, j) for i in range(n)]
        live = [i for i in range(n) if not cofactors[i].is_zero()]
        for b, element in enumerate(basis.elements):
            element = element.to_field(field)
            terms = [(1, element.permute(row_substitution(n, i + 1)), cofactors[i]) for i in live]
            labels.append((j + 1, b))
            columns.append(sum_of_products(terms, n, field))
    return JacobianMatrix(n, config.degree, field.p, labels, columns)


# ---------------------------------------------------------------------------
# elimination
# ---------------------------------------------------------------------------


class Echelon:
    """Incremental sparse row echelon form over F_p, keyed by leading row index."""

    def __init__(self, prime: int):
        self.p = prime
        self.pivots: dict[int, dict[int, int]] = {}

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, vector: dict[int, int]) -> bool:
        """Reduce ``vector`` and keep it if independent; returns whether it was kept."""
        p = self.p
        v = {k: c % p for k, c in vector.items() if c % p}
        while v:
            lead = max(v)
            pivot = self.pivots.get(lead)
            if pivot is None:
                inv = pow(v[lead], -1, p)
                self.pivots[lead] = {k: c * inv % p for k, c in v.items()}
                return True
            f = v[lead]
            for k, c in pivot.items():
                nv = (v.get(k, 0) - f * c) % p
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
        return False


def _dense_rank(vectors: Sequence[dict[int, int]], prime: int) -> int:
    keys = sorted({k for v in vectors for k in v})
    index = {k: i for i, k in enumerate(keys)}
    a = np.zeros((len(vectors), len(keys)), dtype=np.int64)
    for r, v in enumerate(vectors):
        for k, c in v.items():
            a[r, index[k]] = c % prime
    m, ncols = a.shape
    rank = 0
    for col in range(ncols):
        if rank == m:
            break
        nz = np.flatnonzero(a[rank:, col])
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            a[[rank, piv]] = a[[piv, rank]]
        inv = pow(int(a[rank, col]), -1, prime)
        a[rank] = a[rank] * inv % prime
        below = rank + 1 + np.flatnonzero(a[rank + 1:, col])
        if below.size:
            # entries < 2^31, so the outer product stays below 2^62
            a[below] = (a[below] - np.outer(a[below, col], a[rank])) % prime
        rank += 1
    return rank


def rank_mod_p(vectors: Sequence[dict[int, int]], prime: int, method: str = "auto") -> int:
    """Rank of sparse vectors (row index -> value) over F_p."""
    vectors = [v for v in vectors if v]
    if not vectors:
        return 0
    if method == "auto":
        rows = len({k for v in vectors for k in v})
        method = "dense" if prime < 2**31 and rows * len(vectors) <= DENSE_LIMIT else "sparse"
    if method == "dense":
        if prime >= 2**31:
            raise RankProbeError("dense elimination needs p < 2^31")
        return _dense_rank(vectors, prime)
    if method == "sparse":
        echelon = Echelon(prime)
        for v in vectors:
            echelon.add(v)
        return echelon.rank
    raise RankProbeError(f"unknown elimination method {method!r}")


# ---------------------------------------------------------------------------
# rank probes
# ---------------------------------------------------------------------------


def _guard(config: AnsatzConfig, limit: int | None = None) -> int:
    rows = target_dim_exact(config.n, config.degree)
    limit = max_rows() if limit is None else limit
    if rows > limit:
        raise ResourceGuardError(
            f"N={config.n}, D={config.degree}: {rows} antisymmetric rows exceed the limit {limit} "
            f"(set {MAX_ROWS_ENV} to raise it)"
        )
    return rows


def secant_ranks(
    config: AnsatzConfig,
    r: int,
    trials: int = DEFAULT_TRIALS,
    prime: int = DEFAULT_PRIME,
    seed=0,
    limit: int | None = None,
) -> list[int]:
    """Ranks of Jacobians stacked at 1, 2, ..., r random points; max over trials each."""
    if r < 1 or trials < 1:
        raise RankProbeError("need r >= 1 and trials >= 1")
    _guard(config, limit)
    field = _prime_field(prime)
    best = [0] * r
    for t in range(trials):
        vectors: list[dict[int, int]] = []
        for k in range(r):
            point = random_point(config, f"{seed}/{t}/{k}", field)
            vectors.extend(jacobian(config, point).vectors())
            best[k] = max(best[k], rank_mod_p(vectors, prime))
    return best


def generic_rank(config: AnsatzConfig, trials: int = DEFAULT_TRIALS, prime: int = DEFAULT_PRIME, seed=0) -> int:
    """Max Jacobian rank over ``trials`` seeded points: a lower bound on the generic rank."""
    return secant_ranks(config, 1, trials, prime, seed)[0]


def secant_rank(config: AnsatzConfig, r: int, trials: int = DEFAULT_TRIALS, prime: int = DEFAULT_PRIME, seed=0) -> int:
    """Dimension of the span of tangent spaces at r random points (Terracini)."""
    return secant_ranks(config, r, trials, prime, seed)[-1]


def fiber_dimension(config: AnsatzConfig, trials: int = DEFAULT_TRIALS, prime: int = DEFAULT_PRIME, seed=0) -> int:
    return config.parameter_count - generic_rank(config, trials, prime, seed)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def saturation(ranks: Sequence[int], target: int) -> dict:
    """First r where the secant ranks reach ``target`` or stop growing."""
    for i, value in enumerate(ranks):
        if value >= target:
            return {"r": i + 1, "kind": "saturated"}
        if i and value == ranks[i - 1]:
            return {"r": i, "kind": "stalled"}
    return {"r": None, "kind": "open"}


@dataclass
class ProfileProbe:
    profile: tuple[int, ...]
    parameter_count: int
    generic_rank: int
    fiber_dimension: int
    secant_ranks: list[int]
    secant_upper_bounds: list[int]
    saturation: dict
    rows: int
    bound_violations: list[int]

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile),
            "parameter_count": self.parameter_count,
            "generic_rank": self.generic_rank,
            "fiber_dimension": self.fiber_dimension,
            "secant_ranks": self.secant_ranks,
            "secant_upper_bounds": self.secant_upper_bounds,
            "saturation": self.saturation,
            "rows": self.rows,
            "bound_violations": self.bound_violations,
        }


def probe_profile(
    n: int,
    profile,
    r: int = 1,
    trials: int = DEFAULT_TRIALS,
    prime: int = DEFAULT_PRIME,
    seed=0,
    kind: str = "backflow",
    limit: int | None = None,
) -> ProfileProbe:
    config = AnsatzConfig.from_profile(n, profile, kind)
    target = target_dim_exact(n, config.degree)
    ranks = secant_ranks(config, r, trials, prime, seed, limit)
    rank1 = ranks[0]
    # r * dim X + r, capped by the ambient dimension
    bounds = [min(k * rank1 + k, target) for k in range(1, r + 1)]
    violations = [
        k
        for k in range(1, r + 1)
        if ranks[k - 1] > min(k * rank1, target) or (k > 1 and ranks[k - 1] < ranks[k - 2])
    ]
    return ProfileProbe(
        profile=config.profile.degrees,
        parameter_count=config.parameter_count,
        generic_rank=rank1,
        fiber_dimension=config.parameter_count - rank1,
        secant_ranks=ranks,
        secant_upper_bounds=bounds,
        saturation=saturation(ranks, target),
        rows=target,
        bound_violations=violations,
    )


@dataclass
class RankReport:
    n: int
    degree: int
    r: int
    trials: int
    prime: int
    seed: str
    target_dim_exact: int
    max_source_dim: int
    max_source_profile: tuple[int, ...]
    probes: list[ProfileProbe]
    verdict: str
    proof_grade: bool
    certificate: dict
    determinant_count_bound: int | None
    notes: list[str] = field(default_factory=list)

    @property
    def best_probe(self) -> ProfileProbe | None:
        if not self.probes:
            return None
        return max(self.probes, key=lambda p: (p.secant_ranks[-1], p.generic_rank))

    def to_json(self) -> dict:
        best = self.best_probe
        return {
            "n": self.n,
            "degree": self.degree,
            "r": self.r,
            "trials": self.trials,
            "prime": self.prime,
            "seed": self.seed,
            "target_dim_exact": self.target_dim_exact,
            "max_source_dim": self.max_source_dim,
            "max_source_profile": list(self.max_source_profile),
            "best_profile": list(best.profile) if best else None,
            "best_secant_rank": best.secant_ranks[-1] if best else None,
            "verdict": self.verdict,
            "proof_grade": self.proof_grade,
            "certificate": self.certificate,
            "determinant_count_bound": self.determinant_count_bound,
            "probes": [p.to_json() for p in self.probes],
            "notes": self.notes,
        }


def parameter_certificate(n: int, degree: int, r: int) -> dict:
    """Counting certificate: r * (max source dim) + r < target dim forces non-surjectivity."""
    profile, source = best_profile(n, degree)
    target = target_dim_exact(n, degree)
    bound = r * source + r
    return {
        "max_source_dim": source,
        "max_source_profile": list(profile.degrees),
        "secant_dimension_bound": bound,
        "target_dim_exact": target,
        "holds": bound < target,
    }


def certificate_sweep(n: int, r: int = 1, max_degree: int = 40) -> tuple[int | None, list[dict]]:
    """Smallest D in [min_degree(n), max_degree] where the counting certificate holds."""
    rows = []
    for degree in range(min_degree(n), max_degree + 1):
        cert = parameter_certificate(n, degree, r)
        rows.append({"degree": degree, **cert})
        if cert["holds"]:
            return degree, rows
    return None, rows


def surjectivity_verdict(
    n: int,
    degree: int,
    r: int = 1,
    *,
    profiles: str | Sequence = "all",
    trials: int = DEFAULT_TRIALS,
    prime: int = DEFAULT_PRIME,
    seed=0,
    kind: str = "backflow",
    limit: int | None = None,
) -> RankReport:
    """Probe secant ranks per profile and classify the ansatz map at (N, D).

    ``profiles`` is ``"all"``, ``"best"`` (largest exact source dimension) or
    an explicit list of profiles.
    """
    if degree < min_degree(n):
        raise RankProbeError(f"D = {degree} is below the minimal degree {min_degree(n)} for N = {n}")
    if profiles == "all":
        chosen = list(enumerate_profiles(n, degree))
    elif profiles == "best":
        chosen = [best_profile(n, degree)[0]]
    else:
        chosen = [p if isinstance(p, DegreeProfile) else DegreeProfile(tuple(p)) for p in profiles]
        if any(p.n != n or p.total != degree for p in chosen):
            raise RankProbeError(f"every profile must have {n} entries summing to {degree}")
    target = target_dim_exact(n, degree)
    cert = parameter_certificate(n, degree, r)
    probes = [probe_profile(n, p, r, trials, prime, seed, kind, limit) for p in chosen]
    top = max(p.secant_ranks[-1] for p in probes)
    complete = len(chosen) == len(list(enumerate_profiles(n, degree)))
    notes = []
    if cert["holds"]:
        verdict, proof = "not-surjective", True
    elif top >= target:
        verdict, proof = "surjective-evidence", False
    elif complete:
        verdict, proof = "not-surjective", False
        notes.append("rank deficiency observed mod p at sampled points; evidence, not proof")
    else:
        verdict, proof = "inconclusive", False
        notes.append("not every profile was probed")
    if r > 1 and len(chosen) > 1:
        notes.append("secant ranks stack points of a single profile; sums mixing profiles are not probed")
    return RankReport(
        n=n,
        degree=degree,
        r=r,
        trials=trials,
        prime=prime,
        seed=str(seed),
        target_dim_exact=target,
        max_source_dim=cert["max_source_dim"],
        max_source_profile=tuple(cert["max_source_profile"]),
        probes=probes,
        verdict=verdict,
        proof_grade=proof,
        certificate=cert,
        determinant_count_bound=determinant_count_bound(n) if n >= 2 else None,
        notes=notes,
    )
