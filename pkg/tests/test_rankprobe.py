import json
import random
from fractions import Fraction

import pytest

from backflow.ansatz import AnsatzConfig, assemble_phi, backflow_det
from backflow.combinat import enumerate_profiles
from backflow.dimension import target_dim_exact
from backflow.polyalg import GF, QQ, Polynomial
from backflow.rankprobe import (
    DEFAULT_PRIME,
    MAX_ROWS_ENV,
    CoeffVector,
    RankProbeError,
    ResourceGuardError,
    certificate_sweep,
    column_vector,
    fiber_dimension,
    generic_rank,
    is_canonical_row,
    jacobian,
    parameter_certificate,
    probe_profile,
    random_point,
    rank_mod_p,
    saturation,
    secant_rank,
    secant_ranks,
    surjectivity_verdict,
)

from .oracles import rank_fraction

P = DEFAULT_PRIME
F = GF(P)


def onehot_det(config, values, column, index, field):
    """backflow_det with column ``column`` replaced by its ``index``-th basis element."""
    phis = config.phis(values, field)
    basis = config.bases[column]
    onehot = [0] * len(basis)
    onehot[index] = 1
    phis[column] = assemble_phi(basis, onehot, field)
    return backflow_det(phis)


def test_random_point_deterministic():
    config = AnsatzConfig.from_profile(3, (0, 1, 2))
    a = random_point(config, "7/0/0")
    b = random_point(config, "7/0/0")
    c = random_point(config, "7/0/1")
    assert a.values == b.values != c.values
    assert len(a.values) == config.parameter_count
    assert all(0 <= v < P for v in a.values)


def test_random_point_rejects_rationals():
    config = AnsatzConfig.from_profile(2, (0, 1))
    with pytest.raises(RankProbeError):
        random_point(config, 0, QQ)


def test_small_prime_rejected():
    config = AnsatzConfig.from_profile(2, (0, 1))
    with pytest.raises(RankProbeError):
        secant_ranks(config, 1, prime=101)


def test_jacobian_at_zero_point_vanishes():
    # each column has an (N-1)-fold product of zero orbitals as cofactor
    config = AnsatzConfig.from_profile(3, (0, 1, 1))
    point = CoeffVector(config, (0,) * config.parameter_count, "zero", P)
    jac = jacobian(config, point)
    assert jac.shape == (0, config.parameter_count)
    assert all(col.is_zero() for col in jac.columns)


def test_jacobian_point_must_match():
    a = AnsatzConfig.from_profile(2, (0, 1))
    b = AnsatzConfig.from_profile(2, (1, 1))
    with pytest.raises(RankProbeError):
        jacobian(b, random_point(a, 0))


def test_parameter_count_example():
    config = AnsatzConfig.from_profile(2, (0, 2))
    jac = jacobian(config, random_point(config, 1))
    assert len(jac.columns) == config.parameter_count == 22


@pytest.mark.parametrize("n,profile", [(2, (0, 2)), (3, (0, 1, 1)), (3, (1, 1, 1)), (4, (0, 1, 1, 1))])
def test_jacobian_columns_are_onehot_dets(n, profile):
    config = AnsatzConfig.from_profile(n, profile)
    point = random_point(config, f"onehot-{n}")
    jac = jacobian(config, point)
    for (j, b), col in zip(jac.labels, jac.columns):
        assert col == onehot_det(config, point.values, j - 1, b, F)


def test_directional_derivative():
    # J v equals the t-linear part of det(phi(c + t v)), computed by multilinearity
    config = AnsatzConfig.from_profile(3, (1, 1, 2))
    point = random_point(config, "dir")
    jac = jacobian(config, point)
    rng = random.Random(4)
    v = [rng.randrange(P) for _ in range(config.parameter_count)]
    jv = Polynomial.zero(3, F)
    for coef, col in zip(v, jac.columns):
        jv = jv + col.scale(coef)
    base = config.phis(point.values, F)
    direction = config.phis(v, F)
    expected = Polynomial.zero(3, F)
    for j in range(3):
        phis = list(base)
        phis[j] = direction[j]
        expected = expected + backflow_det(phis)
    assert jv == expected


def test_canonical_rows():
    n = 2
    x11 = Polynomial.variable(n, 1, 1)
    x21 = Polynomial.variable(n, 2, 1)
    vec = column_vector(x21 - x11)
    assert len(vec) == 1
    (key,) = vec
    assert is_canonical_row(n, key)
    assert column_vector(x21 - x11, antisymmetric=False) == (x21 - x11).terms
    assert not is_canonical_row(n, next(iter((x11 * x21).terms)))


def test_rank_bounds_and_generic_examples():
    config = AnsatzConfig.from_profile(2, (0, 2))
    rank = generic_rank(config, trials=2, seed=0)
    assert rank == 9 == target_dim_exact(2, 2)
    assert fiber_dimension(config, trials=2, seed=0) == 13
    for n, degree in ((2, 3), (3, 3)):
        target = target_dim_exact(n, degree)
        for profile in enumerate_profiles(n, degree):
            cfg = AnsatzConfig.from_profile(n, profile)
            r = generic_rank(cfg, trials=1, seed=1)
            assert 0 <= r <= min(cfg.parameter_count, target)
            assert cfg.parameter_count - r >= n - 1 or r == 0


def test_slater_rank_against_rational_oracle():
    n = 2
    config = AnsatzConfig.from_profile(n, (1, 1), "slater")
    assert config.parameter_count == 6
    assert generic_rank(config, trials=2) == 3
    # same Jacobian over Q at a small integer point, eliminated with Fractions
    rng = random.Random(8)
    values = [rng.randint(-5, 5) for _ in range(config.parameter_count)]
    cols = []
    for j, basis in enumerate(config.bases):
        for b in range(len(basis)):
            cols.append(onehot_det(config, values, j, b, QQ))
    keys = sorted({k for c in cols for k in c.terms})
    rows = [[c.terms.get(k, Fraction(0)) for k in keys] for c in cols]
    assert rank_fraction(rows) == 3


def test_secant_monotone_and_bounded():
    config = AnsatzConfig.from_profile(3, (0, 1, 2))
    ranks = secant_ranks(config, 4, trials=1, seed=2)
    assert ranks[0] == generic_rank(config, trials=1, seed=2)
    assert all(a <= b for a, b in zip(ranks, ranks[1:]))
    target = target_dim_exact(3, 3)
    assert all(r <= min(k * ranks[0], target) for k, r in enumerate(ranks, 1))
    assert secant_rank(config, 4, trials=1, seed=2) == ranks[-1]


def test_saturation_classification():
    assert saturation([3, 6, 9], 9) == {"r": 3, "kind": "saturated"}
    assert saturation([3, 5, 5, 5], 9) == {"r": 2, "kind": "stalled"}
    assert saturation([3, 5], 9) == {"r": None, "kind": "open"}


def test_dense_and_sparse_agree():
    rng = random.Random(12)
    for _ in range(20):
        vectors = []
        for _ in range(rng.randint(1, 12)):
            vectors.append({rng.randrange(15): rng.randrange(P) for _ in range(rng.randint(0, 5))})
        # add dependent combinations
        if len(vectors) > 1:
            a, b = vectors[0], vectors[1]
            vectors.append({k: (3 * a.get(k, 0) + 5 * b.get(k, 0)) % P for k in set(a) | set(b)})
        assert rank_mod_p(vectors, P, "dense") == rank_mod_p(vectors, P, "sparse")


def test_canonical_rows_carry_full_rank():
    config = AnsatzConfig.from_profile(3, (0, 1, 2))
    jac = jacobian(config, random_point(config, 5))
    assert jac.rank(antisymmetric=True) == jac.rank(antisymmetric=False)


def test_rank_mod_p_errors():
    with pytest.raises(RankProbeError):
        rank_mod_p([{1: 1}], P, "qr")
    assert rank_mod_p([{}, {}], P) == 0


def test_resource_guard(monkeypatch):
    config = AnsatzConfig.from_profile(3, (1, 2, 3))
    with pytest.raises(ResourceGuardError):
        secant_ranks(config, 1, limit=10)
    monkeypatch.setenv(MAX_ROWS_ENV, "10")
    with pytest.raises(ResourceGuardError):
        generic_rank(config)


def test_probe_profile_report():
    probe = probe_profile(2, (0, 2), r=2, trials=1)
    assert probe.generic_rank == 9 and probe.fiber_dimension == 13
    assert probe.saturation == {"r": 1, "kind": "saturated"}
    assert probe.bound_violations == []
    assert probe.secant_upper_bounds == [9, 9]


def test_certificate_helpers():
    cert = parameter_certificate(2, 2, 1)
    assert cert["max_source_dim"] == 22 and cert["target_dim_exact"] == 9
    assert not cert["holds"]
    found, rows = certificate_sweep(3, 1, max_degree=8)
    assert found is None
    assert [row["degree"] for row in rows] == list(range(2, 9))


def test_verdict_examples():
    report = surjectivity_verdict(2, 2, 1, trials=1)
    assert report.verdict == "surjective-evidence" and not report.proof_grade
    assert report.determinant_count_bound == 8
    report = surjectivity_verdict(3, 3, 1, trials=1)
    assert report.verdict == "not-surjective" and not report.proof_grade
    assert report.best_probe.generic_rank < report.target_dim_exact
    partial = surjectivity_verdict(3, 3, 1, profiles=[(1, 1, 1)], trials=1)
    assert partial.verdict == "inconclusive"
    with pytest.raises(RankProbeError):
        surjectivity_verdict(3, 3, 1, profiles=[(1, 2)])
    with pytest.raises(RankProbeError):
        surjectivity_verdict(4, 2, 1)


def test_report_bytes_reproducible():
    def run():
        return json.dumps(surjectivity_verdict(3, 3, 2, trials=2, seed=9).to_json(), sort_keys=True)

    assert run() == run()
    other = json.dumps(surjectivity_verdict(3, 3, 2, trials=2, seed=10).to_json(), sort_keys=True)
    assert json.loads(other)["seed"] == "10"
