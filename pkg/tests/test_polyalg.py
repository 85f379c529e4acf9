import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backflow.polyalg import (
    GF,
    QQ,
    ZERO_DEGREE,
    ParticlePermutation,
    Polynomial,
    PolynomialError,
    antisymmetrize,
    grading,
    poly_arith,
    symmetry_check,
)

P = 2_147_483_647


def x(n, i, a, field=QQ):
    return Polynomial.variable(n, i, a, field)


@st.composite
def polynomials(draw, n=3, max_terms=5, max_deg=3, homogeneous=None):
    terms = []
    for _ in range(draw(st.integers(0, max_terms))):
        if homogeneous is None:
            flat = draw(st.lists(st.integers(0, max_deg), min_size=3 * n, max_size=3 * n))
        else:
            # distribute `homogeneous` units over 3n slots
            flat = [0] * (3 * n)
            for _ in range(homogeneous):
                flat[draw(st.integers(0, 3 * n - 1))] += 1
        exps = {(v // 3 + 1, v % 3 + 1): e for v, e in enumerate(flat) if e}
        c = Fraction(draw(st.integers(-9, 9)), draw(st.integers(1, 5)))
        terms.append((exps, c))
    return Polynomial.from_terms(n, terms)


@st.composite
def perms(draw, n=3):
    return ParticlePermutation(tuple(draw(st.permutations(range(1, n + 1)))))


def test_cancellation():
    p = x(1, 1, 1) + x(1, 1, 2)
    q = x(1, 1, 1) - x(1, 1, 2)
    assert poly_arith(p, q, "add") == x(1, 1, 1).scale(2)
    assert len(poly_arith(p, q, "add")) == 1


def test_product_exponents():
    prod = x(2, 1, 1) * x(2, 2, 1)
    assert list(prod.items()) == [({(1, 1): 1, (2, 1): 1}, 1)]


def test_product_with_zero():
    assert (x(2, 1, 1) * Polynomial.zero(2)).terms == {}


def test_mismatch_errors():
    with pytest.raises(PolynomialError):
        x(2, 1, 1) + x(3, 1, 1)
    with pytest.raises(PolynomialError):
        x(2, 1, 1) * x(2, 1, 1, GF(P))
    with pytest.raises(PolynomialError):
        Polynomial.variable(2, 3, 1)


def test_field_reduction():
    f = GF(7)
    p = Polynomial.constant(1, 10, f)
    assert p.terms == {0: 3}
    assert (p * p).terms == {0: 2}
    assert Polynomial.constant(1, Fraction(1, 2), f).terms == {0: 4}


@given(polynomials(), polynomials())
def test_mul_degree_additive_for_homogeneous(p, q):
    p = grading(p).components.get(p.degree, p) if p else p
    q = grading(q).components.get(q.degree, q) if q else q
    if p and q:
        assert (p * q).degree == p.degree + q.degree


def test_evaluate_examples():
    p = x(2, 1, 1) * x(2, 2, 2)
    assert p.evaluate([[1, 0, 0], [0, 3, 0]]) == 3
    q = p + 7
    assert q.evaluate([[0, 0, 0], [0, 0, 0]]) == 7
    with pytest.raises(PolynomialError):
        p.evaluate([[1, 2, 3]])


@settings(max_examples=40)
@given(polynomials(homogeneous=3), st.integers(-5, 5), st.lists(st.integers(-4, 4), min_size=9, max_size=9))
def test_homogeneity_scaling(p, lam, coords):
    point = [coords[0:3], coords[3:6], coords[6:9]]
    scaled = [[lam * c for c in row] for row in point]
    assert p.evaluate(scaled) == lam**3 * p.evaluate(point)


def test_evaluate_mod_p():
    f = GF(P)
    p = x(1, 1, 1, f) ** 3 - 5
    assert p.evaluate([[2, 0, 0]]) == 3


def test_permute_examples():
    n = 2
    swap = ParticlePermutation.transposition(n, 1, 2)
    assert x(n, 1, 1).permute(swap) == x(n, 2, 1)
    p = x(n, 1, 1) * x(n, 2, 3) + 4
    assert p.permute(ParticlePermutation.identity(n)) == p


@given(polynomials(), perms(), perms())
def test_group_action_law(p, sigma, tau):
    assert p.permute(sigma.compose(tau)) == p.permute(tau).permute(sigma)


def test_permutation_sign():
    assert ParticlePermutation((2, 1, 3)).sign == -1
    assert ParticlePermutation((2, 3, 1)).sign == 1
    assert ParticlePermutation.identity(4).sign == 1
    with pytest.raises(PolynomialError):
        ParticlePermutation((1, 1, 2))


def test_antisymmetrize_examples():
    n = 2
    a = antisymmetrize(x(n, 1, 1))
    assert a == (x(n, 1, 1) - x(n, 2, 1)).scale(Fraction(1, 2))
    assert antisymmetrize(x(n, 1, 1) + x(n, 2, 1)).is_zero()


@settings(max_examples=30)
@given(polynomials())
def test_antisymmetrize_idempotent_and_antisymmetric(p):
    a = antisymmetrize(p)
    assert antisymmetrize(a) == a
    assert symmetry_check(a, "antisymmetric_all")


def test_antisymmetrize_rejects_small_characteristic():
    with pytest.raises(PolynomialError):
        antisymmetrize(Polynomial.variable(3, 1, 1, GF(3)))
    # p > N is fine
    antisymmetrize(Polynomial.variable(3, 1, 1, GF(5)))


def test_symmetry_check_examples():
    slater = x(2, 1, 1) * x(2, 2, 2) - x(2, 1, 2) * x(2, 2, 1)
    assert symmetry_check(slater, "antisymmetric_all")
    assert symmetry_check(x(3, 2, 1) + x(3, 3, 1), "symmetric_tail")
    assert not symmetry_check(x(2, 1, 1), "antisymmetric_all")
    assert not symmetry_check(x(3, 2, 1), "symmetric_tail")


@pytest.mark.parametrize("n", [2, 3, 4])
def test_generators_suffice_for_antisymmetry(n):
    rng = random.Random(n)
    for trial in range(12):
        terms = []
        for _ in range(3):
            exps = {(rng.randint(1, n), rng.randint(1, 3)): rng.randint(1, 2) for _ in range(2)}
            terms.append((exps, rng.randint(-3, 3)))
        p = Polynomial.from_terms(n, terms)
        candidate = antisymmetrize(p) if trial % 2 == 0 else p
        exhaustive = all(candidate.permute(s) == candidate.scale(s.sign) for s in ParticlePermutation.all(n))
        assert symmetry_check(candidate, "antisymmetric_all") == exhaustive


def test_grading_examples():
    p = x(2, 1, 1) + x(2, 1, 1) * x(2, 2, 1)
    g = grading(p)
    assert sorted(g.components) == [1, 2]
    assert g.components[1] == x(2, 1, 1)
    assert g.degree == 2
    assert g.multidegrees == {(1, 0), (1, 1)}
    h = x(2, 1, 1) * x(2, 2, 2)
    assert grading(h).components == {2: h}


def test_zero_degree_sentinel():
    z = Polynomial.zero(2)
    assert z.degree == ZERO_DEGREE
    assert z.degree < 0 and z.degree != -1
    assert grading(z).components == {}


@given(polynomials(), polynomials())
def test_grading_linear(p, q):
    gp, gq, gs = grading(p), grading(q), grading(p + q)
    for d in set(gp.components) | set(gq.components):
        expect = gp.components.get(d, Polynomial.zero(3)) + gq.components.get(d, Polynomial.zero(3))
        assert gs.components.get(d, Polynomial.zero(3)) == expect
    total = Polynomial.zero(3)
    for comp in gs.components.values():
        assert comp.is_homogeneous()
        total = total + comp
    assert total == p + q


@given(polynomials())
def test_serialization_roundtrip_and_determinism(p):
    text = json.dumps(p.to_json())
    back = Polynomial.from_json(json.loads(text))
    assert back == p
    assert json.dumps(back.to_json()) == text
    shuffled_terms = list(p.to_json()["terms"])
    random.Random(0).shuffle(shuffled_terms)
    again = Polynomial.from_json({"n": p.n, "terms": shuffled_terms})
    assert json.dumps(again.to_json()) == text


def test_json_format_and_text_render():
    p = x(2, 2, 1) - x(2, 1, 1)
    assert p.to_json() == {
        "n": 2,
        "terms": [
            {"exp": [[1, 1, 1]], "coef": "-1/1"},
            {"exp": [[2, 1, 1]], "coef": "1/1"},
        ],
    }
    assert str(p) == "-1 * x[1][1]^1 + 1 * x[2][1]^1"
    f = GF(P)
    q = x(1, 1, 1, f).scale(-1)
    assert q.to_json()["terms"][0]["coef"] == f"{P - 1} mod {P}"
    assert Polynomial.from_json(q.to_json()) == q


def test_graded_lex_order():
    n = 1
    p = x(n, 1, 3) + x(n, 1, 1) ** 2 + x(n, 1, 1) + Polynomial.constant(n, 1)
    order = [exps for exps, _ in p.items()]
    assert order == [{(1, 1): 2}, {(1, 1): 1}, {(1, 3): 1}, {}]
