import itertools
import random
from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from ordable.families import build_ln, gamma
from ordable.groups import fill, parse_presentation
from ordable.homology import (
    abelianization_matrix, determinant, first_homology, in_integer_row_span, matmul,
    smith_normal_form,
)
from ordable.slopes import SlopeQ


def leibniz_det(M):
    n = len(M)
    total = 0
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = -1 if inv % 2 else 1
        for i in range(n):
            term *= M[i][perm[i]]
        total += term
    return total


def invariant_factors_oracle(M):
    """Invariant factors from determinantal divisors (gcd of k x k minors)."""
    rows, cols = len(M), len(M[0])
    d = [1]
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for R in itertools.combinations(range(rows), k):
            for C in itertools.combinations(range(cols), k):
                g = gcd(g, leibniz_det([[M[i][j] for j in C] for i in R]))
        d.append(g)
    out = []
    for k in range(1, len(d)):
        out.append(0 if d[k] == 0 else d[k] // d[k - 1])
    return out


def check_snf(M):
    diag, U, V = smith_normal_form(M)
    rows, cols = len(M), len(M[0])
    D = matmul(matmul(U, M), V)
    for i in range(rows):
        for j in range(cols):
            assert D[i][j] == (diag[i] if i == j else 0)
    assert abs(determinant(U)) == 1 and abs(determinant(V)) == 1
    assert all(x >= 0 for x in diag)
    for x, y in zip(diag, diag[1:]):
        assert (y == 0) if x == 0 else (y % x == 0)
    return diag


def test_snf_examples():
    assert check_snf([[2, 0], [0, 0]]) == [2, 0]
    assert check_snf([[2, 4], [6, 8]]) == [2, 4]
    assert check_snf([[0, 0, 0], [0, 0, 0]]) == [0, 0]


def test_snf_random_4x4_against_minor_oracle():
    rng = random.Random(20240611)
    for _ in range(100):
        M = [[rng.randint(-9, 9) for _ in range(4)] for _ in range(4)]
        assert check_snf(M) == invariant_factors_oracle(M)


@settings(max_examples=60)
@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_snf_rectangular(r, c, data):
    M = [[data.draw(st.integers(-20, 20)) for _ in range(c)] for _ in range(r)]
    assert check_snf(M) == invariant_factors_oracle(M)


def test_abelianization_matrices():
    assert abelianization_matrix(build_ln(0).presentation) == [[0, 0]]
    assert abelianization_matrix(parse_presentation("group T { gens: a; rel: a^3; }")) == [[3]]
    G = gamma()
    M = abelianization_matrix(G)
    # direct count over the letters
    for row, r in zip(M, G.relators):
        assert row == [sum(s for g, s in r.letters if g == x) for x in G.gens]


@pytest.mark.parametrize("n", range(6))
def test_h1_of_family_is_z2(n):
    h = first_homology(build_ln(n).presentation)
    assert h.rank == 2 and h.torsion == ()


def test_filled_examples():
    for n in range(3):
        P = build_ln(n).presentation
        h = first_homology(fill(fill(P, "T1", SlopeQ(5, 1)), "T2", SlopeQ(3, 1)))
        assert h.order == 15
    h = first_homology(fill(build_ln(0).presentation, "T1", SlopeQ(1, 1)))
    assert h.rank == 1 and h.order is None


def test_filled_order_is_product_of_numerators():
    rng = random.Random(7)
    for _ in range(20):
        n = rng.randint(0, 2)
        slopes = []
        for _ in range(2):
            a = rng.randint(2, 50)
            b = rng.choice([x for x in range(1, 12) if gcd(a, x) == 1])
            slopes.append(SlopeQ(a, b))
        P = fill(fill(build_ln(n).presentation, "T1", slopes[0]), "T2", slopes[1])
        assert first_homology(P).order == slopes[0].p * slopes[1].p


def test_integer_row_span():
    assert in_integer_row_span([[2, 0], [0, 3]], (4, 3))
    assert not in_integer_row_span([[2, 0], [0, 3]], (1, 0))
    assert in_integer_row_span([], (0, 0))
    assert not in_integer_row_span([[0, 0]], (0, 1))
