from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from ordable.families import build_ln, figure_eight, gamma
from ordable.groups import (
    DerivationCertificate, GroupHomomorphism, Presentation, PresentationError, Step,
    check_certificate, eliminate_generator, fill, format_presentation, parse_presentation,
    prove_equal, search_normal_closure_membership, verify_homomorphism,
)
from ordable.homology import first_homology
from ordable.slopes import INF, SlopeQ
from ordable.words import (
    IDENTITY, UnknownGenerator, WordSyntaxError, abelian_vector, conjugate, invert,
    multiply, parse_word, power, product, relator_normal_form,
)

WH_SOURCE = """
group Wh {
  gens: a, b;
  rel: a^2 b^-1 a^-1 b^3 = b^3 a^-1 b^-1 a^2;
  boundary T1 { m = b^-1 a; l = a b^-3 a^2 (a^-1 b)^3; }
  boundary T2 { m = a^-1 b^2; l = b a^-2 b a b^-2 a; }
}
"""


def W(t):
    return parse_word(t)


def data_text(name):
    return resources.files("ordable").joinpath("data", name).read_text()


def test_parse_whitehead_source():
    P = parse_presentation(WH_SOURCE)
    assert P.gens == ("a", "b")
    assert len(P.relators) == 1 and len(P.boundaries) == 2
    expected = multiply(W("a^2 b^-1 a^-1 b^3"), invert(W("b^3 a^-1 b^-1 a^2")))
    assert relator_normal_form(P.relators[0]) == relator_normal_form(expected)
    assert relator_normal_form(P.relators[0]) == relator_normal_form(build_ln(0).presentation.relators[0])


def test_parse_small_and_figure_eight():
    T = parse_presentation("group T { gens: a; rel: a^3; }")
    assert T.gens == ("a",) and T.relators == (W("a^3"),)
    K = parse_presentation(data_text("figure_eight.grp"))
    expected = multiply(W("x y^-1 x^-1 y x"), invert(W("y x y^-1 x^-1 y")))
    assert relator_normal_form(K.relators[0]) == relator_normal_form(expected)
    assert K == figure_eight()


def test_bundled_files_match_builders():
    assert parse_presentation(data_text("whitehead.grp")).relators == build_ln(0).presentation.relators
    assert parse_presentation(data_text("gamma.grp")) == gamma()


@pytest.mark.parametrize("n", range(3))
def test_format_round_trip(n):
    P = build_ln(n).presentation
    assert parse_presentation(format_presentation(P)) == P
    F = fill(P, "T1", SlopeQ(7, 2))
    assert parse_presentation(format_presentation(F)).relators == F.relators


def test_parse_errors():
    with pytest.raises(UnknownGenerator):
        parse_presentation("group T { gens: a; rel: b; }")
    with pytest.raises(PresentationError):
        parse_presentation("group T { gens: a; boundary X { m = a; l = a; } boundary X { m = a; l = a^2; } }")
    for bad in ["group { gens: a; }", "group T { gens: a; rel a; }", "group T { gens: a; rel: a^; }",
                "group T { gens: a; boundary X { m = a; } }", "group T { rel: a; }"]:
        with pytest.raises(WordSyntaxError):
            parse_presentation(bad)


def test_fill_appends_filling_relator():
    P = build_ln(0).presentation
    T2 = P.boundary("T2")
    F = fill(P, "T2", SlopeQ(2, 1))
    assert F.relators[:1] == P.relators
    assert [b.name for b in F.boundaries] == ["T1"]
    assert relator_normal_form(F.relators[1]) == relator_normal_form(multiply(power(T2.meridian, 2), T2.longitude))
    assert relator_normal_form(F.relators[1]) == relator_normal_form(W("b a^-2 b^3"))
    cert = search_normal_closure_membership(F, multiply(F.relators[1], invert(W("b a^-2 b^3"))), 4, 64)
    assert cert is not None and len(cert) <= 4
    assert check_certificate(F, F.relators[1], W("b a^-2 b^3"), cert)
    M = fill(P, "T1", INF)
    assert M.relators[1] == P.boundary("T1").meridian
    with pytest.raises(KeyError):
        fill(P, "T9", SlopeQ(1, 1))


def test_fill_orders_agree_with_homology():
    P = build_ln(1).presentation
    for a1, b1, a2, b2 in [(3, 1, 5, 2), (7, 3, 4, 1), (9, 2, 11, 5)]:
        F = fill(fill(P, "T1", SlopeQ(a1, b1)), "T2", SlopeQ(a2, b2))
        assert first_homology(F).order == a1 * a2


def test_eliminate_generator_at_n1():
    G = gamma()
    b0 = G.boundary("L0")
    P = G.with_relators([multiply(invert(b0.meridian), b0.longitude)])
    e = eliminate_generator(P, "y", W("(x^2 z^2)^1 x^2 z"))
    expected = W("x (z^2 x^2)^2 z (x^2 z^2)^2 z^-1 x^-1 (z^-2 x^-2)^2 z^-1 (x^-2 z^-2)^2 z")
    assert 1 in e.dropped
    assert e.presentation.gens == ("x", "z")
    assert len(e.presentation.relators) == 1
    assert relator_normal_form(e.presentation.relators[0]) == relator_normal_form(expected)
    # abelian invariants survive the elimination
    assert first_homology(e.presentation) == first_homology(P)


@pytest.mark.parametrize("n", range(6))
def test_second_relator_killed(n):
    G = gamma()
    b0 = G.boundary("L0")
    twist = multiply(invert(b0.meridian), power(b0.longitude, n))
    P = Presentation(G.gens, G.relators + (twist,), G.boundaries[1:])
    e = eliminate_generator(P, "y", W(f"(x^2 z^2)^{n} x^2 z"))
    assert 1 in e.dropped


def test_eliminate_errors():
    G = gamma()
    with pytest.raises(PresentationError):
        eliminate_generator(G, "y", W("y"))
    with pytest.raises(PresentationError):
        eliminate_generator(G, "y", W("x"))


def test_certificate_checks():
    P = build_ln(0).presentation
    T2 = P.boundary("T2")
    mulam = multiply(T2.meridian, T2.longitude)
    target = W("b a^-2 b a")
    cert = search_normal_closure_membership(P, multiply(mulam, invert(target)), 4, 64)
    assert cert is not None and len(cert) <= 4
    assert check_certificate(P, mulam, target, cert)
    empty = DerivationCertificate()
    assert check_certificate(P, W("a b"), W("a b"), empty)
    assert not check_certificate(P, W("a b"), W("b a"), empty)
    with pytest.raises(IndexError):
        check_certificate(P, W("a"), W("a"), DerivationCertificate((Step(3, 1, IDENTITY),)))


def test_certificate_json_round_trip():
    c = DerivationCertificate((Step(0, -1, W("b^-1 a")), Step(0, 1, IDENTITY)))
    assert c.to_json() == {"steps": [{"rel": 0, "exp": -1, "conj": "b^-1 a"}, {"rel": 0, "exp": 1, "conj": "1"}]}
    assert DerivationCertificate.from_json(c.to_json()) == c


def test_search_examples():
    P = build_ln(0).presentation
    c = search_normal_closure_membership(P, P.relators[0], 1, 0)
    assert c is not None and len(c) == 1
    T1 = P.boundary("T1")
    m, l = T1.meridian, T1.longitude
    comm = product([invert(m), invert(l), m, l])
    c = search_normal_closure_membership(P, comm, 8, 6)
    assert c is not None and check_certificate(P, comm, IDENTITY, c)
    # a has nonzero abelian image, so no budget can succeed
    assert search_normal_closure_membership(P, W("a"), 8, 6) is None
    assert first_homology(P).rank == 2


rel_st = st.lists(st.tuples(st.just(0), st.sampled_from((1, -1)),
                            st.lists(st.sampled_from(["a", "b", "a^-1", "b^-1"]), max_size=5)), max_size=4)


@settings(max_examples=100)
@given(rel_st)
def test_certificates_are_sound_for_abelianization(steps):
    P = build_ln(0).presentation
    cert = DerivationCertificate(tuple(Step(r, e, W(" ".join(c) or "1")) for r, e, c in steps))
    w = cert.evaluate(P)
    assert check_certificate(P, w, IDENTITY, cert)
    # every consequence of the relator has zero exponent sums here
    assert abelian_vector(w, P.gens) == (0, 0)


def test_search_result_rechecks():
    P = build_ln(0).presentation
    target = conjugate(P.relators[0], W("a b^-1"))
    c = search_normal_closure_membership(P, target, 3, 4)
    assert c is not None and check_certificate(P, target, IDENTITY, c)


def test_prove_equal_tiers():
    P = build_ln(0).presentation
    macros = {"m": ("T1", "m"), "l": ("T1", "l"), "mu": ("T2", "m"), "lam": ("T2", "l")}
    assert prove_equal(P, "a b", "a b").tier == "free"
    r = prove_equal(P, "m^3 l", "a b^-3 a^2", macros)
    assert r.ok and r.tier == "peripheral"
    # commuting the peripheral factors gives lam mu, which is freely b a^-2 b a
    r = prove_equal(P, "mu lam", "b a^-2 b a", macros)
    assert r.ok and r.tier == "peripheral"
    T2 = P.boundary("T2")
    r = prove_equal(P, multiply(T2.meridian, T2.longitude), W("b a^-2 b a"))
    assert r.ok and r.tier == "certificate"
    assert check_certificate(P, r.lhs, r.rhs, r.certificate)
    r = prove_equal(P, "a", "b", macros)
    assert not r.ok and "abelianization" in r.note


def test_homomorphism_identity_map():
    T = parse_presentation("group T { gens: a; rel: a^3; }")
    h = GroupHomomorphism(T, T, {"a": W("a")})
    assert all(c.ok for c in verify_homomorphism(h))
    bad = GroupHomomorphism(T, T, {"a": W("a^2")})
    assert not verify_homomorphism(bad)[0].ok


def test_presentation_validation():
    with pytest.raises(PresentationError):
        Presentation(("a", "a"), ())
    with pytest.raises(PresentationError):
        Presentation(("a",), (W("b"),))
    P = Presentation(("a", "b"), (W("b a b^-1"), W("a a^-1")))
    assert P.relators == (W("a"),)
