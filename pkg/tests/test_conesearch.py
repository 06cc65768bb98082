import copy
import json
from fractions import Fraction

import pytest

from ordable.conesearch import (
    Checker, Contradiction, Engine, MalformedCertificate, SignConstraint, Universe,
    build_identity_table, check_semigroup_certificate, init_state, leaves,
    mirror_constraints, propagate, replay_script, replay_tree, search,
)
from ordable.families import build_ln, semigroup_witnesses
from ordable.groups import Presentation, parse_presentation
from ordable.verdicts import (
    SHARP_ATOMS, cofinal_search, filled_search, identity_table, run_search,
    sharp_region_constraints, sharp_region_search,
)
from ordable.words import parse_word


def free_table(gens=("a", "b")):
    U = Universe(Presentation(gens, ()), {})
    return build_identity_table(U, [])


def slope_text(x):
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def shape(node, flip=False):
    node = node.get("result", node)
    if node["kind"] == "split":
        kids = [shape(c, flip) for c in node["children"]]
        return (node["atom"], tuple(reversed(kids) if flip else kids))
    return node["kind"]


# basic state handling

def test_direct_clash_is_rejected():
    t = free_table()
    with pytest.raises(Contradiction):
        init_state(Engine(t), [SignConstraint("a", 1), SignConstraint("a^-1", 1)])
    assert init_state(Engine(t), []).sign == {}


def test_product_and_root_closure():
    t = free_table()
    U = t.universe
    U.ref("a b")
    e = Engine(t)
    st = init_state(e, [SignConstraint("a^3", 1), SignConstraint("b", 1)])
    res = propagate(e, st)
    assert res.status == "fixedpoint"
    pos = {U.show(k) for k in res.state.positives()}
    assert {"a", "b", "a b", "a^3"} <= pos


def test_setup_state_is_consistent():
    t = identity_table(0)
    e = Engine(t, {"T1": "3", "T2": "3"})
    st = init_state(e, sharp_region_constraints(0))
    assert not set(st.positives()) & set(st.negatives())


def test_free_group_stays_open():
    t = free_table(("a",))
    res = search(Engine(t), [], ["a"], 4)
    assert res.verdict == "UNKNOWN"
    assert [l["kind"] for l in leaves(res.tree)] == ["open", "open"]


def test_finite_cyclic_group_is_unsat():
    # <a | a^3> is finite, so with a^3 = 1 in the table no sign for a survives
    P = parse_presentation("group T { gens: a; rel: a^3; }")
    t = build_identity_table(Universe(P, {}), [{"name": "torsion", "lhs": "1", "factors": ["a", "a", "a"]}])
    res = search(Engine(t), [], ["a"], 4)
    assert res.verdict == "UNSAT"
    assert replay_tree(Checker(t), res)["ok"]


# the sharp-region case analysis at sampled slopes

@pytest.mark.parametrize("n", [0, 1, 2])
@pytest.mark.parametrize("offset", [(3, 3), (4, 4), (Fraction(7, 2), 3)])
def test_sharp_region_samples_unsat(n, offset):
    r1 = slope_text(4 * n + offset[0])
    res, rep = sharp_region_search(n, r1, str(offset[1]))
    assert res.verdict == "UNSAT"
    assert rep["ok"] and rep["leaves"] == rep["closed_leaves"] > 0


def test_sharp_region_tree_is_deterministic():
    a, _ = sharp_region_search(0, "3", "3")
    b, _ = sharp_region_search(0, "3", "3")
    assert a.to_json() == b.to_json()
    json.loads(a.to_json())


def test_mirror_symmetry():
    t = identity_table(0)
    slopes = {"T1": "3", "T2": "3"}
    cs = sharp_region_constraints(0)
    a = search(Engine(t, slopes), cs, list(SHARP_ATOMS), 8)
    b = search(Engine(t, slopes), mirror_constraints(cs), list(SHARP_ATOMS), 8)
    assert a.verdict == b.verdict == "UNSAT"
    # the mirrored search visits the same splits with the branches exchanged
    assert shape(a.tree, flip=True) == shape(b.tree)
    assert replay_tree(Checker(t, slopes), b)["ok"]


def test_monotone_under_extra_constraints():
    t = identity_table(0)
    slopes = {"T1": "3", "T2": "3"}
    cs = sharp_region_constraints(0) + [SignConstraint("a", 1)]
    res, rep = run_search(t, slopes, cs, SHARP_ATOMS)
    assert res.verdict == "UNSAT" and rep["ok"]


@pytest.mark.parametrize("slopes,cs", [
    ({}, [SignConstraint("m", 1)]),
    ({}, sharp_region_constraints(0)),
    ({"T1": "1", "T2": "3"}, [SignConstraint("m", 1)]),
    ({"T1": "3/2", "T2": "3/2"}, [SignConstraint("m", 1)]),
])
def test_negative_controls_stay_open(slopes, cs):
    # without slope samples inside the region nothing forces a contradiction
    res, rep = run_search(identity_table(0), slopes, cs, SHARP_ATOMS)
    assert res.verdict == "UNKNOWN"
    assert rep["ok"]


@pytest.mark.parametrize("pq", [(1, 1), (1, 2), (2, 3)])
def test_filled_whitehead_unsat(pq):
    res, rep = filled_search(*pq)
    assert res.verdict == "UNSAT" and rep["ok"]


@pytest.mark.parametrize("n", [0, 1, 2])
def test_cofinal_interval_unsat(n):
    res, rep = cofinal_search(n)
    assert res.verdict == "UNSAT" and rep["ok"]


def _records(tree):
    out = list(tree.get("log", []))
    node = tree["result"]
    if node["kind"] == "split":
        for c in node["children"]:
            out += _records(c)
    return out


def test_tampered_tree_fails_replay():
    res, rep = sharp_region_search(0, "3", "3")
    assert rep["ok"]
    tree = copy.deepcopy(res.tree)
    derived = [r for r in _records(tree) if r["rule"] != "assume"]
    assert derived
    victim = derived[0]
    victim["sign"] = "+" if victim["sign"] == "-" else "-"
    assert not replay_tree(Checker(identity_table(0), {"T1": "3", "T2": "3"}), tree)["ok"]


def test_tampered_premises_fail_replay():
    res, _ = sharp_region_search(1, "7", "3")
    tree = copy.deepcopy(res.tree)
    victim = next(r for r in _records(tree) if r["rule"] not in ("assume",) and r.get("premises"))
    victim["premises"] = []
    assert not replay_tree(Checker(identity_table(1), {"T1": "7", "T2": "3"}), tree)["ok"]


# scripts

def test_empty_script_passes():
    rep = replay_script(Checker(identity_table(0)), [])
    assert rep.ok and rep.steps == []


def test_unknown_identity_reference_raises():
    ch = Checker(identity_table(0))
    with pytest.raises(KeyError):
        replay_script(ch, [{"step": "derive", "word": "a", "sign": "+", "rule": "product", "identity": "nope"}])


def test_unsupported_derivation_fails():
    ch = Checker(identity_table(0))
    rep = replay_script(ch, [
        {"step": "assume", "word": "a", "sign": "+"},
        {"step": "derive", "word": "b", "sign": "+", "rule": "product", "identity": "mmum"},
    ])
    assert not rep.ok and rep.steps[0][2] and not rep.steps[1][2]


# semigroup certificates

def test_semigroup_trivial_square():
    P = parse_presentation("group F { gens: a, b; }")
    a = parse_word("a")
    cert = {"op": "product", "args": [{"op": "base"}, {"op": "base"}]}
    assert check_semigroup_certificate(P, parse_word("a^2"), a, cert)
    assert not check_semigroup_certificate(P, parse_word("a^3"), a, cert)


def test_semigroup_witnesses_verify():
    P, target, reduced, ws = semigroup_witnesses()
    assert target == reduced == parse_word("b^-3 a b a^-1 b^2 a b^-3 a b")
    assert len(ws) == 2
    for w in ws:
        assert check_semigroup_certificate(P, target, w.base, w.certificate)


def test_semigroup_bad_root_and_malformed():
    P = parse_presentation("group F { gens: a, b; }")
    a = parse_word("a")
    good = {"op": "root", "k": 2, "value": "a", "arg": {"op": "product", "args": [{"op": "base"}, {"op": "base"}]}}
    assert check_semigroup_certificate(P, a, a, good)
    bad = dict(good, value="b")
    assert not check_semigroup_certificate(P, parse_word("b"), a, bad)
    for broken in [{"op": "nope"}, {"op": "product", "args": []}, {"op": "conj", "arg": {"op": "base"}},
                   {"op": "root", "k": 0, "value": "a", "arg": {"op": "base"}}]:
        with pytest.raises(MalformedCertificate):
            check_semigroup_certificate(P, a, a, broken)


def test_semigroup_eq_step_needs_certificate():
    P = build_ln(0).presentation
    T1 = P.boundary("T1")
    lit = T1.meridian * T1.longitude
    swapped = T1.longitude * T1.meridian
    cert = {"op": "eq", "value": str(swapped), "arg": {"op": "base"}}
    assert not check_semigroup_certificate(P, swapped, lit, cert)
