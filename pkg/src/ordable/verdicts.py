"""Slope-region facts, the rules that combine them, and the final reports.

Published theorems enter as trusted rules with explicit guards; everything
a guard asks for is produced here by running the engines (cone search,
scripted replays, certificates, coset tables, homology).  A rule whose
guard fact is missing raises :class:`MissingGuard` when called directly;
:func:`apply_rules` records the skip and moves on.

Regions are finite unions of boxes ``I1 x I2`` of real intervals with
rational or infinite endpoints, one factor per boundary torus.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

from .conesearch import (
    Checker, Engine, SignConstraint, Universe, build_identity_table,
    check_semigroup_certificate, replay_script, replay_tree, search,
)
from .cosets import certify_nonLO_by_finiteness
from .families import (
    LN_MACROS, build_ln, build_whitehead_specials, corpus_entries, corpus_template,
    homomorphism_reports, script_cases, semigroup_witnesses, whitehead_filled,
)
from .groups import fill, prove_equal
from .homology import first_homology
from .slopes import SlopeQ

# --- intervals and regions ---------------------------------------------------


def _frac_text(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class Interval:
    """Nonempty real interval; ``None`` endpoints are -inf / +inf (always open)."""

    lo: Fraction | None
    hi: Fraction | None
    lo_closed: bool = False
    hi_closed: bool = False

    def __post_init__(self):
        for name in ("lo", "hi"):
            v = getattr(self, name)
            if v is not None and not isinstance(v, Fraction):
                object.__setattr__(self, name, Fraction(v))
        if (self.lo is None and self.lo_closed) or (self.hi is None and self.hi_closed):
            raise ValueError("infinite endpoints are open")
        if self.lo is not None and self.hi is not None:
            if self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed)):
                raise ValueError("empty interval")

    @classmethod
    def open(cls, lo, hi=None) -> "Interval":
        return cls(lo, hi)

    @classmethod
    def point(cls, x) -> "Interval":
        return cls(Fraction(x), Fraction(x), True, True)

    @classmethod
    def real_line(cls) -> "Interval":
        return cls(None, None)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        t = text.strip()
        if len(t) < 5 or t[0] not in "([" or t[-1] not in ")]" or "," not in t:
            raise ValueError(f"bad interval {text!r}")
        a, b = t[1:-1].split(",")
        conv = lambda s: None if s.strip() in ("inf", "-inf") else Fraction(s.strip())
        return cls(conv(a), conv(b), t[0] == "[", t[-1] == "]")

    def contains(self, x) -> bool:
        x = Fraction(x)
        if self.lo is not None and (x < self.lo or (x == self.lo and not self.lo_closed)):
            return False
        if self.hi is not None and (x > self.hi or (x == self.hi and not self.hi_closed)):
            return False
        return True

    def __str__(self):
        lo = "-inf" if self.lo is None else _frac_text(self.lo)
        hi = "inf" if self.hi is None else _frac_text(self.hi)
        return ("[" if self.lo_closed else "(") + f"{lo},{hi}" + ("]" if self.hi_closed else ")")


def _breaks(ivs: Iterable[Interval]) -> list:
    return sorted({x for iv in ivs for x in (iv.lo, iv.hi) if x is not None})


def _pieces(iv: Interval, B: list) -> range:
    # elementary pieces: 2k+1 is the point B[k], 2k the open gap before it
    if iv.lo is None:
        i = 0
    else:
        k = B.index(iv.lo)
        i = 2 * k + 1 if iv.lo_closed else 2 * k + 2
    if iv.hi is None:
        j = 2 * len(B)
    else:
        k = B.index(iv.hi)
        j = 2 * k + 1 if iv.hi_closed else 2 * k
    return range(i, j + 1)


def _from_pieces(i: int, j: int, B: list) -> Interval:
    if i == 0:
        lo, lc = None, False
    elif i % 2:
        lo, lc = B[(i - 1) // 2], True
    else:
        lo, lc = B[i // 2 - 1], False
    if j == 2 * len(B):
        hi, hc = None, False
    elif j % 2:
        hi, hc = B[(j - 1) // 2], True
    else:
        hi, hc = B[j // 2], False
    return Interval(lo, hi, lc, hc)


def _runs(idx: Iterable[int]) -> tuple:
    out = []
    for k in sorted(idx):
        if out and out[-1][1] == k - 1:
            out[-1][1] = k
        else:
            out.append([k, k])
    return tuple(tuple(r) for r in out)


class Region:
    """Finite union of boxes, kept in a canonical disjoint form.

    The form is: cut both axes at every endpoint, take the covered cells,
    merge each column into maximal runs, then merge neighbouring columns
    with identical runs.  Equal point sets give equal box lists.
    """

    def __init__(self, boxes: Iterable[tuple] = ()):
        self.boxes = self._normalize(list(boxes))

    @staticmethod
    def _cells(boxes, BX, BY) -> set:
        return {(i, j) for X, Y in boxes for i in _pieces(X, BX) for j in _pieces(Y, BY)}

    @classmethod
    def _normalize(cls, boxes) -> tuple:
        if not boxes:
            return ()
        BX, BY = _breaks(b[0] for b in boxes), _breaks(b[1] for b in boxes)
        return cls._merge(cls._cells(boxes, BX, BY), BX, BY)

    @staticmethod
    def _merge(cells, BX, BY) -> tuple:
        cols: dict = {}
        for i, j in cells:
            cols.setdefault(i, set()).add(j)
        groups = []
        for i in sorted(cols):
            runs = _runs(cols[i])
            if groups and groups[-1][1] == i - 1 and groups[-1][2] == runs:
                groups[-1][1] = i
            else:
                groups.append([i, i, runs])
        return tuple((_from_pieces(a, b, BX), _from_pieces(c, d, BY))
                     for a, b, runs in groups for c, d in runs)

    @classmethod
    def box(cls, X: Interval, Y: Interval) -> "Region":
        return cls([(X, Y)])

    @classmethod
    def plane(cls) -> "Region":
        return cls.box(Interval.real_line(), Interval.real_line())

    @classmethod
    def parse(cls, text: str) -> "Region":
        t = text.strip()
        if t == "empty":
            return cls()
        boxes = []
        for part in t.split(" u "):
            x, y = part.split("x")
            boxes.append((Interval.parse(x), Interval.parse(y)))
        return cls(boxes)

    def _combine(self, other: "Region", op) -> "Region":
        allb = self.boxes + other.boxes
        if not allb:
            return Region()
        BX, BY = _breaks(b[0] for b in allb), _breaks(b[1] for b in allb)
        cells = op(self._cells(self.boxes, BX, BY), self._cells(other.boxes, BX, BY))
        r = Region()
        r.boxes = self._merge(cells, BX, BY) if cells else ()
        return r

    def union(self, other: "Region") -> "Region":
        return self._combine(other, set.__or__)

    def intersection(self, other: "Region") -> "Region":
        return self._combine(other, set.__and__)

    def difference(self, other: "Region") -> "Region":
        return self._combine(other, set.__sub__)

    def swap(self) -> "Region":
        return Region((Y, X) for X, Y in self.boxes)

    def contains(self, x, y) -> bool:
        return any(X.contains(x) and Y.contains(y) for X, Y in self.boxes)

    def covers(self, other: "Region") -> bool:
        return other.difference(self).is_empty()

    def is_empty(self) -> bool:
        return not self.boxes

    def __eq__(self, other):
        return isinstance(other, Region) and self.boxes == other.boxes

    def __hash__(self):
        return hash(self.boxes)

    def __str__(self):
        if not self.boxes:
            return "empty"
        return " u ".join(f"{X}x{Y}" for X, Y in self.boxes)

    __repr__ = __str__


def _pt(x, y) -> Region:
    return Region.box(Interval.point(x), Interval.point(y))


def _ray(lo, closed=False) -> Interval:
    return Interval(Fraction(lo), None, closed, False)


# --- facts and the knowledge base ---------------------------------------------

def _tuple_text(J: frozenset, K: frozenset) -> str:
    s = lambda A: "{" + ",".join(str(i) for i in sorted(A)) + "}"
    return f"({s(J)};{s(K)})"


def _parse_tuple(text: str) -> tuple:
    a, b = text.strip("()").split(";")
    conv = lambda t: frozenset(int(x) for x in t.strip("{}").split(",") if x)
    return conv(a), conv(b)


NOT_WEAK = _tuple_text(frozenset(), frozenset())


@dataclass
class Fact:
    kind: str                 # NotDetected | NonLO | KnownNonLOBoundaryCase | EngineUNSAT | ...
    detail: str               # detection tuple, artifact label, ...
    region: Region | None     # None for facts that are not about slopes
    justifications: list = field(default_factory=list)

    @property
    def key(self) -> str:
        return f"{self.kind}:{self.detail}"

    def to_json(self) -> dict:
        return {"kind": self.kind, "detail": self.detail,
                "region": None if self.region is None else str(self.region),
                "justifications": sorted(self.justifications, key=lambda j: json.dumps(j, sort_keys=True))}


class MissingGuard(RuntimeError):
    pass


def digest(obj) -> str:
    """Content hash of a JSON-serializable artifact."""
    blob = obj if isinstance(obj, str) else json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


class KnowledgeBase:
    def __init__(self, family: str = ""):
        self.family = family
        self.facts: dict = {}
        self.artifacts: dict = {}
        self.skipped: dict = {}

    def get(self, kind: str, detail: str) -> Fact | None:
        return self.facts.get(f"{kind}:{detail}")

    def region(self, kind: str, detail: str) -> Region:
        f = self.get(kind, detail)
        return f.region if f is not None and f.region is not None else Region()

    def need(self, kind: str, detail: str) -> Fact:
        f = self.get(kind, detail)
        if f is None:
            raise MissingGuard(f"missing guard fact {kind}:{detail}")
        return f

    def add_artifact(self, name: str, obj) -> str:
        self.artifacts[name] = digest(obj)
        return name


def assert_fact(kb: KnowledgeBase, f: Fact) -> bool:
    """Merge ``f`` into ``kb``; True when something new was learned."""
    old = kb.facts.get(f.key)
    if old is None:
        kb.facts[f.key] = Fact(f.kind, f.detail, f.region, list(f.justifications))
        return True
    changed = False
    if f.region is not None:
        merged = f.region if old.region is None else old.region.union(f.region)
        changed = merged != old.region
        old.region = merged
    for j in f.justifications:
        if j not in old.justifications and changed:
            old.justifications.append(j)
    return changed


def _just(rule: str, premises=(), artifacts=(), trusted: str = "") -> dict:
    d = {"rule": rule, "premises": sorted(premises), "artifacts": sorted(artifacts)}
    if trusted:
        d["trusted"] = trusted
    return d


# --- engine runs that produce evidence ----------------------------------------------

def table_entries(entries):
    return [{"name": e["name"], "lhs": e["lhs"], "factors": e["factors"] or [e["rhs"]]} for e in entries]


@lru_cache(maxsize=None)
def identity_table(n: int, kind: str = "ln", fill_pq=None):
    """Verified factorization table for ``L_n`` or a Whitehead filling."""
    P = build_ln(n).presentation if kind == "ln" else whitehead_filled(*fill_pq)
    U = Universe(P, LN_MACROS)
    return build_identity_table(U, table_entries(corpus_entries(n, kind, fill=fill_pq)))


SHARP_ATOMS = ("a", "b", "mu", "mu^2 lam")
FILLED_ATOMS = ("m", "a", "b", "a^-2 b^2", "a b^-1", "a^-1 b^2")


def sharp_region_constraints(n: int) -> list:
    return [SignConstraint("m", 1), SignConstraint(f"m^{4 * n + 2} l", -1)]


def cofinal_constraints(n: int) -> list:
    return [SignConstraint("m", 1, True), SignConstraint(f"m^{2 * n + 2} l", -1)]


def filled_constraints() -> list:
    return [SignConstraint("m^3 l", 1), SignConstraint("m^4 l", -1)]


def run_search(table, slopes: dict, constraints, atoms, max_depth: int = 8):
    """Search, then replay the whole tree with an independent checker."""
    res = search(Engine(table, slopes), constraints, list(atoms), max_depth)
    return res, replay_tree(Checker(table, slopes), res)


def sharp_region_search(n: int, r1, r2):
    return run_search(identity_table(n), {"T1": str(r1), "T2": str(r2)},
                      sharp_region_constraints(n), SHARP_ATOMS)


def cofinal_search(n: int):
    return run_search(identity_table(n), {}, cofinal_constraints(n), ())


def filled_search(p: int, q: int, r1="7/2"):
    return run_search(identity_table(0, "whfill", (p, q)), {"T1": str(r1)},
                      filled_constraints(), FILLED_ATOMS)


def run_script(name: str, n: int = 0, fill_pq=None) -> dict:
    """Replay every case of a stored case analysis; case name -> report."""
    sc = script_cases(name, n, fill_pq)
    table = identity_table(n, sc["presentation"], fill_pq)
    ch = Checker(table, sc["slopes"])
    return {cname: replay_script(ch, steps) for cname, steps in sc["cases"]}


def sample_grid(lo1, lo2) -> list:
    """Three integer samples above each lower end plus one half-integer one."""
    def axis(lo):
        c = -(-Fraction(lo).numerator // Fraction(lo).denominator)
        return [Fraction(c + 1), Fraction(c + 2), Fraction(c + 3), Fraction(lo) + Fraction(3, 2)]
    return [(x, y) for x in axis(lo1) for y in axis(lo2)]


def _slope_text(x: Fraction) -> str:
    return str(SlopeQ.of(x))


def collect_evidence(kb: KnowledgeBase, n: int, *, witness: bool = True, specials: bool = True,
                     cosets: bool = True) -> KnowledgeBase:
    """Run the engines for ``L_n`` and record what they establish."""
    # sharp-region case analysis on the sample grid
    lo1, lo2 = 4 * n + 2, 2
    hit, arts = Region(), []
    for x, y in sample_grid(lo1, lo2):
        res, rep = sharp_region_search(n, _slope_text(x), _slope_text(y))
        if res.verdict == "UNSAT" and rep["ok"]:
            hit = hit.union(_pt(x, y))
            arts.append(kb.add_artifact(f"tree:sharp-region:n={n}:({_slope_text(x)},{_slope_text(y)})",
                                        res.to_json()))
    if not hit.is_empty():
        assert_fact(kb, Fact("EngineUNSAT", "sharp-region", hit, [_just("search+replay", artifacts=arts)]))
    reps = run_script("sharp-region", n)
    if all(r.ok for r in reps.values()):
        a = kb.add_artifact(f"script:sharp-region:n={n}", {k: r.steps for k, r in reps.items()})
        assert_fact(kb, Fact("ScriptReplay", "sharp-region", None, [_just("replay", artifacts=[a])]))

    # cofinal meridian forces m^(2n+2) l positive
    res, rep = cofinal_search(n)
    reps = run_script("cofinal-interval", n)
    if res.verdict == "UNSAT" and rep["ok"] and all(r.ok for r in reps.values()):
        a1 = kb.add_artifact(f"tree:cofinal-interval:n={n}", res.to_json())
        a2 = kb.add_artifact(f"script:cofinal-interval:n={n}", {k: r.steps for k, r in reps.items()})
        assert_fact(kb, Fact("ScriptReplay", "cofinal-interval", None, [_just("search+replay", artifacts=[a1, a2])]))

    # both peripheral subgroups generate the group
    P = build_ln(n).presentation
    checks = [("mu lam m^-1 mu^-1", "b a^-1"), ("m mu m", "(b a^-1 a^-1 b)^" + str(n) + " a")]
    rs = [prove_equal(P, l, r, LN_MACROS) for l, r in checks]
    if all(r.ok for r in rs):
        a = kb.add_artifact(f"identities:generation:n={n}", [[l, r, x.tier] for (l, r), x in zip(checks, rs)])
        assert_fact(kb, Fact("IdentityCheck", "peripherals-generate", None, [_just("prove_equal", artifacts=[a])]))

    # homology: Z^2, and |H1| = a1 a2 for fillings
    h = first_homology(P)
    orders = []
    for (a1, b1), (a2, b2) in (((2 * n + 3, 1), (3, 1)), ((4 * n + 7, 2), (5, 2))):
        Pf = fill(fill(P, "T1", SlopeQ(a1, b1)), "T2", SlopeQ(a2, b2))
        orders.append([f"{a1}/{b1}", f"{a2}/{b2}", first_homology(Pf).order, a1 * a2])
    if h.rank == 2 and not h.torsion and all(o[2] == o[3] for o in orders):
        a = kb.add_artifact(f"homology:n={n}", {"H1": str(h), "fillings": orders})
        assert_fact(kb, Fact("Homology", "H1=Z^2,|H1(fill)|=a1*a2", None, [_just("smith-normal-form", artifacts=[a])]))

    if n != 0:
        return kb

    # filled Whitehead case analyses
    hit, arts = Region(), []
    for p, q in corpus_template()["fill_samples"]:
        res, rep = filled_search(p, q)
        reps = run_script("filled-whitehead", 0, (p, q))
        if res.verdict == "UNSAT" and rep["ok"] and all(r.ok for r in reps.values()):
            t2 = Fraction(p + q, q)
            hit = hit.union(_pt(Fraction(7, 2), t2))
            arts.append(kb.add_artifact(f"tree:filled-whitehead:p/q={p}/{q}", res.to_json()))
            arts.append(kb.add_artifact(f"script:filled-whitehead:p/q={p}/{q}",
                                        {k: r.steps for k, r in reps.items()}))
    if not hit.is_empty():
        assert_fact(kb, Fact("EngineUNSAT", "filled-whitehead", hit, [_just("search+replay", artifacts=arts)]))

    if witness:
        Pw, target, reduced, ws = semigroup_witnesses()
        ok = target == reduced and all(check_semigroup_certificate(Pw, target, w.base, w.certificate)
                                       and prove_equal(Pw, w.base_element, w.base, LN_MACROS).ok for w in ws)
        if ok:
            a = kb.add_artifact("semigroup:N(ml)&N(m)", {w.name: w.certificate for w in ws})
            assert_fact(kb, Fact("SemigroupWitness", "N(ml)&N(m)", None, [_just("semigroup-certificate", artifacts=[a])]))

    if specials:
        sp = build_whitehead_specials()
        for name, rep in homomorphism_reports(sp).items():
            if all(c.ok for c in rep):
                a = kb.add_artifact(f"homomorphism:{name}", [[c.label, c.tier] for c in rep])
                assert_fact(kb, Fact("Homomorphism", name, None, [_just("certificates", artifacts=[a])]))

    if cosets:
        Pf = fill(fill(build_ln(0).presentation, "T1", SlopeQ(1, 1)), "T2", SlopeQ(1, 1))
        cert = certify_nonLO_by_finiteness(Pf, 100000)
        if cert is not None:
            a = kb.add_artifact("cosets:(1,1)", cert.table.to_csv())
            assert_fact(kb, Fact("FiniteQuotient", str(cert.order), _pt(1, 1), [_just("todd-coxeter", artifacts=[a])]))

    assert_fact(kb, Fact("KnownNonLOBoundaryCase", "trefoil", Region.box(Interval.point(1), _ray(1, True)),
                         [_just("trusted", trusted="slope-1 filling of the first component is the trefoil "
                                                   "complement; its fillings of slope >= 1 are non-LO")]))
    return kb


# --- rules ------------------------------------------------------------------------

def _nd(kb, J=(), K=()) -> Region:
    return kb.region("NotDetected", _tuple_text(frozenset(J), frozenset(K)))


def _assert_nd(kb, J, K, region, just) -> bool:
    if region.is_empty():
        return False
    return assert_fact(kb, Fact("NotDetected", _tuple_text(frozenset(J), frozenset(K)), region, [just]))


def rule_R1(kb: KnowledgeBase, n: int) -> bool:
    """A left-orderable filling makes (∅;{1,2}) detected, and one of ({1};{1,2}), ({2};{1,2}).

    The normal closure of each filling curve misses the peripheral subgroup
    as soon as both numerators exceed 1 (homology order argument).
    """
    kb.need("Homology", "H1=Z^2,|H1(fill)|=a1*a2")
    excluded = _nd(kb, (), (1, 2)).union(_nd(kb, (1,), (1, 2)).intersection(_nd(kb, (2,), (1, 2))))
    region = excluded.intersection(Region.box(_ray(1), _ray(1)))
    prem = [k for k in ("Homology:H1=Z^2,|H1(fill)|=a1*a2", "NotDetected:" + _tuple_text(frozenset(), frozenset({1, 2})),
                        "NotDetected:" + _tuple_text(frozenset({1}), frozenset({1, 2})),
                        "NotDetected:" + _tuple_text(frozenset({2}), frozenset({1, 2}))) if k in kb.facts]
    if region.is_empty():
        return False
    return assert_fact(kb, Fact("NonLO", "", region, [_just("R1", prem, trusted=(
        "an LO filling whose curves have numerators > 1 detects (∅;{1,2}) and one of ({1};{1,2}), ({2};{1,2})"))]))


def rule_R2(kb: KnowledgeBase, n: int) -> bool:
    """Weakening: a tuple that is not detected stays undetected when J or K grow."""
    changed = False
    for f in [f for f in kb.facts.values() if f.kind == "NotDetected"]:
        J, K = _parse_tuple(f.detail)
        for K2 in (frozenset(), frozenset({1}), frozenset({2}), frozenset({1, 2})):
            if not K <= K2:
                continue
            for J2 in (frozenset(), frozenset({1}), frozenset({2}), frozenset({1, 2})):
                if J <= J2 <= K2 and (J2, K2) != (J, K):
                    changed |= _assert_nd(kb, J2, K2, f.region, _just("R2", [f.key], trusted=(
                        "detection of a tuple implies detection of every sub-tuple")))
    return changed


def rule_R3(kb: KnowledgeBase, n: int) -> bool:
    """Sharp-region box from the case analysis, then its extension to (2n+2, inf) x (2, inf).

    The box is admitted only when the search is UNSAT on the whole sample
    grid and the scripted case analysis replays.  The extension uses: with
    a bounded second peripheral subgroup the second slope can be moved
    freely (both peripheral subgroups generate the group), and a cofinal
    meridian is impossible above 2n+2 (the cofinal-interval replay).
    """
    lo1, lo2 = 4 * n + 2, 2
    samples = kb.need("EngineUNSAT", "sharp-region")
    kb.need("ScriptReplay", "sharp-region")
    grid = Region()
    for x, y in sample_grid(lo1, lo2):
        grid = grid.union(_pt(x, y))
    if not samples.region.covers(grid):
        raise MissingGuard("sharp-region samples do not cover the declared grid")
    box = Region.box(_ray(lo1), _ray(lo2))
    changed = _assert_nd(kb, (), (), box, _just("R3", ["EngineUNSAT:sharp-region", "ScriptReplay:sharp-region"],
                                                 trusted="case analysis of sign patterns on the open box"))
    kb.need("ScriptReplay", "cofinal-interval")
    kb.need("IdentityCheck", "peripherals-generate")
    ys = [Y for X, Y in _nd(kb).boxes if X.hi is None]
    if not ys:
        return changed
    ext = Region()
    for Y in ys:
        ext = ext.union(Region.box(_ray(2 * n + 2), Y))
    changed |= _assert_nd(kb, (), (2,), ext, _just(
        "R3", ["NotDetected:" + NOT_WEAK, "ScriptReplay:cofinal-interval", "IdentityCheck:peripherals-generate"],
        trusted="bounded second peripheral subgroup lets the second slope vary; cofinal first one is ruled out"))
    return changed


def rule_R4(kb: KnowledgeBase, n: int) -> bool:
    """Whitehead only: the semigroup witness pushes the first-slope bound down to 1.

    If N(ml) and N(m) meet, a cofinal peripheral subgroup cannot detect a
    slope above 1.  With the filled case analyses (second slope in (1, 2])
    and the sharp box (second slope above 2), ({2};{2}) is not detected on
    (1, inf) x (1, inf).
    """
    if n != 0:
        return False
    kb.need("SemigroupWitness", "N(ml)&N(m)")
    kb.need("EngineUNSAT", "filled-whitehead")
    base = kb.need("NotDetected", NOT_WEAK)
    ys = Region.box(Interval.real_line(), Interval(Fraction(1), Fraction(2), False, True))
    for X, Y in base.region.boxes:
        ys = ys.union(Region.box(Interval.real_line(), Y))
    region = Region()
    for _, Y in ys.boxes:
        region = region.union(Region.box(_ray(1), Y))
    return _assert_nd(kb, (2,), (2,), region, _just(
        "R4", ["SemigroupWitness:N(ml)&N(m)", "EngineUNSAT:filled-whitehead", "NotDetected:" + NOT_WEAK],
        trusted="meeting root-closed conjugation-closed semigroups forbid weak detection above p/q"))


def rule_R5(kb: KnowledgeBase, n: int) -> bool:
    """Whitehead only: the automorphism swapping the components swaps coordinates."""
    if n != 0:
        return False
    kb.need("Homomorphism", "f")
    sigma = {1: 2, 2: 1}
    changed = False
    for f in list(kb.facts.values()):
        if f.region is None:
            continue
        j = _just("R5", [f.key, "Homomorphism:f"], trusted="f swaps the peripheral systems")
        if f.kind == "NotDetected":
            J, K = _parse_tuple(f.detail)
            changed |= _assert_nd(kb, {sigma[i] for i in J}, {sigma[i] for i in K}, f.region.swap(), j)
        elif f.kind in ("NonLO", "KnownNonLOBoundaryCase"):
            changed |= assert_fact(kb, Fact(f.kind, f.detail, f.region.swap(), [j]))
    return changed


def rule_R6(kb: KnowledgeBase, n: int) -> bool:
    """Whitehead only: the slope-1 boundary lines from the trefoil fact."""
    if n != 0:
        return False
    f = kb.need("KnownNonLOBoundaryCase", "trefoil")
    return assert_fact(kb, Fact("NonLO", "", f.region, [_just("R6", [f.key])]))


RULES = (("R1", rule_R1), ("R2", rule_R2), ("R3", rule_R3), ("R4", rule_R4), ("R5", rule_R5), ("R6", rule_R6))


def apply_rules(kb: KnowledgeBase, family) -> KnowledgeBase:
    """Apply R1..R6 to a fixed point; rules with missing guards are skipped."""
    n = family if isinstance(family, int) else family.n
    limit = len(RULES) * (len(kb.facts) + 16)
    for _ in range(limit):
        changed = False
        for name, rule in RULES:
            try:
                changed |= rule(kb, n)
                kb.skipped.pop(name, None)
            except MissingGuard as e:
                kb.skipped[name] = str(e)
        if not changed:
            return kb
    raise RuntimeError("rule application did not reach a fixed point")


FIG8_FACTS = (
    ("cofinal-peripheral", "peripheral subgroup cofinal => slope in [-1,1] u {inf}"),
    ("xy^-1-cofinal", "slope in (-inf,2) u (2,inf) => <x y^-1> cofinal"),
)


def figure_eight_facts(kb: KnowledgeBase) -> KnowledgeBase:
    """Two conditional facts about orderings of the figure-eight knot group.

    They transport Whitehead facts through the filling map psi (and its
    amphichiral twist phi): the first needs the semigroup witness and the
    swap f, the second needs the sharp box at n = 0.
    """
    kb.need("Homomorphism", "psi")
    kb.need("Homomorphism", "phi")
    first = ["Homomorphism:psi", "Homomorphism:phi", kb.need("SemigroupWitness", "N(ml)&N(m)").key,
             kb.need("Homomorphism", "f").key]
    second = ["Homomorphism:psi", kb.need("NotDetected", NOT_WEAK).key,
              kb.need("IdentityCheck", "peripherals-generate").key]
    for (label, text), prem in zip(FIG8_FACTS, (first, second)):
        assert_fact(kb, Fact("Fig8", label, None, [_just("quotient-ordering", prem, trusted=text)]))
    return kb


def emit_report(kb: KnowledgeBase) -> str:
    """Deterministic JSON report: sorted keys, canonical regions, artifact digests."""
    doc = {
        "family": kb.family,
        "nonLO": str(kb.region("NonLO", "")) if kb.get("NonLO", "") else None,
        "notWeaklyDetected": str(_nd(kb)) if kb.get("NotDetected", NOT_WEAK) else None,
        "figureEight": [text for label, text in FIG8_FACTS if kb.get("Fig8", label)],
        "facts": [kb.facts[k].to_json() for k in sorted(kb.facts)],
        "artifacts": dict(sorted(kb.artifacts.items())),
        "skippedRules": dict(sorted(kb.skipped.items())),
    }
    return json.dumps(doc, indent=1, sort_keys=True, ensure_ascii=False) + "\n"


def verdict(n: int, **evidence_flags) -> KnowledgeBase:
    """Evidence, rules and (for the Whitehead link) figure-eight facts for ``L_n``."""
    kb = KnowledgeBase("Wh" if n == 0 else f"L{n}")
    collect_evidence(kb, n, **evidence_flags)
    apply_rules(kb, n)
    if n == 0 and kb.get("Homomorphism", "psi") and kb.get("Homomorphism", "phi"):
        try:
            figure_eight_facts(kb)
        except MissingGuard as e:
            kb.skipped["fig8"] = str(e)
    return kb
