"""Positive-cone sign propagation and case-split search.

Group elements are *nodes*.  A node is either a literal word (stored in
the orientation that is smaller in shortlex order, so ``w`` and ``w^-1``
share a node with opposite parity) or a peripheral element ``m^u l^v`` of
a named boundary.  Signs propagate through a table of verified
factorizations ``lhs = f_1 ... f_k`` (``lhs`` may be the identity):

* product: all factors of sign s  =>  lhs has sign s
* force:   lhs has sign s, all factors but one have sign -s  =>  that one has s
* unit:    lhs is 1, all factors but one have sign s  =>  that one has -s
* root:    w = u^k  =>  w and u share a sign
* slope:   with a sample slope on a boundary, one peripheral sign fixes the
           half-plane side, and one on-line sign fixes the line direction
* cofinal: conjugates (by a fixed conjugator set) of cofinal elements keep
           sign and cofinality; products of cofinal elements stay cofinal
* pair:    the product of two elements of sign s, when it is a node, has s

Every assignment is logged with its premises so a separate checker can
replay it.  A branch closes when a node receives both signs or when a
product of same-signed factors equals 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .groups import (
    DerivationCertificate, Periph, Presentation, check_certificate,
    expression_segments, literal_expansion, prove_equal,
)
from .slopes import SlopeQ, det
from .words import (
    IDENTITY, Word, conjugate, format_word, invert, multiply, parse_word, power,
    product, root,
)

ONE = ("one",)


def _sgn(x):
    return (x > 0) - (x < 0)


def sign_text(s: int) -> str:
    return "+" if s > 0 else "-"


def parse_sign(t) -> int:
    if t in ("+", 1, "+1", "pos"):
        return 1
    if t in ("-", -1, "-1", "neg"):
        return -1
    raise ValueError(f"bad sign {t!r}")


# --- nodes ------------------------------------------------------------------

class Universe:
    """Registry of nodes for one presentation and macro set."""

    def __init__(self, p: Presentation, macros: dict):
        self.p = p
        self.macros = dict(macros)
        self.periph = {}         # key -> (boundary, u, v)
        self.literal = {}        # key -> literal Word in canonical orientation
        self.by_word = {}        # literal Word -> (key, parity)
        self.order = []          # keys in registration order
        self._bnd = {b.name: b for b in p.boundaries}

    def _canon_periph(self, T, u, v):
        par = 1 if (u > 0 or (u == 0 and v > 0)) else -1
        return ("p", T, par * u, par * v), par

    def _register(self, key, word):
        if key not in self.literal:
            self.literal[key] = word
            self.order.append(key)
            self.by_word.setdefault(word, (key, 1))
            self.by_word.setdefault(invert(word), (key, -1))
            if key[0] == "w":
                r, k = root(word)
                if k > 1:
                    self.ref_of_word(r)

    def periph_ref(self, T, u, v):
        if (u, v) == (0, 0):
            return None
        key, par = self._canon_periph(T, u, v)
        if key not in self.periph:
            b = self._bnd[T]
            self.periph[key] = (T, key[2], key[3])
            self._register(key, multiply(power(b.meridian, key[2]), power(b.longitude, key[3])))
        return key, par

    def ref_of_word(self, w: Word):
        """Node for a literal word (peripheral powers are recognised)."""
        if not w:
            return None
        hit = self.by_word.get(w)
        if hit is not None:
            return hit
        r, k = root(w)
        for b in self.p.boundaries:
            for which, base in (("m", b.meridian), ("l", b.longitude)):
                for s in (1, -1):
                    if r == (base if s == 1 else invert(base)):
                        e = s * k
                        return self.periph_ref(b.name, e, 0) if which == "m" else self.periph_ref(b.name, 0, e)
        inv = invert(w)
        canon, par = (w, 1) if w.sort_key() <= inv.sort_key() else (inv, -1)
        key = ("w", canon.letters)
        self._register(key, canon)
        return key, par

    def ref(self, text: str):
        segs = expression_segments(text, self.p, self.macros)
        if len(segs) == 1 and isinstance(segs[0], Periph):
            s = segs[0]
            return self.periph_ref(s.boundary, s.u, s.v)
        return self.ref_of_word(literal_expansion(text, self.p, self.macros))

    def show(self, key) -> str:
        if key == ONE:
            return "1"
        if key[0] == "p":
            return f"{key[1]}({key[2]},{key[3]})"
        return format_word(self.literal[key])

    def parse_display(self, text: str):
        import re
        mo = re.fullmatch(r"([A-Za-z]\w*)\((-?\d+),(-?\d+)\)", text)
        if mo:
            return self.periph_ref(mo.group(1), int(mo.group(2)), int(mo.group(3)))
        if text == "1":
            return None
        return self.ref_of_word(parse_word(text, self.p.gens))


# --- identity table -----------------------------------------------------------

@dataclass
class Factorization:
    name: str
    lhs: tuple | None          # (key, parity) or None for the identity element
    factors: tuple             # ((key, parity), ...)
    tier: str
    lw: Word
    rw: Word
    certificate: DerivationCertificate | None = None
    text: str = ""


@dataclass
class IdentityTable:
    universe: Universe
    entries: list = field(default_factory=list)
    failed: list = field(default_factory=list)   # (name, note)

    def by_name(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(f"unknown identity {name!r}")


_VERIFY_CACHE: dict = {}


def _verify(p, lhs, rhs, macros, max_steps):
    key = (p.gens, p.relators, tuple((b.name, b.meridian, b.longitude) for b in p.boundaries),
           lhs, rhs, tuple(sorted(macros.items())), max_steps)
    if key not in _VERIFY_CACHE:
        _VERIFY_CACHE[key] = prove_equal(p, lhs, rhs, macros, max_steps=max_steps)
    return _VERIFY_CACHE[key]


def build_identity_table(universe: Universe, entries: Sequence[dict], max_steps: int = 8) -> IdentityTable:
    """Verify each ``{"name", "lhs", "factors"}`` entry and register its nodes.

    Entries that do not verify are kept out of the table and listed in
    ``failed``; the engine never uses an unverified identity.
    """
    tab = IdentityTable(universe)
    for e in entries:
        factors = [f for f in e["factors"]]
        rhs = " ".join(f"({f})" for f in factors) if factors else "1"
        res = _verify(universe.p, e["lhs"], rhs, universe.macros, max_steps)
        if not res.ok:
            tab.failed.append((e["name"], res.note))
            continue
        lhs = None if e["lhs"].strip() == "1" else universe.ref(e["lhs"])
        frefs = tuple(r for r in (universe.ref(f) for f in factors) if r is not None)
        tab.entries.append(Factorization(e["name"], lhs, frefs, res.tier, res.lhs, res.rhs,
                                         res.certificate, f"{e['lhs']} = {rhs}"))
    return tab


# --- state ------------------------------------------------------------------

@dataclass(frozen=True)
class SignConstraint:
    word: str
    sign: int
    cofinal: bool = False


class Contradiction(Exception):
    def __init__(self, record):
        self.record = record


@dataclass
class ConeState:
    universe: Universe
    sign: dict = field(default_factory=dict)       # key -> +1/-1 (canonical orientation)
    cofinal: set = field(default_factory=set)
    log: list = field(default_factory=list)        # derivation records
    side: dict = field(default_factory=dict)       # boundary -> (eps, key)
    line: dict = field(default_factory=dict)       # boundary -> (lam, key)
    max_set: int = 20000

    def copy(self):
        return ConeState(self.universe, dict(self.sign), set(self.cofinal), list(self.log),
                         dict(self.side), dict(self.line), self.max_set)

    def get(self, ref):
        if ref is None:
            return 0
        key, par = ref
        s = self.sign.get(key)
        return par * s if s else 0

    def positives(self):
        return [k for k, s in self.sign.items() if s > 0]

    def negatives(self):
        return [k for k, s in self.sign.items() if s < 0]


def _record(st, rule, ref, s, premises):
    """Record concluding sign ``s`` for ``ref``, written in canonical orientation."""
    U = st.universe
    key, par = ref
    return {"rule": rule, "node": U.show(key), "sign": sign_text(s * par),
            "premises": [[U.show(k), sign_text(v)] for k, v in premises]}


class Engine:
    """Propagation over one identity table, with optional sample slopes."""

    def __init__(self, table: IdentityTable, slopes: dict | None = None,
                 conjugators: Sequence[Word] | None = None, pair_products: bool = True,
                 max_word_len: int = 64):
        self.table = table
        self.U = table.universe
        self.slopes = {T: (s if isinstance(s, SlopeQ) else SlopeQ.parse(str(s))) for T, s in (slopes or {}).items()}
        self.pair_products = pair_products
        self.max_word_len = max_word_len
        self.conjugators = list(conjugators) if conjugators is not None else default_conjugators(self.U.p)
        self._index()

    def _index(self):
        self.uses = {}
        for i, f in enumerate(self.table.entries):
            keys = {r[0] for r in f.factors}
            if f.lhs is not None:
                keys.add(f.lhs[0])
            for k in keys:
                self.uses.setdefault(k, []).append(i)
        self.roots = {}
        for key in list(self.U.order):
            if key in self.U.literal:
                r, k = root(self.U.literal[key])
                if k > 1:
                    rref = self.U.ref_of_word(r)
                    self.roots.setdefault(key, []).append(rref)
                    self.roots.setdefault(rref[0], []).append((key, rref[1]))
        self.by_boundary = {}
        for key, (T, u, v) in self.U.periph.items():
            self.by_boundary.setdefault(T, []).append(key)

    # -- assignment --------------------------------------------------------
    def assign(self, st: ConeState, ref, s: int, rec: dict, queue: list, cofinal=False):
        key, par = ref
        cs = s * par
        old = st.sign.get(key)
        if old is not None:
            if old != cs:
                raise Contradiction({"rule": "conflict", "node": self.U.show(key),
                                     "premises": [[self.U.show(key), sign_text(old)],
                                                  [self.U.show(key), sign_text(cs)]],
                                     "via": rec})
            if cofinal and key not in st.cofinal:
                st.cofinal.add(key)
                rec["cofinal"] = True
                st.log.append(rec)
                queue.append(key)
            return
        if len(st.sign) >= st.max_set:
            return
        st.sign[key] = cs
        if cofinal:
            st.cofinal.add(key)
            rec["cofinal"] = True
        st.log.append(rec)
        queue.append(key)

    def load(self, st: ConeState, constraints: Iterable[SignConstraint]):
        queue = []
        for c in constraints:
            ref = self.U.ref(c.word)
            if ref is None:
                raise Contradiction({"rule": "input", "node": "1", "premises": []})
            rec = _record(st, "assume", ref, c.sign, [])
            rec["input"] = c.word
            self.assign(st, ref, c.sign, rec, queue, cofinal=c.cofinal)
        return queue

    # -- closure -----------------------------------------------------------
    def propagate(self, st: ConeState, queue: list):
        """Run rules to a fixed point; raises :class:`Contradiction`."""
        if not queue:
            queue = list(st.sign)
        seen_pairs = set()
        while queue:
            key = queue.pop(0)
            self._slope(st, key, queue)
            for rref in self.roots.get(key, []):
                s = st.sign[key]
                self.assign(st, rref, s, {"rule": "root", "node": self.U.show(rref[0]),
                                          "sign": sign_text(s * rref[1]),
                                          "premises": [[self.U.show(key), sign_text(st.sign[key])]]}, queue)
            for i in self.uses.get(key, []):
                self._factorization(st, self.table.entries[i], queue)
            if key in st.cofinal:
                self._conj(st, key, queue)
            if self.pair_products:
                self._pairs(st, key, queue, seen_pairs)

    def _factorization(self, st, f: Factorization, queue):
        fs = [st.get(r) for r in f.factors]
        lhs_s = st.get(f.lhs) if f.lhs is not None else None
        if fs and all(x != 0 for x in fs) and len(set(fs)) == 1:
            s = fs[0]
            prem = [[self.U.show(r[0]), sign_text(st.sign[r[0]])] for r in f.factors]
            if f.lhs is None:
                raise Contradiction({"rule": "unit-product", "identity": f.name, "node": "1",
                                     "sign": sign_text(s), "premises": _dedup(prem)})
            cof = all(r[0] in st.cofinal for r in f.factors)
            rec = {"rule": "product", "identity": f.name, "node": self.U.show(f.lhs[0]),
                   "sign": sign_text(s * f.lhs[1]), "premises": _dedup(prem)}
            self.assign(st, f.lhs, s, rec, queue, cofinal=cof)
            lhs_s = st.get(f.lhs)
        # force / unit
        unknown = [r for r, x in zip(f.factors, fs) if x == 0]
        if not unknown or len(set(unknown)) != 1:
            return
        known = [x for x in fs if x != 0]
        if f.lhs is None:
            if known and len(set(known)) == 1:
                target = -known[0]
                rule = "unit-force"
            else:
                return
        else:
            if not lhs_s:
                return
            if known and any(x != -lhs_s for x in known):
                return
            target = lhs_s
            rule = "force"
        r = unknown[0]
        prem = [[self.U.show(q[0]), sign_text(st.sign[q[0]])] for q in f.factors if q[0] in st.sign]
        if f.lhs is not None:
            prem.append([self.U.show(f.lhs[0]), sign_text(st.sign[f.lhs[0]])])
        rec = {"rule": rule, "identity": f.name, "node": self.U.show(r[0]),
               "sign": sign_text(target * r[1]), "premises": _dedup(prem)}
        self.assign(st, r, target, rec, queue)

    def _slope(self, st, key, queue):
        if key not in self.U.periph:
            return
        T, u, v = self.U.periph[key]
        s = self.slopes.get(T)
        if s is None:
            return
        d = (s.p, s.q)
        x = det(d, (u, v))
        sgn = st.sign[key]
        if x:
            eps = sgn * _sgn(x)
            if T in st.side:
                if st.side[T][0] != eps:  # pragma: no cover - conflicts surface in assign
                    pass
            else:
                st.side[T] = (eps, key)
            for other in self.by_boundary.get(T, []):
                _, u2, v2 = self.U.periph[other]
                x2 = det(d, (u2, v2))
                if x2:
                    rec = {"rule": "slope-side", "boundary": T, "slope": str(s), "node": self.U.show(other),
                           "sign": sign_text(eps * _sgn(x2)), "premises": [[self.U.show(key), sign_text(sgn)]]}
                    self.assign(st, (other, 1), eps * _sgn(x2), rec, queue)
        else:
            t = u // d[0] if d[0] else v // d[1]
            lam = sgn * _sgn(t)
            st.line.setdefault(T, (lam, key))
            for other in self.by_boundary.get(T, []):
                _, u2, v2 = self.U.periph[other]
                if det(d, (u2, v2)) == 0:
                    t2 = u2 // d[0] if d[0] else v2 // d[1]
                    rec = {"rule": "slope-line", "boundary": T, "slope": str(s), "node": self.U.show(other),
                           "sign": sign_text(lam * _sgn(t2)), "premises": [[self.U.show(key), sign_text(sgn)]]}
                    self.assign(st, (other, 1), lam * _sgn(t2), rec, queue)

    def _conj(self, st, key, queue):
        w = self.U.literal[key]
        s = st.sign[key]
        for g in self.conjugators:
            c = conjugate(w, g)
            hit = self.U.by_word.get(c)
            if hit is None:
                continue
            rec = {"rule": "cofinal-conjugate", "conjugator": format_word(g), "node": self.U.show(hit[0]),
                   "sign": sign_text(s * hit[1]), "premises": [[self.U.show(key), sign_text(s)]]}
            self.assign(st, hit, s, rec, queue, cofinal=True)

    def _pairs(self, st, key, queue, seen):
        def pos(k):
            w = self.U.literal[k]
            return w if st.sign[k] > 0 else invert(w)

        for other in list(st.sign):
            for x, y in ((key, other), (other, key)):
                if (x, y) in seen:
                    continue
                seen.add((x, y))
                pw = multiply(pos(x), pos(y))
                if not pw or len(pw) > self.max_word_len:
                    continue
                hit = self.U.by_word.get(pw)
                if hit is None:
                    continue
                cof = x in st.cofinal and y in st.cofinal
                rec = {"rule": "pair-product", "node": self.U.show(hit[0]), "sign": sign_text(hit[1]),
                       "premises": [[self.U.show(x), sign_text(st.sign[x])], [self.U.show(y), sign_text(st.sign[y])]]}
                self.assign(st, hit, 1, rec, queue, cofinal=cof)


def _dedup(prem):
    out = []
    for p in prem:
        if p not in out:
            out.append(p)
    return out


def default_conjugators(p: Presentation, max_len: int = 3, meridian_powers: int = 8) -> list:
    """Words of length <= max_len plus m^k (|k| <= meridian_powers) for each boundary."""
    letters = [(g, s) for g in p.gens for s in (1, -1)]
    out = {IDENTITY}
    frontier = [IDENTITY]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for x in letters:
                v = multiply(w, Word._raw((x,)))
                if len(v) == len(w) + 1 and v not in out:
                    out.add(v)
                    nxt.append(v)
        frontier = nxt
    for b in p.boundaries:
        for k in range(-meridian_powers, meridian_powers + 1):
            out.add(power(b.meridian, k))
    out.discard(IDENTITY)
    return sorted(out, key=Word.sort_key)


def init_state(engine: Engine, constraints: Sequence[SignConstraint], max_set: int = 20000) -> ConeState:
    """Load constraints; raises :class:`Contradiction` on a direct clash."""
    engine._index()
    st = ConeState(engine.U, max_set=max_set)
    engine.load(st, constraints)
    return st


@dataclass
class PropagationResult:
    status: str            # "fixedpoint" | "contradiction"
    state: ConeState
    witness: dict | None = None


def propagate(engine: Engine, st: ConeState) -> PropagationResult:
    st = st.copy()
    engine._index()
    try:
        engine.propagate(st, list(st.sign))
    except Contradiction as c:
        return PropagationResult("contradiction", st, c.record)
    return PropagationResult("fixedpoint", st)


# --- search -----------------------------------------------------------------

@dataclass
class SearchResult:
    verdict: str           # "UNSAT" | "UNKNOWN"
    tree: dict

    def to_json(self) -> str:
        return json.dumps({"verdict": self.verdict, "tree": self.tree}, indent=1, sort_keys=True)


def search(engine: Engine, constraints: Sequence[SignConstraint], atoms: Sequence[str],
           max_depth: int = 8) -> SearchResult:
    """Depth-first case split, positive branch first, first undetermined atom.

    The tree is ``{"log": [...], "result": node}`` where a node is
    ``{"kind": "open"}``, ``{"kind": "contradiction", "witness": rec}`` or
    ``{"kind": "split", "atom": text, "children": [child, child]}`` and a
    child is ``{"assume": rec, "log": [...], "result": node}``.
    """
    U = engine.U
    for c in constraints:
        U.ref(c.word)
    atom_refs = []
    for a in atoms:
        r = U.ref(a)
        if r is not None and r[0] not in [x[0] for x in atom_refs]:
            atom_refs.append(r)
    engine._index()
    st = ConeState(U)
    try:
        queue = engine.load(st, constraints)
        engine.propagate(st, queue)
    except Contradiction as c:
        return SearchResult("UNSAT", {"log": st.log, "result": {"kind": "contradiction", "witness": c.record}})

    def go(st, depth):
        pick = next((r for r in atom_refs if r[0] not in st.sign), None)
        if pick is None or depth >= max_depth:
            return {"kind": "open"}, False
        children, closed = [], True
        for s in (1, -1):
            child = st.copy()
            child.log = []
            rec = _record(child, "assume", pick, s, [])
            try:
                q = []
                engine.assign(child, pick, s, rec, q)
                child.log = []
                engine.propagate(child, q)
            except Contradiction as c:
                children.append({"assume": rec, "log": child.log,
                                 "result": {"kind": "contradiction", "witness": c.record}})
                continue
            sub, ok = go(child, depth + 1)
            children.append({"assume": rec, "log": child.log, "result": sub})
            closed = closed and ok
        return {"kind": "split", "atom": U.show(pick[0]), "children": children}, closed

    root_log = st.log
    st.log = []
    tree, closed = go(st, 0)
    return SearchResult("UNSAT" if closed else "UNKNOWN", {"log": root_log, "result": tree})


def leaves(tree: dict) -> list:
    node = tree.get("result", tree)
    if node["kind"] == "split":
        out = []
        for c in node["children"]:
            out += leaves(c)
        return out
    return [node]


def mirror_constraints(cs: Sequence[SignConstraint]) -> list:
    return [SignConstraint(c.word, -c.sign, c.cofinal) for c in cs]


# --- independent replay of case trees -----------------------------------------

class ReplayError(Exception):
    pass


class Checker:
    """Re-validates derivation records against the identity table.

    Written without the engine's worklist: every record is checked from its
    stated premises, which must already hold on the current path.
    """

    def __init__(self, table: IdentityTable, slopes: dict | None = None,
                 conjugators: Sequence[Word] | None = None, recheck_identities: bool = True):
        self.table = table
        self.U = table.universe
        self.slopes = {T: (s if isinstance(s, SlopeQ) else SlopeQ.parse(str(s))) for T, s in (slopes or {}).items()}
        self.conj_ok = set(conjugators if conjugators is not None else default_conjugators(self.U.p))
        self.verified = {}
        if recheck_identities:
            for f in table.entries:
                ok = (f.lw == f.rw) if f.certificate is None else check_certificate(self.U.p, f.lw, f.rw, f.certificate)
                self.verified[f.name] = ok

    def node(self, text):
        r = self.U.parse_display(text)
        return r

    def check_path(self, records: Sequence[dict], known: dict, cof: set) -> None:
        for rec in records:
            self.check(rec, known, cof)

    def _sign_of(self, known, ref):
        if ref is None:
            return 0
        s = known.get(ref[0])
        return s * ref[1] if s else 0

    def _premises(self, rec, known, cof):
        for text, s in rec.get("premises", []):
            ref = self.node(text)
            if self._sign_of(known, (ref[0], 1)) != parse_sign(s):
                raise ReplayError(f"premise {text}:{s} not established for {rec['rule']}")

    def check(self, rec: dict, known: dict, cof: set):
        try:
            return self._check(rec, known, cof)
        except ReplayError:
            raise
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise ReplayError(f"malformed record: {e!r}") from None

    def _check(self, rec: dict, known: dict, cof: set):
        rule = rec["rule"]
        self._premises(rec, known, cof)
        if rule == "conflict":
            return "closed"
        target = None if rec.get("node") in (None, "1") else self.node(rec["node"])
        s = parse_sign(rec["sign"]) if "sign" in rec else 0
        if rule == "assume":
            pass
        elif rule in ("product", "force", "unit-force", "unit-product"):
            f = self.table.by_name(rec["identity"])
            if not self.verified.get(f.name, True):
                raise ReplayError(f"identity {f.name} does not verify")
            fs = [self._sign_of(known, r) for r in f.factors]
            if rule in ("product", "unit-product"):
                if not fs or 0 in fs or len(set(fs)) != 1:
                    raise ReplayError(f"{f.name}: factors not all of one sign")
                if rule == "unit-product":
                    if f.lhs is not None:
                        raise ReplayError("unit-product on a non-unit identity")
                    return "closed"
                if (f.lhs[0], f.lhs[1]) != target and (f.lhs[0], -f.lhs[1]) != target:
                    raise ReplayError("product conclusion is not the identity's left side")
                want = fs[0] * f.lhs[1]
                if s != want:
                    raise ReplayError("product sign mismatch")
                if rec.get("cofinal") and not all(r[0] in cof for r in f.factors):
                    raise ReplayError("cofinal product with a non-cofinal factor")
            else:
                unknown = {r for r, x in zip(f.factors, fs) if x == 0}
                tgt = next((r for r in f.factors if r[0] == target[0]), None)
                if tgt is None:
                    raise ReplayError("forced node is not a factor")
                others = [x for r, x in zip(f.factors, fs) if r[0] != target[0]]
                if 0 in others or (unknown and unknown != {tgt}):
                    raise ReplayError("force needs every other factor signed")
                if rule == "force":
                    ls = self._sign_of(known, f.lhs)
                    if not ls or any(x != -ls for x in others):
                        raise ReplayError("force premises inconsistent")
                    want = ls
                else:
                    if f.lhs is not None or not others or len(set(others)) != 1:
                        raise ReplayError("unit-force premises inconsistent")
                    want = -others[0]
                if any(r[0] == target[0] and r[1] != tgt[1] for r in f.factors):
                    raise ReplayError("forced node occurs with both orientations")
                if s != want * tgt[1]:
                    raise ReplayError("force sign mismatch")
        elif rule == "root":
            prem = self.node(rec["premises"][0][0])
            a, b = self.U.literal[prem[0]], self.U.literal[target[0]]
            ok = any(power(b, k) in (a, invert(a)) or power(a, k) in (b, invert(b)) for k in range(2, 80))
            if not ok:
                raise ReplayError("root rule on words that are not powers of each other")
            ps = parse_sign(rec["premises"][0][1])
            same = any(power(b, k) == a or power(a, k) == b for k in range(2, 80))
            if s != (ps if same else -ps):
                raise ReplayError("root sign mismatch")
        elif rule in ("slope-side", "slope-line"):
            T = rec["boundary"]
            sl = self.slopes.get(T)
            if sl is None or str(sl) != rec["slope"]:
                raise ReplayError("slope not declared for this run")
            prem = self.node(rec["premises"][0][0])
            ps = parse_sign(rec["premises"][0][1])
            _, u1, v1 = self.U.periph[prem[0]]
            _, u2, v2 = self.U.periph[target[0]]
            d = (sl.p, sl.q)
            x1, x2 = det(d, (u1, v1)), det(d, (u2, v2))
            if rule == "slope-side":
                if x1 == 0 or x2 == 0:
                    raise ReplayError("slope-side on an on-line element")
                want = ps * _sgn(x1) * _sgn(x2)
            else:
                if x1 or x2:
                    raise ReplayError("slope-line on an off-line element")
                t1 = u1 // d[0] if d[0] else v1 // d[1]
                t2 = u2 // d[0] if d[0] else v2 // d[1]
                want = ps * _sgn(t1) * _sgn(t2)
            if s != want:
                raise ReplayError("slope sign mismatch")
        elif rule == "cofinal-conjugate":
            prem = self.node(rec["premises"][0][0])
            if prem[0] not in cof:
                raise ReplayError("conjugated element is not cofinal")
            g = parse_word(rec["conjugator"], self.U.p.gens)
            if g not in self.conj_ok:
                raise ReplayError("conjugator outside the declared set")
            c = conjugate(self.U.literal[prem[0]], g)
            if c == self.U.literal[target[0]]:
                want = parse_sign(rec["premises"][0][1])
            elif invert(c) == self.U.literal[target[0]]:
                want = -parse_sign(rec["premises"][0][1])
            else:
                raise ReplayError("conjugate does not match")
            if s != want:
                raise ReplayError("conjugate sign mismatch")
        elif rule in ("pair-product", "pair-unit"):
            (ta, sa), (tb, sb) = rec["premises"]
            if sa != sb:
                pass
            ra, rb = self.node(ta), self.node(tb)
            wa = self.U.literal[ra[0]] if sa == "+" else invert(self.U.literal[ra[0]])
            wb = self.U.literal[rb[0]] if sb == "+" else invert(self.U.literal[rb[0]])
            pw = multiply(wa, wb)
            if rule == "pair-unit":
                if pw:
                    raise ReplayError("pair-unit product is not 1")
                return "closed"
            if pw == self.U.literal[target[0]]:
                want = 1
            elif invert(pw) == self.U.literal[target[0]]:
                want = -1
            else:
                raise ReplayError("pair product does not match")
            if s != want:
                raise ReplayError("pair sign mismatch")
            if rec.get("cofinal") and not (ra[0] in cof and rb[0] in cof):
                raise ReplayError("cofinal pair with a non-cofinal factor")
        else:
            raise ReplayError(f"unknown rule {rule!r}")
        if target is None:
            raise ReplayError("conclusion 1 outside a contradiction rule")
        k = target[0]
        if k in known and known[k] != s:
            return "closed"
        known[k] = s
        if rec.get("cofinal"):
            if rule == "assume" and not rec.get("input"):
                raise ReplayError("branch assumptions cannot be cofinal")
            cof.add(k)
        return None


def replay_tree(checker: Checker, result: SearchResult | dict) -> dict:
    """Replay every derivation on every path; returns counts and the first failure."""
    tree = result.tree if isinstance(result, SearchResult) else result
    stats = {"records": 0, "leaves": 0, "closed_leaves": 0, "ok": True, "error": None}

    def walk(part, known, cof):
        for rec in part.get("log", []):
            stats["records"] += 1
            checker.check(rec, known, cof)
        node = part["result"]
        if node["kind"] == "split":
            for ch in node["children"]:
                k2, c2 = dict(known), set(cof)
                stats["records"] += 1
                checker.check(ch["assume"], k2, c2)
                walk(ch, k2, c2)
            return
        stats["leaves"] += 1
        if node["kind"] == "contradiction":
            w = node["witness"]
            stats["records"] += 1
            res = checker.check(w["via"] if w["rule"] == "conflict" else w, dict(known), set(cof))
            if res != "closed":
                raise ReplayError("contradiction witness does not close the branch")
            stats["closed_leaves"] += 1

    try:
        walk(tree, {}, set())
    except ReplayError as e:
        stats["ok"] = False
        stats["error"] = str(e)
    return stats


# --- scripted replays ------------------------------------------------------------

@dataclass
class ReplayReport:
    steps: list            # (index, description, ok, message)

    @property
    def ok(self):
        return all(s[2] for s in self.steps)


def replay_script(checker: Checker, script: Sequence[dict]) -> ReplayReport:
    """Check a hand-written proof: assume / derive / contradiction steps.

    A derive step names a node, a sign, a rule and (where needed) an
    identity; its premises are all currently known signs, so the step
    passes exactly when the rule fires from what has been established.
    """
    U = checker.U
    known, cof = {}, set()
    out = []
    for i, step in enumerate(script):
        kind = step.get("step")
        try:
            if kind == "assume":
                ref = U.ref(step["word"])
                s = parse_sign(step["sign"]) * ref[1]
                if ref[0] in known and known[ref[0]] != s:
                    raise ReplayError("assumption clashes with an earlier sign")
                known[ref[0]] = s
                if step.get("cofinal"):
                    cof.add(ref[0])
                out.append((i, f"assume {step['word']} {step['sign']}", True, ""))
            elif kind in ("derive", "contradiction"):
                rule = step["rule"]
                rec = {"rule": rule}
                if "identity" in step:
                    if step["identity"] not in {e.name for e in checker.table.entries}:
                        raise KeyError(f"unknown identity {step['identity']!r}")
                    rec["identity"] = step["identity"]
                if kind == "derive":
                    ref = U.ref(step["word"])
                    rec["node"] = U.show(ref[0])
                    rec["sign"] = sign_text(parse_sign(step["sign"]) * ref[1])
                else:
                    rec["node"] = "1"
                    if "word" in step:
                        ref = U.ref(step["word"])
                        rec["node"] = U.show(ref[0])
                        rec["sign"] = sign_text(parse_sign(step["sign"]) * ref[1])
                for extra in ("boundary", "slope", "conjugator", "cofinal"):
                    if extra in step:
                        rec[extra] = step[extra]
                if "premises" in step:
                    rec["premises"] = []
                    for w, sg in step["premises"]:
                        r = U.ref(w)
                        rec["premises"].append([U.show(r[0]), sign_text(parse_sign(sg) * r[1])])
                res = checker.check(rec, known, cof)
                if kind == "contradiction" and res != "closed":
                    raise ReplayError("step does not close the case")
                out.append((i, f"{kind} {step.get('word', '1')} via {rule}", True, ""))
            else:
                raise ReplayError(f"unknown step kind {kind!r}")
        except KeyError:
            raise
        except ReplayError as e:
            out.append((i, f"{kind} {step.get('word', '')}", False, str(e)))
    return ReplayReport(out)


# --- semigroup certificates ---------------------------------------------------

class MalformedCertificate(ValueError):
    pass


class _StepFailed(Exception):
    pass


def evaluate_semigroup(p: Presentation, base: Word, node: dict) -> Word:
    """Value of a semigroup expression; every equality step is re-verified."""
    op = node.get("op")
    if op == "base":
        return base
    if op == "product":
        args = node.get("args")
        if not args:
            raise MalformedCertificate("empty product")
        return product(evaluate_semigroup(p, base, a) for a in args)
    if op == "conj":
        g = parse_word(node["by"], p.gens)
        return conjugate(evaluate_semigroup(p, base, node["arg"]), g)
    if op == "root":
        k = int(node["k"])
        if k < 1:
            raise MalformedCertificate("root index must be >= 1")
        inner = evaluate_semigroup(p, base, node["arg"])
        u = parse_word(node["value"], p.gens)
        if power(u, k) != inner:
            cert = DerivationCertificate.from_json(node["certificate"], p.gens) if "certificate" in node else None
            if cert is None or not check_certificate(p, power(u, k), inner, cert):
                raise _StepFailed("root value does not verify")
        return u
    if op == "eq":
        inner = evaluate_semigroup(p, base, node["arg"])
        v = parse_word(node["value"], p.gens)
        cert = DerivationCertificate.from_json(node.get("certificate", {"steps": []}), p.gens)
        if not check_certificate(p, inner, v, cert):
            raise _StepFailed("equality step does not verify")
        return v
    raise MalformedCertificate(f"unknown op {op!r}")


def check_semigroup_certificate(p: Presentation, target: Word, base: Word, cert: dict) -> bool:
    """True iff the tree (no inverses available) evaluates to ``target``."""
    try:
        return evaluate_semigroup(p, base, cert) == target
    except _StepFailed:
        return False
    except (KeyError, TypeError, AttributeError, ValueError) as e:
        if isinstance(e, MalformedCertificate):
            raise
        raise MalformedCertificate(f"malformed certificate: {e}") from None
