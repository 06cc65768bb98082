"""The L_n link family, the Whitehead specials, and the identity corpus.

``build_ln`` transcribes the closed formulas for pi_1(M_n) and its two
peripheral systems.  ``derive_ln_from_gamma`` rebuilds the same data from
the three-component link group by twisting, eliminating ``y``, changing
generators and correcting the framing, checking every step.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

from .groups import (
    DerivationCertificate, GroupHomomorphism, PeripheralSystem, Presentation,
    change_generators, eliminate_generator, fill, prove_equal,
    search_normal_closure_membership, verify_homomorphism,
)
from .slopes import SlopeQ
from .words import Word, format_word, invert, is_cyclic_conjugate, multiply, parse_word, power, relator_normal_form

# peripheral shorthands usable inside corpus formulas
LN_MACROS = {"m": ("T1", "m"), "l": ("T1", "l"), "mu": ("T2", "m"), "lam": ("T2", "l")}


@dataclass
class LinkFamilyInstance:
    n: int
    presentation: Presentation
    provenance: str = "hardcoded"
    steps: list = field(default_factory=list)   # (label, ok) for derived instances

    @property
    def m(self):
        return self.presentation.boundary("T1").meridian

    @property
    def l(self):
        return self.presentation.boundary("T1").longitude

    @property
    def mu(self):
        return self.presentation.boundary("T2").meridian

    @property
    def lam(self):
        return self.presentation.boundary("T2").longitude

    def words(self) -> dict:
        return {"relator": self.presentation.relators[0], "m": self.m, "l": self.l,
                "mu": self.mu, "lam": self.lam}


def _w(text: str, n: int, gens=("a", "b")) -> Word:
    return parse_word(text.replace("{n}", str(n)).replace("{4n+3}", str(4 * n + 3)), gens)


def build_ln(n: int) -> LinkFamilyInstance:
    if n < 0:
        raise ValueError("n must be >= 0")
    lhs = _w("(a^2 b^-2)^{n} a^2 b^-1 a^-1 (b^2 a^-2)^{n} b^3", n)
    rhs = _w("b^3 (a^-2 b^2)^{n} a^-1 b^-1 a^2 (b^-2 a^2)^{n}", n)
    t1 = PeripheralSystem("T1", _w("b^-1 a", n),
                          _w("a (b^-2 a^2)^{n} b^-3 (a^2 b^-2)^{n} a^2 (a^-1 b)^{4n+3}", n))
    t2 = PeripheralSystem("T2", _w("a^-1 b^2 (a^-2 b^2)^{n}", n),
                          _w("b (a^-2 b^2)^{n} a^-2 b a (b^-2 a^2)^{n} b^-2 a", n))
    name = "Wh" if n == 0 else f"L{n}"
    return LinkFamilyInstance(n, Presentation(("a", "b"), (multiply(lhs, invert(rhs)),), (t1, t2), name))


def gamma() -> Presentation:
    """Group of the three-component link with peripheral systems L0, L1, L2."""
    g = ("x", "y", "z")

    def w(t):
        return parse_word(t, g)

    return Presentation(g, (w("x z^2 y^2 x^-1 z^-1 y^-2 z^-1"), w("x^2 z y^-1 z^-2 x^-2 y z")), (
        PeripheralSystem("L0", w("z^-1 x^-2 y"), w("z x^2 z")),
        PeripheralSystem("L1", w("z^-1 x^-1"), w("x y^-2 z^-1 (x z)^3")),
        PeripheralSystem("L2", w("x z y"), w("y z x y^-1 z^-1 x^-1")),
    ), "Gamma")


def derive_ln_from_gamma(n: int) -> LinkFamilyInstance:
    """Rebuild pi_1(M_n) from ``gamma()``; raises if a chain step fails."""
    if n < 0:
        raise ValueError("n must be >= 0")
    G = gamma()
    steps = []
    b0 = G.boundary("L0")
    twist = multiply(invert(b0.meridian), power(b0.longitude, n))
    P = Presentation(G.gens, G.relators + (twist,), tuple(b for b in G.boundaries if b.name != "L0"), "Gamma_twisted")
    y_img = parse_word(f"(x^2 z^2)^{n} x^2 z", G.gens)
    elim = eliminate_generator(P, "y", y_img)
    killed = 1 in elim.dropped
    steps.append(("r2 killed by y substitution", killed))
    if not killed:
        raise ValueError("r2 did not reduce to 1 after eliminating y")
    xz = elim.presentation
    expected = parse_word(
        f"x (z^2 x^2)^{n + 1} z (x^2 z^2)^{n + 1} z^-1 x^-1 (z^-2 x^-2)^{n + 1} z^-1 (x^-2 z^-2)^{n + 1} z",
        ("x", "z"))
    ok = len(xz.relators) == 1 and (is_cyclic_conjugate(xz.relators[0], expected)
                                    or is_cyclic_conjugate(xz.relators[0], invert(expected)))
    steps.append(("two-generator relator matches closed form", ok))
    if not ok:
        raise ValueError("two-generator relator does not match the closed form")
    ab = change_generators(xz, {"x": Word.gen("a"), "z": parse_word("a^-2 b")}, ("a", "b"), "derived")
    b1, b2 = ab.boundary("L1"), ab.boundary("L2")
    # framing correction for the twist along L0: longitude of L1 times m^-4n
    l_fixed = multiply(b1.longitude, power(b1.meridian, -4 * n))
    steps.append(("framing factor is m^-4n", multiply(invert(b1.longitude), l_fixed) == power(b1.meridian, -4 * n)))
    pres = Presentation(("a", "b"), ab.relators,
                        (PeripheralSystem("T1", b1.meridian, l_fixed),
                         PeripheralSystem("T2", b2.meridian, b2.longitude)),
                        "Wh" if n == 0 else f"L{n}")
    return LinkFamilyInstance(n, pres, "derived", steps)


def same_relator(r1: Word, r2: Word) -> str | None:
    """How two relators agree: 'free' (as words), 'cyclic' (equal normal forms), or None."""
    if r1 == r2:
        return "free"
    if relator_normal_form(r1) == relator_normal_form(r2):
        return "cyclic"
    return None


def compare_instances(a: LinkFamilyInstance, b: LinkFamilyInstance) -> dict:
    out = {"relator": same_relator(a.presentation.relators[0], b.presentation.relators[0])}
    for k in ("m", "l", "mu", "lam"):
        out[k] = "free" if a.words()[k] == b.words()[k] else None
    return out


# --- figure-eight and the Whitehead maps ----------------------------------

def figure_eight() -> Presentation:
    g = ("x", "y")
    rel = multiply(parse_word("x y^-1 x^-1 y x", g), invert(parse_word("y x y^-1 x^-1 y", g)))
    return Presentation(g, (rel,), (PeripheralSystem("K", parse_word("x", g),
                                                     parse_word("y x^-1 y^-1 x^2 y^-1 x^-1 y", g)),), "Fig8")


@dataclass
class WhiteheadSpecials:
    whitehead: Presentation
    fig8: Presentation
    psi: GroupHomomorphism
    phi: GroupHomomorphism
    f: GroupHomomorphism
    claims: dict     # map name -> list of (label, source word, claimed image, certificate)


def _load_json(name: str):
    return json.loads(resources.files("ordable").joinpath("data", name).read_text())


def build_whitehead_specials(search_if_missing: bool = False) -> WhiteheadSpecials:
    """psi, phi, f with relator and peripheral certificates from the frozen corpus.

    With ``search_if_missing`` any certificate absent from the corpus is
    searched for (steps <= 8); this is how the corpus was produced.
    """
    wh = build_ln(0).presentation
    k = figure_eight()
    frozen = _load_json("homomorphisms.json")
    W = lambda t, g=("a", "b"): parse_word(t, g)
    X = lambda t: parse_word(t, ("x", "y"))
    m, l = wh.boundary("T1").meridian, wh.boundary("T1").longitude
    mu, lam = wh.boundary("T2").meridian, wh.boundary("T2").longitude
    muK, lamK = k.boundary("K").meridian, k.boundary("K").longitude
    maps = {
        "psi": (wh, k, {"a": X("x^2 y^-1 x"), "b": X("x^2 y^-1")},
                [("psi(m)=x", m, muK), ("psi(l)=lamK^-1", l, invert(lamK)), ("psi(mu)=x y^-1", mu, X("x y^-1"))]),
        "phi": (k, k, {"x": X("x"), "y": X("x^-1 y x y^-1 x")},
                [("phi(muK)=muK", muK, muK), ("phi(lamK)=lamK^-1", lamK, invert(lamK))]),
        "f": (wh, wh, {"a": W("a^-1 b^3"), "b": W("a^-1 b a")},
              [("f(m)=mu", m, mu), ("f(l)=lam", l, lam), ("f(mu)=m", mu, m), ("f(lam)=l", lam, l)]),
    }
    homs, claims = {}, {}
    for name, (src, tgt, images, cl) in maps.items():
        entry = frozen.get(name, {})
        h = GroupHomomorphism(src, tgt, images, [], name)
        rel_certs = []
        for i, r in enumerate(src.relators):
            c = entry.get("relators", {}).get(str(i))
            cert = DerivationCertificate.from_json(c, tgt.gens) if c is not None else None
            if cert is None and search_if_missing:
                cert = search_normal_closure_membership(tgt, h(r), 8, 64, 50000)
            rel_certs.append(cert or DerivationCertificate())
        h.relator_certificates = rel_certs
        out = []
        for label, w, claimed in cl:
            c = entry.get("claims", {}).get(label)
            cert = DerivationCertificate.from_json(c, tgt.gens) if c is not None else None
            if cert is None and search_if_missing:
                target = multiply(h(w), invert(claimed))
                cert = DerivationCertificate() if not target else search_normal_closure_membership(tgt, target, 8, 64, 50000)
            out.append((label, w, claimed, cert or DerivationCertificate()))
        homs[name] = h
        claims[name] = out
    return WhiteheadSpecials(wh, k, homs["psi"], homs["phi"], homs["f"], claims)


def homomorphism_reports(sp: WhiteheadSpecials) -> dict:
    return {name: verify_homomorphism(getattr(sp, name), sp.claims[name]) for name in ("psi", "phi", "f")}


def freeze_specials(sp: WhiteheadSpecials) -> dict:
    """Corpus form of the certificates held by ``sp``."""
    out = {}
    for name in ("psi", "phi", "f"):
        h = getattr(sp, name)
        out[name] = {
            "relators": {str(i): c.to_json() for i, c in enumerate(h.relator_certificates)},
            "claims": {label: c.to_json() for label, _, _, c in sp.claims[name]},
        }
    return out


# --- identity corpus --------------------------------------------------------

@dataclass
class IdentityCheck:
    name: str
    lhs: Word
    rhs: Word
    tier: str | None
    status: str          # "pass" | "fail"
    certificate: DerivationCertificate | None = None
    note: str = ""

    def to_json(self) -> dict:
        d = {"name": self.name, "lhs": format_word(self.lhs), "rhs": format_word(self.rhs),
             "tier": self.tier, "status": self.status}
        if self.certificate is not None and self.certificate.steps:
            d["certificate"] = self.certificate.to_json()
        return d


def expand_template(text: str, env: dict) -> str:
    """Fill ``{...}`` integer expressions, e.g. ``{4n+2}``, ``{t-1}``, ``{q-p}``."""

    def ev(mo):
        expr = mo.group(1).replace(" ", "")
        expr = re.sub(r"(\d)([a-z])", r"\1*\2", expr)
        if not re.fullmatch(r"[\dnpqti+\-*()]+", expr):
            raise ValueError(f"bad template expression {expr!r}")
        return str(eval(expr, {"__builtins__": {}}, dict(env)))

    return re.sub(r"\{([^{}]+)\}", ev, text)


def expand_factors(items, env: dict) -> list:
    """Flatten a factor list with ``repeat`` and ``index`` blocks."""
    out = []
    for it in items:
        if isinstance(it, str):
            out.append(expand_template(it, env))
        elif "repeat" in it:
            k = int(expand_template(it["repeat"], env))
            for _ in range(max(k, 0)):
                out += expand_factors(it["factors"], env)
        elif "index" in it:
            lo = int(expand_template(it["from"], env))
            hi = int(expand_template(it["to"], env))
            for i in range(lo, hi + 1):
                out += expand_factors(it["factors"], {**env, it["index"]: i})
        else:
            raise ValueError(f"bad factor item {it!r}")
    return out


def corpus_template() -> dict:
    return _load_json("identities.json")


def _applies(e: dict, env: dict) -> bool:
    n = env["n"]
    if n < e.get("n_min", 0) or ("only_n" in e and n != e["only_n"]):
        return False
    if e.get("presentation", "ln") == "whfill":
        if n != 0:
            return False
        if e.get("p_lt_q") and not env["p"] < env["q"]:
            return False
        if e.get("p_eq_q") and env["p"] != env["q"]:
            return False
    return True


def corpus_entries(n: int, kind: str = "ln", t_values=None, fill=None) -> list:
    """Expanded corpus entries for one presentation kind.

    ``kind`` is ``"ln"`` or ``"whfill"`` (the latter needs ``fill=(p, q)``).
    Entries marked ``per_t`` are instantiated once per value in
    ``t_values``.  Each result has ``name``, ``lhs``, ``rhs`` and
    ``factors`` (``None`` when the entry is a plain equation).
    """
    data = corpus_template()
    t_values = data["t_values"] if t_values is None else t_values
    p, q = fill if fill is not None else (1, 1)
    out = []
    for e in data["identities"]:
        ekind = e.get("presentation", "ln")
        if kind == "ln" and ekind != "ln":
            continue
        if kind == "whfill" and ekind not in ("whfill", "ln"):
            continue
        for t in (t_values if e.get("per_t") else [None]):
            env = {"n": n, "p": p, "q": q, "t": t if t is not None else 0}
            if not _applies(e, env):
                continue
            name = e["name"] + (f"[t={t}]" if t is not None else "")
            lhs = expand_template(e["lhs"], env)
            factors = expand_factors(e["factors"], env) if "factors" in e else None
            rhs = expand_template(e["rhs"], env) if "rhs" in e else (
                " ".join(f"({f})" for f in factors) if factors else "1")
            out.append({"name": name, "lhs": lhs, "rhs": rhs, "factors": factors, "kind": ekind})
    return out


def whitehead_filled(p: int, q: int) -> Presentation:
    """Whitehead group with T2 filled at slope 1 + p/q, both peripheral systems kept.

    The filling relator is written as ``(mu lam)^(q-p) (mu^2 lam)^p``; the
    suite checks it against the literal ``mu^(p+q) lam^q`` both ways.
    """
    from .groups import literal_expansion
    base = build_ln(0).presentation
    r = literal_expansion(f"(mu lam)^{q - p} (mu^2 lam)^{p}", base, LN_MACROS)
    return Presentation(base.gens, base.relators + (r,), base.boundaries, f"Wh(T2={p + q}/{q})")


def _filling_representatives(p: int, q: int, max_steps: int) -> list:
    base = build_ln(0).presentation
    ours = whitehead_filled(p, q)
    std = fill(base, "T2", SlopeQ.of(1 + Fraction(p, q)))
    std = Presentation(std.gens, std.relators, base.boundaries, std.name)
    out = []
    for label, P, rel in ((f"fill-representative[p/q={p}/{q}]", std, f"(mu lam)^{q - p} (mu^2 lam)^{p}"),
                          (f"fill-standard[p/q={p}/{q}]", ours, f"mu^{p + q} lam^{q}")):
        out.append(_check(P, {"name": label, "lhs": "1", "rhs": rel}, max_steps))
    return out


def identity_suite(n: int, max_steps: int = 8, fills=None) -> list:
    """Check every corpus identity at ``n`` (plus the filled forms when n = 0)."""
    results = [_r2_killed(n)]
    P = build_ln(n).presentation
    for e in corpus_entries(n, "ln"):
        results.append(_check(P, e, max_steps))
    if n == 0:
        for p, q in (fills if fills is not None else corpus_template()["fill_samples"]):
            results += _filling_representatives(p, q, max_steps)
            Pf = whitehead_filled(p, q)
            for e in corpus_entries(0, "whfill", fill=(p, q)):
                if e["kind"] != "whfill":
                    continue
                e = dict(e, name=f"{e['name']}[p/q={p}/{q}]")
                results.append(_check(Pf, e, max_steps))
    return results


def _check(P, e, max_steps):
    r = prove_equal(P, e["lhs"], e["rhs"], LN_MACROS, max_steps=max_steps)
    return IdentityCheck(e["name"], r.lhs, r.rhs, r.tier, "pass" if r.ok else "fail",
                         r.certificate, r.note)


def _r2_killed(n: int) -> IdentityCheck:
    from .words import substitute
    G = gamma()
    r2 = G.relators[1]
    img = substitute(r2, {"x": Word.gen("x"), "z": Word.gen("z"),
                          "y": parse_word(f"(x^2 z^2)^{n} x^2 z", G.gens)})
    return IdentityCheck("r2-killed", img, Word(), "free" if not img else None,
                         "pass" if not img else "fail")


# --- scripted case analyses ------------------------------------------------------

_STEP_TEXT = ("word", "identity", "slope", "conjugator")


def _step_applies(s: dict, env: dict) -> bool:
    n = env["n"]
    if n < s.get("n_min", 0) or ("only_n" in s and n != s["only_n"]):
        return False
    if s.get("p_lt_q") and not env["p"] < env["q"]:
        return False
    if s.get("p_eq_q") and env["p"] != env["q"]:
        return False
    return True


def _expand_steps(steps, env: dict) -> list:
    out = []
    for s in steps:
        if "index" in s:
            lo = int(expand_template(s["from"], env))
            hi = int(expand_template(s["to"], env))
            for i in range(lo, hi + 1):
                out += _expand_steps(s["steps"], {**env, s["index"]: i})
            continue
        if not _step_applies(s, env):
            continue
        s = {k: v for k, v in s.items() if k not in ("n_min", "only_n", "p_lt_q", "p_eq_q")}
        for k in _STEP_TEXT:
            if k in s:
                s[k] = expand_template(s[k], env)
        if "premises" in s:
            s["premises"] = [[expand_template(w, env), sg] for w, sg in s["premises"]]
        out.append(s)
    return out


def script_names() -> list:
    return sorted(_load_json("scripts.json")["scripts"])


def script_cases(name: str, n: int = 0, fill=None) -> dict:
    """Expand one stored case analysis for a family member or a filling.

    Returns ``presentation``, ``slopes`` (boundary -> slope text) and
    ``cases``: a list of ``(case name, steps)`` where each step list
    starts with the shared setup.  Cases whose conditions exclude this
    ``(n, p, q)`` are dropped.
    """
    sc = _load_json("scripts.json")["scripts"][name]
    p, q = fill if fill is not None else (1, 1)
    env = {"n": n, "p": p, "q": q, "t": sc.get("t", 0)}
    setup = _expand_steps(sc["setup"], env)
    cases = []
    for c in sc["cases"]:
        if not _step_applies(c, env):
            continue
        cases.append((c["name"], setup + _expand_steps(c["steps"], env)))
    return {
        "presentation": sc["presentation"],
        "slopes": {T: expand_template(v, env) for T, v in sc["slopes"].items()},
        "cases": cases,
    }


# --- the semigroup intersection witness -----------------------------------------

@dataclass
class SemigroupWitness:
    name: str
    base: Word
    base_element: str      # peripheral expression the base word stands for
    certificate: dict


def semigroup_witnesses():
    """Target word lying in both N(ml) and N(m) of the Whitehead group, with certificates."""
    d = _load_json("semigroup.json")
    P = build_ln(d["n"]).presentation
    W = lambda t: parse_word(t, P.gens)
    ws = [SemigroupWitness(w["name"], W(w["base"]), w["base_element"], w["certificate"])
          for w in d["witnesses"]]
    return P, W(d["target"]), W(d["reduced"]), ws
