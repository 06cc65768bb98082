"""Command-line front end.

Exit codes: 0 verified / success, 1 refuted or expectation mismatch,
2 unknown or budget exhausted, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import verdicts
from .conesearch import (
    Checker, Engine, SignConstraint, Universe, build_identity_table,
    check_semigroup_certificate, replay_script, replay_tree, search,
)
from .cosets import todd_coxeter, verify_table
from .families import (
    LN_MACROS, build_ln, build_whitehead_specials, compare_instances, corpus_entries, derive_ln_from_gamma,
    homomorphism_reports, identity_suite, script_cases, script_names, semigroup_witnesses,
    whitehead_filled,
)
from .groups import PresentationError, fill, format_presentation, parse_presentation
from .homology import first_homology
from .slopes import SlopeQ
from .words import WordSyntaxError, parse_word, relator_normal_form

OK, REFUTED, UNKNOWN, INPUT_ERROR = 0, 1, 2, 3

PROFILES = {
    "ci": {"depth": 8, "max_cosets": 100000, "max_steps": 8},
    "full": {"depth": 12, "max_cosets": 1000000, "max_steps": 10},
}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.format_usage()}{self.prog}: error: {message}")


def _profile() -> dict:
    name = os.environ.get("ORDABLE_BUDGET_PROFILE", "ci")
    if name not in PROFILES:
        raise InputError(f"ORDABLE_BUDGET_PROFILE must be one of {sorted(PROFILES)}, got {name!r}")
    return PROFILES[name]


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _load(path: str):
    try:
        return parse_presentation(Path(path).read_text())
    except OSError as e:
        raise InputError(str(e)) from None


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"{path}: {e}") from None


def _out(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _same(P, Q) -> bool:
    return P.gens == Q.gens and P.relators == Q.relators and P.boundaries == Q.boundaries


def detect_corpus(P, max_n: int = 12):
    """("ln", n) or ("whfill", (p, q)) when ``P`` is a known member, else None."""
    for n in range(max_n + 1):
        if _same(P, build_ln(n).presentation):
            return "ln", n
    wh = build_ln(0).presentation
    if P.gens == wh.gens and P.boundaries == wh.boundaries and len(P.relators) == 2 \
            and P.relators[0] == wh.relators[0]:
        key = relator_normal_form(P.relators[1])
        for q in range(1, max_n + 1):
            for p in range(1, q + 1):
                if relator_normal_form(whitehead_filled(p, q).relators[1]) == key:
                    return "whfill", (p, q)
    return None


def _table_for(P, corpus):
    names = {b.name for b in P.boundaries}
    if corpus is None:
        return build_identity_table(Universe(P, LN_MACROS if names >= {"T1", "T2"} else {}), [])
    if not names >= {"T1", "T2"}:
        raise InputError("the identity corpus needs both peripheral systems T1 and T2 in the file")
    kind, arg = corpus
    if kind == "ln" and _same(P, build_ln(arg).presentation):
        return verdicts.identity_table(arg)
    entries = corpus_entries(arg, "ln") if kind == "ln" else corpus_entries(0, "whfill", fill=arg)
    return build_identity_table(Universe(P, LN_MACROS), verdicts.table_entries(entries))


def _parse_corpus(text: str | None, P):
    if text in (None, "auto"):
        return detect_corpus(P)
    if text == "none":
        return None
    kind, _, arg = text.partition(":")
    try:
        if kind == "ln":
            return "ln", int(arg)
        if kind == "whfill":
            p, q = arg.split("/")
            return "whfill", (int(p), int(q))
    except ValueError:
        pass
    raise InputError(f"bad --corpus {text!r} (use auto, none, ln:N or whfill:P/Q)")


# --- commands -------------------------------------------------------------------

def cmd_parse(a) -> int:
    _out(format_presentation(_load(a.file)), a.emit)
    return OK


def cmd_family(a) -> int:
    if a.name != "ln":
        raise InputError(f"unknown family {a.name!r} (only 'ln')")
    if a.n < 0:
        raise InputError("--n must be >= 0")
    inst = derive_ln_from_gamma(a.n) if a.derived else build_ln(a.n)
    _out(format_presentation(inst.presentation), a.emit)
    return OK


def cmd_fill(a) -> int:
    P = _load(a.file)
    try:
        s = SlopeQ.parse(a.slope)
        Q = fill(P, a.boundary, s)
    except (KeyError, ValueError) as e:
        raise InputError(str(e)) from None
    _out(format_presentation(Q), a.emit)
    return OK


def cmd_homology(a) -> int:
    h = first_homology(_load(a.file))
    _out(_dump({"rank": h.rank, "torsion": list(h.torsion), "order": h.order, "text": str(h)}), a.emit)
    return OK


def cmd_cosets(a) -> int:
    P = _load(a.file)
    sub = [parse_word(w, P.gens) for w in a.subgroup.split(";") if w.strip()] if a.subgroup else []
    t = todd_coxeter(P, sub, a.max_cosets or _profile()["max_cosets"])
    if t.status != "complete":
        print(f"overflow after {t.defined} cosets")
        return UNKNOWN
    if not verify_table(P, t, sub):
        print("table failed verification")
        return REFUTED
    if a.emit_table:
        Path(a.emit_table).write_text(t.to_csv())
    print(f"index {t.index}" if sub else f"order {t.index}")
    return OK


def cmd_verify(a) -> int:
    budget = _profile()
    if a.suite == "identities":
        P = _load(a.file)
        c = detect_corpus(P)
        if c is None or c[0] != "ln":
            raise InputError("identities suite needs an L_n presentation (see `ordable family ln`)")
        res = identity_suite(c[1], budget["max_steps"])
        doc = {"n": c[1], "checks": [r.to_json() for r in res]}
        ok = all(r.status == "pass" for r in res)
    elif a.suite == "homomorphisms":
        reps = homomorphism_reports(build_whitehead_specials())
        doc = {k: [{"label": c.label, "ok": c.ok, "tier": c.tier} for c in v] for k, v in reps.items()}
        ok = all(c.ok for v in reps.values() for c in v)
    elif a.suite == "semigroup":
        P, target, reduced, ws = semigroup_witnesses()
        doc = {"target_reduced": target == reduced,
               "witnesses": {w.name: check_semigroup_certificate(P, target, w.base, w.certificate) for w in ws}}
        ok = doc["target_reduced"] and all(doc["witnesses"].values())
    elif a.suite == "derivation":
        P = _load(a.file)
        c = detect_corpus(P)
        if c is None or c[0] != "ln":
            raise InputError("derivation suite needs an L_n presentation")
        cmp = compare_instances(derive_ln_from_gamma(c[1]), build_ln(c[1]))
        doc = {"n": c[1], "comparison": cmp}
        ok = all(v for v in cmp.values())
    else:
        raise InputError(f"unknown suite {a.suite!r}")
    _out(_dump(doc), a.emit)
    return OK if ok else REFUTED


def _constraints(doc) -> list:
    try:
        return [SignConstraint(c["word"], 1 if c["sign"] in ("+", 1) else -1, bool(c.get("cofinal", False)))
                for c in doc["constraints"]]
    except (KeyError, TypeError) as e:
        raise InputError(f"bad constraints file: {e}") from None


def cmd_cone_search(a) -> int:
    P = _load(a.file)
    doc = _load_json(a.constraints)
    corpus = _parse_corpus(a.corpus, P)
    table = _table_for(P, corpus)
    slopes = doc.get("slopes", {})
    cons = _constraints(doc)
    atoms = doc.get("atoms", [])
    res = search(Engine(table, slopes), cons, atoms, a.depth or _profile()["depth"])
    rep = replay_tree(Checker(table, slopes), res)
    if a.emit_tree:
        Path(a.emit_tree).write_text(res.to_json() + "\n")
    print(_dump({"verdict": res.verdict, "replay": rep}), end="")
    if not rep["ok"]:
        return REFUTED
    if a.expect and a.expect != res.verdict:
        return REFUTED
    return OK if res.verdict == "UNSAT" else UNKNOWN


def _script_doc(text: str, corpus) -> dict:
    if not text.startswith("builtin:"):
        doc = _load_json(text)
        if isinstance(doc, list):
            doc = {"steps": doc}
        if not isinstance(doc, dict):
            raise InputError("script file must be a JSON object or list")
        return doc
    name = text[len("builtin:"):]
    if name not in script_names():
        raise InputError(f"unknown builtin script {name!r} (have {', '.join(script_names())})")
    if corpus is None:
        raise InputError("builtin scripts need a known family member or filling")
    kind, arg = corpus
    sc = script_cases(name, arg if kind == "ln" else 0, arg if kind == "whfill" else None)
    if sc["presentation"] != kind:
        raise InputError(f"script {name!r} is written for a {sc['presentation']} presentation")
    return {"slopes": sc["slopes"], "cases": dict(sc["cases"])}


def cmd_replay(a) -> int:
    P = _load(a.file)
    corpus = _parse_corpus(a.corpus, P)
    doc = _script_doc(a.script, corpus)
    table = _table_for(P, corpus)
    cases = doc.get("cases") or {"main": doc.get("steps")}
    if not isinstance(cases, dict) or any(not isinstance(v, list) for v in cases.values()):
        raise InputError("script file needs 'steps' or 'cases'")
    try:
        ch = Checker(table, doc.get("slopes", {}))
    except ValueError as e:
        raise InputError(f"bad slopes: {e}") from None
    out, ok = {}, True
    for name in sorted(cases):
        try:
            rep = replay_script(ch, cases[name])
        except KeyError as e:
            raise InputError(f"case {name}: {e}") from None
        out[name] = [{"step": i, "what": d, "ok": s, "error": m} for i, d, s, m in rep.steps]
        ok = ok and rep.ok
    _out(_dump(out), a.emit)
    return OK if ok else REFUTED


def cmd_verdict(a) -> int:
    if a.family != "ln":
        raise InputError(f"unknown family {a.family!r} (only 'ln')")
    if a.n < 0:
        raise InputError("--n must be >= 0")
    kb = verdicts.verdict(a.n)
    _out(verdicts.emit_report(kb), a.emit)
    return OK if kb.get("NonLO", "") else UNKNOWN


def _report_one(n: int) -> str:
    return verdicts.emit_report(verdicts.verdict(n))


def cmd_report(a) -> int:
    ns = list(range(a.n_max + 1))
    if a.jobs > 1:
        with ProcessPoolExecutor(a.jobs) as ex:
            texts = list(ex.map(_report_one, ns))
    else:
        texts = [_report_one(n) for n in ns]
    if a.out:
        d = Path(a.out)
        d.mkdir(parents=True, exist_ok=True)
        for n, t in zip(ns, texts):
            (d / f"report_n{n}.json").write_text(t)
        summary = {f"n={n}": verdicts.digest(t) for n, t in zip(ns, texts)}
        (d / "index.json").write_text(_dump(summary))
    else:
        docs = {f"n={n}": json.loads(t) for n, t in zip(ns, texts)}
        sys.stdout.write(_dump(docs))
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ordable", description="Word-level certificates for non-orderability of link fillings.")
    p.add_argument("--jobs", type=_positive, default=1, help="parallel workers where supported")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("parse", help="parse a .grp file and print it normalized")
    s.add_argument("file")
    s.add_argument("--emit")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("family", help="print a family member")
    s.add_argument("name")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--derived", action="store_true", help="derive from the three-generator presentation")
    s.add_argument("--emit")
    s.set_defaults(func=cmd_family)

    s = sub.add_parser("fill", help="Dehn-fill one boundary")
    s.add_argument("file")
    s.add_argument("--boundary", required=True)
    s.add_argument("--slope", required=True)
    s.add_argument("--emit")
    s.set_defaults(func=cmd_fill)

    s = sub.add_parser("homology", help="first homology via Smith normal form")
    s.add_argument("file")
    s.add_argument("--emit")
    s.set_defaults(func=cmd_homology)

    s = sub.add_parser("cosets", help="Todd-Coxeter enumeration")
    s.add_argument("file")
    s.add_argument("--subgroup", help="generators separated by ';'")
    s.add_argument("--max-cosets", type=_positive)
    s.add_argument("--emit-table")
    s.set_defaults(func=cmd_cosets)

    s = sub.add_parser("verify", help="run a verification suite")
    s.add_argument("file", nargs="?")
    s.add_argument("--suite", required=True, choices=["identities", "homomorphisms", "semigroup", "derivation"])
    s.add_argument("--emit")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("cone-search", help="case-split search for a contradiction")
    s.add_argument("file")
    s.add_argument("--constraints", required=True, help="JSON: constraints, atoms, slopes")
    s.add_argument("--corpus", help="auto (default), none, ln:N or whfill:P/Q")
    s.add_argument("--depth", type=_positive)
    s.add_argument("--expect", choices=["UNSAT", "UNKNOWN"])
    s.add_argument("--emit-tree")
    s.set_defaults(func=cmd_cone_search)

    s = sub.add_parser("replay", help="check a scripted case analysis")
    s.add_argument("file")
    s.add_argument("--script", required=True, help="JSON file, or builtin:NAME")
    s.add_argument("--corpus")
    s.add_argument("--emit")
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("verdict", help="region report for one family member")
    s.add_argument("--family", default="ln")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--emit")
    s.set_defaults(func=cmd_verdict)

    s = sub.add_parser("report", help="region reports for n = 0..N")
    s.add_argument("--n-max", type=int, default=2)
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def run(argv) -> int:
    try:
        a = build_parser().parse_args(list(argv))
        if a.command in ("verify",) and a.suite in ("identities", "derivation") and not a.file:
            raise InputError("this suite needs a presentation file")
        _profile()
        return a.func(a)
    except InputError as e:
        print(str(e), file=sys.stderr)
        return INPUT_ERROR
    except (WordSyntaxError, PresentationError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return INPUT_ERROR


def main(argv=None) -> int:
    code = run(sys.argv[1:] if argv is None else argv)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
