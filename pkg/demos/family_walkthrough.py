"""Tour of one family member: words, peripheral data, homology, a finite filling.

Run: python3 demos/family_walkthrough.py [n]
"""

import sys

from ordable.cosets import todd_coxeter, verify_table
from ordable.families import build_ln, compare_instances, derive_ln_from_gamma, identity_suite
from ordable.groups import fill
from ordable.homology import first_homology
from ordable.slopes import SlopeQ
from ordable.words import format_word

n = int(sys.argv[1]) if len(sys.argv) > 1 else 1

inst = build_ln(n)
P = inst.presentation
print(f"L{n}: two generators, one relator of length {len(P.relators[0])}")
print("  r  =", format_word(P.relators[0]))
for name, w in inst.words().items():
    print(f"  {name:<3}=", format_word(w))

# the hardcoded presentation should agree with the one obtained by eliminating a generator
d = derive_ln_from_gamma(n)
print("\nelimination chain:")
for label, ok in d.steps:
    print(f"  {'ok ' if ok else 'BAD'} {label}")
print("  comparison:", compare_instances(d, inst))

cases = identity_suite(n, max_steps=8)
tiers = {}
for c in cases:
    tiers[c.tier] = tiers.get(c.tier, 0) + 1
print(f"\n{len(cases)} identities checked, by tier: {tiers}")
print("  failing:", [c.name for c in cases if c.status != "pass"] or "none")

h = first_homology(P)
print("\nH1 =", h)
for s1, s2 in [(SlopeQ(3, 1), SlopeQ(5, 2)), (SlopeQ(7, 3), SlopeQ(4, 1))]:
    Q = fill(fill(P, "T1", s1), "T2", s2)
    print(f"  fill {s1}, {s2}: |H1| = {first_homology(Q).order}")

W = fill(fill(build_ln(0).presentation, "T1", SlopeQ(1, 1)), "T2", SlopeQ(1, 1))
t = todd_coxeter(W, [], 100000)
print(f"\n(1,1) filling of the n=0 member: trivial subgroup has index {t.index}, table ok = {verify_table(W, t)}")
