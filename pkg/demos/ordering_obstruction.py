"""How a region of non-orderable fillings is assembled.

A case split over signs of peripheral elements ends in contradictions,
each leaf is replayed by an independent checker, and the resulting facts
are chained into regions of the slope plane.

Run: python3 demos/ordering_obstruction.py [n]
"""

import sys

from ordable.slopes import compatible_slope_arc, enumerate_orderings, sign_of, SlopeQ
from ordable.verdicts import emit_report, sharp_region_search, verdict

n = int(sys.argv[1]) if len(sys.argv) > 1 else 1

# slope -> the four orderings of Z^2 whose kernel line has that slope
s = SlopeQ(7, 2)
print(f"orderings with slope {s}:")
for o in enumerate_orderings(s):
    print("  ", o, " sign of (1,0), (0,1):", sign_of(o, (1, 0)), sign_of(o, (0, 1)))

# which slopes are compatible with m > 0, l < 0, m^4 l > 0 ?
print("compatible arc:", compatible_slope_arc([((1, 0), 1), ((0, 1), -1), ((4, 1), 1)]))

r1, r2 = str(SlopeQ(4 * n + 3, 1)), "3"
res, rep = sharp_region_search(n, r1, r2)
print(f"\nsearch at slopes ({r1}, {r2}): {res.verdict}, replay ok = {rep['ok']}")

kb = verdict(n)
print("\nNonLO region:        ", kb.region("NonLO", ""))
print("not weakly detected: ", kb.region("NotDetected", "({};{})"))
print("report bytes:", len(emit_report(kb)))
