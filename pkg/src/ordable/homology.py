"""Abelianization and integer Smith normal form.

Matrices are lists of lists of Python ints, so entries never overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod


def abelianization_matrix(p) -> list:
    """Rows are relators, columns generators, entries exponent sums."""
    return [[r.exponent_sum(g) for g in p.gens] for r in p.relators]


def identity(n: int) -> list:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: list, B: list) -> list:
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(inner)) for j in range(cols)] for i in range(len(A))]


def determinant(M: list) -> int:
    """Exact determinant by fraction-free Bareiss elimination."""
    n = len(M)
    if n == 0:
        return 1
    A = [row[:] for row in M]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def smith_normal_form(M: list, ncols: int | None = None):
    """Return ``(diagonal, U, V)`` with ``U M V`` diagonal, ``U``, ``V`` unimodular.

    The diagonal has length ``min(rows, cols)``, entries nonnegative and
    each dividing the next.  Pivots are chosen by least absolute value.
    """
    m = len(M)
    n = ncols if ncols is not None else (len(M[0]) if M else 0)
    A = [list(map(int, row)) for row in M]
    U, V = identity(m), identity(n)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for row in A:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]

    def add_row(dst, src, k):  # row_dst += k * row_src
        A[dst] = [x + k * y for x, y in zip(A[dst], A[src])]
        U[dst] = [x + k * y for x, y in zip(U[dst], U[src])]

    def add_col(dst, src, k):
        for row in A:
            row[dst] += k * row[src]
        for row in V:
            row[dst] += k * row[src]

    t = 0
    while t < min(m, n):
        # least nonzero |entry| in the remaining block
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if A[i][j] and (best is None or abs(A[i][j]) < abs(A[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        while True:
            done = True
            for i in range(t + 1, m):
                if A[i][t]:
                    add_row(i, t, -(A[i][t] // A[t][t]))
                    if A[i][t]:
                        done = False
            for j in range(t + 1, n):
                if A[t][j]:
                    add_col(j, t, -(A[t][j] // A[t][t]))
                    if A[t][j]:
                        done = False
            if done:
                # divisibility: pivot must divide the rest of the block
                bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n)
                            if A[i][j] % A[t][t]), None)
                if bad is None:
                    break
                add_row(t, bad[0], 1)
                continue
            # move the smallest entry of row/col t to the pivot
            cand = [(abs(A[i][t]), i, t) for i in range(t, m) if A[i][t]]
            cand += [(abs(A[t][j]), t, j) for j in range(t, n) if A[t][j]]
            _, i, j = min(cand)
            swap_rows(t, i)
            swap_cols(t, j)
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    diag = [A[i][i] for i in range(min(m, n))]
    return diag, U, V


@dataclass(frozen=True)
class AbelianInvariants:
    torsion: tuple
    rank: int

    @property
    def order(self):
        """Group order, or ``None`` when infinite."""
        return None if self.rank else prod(self.torsion)

    def __str__(self):
        parts = ["Z"] * self.rank + [f"Z/{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


def invariants_of(M: list, ncols: int) -> AbelianInvariants:
    diag, _, _ = smith_normal_form(M, ncols)
    nonzero = [d for d in diag if d]
    return AbelianInvariants(tuple(d for d in nonzero if d != 1), ncols - len(nonzero))


def first_homology(p) -> AbelianInvariants:
    return invariants_of(abelianization_matrix(p), len(p.gens))


def in_row_span(M: list, v) -> bool:
    """Whether ``v`` is a rational combination of the rows of ``M``.

    Used as a cheap necessary condition for ``v`` being the abelian image
    of a relator consequence (the integral condition is stronger).
    """
    v = list(v)
    if not any(v):
        return True
    rows = [[Fraction(x) for x in r] for r in M if any(r)]
    if not rows:
        return False
    return _rank(rows) == _rank(rows + [[Fraction(x) for x in v]])


def in_integer_row_span(M: list, v) -> bool:
    """Whether ``v`` is an integer combination of the rows of ``M``."""
    v = list(v)
    n = len(v)
    if not M:
        return not any(v)
    diag, U, V = smith_normal_form(M, n)
    # rows of U M V = D; v in rowspace(M) iff v V in rowspace(D)
    w = [sum(v[k] * V[k][j] for k in range(n)) for j in range(n)]
    for j in range(n):
        d = diag[j] if j < len(diag) else 0
        if d == 0:
            if w[j]:
                return False
        elif w[j] % d:
            return False
    return True


def _rank(rows: list) -> int:
    A = [r[:] for r in rows]
    rank = 0
    cols = len(A[0]) if A else 0
    for c in range(cols):
        piv = next((i for i in range(rank, len(A)) if A[i][c] != 0), None)
        if piv is None:
            continue
        A[rank], A[piv] = A[piv], A[rank]
        for i in range(len(A)):
            if i != rank and A[i][c] != 0:
                f = A[i][c] / A[rank][c]
                A[i] = [x - f * y for x, y in zip(A[i], A[rank])]
        rank += 1
    return rank
