"""Todd-Coxeter coset enumeration (HLT strategy, in-place coincidences)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

from .words import Word


@dataclass
class CosetTable:
    gens: tuple
    rows: list          # rows[c][2*i] = c.g_i, rows[c][2*i+1] = c.g_i^-1
    status: str         # "complete" | "overflow"
    defined: int = 0    # total cosets ever defined

    @property
    def index(self):
        return len(self.rows) if self.status == "complete" else None

    def act(self, c: int, w: Word) -> int:
        col = {g: i for i, g in enumerate(self.gens)}
        for g, s in w.letters:
            c = self.rows[c][2 * col[g] + (0 if s == 1 else 1)]
        return c

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        header = ["coset"]
        for g in self.gens:
            header += [g, g + "^-1"]
        wr.writerow(header)
        for c, row in enumerate(self.rows):
            wr.writerow([c] + ["" if x is None else x for x in row])
        return buf.getvalue()


@dataclass
class FinitenessCertificate:
    order: int
    table: CosetTable


def _columns(w: Word, col: dict) -> list:
    return [2 * col[g] + (0 if s == 1 else 1) for g, s in w.letters]


def todd_coxeter(p, subgroup_gens: Sequence[Word] = (), max_cosets: int = 100000) -> CosetTable:
    """Enumerate cosets of the subgroup generated by ``subgroup_gens``.

    Relators are scanned in presentation order for each live coset in
    increasing order, then the coset's row is filled column by column.
    """
    if max_cosets < 1:
        raise ValueError("max_cosets must be >= 1")
    gens = tuple(p.gens)
    col = {g: i for i, g in enumerate(gens)}
    ncols = 2 * len(gens)
    inv = [x ^ 1 for x in range(ncols)]
    rels = [_columns(r, col) for r in p.relators]
    sub = [_columns(w, col) for w in subgroup_gens]

    table = [[None] * ncols]
    parent = [0]

    class Overflow(Exception):
        pass

    def define(c, x):
        if len(table) >= max_cosets:
            raise Overflow
        d = len(table)
        table.append([None] * ncols)
        parent.append(d)
        table[c][x] = d
        table[d][inv[x]] = c
        return d

    def rep(c):
        root = c
        while parent[root] != root:
            root = parent[root]
        while parent[c] != root:
            parent[c], c = root, parent[c]
        return root

    def coincidence(a, b):
        queue = []

        def merge(k, l):
            k, l = rep(k), rep(l)
            if k == l:
                return
            if k > l:
                k, l = l, k
            parent[l] = k
            queue.append(l)

        merge(a, b)
        i = 0
        while i < len(queue):
            e = queue[i]
            i += 1
            for x in range(ncols):
                f = table[e][x]
                if f is None:
                    continue
                if table[f][inv[x]] == e:
                    table[f][inv[x]] = None
                e1, f1 = rep(e), rep(f)
                if table[e1][x] is not None:
                    merge(f1, table[e1][x])
                elif table[f1][inv[x]] is not None:
                    merge(e1, table[f1][inv[x]])
                else:
                    table[e1][x] = f1
                    table[f1][inv[x]] = e1

    def scan_and_fill(c, w):
        f, b = c, c
        i, j = 0, len(w) - 1
        while True:
            while i <= j and table[f][w[i]] is not None:
                f = table[f][w[i]]
                i += 1
            if i > j:
                if f != b:
                    coincidence(f, b)
                return
            while j >= i and table[b][inv[w[j]]] is not None:
                b = table[b][inv[w[j]]]
                j -= 1
            if j < i:
                coincidence(f, b)
                return
            if i == j:
                table[f][w[i]] = b
                table[b][inv[w[i]]] = f
                return
            define(f, w[i])

    status = "complete"
    try:
        for w in sub:
            scan_and_fill(0, w)
        c = 0
        while c < len(table):
            if parent[c] == c:
                for w in rels:
                    if parent[c] != c:
                        break
                    scan_and_fill(c, w)
                if parent[c] == c:
                    for x in range(ncols):
                        if table[c][x] is None:
                            define(c, x)
            c += 1
    except Overflow:
        status = "overflow"

    defined = len(table)
    if status == "overflow":
        return CosetTable(gens, table, status, defined)
    live = [c for c in range(len(table)) if parent[c] == c]
    renum = {c: k for k, c in enumerate(live)}
    rows = [[renum[rep(x)] for x in table[c]] for c in live]
    return CosetTable(gens, rows, status, defined)


def verify_table(p, table: CosetTable, subgroup_gens: Sequence[Word] = ()) -> bool:
    """Full check: closed, permutation action, relators fix every coset."""
    if table.status != "complete":
        return False
    n = len(table.rows)
    for c, row in enumerate(table.rows):
        for x, d in enumerate(row):
            if d is None or not 0 <= d < n or table.rows[d][x ^ 1] != c:
                return False
    for r in p.relators:
        if any(table.act(c, r) != c for c in range(n)):
            return False
    return all(table.act(0, w) == 0 for w in subgroup_gens)


def certify_nonLO_by_finiteness(p, max_cosets: int = 100000):
    """Certificate of finiteness, or ``None`` if enumeration overflows."""
    t = todd_coxeter(p, (), max_cosets)
    if t.status != "complete" or not verify_table(p, t):
        return None
    return FinitenessCertificate(len(t.rows), t)
