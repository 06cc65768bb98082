"""Free-group words over named generators, plus the word parser.

A word is a freely reduced tuple of letters ``(name, sign)`` with
``sign`` in ``{+1, -1}``.  Words are immutable and hashable; the empty
word is the identity and prints as ``1``.

Grammar accepted by :func:`parse_word`::

    word := "1" | term+
    term := atom ["^" int]
    atom := IDENT | "(" word ")"
    int  := ["-"] digit+
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping, Sequence

Letter = tuple  # (name: str, sign: int)

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")


class WordSyntaxError(ValueError):
    """Malformed word text.  ``pos`` is the 0-based offset of the problem."""

    def __init__(self, message: str, text: str = "", pos: int = 0):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


class UnknownGenerator(KeyError):
    pass


def _valid_name(name: str) -> bool:
    return bool(_IDENT.fullmatch(name))


def reduce(letters: Iterable[Letter]) -> "Word":
    """Freely reduce a letter sequence (stack reducer)."""
    stack: list = []
    for g, s in letters:
        if s not in (1, -1):
            raise ValueError(f"letter sign must be +1 or -1, got {s!r}")
        if stack and stack[-1][0] == g and stack[-1][1] == -s:
            stack.pop()
        else:
            stack.append((g, s))
    return Word._raw(tuple(stack))


_set = object.__setattr__


class Word:
    __slots__ = ("letters", "_hash")

    def __init__(self, letters: Iterable[Letter] = ()):
        w = reduce(letters)
        _set(self, "letters", w.letters)
        _set(self, "_hash", None)

    @classmethod
    def _raw(cls, letters: tuple) -> "Word":
        w = object.__new__(cls)
        _set(w, "letters", letters)
        _set(w, "_hash", None)
        return w

    def __setattr__(self, name, value):
        raise AttributeError("Word is immutable")

    def __reduce__(self):
        return (Word._raw, (self.letters,))

    @classmethod
    def gen(cls, name: str, power: int = 1) -> "Word":
        if not _valid_name(name):
            raise ValueError(f"bad generator name {name!r}")
        s = 1 if power >= 0 else -1
        return cls._raw(((name, s),) * abs(power))

    # --- value semantics -------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self):
        if self._hash is None:
            _set(self, "_hash", hash(self.letters))
        return self._hash

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word._raw(self.letters[item])
        return self.letters[item]

    def sort_key(self):
        """Shortlex key: length, then letters with g < g^-1 < h < h^-1."""
        return (len(self.letters), tuple((g, -s) for g, s in self.letters))

    def __lt__(self, other: "Word"):
        return self.sort_key() < other.sort_key()

    # --- group operations ------------------------------------------------
    def __mul__(self, other: "Word") -> "Word":
        return multiply(self, other)

    def __invert__(self) -> "Word":
        return invert(self)

    def inverse(self) -> "Word":
        return invert(self)

    def __pow__(self, k: int) -> "Word":
        return power(self, k)

    def generators(self) -> set:
        return {g for g, _ in self.letters}

    def exponent_sum(self, name: str) -> int:
        return sum(s for g, s in self.letters if g == name)

    def __str__(self):
        return format_word(self)

    def __repr__(self):
        return f"Word({format_word(self)!r})"


IDENTITY = Word._raw(())


def multiply(w1: Word, w2: Word) -> Word:
    a, b = w1.letters, w2.letters
    i = 0
    n = min(len(a), len(b))
    while i < n and a[-1 - i][0] == b[i][0] and a[-1 - i][1] == -b[i][1]:
        i += 1
    return Word._raw(a[: len(a) - i] + b[i:])


def invert(w: Word) -> Word:
    return Word._raw(tuple((g, -s) for g, s in reversed(w.letters)))


def power(w: Word, k: int) -> Word:
    if k < 0:
        w, k = invert(w), -k
    # conjugate-core trick keeps this linear: w = c u c^-1 with u cyclically reduced
    c, u = cyclic_core(w)
    return multiply(multiply(c, Word._raw(u.letters * k)), invert(c)) if k else IDENTITY


def conjugate(w: Word, g: Word) -> Word:
    """Return g w g^-1."""
    return multiply(multiply(g, w), invert(g))


def product(words: Iterable[Word]) -> Word:
    out = IDENTITY
    for w in words:
        out = multiply(out, w)
    return out


def substitute(w: Word, images: Mapping[str, Word]) -> Word:
    """Homomorphic image of ``w`` under ``images`` (generator -> word)."""
    out: list = []
    for g, s in w.letters:
        try:
            img = images[g]
        except KeyError:
            raise UnknownGenerator(f"no image for generator {g!r}") from None
        out.extend(img.letters if s == 1 else invert(img).letters)
    return reduce(out)


def cyclic_core(w: Word) -> tuple:
    """Split ``w`` as ``c * u * c^-1`` with ``u`` cyclically reduced."""
    L = w.letters
    i, j = 0, len(L) - 1
    while i < j and L[i][0] == L[j][0] and L[i][1] == -L[j][1]:
        i += 1
        j -= 1
    return Word._raw(L[:i]), Word._raw(L[i : j + 1])


def cyclically_reduce(w: Word) -> Word:
    return cyclic_core(w)[1]


def rotations(w: Word) -> list:
    L = w.letters
    return [Word._raw(L[i:] + L[:i]) for i in range(len(L))] if L else [IDENTITY]


def relator_normal_form(w: Word) -> Word:
    """Least rotation of the cyclic core of ``w`` or of its inverse.

    Two relators have the same normal form iff each is a cyclic
    permutation of the other or of its inverse.
    """
    c = cyclically_reduce(w)
    return min(rotations(c) + rotations(invert(c)), key=Word.sort_key)


def is_cyclic_conjugate(u: Word, v: Word) -> bool:
    """True iff the cyclically reduced cores of u and v are rotations of each other."""
    cu, cv = cyclically_reduce(u).letters, cyclically_reduce(v).letters
    if len(cu) != len(cv):
        return False
    if not cu:
        return True
    doubled = cv + cv
    n = len(cu)
    return any(doubled[i : i + n] == cu for i in range(n))


def root(w: Word) -> tuple:
    """Return ``(u, k)`` with ``w == u**k``, ``k >= 1`` maximal (w nonempty)."""
    c, core = cyclic_core(w)
    L = core.letters
    n = len(L)
    for d in range(1, n + 1):
        if n % d == 0 and L[:d] * (n // d) == L:
            u = multiply(multiply(c, Word._raw(L[:d])), invert(c))
            return u, n // d
    return w, 1


def abelian_vector(w: Word, gens: Sequence[str]) -> tuple:
    return tuple(w.exponent_sum(g) for g in gens)


def format_word(w: Word) -> str:
    """Compact text with runs collapsed, e.g. ``a^2 b^-1``; empty word is ``1``."""
    if not w.letters:
        return "1"
    parts = []
    L = w.letters
    i = 0
    while i < len(L):
        j = i
        while j < len(L) and L[j] == L[i]:
            j += 1
        g, s = L[i]
        k = (j - i) * s
        parts.append(g if k == 1 else f"{g}^{k}")
        i = j
    return " ".join(parts)


# --- parser ------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, alphabet, macros):
        self.text = text
        self.pos = 0
        self.alphabet = alphabet
        self.macros = macros or {}

    def error(self, msg):
        raise WordSyntaxError(msg, self.text, self.pos)

    def skip(self):
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def word(self, closing: str) -> list:
        c = self.peek()
        if c == "1":
            self.pos += 1
            if self.peek() not in (closing, ""):
                self.error("'1' must stand alone")
            return []
        letters: list = []
        while self.peek() not in (closing, ""):
            letters.extend(self.term())
        if not letters and c in (closing, ""):
            self.error("empty word (write 1 for the identity)")
        return letters

    def term(self) -> list:
        atom = self.atom()
        if self.peek() == "^":
            self.pos += 1
            k = self.integer()
            if k < 0:
                atom = [(g, -s) for g, s in reversed(atom)]
                k = -k
            atom = atom * k
        return atom

    def integer(self) -> int:
        self.skip()
        m = re.compile(r"-?\d+").match(self.text, self.pos)
        if not m:
            self.error("expected integer exponent")
        self.pos = m.end()
        return int(m.group())

    def atom(self) -> list:
        c = self.peek()
        if c == "(":
            self.pos += 1
            inner = self.word(")")
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return inner
        m = _IDENT.match(self.text, self.pos)
        if not m:
            self.error(f"unexpected character {c!r}")
        name = m.group()
        start = self.pos
        self.pos = m.end()
        if name in self.macros:
            return list(self.macros[name].letters)
        if self.alphabet is not None and name not in self.alphabet:
            self.pos = start
            raise UnknownGenerator(f"unknown generator {name!r} at position {start} in {self.text!r}")
        return [(name, 1)]


def parse_word(text: str, alphabet: Iterable[str] | None = None,
               macros: Mapping[str, Word] | None = None) -> Word:
    """Parse ``text`` into a reduced :class:`Word`.

    ``alphabet`` restricts identifiers (``None`` accepts any).  ``macros``
    maps extra identifiers to words that are spliced in verbatim, which is
    how peripheral names like ``m`` or ``lam`` are written inside formulas.
    """
    alpha = None if alphabet is None else set(alphabet)
    p = _Parser(text, alpha, macros)
    letters = p.word("")
    if p.peek() != "":
        p.error("unbalanced ')'")
    return reduce(letters)
