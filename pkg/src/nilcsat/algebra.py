"""Arithmetic in the algebras D[p1,...,ph].

The carrier is Z_{p1} x ... x Z_{ph}.  Besides the group operations there are
projections ``e_j`` onto level j and level-shift tests ``v_j`` which put a 0/1
indicator of ``x_{j+1} != 0`` on level j.  Levels are 1-based throughout.

Elements are also addressed by an integer *code*: the mixed-radix number with
``x_1`` as the most significant digit, so that code order is lexicographic
order on coordinate tuples.  Batch evaluators work on numpy arrays of codes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from itertools import product

import numpy as np

from .errors import CeilingError, LevelError, SpecMismatch

TABLE_CEILING = 4096
CONGRUENCE_CEILING = 64


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


@dataclass(frozen=True)
class AlgebraSpec:
    primes: tuple[int, ...]

    def __post_init__(self):
        primes = tuple(int(p) for p in self.primes)
        if not primes:
            raise ValueError("need at least one prime")
        for p in primes:
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
        object.__setattr__(self, "primes", primes)

    @classmethod
    def parse(cls, text: str) -> "AlgebraSpec":
        """Build from ``"2,3,2"``."""
        try:
            return cls(tuple(int(t) for t in text.replace(" ", "").split(",") if t))
        except ValueError as exc:
            raise ValueError(f"bad prime list {text!r}: {exc}") from None

    def __str__(self):
        return "D[" + ",".join(map(str, self.primes)) + "]"

    @property
    def h(self) -> int:
        return len(self.primes)

    @property
    def alternating(self) -> bool:
        return all(a != b for a, b in zip(self.primes, self.primes[1:]))

    @property
    def size(self) -> int:
        return math.prod(self.primes)

    def p(self, level: int) -> int:
        self.check_level(level, 1, self.h)
        return self.primes[level - 1]

    def check_level(self, level: int, lo: int, hi: int, what: str = "level"):
        if not (isinstance(level, (int, np.integer)) and lo <= level <= hi):
            raise LevelError(f"{what} {level} out of range {lo}..{hi} for {self}")

    def require_alternating(self):
        if self.h < 2 or not self.alternating:
            raise SpecMismatch(f"{self} must be alternating with h >= 2")

    # -- elements -----------------------------------------------------------

    def element(self, *coords) -> "DElem":
        if len(coords) == 1 and isinstance(coords[0], (tuple, list)):
            coords = tuple(coords[0])
        return DElem(self, tuple(int(c) for c in coords))

    def parse_element(self, text: str) -> "DElem":
        parts = text.strip().split(":")
        try:
            coords = tuple(int(p) for p in parts)
        except ValueError:
            raise ValueError(f"bad element literal {text!r}") from None
        return DElem(self, coords)

    @property
    def zero(self) -> "DElem":
        return DElem(self, (0,) * self.h)

    @property
    def one(self) -> "DElem":
        return DElem(self, (1,) * self.h)

    def unit(self, level: int, value: int = 1) -> "DElem":
        """``value * e_level(1)``."""
        self.check_level(level, 1, self.h)
        coords = [0] * self.h
        coords[level - 1] = value % self.primes[level - 1]
        return DElem(self, tuple(coords))

    def elements(self):
        for coords in product(*(range(p) for p in self.primes)):
            yield DElem(self, coords)

    # -- codes ----------------------------------------------------------------

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out = []
        s = 1
        for p in reversed(self.primes):
            out.append(s)
            s *= p
        return tuple(reversed(out))

    def encode(self, coords) -> int:
        return sum(c * s for c, s in zip(coords, self.strides))

    def decode(self, code: int) -> tuple[int, ...]:
        return tuple((code // s) % p for s, p in zip(self.strides, self.primes))

    def digits(self, codes: np.ndarray) -> list[np.ndarray]:
        """Per-level coordinate arrays of a code array (index 0 is level 1)."""
        return [(codes // s) % p for s, p in zip(self.strides, self.primes)]

    def undigits(self, digits) -> np.ndarray:
        out = 0
        for d, s in zip(digits, self.strides):
            out = out + d * s
        return out

    # -- raw coordinate operations -------------------------------------------

    def add_coords(self, a, b):
        return tuple((x + y) % p for x, y, p in zip(a, b, self.primes))

    def neg_coords(self, a):
        return tuple((-x) % p for x, p in zip(a, self.primes))

    def e_coords(self, j, a):
        return tuple(x if i == j - 1 else 0 for i, x in enumerate(a))

    def v_coords(self, j, a):
        return tuple((1 if a[j] else 0) if i == j - 1 else 0 for i in range(self.h))

    @cached_property
    def tables(self) -> "OpTables":
        return OpTables(self)


class OpTables:
    """Operation tables on element codes, for vectorized evaluation."""

    def __init__(self, spec: AlgebraSpec):
        n = spec.size
        self.spec = spec
        self.size = n
        codes = np.arange(n, dtype=np.int64)
        dig = spec.digits(codes)
        self.neg = spec.undigits([(-d) % p for d, p in zip(dig, spec.primes)])
        self.e = [None]
        for j in range(1, spec.h + 1):
            self.e.append(dig[j - 1] * spec.strides[j - 1])
        self.v = [None]
        for j in range(1, spec.h):
            self.v.append((dig[j] != 0).astype(np.int64) * spec.strides[j - 1])
        self.add_table = None
        if n <= TABLE_CEILING:
            a = codes[:, None]
            b = codes[None, :]
            self.add_table = self._add_digits(a, b)

    def _add_digits(self, a, b):
        spec = self.spec
        da = spec.digits(a)
        db = spec.digits(b)
        return spec.undigits([(x + y) % p for x, y, p in zip(da, db, spec.primes)])

    def add(self, a, b):
        if self.add_table is not None:
            return self.add_table[a, b]
        return self._add_digits(a, b)


@dataclass(frozen=True)
class DElem:
    spec: AlgebraSpec
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) != self.spec.h:
            raise ValueError(f"{self.spec} elements have {self.spec.h} coordinates, got {self.coords}")
        for x, p in zip(self.coords, self.spec.primes):
            if not 0 <= x < p:
                raise ValueError(f"coordinate {x} out of range for modulus {p}")

    def __str__(self):
        return ":".join(map(str, self.coords))

    def __repr__(self):
        return f"DElem({self})"

    @property
    def code(self) -> int:
        return self.spec.encode(self.coords)

    @classmethod
    def from_code(cls, spec: AlgebraSpec, code: int) -> "DElem":
        return cls(spec, spec.decode(int(code)))

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return neg(self)

    def __sub__(self, other):
        return add(self, neg(other))

    def is_zero(self) -> bool:
        return not any(self.coords)


def _same(a: DElem, b: DElem):
    if a.spec != b.spec:
        raise SpecMismatch(f"elements of {a.spec} and {b.spec} cannot be combined")


def add(a: DElem, b: DElem) -> DElem:
    _same(a, b)
    return DElem(a.spec, a.spec.add_coords(a.coords, b.coords))


def neg(a: DElem) -> DElem:
    return DElem(a.spec, a.spec.neg_coords(a.coords))


def scale(lam: int, a: DElem) -> DElem:
    """``lam * a``: repeated addition, computed coordinatewise."""
    return DElem(a.spec, tuple((lam * x) % p for x, p in zip(a.coords, a.spec.primes)))


def e(j: int, a: DElem) -> DElem:
    a.spec.check_level(j, 1, a.spec.h)
    return DElem(a.spec, a.spec.e_coords(j, a.coords))


def e_upper(k: int, a: DElem) -> DElem:
    """Sum of ``e_j(a)`` over ``j >= k``; ``k = h+1`` gives 0."""
    a.spec.check_level(k, 1, a.spec.h + 1)
    return DElem(a.spec, tuple(x if i >= k - 1 else 0 for i, x in enumerate(a.coords)))


def v(j: int, a: DElem) -> DElem:
    a.spec.check_level(j, 1, a.spec.h - 1)
    return DElem(a.spec, a.spec.v_coords(j, a.coords))


# -- congruences ---------------------------------------------------------------


def _normalize(labels) -> tuple[int, ...]:
    seen = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def theta(spec: AlgebraSpec, k: int) -> tuple[int, ...]:
    """Partition of the carrier (as block labels over codes) for theta_k:
    two elements are related iff they agree on coordinates k..h."""
    spec.check_level(k, 1, spec.h + 1)
    return _normalize(spec.decode(c)[k - 1:] for c in range(spec.size))


def theta_chain(spec: AlgebraSpec) -> list[tuple[int, ...]]:
    return [theta(spec, k) for k in range(1, spec.h + 2)]


def _translations(spec: AlgebraSpec) -> list[list[int]]:
    t = spec.tables
    maps = [t.neg.tolist()]
    maps += [t.e[j].tolist() for j in range(1, spec.h + 1)]
    maps += [t.v[j].tolist() for j in range(1, spec.h)]
    codes = np.arange(spec.size)
    maps += [t.add(codes, c).tolist() for c in range(1, spec.size)]
    return maps


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True

    def labels(self):
        return _normalize(self.find(x) for x in range(len(self.parent)))


def principal_congruence(spec: AlgebraSpec, a: int, b: int, translations=None) -> tuple[int, ...]:
    translations = translations or _translations(spec)
    uf = _UnionFind(spec.size)
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if uf.union(x, y):
            stack.extend((f[x], f[y]) for f in translations)
    return uf.labels()


def _join(p: tuple[int, ...], q: tuple[int, ...]) -> tuple[int, ...]:
    uf = _UnionFind(len(p))
    for part in (p, q):
        first = {}
        for x, label in enumerate(part):
            if label in first:
                uf.union(first[label], x)
            else:
                first[label] = x
    return uf.labels()


def enumerate_congruences(spec: AlgebraSpec, ceiling: int = CONGRUENCE_CEILING) -> set[tuple[int, ...]]:
    """All congruences of the algebra, as normalized block-label tuples over codes.

    Principal congruences come from closing a pair under all basic
    translations; every congruence is a join of principal ones.
    """
    if spec.size > ceiling:
        raise CeilingError(f"carrier of {spec} has {spec.size} elements, ceiling is {ceiling}",
                           required=spec.size)
    translations = _translations(spec)
    found = {_normalize(range(spec.size))}
    for a in range(spec.size):
        for b in range(a + 1, spec.size):
            found.add(principal_congruence(spec, a, b, translations))
    frontier = set(found)
    while frontier:
        new = set()
        for p in frontier:
            for q in list(found):
                j = _join(p, q)
                if j not in found and j not in new:
                    new.add(j)
        found |= new
        frontier = new
    return found
