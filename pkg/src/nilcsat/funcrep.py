"""Compiling functions between levels of D into polynomials.

Two-level core (inputs on level k+1, output on level k, q = p_{k+1},
p = p_k, q != p).  For an affine hyperplane H of GF(q)^m with defining form
ell_H, ``e_k1 - v_k(ell_H(x))`` is the indicator of ``x in H``.  Summing the
indicators of all hyperplanes through a point a counts N1 = (q^m-1)/(q-1)
at a and N2 = (q^{m-1}-1)/(q-1) anywhere else, and N1 - N2 = q^{m-1} is a
unit mod p.  Hence::

    g(x) = inv * (sum_H w_H [x in H] - N2 * sum_a g(a)),   w_H = sum_{a in H} g(a)

with inv = (q^{m-1})^{-1} mod p.  Grouping by hyperplane rather than by
point gives size O(q^m * m * q).

Wider gaps (inputs on level l > k+1) go through one-hot indicators
``e_{k+1}1 - v_{k+1}...v_{l-1}(x - lam*e_l1)`` for lam = 1..p_l-1; the
lam = 0 indicator is implied by the others and is not materialized.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .algebra import AlgebraSpec
from .cnf import CnfFormula
from .errors import CeilingError, LevelError, SpecMismatch
from .terms import Add, Circuit, Const, E, Neg, Term, V, Var, scale_term, substitute, sum_terms

MAX_ARITY = 6
MAX_POINTS = 50_000


@dataclass(frozen=True)
class LevelFunction:
    """g : (e_source D)^arity -> e_target D as a value table.

    ``table[idx]`` is the output residue (mod p_target) at the point whose
    base-p_source digits (most significant first) are the input residues.
    """

    source: int
    target: int
    arity: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.target >= self.source:
            raise LevelError(f"target level {self.target} must be below source level {self.source}")

    def check(self, spec: AlgebraSpec):
        spec.check_level(self.source, 2, spec.h, "source level")
        spec.check_level(self.target, 1, self.source - 1, "target level")
        if len(self.table) != spec.p(self.source) ** self.arity:
            raise ValueError(f"table has {len(self.table)} entries, expected {spec.p(self.source) ** self.arity}")

    @classmethod
    def from_callable(cls, spec: AlgebraSpec, source: int, target: int, arity: int, fn) -> "LevelFunction":
        q = spec.p(source)
        p = spec.p(target)
        table = tuple(int(fn(pt)) % p for pt in itertools.product(range(q), repeat=arity))
        return cls(source, target, arity, table)

    def __call__(self, point, spec: AlgebraSpec) -> int:
        q = spec.p(self.source)
        idx = 0
        for x in point:
            idx = idx * q + x
        return self.table[idx]


def _directions(q: int, m: int) -> np.ndarray:
    """Normal vectors of hyperplanes up to scalars: first nonzero entry is 1."""
    out = []
    for lead in range(m):
        for rest in itertools.product(range(q), repeat=m - lead - 1):
            out.append((0,) * lead + (1,) + rest)
    return np.array(out, dtype=np.int64).reshape(len(out), m)


def _affine_form(alpha, beta: int, inputs, k1: int, spec: AlgebraSpec, zero: Term) -> Term:
    """sum alpha_i * inputs[i] - beta * e_{k1}1 (reads only level k1)."""
    q = spec.p(k1)
    parts = [scale_term(int(a), inputs[i], q, zero) for i, a in enumerate(alpha) if a % q]
    if beta % q:
        parts.append(Const(spec.unit(k1, -beta)))
    return sum_terms(parts, zero)


def two_level(points: dict, arity: int, k: int, spec: AlgebraSpec, inputs=None) -> Term:
    """Polynomial mapping (e_{k+1}D)^arity -> e_kD agreeing with a sparse table.

    ``points`` maps level-(k+1) residue tuples to level-k residues; absent
    points map to 0.  The term reads only level k+1 of its inputs.
    """
    q = spec.p(k + 1)
    p = spec.p(k)
    zero = Const(spec.zero)
    if inputs is None:
        inputs = [Var(i) for i in range(arity)]
    support = [(pt, val % p) for pt, val in points.items() if val % p]
    if not support:
        return zero
    m = arity
    if m == 0:
        return Const(spec.unit(k, support[0][1]))
    if q ** m > MAX_POINTS:
        raise CeilingError(f"{q}^{m} points exceed the ceiling {MAX_POINTS}", required=q ** m)
    if p == q and m > 1:
        raise SpecMismatch(f"levels {k},{k + 1} share the prime {p}; the hyperplane construction needs p != q")
    inv = pow(q ** (m - 1), -1, p)
    n2 = (q ** (m - 1) - 1) // (q - 1)
    total = sum(val for _, val in support)
    pts = np.array([pt for pt, _ in support], dtype=np.int64).reshape(len(support), m)
    vals = np.array([val for _, val in support], dtype=np.int64)
    dirs = _directions(q, m)
    offsets = (pts @ dirs.T) % q  # (support, directions)
    weights = np.zeros((len(dirs), q), dtype=np.int64)
    for b in range(q):
        weights[:, b] = ((offsets == b) * vals[:, None]).sum(axis=0) % p
    coeff = (weights * inv) % p
    const = (int(coeff.sum()) - inv * n2 * total) % p
    groups: dict[int, list[Term]] = {}
    for d_idx, b in zip(*np.nonzero(coeff)):
        form = _affine_form(dirs[d_idx], int(b), inputs, k + 1, spec, zero)
        groups.setdefault(int(coeff[d_idx, b]), []).append(V(k, form))
    parts = []
    if const:
        parts.append(Const(spec.unit(k, const)))
    for c in sorted(groups):
        parts.append(scale_term(-c, sum_terms(groups[c], zero), p, zero))
    return sum_terms(parts, zero)


def one_hot(x: Term, lam: int, source: int, target: int, spec: AlgebraSpec) -> Term:
    """e_{target+1}1 if level ``source`` of x equals lam, else 0."""
    shifted = Add(x, Const(spec.unit(source, -lam))) if lam else x
    inner = shifted
    for j in range(source - 1, target, -1):
        inner = V(j, inner)
    return Add(Const(spec.unit(target + 1)), Neg(inner))


def represent(g: LevelFunction, spec: AlgebraSpec, max_arity: int = MAX_ARITY) -> Term:
    """Term over Var(0..m-1) computing g on (e_source D)^m."""
    g.check(spec)
    m = g.arity
    if m > max_arity:
        raise CeilingError(f"arity {m} exceeds the ceiling {max_arity}", required=m)
    k, l = g.target, g.source
    ql = spec.p(l)
    if l == k + 1:
        points = {pt: val for pt, val in zip(itertools.product(range(ql), repeat=m), g.table) if val}
        return two_level(points, m, k, spec)
    width = ql - 1
    inputs = [one_hot(Var(i), lam, l, k, spec) for i in range(m) for lam in range(1, ql)]
    points = {}
    for pt, val in zip(itertools.product(range(ql), repeat=m), g.table):
        if val:
            bits = tuple(1 if pt[i] == lam else 0 for i in range(m) for lam in range(1, ql))
            points[bits] = val
    return two_level(points, m * width, k, spec, inputs)


def represent_circuit(g: LevelFunction, spec: AlgebraSpec, max_arity: int = MAX_ARITY) -> Circuit:
    return Circuit.from_term(represent(g, spec, max_arity), spec, g.arity)


def size_envelope(g: LevelFunction, spec: AlgebraSpec, constant: int = 8) -> int:
    """C * p_source^{2m} * m * p_target, the recorded size contract."""
    return constant * spec.p(g.source) ** (2 * g.arity) * max(g.arity, 1) * spec.p(g.target)


# -- gadgets -----------------------------------------------------------------------


@lru_cache(maxsize=None)
def build_and(s: int, k: int, spec: AlgebraSpec, max_arity: int = MAX_ARITY) -> Term:
    """AND^s_k : (e_{k+1}D)^s -> e_kD, e_k1 iff every input is nonzero."""
    spec.require_alternating()
    spec.check_level(k, 1, spec.h - 1)
    g = LevelFunction.from_callable(spec, k + 1, k, s, lambda pt: int(all(pt)))
    return represent(g, spec, max_arity)


def build_and_tower(s: int, spec: AlgebraSpec, max_arity: int = MAX_ARITY) -> Term:
    """s^{h-2}-ary conjunction (e_{h-1}D)^{s^{h-2}} -> e_1D built from AND^s_k layers.

    For h = 2 this is the single variable itself.
    """
    spec.require_alternating()
    h = spec.h
    layer = [Var(i) for i in range(s ** (h - 2))]
    for k in range(h - 2, 0, -1):
        gadget = build_and(s, k, spec, max_arity)
        layer = [substitute(gadget, layer[i * s:(i + 1) * s]) for i in range(len(layer) // s)]
    return layer[0]


def cnf_function(part: CnfFormula, spec: AlgebraSpec) -> LevelFunction:
    h = spec.h
    return LevelFunction.from_callable(
        spec, h, h - 1, part.n, lambda pt: int(part.evaluate([x != 0 for x in pt])))


def build_cnf_gadget(part: CnfFormula, spec: AlgebraSpec, max_arity: int = MAX_ARITY) -> Term:
    """CNF_part : (e_hD)^{n} -> e_{h-1}D, e_{h-1}1 iff the b-image satisfies ``part``.

    Every variable enters through e_h.
    """
    spec.require_alternating()
    if part.n > max_arity:
        raise CeilingError(f"part has {part.n} variables, ceiling is {max_arity}", required=part.n)
    term = represent(cnf_function(part, spec), spec, max_arity)
    return substitute(term, [E(spec.h, Var(i)) for i in range(part.n)])
