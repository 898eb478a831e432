"""Per-level canonical representation of polynomials of D.

For every level k the k-th component of a polynomial is::

    e_k t(x) = c + sum_i lam_i * e_k(x_i) + sum_s kappa_s * v_k s(e^{k+1} x)

with each inner ``s`` kept only through its level-(k+1) component, because
``v_k s = v_k e_{k+1} s``.  A ``LevelForm`` holds one such component; a
``CanonicalForm`` holds all h of them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraSpec, DElem
from .errors import ArityError
from .terms import Circuit, Term, as_circuit


class LevelForm:
    """``c + sum lam_i e_k(x_i) + sum kappa v_k(inner)`` on one level.

    Immutable.  ``vterms`` is a tuple of ``(kappa, inner)`` with nonzero
    kappa, inner forms living on ``level + 1``, no two inners equal.
    """

    __slots__ = ("level", "const", "lin", "vterms", "_hash")

    def __init__(self, level: int, const: int, lin: tuple, vterms: tuple = ()):
        self.level = level
        self.const = const
        self.lin = lin
        self.vterms = vterms
        self._hash = hash((level, const, lin, tuple((kappa, s._hash) for kappa, s in vterms)))

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, LevelForm) or self._hash != other._hash:
            return False
        return (self.level == other.level and self.const == other.const
                and self.lin == other.lin and self.vterms == other.vterms)

    def __repr__(self):
        return f"LevelForm(level={self.level}, const={self.const}, lin={self.lin}, vterms={len(self.vterms)})"

    @property
    def is_constant(self) -> bool:
        return not self.vterms and not any(self.lin)

    def size(self) -> int:
        """Stored entries: the constant, nonzero coefficients, and each v-term
        with its inner form (counted per occurrence)."""
        memo = {}

        def go(f):
            got = memo.get(id(f))
            if got is None:
                got = 1 + sum(1 for x in f.lin if x) + sum(1 + go(s) for _, s in f.vterms)
                memo[id(f)] = got
            return got

        return go(self)

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "const": self.const,
            "lin": list(self.lin),
            "vterms": [{"kappa": kappa, "form": s.to_json()} for kappa, s in self.vterms],
        }

    @classmethod
    def from_json(cls, data: dict) -> "LevelForm":
        vterms = tuple((int(v["kappa"]), cls.from_json(v["form"])) for v in data["vterms"])
        return cls(int(data["level"]), int(data["const"]), tuple(int(x) for x in data["lin"]), vterms)


class _Builder:
    """Arithmetic on level forms with interning, so equal inners are one object."""

    def __init__(self, spec: AlgebraSpec, arity: int):
        self.spec = spec
        self.arity = arity
        self.zero_lin = (0,) * arity
        self.intern = {}
        self.zeros = [None] + [self.make(k, 0, self.zero_lin, ()) for k in range(1, spec.h + 1)]

    def make(self, level, const, lin, vterms) -> LevelForm:
        f = LevelForm(level, const, lin, vterms)
        return self.intern.setdefault(f, f)

    def _sorted(self, merged: dict) -> tuple:
        items = [(kappa, s) for s, kappa in merged.items() if kappa]
        items.sort(key=lambda kv: kv[1]._hash)
        return tuple(items)

    def add(self, a: LevelForm, b: LevelForm) -> LevelForm:
        if not (b.const or b.vterms or any(b.lin)):
            return a
        if not (a.const or a.vterms or any(a.lin)):
            return b
        p = self.spec.p(a.level)
        merged = {s: kappa for kappa, s in a.vterms}
        for kappa, s in b.vterms:
            merged[s] = (merged.get(s, 0) + kappa) % p
        lin = tuple((x + y) % p for x, y in zip(a.lin, b.lin))
        return self.make(a.level, (a.const + b.const) % p, lin, self._sorted(merged))

    def scale(self, lam: int, a: LevelForm) -> LevelForm:
        p = self.spec.p(a.level)
        lam %= p
        if lam == 0:
            return self.zeros[a.level]
        if lam == 1:
            return a
        return self.make(a.level, (lam * a.const) % p, tuple((lam * x) % p for x in a.lin),
                         tuple((lam * kappa % p, s) for kappa, s in a.vterms))

    def vterm(self, level: int, inner: LevelForm) -> LevelForm:
        """``v_level(inner)``, folding constant inners."""
        if inner.is_constant:
            return self.make(level, 1 if inner.const else 0, self.zero_lin, ())
        return self.make(level, 0, self.zero_lin, ((1, inner),))


@dataclass(frozen=True)
class CanonicalForm:
    spec: AlgebraSpec
    arity: int
    levels: tuple  # LevelForm for levels 1..h (index 0 is level 1)

    def level(self, k: int) -> LevelForm:
        self.spec.check_level(k, 1, self.spec.h)
        return self.levels[k - 1]

    def size(self) -> int:
        return sum(f.size() for f in self.levels)

    def to_json(self) -> dict:
        return {
            "primes": list(self.spec.primes),
            "arity": self.arity,
            "levels": [f.to_json() for f in self.levels],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CanonicalForm":
        spec = AlgebraSpec(tuple(data["primes"]))
        return cls(spec, int(data["arity"]), tuple(LevelForm.from_json(f) for f in data["levels"]))


def canonicalize(c, spec: AlgebraSpec | None = None) -> CanonicalForm:
    """Canonical form of a circuit (or term), one memo entry per circuit node."""
    circuit = as_circuit(c, spec)
    spec = circuit.spec
    h = spec.h
    n = circuit.arity
    b = _Builder(spec, n)
    zeros = tuple(b.zeros[1:])
    forms = []
    for node in circuit.nodes:
        kind = node[0]
        if kind == "var":
            lin = tuple(1 if i == node[1] else 0 for i in range(n))
            out = tuple(b.make(k, 0, lin, ()) for k in range(1, h + 1))
        elif kind == "const":
            coords = spec.decode(node[1])
            out = tuple(b.make(k, coords[k - 1], b.zero_lin, ()) for k in range(1, h + 1))
        elif kind == "add":
            x, y = forms[node[1]], forms[node[2]]
            out = tuple(b.add(fx, fy) for fx, fy in zip(x, y))
        elif kind == "neg":
            out = tuple(b.scale(-1, f) for f in forms[node[1]])
        elif kind == "e":
            j = node[1]
            src = forms[node[2]]
            out = tuple(src[k - 1] if k == j else zeros[k - 1] for k in range(1, h + 1))
        else:
            j = node[1]
            inner = forms[node[2]][j]  # level j+1 component
            vt = b.vterm(j, inner)
            out = tuple(vt if k == j else zeros[k - 1] for k in range(1, h + 1))
        forms.append(out)
    return CanonicalForm(spec, n, forms[-1])


def size_bound(circuit_size: int, h: int, constant: int = 64) -> int:
    return constant * circuit_size ** (h * h)


# -- evaluation ------------------------------------------------------------------


def _eval_level(f: LevelForm, spec: AlgebraSpec, digits, memo):
    """Value (residue, scalar or array) of a level form; ``digits[i][k-1]`` is
    the level-k coordinate of variable i."""
    got = memo.get(id(f))
    if got is not None:
        return got
    p = spec.p(f.level)
    acc = f.const
    for i, lam in enumerate(f.lin):
        if lam:
            acc = acc + lam * digits[i][f.level - 1]
    for kappa, s in f.vterms:
        inner = _eval_level(s, spec, digits, memo)
        acc = acc + kappa * (inner != 0)
    acc = acc % p
    memo[id(f)] = acc
    return acc


def evaluate_canonical(f: CanonicalForm, assignment) -> DElem:
    assignment = tuple(assignment)
    if len(assignment) != f.arity:
        raise ArityError(f"expected {f.arity} values, got {len(assignment)}")
    digits = [a.coords if isinstance(a, DElem) else tuple(a) for a in assignment]
    memo = {}
    coords = tuple(int(_eval_level(lf, f.spec, digits, memo)) for lf in f.levels)
    return DElem(f.spec, coords)


def evaluate_canonical_codes(f: CanonicalForm, codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim != 2 or codes.shape[1] != f.arity:
        raise ArityError(f"expected assignments of length {f.arity}, got shape {codes.shape}")
    digits = [f.spec.digits(codes[:, i]) for i in range(f.arity)]
    memo = {}
    values = []
    for lf in f.levels:
        val = _eval_level(lf, f.spec, digits, memo)
        values.append(np.broadcast_to(np.asarray(val, dtype=np.int64), (codes.shape[0],)))
    return f.spec.undigits(values)


def evaluate_level_codes(lf: LevelForm, spec: AlgebraSpec, codes: np.ndarray) -> np.ndarray:
    """Residue of one level form on every assignment row."""
    codes = np.asarray(codes, dtype=np.int64)
    digits = [spec.digits(codes[:, i]) for i in range(codes.shape[1])]
    val = _eval_level(lf, spec, digits, {})
    return np.broadcast_to(np.asarray(val, dtype=np.int64), (codes.shape[0],))


# -- specialization to a single free level ---------------------------------------


def specialize(f: LevelForm, spec: AlgebraSpec, fixed, free_level: int, builder: _Builder | None = None) -> LevelForm:
    """Substitute ``fixed[i][j-1]`` for every level-j coordinate with
    ``j != free_level``.  The result depends only on level-``free_level``
    coordinates; forms above the free level collapse to constants."""
    arity = len(f.lin)
    b = builder or _Builder(spec, arity)
    memo = {}

    def go(g: LevelForm) -> LevelForm:
        got = memo.get(id(g))
        if got is not None:
            return got
        k = g.level
        p = spec.p(k)
        if k > free_level:
            val = int(_eval_level(g, spec, fixed, {}))
            out = b.make(k, val, b.zero_lin, ())
        else:
            const = g.const
            lin = b.zero_lin
            if k == free_level:
                lin = g.lin
            else:
                const += sum(lam * fixed[i][k - 1] for i, lam in enumerate(g.lin))
            merged = {}
            for kappa, s in g.vterms:
                s2 = go(s)
                if s2.is_constant:
                    const += kappa * (1 if s2.const else 0)
                else:
                    merged[s2] = (merged.get(s2, 0) + kappa) % p
            out = b.make(k, const % p, lin, b._sorted(merged))
        memo[id(g)] = out
        return out

    return go(f)
