"""The symmetric group S4 and a 3-CNF reduction to equations over it.

Permutations act on points 1..4 and are composed left to right: ``a * b``
applies a first.  The commutator is ``[x, y] = x^-1 y^-1 x y``.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .cnf import CnfFormula
from .errors import ArityError, ParseError

_PERMS = tuple(itertools.permutations(range(4)))
_INDEX = {p: i for i, p in enumerate(_PERMS)}


@dataclass(frozen=True)
class S4Elem:
    """``images[i]`` is the image of point i+1, minus one."""

    images: tuple

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if sorted(images) != [0, 1, 2, 3]:
            raise ValueError(f"{self.images} is not a permutation of 4 points")
        object.__setattr__(self, "images", images)

    @property
    def index(self) -> int:
        return _INDEX[self.images]

    @classmethod
    def from_index(cls, i: int) -> "S4Elem":
        return ELEMENTS[i]

    @classmethod
    def identity(cls) -> "S4Elem":
        return cls((0, 1, 2, 3))

    @classmethod
    def from_cycles(cls, text: str) -> "S4Elem":
        """Parse ``(12)(34)``, ``(1 2 3)``, ``()`` or ``id``."""
        text = text.strip()
        if text in ("", "id", "()", "e"):
            return cls.identity()
        if not re.fullmatch(r"(\(\s*[1-4](\s*,?\s*[1-4])*\s*\))+", text):
            raise ValueError(f"bad cycle notation {text!r}")
        images = list(range(4))
        for cyc in reversed(re.findall(r"\(([^)]*)\)", text)):
            pts = [int(c) - 1 for c in re.findall(r"[1-4]", cyc)]
            if len(set(pts)) != len(pts):
                raise ValueError(f"repeated point in cycle {cyc!r}")
            step = {a: b for a, b in zip(pts, pts[1:] + pts[:1])}
            images = [step.get(images[i], images[i]) for i in range(4)]
        return cls(tuple(images))

    def __mul__(self, other: "S4Elem") -> "S4Elem":
        return S4Elem(tuple(other.images[x] for x in self.images))

    def inverse(self) -> "S4Elem":
        inv = [0] * 4
        for i, x in enumerate(self.images):
            inv[x] = i
        return S4Elem(tuple(inv))

    def __call__(self, point: int) -> int:
        return self.images[point - 1] + 1

    def cycles(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for start in range(4):
            if start in seen:
                continue
            cyc, x = [], start
            while x not in seen:
                seen.add(x)
                cyc.append(x + 1)
                x = self.images[x]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    def __str__(self):
        cyc = self.cycles()
        return "".join("(" + "".join(map(str, c)) + ")" for c in cyc) if cyc else "id"

    def __repr__(self):
        return f"S4Elem({self})"

    @property
    def parity(self) -> int:
        """0 for even, 1 for odd."""
        return sum(len(c) - 1 for c in self.cycles()) % 2


ELEMENTS = tuple(S4Elem(p) for p in _PERMS)
IDENTITY = S4Elem.identity()
TAU = S4Elem.from_cycles("(12)")
SIGMA = S4Elem.from_cycles("(123)")
C_TARGET = S4Elem.from_cycles("(12)(34)")
V4 = frozenset(S4Elem.from_cycles(t) for t in ("id", "(12)(34)", "(13)(24)", "(14)(23)"))


def compose(a: S4Elem, b: S4Elem) -> S4Elem:
    return a * b


def inverse(a: S4Elem) -> S4Elem:
    return a.inverse()


def commutator(a: S4Elem, b: S4Elem) -> S4Elem:
    return a.inverse() * b.inverse() * a * b


def parity(a: S4Elem) -> int:
    return a.parity


def in_V(a: S4Elem) -> bool:
    return a in V4


def in_A4(a: S4Elem) -> bool:
    return a.parity == 0


def b_value(a: S4Elem) -> bool:
    """The boolean read off a group element: true on A4."""
    return in_A4(a)


# -- tables for vectorized evaluation ----------------------------------------------

MUL = np.array([[(a * b).index for b in ELEMENTS] for a in ELEMENTS], dtype=np.int64)
INV = np.array([a.inverse().index for a in ELEMENTS], dtype=np.int64)
PARITY = np.array([a.parity for a in ELEMENTS], dtype=np.int64)
IN_V = np.array([a in V4 for a in ELEMENTS])


def _comm_table() -> np.ndarray:
    out = np.empty((24, 24), dtype=np.int64)
    for a in ELEMENTS:
        for b in ELEMENTS:
            out[a.index, b.index] = commutator(a, b).index
    return out


COMM = _comm_table()


def subgroup_closure(gens) -> frozenset:
    elems = {IDENTITY} | set(gens)
    frontier = list(elems)
    while frontier:
        nxt = []
        for a in frontier:
            for b in list(elems):
                for c in (a * b, b * a):
                    if c not in elems:
                        elems.add(c)
                        nxt.append(c)
        frontier = nxt
    return frozenset(elems)


def commutator_subgroup(G, H=None) -> frozenset:
    """[G, H]: the subgroup generated by all commutators [g, h]."""
    H = G if H is None else H
    return subgroup_closure({commutator(g, h) for g in G for h in H})


S4 = frozenset(ELEMENTS)
A4 = frozenset(a for a in ELEMENTS if a.parity == 0)


# -- words --------------------------------------------------------------------------


class GroupWord:
    __slots__ = ()


@dataclass(frozen=True, eq=False)
class WVar(GroupWord):
    index: int
    name: str = ""


@dataclass(frozen=True, eq=False)
class WConst(GroupWord):
    value: S4Elem


@dataclass(frozen=True, eq=False)
class WMul(GroupWord):
    left: GroupWord
    right: GroupWord


@dataclass(frozen=True, eq=False)
class WInv(GroupWord):
    child: GroupWord


@dataclass(frozen=True, eq=False)
class WComm(GroupWord):
    left: GroupWord
    right: GroupWord


def _kids(w: GroupWord) -> tuple:
    if isinstance(w, (WMul, WComm)):
        return (w.left, w.right)
    if isinstance(w, WInv):
        return (w.child,)
    return ()


def _postorder(root: GroupWord):
    seen, out, stack = set(), [], [(root, False)]
    while stack:
        w, done = stack.pop()
        if done:
            out.append(w)
            continue
        if id(w) in seen:
            continue
        seen.add(id(w))
        stack.append((w, True))
        stack.extend((c, False) for c in reversed(_kids(w)))
    return out


def word_size(w: GroupWord) -> int:
    """Distinct nodes (the word as a DAG)."""
    return len(_postorder(w))


def word_arity(w: GroupWord) -> int:
    return 1 + max((n.index for n in _postorder(w) if isinstance(n, WVar)), default=-1)


def evaluate_word_batch(w: GroupWord, values: np.ndarray) -> np.ndarray:
    """``values`` has shape (N, arity) of element indices; returns (N,) indices."""
    values = np.asarray(values, dtype=np.int64)
    out = {}
    n_rows = values.shape[0]
    for node in _postorder(w):
        if isinstance(node, WVar):
            if node.index >= values.shape[1]:
                raise ArityError(f"word reads variable {node.index}, only {values.shape[1]} given")
            r = values[:, node.index]
        elif isinstance(node, WConst):
            r = np.full(n_rows, node.value.index, dtype=np.int64)
        elif isinstance(node, WMul):
            r = MUL[out[id(node.left)], out[id(node.right)]]
        elif isinstance(node, WInv):
            r = INV[out[id(node.child)]]
        else:
            r = COMM[out[id(node.left)], out[id(node.right)]]
        out[id(node)] = r
    return out[id(w)]


def evaluate_word(w: GroupWord, assignment) -> S4Elem:
    row = np.array([[a.index for a in assignment]], dtype=np.int64).reshape(1, len(assignment))
    return ELEMENTS[int(evaluate_word_batch(w, row)[0])]


def word_to_text(w: GroupWord) -> str:
    """Cycle-notation text: ``[a,b]`` commutators, ``a*b`` products, ``a^-1`` inverses."""
    memo = {}
    for node in _postorder(w):
        if isinstance(node, WVar):
            s = node.name or f"v{node.index}"
        elif isinstance(node, WConst):
            s = str(node.value)
        elif isinstance(node, WMul):
            s = f"({memo[id(node.left)]}*{memo[id(node.right)]})"
        elif isinstance(node, WInv):
            s = f"{memo[id(node.child)]}^-1"
        else:
            s = f"[{memo[id(node.left)]},{memo[id(node.right)]}]"
        memo[id(node)] = s
    return memo[id(w)]


def parse_word(text: str, names: dict | None = None) -> GroupWord:
    """Inverse of ``word_to_text``.

    Variables follow the reduction's layout: ``y1..y4`` are 0..3, ``x<i>`` is
    3+i and ``v<i>`` is i; ``names`` overrides any of these.
    """
    names = names or {}
    pos = 0
    src = text.replace(" ", "")

    def err(msg):
        raise ParseError(msg, 1, pos + 1)

    def atom():
        nonlocal pos
        if pos >= len(src):
            err("unexpected end of word")
        ch = src[pos]
        if ch == "[":
            pos += 1
            a = expr()
            if src[pos:pos + 1] != ",":
                err("expected ','")
            pos += 1
            b = expr()
            if src[pos:pos + 1] != "]":
                err("expected ']'")
            pos += 1
            node = WComm(a, b)
        elif ch == "(":
            m = re.match(r"(\([1-4]+\))+", src[pos:])
            if m:
                node = WConst(S4Elem.from_cycles(m.group(0)))
                pos += m.end()
            else:
                pos += 1
                node = expr()
                if src[pos:pos + 1] != ")":
                    err("expected ')'")
                pos += 1
        elif src.startswith("id", pos):
            node = WConst(IDENTITY)
            pos += 2
        else:
            m = re.match(r"[A-Za-z_][A-Za-z_0-9]*", src[pos:])
            if not m:
                err(f"unexpected {ch!r}")
            name = m.group(0)
            pos += m.end()
            if name in names:
                node = WVar(names[name], name)
            elif re.fullmatch(r"y[1-4]", name):
                node = WVar(int(name[1:]) - 1, name)
            elif re.fullmatch(r"x[1-9]\d*", name):
                node = WVar(3 + int(name[1:]), name)
            elif re.fullmatch(r"v\d+", name):
                node = WVar(int(name[1:]), name)
            else:
                err(f"unknown variable {name!r}")
        while src.startswith("^-1", pos):
            pos += 3
            node = WInv(node)
        return node

    def expr():
        nonlocal pos
        node = atom()
        while src[pos:pos + 1] == "*":
            pos += 1
            node = WMul(node, atom())
        return node

    out = expr()
    if pos != len(src):
        err("trailing characters")
    return out


# -- the reduction ---------------------------------------------------------------


def alpha_circ(y: GroupWord, xs) -> GroupWord:
    """[[...[y, x_1], ...], x_s]."""
    out = y
    for x in xs:
        out = WComm(out, x)
    return out


def alpha(s: int) -> GroupWord:
    """alpha_s over variables y1..y4 (indices 0..3) and x_1..x_s (indices 4..3+s)."""
    if s < 1:
        raise ValueError("alpha needs s >= 1")
    ys = [WVar(i, f"y{i + 1}") for i in range(4)]
    inner = WComm(WComm(ys[0], ys[1]), WComm(ys[2], ys[3]))
    return alpha_circ(inner, [WVar(4 + i, f"x{i + 1}") for i in range(s)])


def build_clause_part(part: CnfFormula, variables=None) -> GroupWord:
    """Word in A4 that leaves V exactly when the A4-reading of the inputs satisfies ``part``.

    One nested commutator per satisfying row T of the part's truth table:
    w_T = [g_1(x_1), [g_2(x_2), [..., [g_n(x_n), (123)]]]] with g_i(x) = x*(12)
    if T_i is true and x otherwise; the word is the product of the w_T.
    """
    n = part.n
    if variables is None:
        variables = [WVar(i) for i in range(n)]
    tau, sigma = WConst(TAU), WConst(SIGMA)
    shifted = [WMul(v, tau) for v in variables]
    out = None
    for row in itertools.product((False, True), repeat=n):
        if not part.evaluate(row):
            continue
        w = sigma
        for i in reversed(range(n)):
            w = WComm(shifted[i] if row[i] else variables[i], w)
        out = w if out is None else WMul(out, w)
    return out if out is not None else WConst(IDENTITY)


@dataclass
class S4Reduction:
    formula: CnfFormula
    word: GroupWord
    s: int
    parts: list        # list of (clause indices, global variable indices, local formula)
    gadgets: list      # clause-part words over the global x variables (indices 4..)
    target: S4Elem = C_TARGET

    @property
    def arity(self) -> int:
        return 4 + self.formula.n

    def metadata(self) -> dict:
        return {
            "n": self.formula.n,
            "m": self.formula.m,
            "s": self.s,
            "parts": len(self.parts),
            "part_clauses": [p[0] for p in self.parts],
            "word_size": word_size(self.word),
            "target": str(self.target),
            "variables": ["y1", "y2", "y3", "y4"] + [f"x{i + 1}" for i in range(self.formula.n)],
        }


def reduce_s4(phi: CnfFormula) -> S4Reduction:
    """t_phi(y1..y4, x_1..x_n) = alpha_s(y, p_1(x), ..., p_s(x)); phi is satisfiable iff t_phi = (12)(34) is solvable.

    Clauses are packed in order, s = ceil(sqrt(m)) per part; unused slots get
    the constant (123), which lies in A4 outside V.
    """
    if phi.m < 1:
        raise ValueError("the reduction needs at least one clause")
    s = math.isqrt(phi.m - 1) + 1
    xs = [WVar(4 + i, f"x{i + 1}") for i in range(phi.n)]
    parts, gadgets = [], []
    for start in range(0, phi.m, s):
        idx = list(range(start, min(start + s, phi.m)))
        local, used = phi.restrict_to(idx)
        parts.append((idx, used, local))
        gadgets.append(build_clause_part(local, [xs[g] for g in used]))
    slots = gadgets + [WConst(SIGMA)] * (s - len(gadgets))
    ys = [WVar(i, f"y{i + 1}") for i in range(4)]
    inner = WComm(WComm(ys[0], ys[1]), WComm(ys[2], ys[3]))
    return S4Reduction(phi, alpha_circ(inner, slots), s, parts, gadgets)


@lru_cache(maxsize=1)
def decomposition_table() -> dict:
    """u -> (y1, y2, y3, y4) with [[y1,y2],[y3,y4]] = u, first hit in S4^4 scan order.

    Also checks that every value of the double commutator lies in V.
    """
    pairs = COMM.reshape(-1)  # index y1*24 + y2
    outer = COMM[pairs[:, None], pairs[None, :]]
    values = set(np.unique(outer).tolist())
    if not values <= {a.index for a in V4}:
        raise AssertionError("double commutator left V")
    table = {}
    for u in V4:
        flat = int(np.argmax(outer.reshape(-1) == u.index))
        if outer.reshape(-1)[flat] != u.index:
            continue
        p, q = divmod(flat, 576)
        table[u] = (ELEMENTS[p // 24], ELEMENTS[p % 24], ELEMENTS[q // 24], ELEMENTS[q % 24])
    return table


def _v_order():
    return sorted(V4, key=lambda a: a.index)


def solve_s4_witness(red: S4Reduction, bits) -> tuple:
    """Group assignment (y1..y4, x_1..x_n) with t_phi = c, from a satisfying boolean assignment."""
    bits = tuple(bool(b) for b in bits)
    if not red.formula.evaluate(bits):
        raise ValueError("the boolean assignment does not satisfy the formula")
    xs = [SIGMA if b else TAU for b in bits]
    pad = [IDENTITY] * 4
    vals = [evaluate_word(g, pad + xs) for g in red.gadgets]
    vals += [SIGMA] * (red.s - len(vals))
    table = decomposition_table()
    for u in _v_order():
        acc = u
        for a in vals:
            acc = commutator(acc, a)
        if acc == red.target:
            assignment = tuple(table[u]) + tuple(xs)
            if evaluate_word(red.word, assignment) != red.target:
                raise AssertionError("constructed witness does not evaluate to the target")
            return assignment
    raise AssertionError("no u in V reaches the target; the construction is broken")


def coset_solvable(red: S4Reduction) -> tuple[bool, tuple | None]:
    """Decide t_phi = c by exhausting u in V and the parity pattern of x.

    Returns (solvable, (u, pattern)) for the first hit.
    """
    n = red.formula.n
    reps = np.array([[SIGMA.index if not odd else TAU.index for odd in pat]
                     for pat in itertools.product((0, 1), repeat=n)], dtype=np.int64).reshape(1 << n, n)
    pad = np.zeros((reps.shape[0], 4), dtype=np.int64)
    gvals = [evaluate_word_batch(g, np.concatenate([pad, reps], axis=1)) for g in red.gadgets]
    gvals += [np.full(reps.shape[0], SIGMA.index, dtype=np.int64)] * (red.s - len(gvals))
    for u in _v_order():
        acc = np.full(reps.shape[0], u.index, dtype=np.int64)
        for g in gvals:
            acc = COMM[acc, g]
        hit = np.flatnonzero(acc == red.target.index)
        if hit.size:
            pat = tuple(int(x) for x in reps[hit[0]] == TAU.index)
            return True, (u, pat)
    return False, None


def coset_factored_values(red: S4Reduction, values: np.ndarray) -> np.ndarray:
    """t_phi computed from u = [[y1,y2],[y3,y4]] and the parity of each x only."""
    values = np.asarray(values, dtype=np.int64)
    u = COMM[COMM[values[:, 0], values[:, 1]], COMM[values[:, 2], values[:, 3]]]
    xs = values[:, 4:]
    reps = np.where(PARITY[xs] == 1, TAU.index, SIGMA.index)
    pad = np.zeros((values.shape[0], 4), dtype=np.int64)
    full = np.concatenate([pad, reps], axis=1)
    acc = u
    for g in red.gadgets:
        acc = COMM[acc, evaluate_word_batch(g, full)]
    for _ in range(red.s - len(red.gadgets)):
        acc = COMM[acc, np.full_like(acc, SIGMA.index)]
    return acc
