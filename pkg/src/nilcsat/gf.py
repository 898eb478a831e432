"""Linear algebra over GF(q) and isolating a point of a set by an affine subspace."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .algebra import is_prime


@dataclass
class AffineSystem:
    """Equations ``sum_i alpha_i x_i = a`` over GF(q)^n.

    After ``row_reduce`` the rows are in reduced echelon form, ``pivots[r]``
    is the pivot column of row r, and ``free`` lists the other columns.
    """

    q: int
    n: int
    equations: list[tuple[tuple[int, ...], int]] = field(default_factory=list)
    pivots: list[int] | None = None

    def __post_init__(self):
        if not is_prime(self.q):
            raise ValueError(f"{self.q} is not prime")
        self.equations = [(tuple(int(x) % self.q for x in alpha), int(a) % self.q)
                          for alpha, a in self.equations]
        for alpha, _ in self.equations:
            if len(alpha) != self.n:
                raise ValueError(f"equation of length {len(alpha)} in dimension {self.n}")

    def add(self, alpha, a) -> "AffineSystem":
        return AffineSystem(self.q, self.n, self.equations + [(tuple(alpha), a)])

    @property
    def codim(self) -> int:
        return len(row_reduce(self).equations)

    @property
    def free(self) -> list[int]:
        piv = set(self.pivots if self.pivots is not None else row_reduce(self).pivots)
        return [i for i in range(self.n) if i not in piv]

    def contains(self, x) -> bool:
        q = self.q
        return all(sum(c * v for c, v in zip(alpha, x)) % q == a for alpha, a in self.equations)

    def parametrization(self):
        """For each pivot j: (j, {i: alpha^j_i for free i}, beta^j) with
        x_j = sum_i alpha^j_i x_i + beta^j on the subspace."""
        red = row_reduce(self)
        if red is None:
            raise ValueError("inconsistent system")
        q = self.q
        free = red.free
        out = []
        for (alpha, a), j in zip(red.equations, red.pivots):
            out.append((j, {i: (-alpha[i]) % q for i in free if alpha[i]}, a))
        return out

    def to_json(self) -> dict:
        return {"q": self.q, "n": self.n,
                "equations": [{"alpha": list(alpha), "a": a} for alpha, a in self.equations]}


def row_reduce(system: AffineSystem) -> AffineSystem | None:
    """Reduced echelon form; ``None`` if the system is inconsistent."""
    q, n = system.q, system.n
    rows = [list(alpha) + [a] for alpha, a in system.equations]
    pivots = []
    r = 0
    for col in range(n):
        pick = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if pick is None:
            continue
        rows[r], rows[pick] = rows[pick], rows[r]
        inv = pow(rows[r][col], -1, q)
        rows[r] = [(x * inv) % q for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [(x - f * y) % q for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for row in rows[r:]:
        if row[n]:
            return None
    out = AffineSystem(q, n, [(tuple(row[:n]), row[n]) for row in rows[:r]])
    out.pivots = pivots
    return out


def gauss_solve(W, a, q: int):
    """One solution of ``W x = a`` over GF(q) (free variables set to 0), or None."""
    if not W:
        return ()
    n = len(W[0])
    red = row_reduce(AffineSystem(q, n, list(zip(map(tuple, W), a))))
    if red is None:
        return None
    x = [0] * n
    for (alpha, b), j in zip(red.equations, red.pivots):
        x[j] = b
    return tuple(x)


def _independent_subset(vectors, q: int, want: int) -> list:
    """Greedily pick up to ``want`` linearly independent vectors, in order."""
    basis = []  # (pivot col, reduced row)
    chosen = []
    for vec in vectors:
        row = list(vec)
        for col, b in basis:
            if row[col]:
                f = row[col]
                row = [(x - f * y) % q for x, y in zip(row, b)]
        col = next((i for i, x in enumerate(row) if x), None)
        if col is None:
            continue
        inv = pow(row[col], -1, q)
        basis.append((col, [(x * inv) % q for x in row]))
        chosen.append(vec)
        if len(chosen) == want:
            break
    return chosen


@dataclass
class IsolationStep:
    phase: str       # "big" or "small"
    alpha: tuple
    a: int
    before: int
    after: int


def isolate_point(Z, q: int, n: int | None = None, trace: list | None = None):
    """Affine subspace H with ``Z & H == {z}``; returns ``(H, z)``.

    While |Z| > q^{q-1} the set holds q independent vectors w_1..w_q; solve
    W alpha = (0..q-1) and cut by the smallest nonempty class of
    ``alpha . x``.  Below that, cut by the smallest nonempty class of a
    coordinate on which Z is not constant.
    """
    Z = sorted({tuple(int(x) % q for x in z) for z in Z})
    if not Z:
        raise ValueError("Z must be nonempty")
    if not is_prime(q):
        raise ValueError(f"{q} is not prime")
    n = len(Z[0]) if n is None else n
    H = AffineSystem(q, n)
    threshold = q ** (q - 1)
    while len(Z) > 1:
        alpha = None
        phase = "small"
        if len(Z) > threshold:
            ws = _independent_subset(Z, q, q)
            if len(ws) == q:
                alpha = gauss_solve([list(w) for w in ws], list(range(q)), q)
                phase = "big"
        if alpha is None:
            i0 = next(i for i in range(n) if len({z[i] for z in Z}) > 1)
            alpha = tuple(1 if i == i0 else 0 for i in range(n))
        classes = {}
        for z in Z:
            classes.setdefault(sum(c * x for c, x in zip(alpha, z)) % q, []).append(z)
        a, cut = min(classes.items(), key=lambda kv: (len(kv[1]), kv[0]))
        if trace is not None:
            trace.append(IsolationStep(phase, tuple(alpha), a, len(Z), len(cut)))
        H = H.add(alpha, a)
        Z = cut
    return H, Z[0]


def codim_bound(size: int, q: int) -> int:
    """ceil(log_q |Z|) + ceil(q log_2 q)."""
    lg = 0
    while q ** lg < size:
        lg += 1
    return lg + math.ceil(q * math.log2(q))


def parse_vectors(text: str) -> list[tuple[int, ...]]:
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(tuple(int(t) for t in line.split()))
    if out and len({len(v) for v in out}) != 1:
        raise ValueError("vectors have differing lengths")
    return out
