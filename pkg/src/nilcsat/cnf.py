"""CNF formulas and DIMACS input."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .errors import ParseError


@dataclass(frozen=True)
class CnfFormula:
    """Clauses are tuples of nonzero DIMACS literals: ``+i`` is x_{i-1}, ``-i`` its negation."""

    n: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        for c in clauses:
            for lit in c:
                if lit == 0 or abs(lit) > self.n:
                    raise ValueError(f"literal {lit} out of range for {self.n} variables")
        object.__setattr__(self, "clauses", clauses)

    @property
    def m(self) -> int:
        return len(self.clauses)

    def variables(self) -> list[int]:
        """0-based indices of variables that occur, ascending."""
        return sorted({abs(l) - 1 for c in self.clauses for l in c})

    def evaluate(self, bits) -> bool:
        return all(any((bits[abs(l) - 1] if l > 0 else not bits[abs(l) - 1]) for l in c)
                   for c in self.clauses)

    def satisfying(self):
        for bits in itertools.product((False, True), repeat=self.n):
            if self.evaluate(bits):
                yield bits

    def is_satisfiable(self) -> bool:
        return next(self.satisfying(), None) is not None

    def restrict_to(self, clause_indices) -> tuple["CnfFormula", list[int]]:
        """Sub-formula on the given clauses, re-indexed over its own variables;
        also returns the global index of each local variable."""
        clauses = [self.clauses[i] for i in clause_indices]
        used = sorted({abs(l) - 1 for c in clauses for l in c})
        local = {g: i + 1 for i, g in enumerate(used)}
        renamed = tuple(tuple(local[abs(l) - 1] * (1 if l > 0 else -1) for l in c) for c in clauses)
        return CnfFormula(len(used), renamed), used

    def is_3cnf(self) -> bool:
        return all(len(c) <= 3 for c in self.clauses)

    def to_3cnf(self) -> "CnfFormula":
        """Standard splitting of long clauses with fresh chaining variables."""
        n = self.n
        out = []
        for c in self.clauses:
            if len(c) <= 3:
                out.append(c)
                continue
            n += 1
            out.append((c[0], c[1], n))
            for lit in c[2:-2]:
                out.append((-n, lit, n + 1))
                n += 1
            out.append((-n, c[-2], c[-1]))
        return CnfFormula(n, tuple(out))

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.n} {self.m}"]
        lines += [" ".join(map(str, c)) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str, split_long: bool = False) -> CnfFormula:
    n = None
    declared = None
    clauses = []
    current = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            fields = line.split()
            if len(fields) != 4 or fields[1] != "cnf":
                raise ParseError(f"bad header {line!r}", lineno, 1)
            try:
                n, declared = int(fields[2]), int(fields[3])
            except ValueError:
                raise ParseError(f"bad header {line!r}", lineno, 1) from None
            continue
        if n is None:
            raise ParseError("clause before 'p cnf' header", lineno, 1)
        col = 1
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"bad literal {tok!r}", lineno, raw.find(tok) + 1) from None
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                if abs(lit) > n:
                    raise ParseError(f"literal {lit} exceeds {n} variables", lineno, raw.find(tok) + 1)
                current.append(lit)
            col += 1
    if current:
        clauses.append(tuple(current))
    if n is None:
        raise ParseError("missing 'p cnf' header", 1, 1)
    if declared is not None and declared != len(clauses):
        raise ParseError(f"header declares {declared} clauses, found {len(clauses)}")
    phi = CnfFormula(n, tuple(clauses))
    if not phi.is_3cnf():
        if not split_long:
            longest = max(len(c) for c in phi.clauses)
            raise ParseError(f"clause of length {longest} in a 3-CNF input (use the split option)")
        phi = phi.to_3cnf()
    return phi
