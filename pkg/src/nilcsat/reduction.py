"""3-CNF -> single equation ``t(x) = e_1 1`` over an alternating D[p1,...,ph]."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .algebra import AlgebraSpec, DElem
from .cnf import CnfFormula
from .errors import CeilingError
from .funcrep import MAX_ARITY, build_and_tower, build_cnf_gadget
from .terms import Circuit, Const, Term, Var, substitute, term_size


def int_root_ceil(m: int, r: int) -> int:
    """Smallest s with s**r >= m (exact, no floats)."""
    if r <= 0:
        raise ValueError("root degree must be positive")
    s = max(1, round(m ** (1.0 / r)))
    while s ** r < m:
        s += 1
    while s > 1 and (s - 1) ** r >= m:
        s -= 1
    return s


@dataclass
class Part:
    clauses: list[int]      # indices into the formula's clause list
    variables: list[int]    # global 0-based variable indices, ascending
    formula: CnfFormula     # the part over its own variables


@dataclass
class ReductionOutput:
    spec: AlgebraSpec
    formula: CnfFormula
    term: Term
    s: int
    parts: list[Part]
    slots: int
    build_seconds: float = 0.0
    _circuit: Circuit | None = field(default=None, repr=False)

    @property
    def target(self) -> DElem:
        return self.spec.unit(1)

    @property
    def circuit(self) -> Circuit:
        if self._circuit is None:
            self._circuit = Circuit.from_term(self.term, self.spec, self.formula.n)
        return self._circuit

    def lift_witness(self, bits) -> tuple[DElem, ...]:
        return lift_witness(self.spec, bits)

    def metadata(self) -> dict:
        return {
            "primes": list(self.spec.primes),
            "n": self.formula.n,
            "m": self.formula.m,
            "s": self.s,
            "slots": self.slots,
            "parts": len(self.parts),
            "part_clauses": [p.clauses for p in self.parts],
            "part_variables": [p.variables for p in self.parts],
            "circuit_size": self.circuit.size,
            "term_size": term_size(self.term),
            "target": str(self.target),
        }


def split_parts(phi: CnfFormula, s: int) -> list[Part]:
    """Pack clauses in input order, ``s`` per part."""
    parts = []
    for start in range(0, phi.m, s):
        idx = list(range(start, min(start + s, phi.m)))
        sub, used = phi.restrict_to(idx)
        parts.append(Part(idx, used, sub))
    return parts


def reduce(phi: CnfFormula, spec: AlgebraSpec, max_part_vars: int = MAX_ARITY) -> ReductionOutput:
    """Build t_phi with: phi satisfiable iff t_phi(x) = e_1 1 is solvable."""
    spec.require_alternating()
    if phi.m == 0:
        raise ValueError("the reduction needs at least one clause")
    if not phi.is_3cnf():
        raise ValueError("clauses longer than 3 literals; split the formula first")
    started = time.perf_counter()
    h = spec.h
    s = int_root_ceil(phi.m, h - 1)
    slots = s ** (h - 2)
    parts = split_parts(phi, s)
    assert len(parts) <= slots
    widest = max(p.formula.n for p in parts)
    if widest > max_part_vars:
        raise CeilingError(f"a part has {widest} variables, ceiling is {max_part_vars} (s = {s})",
                           required=widest)
    gadgets = []
    cache = {}
    for part in parts:
        key = part.formula.clauses, part.formula.n
        local = cache.get(key)
        if local is None:
            local = cache[key] = build_cnf_gadget(part.formula, spec, max_part_vars)
        gadgets.append(substitute(local, [Var(g) for g in part.variables]))
    neutral = Const(spec.unit(h - 1))
    gadgets += [neutral] * (slots - len(gadgets))
    tower = build_and_tower(s, spec, max(MAX_ARITY, max_part_vars))
    term = substitute(tower, gadgets)
    return ReductionOutput(spec, phi, term, s, parts, slots, time.perf_counter() - started)


def lift_witness(spec: AlgebraSpec, bits) -> tuple[DElem, ...]:
    """True -> e_h 1, false -> 0."""
    top = spec.unit(spec.h)
    return tuple(top if b else spec.zero for b in bits)


def read_witness(assignment) -> tuple[bool, ...]:
    """b(e_h x): true iff the top coordinate is nonzero."""
    return tuple(bool(a.coords[-1]) for a in assignment)
