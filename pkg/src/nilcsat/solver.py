"""Deciding ``t(x) = d`` and ``t == 0`` over D.

Three engines share one scanning core: exhaustive enumeration, the
sparse-support search (assignments with few nonzero coordinates, smallest
support first) and uniform random sampling.  Candidates are cut into
fixed-size blocks; blocks may be evaluated by several threads, but the
reported witness is always the one with the smallest canonical index, so
results never depend on the worker count.

The second half of the module handles one slice ``E^k(u)`` at a time:
restricting a canonical form to the slice, fusing the resulting system into
a single two-valued polynomial, and reading a conjunction off a solution.
"""
from __future__ import annotations

import enum
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraSpec, DElem
from .canonical import CanonicalForm, LevelForm, _Builder, canonicalize, evaluate_level_codes, specialize
from .errors import ArityError, CeilingError, SpecMismatch
from .funcrep import MAX_ARITY, build_and
from .gf import AffineSystem, isolate_point
from .terms import (Add, Circuit, Const, E, Neg, Term, V, Var, as_circuit, evaluate, scale_term,
                    substitute, sum_terms)

BRUTE_CEILING = 10 ** 8
BLOCK = 4096


class Status(str, enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNSAT_AT_BOUND = "UNSAT_AT_BOUND"
    GIVE_UP = "GIVE_UP"
    EQUIV = "EQUIV"
    EQUIV_AT_BOUND = "EQUIV_AT_BOUND"
    COUNTEREXAMPLE = "COUNTEREXAMPLE"

    @property
    def exit_code(self) -> int:
        return 2 if self in (Status.UNSAT_AT_BOUND, Status.GIVE_UP, Status.EQUIV_AT_BOUND) else 0


@dataclass(frozen=True)
class Instance:
    """The equation ``circuit(x) = target``."""

    circuit: Circuit
    target: DElem

    def __init__(self, t, target: DElem | None = None, spec: AlgebraSpec | None = None,
                 arity: int | None = None):
        circuit = as_circuit(t, spec, arity)
        if target is None:
            target = circuit.spec.zero
        if target.spec != circuit.spec:
            raise SpecMismatch(f"target {target} is not in {circuit.spec}")
        object.__setattr__(self, "circuit", circuit)
        object.__setattr__(self, "target", target)

    @property
    def spec(self) -> AlgebraSpec:
        return self.circuit.spec

    @property
    def arity(self) -> int:
        return self.circuit.arity

    def check(self, witness) -> bool:
        return self.circuit.evaluate(witness) == self.target


@dataclass(frozen=True)
class SupportBound:
    """B(size, h): how many nonzero coordinates the sparse search tries.

    ``sesh`` is ceil(c * log2(size)^(h-1)), ``exhaustive`` is n, ``fixed`` is k.
    With ``escalate`` the search carries on past B up to n.
    """

    kind: str = "sesh"
    c: float = 1.0
    k: int = 0
    escalate: bool = False

    def __post_init__(self):
        if self.kind not in ("sesh", "exhaustive", "fixed"):
            raise ValueError(f"unknown support bound {self.kind!r}")
        if self.c < 0 or self.k < 0:
            raise ValueError("support bound parameters must be nonnegative")

    @classmethod
    def sesh(cls, c: float = 1.0, escalate: bool = False) -> "SupportBound":
        return cls("sesh", c=c, escalate=escalate)

    @classmethod
    def exhaustive(cls) -> "SupportBound":
        return cls("exhaustive")

    @classmethod
    def fixed(cls, k: int, escalate: bool = False) -> "SupportBound":
        return cls("fixed", k=k, escalate=escalate)

    @classmethod
    def parse(cls, text: str, c: float = 1.0, escalate: bool = False) -> "SupportBound":
        """``sesh``, ``exhaustive`` or ``fixed:K``."""
        name, _, arg = text.partition(":")
        if name == "fixed":
            if not arg:
                raise ValueError("fixed bound needs a value, e.g. fixed:2")
            return cls.fixed(int(arg), escalate)
        if name == "sesh":
            return cls.sesh(float(arg) if arg else c, escalate)
        if name == "exhaustive":
            return cls.exhaustive()
        raise ValueError(f"unknown support bound {text!r}")

    def value(self, size: int, h: int, n: int) -> int:
        if self.kind == "exhaustive":
            return n
        if self.kind == "fixed":
            return min(self.k, n)
        lg = math.log2(size) if size > 1 else 0.0
        return min(n, math.ceil(self.c * lg ** (h - 1)))

    def to_json(self) -> dict:
        return {"kind": self.kind, "c": self.c, "k": self.k, "escalate": self.escalate}


@dataclass
class SolveResult:
    status: Status
    solver: str
    witness: tuple | None = None
    value: DElem | None = None
    support: int | None = None
    evaluations: int = 0
    elapsed: float = 0.0
    count: int | None = None
    bound: int | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "status": self.status.value,
            "solver": self.solver,
            "witness": None if self.witness is None else [str(a) for a in self.witness],
            "support": self.support,
            "evaluations": self.evaluations,
        }
        if self.value is not None:
            out["value"] = str(self.value)
        if self.count is not None:
            out["count"] = self.count
        if self.bound is not None:
            out["bound"] = self.bound
        out.update(self.extra)
        if timing:
            out["elapsed"] = round(self.elapsed, 6)
        return out


# -- scanning core -----------------------------------------------------------------


def _first_hit(n_blocks: int, block_fn, workers: int):
    """``block_fn(b)`` returns the offset of the first hit in block b or None.

    Blocks are evaluated in windows of ``workers`` and inspected in order, so
    the earliest hit wins regardless of which thread finished first.
    """
    if workers <= 1:
        for b in range(n_blocks):
            off = block_fn(b)
            if off is not None:
                return b, off
        return None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for start in range(0, n_blocks, workers):
            window = range(start, min(start + workers, n_blocks))
            for b, off in zip(window, pool.map(block_fn, window)):
                if off is not None:
                    return b, off
    return None


def _matcher(inst: Instance, mode: str):
    circuit = inst.circuit
    target = inst.target.code
    zero = inst.spec.zero.code

    def hits(codes):
        vals = circuit.evaluate_codes(codes)
        mask = vals == target if mode == "eq" else vals != zero
        idx = np.flatnonzero(mask)
        return (int(idx[0]), int(vals[idx[0]])) if idx.size else None

    return hits


def _index_codes(start: int, stop: int, base: int, n: int) -> np.ndarray:
    """Rows ``start..stop-1`` of the lexicographic enumeration of {0..base-1}^n."""
    idx = np.arange(start, stop, dtype=np.int64)
    cols = [(idx // base ** (n - 1 - pos)) % base for pos in range(n)]
    return np.stack(cols, axis=1) if cols else np.zeros((stop - start, 0), dtype=np.int64)


def _to_witness(spec: AlgebraSpec, row) -> tuple:
    return tuple(DElem.from_code(spec, int(c)) for c in row)


def _validated(inst: Instance, witness, mode: str):
    value = inst.circuit.evaluate(witness)
    ok = value == inst.target if mode == "eq" else not value.is_zero()
    if not ok:
        raise AssertionError(f"witness {witness} failed re-validation")
    return value


def _brute_scan(inst: Instance, mode: str, ceiling: int, workers: int):
    spec, n = inst.spec, inst.arity
    total = spec.size ** n
    if total > ceiling:
        raise CeilingError(f"|D|^n = {total} exceeds the brute-force ceiling {ceiling}", required=total)
    hits = _matcher(inst, mode)
    found = {}

    def block(b):
        codes = _index_codes(b * BLOCK, min((b + 1) * BLOCK, total), spec.size, n)
        got = hits(codes)
        if got is not None:
            found[b] = codes[got[0]]
            return got[0]
        return None

    hit = _first_hit(-(-total // BLOCK), block, workers)
    if hit is None:
        return None, total
    b, off = hit
    return _to_witness(spec, found[b]), b * BLOCK + off + 1


def solve_brute(inst: Instance, count: bool = False, ceiling: int = BRUTE_CEILING,
                workers: int = 1) -> SolveResult:
    """Exhaustive search; the witness is the lexicographically first solution."""
    started = time.perf_counter()
    spec, n = inst.spec, inst.arity
    if count:
        total = spec.size ** n
        if total > ceiling:
            raise CeilingError(f"|D|^n = {total} exceeds the brute-force ceiling {ceiling}", required=total)
        tally = 0
        first = None
        for start in range(0, total, BLOCK):
            codes = _index_codes(start, min(start + BLOCK, total), spec.size, n)
            mask = inst.circuit.evaluate_codes(codes) == inst.target.code
            tally += int(mask.sum())
            if first is None and mask.any():
                first = codes[int(np.argmax(mask))]
        witness = None if first is None else _to_witness(spec, first)
        evals = total
    else:
        witness, evals = _brute_scan(inst, "eq", ceiling, workers)
        tally = None
    if witness is not None:
        _validated(inst, witness, "eq")
    status = Status.SAT if witness is not None else Status.UNSAT
    return SolveResult(status, "brute", witness, inst.target if witness else None,
                       _support(witness), evals, time.perf_counter() - started, tally)


def _support(witness) -> int | None:
    return None if witness is None else sum(1 for a in witness if not a.is_zero())


def _sparse_scan(inst: Instance, mode: str, hi: int, workers: int, lo: int = 0):
    """Scan supports of size lo..hi; returns (witness, evaluations, size reached)."""
    spec, n = inst.spec, inst.arity
    nz = spec.size - 1
    hits = _matcher(inst, mode)
    evals = 0
    for r in range(lo, hi + 1):
        combo_list = list(itertools.combinations(range(n), r))
        combos = np.array(combo_list, dtype=np.int64).reshape(len(combo_list), r)
        per = nz ** r
        total = len(combos) * per
        found = {}

        def block(b, combos=combos, per=per, total=total, r=r):
            start, stop = b * BLOCK, min((b + 1) * BLOCK, total)
            idx = np.arange(start, stop, dtype=np.int64)
            which = combos[idx // per]
            codes = np.zeros((stop - start, n), dtype=np.int64)
            rest = idx % per
            for pos in range(r):
                digit = (rest // nz ** (r - 1 - pos)) % nz + 1
                codes[np.arange(stop - start), which[:, pos]] = digit
            got = hits(codes)
            if got is not None:
                found[b] = codes[got[0]]
                return got[0]
            return None

        hit = _first_hit(-(-total // BLOCK), block, workers)
        if hit is not None:
            b, off = hit
            return _to_witness(spec, found[b]), evals + b * BLOCK + off + 1, r
        evals += total
    return None, evals, hi


def solve_sparse(inst: Instance, bound: SupportBound | None = None, workers: int = 1) -> SolveResult:
    """Try assignments with at most B nonzero coordinates, smallest support first.

    Order: support size, then support set (lexicographic), then the nonzero
    values (lexicographic in their coordinate tuples).
    """
    started = time.perf_counter()
    bound = bound or SupportBound.sesh()
    n = inst.arity
    B = bound.value(inst.circuit.size, inst.spec.h, n)
    witness, evals, _ = _sparse_scan(inst, "eq", B, workers)
    if witness is None and bound.escalate and B < n:
        witness, more, _ = _sparse_scan(inst, "eq", n, workers, lo=B + 1)
        evals += more
        reached = n
    else:
        reached = B
    if witness is not None:
        _validated(inst, witness, "eq")
        status = Status.SAT
    else:
        status = Status.UNSAT if reached >= n else Status.UNSAT_AT_BOUND
    return SolveResult(status, "sparse", witness, inst.target if witness else None,
                       _support(witness), evals, time.perf_counter() - started, bound=B,
                       extra={"escalated": bool(bound.escalate and reached > B)})


def _sample_block(spec: AlgebraSpec, n: int, seed: int, b: int, rows: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
    return rng.integers(0, spec.size, size=(rows, n), dtype=np.int64)


def _random_scan(inst: Instance, mode: str, budget: int, seed: int, workers: int):
    spec, n = inst.spec, inst.arity
    hits = _matcher(inst, mode)
    found = {}

    def block(b):
        codes = _sample_block(spec, n, seed, b, min(BLOCK, budget - b * BLOCK))
        got = hits(codes)
        if got is not None:
            found[b] = codes[got[0]]
            return got[0]
        return None

    hit = _first_hit(-(-budget // BLOCK), block, workers)
    if hit is None:
        return None, budget
    b, off = hit
    return _to_witness(spec, found[b]), b * BLOCK + off + 1


def solve_random(inst: Instance, budget: int, seed: int, workers: int = 1) -> SolveResult:
    """Uniform sampling over D^n.  GIVE_UP is not a proof of unsatisfiability."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    started = time.perf_counter()
    witness, evals = _random_scan(inst, "eq", budget, seed, workers)
    if witness is not None:
        _validated(inst, witness, "eq")
    status = Status.SAT if witness is not None else Status.GIVE_UP
    return SolveResult(status, "random", witness, inst.target if witness else None,
                       _support(witness), evals, time.perf_counter() - started,
                       extra={"seed": seed, "budget": budget})


def solve(inst: Instance, solver: str = "brute", bound: SupportBound | None = None,
          budget: int = 10_000, seed: int = 0, workers: int = 1) -> SolveResult:
    if solver == "brute":
        return solve_brute(inst, workers=workers)
    if solver == "sparse":
        return solve_sparse(inst, bound, workers)
    if solver == "random":
        return solve_random(inst, budget, seed, workers)
    raise ValueError(f"unknown solver {solver!r}")


def ceqv(t, spec: AlgebraSpec | None = None, solver: str = "brute", bound: SupportBound | None = None,
         budget: int = 10_000, seed: int = 0, workers: int = 1, arity: int | None = None) -> SolveResult:
    """Is t identically 0?

    One scan looks for any assignment with a nonzero value; this decides the
    same thing as solving ``t = d`` for every d != 0 over the same candidates.
    """
    started = time.perf_counter()
    inst = Instance(t, None, spec, arity)
    n = inst.arity
    bound_value = None
    if solver == "brute":
        witness, evals = _brute_scan(inst, "ne", BRUTE_CEILING, workers)
        complete = True
    elif solver == "sparse":
        bound = bound or SupportBound.sesh()
        bound_value = bound.value(inst.circuit.size, inst.spec.h, n)
        hi = n if bound.escalate else bound_value
        witness, evals, reached = _sparse_scan(inst, "ne", hi, workers)
        complete = reached >= n
    elif solver == "random":
        witness, evals = _random_scan(inst, "ne", budget, seed, workers)
        complete = False
    else:
        raise ValueError(f"unknown solver {solver!r}")
    value = None
    if witness is not None:
        value = _validated(inst, witness, "ne")
        status = Status.COUNTEREXAMPLE
    elif complete:
        status = Status.EQUIV
    else:
        status = Status.GIVE_UP if solver == "random" else Status.EQUIV_AT_BOUND
    return SolveResult(status, solver, witness, value, _support(witness), evals,
                       time.perf_counter() - started, bound=bound_value)


def density_report(inst: Instance, samples: int = 10_000, seed: int = 0, exact: bool = True,
                   ceiling: int = BRUTE_CEILING) -> dict:
    """Exact value counts of t plus seeded sampling estimates with standard errors."""
    spec, n = inst.spec, inst.arity
    out = {"primes": list(spec.primes), "arity": n, "target": str(inst.target)}
    if exact:
        total = spec.size ** n
        if total > ceiling:
            raise CeilingError(f"|D|^n = {total} exceeds the exact-count ceiling {ceiling}", required=total)
        counts = np.zeros(spec.size, dtype=np.int64)
        for start in range(0, total, BLOCK):
            codes = _index_codes(start, min(start + BLOCK, total), spec.size, n)
            counts += np.bincount(inst.circuit.evaluate_codes(codes), minlength=spec.size)
        out["total"] = total
        out["counts"] = {str(DElem.from_code(spec, c)): int(counts[c]) for c in range(spec.size)}
        out["density"] = int(counts[inst.target.code]) / total
    if samples:
        seen = np.zeros(spec.size, dtype=np.int64)
        for b in range(-(-samples // BLOCK)):
            codes = _sample_block(spec, n, seed, b, min(BLOCK, samples - b * BLOCK))
            seen += np.bincount(inst.circuit.evaluate_codes(codes), minlength=spec.size)
        frac = seen / samples
        err = np.sqrt(frac * (1 - frac) / samples)
        out["samples"] = samples
        out["seed"] = seed
        out["estimates"] = {str(DElem.from_code(spec, c)): {"fraction": float(frac[c]), "stderr": float(err[c])}
                            for c in range(spec.size)}
    return out


# -- slices ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SliceSet:
    """E^k(u): tuples agreeing with u on every level except k."""

    spec: AlgebraSpec
    base: tuple
    level: int

    def __post_init__(self):
        self.spec.check_level(self.level, 1, self.spec.h)
        object.__setattr__(self, "base", tuple(self.base))

    @property
    def arity(self) -> int:
        return len(self.base)

    def contains(self, b) -> bool:
        k = self.level
        return len(b) == self.arity and all(
            x.coords[j] == u.coords[j] for x, u in zip(b, self.base) for j in range(self.spec.h) if j != k - 1)

    def members(self) -> np.ndarray:
        """Codes of all p_k^n members, lexicographic in the level-k coordinates."""
        spec, k, n = self.spec, self.level, self.arity
        free = _index_codes(0, spec.p(k) ** n, spec.p(k), n)
        stride = spec.strides[k - 1]
        base = np.array([u.code - u.coords[k - 1] * stride for u in self.base], dtype=np.int64)
        return base[None, :] + free * stride if n else np.zeros((1, 0), dtype=np.int64)


@dataclass
class ReducedSystem:
    """t(b) = 0 on a slice, as one equation per level 1..k.

    ``equations[j-1]`` is the level-j form after fixing all coordinates off
    level k; the level-k form is linear, lower ones carry only v-terms.
    ``upper`` holds the (constant) levels above k.
    """

    spec: AlgebraSpec
    slice: SliceSet
    equations: tuple
    upper: tuple

    @property
    def level(self) -> int:
        return self.slice.level

    @property
    def arity(self) -> int:
        return self.slice.arity

    @property
    def upper_ok(self) -> bool:
        return not any(self.upper)

    def residuals(self, codes) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        return np.stack([evaluate_level_codes(f, self.spec, codes) for f in self.equations], axis=1)

    def holds(self, codes) -> np.ndarray:
        res = self.residuals(codes)
        return (res == 0).all(axis=1) & self.upper_ok


def restrict_to_slice(f: CanonicalForm, slice_: SliceSet) -> ReducedSystem:
    spec, k = f.spec, slice_.level
    if slice_.arity != f.arity:
        raise ArityError(f"slice has {slice_.arity} coordinates, form has arity {f.arity}")
    fixed = [u.coords for u in slice_.base]
    b = _Builder(spec, f.arity)
    eqs = tuple(specialize(f.level(j), spec, fixed, k, b) for j in range(1, k + 1))
    upper = tuple(specialize(f.level(j), spec, fixed, k, b).const for j in range(k + 1, spec.h + 1))
    return ReducedSystem(spec, slice_, eqs, upper)


def form_term(f: LevelForm, spec: AlgebraSpec, memo: dict | None = None) -> Term:
    """A term whose level-``f.level`` component is ``f`` (other levels 0)."""
    memo = {} if memo is None else memo
    got = memo.get(id(f))
    if got is not None:
        return got
    k = f.level
    p = spec.p(k)
    zero = Const(spec.zero)
    parts = []
    if f.const:
        parts.append(Const(spec.unit(k, f.const)))
    for i, lam in enumerate(f.lin):
        if lam:
            parts.append(scale_term(lam, E(k, Var(i)), p, zero))
    for kappa, s in f.vterms:
        parts.append(scale_term(kappa, V(k, form_term(s, spec, memo)), p, zero))
    out = sum_terms(parts, zero)
    memo[id(f)] = out
    return out


def _mobius(table: list[int], bits: int, p: int) -> dict:
    """Multilinear coefficients (mod p) of a function on {0,1}^bits; keys are bitmasks."""
    coeff = list(table)
    for i in range(bits):
        for mask in range(1 << bits):
            if mask >> i & 1:
                coeff[mask] -= coeff[mask ^ (1 << i)]
    return {mask: c % p for mask, c in enumerate(coeff) if c % p}


def combine_system_V(system: ReducedSystem, max_arity: int = MAX_ARITY) -> Term:
    """Two-valued t* with t*(b) = e_1 1 iff b solves the system (b in the slice).

    Level-1 residue depends on the bits v_1(z_s) of its v-terms; every level
    j >= 2 is pushed down to level 2 as z_j = v_2...v_{j-1}(r_j).  The target
    indicator is then a boolean function of those nonzero tests, expanded into
    multilinear monomials each realized by an AND gadget on level 1.
    """
    spec, k = system.spec, system.level
    e11 = spec.unit(1)
    zero = Const(spec.zero)
    if not system.upper_ok:
        return zero
    eqs = system.equations
    if all(f.is_constant for f in eqs):
        return Const(e11) if not any(f.const for f in eqs) else zero
    memo = {}
    if k == 1:
        if spec.p(1) != 2:
            raise SpecMismatch("a two-valued indicator of a nontrivial level-1 equation needs p_1 = 2")
        return Add(Const(e11), Neg(form_term(eqs[0], spec, memo)))
    p1 = spec.p(1)
    lvl1 = eqs[0]
    zs = [form_term(s, spec, memo) for _, s in lvl1.vterms]
    kappas = [kappa for kappa, _ in lvl1.vterms]
    a = len(zs)
    for j in range(2, k + 1):
        f = eqs[j - 1]
        if f.is_constant:
            if f.const:
                return zero
            continue
        z = form_term(f, spec, memo)
        for lvl in range(j - 1, 1, -1):
            z = V(lvl, z)
        zs.append(z)
    bits = len(zs)
    if bits > 16:
        raise CeilingError(f"{bits} nonzero tests in the combiner exceed the ceiling 16", required=bits)
    table = []
    for mask in range(1 << bits):
        r1 = (lvl1.const + sum(kappas[i] for i in range(a) if mask >> i & 1)) % p1
        table.append(int(r1 == 0 and not mask >> a))
    parts = []
    for mask, c in sorted(_mobius(table, bits, p1).items()):
        chosen = [zs[i] for i in range(bits) if mask >> i & 1]
        if not chosen:
            mono = Const(e11)
        elif len(chosen) == 1:
            mono = V(1, chosen[0])
        else:
            if len(chosen) > max_arity:
                raise CeilingError(f"monomial of degree {len(chosen)} exceeds the ceiling {max_arity}",
                                   required=len(chosen))
            mono = substitute(build_and(len(chosen), 1, spec, max_arity), chosen)
        parts.append(scale_term(c, mono, p1, zero))
    return sum_terms(parts, zero)


@dataclass
class Conjunction:
    """t** over ``arity`` fresh variables; ``kept[i]`` is the original index of variable i."""

    term: Term
    arity: int
    level: int
    kept: list
    mode: str
    dagger: Term | None = None
    hyperplane: AffineSystem | None = None


def extract_conjunction(tstar: Term, witness, level: int, spec: AlgebraSpec, mode: str = "substitute",
                        hyperplane: AffineSystem | None = None) -> Conjunction:
    """Rearrange t* into a polynomial that is e_1 1 on (e_k1, ..., e_k1).

    ``substitute``: variables with e_k(a_i) = 0 are fixed to a_i; the others
    become lam_i * e_k(y) plus a_i's off-level part.
    ``affine``: pivots of the hyperplane are expressed through the free
    variables, then each free variable is shifted by ``-e_k1 + b_i`` where b
    is the witness's level-k vector.  t* must read its inputs only through e_k.
    """
    witness = tuple(witness)
    n = len(witness)
    k = level
    spec.check_level(k, 1, spec.h)
    if evaluate(tstar, witness, spec) != spec.unit(1):
        raise ValueError("the witness does not solve t* = e_1 1")
    p = spec.p(k)
    zero = Const(spec.zero)
    if mode == "substitute":
        mapping, kept = [], []
        for i, a in enumerate(witness):
            lam = a.coords[k - 1]
            if lam == 0:
                mapping.append(Const(a))
                continue
            y = scale_term(lam, E(k, Var(len(kept))), p, zero)
            rest = a - spec.unit(k, lam)
            mapping.append(Add(y, Const(rest)) if not rest.is_zero() else y)
            kept.append(i)
        out = Conjunction(substitute(tstar, mapping), len(kept), k, kept, mode)
    elif mode == "affine":
        H = hyperplane if hyperplane is not None else AffineSystem(p, n)
        if H.q != p or H.n != n:
            raise ValueError(f"hyperplane must live in GF({p})^{n}")
        point = tuple(a.coords[k - 1] for a in witness)
        if not H.contains(point):
            raise ValueError("the witness is not on the hyperplane")
        params = H.parametrization()
        pivots = {j for j, _, _ in params}
        free = [i for i in range(n) if i not in pivots]
        fresh = {i: Var(idx) for idx, i in enumerate(free)}
        if params:
            mapping = [fresh.get(i) for i in range(n)]
            for j, alpha, beta in params:
                parts = [scale_term(c, fresh[i], p, zero) for i, c in sorted(alpha.items())]
                if beta:
                    parts.append(Const(spec.unit(k, beta)))
                mapping[j] = sum_terms(parts, zero)
            dagger = substitute(tstar, mapping)
        else:
            dagger = tstar
        shift = []
        for idx, i in enumerate(free):
            c = spec.unit(k, point[i] - 1)
            shift.append(Add(Var(idx), Const(c)) if not c.is_zero() else Var(idx))
        out = Conjunction(substitute(dagger, shift), len(free), k, free, mode, dagger, H)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ones = (spec.unit(k),) * out.arity
    if evaluate(out.term, ones, spec) != spec.unit(1):
        raise AssertionError("extracted polynomial is not e_1 1 on the all-ones row")
    return out


def solution_set(tstar: Term, spec: AlgebraSpec, arity: int, level: int) -> list[tuple[int, ...]]:
    """Level-k residue vectors x with t*(x as e_k-elements) = e_1 1."""
    p = spec.p(level)
    pts = _index_codes(0, p ** arity, p, arity)
    codes = pts * spec.strides[level - 1]
    vals = as_circuit(tstar, spec, arity).evaluate_codes(codes)
    return [tuple(int(x) for x in row) for row in pts[vals == spec.unit(1).code]]


def affine_conjunction(tstar: Term, spec: AlgebraSpec, arity: int, level: int) -> Conjunction:
    """Isolate one solution of t* by a hyperplane and extract in affine mode."""
    Z = solution_set(tstar, spec, arity, level)
    if not Z:
        raise ValueError("t* has no solution on level-k inputs")
    H, z = isolate_point(Z, spec.p(level), arity)
    witness = tuple(spec.unit(level, x) for x in z)
    return extract_conjunction(tstar, witness, level, spec, "affine", H)


def slice_pipeline(t, spec: AlgebraSpec, witness, level: int, arity: int | None = None):
    """canonicalize -> restrict -> combine for the slice through ``witness``."""
    circuit = as_circuit(t, spec, arity)
    system = restrict_to_slice(canonicalize(circuit), SliceSet(spec, tuple(witness), level))
    return system, combine_system_V(system)
