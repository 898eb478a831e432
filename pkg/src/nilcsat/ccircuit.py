"""Layered MOD-gate circuits and their extraction from polynomials of D."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraSpec
from .canonical import CanonicalForm, LevelForm, _eval_level, canonicalize
from .errors import ArityError, LevelError
from .terms import as_circuit

# A wire is ("x", i) for circuit input i or ("g", j) for gate j.


@dataclass(frozen=True)
class ModGate:
    """Outputs 1 iff the multiplicity-weighted count of 1-inputs mod ``modulus`` is in ``accept``."""

    modulus: int
    accept: frozenset
    inputs: tuple = ()  # ((kind, index, multiplicity), ...)
    layer: int = 0

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError("gate modulus must be at least 2")
        object.__setattr__(self, "accept", frozenset(int(r) % self.modulus for r in self.accept))
        for kind, _, mult in self.inputs:
            if kind not in ("x", "g") or mult < 1:
                raise ValueError(f"bad wire {(kind, mult)}")

    def fires(self, total) -> np.ndarray | bool:
        r = np.asarray(total) % self.modulus
        return np.isin(r, sorted(self.accept))

    @property
    def wires(self) -> int:
        return sum(m for _, _, m in self.inputs)


@dataclass(frozen=True)
class CCCircuit:
    """Gates in topological order; layer 0 holds the output gate and uses ``moduli[0]``."""

    n_inputs: int
    moduli: tuple
    gates: tuple
    output: int

    def __post_init__(self):
        for idx, g in enumerate(self.gates):
            if not 0 <= g.layer < len(self.moduli):
                raise ValueError(f"gate {idx} on layer {g.layer} outside {len(self.moduli)} layers")
            if g.modulus != self.moduli[g.layer]:
                raise ValueError(f"gate {idx} has modulus {g.modulus}, layer expects {self.moduli[g.layer]}")
            for kind, ref, _ in g.inputs:
                if kind == "x" and not 0 <= ref < self.n_inputs:
                    raise ArityError(f"gate {idx} reads input {ref} of {self.n_inputs}")
                if kind == "g":
                    if not 0 <= ref < idx:
                        raise ValueError(f"gate {idx} reads gate {ref}, which does not precede it")
                    if self.gates[ref].layer <= g.layer:
                        raise ValueError(f"gate {idx} reads gate {ref} from a layer not below it")
        if not 0 <= self.output < len(self.gates):
            raise ValueError("output gate out of range")

    @property
    def depth(self) -> int:
        return len(self.moduli)

    @property
    def size(self) -> int:
        return len(self.gates)

    @property
    def wires(self) -> int:
        return sum(g.wires for g in self.gates)

    def to_json(self) -> dict:
        return {
            "inputs": self.n_inputs,
            "moduli": list(self.moduli),
            "depth": self.depth,
            "output": self.output,
            "gates": [{
                "layer": g.layer,
                "modulus": g.modulus,
                "accept": sorted(g.accept),
                "inputs": [{"kind": k, "index": i, "mult": m} for k, i, m in g.inputs],
            } for g in self.gates],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CCCircuit":
        gates = tuple(ModGate(g["modulus"], frozenset(g["accept"]),
                              tuple((w["kind"], w["index"], w["mult"]) for w in g["inputs"]), g["layer"])
                      for g in data["gates"])
        return cls(data["inputs"], tuple(data["moduli"]), gates, data["output"])


def eval_cc(c: CCCircuit, bits) -> int:
    out = eval_cc_batch(c, np.asarray(bits, dtype=np.int64)[None, :])
    return int(out[0])


def eval_cc_batch(c: CCCircuit, bits: np.ndarray) -> np.ndarray:
    """Rows of ``bits`` (shape (N, n)) to output bits (shape (N,))."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 2 or bits.shape[1] != c.n_inputs:
        raise ArityError(f"expected {c.n_inputs} input bits, got shape {bits.shape}")
    vals = []
    for g in c.gates:
        total = np.zeros(bits.shape[0], dtype=np.int64)
        for kind, ref, mult in g.inputs:
            total += mult * (bits[:, ref] if kind == "x" else vals[ref])
        vals.append(g.fires(total).astype(np.int64))
    return vals[c.output]


def _as_form(g, spec: AlgebraSpec | None, arity: int | None) -> CanonicalForm:
    if isinstance(g, CanonicalForm):
        return g
    return canonicalize(as_circuit(g, spec, arity))


def extract_cc(g, j: int, k: int, spec: AlgebraSpec | None = None, arity: int | None = None) -> CCCircuit:
    """CC[p_{j+1}, ..., p_k] circuit of depth k - j for beta -> [e_{j+1} g(beta * e_k1) != 0].

    For j >= 1 this is the bit of v_j e_{j+1} g; j = 0 tests e_1 g itself.
    Each gate is the level form of one (sub)polynomial: its constant, linear
    part (only on level k, where the inputs live) and nested v-terms, whose
    nonzero tests become the gates one layer down.  v-terms below level k
    whose inner forms never see level-k inputs are folded into constants.
    """
    f = _as_form(g, spec, arity)
    spec = f.spec
    if not 0 <= j < k:
        raise LevelError(f"need 0 <= j < k, got j={j}, k={k}")
    spec.check_level(k, 1, spec.h, "input level k")
    n = f.arity
    moduli = tuple(spec.p(level) for level in range(j + 1, k + 1))
    gates: list[ModGate] = []
    memo: dict[int, int] = {}
    zero_digits = [[0] * spec.h for _ in range(n)]

    def build(form: LevelForm) -> int:
        got = memo.get(id(form))
        if got is not None:
            return got
        level = form.level
        p = spec.p(level)
        const = form.const
        inputs = []
        if level == k:
            inputs += [("x", i, lam) for i, lam in enumerate(form.lin) if lam]
            for kappa, s in form.vterms:
                # level-(k+1) inner forms see all-zero inputs
                if int(_eval_level(s, spec, zero_digits, {})):
                    const += kappa
        else:
            for kappa, s in form.vterms:
                inputs.append(("g", build(s), kappa))
        accept = frozenset(r for r in range(p) if (r + const) % p)
        gates.append(ModGate(p, accept, tuple(inputs), level - j - 1))
        memo[id(form)] = len(gates) - 1
        return len(gates) - 1

    out = build(f.level(j + 1))
    return CCCircuit(n, moduli, tuple(gates), out)


def algebra_bits(g, j: int, k: int, spec: AlgebraSpec, arity: int) -> np.ndarray:
    """Reference semantics of ``extract_cc`` on all 2^n inputs, by direct evaluation."""
    circuit = as_circuit(g, spec, arity)
    rows = boolean_rows(arity)
    codes = rows * spec.unit(k).code
    vals = circuit.evaluate_codes(codes)
    level = spec.digits(vals)[j]
    return (level != 0).astype(np.int64)


def boolean_rows(n: int) -> np.ndarray:
    """All of {0,1}^n, lexicographic, shape (2^n, n)."""
    idx = np.arange(1 << n, dtype=np.int64)
    cols = [(idx >> (n - 1 - pos)) & 1 for pos in range(n)]
    return np.stack(cols, axis=1) if cols else np.zeros((1, 0), dtype=np.int64)
