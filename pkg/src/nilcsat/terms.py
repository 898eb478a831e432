"""Terms and circuits over the signature {+, -, constants, e_j, v_j}.

A ``Term`` is an immutable expression tree.  Python objects may be shared
between several parents; that sharing is an implementation detail and
``term_size`` still counts the expanded tree.  A ``Circuit`` is the
hash-consed DAG form: a topologically ordered node list whose last node is
the output.  Everything that evaluates or transforms works on circuits.

Node tuples inside a circuit::

    ("var", i) ("const", code) ("add", a, b) ("neg", a) ("e", j, a) ("v", j, a)
"""
from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .algebra import AlgebraSpec, DElem
from .errors import ArityError, CeilingError, LevelError, ParseError, SpecMismatch

EXPANSION_CEILING = 1_000_000


class Term:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, other)

    def __neg__(self):
        return Neg(self)

    def __sub__(self, other):
        return Add(self, Neg(other))


@dataclass(frozen=True, eq=False, slots=True)
class Var(Term):
    index: int


@dataclass(frozen=True, eq=False, slots=True)
class Const(Term):
    value: DElem


@dataclass(frozen=True, eq=False, slots=True)
class Add(Term):
    left: Term
    right: Term


@dataclass(frozen=True, eq=False, slots=True)
class Neg(Term):
    child: Term


@dataclass(frozen=True, eq=False, slots=True)
class E(Term):
    level: int
    child: Term


@dataclass(frozen=True, eq=False, slots=True)
class V(Term):
    level: int
    child: Term


def children(t: Term) -> tuple:
    if isinstance(t, Add):
        return (t.left, t.right)
    if isinstance(t, (Neg, E, V)):
        return (t.child,)
    return ()


def postorder(root: Term):
    """Distinct term objects below ``root``, children first (iterative)."""
    seen = set()
    out = []
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            out.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for c in reversed(children(node)):
            if id(c) not in seen:
                stack.append((c, False))
    return out


def term_size(t: Term) -> int:
    """Node count of the expanded tree."""
    sizes = {}
    for node in postorder(t):
        sizes[id(node)] = 1 + sum(sizes[id(c)] for c in children(node))
    return sizes[id(t)]


def sum_terms(terms, zero: Term) -> Term:
    """Left fold of ``Add``; ``zero`` if empty."""
    terms = list(terms)
    if not terms:
        return zero
    acc = terms[0]
    for t in terms[1:]:
        acc = Add(acc, t)
    return acc


def scale_term(lam: int, t: Term, modulus: int, zero: Term) -> Term:
    """``lam * t`` for ``t`` living on a level of the given prime modulus,
    using whichever of ``lam`` copies or ``-(modulus-lam)`` copies is shorter."""
    lam %= modulus
    if lam == 0:
        return zero
    if modulus - lam < lam:
        return Neg(sum_terms([t] * (modulus - lam), zero))
    return sum_terms([t] * lam, zero)


def difference(t: Term, s: Term) -> Term:
    """The term ``t - s``, so that ``t = s`` becomes ``t - s = 0``."""
    return Add(t, Neg(s))


def substitute(t: Term, mapping) -> Term:
    """Replace ``Var(i)`` by ``mapping[i]`` (a dict or sequence), preserving sharing."""
    out = {}
    for node in postorder(t):
        if isinstance(node, Var):
            r = mapping[node.index]
        elif isinstance(node, Const):
            r = node
        elif isinstance(node, Add):
            r = Add(out[id(node.left)], out[id(node.right)])
        elif isinstance(node, Neg):
            r = Neg(out[id(node.child)])
        elif isinstance(node, E):
            r = E(node.level, out[id(node.child)])
        else:
            r = V(node.level, out[id(node.child)])
        out[id(node)] = r
    return out[id(t)]


def max_var(t: Term) -> int:
    return max((n.index for n in postorder(t) if isinstance(n, Var)), default=-1)


# -- circuits ----------------------------------------------------------------


class Circuit:
    """Hash-consed DAG over the algebra; immutable after construction."""

    __slots__ = ("spec", "arity", "nodes")

    def __init__(self, spec: AlgebraSpec, arity: int, nodes):
        self.spec = spec
        self.arity = arity
        self.nodes = tuple(nodes)
        if not self.nodes:
            raise ValueError("a circuit needs at least one node")
        for idx, node in enumerate(self.nodes):
            kind = node[0]
            if kind == "var":
                if not 0 <= node[1] < arity:
                    raise ArityError(f"variable index {node[1]} exceeds arity {arity}")
            elif kind == "const":
                if not 0 <= node[1] < spec.size:
                    raise ValueError(f"bad constant code {node[1]}")
            elif kind == "e":
                spec.check_level(node[1], 1, spec.h)
            elif kind == "v":
                spec.check_level(node[1], 1, spec.h - 1)
            elif kind not in ("add", "neg"):
                raise ValueError(f"unknown node kind {kind!r}")
            for ref in _refs(node):
                if not 0 <= ref < idx:
                    raise ValueError(f"node {idx} refers to {ref}, which does not precede it")

    @classmethod
    def from_term(cls, term: Term, spec: AlgebraSpec, arity: int | None = None) -> "Circuit":
        if arity is None:
            arity = max_var(term) + 1
        index = {}
        keys = {}
        nodes = []
        for node in postorder(term):
            if isinstance(node, Var):
                if not 0 <= node.index < arity:
                    raise ArityError(f"variable index {node.index} exceeds arity {arity}")
                key = ("var", node.index)
            elif isinstance(node, Const):
                if node.value.spec != spec:
                    raise SpecMismatch(f"constant {node.value} is not an element of {spec}")
                key = ("const", node.value.code)
            elif isinstance(node, Add):
                key = ("add", index[id(node.left)], index[id(node.right)])
            elif isinstance(node, Neg):
                key = ("neg", index[id(node.child)])
            elif isinstance(node, E):
                spec.check_level(node.level, 1, spec.h)
                key = ("e", node.level, index[id(node.child)])
            elif isinstance(node, V):
                spec.check_level(node.level, 1, spec.h - 1)
                key = ("v", node.level, index[id(node.child)])
            else:
                raise TypeError(f"not a term: {node!r}")
            at = keys.get(key)
            if at is None:
                at = keys[key] = len(nodes)
                nodes.append(key)
            index[id(node)] = at
        root = index[id(term)]
        if root != len(nodes) - 1:
            raise AssertionError("postorder must end at the root")
        return cls(spec, arity, nodes)

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def output(self) -> int:
        return len(self.nodes) - 1

    def term_size(self) -> int:
        sizes = []
        for node in self.nodes:
            sizes.append(1 + sum(sizes[r] for r in _refs(node)))
        return sizes[-1]

    def to_term(self, ceiling: int = EXPANSION_CEILING) -> Term:
        n = self.term_size()
        if n > ceiling:
            raise CeilingError(f"expanded term would have {n} nodes, ceiling is {ceiling}", required=n)
        built = []
        for node in self.nodes:
            kind = node[0]
            if kind == "var":
                t = Var(node[1])
            elif kind == "const":
                t = Const(DElem.from_code(self.spec, node[1]))
            elif kind == "add":
                t = Add(built[node[1]], built[node[2]])
            elif kind == "neg":
                t = Neg(built[node[1]])
            elif kind == "e":
                t = E(node[1], built[node[2]])
            else:
                t = V(node[1], built[node[2]])
            built.append(t)
        return built[-1]

    def evaluate(self, assignment) -> DElem:
        return DElem.from_code(self.spec, int(self.evaluate_codes(_codes_of(self, assignment)[None, :])[0]))

    def evaluate_codes(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized evaluation: ``codes`` has shape (N, arity); returns shape (N,)."""
        codes = np.asarray(codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != self.arity:
            raise ArityError(f"expected assignments of length {self.arity}, got shape {codes.shape}")
        tables = self.spec.tables
        n_points = codes.shape[0]
        last_use = _last_use(self.nodes)
        vals = [None] * len(self.nodes)
        for idx, node in enumerate(self.nodes):
            kind = node[0]
            if kind == "var":
                r = codes[:, node[1]]
            elif kind == "const":
                r = np.full(n_points, node[1], dtype=np.int64)
            elif kind == "add":
                r = tables.add(vals[node[1]], vals[node[2]])
            elif kind == "neg":
                r = tables.neg[vals[node[1]]]
            elif kind == "e":
                r = tables.e[node[1]][vals[node[2]]]
            else:
                r = tables.v[node[1]][vals[node[2]]]
            vals[idx] = r
            for ref in _refs(node):
                if last_use[ref] == idx:
                    vals[ref] = None
        return vals[-1]

    def node_values(self, assignment) -> list[DElem]:
        """Value of every node on a single assignment."""
        codes = _codes_of(self, assignment)
        tables = self.spec.tables
        vals = []
        for node in self.nodes:
            kind = node[0]
            if kind == "var":
                r = int(codes[node[1]])
            elif kind == "const":
                r = node[1]
            elif kind == "add":
                r = int(tables.add(np.int64(vals[node[1]]), np.int64(vals[node[2]])))
            elif kind == "neg":
                r = int(tables.neg[vals[node[1]]])
            elif kind == "e":
                r = int(tables.e[node[1]][vals[node[2]]])
            else:
                r = int(tables.v[node[1]][vals[node[2]]])
            vals.append(r)
        return [DElem.from_code(self.spec, c) for c in vals]

    def replace_with_const(self, idx: int, value: DElem) -> "Circuit":
        """Copy of the circuit with node ``idx`` turned into a constant."""
        nodes = list(self.nodes)
        nodes[idx] = ("const", value.code)
        return Circuit(self.spec, self.arity, nodes)

    def __repr__(self):
        return f"Circuit({self.spec}, arity={self.arity}, size={self.size})"


def _refs(node) -> tuple:
    kind = node[0]
    if kind == "add":
        return (node[1], node[2])
    if kind == "neg":
        return (node[1],)
    if kind in ("e", "v"):
        return (node[2],)
    return ()


def _last_use(nodes) -> list[int]:
    last = [len(nodes)] * len(nodes)
    for idx, node in enumerate(nodes):
        for ref in _refs(node):
            last[ref] = idx
    last[-1] = len(nodes)
    return last


def _codes_of(circuit: Circuit, assignment) -> np.ndarray:
    assignment = tuple(assignment)
    if len(assignment) != circuit.arity:
        raise ArityError(f"expected {circuit.arity} values, got {len(assignment)}")
    out = []
    for a in assignment:
        if isinstance(a, DElem):
            if a.spec != circuit.spec:
                raise SpecMismatch(f"{a} is not an element of {circuit.spec}")
            out.append(a.code)
        else:
            out.append(circuit.spec.encode(DElem(circuit.spec, tuple(a)).coords))
    return np.array(out, dtype=np.int64)


def as_circuit(obj, spec: AlgebraSpec | None = None, arity: int | None = None) -> Circuit:
    if isinstance(obj, Circuit):
        if arity is not None and arity != obj.arity:
            raise ArityError(f"circuit has arity {obj.arity}, expected {arity}")
        return obj
    if spec is None:
        raise ValueError("an algebra spec is required to compile a term")
    return Circuit.from_term(obj, spec, arity)


def evaluate(obj, assignment, spec: AlgebraSpec | None = None) -> DElem:
    """Evaluate a term or circuit at a tuple of elements."""
    assignment = tuple(assignment)
    if spec is None and not isinstance(obj, Circuit):
        spec = next((a.spec for a in assignment if isinstance(a, DElem)), None)
        if spec is None:
            consts = [n.value for n in postorder(obj) if isinstance(n, Const)]
            if not consts:
                raise ValueError("cannot infer the algebra; pass spec=")
            spec = consts[0].spec
    circuit = as_circuit(obj, spec, None if isinstance(obj, Circuit) else len(assignment))
    return circuit.evaluate(assignment)


def size(obj) -> int:
    """|c|: gate count for a circuit, node count for a term."""
    return obj.size if isinstance(obj, Circuit) else term_size(obj)


def term_of_circuit(c: Circuit, ceiling: int = EXPANSION_CEILING) -> Term:
    return c.to_term(ceiling)


def all_assignments(spec: AlgebraSpec, arity: int) -> np.ndarray:
    """Every assignment as a code array of shape (|D|^arity, arity), lexicographic."""
    n = spec.size
    idx = np.arange(n ** arity, dtype=np.int64)
    cols = []
    for pos in range(arity):
        cols.append((idx // n ** (arity - 1 - pos)) % n)
    return np.stack(cols, axis=1) if cols else np.zeros((1, 0), dtype=np.int64)


# -- text format -----------------------------------------------------------------


def _tokenize(text: str):
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch in "()":
            yield ch, line, col
            i += 1
            col += 1
        elif ch.isspace():
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1
        elif ch == ";":
            while i < len(text) and text[i] != "\n":
                i += 1
        else:
            start, scol = i, col
            while i < len(text) and not text[i].isspace() and text[i] not in "()":
                i += 1
                col += 1
            yield text[start:i], line, scol


def parse_term(text: str, spec: AlgebraSpec, arity: int | None = None) -> Term:
    """Parse the s-expression grammar into a term."""
    tokens = list(_tokenize(text))
    pos = 0
    end = tokens[-1][1:] if tokens else (1, 1)

    def next_tok():
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of input", *end)
        tok = tokens[pos]
        pos += 1
        return tok

    def expect(value):
        tok, ln, cl = next_tok()
        if tok != value:
            raise ParseError(f"expected {value!r}, found {tok!r}", ln, cl)

    def integer(what):
        tok, ln, cl = next_tok()
        try:
            return int(tok), ln, cl
        except ValueError:
            raise ParseError(f"expected {what}, found {tok!r}", ln, cl) from None

    # explicit stack: frames are [op, args, line, col, param]
    stack = []
    result = None
    while True:
        tok, ln, cl = next_tok()
        if tok != "(":
            raise ParseError(f"expected '(', found {tok!r}", ln, cl)
        op, oln, ocl = next_tok()
        if op == "var":
            i, iln, icl = integer("variable index")
            if i < 0 or (arity is not None and i >= arity):
                raise ParseError(f"variable index {i} overflows arity {arity}", iln, icl)
            expect(")")
            node = Var(i)
        elif op == "const":
            lit, lln, lcl = next_tok()
            try:
                node = Const(spec.parse_element(lit))
            except ValueError as exc:
                raise ParseError(str(exc), lln, lcl) from None
            expect(")")
        elif op in ("+", "-", "e", "v"):
            param = None
            if op in ("e", "v"):
                param, pln, pcl = integer("level")
                hi = spec.h if op == "e" else spec.h - 1
                if not 1 <= param <= hi:
                    raise ParseError(f"level out of range: {op} {param} (valid 1..{hi})", pln, pcl)
            stack.append([op, [], oln, ocl, param])
            continue
        else:
            raise ParseError(f"unknown operator {op!r}", oln, ocl)
        # reduce completed nodes
        while True:
            if not stack:
                result = node
                break
            frame = stack[-1]
            frame[1].append(node)
            fop, args, fln, fcl, param = frame
            if fop == "+":
                if pos < len(tokens) and tokens[pos][0] == ")":
                    if len(args) < 2:
                        raise ParseError("'+' needs at least two arguments", fln, fcl)
                    pos += 1
                    node = sum_terms(args, None)
                    stack.pop()
                    continue
                break
            expect(")")
            stack.pop()
            if fop == "-":
                node = Neg(args[0])
            elif fop == "e":
                node = E(param, args[0])
            else:
                node = V(param, args[0])
        if result is not None:
            break
    if pos != len(tokens):
        tok, ln, cl = tokens[pos]
        raise ParseError(f"trailing input {tok!r}", ln, cl)
    return result


def parse(text: str, spec: AlgebraSpec, arity: int | None = None) -> Circuit:
    return Circuit.from_term(parse_term(text, spec, arity), spec, arity)


def to_text(obj, ceiling: int = EXPANSION_CEILING) -> str:
    """Print a term or circuit; left-nested sums print as one n-ary ``+``."""
    term = obj.to_term(ceiling) if isinstance(obj, Circuit) else obj
    out = []
    stack = [term]
    while stack:
        item = stack.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        if isinstance(item, Var):
            out.append(f"(var {item.index})")
        elif isinstance(item, Const):
            out.append(f"(const {item.value})")
        elif isinstance(item, Add):
            summands = []
            cur = item
            while isinstance(cur, Add):
                summands.append(cur.right)
                cur = cur.left
            summands.append(cur)
            out.append("(+")
            stack.append(")")
            for s in summands:  # reversed order pops leftmost first
                stack.append(s)
                stack.append(" ")
        elif isinstance(item, Neg):
            out.append("(- ")
            stack.append(")")
            stack.append(item.child)
        elif isinstance(item, E):
            out.append(f"(e {item.level} ")
            stack.append(")")
            stack.append(item.child)
        else:
            out.append(f"(v {item.level} ")
            stack.append(")")
            stack.append(item.child)
    return "".join(out)


# -- random circuits (test and bench support) ------------------------------------


def random_circuit(spec: AlgebraSpec, arity: int, size: int, rng: random.Random,
                   v_weight: float = 0.3) -> Circuit:
    """A random circuit with at most ``size`` nodes, biased toward using v-gates."""
    nodes: list[Term] = [Var(i) for i in range(arity)]
    while len(nodes) < size:
        r = rng.random()
        pick = lambda: nodes[rng.randrange(max(0, len(nodes) - 8), len(nodes))] \
            if rng.random() < 0.6 else rng.choice(nodes)
        if r < v_weight and spec.h >= 2:
            nodes.append(V(rng.randint(1, spec.h - 1), pick()))
        elif r < v_weight + 0.2:
            nodes.append(E(rng.randint(1, spec.h), pick()))
        elif r < v_weight + 0.3:
            nodes.append(Neg(pick()))
        elif r < v_weight + 0.38:
            nodes.append(Const(spec.element(tuple(rng.randrange(p) for p in spec.primes))))
        else:
            nodes.append(Add(pick(), pick()))
    return Circuit.from_term(nodes[-1], spec, arity)
