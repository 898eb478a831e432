import itertools
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nilcsat.algebra import AlgebraSpec
from nilcsat.cnf import CnfFormula
from nilcsat.errors import CeilingError, LevelError, SpecMismatch
from nilcsat.funcrep import (LevelFunction, build_and, build_and_tower, build_cnf_gadget, represent,
                             represent_circuit, size_envelope)
from nilcsat.terms import Circuit, E, V, Var, evaluate, term_size

D23 = AlgebraSpec((2, 3))
D32 = AlgebraSpec((3, 2))
D232 = AlgebraSpec((2, 3, 2))


def point_on_level(spec, level, residues):
    return tuple(spec.unit(level, r) for r in residues)


def table_matches(g: LevelFunction, spec):
    c = represent_circuit(g, spec)
    q = spec.p(g.source)
    for idx, pt in enumerate(itertools.product(range(q), repeat=g.arity)):
        got = c.evaluate(point_on_level(spec, g.source, pt)) if g.arity else c.evaluate(())
        if got != spec.unit(g.target, g.table[idx]):
            return False
    return True


def test_three_point_example():
    g = LevelFunction(2, 1, 1, (1, 0, 1))
    t = represent(g, D23)
    for r, want in zip(range(3), (1, 0, 1)):
        assert evaluate(t, (D23.unit(2, r),), D23) == D23.unit(1, want)


def test_zero_function_is_constant_zero():
    t = represent(LevelFunction(2, 1, 2, (0,) * 9), D23)
    assert term_size(t) == 1 and evaluate(t, (D23.zero, D23.zero), D23).is_zero()


def test_nonzero_test_equals_v():
    t = represent(LevelFunction(2, 1, 1, (0, 1, 1)), D23)
    for r in range(3):
        x = D23.unit(2, r)
        assert evaluate(t, (x,), D23) == evaluate(V(1, E(2, Var(0))), (x,), D23)


def test_compiled_terms_read_only_the_source_level():
    g = LevelFunction.from_callable(D232, 2, 1, 2, lambda pt: pt[0] * pt[1] % 2)
    c = represent_circuit(g, D232)
    rng = random.Random(1)
    for _ in range(50):
        pt = [D232.element(rng.randrange(2), rng.randrange(3), rng.randrange(2)) for _ in range(2)]
        proj = tuple(D232.unit(2, x.coords[1]) for x in pt)
        assert c.evaluate(pt) == c.evaluate(proj)


def test_and_examples():
    a = build_and(2, 1, D23)
    assert evaluate(a, (D23.element(0, 1), D23.element(0, 2)), D23) == D23.element(1, 0)
    assert evaluate(a, (D23.zero, D23.element(0, 1)), D23) == D23.zero
    a2 = build_and(2, 2, D232)
    x = D232.element(0, 0, 1)
    assert evaluate(a2, (x, x), D232) == D232.element(0, 1, 0)


def test_and_tower():
    tower = build_and_tower(2, D232)
    and21 = build_and(2, 1, D232)
    for r in itertools.product(range(3), repeat=2):
        pt = point_on_level(D232, 2, r)
        assert evaluate(tower, pt, D232) == evaluate(and21, pt, D232)
    for spec in (D23, D232, AlgebraSpec((2, 3, 2, 3))):
        s = 2
        arity = s ** (spec.h - 2)
        t = build_and_tower(s, spec)
        ones = (spec.unit(spec.h - 1),) * arity
        assert evaluate(t, ones, spec) == spec.unit(1)
        for i in range(arity):
            pt = list(ones)
            pt[i] = spec.zero
            assert evaluate(t, pt, spec).is_zero()


def test_cnf_gadget_examples():
    part = CnfFormula(2, ((1, 2),))
    g = build_cnf_gadget(part, D23)
    assert evaluate(g, (D23.element(0, 1), D23.zero), D23) == D23.unit(1)
    assert evaluate(g, (D23.zero, D23.zero), D23).is_zero()
    contra = build_cnf_gadget(CnfFormula(1, ((1,), (-1,))), D23)
    for x in D23.elements():
        assert evaluate(contra, (x,), D23).is_zero()


def test_cnf_gadget_reads_top_level_of_arbitrary_inputs():
    part = CnfFormula(3, ((1, -2, 3), (-1, 2)))
    g = Circuit.from_term(build_cnf_gadget(part, D232), D232, 3)
    for xs in itertools.product(list(D232.elements())[::2], repeat=3):
        bits = [bool(x.coords[-1]) for x in xs]
        assert g.evaluate(xs) == (D232.unit(2) if part.evaluate(bits) else D232.zero)


def test_errors():
    with pytest.raises(LevelError):
        LevelFunction(1, 2, 1, (0, 0))
    with pytest.raises(SpecMismatch):
        build_and(2, 1, AlgebraSpec((2, 2)))
    with pytest.raises(CeilingError) as info:
        represent(LevelFunction(2, 1, 7, (0,) * 3 ** 7), D23)
    assert info.value.required == 7
    with pytest.raises(ValueError):
        represent(LevelFunction(2, 1, 2, (0, 1)), D23)


SPECS = [D23, D32, D232]


@st.composite
def level_functions(draw):
    spec = draw(st.sampled_from(SPECS))
    source = draw(st.integers(2, spec.h))
    target = draw(st.integers(1, source - 1))
    q = spec.p(source)
    m = draw(st.integers(0, 4 if q == 2 else 3))
    table = tuple(draw(st.lists(st.integers(0, spec.p(target) - 1), min_size=q ** m, max_size=q ** m)))
    return spec, LevelFunction(source, target, m, table)


@given(level_functions())
def test_compiler_exact_and_within_envelope(data):
    spec, g = data
    assert table_matches(g, spec)
    assert represent_circuit(g, spec).size <= size_envelope(g, spec)


@given(st.integers(0, 10 ** 6))
def test_two_level_batch_agreement(seed):
    rng = np.random.default_rng(seed)
    m = 4
    table = tuple(int(x) for x in rng.integers(0, 2, 3 ** m))
    c = represent_circuit(LevelFunction(2, 1, m, table), D23)
    pts = np.array(list(itertools.product(range(3), repeat=m)))
    codes = pts * D23.strides[1]
    got = c.evaluate_codes(codes)
    assert [D23.decode(int(v))[0] for v in got] == list(table)
