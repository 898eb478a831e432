import json
import random

from hypothesis import given, strategies as st

import oracles as O
from nilcsat.algebra import AlgebraSpec, DElem
from nilcsat.canonical import (CanonicalForm, LevelForm, canonicalize, evaluate_canonical,
                               evaluate_canonical_codes, evaluate_level_codes, size_bound, specialize)
from nilcsat.terms import Add, Circuit, Const, E, V, Var, all_assignments, parse, random_circuit, term_of_circuit

D23 = AlgebraSpec((2, 3))
SPECS = [D23, AlgebraSpec((2, 3, 2)), AlgebraSpec((3, 2, 3))]


def example_form():
    t = Add(Add(V(1, Add(E(2, Var(0)), E(2, Var(0)))), E(1, Var(0))), Const(D23.element(1, 0)))
    return canonicalize(Circuit.from_term(t, D23, 1))


def test_example_structure():
    f = example_form()
    l1, l2 = f.level(1), f.level(2)
    assert l1.const == 1 and l1.lin == (1,)
    assert len(l1.vterms) == 1
    kappa, inner = l1.vterms[0]
    assert kappa == 1 and inner.level == 2 and inner.lin == (2,) and inner.const == 0
    assert l2.const == 0 and l2.lin == (0,) and not l2.vterms


def test_example_value():
    assert evaluate_canonical(example_form(), (D23.element(1, 1),)) == D23.element(1, 0)


def test_zero_and_cancellation():
    f = canonicalize(parse("(const 0:0)", D23, 1))
    assert all(lf.const == 0 and not any(lf.lin) and not lf.vterms for lf in f.levels)
    f = canonicalize(parse("(+ (e 2 (var 0)) (e 2 (var 0)) (e 2 (var 0)))", D23))
    assert f.level(2).lin == (0,) and f.level(2).is_constant
    assert f.level(1).is_constant and f.level(1).const == 0


def test_top_level_only_form():
    lf = LevelForm(2, 1, (1,))
    f = CanonicalForm(D23, 1, (LevelForm(1, 0, (0,)), lf))
    assert evaluate_canonical(f, (D23.element(0, 2),)) == D23.element(0, 0)


def test_zero_assignment_gives_constants_and_inner_images():
    rng = random.Random(5)
    for spec in SPECS:
        for _ in range(20):
            c = random_circuit(spec, 2, 25, rng)
            f = canonicalize(c)
            assert evaluate_canonical(f, (spec.zero, spec.zero)) == c.evaluate((spec.zero, spec.zero))


def test_json_roundtrip():
    f = example_form()
    back = CanonicalForm.from_json(json.loads(json.dumps(f.to_json())))
    assert back.levels == f.levels


def test_shared_inners_are_interned():
    # the same inner appearing twice merges into one v-term with kappa 2
    c = parse("(+ (v 1 (e 2 (var 0))) (v 1 (+ (e 2 (var 0)) (const 0:0))))", AlgebraSpec((3, 2)))
    lf = canonicalize(c).level(1)
    assert len(lf.vterms) == 1 and lf.vterms[0][0] == 2


@given(st.sampled_from(SPECS), st.integers(1, 3), st.integers(1, 40), st.integers(0, 10 ** 6))
def test_canonical_equals_direct_evaluation(spec, arity, size, seed):
    c = random_circuit(spec, arity, size, random.Random(seed))
    f = canonicalize(c)
    codes = all_assignments(spec, arity)
    assert (evaluate_canonical_codes(f, codes) == c.evaluate_codes(codes)).all()
    assert f.size() <= size_bound(c.size, spec.h)


@given(st.sampled_from(SPECS), st.integers(0, 10 ** 6))
def test_scalar_evaluation_matches_oracle(spec, seed):
    rng = random.Random(seed)
    c = random_circuit(spec, 2, 20, rng)
    f = canonicalize(c)
    t = term_of_circuit(c)
    for _ in range(10):
        xs = [DElem.from_code(spec, rng.randrange(spec.size)) for _ in range(2)]
        assert evaluate_canonical(f, xs).coords == O.eval_term(spec.primes, t, [x.coords for x in xs])


@given(st.sampled_from(SPECS), st.integers(0, 10 ** 6))
def test_specialize_agrees_on_slice(spec, seed):
    rng = random.Random(seed)
    c = random_circuit(spec, 2, 25, rng)
    f = canonicalize(c)
    base = [DElem.from_code(spec, rng.randrange(spec.size)) for _ in range(2)]
    k = rng.randint(1, spec.h)
    fixed = [b.coords for b in base]
    codes = all_assignments(spec, 2)
    for lvl in range(1, spec.h + 1):
        g = specialize(f.level(lvl), spec, fixed, k)
        for row in codes[:: max(1, len(codes) // 40)]:
            # move the base to the slice point whose level-k coordinates come from row
            pt = []
            for i in range(2):
                coords = list(fixed[i])
                coords[k - 1] = spec.decode(int(row[i]))[k - 1]
                pt.append(spec.element(*coords))
            want = c.evaluate(pt).coords[lvl - 1]
            pt_codes = [[p.code for p in pt]]
            assert int(evaluate_level_codes(g, spec, pt_codes)[0]) == want
        if lvl > k:
            assert g.is_constant
