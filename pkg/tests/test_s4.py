import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles as O
from nilcsat.cnf import CnfFormula
from nilcsat.errors import ParseError
from nilcsat import s4
from nilcsat.s4 import (A4, C_TARGET, ELEMENTS, IDENTITY, S4, SIGMA, TAU, V4, S4Elem, WComm, WConst, WInv,
                        WMul, WVar, alpha, b_value, build_clause_part, commutator, commutator_subgroup,
                        coset_factored_values, coset_solvable, decomposition_table, evaluate_word,
                        evaluate_word_batch, in_V, parse_word, reduce_s4, solve_s4_witness, word_arity,
                        word_size, word_to_text)


def as_dict(a: S4Elem) -> dict:
    return {i + 1: a.images[i] + 1 for i in range(4)}


def test_cycle_notation():
    assert str(IDENTITY) == "id"
    assert str(S4Elem.from_cycles("(12)(34)")) == "(12)(34)"
    assert S4Elem.from_cycles("(132)") == SIGMA.inverse()
    for a in ELEMENTS:
        assert S4Elem.from_cycles(str(a)) == a
    with pytest.raises(ValueError):
        S4Elem((0, 0, 1, 2))


def test_composition_matches_oracle():
    for a, b in itertools.product(ELEMENTS, repeat=2):
        assert as_dict(a * b) == O.p_mul(as_dict(a), as_dict(b))
        assert as_dict(commutator(a, b)) == O.p_comm(as_dict(a), as_dict(b))


def test_commutator_examples():
    assert commutator(TAU, SIGMA) == S4Elem.from_cycles("(132)")
    assert all(commutator(IDENTITY, g) == IDENTITY for g in ELEMENTS)
    assert in_V(C_TARGET) and not in_V(SIGMA)
    assert b_value(SIGMA) and not b_value(TAU)


def test_derived_series():
    assert len(S4) == 24 and len(A4) == 12 and len(V4) == 4
    assert commutator_subgroup(S4) == A4
    assert commutator_subgroup(A4) == V4
    assert commutator_subgroup(V4) == {IDENTITY}


def test_tables_consistent():
    for a in ELEMENTS:
        assert s4.INV[a.index] == a.inverse().index
        assert s4.IN_V[a.index] == (a in V4)
        for b in ELEMENTS:
            assert s4.MUL[a.index, b.index] == (a * b).index


def test_word_text_roundtrip():
    w = WMul(WComm(WVar(0, "y1"), WInv(WVar(4, "x1"))), WConst(TAU))
    text = word_to_text(w)
    assert text == "([y1,x1^-1]*(12))"
    back = parse_word(text)
    vals = np.random.default_rng(0).integers(0, 24, (200, 5))
    assert (evaluate_word_batch(back, vals) == evaluate_word_batch(w, vals)).all()
    assert word_arity(w) == 5 and word_size(w) == 6
    with pytest.raises(ParseError):
        parse_word("[y1,y2")
    with pytest.raises(ParseError):
        parse_word("z9")


def test_alpha_values_lie_in_V():
    w = alpha(2)
    vals = np.random.default_rng(1).integers(0, 24, (2000, 6))
    out = evaluate_word_batch(w, vals)
    assert s4.IN_V[out].all()


def test_single_clause_gadget_examples():
    g = build_clause_part(CnfFormula(1, ((1,),)))
    assert not in_V(evaluate_word(g, (SIGMA,)))
    assert in_V(evaluate_word(g, (TAU,)))
    contra = build_clause_part(CnfFormula(1, ((1,), (-1,))))
    assert all(in_V(evaluate_word(contra, (x,))) for x in ELEMENTS)


def all_parts(n):
    lits = [l for v in range(1, n + 1) for l in (v, -v)]
    clauses = [c for w in range(1, n + 1) for c in itertools.combinations(lits, w)
               if len({abs(l) for l in c}) == len(c)]
    for m in (1, 2):
        for cs in itertools.combinations(clauses, m):
            yield CnfFormula(n, cs)


def test_clause_gadget_coset_property_exhaustive():
    for n in (1, 2):
        rows = np.array(list(itertools.product(range(24), repeat=n)), dtype=np.int64)
        bits = ~s4.PARITY[rows].astype(bool)
        for part in all_parts(n):
            vals = evaluate_word_batch(build_clause_part(part), rows)
            sat = np.array([part.evaluate(b) for b in bits])
            assert (s4.IN_V[vals] == ~sat).all()
            assert (s4.PARITY[vals] == 0).all()


def test_reduction_sizes():
    phi = CnfFormula(3, ((1, 2), (-1, 3), (2, -3), (1,)))
    red = reduce_s4(phi)
    assert red.s == 2 and len(red.parts) == 2
    assert red.metadata()["target"] == "(12)(34)"
    assert reduce_s4(CnfFormula(2, ((1,), (2,), (-1, 2)))).s == 2
    with pytest.raises(ValueError):
        reduce_s4(CnfFormula(1, ()))


def test_decomposition_table():
    table = decomposition_table()
    assert set(table) == set(V4)
    for u, ys in table.items():
        assert commutator(commutator(ys[0], ys[1]), commutator(ys[2], ys[3])) == u


def test_witness_example():
    red = reduce_s4(CnfFormula(1, ((1,),)))
    w = solve_s4_witness(red, (True,))
    assert w[4] == SIGMA and in_V(commutator(commutator(w[0], w[1]), commutator(w[2], w[3])))
    assert evaluate_word(red.word, w) == C_TARGET
    with pytest.raises(ValueError):
        solve_s4_witness(red, (False,))


def formulas(max_n, max_m):
    for n in range(1, max_n + 1):
        lits = [l for v in range(1, n + 1) for l in (v, -v)]
        clauses = [c for w in range(1, min(3, n) + 1) for c in itertools.combinations(lits, w)
                   if len({abs(l) for l in c}) == len(c)]
        for m in range(1, max_m + 1):
            for cs in itertools.combinations_with_replacement(clauses, m):
                yield CnfFormula(n, cs)


def test_end_to_end_small():
    for phi in formulas(2, 2):
        red = reduce_s4(phi)
        solvable, hit = coset_solvable(red)
        assert solvable == O.cnf_sat(phi.n, phi.clauses)
        for bits in itertools.product((False, True), repeat=phi.n):
            if phi.evaluate(bits):
                assert evaluate_word(red.word, solve_s4_witness(red, bits)) == C_TARGET


def test_brute_force_agrees_for_one_variable():
    # 24^5 assignments: the full search matches the coset-factored one
    for phi in (CnfFormula(1, ((1,),)), CnfFormula(1, ((1,), (-1,)))):
        red = reduce_s4(phi)
        grid = np.array(list(itertools.product(range(24), repeat=4)), dtype=np.int64)
        found = False
        for x in range(24):
            vals = np.concatenate([grid, np.full((len(grid), 1), x)], axis=1)
            if (evaluate_word_batch(red.word, vals) == C_TARGET.index).any():
                found = True
                break
        assert found == coset_solvable(red)[0]


@given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 10 ** 6))
def test_coset_factoring_matches_full_evaluation(n, m, seed):
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(m):
        w = int(rng.integers(1, min(3, n) + 1))
        vs = rng.choice(np.arange(1, n + 1), size=w, replace=False)
        clauses.append(tuple(int(v) * (1 if rng.random() < 0.5 else -1) for v in vs))
    red = reduce_s4(CnfFormula(n, tuple(clauses)))
    vals = rng.integers(0, 24, (500, red.arity))
    assert (coset_factored_values(red, vals) == evaluate_word_batch(red.word, vals)).all()
