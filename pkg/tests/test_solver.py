import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from nilcsat.algebra import AlgebraSpec, DElem
from nilcsat.canonical import canonicalize
from nilcsat.ccircuit import eval_cc, extract_cc
from nilcsat.errors import CeilingError, SpecMismatch
from nilcsat.gf import AffineSystem
from nilcsat.solver import (Instance, SliceSet, Status, SupportBound, affine_conjunction, ceqv,
                            combine_system_V, density_report, extract_conjunction, restrict_to_slice,
                            slice_pipeline, solution_set, solve, solve_brute, solve_random, solve_sparse)
from nilcsat.terms import Add, Circuit, Const, E, Neg, V, Var, all_assignments, evaluate, parse, random_circuit

D23 = AlgebraSpec((2, 3))
D232 = AlgebraSpec((2, 3, 2))


def el(spec, *c):
    return spec.element(*c)


def support_one():
    return parse("(+ (v 1 (+ (e 2 (var 0)) (e 2 (var 1)))) (const 1:0))", D23)


# -- brute ---------------------------------------------------------------------------


def test_brute_examples():
    r = solve_brute(Instance(parse("(e 1 (var 0))", D23)), count=True)
    assert r.status is Status.SAT and r.witness == (D23.zero,) and r.count == 3
    assert solve_brute(Instance(parse("(const 1:0)", D23, 1))).status is Status.UNSAT
    r = solve_brute(Instance(parse("(var 0)", D23), el(D23, 1, 2)), count=True)
    assert r.witness == (el(D23, 1, 2),) and r.count == 1


def test_brute_evaluations_and_ceiling():
    r = solve_brute(Instance(parse("(var 0)", D23), el(D23, 0, 2)))
    assert r.evaluations == 3
    with pytest.raises(CeilingError) as info:
        solve_brute(Instance(parse("(var 0)", D23, 12)), ceiling=1000)
    assert info.value.required == 6 ** 12


# -- sparse --------------------------------------------------------------------------


def test_sparse_examples():
    r = solve_sparse(Instance(support_one()), SupportBound.exhaustive())
    assert r.status is Status.SAT and r.support == 1
    assert r.witness == (el(D23, 0, 1), D23.zero)
    r = solve_sparse(Instance(parse("(const 0:0)", D23, 2)))
    assert r.witness == (D23.zero, D23.zero) and r.support == 0 and r.evaluations == 1


def test_sparse_fixed_bound_and_escalation():
    inst = Instance(parse("(+ (e 1 (var 0)) (const 1:0))", D23))
    r = solve_sparse(inst, SupportBound.fixed(0))
    assert r.status is Status.UNSAT_AT_BOUND and r.status.exit_code == 2
    r = solve_sparse(inst, SupportBound.fixed(0, escalate=True))
    assert r.status is Status.SAT and r.witness == (el(D23, 1, 0),) and r.extra["escalated"]


def test_sparse_unsat_is_complete_at_n():
    inst = Instance(parse("(const 1:0)", D23, 2))
    assert solve_sparse(inst, SupportBound.exhaustive()).status is Status.UNSAT
    assert solve_sparse(inst, SupportBound.fixed(1)).status is Status.UNSAT_AT_BOUND


def test_support_bound_values():
    assert SupportBound.sesh().value(16, 3, 100) == 16
    assert SupportBound.sesh(c=0.5).value(16, 3, 100) == 8
    assert SupportBound.sesh().value(16, 3, 5) == 5
    assert SupportBound.sesh().value(1, 3, 5) == 0
    assert SupportBound.exhaustive().value(16, 3, 7) == 7
    assert SupportBound.parse("fixed:2").value(99, 2, 9) == 2
    assert SupportBound.parse("sesh:2").c == 2
    with pytest.raises(ValueError):
        SupportBound.parse("fixed")
    with pytest.raises(ValueError):
        SupportBound.parse("wide")


# -- random --------------------------------------------------------------------------


def test_random_examples():
    inst = Instance(support_one())
    ok = sum(solve_random(inst, 20, seed).status is Status.SAT for seed in range(100))
    assert ok >= 99
    r = solve_random(Instance(parse("(const 0:0)", D23, 3)), 50, 7)
    assert r.status is Status.SAT and r.evaluations == 1
    r = solve_random(Instance(parse("(const 1:0)", D23, 2)), 123, 7)
    assert r.status is Status.GIVE_UP and r.evaluations == 123 and r.status.exit_code == 2


def test_random_is_seeded():
    inst = Instance(parse("(+ (var 0) (var 1) (var 2))", D232), el(D232, 1, 1, 1))
    a = solve_random(inst, 5000, 11)
    b = solve_random(inst, 5000, 11)
    assert a.witness == b.witness and a.evaluations == b.evaluations


def test_solve_dispatch():
    inst = Instance(support_one())
    assert solve(inst, "brute").witness == (D23.zero, el(D23, 0, 1))
    assert solve(inst, "sparse", SupportBound.exhaustive()).witness == (el(D23, 0, 1), D23.zero)
    assert solve(inst, "random", seed=1).status is Status.SAT
    with pytest.raises(ValueError):
        solve(inst, "magic")


# -- equivalence ---------------------------------------------------------------------


def test_ceqv_examples():
    assert ceqv(parse("(+ (e 1 (var 0)) (- (e 1 (var 0))))", D23)).status is Status.EQUIV
    r = ceqv(parse("(v 1 (e 2 (var 0)))", D23))
    assert r.status is Status.COUNTEREXAMPLE
    assert r.witness == (el(D23, 0, 1),) and r.value == D23.unit(1)
    assert ceqv(parse("(const 0:0)", D23, 1)).status is Status.EQUIV


def test_ceqv_solver_variants():
    t = parse("(v 1 (+ (e 2 (var 0)) (e 2 (var 1))))", D23)
    assert ceqv(t, solver="sparse", bound=SupportBound.fixed(0)).status is Status.EQUIV_AT_BOUND
    assert ceqv(t, solver="sparse", bound=SupportBound.exhaustive()).status is Status.COUNTEREXAMPLE
    zero = parse("(e 1 (const 0:2))", D23, 2)
    assert ceqv(zero, solver="random", budget=100).status is Status.GIVE_UP


# -- density -------------------------------------------------------------------------


def test_density_examples():
    rep = density_report(Instance(parse("(e 1 (var 0))", D23)), samples=0)
    assert rep["counts"]["0:0"] == 3 and rep["counts"]["1:0"] == 3
    assert sum(rep["counts"].values()) == 6
    rep = density_report(Instance(parse("(const 0:0)", D23, 2)), samples=0)
    assert rep["counts"]["0:0"] == 36
    rep = density_report(Instance(parse("(var 0)", D23)), samples=0)
    assert set(rep["counts"].values()) == {1}


def test_density_support_one_and_estimates():
    rep = density_report(Instance(support_one()), samples=20000, seed=3)
    assert rep["counts"]["0:0"] == 24 and rep["density"] == pytest.approx(2 / 3)
    est = rep["estimates"]["0:0"]
    assert abs(est["fraction"] - 2 / 3) < 5 * est["stderr"]


# -- properties against brute force ------------------------------------------------------


SPECS = [D23, D232, AlgebraSpec((3, 2, 3))]


@st.composite
def instances(draw, max_n=3):
    spec = draw(st.sampled_from(SPECS))
    n = draw(st.integers(1, max_n))
    size = draw(st.integers(1, 30))
    seed = draw(st.integers(0, 10 ** 6))
    c = random_circuit(spec, n, size, random.Random(seed))
    target = DElem.from_code(spec, draw(st.integers(0, spec.size - 1)))
    return Instance(c, target)


def oracle_solutions(inst):
    P = inst.spec.primes
    from nilcsat.terms import term_of_circuit
    t = term_of_circuit(inst.circuit)
    return [xs for xs in itertools.product(O.d_elements(P), repeat=inst.arity)
            if O.eval_term(P, t, xs) == inst.target.coords]


@given(instances(max_n=2))
def test_brute_matches_oracle(inst):
    sols = oracle_solutions(inst)
    r = solve_brute(inst, count=True)
    assert r.count == len(sols)
    assert (r.witness is None) == (not sols)
    if sols:
        assert tuple(a.coords for a in r.witness) == sols[0]


@given(instances(), st.sampled_from([1, 3]))
def test_sparse_exhaustive_equals_brute(inst, workers):
    b = solve_brute(inst)
    s = solve_sparse(inst, SupportBound.exhaustive(), workers)
    assert (b.status is Status.SAT) == (s.status is Status.SAT)
    if s.witness is not None:
        assert inst.check(s.witness)
        # no witness of smaller support exists
        sols = all_assignments(inst.spec, inst.arity)
        vals = inst.circuit.evaluate_codes(sols)
        min_support = (sols[vals == inst.target.code] != 0).sum(axis=1).min()
        assert s.support == min_support


@given(instances(), st.integers(0, 1000))
def test_random_witnesses_are_valid(inst, seed):
    r = solve_random(inst, 200, seed)
    if r.status is Status.SAT:
        assert inst.check(r.witness)
    assert r.evaluations <= 200


@given(instances())
def test_ceqv_agrees_with_brute(inst):
    r = ceqv(inst.circuit)
    vals = inst.circuit.evaluate_codes(all_assignments(inst.spec, inst.arity))
    assert (r.status is Status.EQUIV) == (vals == 0).all()
    if r.status is Status.COUNTEREXAMPLE:
        assert not r.value.is_zero()


@given(instances(max_n=3))
def test_results_do_not_depend_on_workers(inst):
    base = [solve(inst, s, SupportBound.exhaustive(), 300, 5, 1).to_json(False)
            for s in ("brute", "sparse", "random")]
    for w in (2, 8):
        assert [solve(inst, s, SupportBound.exhaustive(), 300, 5, w).to_json(False)
                for s in ("brute", "sparse", "random")] == base


def test_multi_block_determinism():
    # large enough for several blocks: 18^4 = 104976 candidates
    spec = AlgebraSpec((3, 2, 3))
    c = parse("(+ (v 1 (v 2 (e 3 (var 3)))) (e 1 (var 0)) (e 2 (var 2)) (e 3 (var 1)))", spec)
    inst = Instance(c, el(spec, 2, 1, 0))
    runs = [solve_brute(inst, workers=w).to_json(False) for w in (1, 4, 8)]
    assert runs[0] == runs[1] == runs[2]
    assert runs[0]["evaluations"] > 4096
    runs = [solve_random(inst, 40000, 9, w).to_json(False) for w in (1, 4, 8)]
    assert runs[0] == runs[1] == runs[2]


# -- slices, combiner, extraction ---------------------------------------------------


def test_slice_members():
    u = (el(D232, 1, 2, 0), el(D232, 0, 1, 1))
    sl = SliceSet(D232, u, 2)
    members = sl.members()
    assert members.shape == (9, 2)
    for row in members:
        b = [DElem.from_code(D232, int(x)) for x in row]
        assert sl.contains(b)
    assert len({tuple(r) for r in members.tolist()}) == 9


def test_slice_with_level_free_term_gives_constants():
    t = parse("(+ (e 1 (var 0)) (const 1:0))", D23)
    for u in (D23.zero, el(D23, 1, 0)):
        system = restrict_to_slice(canonicalize(t), SliceSet(D23, (u,), 2))
        assert all(f.is_constant for f in system.equations)
        solvable = system.holds(system.slice.members()).any()
        assert solvable == all(f.const == 0 for f in system.equations)


def test_combiner_constant_systems():
    t = parse("(const 0:0:0)", D232, 2)
    system, tstar = slice_pipeline(t, D232, (D232.zero, D232.zero), 2)
    assert isinstance(tstar, Const) and tstar.value == D232.unit(1)
    t = parse("(const 0:1:0)", D232, 1)
    _, tstar = slice_pipeline(t, D232, (D232.zero,), 2)
    assert isinstance(tstar, Const) and tstar.value.is_zero()


def test_combiner_level_one_needs_p1_two():
    t = parse("(e 1 (var 0))", AlgebraSpec((3, 2)))
    with pytest.raises(SpecMismatch):
        slice_pipeline(t, AlgebraSpec((3, 2)), (el(AlgebraSpec((3, 2)), 1, 0),), 1)


def check_combiner(t, spec, u, k):
    system, tstar = slice_pipeline(t, spec, u, k)
    members = system.slice.members()
    holds = system.holds(members)
    vals = Circuit.from_term(tstar, spec, len(u)).evaluate_codes(members) if not isinstance(tstar, Const) \
        else np.full(len(members), tstar.value.code)
    assert set(np.unique(vals).tolist()) <= {0, spec.unit(1).code}
    assert ((vals == spec.unit(1).code) == holds).all()
    # the system describes t = 0 on the slice
    direct = Circuit.from_term(t, spec, len(u)).evaluate_codes(members) if not isinstance(t, Circuit) \
        else t.evaluate_codes(members)
    assert ((direct == 0) == holds).all()
    return system, tstar


@settings(max_examples=40)
@given(st.sampled_from([D23, D232]), st.integers(1, 3), st.integers(0, 10 ** 6), st.data())
def test_combiner_is_indicator_of_system(spec, n, seed, data):
    rng = random.Random(seed)
    c = random_circuit(spec, n, rng.randint(3, 20), rng)
    u = tuple(DElem.from_code(spec, rng.randrange(spec.size)) for _ in range(n))
    k = data.draw(st.integers(1 if spec.p(1) == 2 else 2, spec.h))
    check_combiner(c, spec, u, k)


def test_extraction_support_one_example():
    t = support_one()
    witness = (el(D23, 0, 1), D23.zero)
    _, tstar = slice_pipeline(t, D23, witness, 2)
    conj = extract_conjunction(tstar, witness, 2, D23)
    assert conj.arity == 1 and conj.kept == [0]
    cc = extract_cc(conj.term, 0, 2, D23, 1)
    assert eval_cc(cc, (1,)) == 1 and cc.depth == 2


def test_extraction_all_zero_witness():
    t = parse("(e 1 (var 0))", D23)
    witness = (D23.zero,)
    _, tstar = slice_pipeline(t, D23, witness, 2)
    conj = extract_conjunction(tstar, witness, 2, D23)
    assert conj.arity == 0
    assert evaluate(conj.term, (), D23) == D23.unit(1)


def test_affine_whole_space_keeps_tstar():
    t = support_one()
    witness = (el(D23, 0, 1), el(D23, 0, 1))
    _, tstar = slice_pipeline(t, D23, witness, 2)
    conj = extract_conjunction(tstar, witness, 2, D23, "affine", AffineSystem(3, 2))
    assert conj.dagger is tstar and conj.arity == 2
    sub = extract_conjunction(tstar, witness, 2, D23)
    assert sub.arity == conj.arity


def test_extraction_rejects_non_solutions():
    t = support_one()
    _, tstar = slice_pipeline(t, D23, (el(D23, 0, 1), D23.zero), 2)
    with pytest.raises(ValueError):
        extract_conjunction(tstar, (D23.zero, D23.zero), 2, D23)


@settings(max_examples=40)
@given(st.sampled_from([D23, D232]), st.integers(1, 3), st.integers(0, 10 ** 6))
def test_extracted_conjunctions_hit_e11_on_ones(spec, n, seed):
    rng = random.Random(seed)
    c = random_circuit(spec, n, rng.randint(3, 20), rng)
    u = tuple(DElem.from_code(spec, rng.randrange(spec.size)) for _ in range(n))
    k = 2
    # shift t so that u is a solution
    shifted = Add(c.to_term(), Const(-c.evaluate(u)))
    system, tstar = slice_pipeline(shifted, spec, u, k, n)
    assert evaluate(tstar, u, spec) == spec.unit(1)
    sub = extract_conjunction(tstar, u, k, spec)
    ones = (spec.unit(k),) * sub.arity
    assert evaluate(sub.term, ones, spec) == spec.unit(1)
    aff = affine_conjunction(tstar, spec, n, k)
    Z = solution_set(tstar, spec, n, k)
    on_h = [z for z in Z if aff.hyperplane.contains(z)]
    assert len(on_h) == 1
    assert evaluate(aff.term, (spec.unit(k),) * aff.arity, spec) == spec.unit(1)
