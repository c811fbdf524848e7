import json

import numpy as np
import pytest

from latcalc.completion import (INCONCLUSIVE, NOT_COMPLETE, Add, Apply, Gen, Inf,
                                LinearMapRep, Scale, Sup, build_tower,
                                certify_not_h_complete, check_closed,
                                check_converse, check_preservation,
                                closure_step, eval_expr, extend_homomorphism,
                                extend_positive_map_by_limits, normalize,
                                random_expr, seed_tower)
from latcalc.errors import ExpressionTooLargeError, HypothesisError
from latcalc.homogeneous import euclidean_norm, scaled_geometric_mean, stolarsky
from latcalc.lattice import GridLattice, Regulator

MU24 = stolarsky(2, 4)


def el(*vals):
    return GridLattice.indexed(len(vals)).element(vals)


def random_gens(rng, k, n=32):
    L = GridLattice.uniform(n)
    return [L.element(rng.normal(size=n)) for _ in range(k)]


# --- expressions -------------------------------------------------------------

def test_eval_examples():
    f, g = el(1, 5), el(3, 4)
    assert eval_expr(Gen(0), [f]) == f
    out = eval_expr(Apply("mu:2,4", (Gen(0), Gen(1))), [el(3.0), el(4.0)])
    assert out.values[0] == pytest.approx(np.sqrt(12.5), rel=1e-15)
    assert eval_expr(Sup(Scale(2, Gen(0)), Gen(1)), [f, g]) == el(3, 10)


def test_eval_errors():
    with pytest.raises(ValueError):
        eval_expr(Gen(2), [el(1.0)])
    with pytest.raises(ValueError, match="takes 2 arguments"):
        Apply("norm:2", (Gen(0),))
    with pytest.raises(ValueError, match="unknown family"):
        Apply("foo:1", (Gen(0),))


def test_expr_nodes_hash_structurally():
    a = Sup(Scale(2, Gen(0)), Apply("mu:2.0,4", (Gen(0), Gen(1))))
    b = Sup(Scale(2.0, Gen(0)), Apply("mu:2,4", (Gen(0), Gen(1))))
    assert a == b and hash(a) == hash(b) and len({a, b}) == 1
    assert a != Inf(a.left, a.right)
    assert a.depth == 3
    assert (Gen(0) | Gen(1)) == Sup(Gen(0), Gen(1))
    assert (Gen(0) - Gen(1)) == Add(Gen(0), Scale(-1.0, Gen(1)))


# --- normal form --------------------------------------------------------------

def test_normalize_examples():
    nf = normalize(Scale(-1, Sup(Gen(0), Gen(1))))
    assert nf.terms == ((((0, -1.0),),), (((1, -1.0),),))
    nf = normalize(Add(Sup(Gen(0), Gen(1)), Gen(2)))
    assert len(nf.terms) == 1
    assert set(nf.terms[0]) == {((0, 1.0), (2, 1.0)), ((1, 1.0), (2, 1.0))}
    nf = normalize(Gen(0))
    assert nf.atoms == (Gen(0),) and nf.terms == ((((0, 1.0),),),)
    assert nf.coefficient_rows() == [[[1.0]]]


def test_normalize_treats_apply_as_atom():
    e = Add(Apply("mu:2,4", (Sup(Gen(0), Gen(1)), Gen(1))), Gen(0))
    nf = normalize(e)
    assert set(nf.atoms) == {Gen(0), Apply("mu:2,4", (Sup(Gen(0), Gen(1)), Gen(1)))}


def test_normalize_soundness():
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        e = random_expr(rng, 3, 8)
        gens = random_gens(rng, 3)
        nf = normalize(e)
        want = eval_expr(e, gens).values
        worst = max(worst, np.max(np.abs(nf.evaluate(gens).values - want)))
        worst = max(worst, np.max(np.abs(eval_expr(nf.to_expr(), gens).values - want)))
    assert worst <= 1e-10


def test_normalize_size_guard():
    e = Gen(0)
    for k in range(1, 25):
        e = Add(e, Sup(Gen(k % 3), Scale(-1, Gen((k + 1) % 3))))
        e = Scale(-1, e)
    with pytest.raises(ExpressionTooLargeError, match="expression too large"):
        normalize(e)


# --- tower ------------------------------------------------------------------

def test_tower_seed_and_examples():
    f = el(-2.0, 0.5, 3.0)
    t = closure_step(seed_tower([f], ["mu:2,4"]))
    node = Apply("mu:2,4", (Gen(0), Gen(0)))
    assert node in t.level(2)
    assert eval_expr(node, [f]) == abs(f)
    g = el(1.0, -1.0, 2.0)
    t = closure_step(seed_tower([f, g], ["norm:2"]))
    vals = [x.values for x in t.images(2)]
    assert any(np.allclose(v, np.hypot(f.values, g.values), rtol=0, atol=1e-15) for v in vals)
    with pytest.raises(ValueError):
        seed_tower([f], [])
    with pytest.raises(ValueError):
        closure_step(t, 0)


def test_tower_levels_nested_and_closed():
    rng = np.random.default_rng(1)
    gens = random_gens(rng, 2, n=8)
    t = build_tower(gens, ["mu:2,4", "norm:2"], 3, budget=200)
    for n in (1, 2):
        assert set(t.level(n)) <= set(t.level(n + 1))
    assert all(isinstance(e, Gen) for e in t.level(1))
    report = check_closed(t)
    assert report["closed"] and report["checked"] > 0
    # images nested on a different assignment too
    other = random_gens(rng, 2, n=8)
    lo = {tuple(x.values) for x in t.images(2, other)}
    hi = {tuple(x.values) for x in t.images(3, other)}
    assert lo <= hi


def test_tower_is_deterministic():
    rng = np.random.default_rng(2)
    gens = random_gens(rng, 2, n=4)
    a = build_tower(gens, ["mu:2,4"], 3, budget=50)
    b = build_tower(gens, ["mu:2,4"], 3, budget=50)
    assert a.levels == b.levels
    new_applies = sum(isinstance(e, Apply) and e not in a.level(2) for e in a.level(3))
    assert 0 < new_applies <= 50


# --- maps -------------------------------------------------------------------

def test_map_flags():
    L = GridLattice.indexed(3)
    assert LinearMapRep(np.eye(3), L).homomorphism
    assert LinearMapRep([[0, 2.0, 0], [0, 0, 0]], L).homomorphism
    avg = LinearMapRep([[0.5, 0.5, 0]], L)
    assert avg.positive and not avg.homomorphism
    neg = LinearMapRep([[-1.0, 0, 0]], L)
    assert not neg.positive and not neg.homomorphism
    with pytest.raises(ValueError):
        LinearMapRep(np.eye(2), L)


def test_extend_homomorphism_examples():
    rng = np.random.default_rng(3)
    gens = random_gens(rng, 2, n=10)
    L = gens[0].lattice
    for _ in range(100):
        e = random_expr(rng, 2, 6, dee=("mu:2,4", "norm:2", "geo:2"))
        direct = eval_expr(e, gens)
        k = int(rng.integers(L.size))
        got = extend_homomorphism(gens, LinearMapRep.point_evaluation(L, k), e)
        assert got.values[0] == pytest.approx(direct.values[k], rel=0, abs=1e-12)
        assert extend_homomorphism(gens, LinearMapRep.identity(L), e) == direct


def test_extend_homomorphism_factorizes_and_is_unique():
    rng = np.random.default_rng(4)
    gens = random_gens(rng, 3, n=6)
    L = gens[0].lattice
    for _ in range(50):
        T = LinearMapRep.random_homomorphism(rng, L, 5)
        for i, g in enumerate(gens):
            assert extend_homomorphism(gens, T, Gen(i)) == T(g)
        e = random_expr(rng, 3, 6, dee=("mu:2,4", "pow:3"))
        np.testing.assert_allclose(extend_homomorphism(gens, T, e).values,
                                   T(eval_expr(e, gens)).values, rtol=0, atol=1e-10)


def test_representation_independence():
    rng = np.random.default_rng(5)
    gens = random_gens(rng, 3, n=6)
    L = gens[0].lattice
    for _ in range(30):
        e1 = random_expr(rng, 3, 6)
        e2 = normalize(e1).to_expr()
        T = LinearMapRep.random_homomorphism(rng, L, 4)
        np.testing.assert_allclose(extend_homomorphism(gens, T, e1).values,
                                   extend_homomorphism(gens, T, e2).values, rtol=0, atol=1e-10)


def test_extend_homomorphism_rejects_non_homomorphism():
    L = GridLattice.indexed(2)
    with pytest.raises(HypothesisError, match="lattice homomorphism"):
        extend_homomorphism([L.element([1, 2])], LinearMapRep([[0.5, 0.5]], L), Gen(0))


def test_positivity_transport():
    rng = np.random.default_rng(6)
    L = GridLattice.indexed(7)
    for _ in range(50):
        T = LinearMapRep(rng.uniform(0, 1, (4, 7)) * (rng.random((4, 7)) < 0.6), L)
        g = L.element(rng.normal(size=7))
        assert np.all(np.abs(T(g).values) <= T(abs(g)).values + 1e-12)


def test_extend_positive_map_examples():
    rng = np.random.default_rng(7)
    L = GridLattice.indexed(5)
    T = LinearMapRep(rng.uniform(0, 1, (3, 5)), L)
    f = L.element(rng.normal(size=5))
    p = L.element(rng.uniform(0.5, 2, 5))
    assert extend_positive_map_by_limits(T, [f] * 4, p, f) == T(f)
    seq = [f + (1.0 / n) * p for n in range(1, 200)]
    out, rep = extend_positive_map_by_limits(T, seq, p, f, full_output=True)
    assert out == T(f)
    for n, fn in enumerate(seq, start=1):
        assert np.all(np.abs(T(fn).values - T(f).values) <= T(p).values / n + 1e-12)
    assert rep["order_swap_deviation"] <= 1e-9
    other = [f - (0.5 / n ** 2) * p for n in range(1, 200)]
    np.testing.assert_allclose(extend_positive_map_by_limits(T, other, p, f).values,
                               out.values, rtol=0, atol=1e-9)


def test_extend_positive_map_rejections():
    L = GridLattice.indexed(2)
    p = L.element([1.0, 1.0])
    f = L.zeros()
    alt = [((-1) ** n) * p for n in range(10)]
    with pytest.raises(HypothesisError, match="Cauchy"):
        extend_positive_map_by_limits(LinearMapRep.identity(L), alt, p, f)
    with pytest.raises(HypothesisError, match="positive map"):
        extend_positive_map_by_limits(LinearMapRep([[1.0, -1.0]], L), [f, f], p, f)
    with pytest.raises(HypothesisError, match="limit"):
        extend_positive_map_by_limits(LinearMapRep.identity(L), [p, p], Regulator(p), f,
                                      epsilons=(0.5,))


def test_forward_check_examples():
    L = GridLattice.indexed(4)
    rep = check_preservation(LinearMapRep.point_evaluation(L, 2), MU24, 50, seed=1)
    assert rep.passed and rep.verdict == "PASS" and rep.witness is None
    rep = check_preservation(LinearMapRep.identity(L, 2.0), euclidean_norm(2), 50, seed=1)
    assert rep.passed
    avg = LinearMapRep([[0.5, 0.5]], GridLattice.indexed(2))
    rep = check_preservation(avg, MU24, 20, seed=1)
    assert not rep.passed and rep.witness is not None
    w = rep.witness
    assert abs(w["map_then_fn"] - w["fn_then_map"]) == pytest.approx(rep.max_deviation)
    json.loads(rep.to_json())


def test_converse_check_examples():
    L = GridLattice.indexed(3)
    rep = check_converse(LinearMapRep.point_evaluation(L, 0), MU24, (1, 1), 1.0, 30)
    assert rep.preserved.passed and rep.modulus_commutes is True
    neg = LinearMapRep([[1.0, -1.0, 0.0]], L)
    rep = check_converse(neg, MU24, (1, 1), 1.0, 30)
    assert not rep.preserved.passed and rep.preserved.witness is not None
    assert rep.modulus_commutes is None and rep.implication_holds
    assert json.loads(rep.to_json())["modulus_commutes"] == "vacuous"
    with pytest.raises(HypothesisError, match="hypothesis unmet"):
        check_converse(neg, MU24, (1, 1), 2.0, 5)


# --- non-completeness certificates ---------------------------------------------

def _affine_pair():
    L = GridLattice.uniform(257)
    x = L.abscissae()
    return L, L.element(x), L.element(1 - x)


def test_certificate_examples():
    L, f, g = _affine_pair()
    cert = certify_not_h_complete([f, g], euclidean_norm(2), [0.0, 1.0])
    assert cert.verdict == NOT_COMPLETE
    # hand value at x = 0.5: h''(0.5) = 2 sqrt 2, step 1/256
    at_half = 2 * np.sqrt(2) / 256 ** 2
    assert cert.witness["x"] == 0.5
    assert cert.witness["second_difference"] == pytest.approx(at_half, rel=1e-4)
    assert json.loads(cert.to_json())["verdict"] == NOT_COMPLETE
    assert certify_not_h_complete([f, f], MU24, [0.0, 1.0]).verdict == INCONCLUSIVE
    assert certify_not_h_complete([f, f], scaled_geometric_mean(2), [0, 1]).verdict == INCONCLUSIVE


def test_certificate_allows_lattice_kinks():
    L = GridLattice.uniform(101)
    x = L.abscissae()
    f = L.element(x - 0.3)
    # |f| is in the lattice generated by f even though it kinks at 0.3
    assert certify_not_h_complete([f, f], MU24, [0.0, 1.0]).verdict == INCONCLUSIVE


def test_certificate_rejections():
    L, f, g = _affine_pair()
    with pytest.raises(ValueError, match="not finer"):
        certify_not_h_complete([f, g], euclidean_norm(2), [0.0, 0.005, 1.0])
    curved = L.element(L.abscissae() ** 2)
    with pytest.raises(HypothesisError, match="not linear"):
        certify_not_h_complete([curved, g], euclidean_norm(2), [0.0, 1.0])
