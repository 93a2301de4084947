"""Tensor elements, diagonals, multiplier bounds, and expectation maps."""
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opalg import (
    ChainSpec,
    FiniteDiagonal,
    Matrix,
    TensorElem,
    bimodule_commutator,
    build_chain,
    build_delta,
    certify_expectation,
    certify_mbad,
    expectation_from_diagonal,
    expectation_norm_demo,
    flatten,
    full_matrix_diagonal,
    op_norm,
    pi_map,
    skew_idempotent_diagonal,
    tensor_norm_bounds,
    unitize_diagonal,
)


@pytest.fixture(scope="module")
def chain6():
    return build_chain(ChainSpec.default(6))


def test_delta_term_counts(chain6):
    assert len(build_delta(chain6, 1).terms) == 1
    assert len(build_delta(chain6, 2).terms) == 2
    d3 = build_delta(chain6, 3)
    assert len(d3.terms) == 3
    assert d3.flatten().shape == (chain6.truncation_dim**2,) * 2


def test_delta_structure(chain6):
    d2 = build_delta(chain6, 2)
    e1, e2 = chain6.e(1), chain6.e(2)
    assert d2.terms[0][0].equals(e1) and d2.terms[0][1].equals(e1)
    diff = e2 - e1
    assert d2.terms[1][0].equals(diff) and d2.terms[1][1].equals(diff)


def test_delta_index_range(chain6):
    with pytest.raises(ValueError):
        build_delta(chain6, 0)
    with pytest.raises(ValueError):
        build_delta(chain6, 7)


def test_pi_of_single_term():
    u = Matrix.exact([[1, 2], [3, 4]])
    v = Matrix.exact([[0, 1], [1, 0]])
    assert pi_map(TensorElem.of([(u, v)])).equals(u @ v)


def test_pi_of_delta_is_chain_element(chain6):
    for n in range(1, 7):
        assert pi_map(build_delta(chain6, n)).equals(chain6.e(n))


def test_pi_of_delta2_hand_expansion():
    # e1^2 + (e2 - e1)^2 = e2 via e1 e2 = e2 e1 = e1
    chain = build_chain(ChainSpec(m_max=2, dims=(1, 2, 3), couplings=(1,)))
    e1, e2 = chain.e(1), chain.e(2)
    by_hand = e1 @ e1 + (e2 - e1) @ (e2 - e1)
    assert by_hand.equals(e2)
    assert pi_map(build_delta(chain, 2)).equals(by_hand)


def test_commutator_vanishes_on_the_algebra(chain6):
    for m in range(1, 7):
        for n in range(1, 7):
            comm = bimodule_commutator(chain6.e(m), build_delta(chain6, n))
            assert len(comm.terms) == 2 * n
            assert comm.flatten().is_zero()


def test_commutator_detects_outside_elements(chain6):
    dim = chain6.truncation_dim
    shift = Matrix.exact([[1 if j == i + 1 else 0 for j in range(dim)] for i in range(dim)])
    comm = bimodule_commutator(shift, build_delta(chain6, 2))
    assert not comm.flatten().is_zero()


def test_zero_actor_gives_zero_commutator(chain6):
    comm = bimodule_commutator(Matrix.zeros(chain6.truncation_dim), build_delta(chain6, 3))
    assert comm.flatten().is_zero()


def test_flatten_additive_and_kron():
    u = Matrix.exact([[0, 1], [1, 0]])
    v = Matrix.exact([[2, 0], [0, 3]])
    t = TensorElem.of([(u, v)])
    assert flatten(t).equals(u.kron(v))
    one = Matrix.identity(2)
    assert flatten(TensorElem.of([(one, one)])).equals(Matrix.identity(4))
    d = TensorElem.of([(u, v), (one, one)])
    assert flatten(d - d).is_zero()


def test_flatten_intertwines_module_actions():
    rng = np.random.default_rng(5)
    for _ in range(10):
        mats = [Matrix.from_float(rng.uniform(-1, 1, (3, 3)) + 1j * rng.uniform(-1, 1, (3, 3))) for _ in range(3)]
        a, u, v = mats
        t = TensorElem.of([(u, v)])
        one = Matrix.identity(3).to_float()
        left = flatten(t.left(a))
        right = flatten(t.right(a))
        assert left.max_abs_diff(a.kron(one) @ flatten(t)) <= 1e-12
        assert right.max_abs_diff(flatten(t) @ one.kron(a)) <= 1e-12


def test_norm_bounds_single_term_tight():
    u = Matrix.exact([[1, 2], [0, 0]])
    v = Matrix.exact([[3, 0], [0, 1]])
    lower, upper = tensor_norm_bounds(TensorElem.of([(u, v)]))
    expected = op_norm(u) * op_norm(v)
    assert lower == pytest.approx(expected, abs=1e-9)
    assert upper == pytest.approx(expected, abs=1e-9)


def test_norm_bounds_zero_tensor():
    z = TensorElem.zero(3)
    assert tensor_norm_bounds(z) == (0.0, 0.0)
    d = TensorElem.of([(Matrix.identity(2), Matrix.identity(2))])
    assert tensor_norm_bounds(d - d) == (0.0, 0.0)


def test_norm_bounds_bracket_orthogonal_projections():
    p1, p2 = Matrix.diag([1, 0]), Matrix.diag([0, 1])
    delta = TensorElem.of([(p1, p1), (p2, p2)])
    lower, upper = tensor_norm_bounds(delta)
    assert lower == pytest.approx(1.0, abs=1e-9)
    assert upper == pytest.approx(2.0, abs=1e-9)


@given(st.integers(1, 4), st.data())
@settings(max_examples=30, deadline=None)
def test_norm_bounds_ordered(n_terms, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 10**6)))
    terms = [
        (Matrix.from_float(rng.uniform(-1, 1, (3, 3))), Matrix.from_float(rng.uniform(-1, 1, (3, 3))))
        for _ in range(n_terms)
    ]
    lower, upper = tensor_norm_bounds(TensorElem.of(terms))
    assert lower <= upper + 1e-9


def test_unitize_smallest_chain():
    chain = build_chain(ChainSpec.default(1))
    one = Matrix.identity(chain.truncation_dim)
    delta = build_delta(chain, 1)
    m = unitize_diagonal(delta, pi_map(delta), one)
    assert pi_map(m).equals(one)
    e1 = chain.e(1)
    expected = TensorElem.of([(e1, e1), (one - e1, one - e1)])
    assert (m - expected).flatten().is_zero()


def test_unitize_all_defaults(chain6):
    one = Matrix.identity(chain6.truncation_dim)
    for n in range(1, 7):
        d = build_delta(chain6, n)
        assert pi_map(unitize_diagonal(d, pi_map(d), one)).equals(one)


def test_unitize_collapses_on_identity_diagonal():
    one = Matrix.identity(3)
    delta = TensorElem.of([(one, one)])
    m = unitize_diagonal(delta, one, one)
    assert (m - delta).flatten().is_zero()


def test_unitize_rejects_wrong_unit(chain6):
    one = Matrix.identity(chain6.truncation_dim)
    d = build_delta(chain6, 2)
    with pytest.raises(ValueError):
        unitize_diagonal(d, chain6.e(1), one)


def test_certify_mbad_default_sample(chain6):
    deltas = [build_delta(chain6, n) for n in range(1, 7)]
    sample = [chain6.e(n) for n in range(1, 6)]
    report = certify_mbad(deltas, chain6, sample)
    assert report.verdict
    assert report.multiplier_constant == 0.0
    assert report.projection_sup == pytest.approx(math.sqrt(10), abs=1e-9)
    for rec in report.records:
        assert rec.in_span
        assert rec.commutator_upper == 0.0
        assert rec.commutator_lower == 0.0
        assert rec.identity_ok and rec.commutator_ok and rec.unitized_ok


def test_certify_mbad_zero_sample(chain6):
    deltas = [build_delta(chain6, n) for n in range(1, 4)]
    report = certify_mbad(deltas, chain6, [Matrix.zeros(chain6.truncation_dim)])
    assert report.verdict
    assert report.records[0].commutator_upper == 0.0
    assert report.records[0].element_constant == 0.0


def test_certify_mbad_flags_outside_elements(chain6):
    dim = chain6.truncation_dim
    shift = Matrix.exact([[1 if j == i + 1 else 0 for j in range(dim)] for i in range(dim)])
    deltas = [build_delta(chain6, n) for n in range(1, 4)]
    report = certify_mbad(deltas, chain6, [shift, chain6.e(1)])
    by_label = {r.label: r for r in report.records}
    assert not by_label["a0"].in_span
    assert by_label["a1"].in_span
    assert report.verdict


def test_certify_mbad_handles_identity_component(chain6):
    deltas = [build_delta(chain6, n) for n in range(1, 7)]
    ident = Matrix.identity(chain6.truncation_dim)
    elem = ident * Fraction(2) + chain6.e(3) * Fraction(1, 2)
    report = certify_mbad(deltas, chain6, [elem])
    rec = report.records[0]
    assert rec.in_span
    assert abs(rec.identity_coeff - 2.0) <= 1e-9
    assert rec.commutator_upper == 0.0
    assert rec.unitized_ok


def test_certify_mbad_unitized_bound_tracks_tail(chain6):
    # an element above the diagonal index leaves a nonzero unitized commutator
    deltas = [build_delta(chain6, n) for n in range(1, 3)]
    report = certify_mbad(deltas, chain6, [chain6.e(5)])
    rec = report.records[0]
    assert rec.commutator_upper == 0.0
    assert rec.unitized_upper > 0.0
    assert rec.unitized_ok


def test_expectation_on_full_matrix_algebra():
    d = full_matrix_diagonal(2)
    rng = np.random.default_rng(7)
    for _ in range(5):
        x = Matrix.from_float(rng.uniform(-1, 1, (2, 2)) + 1j * rng.uniform(-1, 1, (2, 2)))
        ex = expectation_from_diagonal(d, x)
        target = Matrix.identity(2).to_float() * complex(x.numpy()[0, 0])
        assert ex.max_abs_diff(target) <= 1e-12


def test_expectation_skew_demo_exact():
    for t in (1, 10, 100):
        demo = expectation_norm_demo(t)
        assert demo.matches_exactly
        assert demo.expected.equals(demo.skew)
        assert demo.skew_norm == pytest.approx(math.sqrt(1 + t * t), abs=1e-8)
        assert demo.expectation_norm == demo.skew_norm


def test_expectation_fixes_identity(chain6):
    t = Fraction(3, 2)
    d = skew_idempotent_diagonal(t)
    one = Matrix.identity(2)
    assert expectation_from_diagonal(d, one).equals(one)


def test_certify_expectation_properties():
    d = skew_idempotent_diagonal(Fraction(5))
    one = Matrix.identity(2)
    e = d.algebra_basis[1]
    xs = [Matrix.exact([[1, 2], [3, 4]]), Matrix.diag([1, 0])]
    commutant = [one, e, one * Fraction(2, 3) + e * Fraction(1, 5)]
    report = certify_expectation(d, xs, commutant)
    assert report.passed and report.exact
    assert report.commutes_with_algebra_dev == 0.0
    assert report.fixes_commutant_dev == 0.0
    assert report.bimodule_dev == 0.0


def test_finite_diagonal_validates_invariants():
    one = Matrix.identity(2)
    e = Matrix.exact([[1, 1], [0, 0]])
    bad = TensorElem.of([(e, e)])
    with pytest.raises(ValueError):
        FiniteDiagonal(diag=bad, algebra_basis=(one, e))


def test_expectation_dimension_mismatch():
    d = full_matrix_diagonal(2)
    with pytest.raises(Exception):
        expectation_from_diagonal(d, Matrix.identity(3))


def test_mbad_report_serializes(chain6):
    deltas = [build_delta(chain6, n) for n in range(1, 4)]
    report = certify_mbad(deltas, chain6, [chain6.e(1), chain6.e(2)], labels=["one", "two"])
    doc = report.to_json_dict()
    assert doc["C"] == 0.0 and doc["verdict"] is True
    assert [e["a_label"] for e in doc["elements"]] == ["one", "two"]
    for element in doc["elements"]:
        assert set(element) >= {"a_label", "commutator_upper", "commutator_lower", "C", "K", "pass"}
        assert element["pass"] is True


def test_tensor_value_equality_is_representation_free():
    p1, p2 = Matrix.diag([1, 0]), Matrix.diag([0, 1])
    one = Matrix.identity(2)
    a = TensorElem.of([(p1, p1), (p2, p1)])
    b = TensorElem.of([(one, p1)])
    assert a.same_element(b)
    assert a != b
    assert not a.same_element(TensorElem.of([(one, p2)]))


def test_certify_mbad_float_chain_within_tolerance():
    chain = build_chain(ChainSpec(m_max=4, dims=(1, 2, 3, 4, 5), couplings=(1.5, 2.5)))
    assert chain.backend == "float"
    deltas = [build_delta(chain, n) for n in range(1, 5)]
    report = certify_mbad(deltas, chain, [chain.e(2), chain.e(3)])
    assert report.verdict
    assert report.multiplier_constant <= 1e-9
    for rec in report.records:
        assert rec.in_span
        assert rec.commutator_upper <= 1e-9


@given(st.integers(2, 6), st.data())
@settings(max_examples=15, deadline=None)
def test_diagonal_identities_on_random_rational_chains(m_max, data):
    from opalg import ChainSpec as CS

    count = m_max // 2
    rationals = st.fractions(min_value=0, max_value=50, max_denominator=12)
    couplings = tuple(sorted(data.draw(st.lists(rationals, min_size=count, max_size=count))))
    chain = build_chain(CS.default(m_max, couplings=couplings))
    for n in range(1, m_max + 1):
        delta = build_delta(chain, n)
        assert pi_map(delta).equals(chain.e(n))
        for m in range(1, m_max + 1):
            assert bimodule_commutator(chain.e(m), delta).flatten().is_zero()
