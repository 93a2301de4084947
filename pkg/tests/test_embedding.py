"""Rank-one family, block embedding, subset sweep, and trace norms."""
import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opalg import (
    Matrix,
    RankOneFamily,
    SubsetFamily,
    best_subset_sum,
    brute_force_best_subset,
    build_E,
    certify_E_family,
    certify_embedding_bounds,
    l1_trace_norm,
    make_trace,
    op_norm,
    phi,
    phi_sup_norm,
    schatten1_norm,
    unit_circle_sweep_ratios,
)

INV_PI = 1.0 / math.pi


def test_build_E_smallest_case_outer_product():
    # order (alpha, omega, 1): x = (1,1,1), y = (-1,1,1)
    e1 = build_E(1, 1)
    assert e1.equals(Matrix.exact([[-1, -1, -1], [1, 1, 1], [1, 1, 1]]))


def test_omega_diagonal_entry_is_one():
    for n in (1, 3, 7):
        assert build_E(n, 8).entry(1, 1) == (1, 0)


def test_E_is_idempotent_and_rank_one():
    e = build_E(4, 6)
    assert (e @ e).equals(e)
    assert schatten1_norm(e) == pytest.approx(3.0, abs=1e-9)


def test_E_norm_is_three():
    fam = RankOneFamily.build(6)
    assert op_norm(fam.E(5)) == pytest.approx(3.0, abs=1e-9)


def test_cross_products_vanish_exactly():
    fam = RankOneFamily.build(4)
    assert (fam.E(1) @ fam.E(2)).is_zero()
    assert (fam.E(3) @ fam.E(1)).is_zero()


def test_pair_norm_lower_witness():
    fam = RankOneFamily.build(2)
    combo = fam.E(1) + fam.E(2)
    assert op_norm(combo) >= 2.0 - 1e-9


def test_certify_E_family_passes():
    fam = RankOneFamily.build(5)
    report = certify_E_family(fam, trials=25, seed=1)
    assert report.passed
    assert report.max_norm_error <= 1e-9
    assert report.witness_exact and report.witness_dominated


def test_index_out_of_range():
    with pytest.raises(IndexError):
        build_E(0, 4)
    with pytest.raises(IndexError):
        RankOneFamily.build(4).E(5)


def test_subset_family_canonical_order():
    fam = SubsetFamily.enumerate(3, f_cap=100, s_max=3)
    assert fam.subsets == ((1,), (2,), (3,), (1, 2), (1, 3), (2, 3), (1, 2, 3))


def test_subset_family_caps():
    fam = SubsetFamily.enumerate(10, f_cap=512, s_max=8)
    assert len(fam) == 512
    assert max(len(f) for f in fam) <= 8
    # sweep-optimal subsets may exceed the enumeration cardinality cap
    aug = fam.augmented([tuple(range(1, 10))])
    assert aug.subsets[-1] == tuple(range(1, 10))
    assert len(aug) == 513
    assert len(fam.augmented([(1,)])) == 512


def test_phi_block_outside_support_is_zero():
    fam = SubsetFamily(n_max=2, s_max=2, f_cap=4, subsets=((2,),))
    emb = phi([1, 0], fam)
    assert emb.block((2,)).is_zero()
    assert emb.block((2,)).shape == (3, 3)


def test_phi_block_restricts_rank_one():
    fam = SubsetFamily(n_max=2, s_max=2, f_cap=4, subsets=((1, 2),))
    emb = phi([1, 0], fam)
    block = emb.block((1, 2))
    assert block.shape == (4, 4)
    big = build_E(1, 2)
    assert block.equals(big.submatrix([0, 1, 2, 3]))
    for k in range(4):
        assert block.entry(3, k) == (0, 0)
        assert block.entry(k, 3) == (0, 0)


def test_phi_orthogonality_of_disjoint_indices():
    fam = SubsetFamily.enumerate(3, f_cap=10, s_max=2)
    e1 = phi([1, 0, 0], fam)
    e2 = phi([0, 1, 0], fam)
    for b1, b2 in zip(e1.blocks, e2.blocks):
        assert (b1 @ b2).is_zero()


def test_phi_multiplicative_on_rational_inputs():
    fam = SubsetFamily.enumerate(4, f_cap=20, s_max=3)
    a = [(Fraction(1, 2), Fraction(1, 3)), 2, 0, (Fraction(-1, 5), 0)]
    b = [(Fraction(3, 7), 0), (0, 1), 1, (2, Fraction(1, 2))]
    prod = []
    for x, y in zip(a, b):
        xr, xi = x if isinstance(x, tuple) else (x, 0)
        yr, yi = y if isinstance(y, tuple) else (y, 0)
        prod.append((Fraction(xr) * yr - Fraction(xi) * yi, Fraction(xr) * yi + Fraction(xi) * yr))
    ea, eb, ep = phi(a, fam), phi(b, fam), phi(prod, fam)
    for ba, bb, bp in zip(ea.blocks, eb.blocks, ep.blocks):
        assert (ba @ bb).equals(bp)


def test_phi_rejects_support_outside_range():
    fam = SubsetFamily.enumerate(2, f_cap=4, s_max=2)
    with pytest.raises(ValueError, match="support"):
        phi([1, 0, 5], fam)


def test_phi_sup_norm_single_index():
    fam = SubsetFamily.enumerate(4, f_cap=20, s_max=3)
    assert phi_sup_norm(phi([1, 0, 0, 0], fam)) == pytest.approx(3.0, abs=1e-9)
    assert phi_sup_norm(phi([0, 0, 0, 0], fam)) == 0.0


def test_omega_entry_of_blocks_is_subset_sum():
    fam = SubsetFamily.enumerate(5, f_cap=40, s_max=4)
    coeffs = [(Fraction(1, 3), Fraction(-1, 7)), (2, 0), (Fraction(5, 9), 1), (0, 0), (1, Fraction(1, 2))]
    emb = phi(coeffs, fam)
    for subset, block in zip(fam.subsets, emb.blocks):
        expected_re = sum(Fraction(coeffs[j - 1][0]) for j in subset)
        expected_im = sum(Fraction(coeffs[j - 1][1]) for j in subset)
        assert block.entry(1, 1) == (expected_re, expected_im)


def test_best_subset_sum_all_positive():
    subset, value = best_subset_sum([1, 1, 1])
    assert subset == (1, 2, 3)
    assert value == pytest.approx(3.0, abs=1e-12)


def test_best_subset_sum_mixed_signs():
    _, value = best_subset_sum([1, -1])
    assert value == pytest.approx(1.0, abs=1e-12)


def test_best_subset_sum_eighth_roots():
    a = [cmath.exp(2j * math.pi * j / 8) for j in range(8)]
    subset, value = best_subset_sum(a)
    assert len(subset) == 4
    assert value == pytest.approx(1.0 / math.sin(math.pi / 8), abs=1e-9)
    assert value / 8 > INV_PI


def test_best_subset_sum_empty_support():
    with pytest.raises(ValueError, match="support"):
        best_subset_sum([0, 0.0])


def test_unit_circle_ratios_decrease_to_inv_pi():
    ratios = [r for _, _, r in unit_circle_sweep_ratios([8, 16, 32, 64])]
    assert all(r > INV_PI for r in ratios)
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[0] == pytest.approx(0.3266, abs=5e-4)


complex_entry = st.one_of(
    st.just(0j),
    st.complex_numbers(min_magnitude=1e-6, max_magnitude=5, allow_nan=False, allow_infinity=False),
)


@given(st.lists(complex_entry, min_size=1, max_size=10))
@settings(max_examples=80, deadline=None)
def test_sweep_matches_brute_force(a):
    support = [z for z in a if z != 0]
    if not support:
        a = a + [1.0]
    _, sweep = best_subset_sum(a, cross_check=False)
    _, brute = brute_force_best_subset(a)
    assert sweep == pytest.approx(brute, abs=1e-9 * (1 + brute))
    l1 = sum(abs(complex(z)) for z in a)
    assert sweep >= l1 * INV_PI * (1 - 1e-12)


@given(st.lists(complex_entry, min_size=1, max_size=8), st.floats(0, 2 * math.pi), st.floats(0.1, 4))
@settings(max_examples=60, deadline=None)
def test_sweep_value_phase_invariant_and_homogeneous(a, angle, scalep):
    if all(z == 0 for z in a):
        a = a + [1.0]
    _, base = best_subset_sum(a, cross_check=False)
    rotated = [z * cmath.exp(1j * angle) for z in a]
    _, rotated_val = best_subset_sum(rotated, cross_check=False)
    assert rotated_val == pytest.approx(base, abs=1e-9 * (1 + base))
    scaled = [z * scalep for z in a]
    _, scaled_val = best_subset_sum(scaled, cross_check=False)
    assert scaled_val == pytest.approx(base * scalep, abs=1e-9 * (1 + base * scalep))


def test_make_trace_uniform():
    fam = SubsetFamily.enumerate(3, f_cap=3, s_max=1)
    w = make_trace(fam, "uniform")
    assert w.weights == pytest.approx((1 / 3, 1 / 3, 1 / 3))


def test_make_trace_geometric():
    fam = SubsetFamily(n_max=2, s_max=1, f_cap=2, subsets=((1,), (2,)))
    w = make_trace(fam, "geometric")
    assert w.weights == pytest.approx((2 / 3, 1 / 3))


def test_trace_weights_normalized():
    fam = SubsetFamily.enumerate(8, f_cap=200, s_max=4)
    for scheme in ("geometric", "uniform"):
        assert sum(make_trace(fam, scheme).weights) == pytest.approx(1.0, abs=1e-12)


def test_l1_trace_norm_single_rank_one():
    fam = SubsetFamily(n_max=1, s_max=1, f_cap=1, subsets=((1,),))
    emb = phi([1], fam)
    w = make_trace(fam, "uniform")
    assert l1_trace_norm(emb, w) == pytest.approx(1.0, abs=1e-9)


def test_l1_trace_norm_zero_vector():
    fam = SubsetFamily.enumerate(3, f_cap=10, s_max=2)
    emb = phi([0, 0, 0], fam)
    assert l1_trace_norm(emb, make_trace(fam, "geometric")) == 0.0


def test_l1_trace_norm_family_mismatch():
    fam1 = SubsetFamily.enumerate(3, f_cap=10, s_max=2)
    fam2 = SubsetFamily.enumerate(3, f_cap=3, s_max=1)
    emb = phi([1, 0, 0], fam1)
    with pytest.raises(ValueError, match="family"):
        l1_trace_norm(emb, make_trace(fam2, "uniform"))


def test_trace_norm_bounded_by_sup_norm_and_inf_bound():
    fam = SubsetFamily.enumerate(6, f_cap=60, s_max=4)
    rng = np.random.default_rng(9)
    for _ in range(10):
        a = list(rng.uniform(-1, 1, 6) + 1j * rng.uniform(-1, 1, 6))
        emb = phi(a, fam)
        sup = phi_sup_norm(emb)
        linf = max(abs(z) for z in a)
        for scheme in ("geometric", "uniform"):
            tn = l1_trace_norm(emb, make_trace(fam, scheme))
            assert tn <= 3 * linf + 1e-9
            assert tn <= sup + 1e-9


def test_certify_embedding_bounds_small():
    report = certify_embedding_bounds(n_max=6, f_cap=64, s_max=4, trials=25, seed=5)
    assert report.passed
    assert report.min_sup_ratio >= INV_PI
    assert report.max_sup_ratio <= 3.0 + 1e-9
    assert report.single_index_ratio == pytest.approx(3.0, abs=1e-9)
    assert report.mult_exact
    assert len(report.rows) == 25


def test_certify_embedding_rejects_bad_trials():
    with pytest.raises(ValueError):
        certify_embedding_bounds(trials=0)


def test_embedded_element_serializes():
    fam = SubsetFamily.enumerate(3, f_cap=5, s_max=2)
    doc = phi([(Fraction(1, 2), 1), 2, 0], fam).to_json_dict()
    assert doc["schema"] == "opalg.embedded/1"
    assert doc["coeffs"][0] == "1/2,1"
    assert len(doc["blocks"]) == len(fam)
    roundtrip = [Matrix.from_rational_strings(b) for b in doc["blocks"]]
    for a, b in zip(phi([(Fraction(1, 2), 1), 2, 0], fam).blocks, roundtrip):
        assert a.equals(b)


def test_phi_accepts_trailing_zeros_beyond_range():
    fam = SubsetFamily.enumerate(2, f_cap=4, s_max=2)
    emb_float = phi([0.5, 0.25, 0.0, 0.0], fam)
    emb_exact = phi([Fraction(1, 2), Fraction(1, 4), 0, 0], fam)
    for a, b in zip(emb_float.blocks, emb_exact.blocks):
        assert a.max_abs_diff(b) <= 1e-15
