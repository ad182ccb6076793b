import math

import numpy as np
import pytest

from subshift_ifs.analysis import (
    HypothesisError,
    ProbeError,
    SeparationCapError,
    check_image_disjointness_on_S,
    check_ratio_sum,
    check_separation,
    classify_return_times,
    periodic_density_probe,
    power_system,
    return_time_probe,
    separation_report,
    verify_factoring,
    _poly_distance,
    _hull,
)
from subshift_ifs.attractor import compute_attractor, snap
from subshift_ifs.maps import Box, ContractionMap, IfsSystem, MapFamily
from subshift_ifs.symbolic import FactorCode, Full, HigherBlock, OrbitClosure, Sofic

from conftest import EVEN, EX12, GOLDEN, cantor_maps, unit_system


def eg2egs(r=0.4):
    fixed = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    maps = [ContractionMap(np.eye(2) * r, (1 - r) * np.array(p)) for p in fixed]
    return IfsSystem(Box.unit(2), MapFamily(maps), Full(3), totally_invariant=True)


def common_fixed_point():
    return unit_system([ContractionMap.scalar(0.5, 0.0), ContractionMap.scalar(1 / 3, 0.0)], Full(2))


def two_fixed_points():
    shift = Sofic.from_edges(2, [("a", "a", 1), ("b", "b", 2)])
    return unit_system(cantor_maps(), shift)


def test_ratio_sum_examples():
    assert tuple(check_ratio_sum(cantor_maps())) == (pytest.approx(2 / 3), True)
    total, ok = check_ratio_sum(eg2egs().maps)
    assert total == pytest.approx(1.2) and not ok
    assert check_ratio_sum([ContractionMap.scalar(0.99, 0.0)]).passed


def test_separation_examples(cantor_full):
    r = check_separation(cantor_full, 1)
    assert r.passed and r.min_gap == pytest.approx(1 / 3)
    r = check_separation(eg2egs(), 1)
    assert r.passed and r.min_gap == pytest.approx(0.2)
    for n in range(1, 5):
        assert check_separation(common_fixed_point(), n).status == "fail"


def test_separation_gaps_shrink_geometrically():
    gaps = [check_separation(eg2egs(), n).min_gap for n in range(1, 5)]
    assert gaps == pytest.approx([0.2, 0.08, 0.032, 0.0128])


def test_ratio_sum_and_separation_are_independent():
    a = separation_report(eg2egs(), [1])
    assert a.per_n[1].passed and not a.ratio_sum_pass
    b = separation_report(common_fixed_point(), [1])
    assert not b.per_n[1].passed and b.ratio_sum_pass


@pytest.mark.parametrize("make", [eg2egs, common_fixed_point, lambda: unit_system(cantor_maps(), Full(2))])
def test_separation_propagation(make):
    rep = separation_report(make(), range(1, 5))
    assert rep.propagation_ok
    for n in range(1, 3):
        if rep.per_n[n].passed:
            assert rep.per_n[n + 1].passed and rep.per_n[n + 2].passed


def test_separation_cap():
    with pytest.raises(SeparationCapError):
        check_separation(eg2egs(), 8, cap=4096)


def test_separation_in_three_dimensions():
    corners = [(0, 0, 0), (1, 1, 1)]
    maps = [ContractionMap(np.eye(3) * 0.3, 0.7 * np.array(c, float)) for c in corners]
    ifs = IfsSystem(Box.unit(3), MapFamily(maps), Full(2))
    assert check_separation(ifs, 1).status == "pass"
    rot = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]]) * 0.6
    maps = [ContractionMap(rot, np.array([0.6, 0.0, 0.0])), ContractionMap(np.eye(3) * 0.6, np.full(3, 0.3))]
    ifs = IfsSystem(Box.unit(3), MapFamily(maps), Full(2))
    assert check_separation(ifs, 1).status == "inconclusive"


def test_polygon_distance_against_sampling():
    rng = np.random.default_rng(2)
    for _ in range(30):
        P = _hull(rng.uniform(0, 1, (5, 2)))
        Q = _hull(rng.uniform(0, 1, (5, 2)) + rng.uniform(-1.5, 1.5, 2))
        t = np.linspace(0, 1, 400)[:, None]

        def boundary(poly):
            nxt = np.roll(poly, -1, axis=0)
            return np.concatenate([a + t * (b - a) for a, b in zip(poly, nxt)])

        bp, bq = boundary(P), boundary(Q)
        sampled = np.sqrt(((bp[:, None, :] - bq[None, :, :]) ** 2).sum(2)).min()
        exact = _poly_distance(P, Q)
        assert exact <= sampled + 1e-12
        if exact > 0:
            assert sampled - exact <= 0.01


def test_image_disjointness_on_S(cantor_full):
    S = compute_attractor(cantor_full, 1e-4, 1e-3, 60).S
    (row,) = check_image_disjointness_on_S(cantor_full, S)
    assert row["pass"] and row["min_distance"] == pytest.approx(1 / 3, abs=1e-3)
    golden = unit_system(cantor_maps(), GOLDEN, totally_invariant=True)
    Sg = compute_attractor(golden, 1e-4, 1e-3, 60).S
    assert check_image_disjointness_on_S(golden, Sg)[0]["pass"]
    common = unit_system([ContractionMap.scalar(0.5, 0.0), ContractionMap.scalar(1 / 3, 0.0)], Full(2),
                         totally_invariant=True)
    assert not check_image_disjointness_on_S(common, snap([0.0], 1e-4))[0]["pass"]


def test_image_disjointness_needs_flag(cantor_golden):
    with pytest.raises(HypothesisError):
        check_image_disjointness_on_S(cantor_golden, snap([0.0], 1e-4))


def golden_even_pair(target_maps=None):
    f1, f2 = cantor_maps()
    src = unit_system([f2, f1, f1], HigherBlock(GOLDEN, 2))
    dst = unit_system(target_maps or [f1, f2], EVEN)
    code = FactorCode(0, 0, {(1,): 2, (2,): 1, (3,): 1})
    return src, dst, code


def test_factor_golden_even():
    src, dst, code = golden_even_pair()
    rep = verify_factoring(src, dst, code, eps=1e-5, tol=1e-4)
    assert rep.max_residual <= 1e-10 and rep.commutes
    assert rep.attractor_distance <= 2e-4 and rep.attractor_ok


def test_factor_identity_and_mispaired():
    f = cantor_maps()
    ifs = unit_system(f, Full(2))
    ident = FactorCode(0, 0, {(1,): 1, (2,): 2})
    assert verify_factoring(ifs, ifs, ident).max_residual == 0.0
    swapped = unit_system([f[1], f[0]], Full(2))
    rep = verify_factoring(ifs, swapped, ident)
    # hand oracle: at x = 0, f_1(0) = 0 but f'_1(0) = 2/3
    assert rep.max_residual >= 0.1
    assert rep.residuals["1"] == pytest.approx(2 / 3)


def test_factor_with_affine_phi2():
    from subshift_ifs.config import AffineMap

    f = cantor_maps()
    src = unit_system(f, Full(2))
    # the flip x -> 1 - x conjugates f_1 to f_2
    dst = unit_system([f[1], f[0]], Full(2))
    phi = AffineMap(np.array([[-1.0]]), np.array([1.0]))
    rep = verify_factoring(src, dst, FactorCode(0, 0, {(1,): 1, (2,): 2}), phi)
    assert rep.max_residual <= 1e-15


def test_factor_incomplete_table():
    from subshift_ifs.symbolic import BlockMapDomainError

    ifs = unit_system(cantor_maps(), Full(2))
    with pytest.raises(BlockMapDomainError):
        verify_factoring(ifs, ifs, FactorCode(0, 0, {(1,): 1}))


def test_classification_rules():
    assert classify_return_times([], 20) == "empty"
    assert classify_return_times(range(10, 21), 20) == "cofinite-up-to-horizon"
    assert classify_return_times(range(11, 21), 20) != "cofinite-up-to-horizon"
    assert classify_return_times([3, 4, 5, 6, 7, 12], 20) == "thick-up-to-horizon"
    assert classify_return_times([3, 4, 5, 6, 12], 20) == "nonempty"  # run 4 < sqrt(20)
    assert classify_return_times([2, 5, 9], 20) == "nonempty"


@pytest.fixture(scope="module")
def cantor_S():
    ifs = unit_system(cantor_maps(), Full(2))
    return ifs, compute_attractor(ifs, 1e-4, 1e-3, 60).S


def test_probe_cantor_cofinite(cantor_S):
    ifs, S = cantor_S
    rep = return_time_probe(ifs, S, ([0.0], 0.1), ([1.0], 0.1), 20)
    assert rep.classification == "cofinite-up-to-horizon"
    # brute-force oracle over words: f_u(x) near 1 with x near 0 needs n >= 3
    assert set(range(3, 21)) <= set(rep.observed)
    assert rep.to_dict()["evidence_only"]


def test_probe_two_fixed_points_empty():
    ifs = two_fixed_points()
    S = compute_attractor(ifs, 1e-4, 1e-3, 60).S
    rep = return_time_probe(ifs, S, ([0.0], 0.1), ([1.0], 0.1), 20)
    assert rep.classification == "empty" and rep.observed == []


def test_probe_whole_set(cantor_S):
    ifs, S = cantor_S
    rep = return_time_probe(ifs, S, ([0.5], 1.0), ([0.5], 1.0), 12)
    assert rep.observed == list(range(1, 13))


def test_probe_monotone_in_balls(cantor_S):
    ifs, S = cantor_S
    small = return_time_probe(ifs, S, ([0.0], 0.05), ([1.0], 0.05), 12)
    big = return_time_probe(ifs, S, ([0.0], 0.2), ([1.0], 0.2), 12)
    assert set(small.observed) <= set(big.observed)


def test_probe_caps(cantor_S):
    ifs, S = cantor_S
    with pytest.raises(ProbeError):
        return_time_probe(ifs, S, ([0.0], 0.1), ([1.0], 0.1), 1001)
    with pytest.raises(ProbeError):
        return_time_probe(ifs, S, ([0.0], 0.1), ([1.0], 0.1), 0)


def test_total_transitivity_through_power_system(cantor_S):
    ifs, S = cantor_S
    for N in (2, 3):
        p = power_system(ifs, N)
        assert len(p.maps) == 2**N
        rep = return_time_probe(p, S, ([0.0], 0.1), ([1.0], 0.1), 10)
        assert rep.classification == "cofinite-up-to-horizon"


def test_periodic_density_examples(cantor_S, ex12):
    ifs, S = cantor_S
    rep = periodic_density_probe(ifs, S, 8)
    assert rep.num_cycles == 71 and rep.excess <= 0.02
    S12 = compute_attractor(ex12, 1e-5, 1e-4, 60).S
    rep = periodic_density_probe(ex12, S12, 4)
    assert rep.num_cycles == 1 and rep.excess <= 1e-4
    aper = unit_system(cantor_maps(), OrbitClosure(2, (), (1, 1, 2)))
    rep = periodic_density_probe(aper, snap([0.0], 1e-4), 2)
    assert rep.message == "no cycles found" and rep.excess is None
