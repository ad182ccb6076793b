import numpy as np
import pytest

from subshift_ifs.attractor import box_grid, compute_attractor, hausdorff_distance, snap
from subshift_ifs.maps import ContractionMap, compose_word, fixed_point
from subshift_ifs.orbit import (
    EventuallyPeriodicPoint,
    InadmissibleSequenceError,
    cycle_of,
    decomposition_check,
    ids_step,
    limit_set_along,
    periodic_admissible,
    periodic_words,
    trajectory,
    transitive_stream,
)
from subshift_ifs.symbolic import Full, OrbitClosure, enumerate_language

from conftest import EVEN, GOLDEN, unit_system


def sorted_pts(c):
    return sorted(c.points[:, 0].tolist())


def test_trajectory_examples(ex12):
    assert trajectory(ex12, (1, 2), [0.0])[:, 0].tolist() == pytest.approx([0, 0, 2 / 3], abs=1e-15)
    assert trajectory(ex12, (), [0.3]).tolist() == [[0.3]]
    even_steps = trajectory(ex12, (1, 2) * 4, [0.0])[::2, 0]
    assert np.all(np.diff(even_steps) > 0)
    assert np.all(np.diff(np.abs(even_steps - 0.75)) < 0)


def test_trajectory_rejects_inadmissible_prefix(ex12):
    with pytest.raises(InadmissibleSequenceError):
        trajectory(ex12, (1, 1), [0.0])


def test_ids_step_examples(ex12):
    p = EventuallyPeriodicPoint((), (1, 2))
    q, x = ids_step(ex12, p, [0.0])
    assert q == EventuallyPeriodicPoint((), (2, 1))
    assert x.tolist() == [0.0]
    const = EventuallyPeriodicPoint((), (2,))
    x = np.array([0.1])
    f2 = ex12.maps.of(2)
    for _ in range(4):
        const, x2 = ids_step(ex12, const, x)
        assert x2 == pytest.approx(f2(x))
        x = x2


def test_ids_step_agrees_with_trajectory(cantor_golden):
    rng = np.random.default_rng(5)
    words = enumerate_language(GOLDEN, 9)
    for _ in range(20):
        w = words[rng.integers(len(words))]
        x0 = rng.uniform(0, 1, 1)
        x = x0
        sigma = w
        for _ in range(len(w)):
            sigma, x = ids_step(cantor_golden, sigma, x)
        assert np.array_equal(x, trajectory(cantor_golden, w, x0)[-1])


def test_cycle_examples(ex12, cantor_full):
    c = cycle_of(ex12, EventuallyPeriodicPoint((), (1, 2)))
    assert c.points[:, 0].tolist() == pytest.approx([0.75, 0.25], abs=1e-15)
    assert c.residual <= 1e-10
    single = cycle_of(cantor_full, EventuallyPeriodicPoint((), (2,)))
    assert single.points[:, 0].tolist() == pytest.approx([1.0])
    trans = cycle_of(cantor_full, EventuallyPeriodicPoint((2,), (1,)))
    assert trans.points[:, 0].tolist() == [0.0]


def test_cycle_inadmissible(ex12):
    with pytest.raises(InadmissibleSequenceError):
        cycle_of(ex12, EventuallyPeriodicPoint((), (1,)))
    with pytest.raises(InadmissibleSequenceError):
        cycle_of(ex12, EventuallyPeriodicPoint((1, 1), (1, 2)))


def test_cycle_invariance_and_transient_irrelevance(cantor_golden):
    for u in periodic_words(cantor_golden.presentation, 6):
        c = cycle_of(cantor_golden, EventuallyPeriodicPoint((), u))
        f_u = compose_word(cantor_golden.maps, u)
        assert np.linalg.norm(f_u(c.points[0]) - c.points[0]) <= 1e-10
        # each point goes to the next under the next symbol
        x = c.points[0]
        for a in u:
            x = cantor_golden.maps.of(a)(x)
        assert np.linalg.norm(x - c.points[0]) <= 1e-10
        for v in [(1,), (2, 1), (1, 2, 1)]:
            if periodic_admissible(cantor_golden.presentation, v, u):
                cv = cycle_of(cantor_golden, EventuallyPeriodicPoint(v, u))
                assert sorted_pts(snap(cv.points, 1e-9)) == sorted_pts(snap(c.points, 1e-9))


def test_degenerate_cycle_merges():
    fam = [ContractionMap.scalar(0.5, 0.0), ContractionMap.scalar(1 / 3, 0.0)]
    ifs = unit_system(fam, Full(2))
    c = cycle_of(ifs, EventuallyPeriodicPoint((), (1, 2, 2)))
    assert len(c) == 1


def test_periodic_words():
    assert periodic_words(GOLDEN.presentation, 3) == [(1,), (1, 2), (1, 1, 2)]
    assert periodic_words(Full(2).presentation, 2) == [(1,), (2,), (1, 2)]
    # 1^inf is in the even shift although the only loop reading 1s reads 11
    assert periodic_words(EVEN.presentation, 3) == [(1,), (2,), (1, 1, 2)]
    assert periodic_words(OrbitClosure(2, (), (1, 1, 2)).presentation, 2) == []


def test_limit_set_examples(ex12, cantor_full):
    A, _ = box_grid(ex12.box, 1e-4)
    res = limit_set_along(ex12, EventuallyPeriodicPoint((), (1, 2)), A, 40, 1e-3)
    assert hausdorff_distance(res.cloud, snap([0.25, 0.75], 1e-4)) <= 1e-3
    assert res.window == (20, 40)
    const = limit_set_along(cantor_full, EventuallyPeriodicPoint((), (2,)), A, 30, 1e-3)
    assert const.converged
    assert sorted_pts(const.cloud)[-1] == pytest.approx(1.0, abs=1e-4)


def test_limit_set_matches_cycle(cantor_golden):
    A, _ = box_grid(cantor_golden.box, 1e-4)
    for u in [(1,), (1, 2), (1, 1, 2)]:
        res = limit_set_along(cantor_golden, EventuallyPeriodicPoint((), u), A, 60, 1e-3)
        c = cycle_of(cantor_golden, EventuallyPeriodicPoint((), u))
        assert hausdorff_distance(res.cloud, snap(c.points, 1e-4)) <= 1e-3


def test_transitive_stream_golden():
    st = transitive_stream(GOLDEN, 9)
    assert st.transitive
    assert st.block_ends == [2, 9, 24, 58, 124, 254, 496, 945, 1758]
    sym = tuple(st.symbols)
    assert GOLDEN.is_admissible(sym)
    for n in range(1, 8):
        factors = {sym[i : i + n] for i in range(len(sym) - n + 1)}
        assert set(enumerate_language(GOLDEN, n)) <= factors


def test_transitive_stream_reducible_reports_skips():
    from subshift_ifs.symbolic import Sofic

    two = Sofic.from_edges(2, [("a", "a", 1), ("b", "b", 2)])
    st = transitive_stream(two, 3)
    assert not st.transitive and st.skipped


def test_limit_set_along_transitive_stream(cantor_golden):
    eps, tol = 1e-4, 1e-3
    S = compute_attractor(cantor_golden, eps, tol, 60).S
    st = transitive_stream(GOLDEN, 7)
    A, _ = box_grid(cantor_golden.box, eps)
    res = limit_set_along(cantor_golden, st, A, st.block_ends[-1], tol)
    assert res.label == "transitive stream"
    assert hausdorff_distance(res.cloud, S) <= 2 * tol


def test_limit_set_prefix_label(cantor_full):
    A, _ = box_grid(cantor_full.box, 1e-3)
    res = limit_set_along(cantor_full, iter([1, 2] * 10), A, 20, 1e-2)
    assert res.label == "prefix-horizon approximation"
    with pytest.raises(ValueError):
        limit_set_along(cantor_full, iter([1, 2]), A, 20, 1e-2)


def test_decomposition_examples(cantor_golden, cantor_full):
    tol = 1e-3
    S = compute_attractor(cantor_golden, 1e-4, tol, 60).S
    samples = [EventuallyPeriodicPoint((), u) for u in periodic_words(GOLDEN.presentation, 6)]
    rep = decomposition_check(cantor_golden, S, samples, tol)
    assert rep.all_within_tol
    S_full = compute_attractor(cantor_full, 1e-4, tol, 60).S
    samples = [EventuallyPeriodicPoint((), u) for u in periodic_words(Full(2).presentation, 8)]
    rep = decomposition_check(cantor_full, S_full, samples, tol)
    assert rep.all_within_tol
    # oracle run: coverage excess is 3e-4 here, frozen with the 0.02 budget
    assert rep.coverage_excess <= 0.02


def test_decomposition_shared_fixed_point():
    fam = [ContractionMap.scalar(0.5, 0.0), ContractionMap.scalar(1 / 3, 0.0)]
    ifs = unit_system(fam, Full(2))
    S = snap([0.0], 1e-4)
    rep = decomposition_check(ifs, S, [EventuallyPeriodicPoint((), (1,))], 1e-3)
    assert rep.coverage_excess == 0.0


def test_fixed_point_of_cycle_word_matches_closed_form(ex12):
    assert fixed_point(compose_word(ex12.maps, (2, 1)))[0] == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("spec", [GOLDEN, EVEN, OrbitClosure(2, (1,), (1, 2, 2))], ids=["golden", "even", "orbit"])
def test_periodic_words_against_language_oracle(spec):
    import itertools

    from subshift_ifs.symbolic import word_key

    pres = spec.presentation
    found = set(periodic_words(pres, 5))
    expected = set()
    for n in range(1, 6):
        for u in itertools.product(range(1, spec.alphabet + 1), repeat=n):
            # u^inf is admissible iff long powers of u are admissible
            if not spec.is_admissible(u * (30 // n + 2)):
                continue
            if any(u == u[k:] + u[:k] for k in range(1, n) if n % k == 0):
                continue
            if u == min(u[k:] + u[:k] for k in range(n)):
                expected.add(u)
        for u in itertools.product(range(1, spec.alphabet + 1), repeat=n):
            assert periodic_admissible(pres, (), u) == spec.is_admissible(u * (30 // n + 2))
    assert found == expected
    assert periodic_words(pres, 5) == sorted(found, key=word_key)
