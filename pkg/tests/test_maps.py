import math
from fractions import Fraction

import numpy as np
import pytest

from subshift_ifs.maps import (
    Box,
    BoxInvarianceError,
    ContractionMap,
    IfsSystem,
    MapFamily,
    NotAContractionError,
    certify_ratio,
    compose_word,
    fixed_point,
)
from subshift_ifs.symbolic import Full

from conftest import CODED, cantor_maps

SQ3 = math.sqrt(3)
KOCH_G2 = ContractionMap(np.array([[1 / 6, -SQ3 / 6], [SQ3 / 6, 1 / 6]]), np.array([1 / 3, 0.0]))

# rooted-required family as exact fractions (a, b) with f(x) = a x + b
F_EXACT = {1: (Fraction(1, 4), Fraction(1, 8)), 2: (Fraction(1, 3), Fraction(1, 3)), 3: (Fraction(1, 3), Fraction(1, 4))}


def exact_fixed_point(word):
    a, b = Fraction(1), Fraction(0)
    for s in word:  # first symbol applied first
        fa, fb = F_EXACT[s]
        a, b = fa * a, fa * b + fb
    return b / (1 - a)


def rooted_family():
    return MapFamily([ContractionMap.scalar(float(a), float(b)) for a, b in F_EXACT.values()])


def test_eval_examples():
    f1 = ContractionMap.scalar(1 / 3, 0.0)
    assert f1(np.array([1.0]))[0] == pytest.approx(1 / 3, abs=1e-15)
    const = ContractionMap(np.zeros((2, 2)), np.array([0.3, 0.7]))
    assert np.array_equal(const(np.array([[5.0, -1.0], [0.0, 0.0]])), [[0.3, 0.7], [0.3, 0.7]])
    assert np.allclose(KOCH_G2(np.zeros(2)), [1 / 3, 0.0], atol=1e-15)


def test_compose_examples():
    f12 = compose_word(cantor_maps(), (1, 2))
    assert f12.matrix[0, 0] == pytest.approx(1 / 9, abs=1e-15)
    assert f12.offset[0] == pytest.approx(2 / 3, abs=1e-15)
    assert compose_word(cantor_maps(), (2,)) == cantor_maps().of(2)
    g12 = compose_word(rooted_family(), (1, 2))
    assert g12.matrix[0, 0] == pytest.approx(1 / 12, abs=1e-15)
    assert g12.offset[0] == pytest.approx(3 / 8, abs=1e-15)


def test_fixed_point_examples():
    assert fixed_point(ContractionMap.scalar(1 / 3, 2 / 3))[0] == pytest.approx(1.0, abs=1e-15)
    assert fixed_point(compose_word(cantor_maps(), (1, 2)))[0] == pytest.approx(0.75, abs=1e-15)


def test_rooted_required_fixed_point_chain():
    chain = [(1,), (2, 3, 1), (2, 1), (3,), (1, 2, 3), (3, 1, 2), (1, 2), (2,)]
    exact = [exact_fixed_point(w) for w in chain]
    assert exact[0] == Fraction(1, 6)
    assert exact[2] == Fraction(5, 22)
    assert exact[3] == Fraction(3, 8)
    assert exact[6] == Fraction(9, 22)
    assert exact[7] == Fraction(1, 2)
    assert all(x < y for x, y in zip(exact, exact[1:]))
    fam = rooted_family()
    for w, x in zip(chain, exact):
        assert abs(fixed_point(compose_word(fam, w))[0] - float(x)) <= 1e-15


def test_certify_ratio_examples():
    r = certify_ratio(np.eye(2) / 3)
    assert 1 / 3 <= r <= 1 / 3 * (1 + 1e-8)
    r = certify_ratio(KOCH_G2.matrix)
    assert 1 / 3 <= r <= 1 / 3 * (1 + 1e-8)
    with pytest.raises(NotAContractionError):
        certify_ratio(np.array([[0.9, 0.9], [0.0, 0.0]]))
    assert certify_ratio(np.zeros((3, 3))) == 0.0


def test_certify_ratio_bounds_svd():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = rng.uniform(-0.4, 0.4, (3, 3))
        s = np.linalg.svd(A, compute_uv=False)[0]
        if s >= 0.99:
            continue
        assert s <= certify_ratio(A) <= s * (1 + 1e-8)


def test_ratio_product_and_margin():
    fam = MapFamily([ContractionMap.scalar(0.5, 0.0), ContractionMap.scalar(0.25, 0.5)])
    f = compose_word(fam, (1, 2, 2, 1))
    prod = 0.5 * 0.25 * 0.25 * 0.5
    assert f.ratio >= prod
    assert f.ratio <= prod + 1e-9


def test_long_composition_ratio_stays_below_one():
    fam = MapFamily([ContractionMap.scalar(0.999999, 0.0)])
    f = compose_word(fam, (1,) * 5)
    assert f.ratio < 1.0


def test_rejects_expanding_and_box_escape():
    with pytest.raises(NotAContractionError):
        ContractionMap.scalar(1.0, 0.0)
    with pytest.raises(BoxInvarianceError):
        IfsSystem(Box.unit(1), MapFamily([ContractionMap.scalar(0.5, 0.6)]), Full(1))


def test_alphabet_must_match_map_count():
    with pytest.raises(ValueError):
        IfsSystem(Box.unit(1), cantor_maps(), CODED)


def test_invertible_flag():
    assert ContractionMap.scalar(0.5, 0.0).invertible
    assert not ContractionMap(np.array([[0.5, 0.0], [0.0, 0.0]]), np.zeros(2)).invertible


def test_box_helpers():
    box = Box((0.0, -1.0), (1.0, 1.0))
    assert box.dim == 2
    assert box.diam == pytest.approx(math.sqrt(5))
    assert len(box.corners()) == 4
    assert box.contains(np.array([[0.5, 0.0], [1.5, 0.0]])).tolist() == [True, False]
