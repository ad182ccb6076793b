import numpy as np
import pytest

from subshift_ifs import kernels
from subshift_ifs.maps import Box, ContractionMap, IfsSystem, MapFamily
from subshift_ifs.symbolic import CodedFinite, Full, OrbitClosure, Sft, Sofic


def cantor_maps():
    return MapFamily([ContractionMap.scalar(1 / 3, 0.0), ContractionMap.scalar(1 / 3, 2 / 3)])


def unit_system(maps, shift, **kw):
    return IfsSystem(Box.unit(1), MapFamily(maps), shift, **kw)


GOLDEN = Sft(2, ((2, 2),))
EVEN = Sofic.from_edges(2, [("A", "A", 2), ("A", "B", 1), ("B", "A", 1)])
EX12 = OrbitClosure(2, (), (1, 2))
CODED = CodedFinite(3, ((1, 2), (1, 2, 3)))


@pytest.fixture
def cantor_full():
    return unit_system(cantor_maps(), Full(2), totally_invariant=True)


@pytest.fixture
def cantor_golden():
    return unit_system(cantor_maps(), GOLDEN)


@pytest.fixture
def ex12():
    return unit_system(cantor_maps(), EX12)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    prev = kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(prev)


def brute_words(spec, n):
    """All admissible words of length n by filtering k^n candidates."""
    import itertools

    return [w for w in itertools.product(range(1, spec.alphabet + 1), repeat=n) if spec.is_admissible(w)]
