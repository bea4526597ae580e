"""
Shared fixtures and hypothesis strategies.
"""
import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import strategies as st

from src.models.configurations import gen_generic, gen_star
from src.models.exact_core import MultiPoly4
from src.models.geometry4 import Flat2, Line4, rank
from src.models.partition_engine import PartitionEngine, PartitionParams

FIXTURES = Path(__file__).parent / "fixtures"


def x(i: int) -> MultiPoly4:
    """Coordinate x_i as a polynomial, 1-based."""
    return MultiPoly4.variable(i - 1)


def e(i: int):
    """Standard basis vector e_i, 1-based."""
    return tuple(Fraction(int(j == i - 1)) for j in range(4))


rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
points = st.tuples(rationals, rationals, rationals, rationals)
nonzero_vectors = points.filter(any)


@st.composite
def lines(draw):
    return Line4(draw(points), draw(nonzero_vectors))


@st.composite
def flats(draw):
    u = draw(nonzero_vectors)
    v = draw(nonzero_vectors.filter(lambda w: rank([u, w]) == 2))
    return Flat2(draw(points), u, v)


@pytest.fixture(scope="session")
def pinned():
    return json.loads((FIXTURES / "pinned_seeds.json").read_text())


@pytest.fixture
def sample_config_path():
    return FIXTURES / "sample_config.json"


@pytest.fixture(scope="session")
def star_config():
    return gen_star(3, 2, seed=3)


@pytest.fixture(scope="session")
def generic_config():
    return gen_generic(5, 5, seed=42)


@pytest.fixture(scope="session")
def collinear_points():
    return [(i, 0, 0, 0) for i in range(1, 9)]


@pytest.fixture(scope="session")
def collinear_partition(collinear_points):
    params = PartitionParams(3, Fraction(0), (1, 2, 4))
    return PartitionEngine().build_partition(collinear_points, params)
