"""Seeded generator families and their determinism."""
import math

import pytest

from expandec import generators as gen
from expandec.errors import Infeasible


def test_clique_edge_count():
    assert gen.clique(4).m == 6


def test_barbell_edge_count():
    assert gen.barbell(4, 1).m == 13


def test_cliques_chain_structure():
    g = gen.cliques_chain(3, 5, 2)
    assert g.n == 15
    assert g.m == 3 * 10 + 2 * 2


def test_grid_shape():
    g = gen.grid(3, 4)
    assert g.n == 12
    assert g.m == 3 * 3 + 2 * 4


def test_erdos_renyi_edge_count_5_sigma():
    g = gen.erdos_renyi(100, 0.5, seed=42)
    mean = 4950 * 0.5
    sigma = math.sqrt(4950 * 0.25)
    assert abs(g.m - mean) <= 5 * sigma


def test_erdos_renyi_deterministic():
    a = gen.erdos_renyi(50, 0.3, seed=7)
    b = gen.erdos_renyi(50, 0.3, seed=7)
    assert a == b
    assert a != gen.erdos_renyi(50, 0.3, seed=8)


def test_random_regular_degrees():
    g = gen.random_regular(16, 3, seed=1)
    assert all(g.degree(v) == 3 for v in range(16))


def test_random_regular_infeasible():
    with pytest.raises(Infeasible):
        gen.random_regular(5, 3, seed=0)


def test_parse_spec_roundtrip():
    g = gen.generate("barbell:4:1")
    assert g.m == 13
    g2 = gen.generate("erdos_renyi:30:0.2", seed=3)
    assert g2 == gen.erdos_renyi(30, 0.2, seed=3)


def test_star_degrees():
    g = gen.star(8)
    assert g.degree(0) == 8
    assert all(g.degree(v) == 1 for v in range(1, 9))
