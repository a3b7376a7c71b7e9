import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from striplab.errors import CapExceeded, InvalidParam
from striplab.grid import Bloch, BoundarySpec, Dirichlet, build_grid, neighbors

grids = st.builds(
    lambda d1, d2, L, a, M: (d1, d2, L, a, 2 * M),
    st.sampled_from([1, 2]),
    st.sampled_from([1, 2]),
    st.integers(1, 4),
    st.integers(1, 3),
    st.integers(1, 4),
)


def test_site_counts_and_spacing():
    assert build_grid(1, 1, L=2, a=1, M=2).n_sites == 4
    g = build_grid(1, 1, L=8, a=2, M=16)
    assert g.n_sites == 256
    assert g.h == 0.5
    assert build_grid(2, 1, L=4, a=1, M=8).n_sites == 128


def test_invalid_parameters():
    with pytest.raises(InvalidParam):
        build_grid(3, 1, L=2, a=1, M=4)
    with pytest.raises(InvalidParam):
        build_grid(1, 1, L=2, a=1, M=5)  # odd M
    with pytest.raises(CapExceeded):
        build_grid(2, 2, L=100, a=2, M=100)


def test_x2_centered_between_middle_layers():
    g = build_grid(1, 1, L=2, a=1, M=4)
    x2 = np.unique(g.x2_positions())
    assert np.allclose(x2, [-1.5, -0.5, 0.5, 1.5])
    assert x2.min() >= -g.M * g.h / 2
    assert x2.max() < g.M * g.h / 2
    # surface plane sits exactly between the two middle layers
    assert np.allclose(x2 + x2[::-1], 0.0)


def test_neighbors_corner_and_interior():
    g = build_grid(1, 1, L=2, a=1, M=2)
    corner = g.index_of((0, 0))
    arms = neighbors(g, int(corner))
    assert len(arms) == 4
    assert sum(a.neighbor is not None for a in arms) == 2
    assert sum(a.neighbor is None for a in arms) == 2

    g2 = build_grid(1, 1, L=4, a=1, M=4)
    inner = g2.index_of((2, 2))
    arms = neighbors(g2, int(inner))
    assert all(a.neighbor is not None for a in arms)
    assert len(arms) == 2 * (g2.d1 + g2.d2)


def test_x2_face_tagging():
    g = build_grid(1, 1, L=4, a=1, M=4)
    top = g.index_of((1, 3))
    arms = neighbors(g, int(top))
    boundary = [(a.axis, a.direction) for a in arms if a.neighbor is None]
    assert boundary == [(1, 1)]


@given(grids, st.integers(0, 10_000))
def test_index_round_trip(shape, raw):
    d1, d2, L, a, M = shape
    g = build_grid(d1, d2, L=L, a=a, M=M)
    site = raw % g.n_sites
    coords = g.coords_of(site)
    assert int(g.index_of(coords)) == site


@given(grids)
def test_bond_parity_and_arm_budget(shape):
    d1, d2, L, a, M = shape
    g = build_grid(d1, d2, L=L, a=a, M=M)
    interior = np.zeros(g.n_sites, dtype=int)
    for axis in range(g.n_axes):
        src, dst = g.interior_bonds(axis)
        np.add.at(interior, src, 1)
        np.add.at(interior, dst, 1)
    assert interior.sum() % 2 == 0
    for site in (0, g.n_sites - 1, g.n_sites // 2):
        arms = neighbors(g, site)
        n_int = sum(a.neighbor is not None for a in arms)
        assert n_int == interior[site]
        assert sum(a.neighbor is None for a in arms) == 2 * (d1 + d2) - n_int


def test_bloch_only_on_x1():
    with pytest.raises(InvalidParam):
        BoundarySpec(x1=Dirichlet(), x2=Bloch((0.3,)))


def test_bloch_angle_bounds():
    with pytest.raises(InvalidParam):
        Bloch((4.0,))
    assert Bloch((np.pi,)).is_real
    assert Bloch((0.0, -np.pi)).is_real
    assert not Bloch((0.5,)).is_real
