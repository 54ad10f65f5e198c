import numpy as np
import pytest

from fluxtube.lattice import (GeometryError, Region, build_lattice, centered_lattice,
                              fiber_blocks_to_matrix, fiber_operator, matrix_to_fiber_blocks,
                              position_diagonals, region_projector)


def test_centered_ranges_and_dim():
    sp = centered_lattice(6, 4, 2)
    assert sp.x_range == (-3, 2) and sp.y_range == (-2, 1)
    assert sp.n_sites == 24 and sp.dim == 48


def test_flatten_roundtrip():
    sp = centered_lattice(5, 7, 3)
    for idx in (0, 17, sp.dim - 1):
        n1, n2, a = sp.unflatten(idx)
        assert sp.flatten(n1, n2, a) == idx


def test_empty_range_raises():
    with pytest.raises(GeometryError):
        build_lattice((3, 2), (0, 1))


def test_periodic_wrap():
    sp = centered_lattice(4, 4, 1, "periodic_xy")
    assert tuple(np.ravel(sp.wrap(2, -3))) == (-2, 1)


def test_region_algebra():
    sp = centered_lattice(8, 8)
    left = Region.left_of(0)
    assert left.mask(sp).sum() == 32
    assert (~left).mask(sp).sum() == 32
    assert (left & Region.below(0)).mask(sp).sum() == 16
    assert (left | Region.full()).mask(sp).all()
    assert not Region.empty().mask(sp).any()


def test_region_projector_is_projection():
    sp = centered_lattice(6, 6, 2)
    P = region_projector(sp, Region.disk((0.5, 0.5), 2.0))
    assert np.allclose(P @ P, P)
    assert np.allclose(P, P.conj().T)


def test_position_diagonals():
    sp = centered_lattice(4, 3, 2)
    x1, x2 = position_diagonals(sp)
    assert len(x1) == sp.dim
    assert set(np.unique(x1)) == {-2, -1, 0, 1}


def test_fiber_block_roundtrip(rng):
    blocks = [[rng.normal(size=(15, 15)) for _ in range(2)] for _ in range(2)]
    M = fiber_blocks_to_matrix(blocks, 5, 3)
    back = matrix_to_fiber_blocks(M, 5, 3)
    assert all(np.allclose(back[a][b], blocks[a][b]) for a in range(2) for b in range(2))


def test_fiber_operator_is_kron():
    sp = centered_lattice(3, 3, 2)
    loc = np.array([[0, 1], [1, 0]])
    assert np.allclose(fiber_operator(sp, loc), np.kron(np.eye(9), loc))
