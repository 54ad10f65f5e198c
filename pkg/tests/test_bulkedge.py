import numpy as np
import pytest

from fluxtube.bulkedge import (EdgeGeometry, averaged_edge_current, column_current,
                               corner_decay, current_map, edge_current, finite_size_sweep,
                               half_plane_restrict, switch_derivative)
from fluxtube.lattice import GeometryError
from fluxtube.models import model_spec
from fluxtube.spectral import make_switch

QUANTUM = 1 / (2 * np.pi)


@pytest.fixture(scope="module")
def strip():
    geo = EdgeGeometry(24, 12)
    spec, _ = model_spec("p_ip")
    space = geo.space(spec.orbitals)
    return geo, space, half_plane_restrict(spec, geo)


def test_geometry_masks():
    geo = EdgeGeometry(8, 8)
    sp = geo.space(2)
    assert sp.x_range == (-4, 3) and sp.y_range == (0, 7)
    assert geo.bottom_mask(sp).sum() == geo.top_mask(sp).sum() == 64
    assert geo.left_mask(sp).sum() == 64


def test_restrict_rejects_long_range():
    spec, _ = model_spec("p_ip")
    with pytest.raises(GeometryError):
        half_plane_restrict(spec, EdgeGeometry(4, 8))


def test_switch_derivative_hermitian(strip):
    _, _, H = strip
    G = switch_derivative(H, make_switch((-1.2, 1.2)))
    assert np.allclose(G, G.conj().T)


def test_edge_currents_opposite_and_quantized(strip):
    geo, space, H = strip
    sw = make_switch((-1.2, 1.2))
    bottom = edge_current(H, sw, geo, space)
    top = edge_current(H, sw, geo, space, "top")
    assert bottom == pytest.approx(-QUANTUM, rel=0.02)
    assert top == pytest.approx(-bottom, rel=1e-6)


def test_current_map_sums_to_total(strip):
    geo, space, H = strip
    sw = make_switch((-1.2, 1.2))
    rows = current_map(H, sw, geo, space)
    assert len(rows) == space.n_sites
    assert sum(v for *_, v in rows) == pytest.approx(0.0, abs=1e-8)


def test_corner_decay_monotone(strip):
    geo, space, H = strip
    prof = corner_decay(H, make_switch((-1.2, 1.2)), geo, space, radii=(2, 4, 8))
    vals = [v for _, v in prof]
    assert vals[0] >= vals[1] >= vals[2] and vals[2] < 1e-6


def test_edge_current_rejects_periodic_strip():
    geo = EdgeGeometry(24, 12, periodic_x=True)
    spec, _ = model_spec("p_ip")
    space = geo.space(2)
    with pytest.raises(GeometryError):
        edge_current(half_plane_restrict(spec, geo), make_switch((-1.2, 1.2)), geo, space)


def test_column_current_periodic():
    geo = EdgeGeometry(24, 12, periodic_x=True)
    spec, _ = model_spec("p_ip")
    space = geo.space(2)
    val = column_current(half_plane_restrict(spec, geo), make_switch((-1.2, 1.2)), geo, space)
    assert val == pytest.approx(-QUANTUM, rel=0.02)


def test_averaged_edge_current_two_seeds():
    out = averaged_edge_current("p_ip", {"w": 0.4}, [0, 1], EdgeGeometry(16, 12),
                                make_switch((-1.2, 1.2)))
    assert len(out["values"]) == 2 and out["excluded"] == []
    assert out["mean"] == pytest.approx(-QUANTUM, rel=0.05)


def test_finite_size_bias_independent_of_height():
    # the column-average bias comes from the discrete edge momenta, not the height
    rows = finite_size_sweep("p_ip", None, make_switch((-1.2, 1.2)), heights=(12, 16), widths=(24,))
    assert abs(rows[0]["bias"] - rows[1]["bias"]) < 1e-9
    assert abs(rows[0]["bias"]) < 1e-3
