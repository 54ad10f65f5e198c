import numpy as np
import pytest
from scipy.integrate import quad

from fluxtube.lattice import centered_lattice
from fluxtube.models import FluxFamily, named_model
from fluxtube.spectral import (IndeterminateKernelError, SpectralError, diagonalize,
                               eigh_window, fermi_projection, gap_report, gap_window,
                               kernel_index, localization_weights, make_switch,
                               spectral_flow, spectral_flow_trace)


def _diag_family(levels):
    """Toy family on a 4x4 patch; ``levels(alpha)`` gives the diagonal."""
    sp = centered_lattice(4, 4)
    return FluxFamily(sp, lambda a: np.diag(levels(a)).astype(complex), [(-1, -1)])


def test_switch_limits_and_monotone():
    sw = make_switch((-1.0, 2.0))
    assert sw.g(-1.5) == 1.0 and sw.g(2.5) == 0.0
    E = np.linspace(-1, 2, 101)
    assert np.all(np.diff(sw.g(E)) <= 1e-15)


def test_switch_derivative_integrates_to_minus_one():
    sw = make_switch((-0.3, 0.7), order=3)
    val, _ = quad(sw.dg, -0.3, 0.7)
    assert val == pytest.approx(-1.0, abs=1e-12)
    h = 1e-6
    assert sw.dg(0.1) == pytest.approx((sw.g(0.1 + h) - sw.g(0.1 - h)) / (2 * h), rel=1e-6)


def test_switch_rejects_empty_interval():
    with pytest.raises(ValueError):
        make_switch((1.0, 1.0))


def test_gap_report_and_window():
    g = gap_report(np.array([-3.0, -1.0, 2.0, 4.0]), 0.0)
    assert (g.below, g.above, g.width, g.distance) == (-1.0, 2.0, 3.0, 1.0)
    lo, hi = gap_window(g, 0.6)
    assert lo == pytest.approx(-0.4) and hi == pytest.approx(1.4)


def test_fermi_projection_rejects_mu_on_eigenvalue():
    H = np.diag([-1.0, 0.0, 1.0])
    with pytest.raises(SpectralError):
        fermi_projection(H, 0.0)
    P = fermi_projection(H, 0.5)
    assert np.allclose(P, np.diag([1, 1, 0]))


def test_diagonalize_residual(rng):
    A = rng.normal(size=(20, 20)) + 1j * rng.normal(size=(20, 20))
    H = A + A.conj().T
    s = diagonalize(H, 0.0)
    assert s.residual(H) < 1e-13


def test_eigh_window_subset():
    e, v = eigh_window(np.diag([-2.0, -0.1, 0.3, 5.0]), -0.5, 0.5)
    assert np.allclose(e, [-0.1, 0.3]) and v.shape == (4, 2)
    e, _ = eigh_window(np.diag([-2.0, 5.0]), -0.5, 0.5)
    assert e.size == 0


def test_toy_crossing_counted_with_sign():
    fam = _diag_family(lambda a: np.r_[2 * a - 1.0, np.linspace(-3, -1.5, 7), np.linspace(1.5, 3, 8)])
    # the moving level sits on site index 0, the corner (-2, -2)
    res = spectral_flow(fam, np.linspace(0, 1, 11), 0.0, radius=10.0)
    assert res.raw_flow == 1 and res.localized_flow == 1
    assert res.crossings[0].alpha == pytest.approx(0.5, abs=1e-8)
    down = _diag_family(lambda a: np.r_[1.0 - 2 * a, np.linspace(-3, -1.5, 7), np.linspace(1.5, 3, 8)])
    assert spectral_flow(down, np.linspace(0, 1, 11), 0.0, radius=10.0).raw_flow == -1


def test_toy_crossing_away_from_center_not_localized():
    fam = _diag_family(lambda a: np.r_[2 * a - 1.0, np.linspace(-3, -1.5, 7), np.linspace(1.5, 3, 8)])
    res = spectral_flow(fam, np.linspace(0, 1, 11), 0.0, radius=1.0)
    assert res.raw_flow == 1 and res.localized_flow == 0


def test_localization_weights():
    coords = np.array([[0.0, 0.0], [5.0, 0.0]])
    v = np.array([[1.0, 0.6], [0.0, 0.8]])
    w = localization_weights(v, coords, np.array([[0.5, 0.5]]), 2.0)
    assert np.allclose(w, [1.0, 0.36])


def test_kernel_index_counts_cluster():
    H = np.diag([1e-12, -3e-12, 0.8, -0.9, 2.0])
    rep = kernel_index(H, 0.0, gap=5.0)
    assert rep.dim == 2 and rep.ind2 == 0
    assert rep.smallest == pytest.approx(1e-12)


def test_kernel_index_indeterminate_without_jump():
    H = np.diag([0.1, 0.15, 0.2, 0.25])
    with pytest.raises(IndeterminateKernelError):
        kernel_index(H, 0.0, gap=5.0)


def test_p_ip_small_flow_and_trace():
    sp = centered_lattice(16, 16, 2)
    fam = named_model("p_ip", None, sp)
    res = spectral_flow(fam, np.linspace(0, 1, 21), 0.5, radius=4)
    assert res.localized_flow == 1
    tr = spectral_flow_trace(fam, make_switch((-1.2, 1.2)))
    assert abs(tr - 1) < 0.05


def test_flow_independent_of_mu_in_gap():
    sp = centered_lattice(16, 16, 2)
    fam = named_model("p_ip", None, sp)
    flows = [spectral_flow(fam, np.linspace(0, 1, 21), mu, radius=4).localized_flow
             for mu in (-1.0, 0.3, 1.0)]
    assert flows == [1, 1, 1]
