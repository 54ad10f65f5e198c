import numpy as np
import pytest

from fluxtube.lattice import GeometryError, Region, centered_lattice
from fluxtube.models import named_model
from fluxtube.spectral import occupied_vectors
from fluxtube.topology import (IndeterminateIndexError, _split, bulk_gap, chern_realspace,
                               chern_report, default_rho, default_window, index_flux_phase,
                               index_pfp)


@pytest.fixture(scope="module")
def p_ip16():
    sp = centered_lattice(16, 16, 2)
    fam = named_model("p_ip", None, sp)
    return fam, occupied_vectors(fam(0.0), 0.0)


def test_default_window_is_eight_by_eight():
    sp = centered_lattice(24, 24)
    assert default_window(sp).mask(sp).sum() == 64


def test_default_rho():
    sp = centered_lattice(24, 24)
    assert default_rho(sp, (-0.5, -0.5)) == pytest.approx(7.5)


def test_chern_p_ip(p_ip16):
    fam, W = p_ip16
    rep = chern_report(W @ W.conj().T, fam.space)
    assert rep.chern_rounded == 1 and rep.valid


def test_chern_trivial_p_ip():
    sp = centered_lattice(16, 16, 2)
    W = occupied_vectors(named_model("p_ip", {"mu": 5.0}, sp)(0.0), 0.0)
    assert abs(chern_realspace(W @ W.conj().T, sp)) < 0.05


def test_chern_window_near_edge_rejected(p_ip16):
    fam, W = p_ip16
    with pytest.raises(GeometryError):
        chern_realspace(W @ W.conj().T, fam.space, Region.box((-8, -6), (-8, -6)))


def test_index_pfp_p_ip(p_ip16):
    fam, W = p_ip16
    c = tuple(fam.centers()[0])
    rep = index_pfp(None, index_flux_phase(fam), fam.coords(), c, default_rho(fam.space, c), basis=W)
    assert (rep.pfp_kernel_dim, rep.pfp_cokernel_dim, rep.ind_pfp) == (1, 0, 1)
    assert rep.diagnostics["excluded"] == 1


def test_index_orientation_flips_with_phase(p_ip16):
    fam, W = p_ip16
    c = tuple(fam.centers()[0])
    rep = index_pfp(None, fam.flux_phase_diagonal(), fam.coords(), c,
                    default_rho(fam.space, c), basis=W)
    assert rep.ind_pfp == -1


def test_index_trivial_identity_phase():
    W = np.eye(6)[:, :3]
    rep = index_pfp(None, np.ones(6), np.zeros((6, 2)), (0, 0), 1.0, basis=W)
    assert rep.ind_pfp == 0 and rep.diagnostics["n_small"] == 0


def test_split_requires_clear_jump():
    assert _split(np.array([1e-9, 0.6, 0.9]))[0] == 1
    with pytest.raises(IndeterminateIndexError):
        _split(np.array([0.1, 0.2, 0.3, 0.9]))


def test_bulk_gap_p_ip():
    fam = named_model("p_ip", None, centered_lattice(8, 8, 2))
    assert bulk_gap(fam, 0.0, n=16) > 1.0
