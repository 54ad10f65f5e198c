import numpy as np
import pytest

from fluxtube.lattice import GeometryError, Region, centered_lattice
from fluxtube.models import (HermiticityError, ModelError, SymmetryConditionError, build_bdg,
                             bulk_family, cutout, hermitize, majorana_inverse,
                             majorana_transform, model_orbitals, multi_flux_family, named_model)
from fluxtube.spectral import eigvalsh


@pytest.mark.parametrize("name", ["harper", "p_ip", "d_id", "wilson_dirac", "km_double"])
def test_named_models_hermitian(name):
    sp = centered_lattice(8, 8, model_orbitals(name))
    H = named_model(name, None, sp)(0.3)
    assert np.allclose(H, H.conj().T)


@pytest.mark.parametrize("name", ["p_ip", "wilson_dirac"])
def test_flux_periodicity(name):
    sp = centered_lattice(8, 8, model_orbitals(name))
    fam = named_model(name, None, sp)
    F = fam.flux_phase_diagonal()
    H0, H1 = fam(0.2), fam(1.2)
    assert np.allclose(F[:, None] * H0 * F.conj()[None, :], H1, atol=1e-10)


def test_gauge_choice_is_unitarily_equivalent():
    sp = centered_lattice(8, 8, 2)
    a = eigvalsh(named_model("p_ip", None, sp)(0.3))
    b = eigvalsh(named_model("p_ip", None, sp, gauge="half_line")(0.3))
    assert np.allclose(a, b, atol=1e-10)


def test_hermitize_rejects_asymmetric():
    with pytest.raises(HermiticityError):
        hermitize(np.array([[0, 1], [0, 0]], complex))


def test_build_bdg_checks_pairing():
    h = np.diag([1.0, -1.0])
    with pytest.raises(SymmetryConditionError):
        build_bdg(h, np.array([[0, 1], [0, 0]], complex), eta_ph=1)
    D = np.array([[0, 1], [-1, 0]], complex)
    H = build_bdg(h, D, eta_ph=1)
    e = eigvalsh(H)
    assert np.allclose(e, -e[::-1])


def test_unknown_model_and_param():
    with pytest.raises(ModelError):
        named_model("graphene")
    with pytest.raises(ModelError):
        named_model("p_ip", {"nu": 1.0}, centered_lattice(6, 6, 2))


def test_orbital_mismatch():
    with pytest.raises(ModelError):
        named_model("p_ip", None, centered_lattice(6, 6, 1))


def test_disorder_reproducible_from_seed():
    sp = centered_lattice(6, 6, 2)
    a = named_model("p_ip", {"w": 0.5}, sp, seed=3)(0.0)
    b = named_model("p_ip", {"w": 0.5}, sp, seed=3)(0.0)
    c = named_model("p_ip", {"w": 0.5}, sp, seed=4)(0.0)
    assert np.array_equal(a, b) and not np.allclose(a, c)


def test_majorana_roundtrip():
    sp = centered_lattice(6, 6, 2)
    H = named_model("p_ip", None, sp)(0.0)
    M = majorana_transform(H, sp)
    assert np.max(np.abs(M.real)) < 1e-12 and np.allclose(M, -M.T)
    assert np.allclose(majorana_inverse(M, sp), H)


def test_majorana_rejects_class_c():
    sp = centered_lattice(6, 6, 2)
    with pytest.raises(SymmetryConditionError):
        majorana_transform(named_model("d_id", None, sp)(0.0), sp)


def test_bulk_gaps():
    # p+ip at mu = 2 and Wilson-Dirac at mu = 2 are gapped; the torus spectrum is symmetric
    for name in ("p_ip", "d_id", "wilson_dirac"):
        fam, _ = bulk_family(name, None, 12)
        e = eigvalsh(fam(0.0))
        assert np.min(np.abs(e)) > 0.1, name


def test_harper_torus_commensurability():
    with pytest.raises(GeometryError):
        bulk_family("harper", {"B": 2 * np.pi / 3}, 10)


def test_multi_flux_geometry_checks():
    sp = centered_lattice(32, 32, 2)
    with pytest.raises(GeometryError):
        multi_flux_family("p_ip", [(-2, -1), (1, -1)], space=sp)
    with pytest.raises(GeometryError):
        multi_flux_family("p_ip", [(-15, -1), (6, -1)], space=sp)
    fam = multi_flux_family("p_ip", [(-8, -1), (6, -1)], space=sp)
    assert len(fam.centers()) == 2


def test_cutout_restricts_and_protects_flux_cell():
    sp = centered_lattice(8, 8, 2)
    fam = named_model("p_ip", None, sp)
    cut = cutout(fam, Region.box((2, 3), (2, 3)))
    assert cut(0.0).shape == (sp.dim - 8, sp.dim - 8)
    assert len(cut.coords()) == cut.dim
    with pytest.raises(GeometryError):
        cutout(fam, Region.box((-1, 0), (-1, 0)))


def test_km_double_orbitals():
    assert model_orbitals("km_double") == 4
    assert model_orbitals("km_double", {"block": "harper"}) == 2
