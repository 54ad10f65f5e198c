import numpy as np
import pytest

from fluxtube.lattice import centered_lattice
from fluxtube.models import model_orbitals, named_model
from fluxtube.spectral import z2_spectral_flow
from fluxtube.symmetry import (InconsistentSymmetryError, InvariantViolation, SymmetryData,
                               classify_signature, declared_symmetries, detect_symmetries,
                               half_flux_symmetry_residuals, half_flux_trs, kramers_check,
                               spin_y, standard_symmetry_ops, strong_invariant, table1_rows,
                               write_table1_csv)


def _fam(name, params=None, n=12):
    return named_model(name, params, centered_lattice(n, n, model_orbitals(name, params)))


def test_table_has_ten_classes_and_eight_inconsistent():
    rows = table1_rows()
    assert len(rows) == 18
    assert sum(r["caz"] == "inconsistent" for r in rows) == 8
    assert len({r["caz"] for r in rows} - {"inconsistent"}) == 10


def test_classify_signature():
    assert classify_signature(-1, 1, 1).name == "DIII"
    assert classify_signature(0, -1, 0).invariant_kind == "2Z"
    with pytest.raises(InconsistentSymmetryError):
        classify_signature(1, 1, 0)


def test_write_table_csv(tmp_path):
    p = tmp_path / "t.csv"
    write_table1_csv(p)
    assert len(p.read_text().strip().splitlines()) == 19


def test_spin_y_half():
    sy = spin_y(0.5)
    assert np.allclose(sy, np.array([[0, -0.5j], [0.5j, 0]]))


def test_standard_ops_squares():
    d = standard_symmetry_ops(spin=0.5, eta_ph=1, N=1)
    assert d.eta_tr == -1
    assert np.allclose(d.I_tr @ d.I_tr, -np.eye(4))
    assert np.allclose(d.K_ph @ d.K_ph, np.eye(4))


def test_symmetry_data_validation():
    with pytest.raises(ValueError):
        SymmetryData(I_tr=np.array([[0, 1j], [1j, 0]]), eta_tr=-1)
    with pytest.raises(ValueError):
        SymmetryData(I_tr=np.eye(2), eta_tr=-1)


@pytest.mark.parametrize("name, params, caz", [
    ("harper", None, "A"),
    ("p_ip", None, "D"),
    ("d_id", None, "C"),
    ("wilson_dirac", None, "A"),
    ("km_double", {"block": "p_ip"}, "DIII"),
    ("km_double", {"gamma": 0.2}, "AII"),
])
def test_detection(name, params, caz):
    fam = _fam(name, params)
    assert detect_symmetries(fam(0.0), declared_symmetries(fam.descriptor)).name == caz


def test_flux_breaks_time_reversal():
    fam = _fam("km_double")
    lab = detect_symmetries(fam(0.3), declared_symmetries(fam.descriptor))
    assert lab.name == "A"


def test_kramers_pairs_km_double():
    fam = _fam("km_double", n=8)
    d = declared_symmetries(fam.descriptor)
    assert kramers_check(fam(0.0), d.I_tr)["passed"]
    assert kramers_check(fam(0.5), half_flux_trs(fam, d), full=True)["passed"]
    assert not kramers_check(_fam("wilson_dirac", n=8)(0.0), np.eye(2))["passed"]


def test_half_flux_identities():
    fam = _fam("km_double", {"block": "p_ip"}, n=8)
    res = half_flux_symmetry_residuals(fam, declared_symmetries(fam.descriptor))
    assert max(res.values()) < 1e-10


def test_strong_invariants_small():
    fam = _fam("p_ip", n=16)
    d = declared_symmetries(fam.descriptor)
    lab = detect_symmetries(fam(0.0), d)
    assert strong_invariant(fam, lab, 0.0, data=d)["invariant"] == 1
    fam = _fam("d_id", n=16)
    d = declared_symmetries(fam.descriptor)
    assert strong_invariant(fam, detect_symmetries(fam(0.0), d), 0.0, data=d)["invariant"] % 2 == 0


def test_invariant_violation_for_class_without_invariant():
    fam = _fam("p_ip", n=16)
    lab = classify_signature(1, 0, 0)
    with pytest.raises(InvariantViolation):
        strong_invariant(fam, lab, 0.0)


@pytest.mark.slow
def test_z2_flow_independent_of_mu_in_gap():
    fam = _fam("km_double", n=16)
    flows = [z2_spectral_flow(fam, mu, radius=4)[0] for mu in (0.3, 0.6, 1.0)]
    assert flows == [1, 1, 1]


def test_z2_flow_rejects_broken_reflection():
    fam = _fam("p_ip", {"mu": 2.0}, n=8)
    with pytest.raises(ValueError):
        z2_spectral_flow(fam, 0.5)
