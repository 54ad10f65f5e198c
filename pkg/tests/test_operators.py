import numpy as np

from fluxtube import gauge as gg
from fluxtube.lattice import centered_lattice
from fluxtube.operators import (commutation_defect, conjugate, conjugate_diag,
                                flux_translations, interior_block, magnetic_translation,
                                plain_shift)
from fluxtube.properties import operator_suite


def test_plain_shift_moves_site():
    sp = centered_lattice(5, 5)
    S1 = plain_shift(sp, 1)
    v = np.zeros(sp.dim)
    v[sp.flatten(0, 0)] = 1
    w = S1 @ v
    assert abs(w[sp.flatten(1, 0)]) == 1 or abs(w[sp.flatten(-1, 0)]) == 1


def test_sparse_matches_dense():
    sp = centered_lattice(6, 6, 2)
    A = gg.ab_gauge(0.3)
    for j in (1, 2):
        D = magnetic_translation(sp, A, j)
        S = magnetic_translation(sp, A, j, sparse=True)
        assert np.allclose(S.toarray(), D)


def test_uniform_commutation_defect():
    sp = centered_lattice(10, 10)
    B = 0.7
    S1, S2 = flux_translations(sp, B, 0.0)
    D = interior_block(commutation_defect(S1, S2), sp)
    assert np.allclose(D, np.exp(1j * B) * np.eye(len(D)), atol=1e-12)


def test_gauge_covariance_single_flux():
    sp = centered_lattice(10, 10)
    alpha = 0.3
    A, A2 = gg.ab_gauge(alpha), gg.half_line_gauge(alpha)
    U = gg.gauge_transform_solve(A, A2, sp).unitary(-1)
    for j in (1, 2):
        assert np.allclose(conjugate(magnetic_translation(sp, A, j), U),
                           magnetic_translation(sp, A2, j), atol=1e-10)


def test_conjugate_diag_matches_dense():
    sp = centered_lattice(5, 5)
    S = plain_shift(sp, 2)
    u = np.exp(1j * np.arange(sp.dim))
    assert np.allclose(conjugate_diag(S, u), conjugate(S, np.diag(u)))


def test_operator_suite_green():
    res = operator_suite(n=10)
    assert all(c["passed"] for c in res.values()), res
