"""Magnetic translations, gauge conjugation and finite-volume compactness proxies."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sps

from .gauge import (MagneticPotential, combined_potential, half_line_gauge,
                    uniform_field_gauge)
from .lattice import LatticeSpace

R_BUFFER = 2


def magnetic_translation(space: LatticeSpace, A: MagneticPotential, j: int, sparse: bool = False):
    """``S^A_j = sum_n exp(-i A(n - e_j, n)) |n - e_j><n|`` tensored with ``1_L``.

    Columns whose target leaves an open patch are dropped (partial isometry);
    periodic directions wrap.  Returns a dense array unless ``sparse`` is set.
    """
    if j not in (1, 2):
        raise ValueError("direction must be 1 or 2")
    s = space.sites()
    n1, n2 = s[:, 0], s[:, 1]
    t1, t2 = (n1 - 1, n2) if j == 1 else (n1, n2 - 1)
    phase = np.exp(-1j * A(t1, t2, j))
    w1, w2 = space.wrap(t1, t2)
    keep = space.contains(w1, w2)
    L = space.orbitals
    src = np.nonzero(keep)[0]
    dst = space.site_index(w1[keep], w2[keep])
    rows = (dst[:, None] * L + np.arange(L)).ravel()
    cols = (src[:, None] * L + np.arange(L)).ravel()
    vals = np.repeat(phase[keep], L)
    S = sps.csr_matrix((vals, (rows, cols)), shape=(space.dim, space.dim))
    return S if sparse else S.toarray()


def plain_shift(space: LatticeSpace, j: int, sparse: bool = False):
    return magnetic_translation(space, uniform_field_gauge(0.0), j, sparse)


def translations(space: LatticeSpace, A: MagneticPotential, sparse: bool = False):
    return magnetic_translation(space, A, 1, sparse), magnetic_translation(space, A, 2, sparse)


def flux_translations(space: LatticeSpace, B: float, alpha: float, m=(-1, -1),
                      gauge: str = "ab", field_gauge: str = "symmetric", sparse: bool = False):
    """``(S1, S2)`` for a uniform field ``B`` plus a flux tube ``alpha`` at ``m``.

    ``m`` may also be a list of cells, each carrying flux ``alpha``.
    With ``("ab", "symmetric")`` these are the translations ``S^{B,alpha}_j``;
    with ``("half_line", "landau")`` the alternative family ``S~^{B,alpha}_j``.
    """
    cells = [tuple(m)] if np.ndim(m) == 1 else [tuple(c) for c in m]
    A = combined_potential(B, alpha, cells, gauge, field_gauge)
    return translations(space, A, sparse)


def conjugate(op, U):
    """``U* Op U``.  With ``U = exp(-iG(X))`` and ``G`` from
    ``gauge_transform_solve(A, A')`` this maps ``S^A`` to ``S^{A'}``."""
    op = np.asarray(op)
    U = np.asarray(U)
    if op.shape != U.shape:
        raise ValueError(f"dimension mismatch {op.shape} vs {U.shape}")
    if U.ndim == 2 and np.count_nonzero(U - np.diag(np.diagonal(U))) == 0:
        u = np.diagonal(U)
        return (u.conj()[:, None] * op) * u[None, :]
    return U.conj().T @ op @ U


def conjugate_diag(op, u: np.ndarray):
    """``U* Op U`` for diagonal ``U = diag(u)``."""
    return (np.conj(u)[:, None] * op) * u[None, :]


def commutation_defect(S1, S2):
    """``S2 S1 S2* S1*``; equals ``exp(i B_A(X))`` on interior sites."""
    return S2 @ S1 @ S2.conj().T @ S1.conj().T


def interior_mask(space: LatticeSpace, buffer: int = R_BUFFER) -> np.ndarray:
    """Flat-index mask of sites farther than ``buffer`` from every open edge."""
    s = space.sites()
    d = space.distance_to_boundary(s[:, 0], s[:, 1])
    return np.repeat(d > buffer, space.orbitals)


def interior_block(op, space: LatticeSpace, buffer: int = R_BUFFER) -> np.ndarray:
    """Restriction of ``op`` to interior rows and columns."""
    k = interior_mask(space, buffer)
    return np.asarray(op)[np.ix_(k, k)]


def halfline_defect(space: LatticeSpace, B: float, alpha: float, m=(-1, -1), sparse: bool = False):
    """``L_alpha = Z_1^{B,alpha} - S_1^{B,0}`` where ``Z`` uses the symmetric
    gauge plus the half-line flux gauge.  Supported on the column ``n1 = m1``,
    ``n2 > m2`` with entries of modulus ``|exp(2 pi i alpha) - 1|``."""
    A0 = uniform_field_gauge(B, "symmetric")
    Z1 = magnetic_translation(space, A0 + half_line_gauge(alpha, m), 1, sparse)
    S1 = magnetic_translation(space, A0, 1, sparse)
    return Z1 - S1


def decay_profile(op, space: LatticeSpace, center, radii) -> list[tuple[float, float]]:
    """Largest ``|op[i, j]|`` over entries whose row and column sites both lie
    at Euclidean distance ``>= r`` from ``center``, for each ``r`` in ``radii``.

    Accepts dense or sparse operators.
    """
    s = np.repeat(space.sites(), space.orbitals, axis=0).astype(float)
    dist = np.hypot(s[:, 0] - center[0], s[:, 1] - center[1])
    coo = sps.coo_matrix(op)
    mag = np.abs(coo.data)
    dmin = np.minimum(dist[coo.row], dist[coo.col])
    out = []
    for r in radii:
        sel = dmin >= r
        out.append((float(r), float(mag[sel].max()) if np.any(sel) else 0.0))
    return out
