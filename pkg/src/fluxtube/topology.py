"""Index estimators: real-space Chern number, finite-volume Ind(PFP), its Z2
version, and the spectral-flow / index cross-check."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sl

from .lattice import GeometryError, LatticeSpace, Region, position_diagonals
from .models import FluxFamily, bulk_family
from .spectral import (SpectralError, diagonalize, eigvalsh, gap_report,
                       spectral_flow)

CHERN_ROUNDING = 0.2
LOCALIZED_MASS = 0.9


class IndeterminateIndexError(SpectralError):
    """No clear split between small and order-one singular values."""

    def __init__(self, msg, singular_values=None):
        super().__init__(msg)
        self.singular_values = singular_values


class SymmetryViolation(ValueError):
    pass


@dataclass
class IndexReport:
    chern_real: float | None = None
    chern_rounded: int | None = None
    rounding_residual: float | None = None
    pfp_kernel_dim: int | None = None
    pfp_cokernel_dim: int | None = None
    ind_pfp: int | None = None
    ind2_pfp: int | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.rounding_residual is None or self.rounding_residual < CHERN_ROUNDING

    def to_dict(self) -> dict:
        d = asdict(self)
        d["valid"] = self.valid
        return d


def default_window(space: LatticeSpace, half: int = 4) -> Region:
    """Central box of ``2*half`` sites per side."""
    cx, cy = space.center()
    return Region(lambda n1, n2: (np.abs(n1 - cx) < half) & (np.abs(n2 - cy) < half),
                  f"central box {2 * half}x{2 * half}")


def chern_realspace(P, space: LatticeSpace, window: Region | None = None, buffer: int = 4) -> float:
    """``(2 pi i / #W) sum_{n in W} tr <n| P [[X1, P], [X2, P]] |n>``.

    Parameters
    ----------
    P : ndarray
        Projector on ``space``.
    window : Region, optional
        Averaging window; defaults to the central 8x8 box.
    buffer : int
        Minimum distance from the window to an open edge.
    """
    P = np.asarray(P)
    window = default_window(space) if window is None else window
    site_mask = window.mask(space)
    s = space.sites()[site_mask]
    if len(s) == 0:
        raise GeometryError("empty Chern window")
    if np.min(space.distance_to_boundary(s[:, 0], s[:, 1])) < buffer:
        raise GeometryError(f"Chern window closer than {buffer} sites to the boundary")
    x1, x2 = position_diagonals(space)
    A = x1[:, None] * P - P * x1[None, :]
    B = x2[:, None] * P - P * x2[None, :]
    w = np.nonzero(np.repeat(site_mask, space.orbitals))[0]
    # only the window columns of P [A, B] are needed
    M = P @ (A @ B[:, w] - B @ A[:, w])
    return float((2j * np.pi * np.trace(M[w, :]) / len(s)).real)


def chern_report(P, space: LatticeSpace, window: Region | None = None) -> IndexReport:
    c = chern_realspace(P, space, window)
    r = int(np.rint(c))
    return IndexReport(chern_real=c, chern_rounded=r, rounding_residual=abs(c - r))


def _range_basis(P, basis=None) -> np.ndarray:
    if basis is not None:
        return np.asarray(basis)
    w, v = sl.eigh(np.asarray(P), driver="evr")
    return v[:, w > 0.5]


def _split(s: np.ndarray, below: float = 0.5, jump: float = 10.0):
    """Number of singular values before the largest multiplicative jump below ``below``."""
    small = s[s < below]
    if small.size == 0:
        return 0, np.inf
    ext = np.r_[np.maximum(small, 1e-300), s[small.size] if small.size < s.size else 1.0]
    ratios = ext[1:] / ext[:-1]
    i = int(np.argmax(ratios))
    if ratios[i] < jump:
        raise IndeterminateIndexError(
            f"no singular-value split below {below}: {np.array2string(small[:12], precision=3)}", s)
    return i + 1, float(ratios[i])


def _localized_count(V: np.ndarray, inside: np.ndarray, threshold: float = LOCALIZED_MASS) -> int:
    if V.shape[1] == 0:
        return 0
    C = V[inside].conj().T @ V[inside]
    return int(np.sum(np.linalg.eigvalsh(C) >= threshold))


def _rho_mask(coords: np.ndarray, center, rho: float) -> np.ndarray:
    return np.hypot(coords[:, 0] - center[0], coords[:, 1] - center[1]) <= rho


def default_rho(space: LatticeSpace, center) -> float:
    """Distance from ``center`` to the nearest open edge, minus 4."""
    d = float(space.distance_to_boundary(*center))
    return (d if np.isfinite(d) else 0.5 * min(space.nx, space.ny)) - 4.0


def index_pfp(P, F, coords: np.ndarray, center, rho: float, basis=None, jump: float = 10.0) -> IndexReport:
    """Finite-volume ``Ind(PFP)`` with boundary-mode exclusion.

    ``T = W* F W`` on an orthonormal basis ``W`` of ``ran P``.  Singular
    values below the largest multiplicative jump under 1/2 span the
    approximate kernel (right vectors) and cokernel (left vectors).  Only
    the part of each with at least 90% of its mass within ``rho`` of the
    ``F`` center is counted; the partners sitting at the boundary are
    reported as excluded.

    Parameters
    ----------
    P : ndarray or None
        Projector; may be None when ``basis`` is given.
    F : ndarray
        Diagonal of the flux phase.
    coords : ndarray
        Site coordinates per flat index.
    center : (float, float)
    rho : float
    basis : ndarray, optional
        Orthonormal columns spanning ``ran P`` (skips one diagonalization).

    Raises
    ------
    IndeterminateIndexError
        Carries the full singular spectrum.
    """
    W = _range_basis(P, basis)
    F = np.asarray(F)
    if W.shape[1] == 0:
        return IndexReport(pfp_kernel_dim=0, pfp_cokernel_dim=0, ind_pfp=0,
                           diagnostics={"rho": rho, "n_small": 0, "excluded": 0})
    T = W.conj().T @ (F[:, None] * W)
    U, s, Vh = np.linalg.svd(T)
    order = np.argsort(s)
    s = s[order]
    k, ratio = _split(s, 0.5, jump)
    small = order[:k]
    inside = _rho_mask(coords, center, rho)
    ker = W @ Vh.conj().T[:, small]
    coker = W @ U[:, small]
    kd = _localized_count(ker, inside)
    cd = _localized_count(coker, inside)
    diag = {"rho": float(rho), "n_small": int(k), "split_ratio": ratio,
            "excluded": int(2 * k - kd - cd),
            "smallest_singular_values": s[:max(k + 2, 4)].tolist()}
    return IndexReport(pfp_kernel_dim=kd, pfp_cokernel_dim=cd, ind_pfp=kd - cd, diagnostics=diag)


def ind2_pfp(P, F, I_tr, coords: np.ndarray, center, rho: float, basis=None,
             tol: float = 1e-8, jump: float = 10.0) -> int:
    """``dim ker(PFP) mod 2`` for an odd time-reversal invariant ``P``.

    Raises
    ------
    SymmetryViolation
        If ``I* conj(P) I != P`` within ``tol``.
    """
    I_tr = np.asarray(I_tr)
    Pm = P if P is not None else basis @ basis.conj().T
    if np.max(np.abs(I_tr.conj().T @ Pm.conj() @ I_tr - Pm)) > tol:
        raise SymmetryViolation("projection is not time-reversal invariant")
    if np.max(np.abs(I_tr @ I_tr + np.eye(len(I_tr)))) > tol:
        raise SymmetryViolation("time reversal is not odd")
    rep = index_pfp(P, F, coords, center, rho, basis, jump)
    return rep.pfp_kernel_dim % 2


def index_flux_phase(family: FluxFamily) -> np.ndarray:
    """Diagonal of the flux phase used in ``Ind(PFP)``.

    This is the complex conjugate of the phase implementing
    ``H_{alpha+1} = F H_alpha F*``; the orientation is pinned so that
    ``Ind(PFP)`` agrees in sign with the real-space Chern number and the
    localized spectral flow (p+ip calibration, all three equal +1 at
    ``mu = 2``).
    """
    return family.flux_phase_diagonal().conj()


def bulk_gap(family: FluxFamily, mu: float = 0.0, n: int = 24) -> float:
    """Gap width around ``mu`` of the flux-free periodic model behind ``family``."""
    name = family.descriptor.get("name")
    if name is None:
        raise ValueError("family has no model descriptor; pass the bulk gap explicitly")
    params = dict(family.descriptor.get("params", {}))
    if "w" in params:
        params["w"] = 0.0
    fam, _ = bulk_family(name, params, n)
    return gap_report(eigvalsh(fam(0.0)), mu).width


def verify_sf_equals_index(family: FluxFamily, mu: float = 0.0, sf_mu: float | None = None,
                           gap: float | None = None, alphas=None, radius: float = 6.0,
                           rho: float | None = None, window: Region | None = None) -> dict:
    """Localized spectral flow, ``Ind(PFP)`` and the real-space Chern number.

    The spectral flow is evaluated at ``sf_mu = mu + gap/8`` by default so
    the flux-bound level does not cross at ``alpha = 1/2``, where for BdG
    models it hybridizes with the edge zero mode.  Passes iff all three
    integers agree.
    """
    if len(family.cells) != 1:
        raise ValueError("cross-check expects a single flux tube")
    space = family.space
    if gap is None:
        gap = bulk_gap(family, mu)
    if sf_mu is None:
        sf_mu = mu + gap / 8.0
    spec = diagonalize(family(0.0), mu)
    if spec.gap.distance < 1e-8:
        raise SpectralError("mu lies on an eigenvalue of H_0")
    W = spec.eigenvectors[:, spec.eigenvalues <= mu]
    P = W @ W.conj().T
    ch = chern_report(P, space, window)
    center = tuple(family.centers()[0])
    rho = default_rho(space, center) if rho is None else rho
    ix = index_pfp(None, index_flux_phase(family), family.coords(), center, rho, basis=W)
    sf = spectral_flow(family, alphas, sf_mu, radius=radius)
    values = (sf.localized_flow, ix.ind_pfp, ch.chern_rounded)
    return {
        "sf_localized": sf.localized_flow,
        "sf_raw": sf.raw_flow,
        "ind_pfp": ix.ind_pfp,
        "chern_real": ch.chern_real,
        "chern_rounded": ch.chern_rounded,
        "rounding_residual": ch.rounding_residual,
        "pfp_kernel_dim": ix.pfp_kernel_dim,
        "pfp_cokernel_dim": ix.pfp_cokernel_dim,
        "index_diagnostics": ix.diagnostics,
        "sf_mu": sf_mu,
        "bulk_gap": gap,
        "crossings": [asdict(c) for c in sf.crossings],
        "curves": sf.curves,
        "passed": bool(ch.valid and len(set(values)) == 1),
    }
