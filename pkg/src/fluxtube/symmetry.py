"""Symmetry operators, CAZ classification, Kramers checks and dispatch of the
strong invariant."""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl

from .models import FluxFamily
from .spectral import KernelReport, kernel_index, occupied_vectors
from .topology import (default_rho, ind2_pfp, index_flux_phase, index_pfp)

CONSTRUCTION_TOL = 1e-10
DETECTION_TOL = 1e-6

# (TRS, PHS, SLS) -> (CAZ label, strong invariant kind)
TABLE1 = {
    (0, 0, 0): ("A", "Z"),
    (0, 0, 1): ("AIII", "none"),
    (0, 1, 0): ("D", "Z"),
    (-1, 1, 1): ("DIII", "Z2"),
    (-1, 0, 0): ("AII", "Z2"),
    (-1, -1, 1): ("CII", "none"),
    (0, -1, 0): ("C", "2Z"),
    (1, -1, 1): ("CI", "none"),
    (1, 0, 0): ("AI", "none"),
    (1, 1, 1): ("BDI", "none"),
}


class InconsistentSymmetryError(ValueError):
    """Signature triple not realizable (e.g. TRS and PHS without SLS)."""


class InvariantViolation(AssertionError):
    """A symmetry-enforced constraint on the invariant failed (exit code 4)."""


@dataclass(frozen=True)
class CazLabel:
    name: str
    invariant_kind: str
    signature: tuple[int, int, int]

    def to_dict(self) -> dict:
        return {"caz": self.name, "invariant_kind": self.invariant_kind,
                "trs": self.signature[0], "phs": self.signature[1], "sls": self.signature[2]}


def classify_signature(trs: int, phs: int, sls: int) -> CazLabel:
    """Table 1 lookup.

    Raises
    ------
    InconsistentSymmetryError
        For the eight triples that cannot occur.
    """
    key = (int(trs), int(phs), int(sls))
    if key not in TABLE1:
        raise InconsistentSymmetryError(f"symmetry signature {key} is inconsistent")
    name, kind = TABLE1[key]
    return CazLabel(name, kind, key)


def table1_rows():
    """All 18 triples with their label or ``inconsistent``."""
    rows = []
    for t, p, s in itertools.product((0, 1, -1), (0, 1, -1), (0, 1)):
        lab = TABLE1.get((t, p, s))
        rows.append({"trs": t, "phs": p, "sls": s,
                     "caz": lab[0] if lab else "inconsistent",
                     "sti": lab[1] if lab else ""})
    return rows


def write_table1_csv(path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["trs", "phs", "sls", "caz", "sti"])
        w.writeheader()
        w.writerows(table1_rows())


def spin_y(s: float) -> np.ndarray:
    """Purely imaginary ``s^y`` on ``C^(2s+1)`` in the ``m = s, ..., -s`` basis."""
    m = np.arange(s, -s - 1, -1)
    n = len(m)
    sp = np.zeros((n, n))
    for k in range(1, n):
        sp[k - 1, k] = np.sqrt(s * (s + 1) - m[k] * (m[k] + 1))
    return (sp - sp.T) / 2j


@dataclass
class SymmetryData:
    """Fiber symmetry operators; ``None`` marks an absent symmetry.

    The site factor is implicit: full operators are ``1_sites (x) fiber``.
    """

    I_tr: np.ndarray | None = None
    K_ph: np.ndarray | None = None
    K_sl: np.ndarray | None = None
    eta_tr: int | None = None
    eta_ph: int | None = None
    fiber: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, op, eta in (("I_tr", self.I_tr, self.eta_tr), ("K_ph", self.K_ph, self.eta_ph)):
            if op is None:
                continue
            if np.max(np.abs(np.imag(op))) > 1e-12:
                raise ValueError(f"{name} must be real")
            op2 = op @ op
            if eta is None or np.max(np.abs(op2 - eta * np.eye(len(op)))) > 1e-12:
                raise ValueError(f"{name}^2 != eta 1")
        if self.K_sl is not None and np.max(np.abs(self.K_sl @ self.K_sl - np.eye(len(self.K_sl)))) > 1e-12:
            raise ValueError("K_sl^2 != 1")
        ops = [o for o in (self.I_tr, self.K_ph, self.K_sl) if o is not None]
        for a, b in itertools.combinations(ops, 2):
            if np.max(np.abs(a @ b - b @ a)) > 1e-12:
                raise ValueError("symmetry operators must commute")

    @property
    def size(self) -> int:
        for o in (self.I_tr, self.K_ph, self.K_sl):
            if o is not None:
                return len(o)
        return int(self.fiber.get("size", 1))

    def full(self, op: np.ndarray, dim: int) -> np.ndarray:
        """``1_sites (x) op`` on a space of dimension ``dim``."""
        n = dim // len(op)
        return np.kron(np.eye(n), op)


def standard_symmetry_ops(spin: float | None = None, eta_ph: int | None = None,
                          sublattice: bool = False, N: int = 1) -> SymmetryData:
    """Operators on the fiber ``C^(2s+1) (x) C^2_ph (x) C^2_sl (x) C^N``.

    Parameters
    ----------
    spin : float, optional
        Spin ``s``; gives ``I_tr = exp(i pi s^y)`` with ``I_tr^2 = (-1)^(2s)``.
        ``None`` omits the spin factor and TRS.
    eta_ph : {+1, -1}, optional
        Adds the particle-hole factor with ``K_ph = [[0, eta], [1, 0]]``.
    sublattice : bool
        Adds the sublattice factor with ``K_sl = diag(1, -1)``.
    N : int
        Remaining internal degrees of freedom.
    """
    dims = [int(round(2 * spin + 1)) if spin is not None else 1,
            2 if eta_ph is not None else 1, 2 if sublattice else 1, N]

    def embed(k, op):
        mats = [np.eye(d) for d in dims]
        mats[k] = op
        out = mats[0]
        for m in mats[1:]:
            out = np.kron(out, m)
        return out

    I = K = S = None
    eta_tr = None
    if spin is not None:
        I = np.real_if_close(sl.expm(1j * np.pi * spin_y(spin)), tol=1e6)
        I = np.where(np.abs(I) < 1e-14, 0.0, np.real(I))
        I = embed(0, I)
        eta_tr = int(round((-1) ** int(round(2 * spin))))
    if eta_ph is not None:
        K = embed(1, np.array([[0.0, eta_ph], [1.0, 0.0]]))
    if sublattice:
        S = embed(2, np.diag([1.0, -1.0]))
    fiber = {"spin": spin, "eta_ph": eta_ph, "sublattice": sublattice, "N": N,
             "size": int(np.prod(dims))}
    return SymmetryData(I, K, S, eta_tr, eta_ph, fiber)


def declared_symmetries(descriptor: dict) -> SymmetryData:
    """Symmetry operators a named model is built to respect (before field and flux)."""
    name = descriptor.get("name")
    eta = descriptor.get("eta_ph")
    if name == "harper":
        return standard_symmetry_ops(spin=0)
    if name in ("p_ip", "d_id"):
        return standard_symmetry_ops(eta_ph=eta)
    if name == "wilson_dirac":
        return standard_symmetry_ops(N=2)
    if name == "km_double":
        inner = 1 if eta is not None else 2
        return standard_symmetry_ops(spin=0.5, eta_ph=eta, N=inner)
    raise ValueError(f"no declared symmetries for {name!r}")


def _apply(op_fiber: np.ndarray, M: np.ndarray, conj: bool) -> np.ndarray:
    """``O* M' O`` with ``O = 1 (x) op`` and ``M' = conj(M)`` if requested."""
    L = len(op_fiber)
    n = M.shape[0] // L
    T = (M.conj() if conj else M).reshape(n, L, n, L)
    T = np.einsum("ai,xayb,bj->xiyj", op_fiber.conj(), T, op_fiber, optimize=True)
    return T.reshape(M.shape)


def symmetry_residuals(H: np.ndarray, data: SymmetryData) -> dict:
    """Max-norm residuals of TRS, PHS and SLS relative to ``max|H|``."""
    H = np.asarray(H)
    scale = max(1.0, float(np.max(np.abs(H)))) if H.size else 1.0
    out = {}
    if data.I_tr is not None:
        out["trs"] = float(np.max(np.abs(_apply(data.I_tr, H, True) - H))) / scale
    if data.K_ph is not None:
        out["phs"] = float(np.max(np.abs(_apply(data.K_ph, H, True) + H))) / scale
    if data.K_sl is not None:
        out["sls"] = float(np.max(np.abs(_apply(data.K_sl, H, False) + H))) / scale
    return out


def detect_symmetries(H, data: SymmetryData, tol: float = DETECTION_TOL) -> CazLabel:
    """Classify ``H`` from the operators in ``data`` (Table 1).

    When both TRS and PHS hold, the composite ``K_sl = I_tr K_ph`` (or
    ``i I_tr K_ph``) must be a chiral symmetry.

    Raises
    ------
    InconsistentSymmetryError
        If TRS and PHS hold but the composite chiral symmetry fails, or a
        declared ``K_sl`` disagrees with them.
    """
    r = symmetry_residuals(H, data)
    trs = data.eta_tr if r.get("trs", np.inf) <= tol else 0
    phs = data.eta_ph if r.get("phs", np.inf) <= tol else 0
    sls = 1 if r.get("sls", np.inf) <= tol else 0
    if trs and phs:
        comp = data.I_tr @ data.K_ph
        res = float(np.max(np.abs(_apply(comp, np.asarray(H), False) + H)))
        if res > tol * max(1.0, float(np.max(np.abs(H)))):
            raise InconsistentSymmetryError(f"TRS and PHS hold but I_tr K_ph is not chiral ({res:.2e})")
        if data.K_sl is not None and not sls:
            raise InconsistentSymmetryError("declared K_sl fails while TRS and PHS hold")
        sls = 1
    elif sls and (trs or phs):
        # TRS (PHS) with SLS implies PHS (TRS); the declared operators lack it
        raise InconsistentSymmetryError("chiral symmetry with only one antiunitary symmetry")
    return classify_signature(trs or 0, phs or 0, sls)


def kramers_check(H, I_tr, tol_pair: float = 1e-8, tol_angle: float = 1e-6, full: bool = False) -> dict:
    """Even multiplicity of every eigenvalue under ``psi -> conj(I psi)``.

    Parameters
    ----------
    I_tr : ndarray
        Fiber operator, or a full-space unitary with ``I conj(I) = -1`` (the
        modified half-flux time reversal); pass ``full=True`` for the latter.

    Returns
    -------
    dict
        ``passed``, ``pair_residual`` (relative), ``angle`` and a ``witness``
        eigenvalue on failure.
    """
    H = np.asarray(H)
    if H.size == 0:
        return {"passed": True, "pair_residual": 0.0, "angle": 0.0, "witness": None}
    I = np.asarray(I_tr) if full else np.kron(np.eye(H.shape[0] // len(I_tr)), I_tr)
    sym = float(np.max(np.abs(I.conj().T @ H.conj() @ I - H)))
    e, v = np.linalg.eigh(H)
    scale = max(1.0, float(np.max(np.abs(e))))
    # clusters of numerically degenerate eigenvalues
    breaks = np.nonzero(np.diff(e) / scale > tol_pair)[0] + 1
    clusters = np.split(np.arange(len(e)), breaks)
    odd = [c for c in clusters if len(c) % 2]
    pair = float(np.max(np.abs(e[1::2] - e[0::2][:len(e[1::2])])) / scale) if len(e) > 1 else np.inf
    if odd:
        pair = max(pair, tol_pair * 10)
    # V* conj(H) V = H makes psi -> conj(V psi) the antiunitary symmetry
    Iv = I.conj() @ v.conj()
    angle = 0.0
    for c in clusters:
        V = v[:, c]
        R = Iv[:, c] - V @ (V.conj().T @ Iv[:, c])
        angle = max(angle, float(np.linalg.norm(R, 2)))
    passed = not odd and angle < tol_angle
    return {"passed": bool(passed), "pair_residual": pair, "angle": angle,
            "witness": float(e[odd[0][0]]) if odd else None, "symmetry_residual": sym}


def _full_fiber(family: FluxFamily, op: np.ndarray) -> np.ndarray:
    M = np.kron(np.eye(family.space.dim // len(op)), op)
    return M if family.keep is None else M[np.ix_(family.keep, family.keep)]


def half_flux_trs(family: FluxFamily, data: SymmetryData) -> np.ndarray:
    """Modified time reversal ``V = I_tr F*`` at ``alpha = 1/2`` (``F`` the
    periodicity phase); ``V conj(V) = eta_tr 1``."""
    F = family.flux_phase_diagonal()
    return _full_fiber(family, data.I_tr) * F.conj()[None, :]


def half_flux_symmetry_residuals(family: FluxFamily, data: SymmetryData) -> dict:
    """Residuals of the modified identities at ``alpha = 1/2``:
    ``V* conj(H) V = H`` and ``K* conj(H) K = -F* H F``."""
    H = family(0.5)
    out = {}
    if data.I_tr is not None:
        V = half_flux_trs(family, data)
        out["trs_half"] = float(np.max(np.abs(V.conj().T @ H.conj() @ V - H)))
        out["V_conjV"] = float(np.max(np.abs(V @ V.conj() - data.eta_tr * np.eye(len(V)))))
    if data.K_ph is not None:
        F = family.flux_phase_diagonal()
        K = _full_fiber(family, data.K_ph)
        rhs = -(F.conj()[:, None] * H) * F[None, :]
        out["phs_half"] = float(np.max(np.abs(K.T @ H.conj() @ K - rhs)))
    return out


def strong_invariant(family: FluxFamily, label: CazLabel, mu: float = 0.0, rho: float | None = None,
                     data: SymmetryData | None = None) -> dict:
    """Strong invariant of ``H_0`` in the family according to its class.

    A, D: ``Ind(PFP)``; C: ``Ind(PFP)`` checked even; AII, DIII:
    ``Ind2(PFP)``; other classes report ``none`` with the index, which must
    vanish.

    Raises
    ------
    InvariantViolation
        Odd index in class C, or nonzero index in a class without one.
    """
    W = occupied_vectors(family(0.0), mu)
    center = tuple(family.centers()[0])
    rho = default_rho(family.space, center) if rho is None else rho
    F = index_flux_phase(family)
    coords = family.coords()
    out = {"caz": label.name, "invariant_kind": label.invariant_kind}
    if label.invariant_kind in ("Z", "2Z", "none"):
        rep = index_pfp(None, F, coords, center, rho, basis=W)
        out.update(ind_pfp=rep.ind_pfp, diagnostics=rep.diagnostics)
        if label.invariant_kind == "2Z" and rep.ind_pfp % 2:
            raise InvariantViolation(f"class C index {rep.ind_pfp} is odd")
        if label.invariant_kind == "none" and rep.ind_pfp != 0:
            raise InvariantViolation(f"class {label.name} index {rep.ind_pfp} should vanish")
        out["invariant"] = rep.ind_pfp if label.invariant_kind != "none" else None
    else:
        data = declared_symmetries(family.descriptor) if data is None else data
        I = _full_fiber(family, data.I_tr)
        v = ind2_pfp(None, F, I, coords, center, rho, basis=W)
        out.update(ind2_pfp=v, invariant=v)
    return out


def half_flux_zero_modes(family: FluxFamily, label: CazLabel, gap: float, radius: float = 6.0,
                         invariant: int | None = None) -> dict:
    """Zero modes of ``H_{1/2}`` and the class-specific expectation.

    Class D with odd invariant expects an odd number of flux-localized
    zero modes; DIII with ``Ind2 = 1`` a localized Kramers doublet split by
    less than ``1e-6 * gap``; C no protected odd kernel.  Failures are
    reported through ``passed``, not raised.
    """
    H = family(0.5)
    kr: KernelReport = kernel_index(H, 0.0, gap, coords=family.coords(),
                                    centers=family.centers(), radius=radius)
    out = {"caz": label.name, "kernel_dim": kr.dim, "localized_dim": kr.localized_dim,
           "ind2": kr.ind2, "smallest": kr.smallest, "energies": kr.energies.tolist(),
           "split_ratio": kr.split_ratio, "gap": gap}
    if label.name == "D":
        expect_odd = invariant is None or invariant % 2 == 1
        out["passed"] = bool(kr.localized_dim % 2 == 1 and kr.smallest < gap / 20) if expect_odd \
            else bool(kr.localized_dim % 2 == 0)
    elif label.name == "DIII":
        out["doublet_splitting"] = float(np.max(np.abs(kr.energies))) if kr.dim else np.inf
        out["passed"] = bool(invariant == 0 or (kr.localized_dim == 2
                                                and out["doublet_splitting"] < 1e-6 * gap))
    elif label.name == "C":
        out["passed"] = bool(kr.localized_dim % 2 == 0)
    else:
        out["passed"] = True
    return out
