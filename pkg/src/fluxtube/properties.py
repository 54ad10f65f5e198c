"""Standalone property suites on small lattices.

Each suite returns ``{check_name: {"passed": bool, "value": float}}``.
"""
from __future__ import annotations

import numpy as np

from . import gauge as gg
from .lattice import centered_lattice
from .models import majorana_transform, named_model
from .operators import (commutation_defect, conjugate, conjugate_diag,
                        flux_translations, interior_block, magnetic_translation)
from .spectral import (eigvalsh, make_switch, spectral_flow,
                       spectral_flow_trace)
from .symmetry import InconsistentSymmetryError, classify_signature, table1_rows


def _check(value: float, tol: float) -> dict:
    return {"passed": bool(value <= tol), "value": float(value)}


def gauge_suite(n: int = 41, alpha: float = 0.3, B: float = 0.2, m=(-1, -1)) -> dict:
    """Holonomies, gauge solving against the closed form, and covariance."""
    space = centered_lattice(n, n)
    out = {}
    A = gg.ab_gauge(alpha, m)
    m1, m2, h = gg.holonomy_map(A, space)
    at = (m1 == m[0]) & (m2 == m[1])
    out["ab_holonomy_flux_cell"] = _check(abs(h[at][0] - 2 * np.pi * alpha), 1e-12)
    out["ab_holonomy_elsewhere"] = _check(float(np.max(np.abs(h[~at]))), 1e-12)
    HL = gg.half_line_gauge(alpha, m)
    _, _, h2 = gg.holonomy_map(HL, space)
    out["half_line_holonomy"] = _check(float(np.max(np.abs(h2 - np.where(at, 2 * np.pi * alpha, 0)))), 1e-12)
    G = gg.gauge_transform_solve(A, HL, space)
    ref = alpha * gg.flux_gauge_function(space, m).values
    diff = G.values - ref
    out["solve_matches_closed_form"] = _check(float(np.ptp(diff)), 1e-9)
    sym, lan = gg.uniform_field_gauge(B, "symmetric"), gg.uniform_field_gauge(B, "landau")
    _, _, hs = gg.holonomy_map(sym, space)
    out["uniform_field_holonomy"] = _check(float(np.max(np.abs(hs - B))), 1e-12)
    G2 = gg.gauge_transform_solve(sym, lan, space)
    s = space.sites()
    closed = -(B / 2) * s[:, 0] * s[:, 1]
    out["symmetric_to_landau"] = _check(float(np.ptp(G2.values.ravel() - closed)), 1e-9)
    small = centered_lattice(12, 12)
    A1, A2 = sym + gg.ab_gauge(alpha, m), lan + gg.half_line_gauge(alpha, m)
    G3 = gg.gauge_transform_solve(A1, A2, small)
    U = G3.unitary(-1)
    err = max(float(np.max(np.abs(conjugate(magnetic_translation(small, A1, j), U)
                                  - magnetic_translation(small, A2, j)))) for j in (1, 2))
    out["gauge_covariance"] = _check(err, 1e-10)
    return out


def operator_suite(n: int = 16, B: float = 2 * np.pi / 8, alpha: float = 0.3, m=(-1, -1)) -> dict:
    """Unitarity, commutation defect, conjugation and flux periodicity."""
    out = {}
    torus = centered_lattice(n, n, 1, "periodic_xy")
    S1, S2 = flux_translations(torus, B, 0.0, m, "ab", "landau")
    I = np.eye(torus.dim)
    out["torus_unitarity"] = _check(max(float(np.max(np.abs(S @ S.conj().T - I))) for S in (S1, S2)), 1e-12)
    space = centered_lattice(n, n)
    T1, T2 = flux_translations(space, B, 0.0, m)
    P = T1 @ T1.conj().T
    out["open_partial_isometry"] = _check(float(np.max(np.abs(P @ P - P))), 1e-12)
    D = interior_block(commutation_defect(T1, T2), space)
    out["commutation_defect"] = _check(float(np.max(np.abs(D - np.exp(1j * B) * np.eye(len(D))))), 1e-12)
    Sa = flux_translations(space, B, alpha, m)
    Sb = flux_translations(space, B, alpha + 1.0, m)
    F = gg.flux_phase_diagonal(space, m)
    err = max(float(np.max(np.abs(conjugate_diag(Sa[j], F.conj()) - Sb[j]))) for j in (0, 1))
    out["flux_periodicity"] = _check(err, 1e-10)
    U = np.diag(np.exp(1j * np.linspace(0, 1, space.dim)))
    err = float(np.max(np.abs(conjugate(T1, U) - U.conj().T @ T1 @ U)))
    out["conjugation"] = _check(err, 1e-12)
    return out


def bdg_suite(n: int = 16, alpha: float = 0.3) -> dict:
    """Spectral mirror symmetry of BdG families and the Majorana form."""
    out = {}
    for name in ("p_ip", "d_id"):
        space = centered_lattice(n, n, 2)
        fam = named_model(name, None, space)
        e0 = eigvalsh(fam(0.0))
        out[f"{name}_mirror_alpha0"] = _check(float(np.max(np.abs(e0 + e0[::-1]))), 1e-8)
        ea, eb = eigvalsh(fam(alpha)), eigvalsh(fam(1 - alpha))
        out[f"{name}_mirror_alpha"] = _check(float(np.max(np.abs(ea + eb[::-1]))), 1e-8)
    space = centered_lattice(n, n, 2)
    Mj = majorana_transform(named_model("p_ip", None, space)(0.0), space)
    dev = max(float(np.max(np.abs(Mj.real))), float(np.max(np.abs(Mj + Mj.T))))
    out["majorana_imaginary_antisymmetric"] = _check(dev, 1e-12)
    return out


def table_suite() -> dict:
    """Every consistent (TRS, PHS, SLS) triple maps to one label; the rest raise."""
    ok, labels = True, set()
    for row in table1_rows():
        try:
            lab = classify_signature(row["trs"], row["phs"], row["sls"])
            labels.add(lab.name)
            ok &= row["caz"] == lab.name
        except InconsistentSymmetryError:
            ok &= row["caz"] == "inconsistent"
    return {"table1_totality": {"passed": bool(ok and len(labels) == 10), "value": float(len(labels))}}


def trace_suite(n: int = 16, mu_offset: float = 0.5) -> dict:
    """Trace formula against crossing count, and its gauge invariance."""
    space = centered_lattice(n, n, 2)
    sw = make_switch((-1.2, 1.2))
    fam = named_model("p_ip", None, space)
    sf = spectral_flow(fam, np.linspace(0, 1, 21), mu_offset, radius=4)
    ab = spectral_flow_trace(fam, sw)
    hl = spectral_flow_trace(named_model("p_ip", None, space, gauge="half_line"), sw)
    return {
        "trace_vs_crossings": _check(abs(ab - sf.localized_flow), 0.15),
        "trace_gauge_invariance": _check(abs(ab - hl), 0.05),
    }


SUITES = {
    "gauge": gauge_suite,
    "operators": operator_suite,
    "bdg": bdg_suite,
    "table1": table_suite,
    "trace": trace_suite,
}


def run_suites(names=None) -> dict:
    names = list(SUITES) if names is None else names
    return {k: SUITES[k]() for k in names}
