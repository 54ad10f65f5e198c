"""Experiment pipelines behind the CLI ``run`` and ``sweep`` subcommands."""
from __future__ import annotations

import copy
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .bulkedge import (EdgeGeometry, averaged_edge_current, corner_decay,
                       current_map, edge_current, half_plane_restrict)
from .config import ExperimentConfig
from .lattice import centered_lattice
from .models import FluxFamily, bulk_family, model_orbitals, model_spec, named_model
from .properties import run_suites
from .spectral import (SpectralError, diagonalize, eigvalsh, gap_report,
                       gap_window, make_switch, spectral_flow)
from .symmetry import (InvariantViolation, declared_symmetries, detect_symmetries,
                       half_flux_zero_modes, strong_invariant)
from .topology import (chern_report, default_rho, index_flux_phase, index_pfp,
                       verify_sf_equals_index)

EXIT_OK, EXIT_CONFIG, EXIT_INDETERMINATE, EXIT_VIOLATION = 0, 2, 3, 4
BDG_LIKE = ("p_ip", "d_id", "wilson_dirac", "km_double")


@dataclass
class Outcome:
    result: dict
    curves: list = field(default_factory=list)
    current_map: list = field(default_factory=list)
    exit_code: int = EXIT_OK


def _params(cfg: ExperimentConfig) -> dict:
    p = dict(cfg.model.params)
    if cfg.disorder.w:
        p["w"] = cfg.disorder.w
    return p


def _bulk(cfg: ExperimentConfig):
    """Bulk spectrum of the clean model on a torus."""
    p = dict(cfg.model.params)
    p.pop("w", None)
    fam, _ = bulk_family(cfg.model.name, p, 24)
    return eigvalsh(fam(0.0))


def reference_energy(cfg: ExperimentConfig, bulk: np.ndarray) -> float:
    """``mu`` from the config, else 0 for particle-hole models and the middle
    of the lowest gap otherwise."""
    if cfg.mu is not None:
        return float(cfg.mu)
    if cfg.model.name in BDG_LIKE:
        return 0.0
    d = np.diff(bulk)
    i = int(np.argmax(d > 0.1))
    return float(0.5 * (bulk[i] + bulk[i + 1]))


def build_family(cfg: ExperimentConfig, seed=None) -> FluxFamily:
    L = model_orbitals(cfg.model.name, cfg.model.params)
    space = centered_lattice(cfg.lattice.nx, cfg.lattice.ny, L, cfg.lattice.boundary)
    return named_model(cfg.model.name, _params(cfg), space, [tuple(c) for c in cfg.lattice.cells],
                       gauge=cfg.gauge, seed=seed)


def _seeds(cfg: ExperimentConfig) -> list:
    return list(cfg.disorder.seeds) if cfg.disorder.w else [None]


def _map(fn, items, workers: int):
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _spectral_flow(cfg, mu, gap, workers):
    sf_mu = mu + gap / 8.0 if cfg.mu is None else mu

    def one(seed):
        fam = build_family(cfg, seed)
        return seed, spectral_flow(fam, cfg.alpha.grid(), sf_mu, radius=cfg.radius,
                                   curve_weights=True, alpha_range=(cfg.alpha.start, cfg.alpha.stop))

    runs = _map(one, _seeds(cfg), workers)
    per, curves = [], []
    for seed, r in runs:
        per.append({"seed": seed, "raw_flow": r.raw_flow, "localized_flow": r.localized_flow,
                    "crossings": [asdict(c) for c in r.crossings]})
        curves += [(seed, *row) for row in r.curves]
    flows = {p["localized_flow"] for p in per}
    res = {"sf_mu": sf_mu, "runs": per, "localized_flow": per[0]["localized_flow"],
           "raw_flow": per[0]["raw_flow"], "consistent_across_seeds": len(flows) == 1}
    return Outcome(res, curves)


def _index(cfg, mu, gap, workers):
    def one(seed):
        fam = build_family(cfg, seed)
        spec = diagonalize(fam(0.0), mu)
        if spec.gap.distance < 1e-8:
            raise SpectralError("mu lies on an eigenvalue")
        W = spec.eigenvectors[:, spec.eigenvalues <= mu]
        ch = chern_report(W @ W.conj().T, fam.space)
        ctr = tuple(fam.centers()[0])
        ix = index_pfp(None, index_flux_phase(fam), fam.coords(), ctr,
                       default_rho(fam.space, ctr), basis=W)
        d = ch.to_dict()
        d.update(pfp_kernel_dim=ix.pfp_kernel_dim, pfp_cokernel_dim=ix.pfp_cokernel_dim,
                 ind_pfp=ix.ind_pfp, diagnostics=ix.diagnostics, seed=seed)
        return d

    per = _map(one, _seeds(cfg), workers)
    res = {"runs": per, "chern_real_mean": float(np.mean([p["chern_real"] for p in per])),
           "ind_pfp": per[0]["ind_pfp"], "chern_rounded": per[0]["chern_rounded"],
           "valid": all(p["valid"] for p in per)}
    code = EXIT_OK if res["valid"] else EXIT_INDETERMINATE
    res["status"] = "ok" if res["valid"] else "inconclusive"
    return Outcome(res, exit_code=code)


def _verify(cfg, mu, gap, workers):
    def one(seed):
        fam = build_family(cfg, seed)
        r = verify_sf_equals_index(fam, mu, gap=gap, alphas=cfg.alpha.grid(), radius=cfg.radius)
        r["seed"] = seed
        return r

    per = _map(one, _seeds(cfg), workers)
    curves = []
    for r in per:
        curves += [(r["seed"], *row) for row in r.pop("curves")]
    triples = {(r["sf_localized"], r["ind_pfp"], r["chern_rounded"]) for r in per}
    passed = all(r["passed"] for r in per) and len(triples) == 1
    res = {"runs": per, "sf_localized": per[0]["sf_localized"], "ind_pfp": per[0]["ind_pfp"],
           "chern_rounded": per[0]["chern_rounded"], "passed": passed}
    return Outcome(res, curves, exit_code=EXIT_OK if passed else EXIT_VIOLATION)


def _bulk_edge(cfg, mu, gap, workers, bulk):
    g = gap_report(bulk, mu)
    window = cfg.window or gap_window(g)
    sw = make_switch(window)
    sw3 = make_switch(window, order=3)
    geo = EdgeGeometry(cfg.strip.width, cfg.strip.height, False, cfg.strip.cut)
    spec, _ = model_spec(cfg.model.name, cfg.model.params)
    space = geo.space(spec.orbitals)
    H = half_plane_restrict(spec, geo)
    bottom = edge_current(H, sw, geo, space)
    res = {"window": list(window), "edge_current": bottom,
           "edge_current_top": edge_current(H, sw, geo, space, "top"),
           "edge_current_order3": edge_current(H, sw3, geo, space),
           "two_pi_current": 2 * np.pi * bottom,
           "corner_decay": corner_decay(H, sw, geo, space)}
    if cfg.disorder.w:
        res["averaged"] = averaged_edge_current(cfg.model.name, _params(cfg), cfg.disorder.seeds,
                                                geo, sw, workers)
    return Outcome(res, current_map=current_map(H, sw, geo, space))


def _classify(cfg, mu, gap, workers):
    fam = build_family(cfg, _seeds(cfg)[0])
    data = declared_symmetries(fam.descriptor)
    label = detect_symmetries(fam(0.0), data)
    res = label.to_dict()
    try:
        inv = strong_invariant(fam, label, mu, data=data)
    except InvariantViolation as exc:
        res["violation"] = str(exc)
        return Outcome(res, exit_code=EXIT_VIOLATION)
    res.update({k: v for k, v in inv.items() if k not in ("caz", "invariant_kind")})
    return Outcome(res)


def _zero_modes(cfg, mu, gap, workers):
    base = build_family(cfg, _seeds(cfg)[0])
    data = declared_symmetries(base.descriptor)
    label = detect_symmetries(base(0.0), data)
    inv = strong_invariant(base, label, mu, data=data).get("invariant")

    def one(seed):
        fam = build_family(cfg, seed)
        r = half_flux_zero_modes(fam, label, gap, cfg.radius, inv)
        r["seed"] = seed
        return r

    per = _map(one, _seeds(cfg), workers)
    passed = all(r["passed"] for r in per)
    res = {"caz": label.name, "invariant": inv, "runs": per, "passed": passed}
    return Outcome(res, exit_code=EXIT_OK if passed else EXIT_VIOLATION)


def _gauge_check(cfg, *_):
    suites = run_suites(["gauge", "operators"])
    passed = all(c["passed"] for s in suites.values() for c in s.values())
    return Outcome({"suites": suites, "passed": passed},
                   exit_code=EXIT_OK if passed else EXIT_VIOLATION)


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Outcome:
    """Execute one experiment; estimator failures propagate as exceptions."""
    if cfg.kind == "gauge-check":
        return _gauge_check(cfg)
    bulk = _bulk(cfg)
    mu = reference_energy(cfg, bulk)
    gap = gap_report(bulk, mu).width
    if gap <= 1e-8:
        raise SpectralError(f"no bulk gap at mu = {mu}")
    if cfg.kind == "bulk-edge":
        out = _bulk_edge(cfg, mu, gap, workers, bulk)
    else:
        fn = {"spectral-flow": _spectral_flow, "index": _index, "verify": _verify,
              "classify": _classify, "zero-modes": _zero_modes}[cfg.kind]
        out = fn(cfg, mu, gap, workers)
    out.result.update(kind=cfg.kind, model=cfg.model.name, mu=mu, bulk_gap=gap)
    return out


def set_path(cfg: ExperimentConfig, path: str, value) -> ExperimentConfig:
    """Copy of ``cfg`` with a dotted parameter replaced (``params.mu``,
    ``lattice.nx``, ``disorder.w`` or ``mu``)."""
    d = copy.deepcopy(cfg.model_dump())
    d["sweep"] = None
    head, *rest = path.split(".")
    if head == "params":
        d["model"]["params"][rest[0]] = value
    elif head == "mu":
        d["mu"] = value
    else:
        target = d[head]
        if rest[0] in ("nx", "ny", "width", "height"):
            value = int(value)
        target[rest[0]] = value
    return ExperimentConfig.model_validate(d)


SUMMARY_KEYS = ("localized_flow", "raw_flow", "ind_pfp", "chern_rounded", "chern_real_mean",
                "sf_localized", "edge_current", "two_pi_current", "caz", "invariant",
                "passed", "valid", "status")


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[dict]:
    """One row per sweep value; failures are recorded and the sweep continues."""
    rows = []
    if cfg.sweep is None:
        return rows

    def one(v):
        row = {cfg.sweep.parameter: v}
        try:
            out = run_experiment(set_path(cfg, cfg.sweep.parameter, v), 1)
            row.update({k: out.result[k] for k in SUMMARY_KEYS if k in out.result})
            row["exit_code"] = out.exit_code
            row["error"] = ""
        except SpectralError as exc:
            row.update(exit_code=EXIT_INDETERMINATE, error=str(exc))
        except (ValueError, AssertionError) as exc:
            row.update(exit_code=EXIT_CONFIG, error=str(exc))
        return row

    return _map(one, list(cfg.sweep.values), workers)
