"""Flux-family Hamiltonians: the generic hopping class, BdG assembly,
Majorana transform, the named model zoo, disorder, multi-flux and cutouts.

The generic class is ``H_alpha = sum_n (S1^{B,alpha})^{n1} (S2^{B,alpha})^{n2} (x) t_n + lambda V``
with constant ``L x L`` coefficients.  For ``B = 0`` a BdG family written in
this form automatically has the reflected ``-alpha`` structure in its lower
blocks, because ``conj(S^{0,-alpha}) = S^{0,alpha}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import scipy.sparse as sps

from . import gauge as gg
from .lattice import GeometryError, LatticeSpace, Region, fiber_blocks_to_matrix, centered_lattice
from .operators import magnetic_translation

HERMITIAN_TOL = 1e-10
MODEL_NAMES = ("harper", "p_ip", "d_id", "wilson_dirac", "km_double")


class HermiticityError(ValueError):
    """Assembled operator is not Hermitian within tolerance."""


class SymmetryConditionError(ValueError):
    """A structural precondition (e.g. pairing antisymmetry) is violated."""


class ModelError(ValueError):
    """Unknown model or invalid model parameters."""


@dataclass
class HoppingSpec:
    """Finite-range hopping data.

    Parameters
    ----------
    hoppings : dict
        ``(n1, n2) -> L x L`` complex coefficient ``t_n``.
    potential : ndarray, optional
        Per-site Hermitian fiber matrices, shape ``(n_sites, L, L)``.
    coupling : float
        Prefactor ``lambda`` of the potential.
    ordering : {"s1_first", "symmetrized"}
        ``s1_first`` uses ``S1^{n1} S2^{n2}``; ``symmetrized`` averages both
        orders for diagonal hops, which keeps ``H_alpha`` exactly Hermitian when
        ``[S1, S2] != 0`` near a flux tube.
    """

    hoppings: dict
    potential: np.ndarray | None = None
    coupling: float = 1.0
    ordering: str = "s1_first"

    def __post_init__(self):
        self.hoppings = {tuple(int(v) for v in k): np.atleast_2d(np.asarray(t, complex))
                         for k, t in self.hoppings.items()}
        shapes = {t.shape for t in self.hoppings.values()}
        if len(shapes) > 1:
            raise ModelError(f"inconsistent coefficient shapes {shapes}")

    @property
    def orbitals(self) -> int:
        if self.hoppings:
            return next(iter(self.hoppings.values())).shape[0]
        if self.potential is not None:
            return self.potential.shape[-1]
        return 1

    @property
    def range(self) -> int:
        return max((max(abs(a), abs(b)) for a, b in self.hoppings), default=0)

    def with_potential(self, potential, coupling: float = 1.0) -> "HoppingSpec":
        return replace(self, potential=potential, coupling=coupling)


def _power(S, k: int):
    n = S.shape[0]
    out = sps.identity(n, dtype=complex, format="csr")
    base = S if k >= 0 else S.conj().T.tocsr()
    for _ in range(abs(k)):
        out = out @ base
    return out


def site_translations(space: LatticeSpace, B: float, alpha: float, cells, gauge: str = "ab",
                      field_gauge: str = "symmetric", charges=None):
    """Sparse site-level ``(S1, S2)`` for a field ``B`` and flux ``alpha`` through ``cells``."""
    site_space = space.with_orbitals(1)
    A = gg.combined_potential(B, alpha, list(cells), gauge, field_gauge, charges)
    return (magnetic_translation(site_space, A, 1, sparse=True),
            magnetic_translation(site_space, A, 2, sparse=True))


def assemble(space: LatticeSpace, spec: HoppingSpec, S1, S2) -> np.ndarray:
    """Sum ``T_n (x) t_n`` for given site-level translations; no Hermitization."""
    L = spec.orbitals
    if L != space.orbitals:
        raise ModelError(f"spec has {L} orbitals, space has {space.orbitals}")
    out = sps.csr_matrix((space.dim, space.dim), dtype=complex)
    cache = {}

    def pw(j, k):
        if (j, k) not in cache:
            cache[(j, k)] = _power(S1 if j == 1 else S2, k)
        return cache[(j, k)]

    for (a, b), t in spec.hoppings.items():
        if not np.any(t):
            continue
        term = pw(1, a) @ pw(2, b)
        if spec.ordering == "symmetrized" and a != 0 and b != 0:
            term = 0.5 * (term + pw(2, b) @ pw(1, a))
        out = out + sps.kron(term, sps.csr_matrix(t), format="csr")
    M = out.toarray()
    if spec.potential is not None and spec.coupling != 0:
        V = np.asarray(spec.potential, complex)
        if V.ndim == 1:
            V = V[:, None, None] * np.eye(L)
        n = space.n_sites
        idx = np.arange(n)[:, None] * L + np.arange(L)
        M[idx[:, :, None], idx[:, None, :]] += spec.coupling * V
    return M


def hermitize(M: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, float]:
    defect = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if defect > tol:
        raise HermiticityError(f"asymmetry defect {defect:.3e} exceeds {tol}")
    return 0.5 * (M + M.conj().T), defect


def build_hamiltonian(space: LatticeSpace, spec: HoppingSpec, B: float = 0.0, alpha: float = 0.0,
                      m=(-1, -1), gauge: str = "ab", field_gauge: str = "symmetric",
                      charges=None, return_defect: bool = False):
    """``H = sum_n t_n (S1^{B,alpha})^{n1} (S2^{B,alpha})^{n2} + lambda V``, Hermitized.

    ``m`` is one flux cell or a list of cells (empty list: no flux).

    Raises
    ------
    HermiticityError
        If ``max |M - M*| > 1e-10`` before Hermitization.
    """
    cells = _cells(m)
    gg.check_flux_placement(space, cells, gauge, charges, alpha)
    S1, S2 = site_translations(space, B, alpha, cells, gauge, field_gauge, charges)
    H, defect = hermitize(assemble(space, spec, S1, S2))
    return (H, defect) if return_defect else H


def _cells(m):
    if m is None:
        return []
    if len(m) == 0:
        return []
    if np.ndim(m) == 1:
        return [tuple(int(v) for v in m)]
    return [tuple(int(v) for v in c) for c in m]


# ----------------------------------------------------------------- BdG tools

def build_bdg(h: np.ndarray, delta: np.ndarray, eta_ph: int = 1, n_sites: int | None = None,
              h_reflected: np.ndarray | None = None, delta_reflected: np.ndarray | None = None,
              tol: float = HERMITIAN_TOL) -> np.ndarray:
    """``[[h, D], [-eta conj(D'), -conj(h')]]`` in particle-hole grading.

    ``h'`` and ``D'`` are the reflected (``-alpha``) members of a flux family
    and default to ``h`` and ``D``.  The grading is the outermost fiber factor,
    so ``n_sites`` must be given when ``h`` carries an orbital fiber; by default
    each site has a single orbital.

    Raises
    ------
    SymmetryConditionError
        If ``D^t != -eta D'`` (entrywise, ``tol``).
    """
    if eta_ph not in (1, -1):
        raise ValueError("eta_ph must be +1 or -1")
    h_r = h if h_reflected is None else h_reflected
    d_r = delta if delta_reflected is None else delta_reflected
    res = np.max(np.abs(delta.T + eta_ph * d_r)) if delta.size else 0.0
    if res > tol:
        raise SymmetryConditionError(f"pairing violates D^t = -eta D' (residual {res:.3e})")
    n = h.shape[0] if n_sites is None else n_sites
    inner = h.shape[0] // n
    return fiber_blocks_to_matrix([[h, delta], [-eta_ph * d_r.conj(), -h_r.conj()]], n, inner)


def bdg_spec(h_spec: HoppingSpec, d_spec: HoppingSpec, eta_ph: int = 1) -> HoppingSpec:
    """Generic-class coefficients ``[[h_n, d_n], [-eta conj(d_n), -conj(h_n)]]``.

    Valid for ``B = 0``; checks ``d_{-n}^t = -eta d_n``.
    """
    keys = set(h_spec.hoppings) | set(d_spec.hoppings)
    L = h_spec.orbitals
    z = np.zeros((L, L), complex)
    for n in d_spec.hoppings:
        dn = d_spec.hoppings[n]
        dm = d_spec.hoppings.get((-n[0], -n[1]), z)
        if np.max(np.abs(dm.T + eta_ph * dn)) > HERMITIAN_TOL:
            raise SymmetryConditionError(f"pairing coefficient at {n} violates D^t = -eta D")
    hop = {}
    for n in keys:
        hn = h_spec.hoppings.get(n, z)
        dn = d_spec.hoppings.get(n, z)
        hop[n] = np.block([[hn, dn], [-eta_ph * dn.conj(), -hn.conj()]])
    pot = None
    if h_spec.potential is not None:
        V = np.asarray(h_spec.potential, complex)
        if V.ndim == 1:
            V = V[:, None, None] * np.eye(L)
        pot = np.zeros((V.shape[0], 2 * L, 2 * L), complex)
        pot[:, :L, :L] = h_spec.coupling * V
        pot[:, L:, L:] = -h_spec.coupling * V.conj()
    ordering = "symmetrized" if "symmetrized" in (h_spec.ordering, d_spec.ordering) else "s1_first"
    return HoppingSpec(hop, pot, 1.0, ordering)


def cayley_block(space: LatticeSpace) -> np.ndarray:
    """``C = (1/sqrt2) [[1, -i], [1, i]]`` in particle-hole grading on ``space``
    (whose fiber is ``2 x inner``)."""
    inner = space.orbitals // 2
    c = np.array([[1, -1j], [1, 1j]]) / np.sqrt(2)
    return np.kron(np.eye(space.n_sites), np.kron(c, np.eye(inner)))


def majorana_transform(H: np.ndarray, space: LatticeSpace, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """``C^t H conj(C)``; for an even-PHS BdG operator this is purely imaginary
    and antisymmetric.

    Raises
    ------
    SymmetryConditionError
        If the input lacks even PHS with ``K_ph = [[0, 1], [1, 0]]``.
    """
    C = cayley_block(space)
    K = np.kron(np.eye(space.n_sites), np.kron(np.array([[0, 1], [1, 0]]), np.eye(space.orbitals // 2)))
    if np.max(np.abs(K.T @ H.conj() @ K + H)) > tol:
        raise SymmetryConditionError("majorana_transform needs even particle-hole symmetry")
    return C.T @ H @ C.conj()


def majorana_inverse(M: np.ndarray, space: LatticeSpace) -> np.ndarray:
    C = cayley_block(space)
    return C.conj() @ M @ C.T


# ------------------------------------------------------------ flux families

@dataclass
class FluxFamily:
    """``alpha -> H_alpha`` on a fixed index set.

    ``keep`` (flat-index mask) is set for cutouts; matrices returned by
    :meth:`__call__` are then restricted to the retained indices.
    """

    space: LatticeSpace
    builder: Callable[[float], np.ndarray]
    cells: list
    gauge: str = "ab"
    descriptor: dict = field(default_factory=dict)
    seed: int | None = None
    keep: np.ndarray | None = None
    charges: list | None = None

    def __call__(self, alpha: float) -> np.ndarray:
        H = self.builder(float(alpha))
        if self.keep is not None:
            H = H[np.ix_(self.keep, self.keep)]
        return H

    @property
    def dim(self) -> int:
        return self.space.dim if self.keep is None else int(self.keep.sum())

    @property
    def eta_ph(self):
        return self.descriptor.get("eta_ph")

    @property
    def is_bdg(self) -> bool:
        return self.descriptor.get("eta_ph") is not None and self.descriptor.get("B", 0.0) == 0.0

    def coords(self) -> np.ndarray:
        """Site coordinates of each retained flat index, shape ``(dim, 2)``."""
        s = np.repeat(self.space.sites(), self.space.orbitals, axis=0)
        return s if self.keep is None else s[self.keep]

    def centers(self) -> np.ndarray:
        return np.array([(m[0] + 0.5, m[1] + 0.5) for m in self.cells], float).reshape(-1, 2)

    def flux_phase_diagonal(self) -> np.ndarray:
        """Diagonal of ``F' = F_(1) ... F_(L)`` on the retained indices."""
        d = gg.multi_flux_phase_diagonal(self.space, self.cells, self.charges)
        return d if self.keep is None else d[self.keep]

    def restrict(self, vec_or_mask):
        return vec_or_mask if self.keep is None else np.asarray(vec_or_mask)[self.keep]


def spec_family(space: LatticeSpace, spec: HoppingSpec, cells=((-1, -1),), B: float = 0.0,
                gauge: str = "ab", field_gauge: str = "symmetric", descriptor=None,
                seed=None, charges=None) -> FluxFamily:
    cells = _cells(cells)
    gg.check_flux_placement(space, cells, gauge, charges)

    def builder(alpha):
        return build_hamiltonian(space, spec, B, alpha, cells, gauge, field_gauge, charges)

    desc = dict(descriptor or {})
    desc.setdefault("B", B)
    return FluxFamily(space, builder, cells, gauge, desc, seed, None, charges)


def random_potential(space: LatticeSpace, w: float, seed) -> np.ndarray:
    """I.i.d. uniform ``[-w, w]`` site potential, reproducible from ``seed``."""
    if w < 0:
        raise ValueError("disorder strength must be >= 0")
    if w == 0:
        return np.zeros(space.n_sites)
    return np.random.default_rng(seed).uniform(-w, w, space.n_sites)


# ---------------------------------------------------------------- model zoo

def _nn(c1, c1s, c2, c2s, onsite=None):
    d = {(1, 0): c1, (-1, 0): c1s, (0, 1): c2, (0, -1): c2s}
    if onsite is not None:
        d[(0, 0)] = onsite
    return d


def harper_spec(t: float = 1.0) -> HoppingSpec:
    return HoppingSpec(_nn(t, t, t, t))


def p_ip_specs(mu: float, delta: float):
    """Normal and pairing parts of the p+ip superconductor."""
    h = HoppingSpec(_nn(1, 1, 1, 1, -mu))
    d = HoppingSpec(_nn(delta, -delta, 1j * delta, -1j * delta))
    return h, d


def d_id_specs(mu: float, delta: float):
    """Normal and pairing parts of the d+id superconductor.

    Pairing ``delta (i(S1 + S1* - S2 - S2*) + (S1 - S1*)(S2 - S2*))``; the
    nearest-neighbour and diagonal parts are in quadrature so that the gap is
    open (see the README for the convention).
    """
    h = HoppingSpec(_nn(1, 1, 1, 1, -mu))
    dd = _nn(1j * delta, 1j * delta, -1j * delta, -1j * delta)
    dd.update({(1, 1): delta, (1, -1): -delta, (-1, 1): -delta, (-1, -1): delta})
    return h, HoppingSpec(dd, ordering="symmetrized")


def wilson_dirac_spec(mu: float, lam: float, mass_convention: str = "shifted") -> HoppingSpec:
    """Two-band Wilson-Dirac operator ``i [[S2 - S2*, S1 - S1* + M], [S1 - S1* - M, S2* - S2]]``.

    ``M = mu + lam (c + S1 + S1* + S2 + S2*)`` with ``c = -4`` ("shifted",
    gap closings at ``mu/lam = 0, 4, 8``) or ``c = +4`` ("literal", closings
    at ``0, -4, -8``).
    """
    c = {"shifted": -4.0, "literal": 4.0}[mass_convention]
    m0 = mu + lam * c
    i = 1j
    hop = {
        (1, 0): i * np.array([[0, 1 + lam], [1 - lam, 0]]),
        (-1, 0): i * np.array([[0, lam - 1], [-(1 + lam), 0]]),
        (0, 1): i * np.array([[1, lam], [-lam, -1]]),
        (0, -1): i * np.array([[-1, lam], [-lam, 1]]),
        (0, 0): i * np.array([[0, m0], [-m0, 0]]),
    }
    return HoppingSpec(hop)


def km_double_spec(block: HoppingSpec, gamma: float = 0.0) -> HoppingSpec:
    """``[[h, g], [g*, conj(h)]]`` in the time-reversal grading.

    ``g = i gamma (S1 - S1*) (x) 1``, which satisfies ``g^t = -g`` and, over a
    BdG block, ``K_ph* conj(g) K_ph = -g``.
    """
    N = block.orbitals
    z = np.zeros((N, N), complex)
    one = np.eye(N)
    g = {(1, 0): 1j * gamma * one, (-1, 0): -1j * gamma * one}
    hop = {}
    for n in set(block.hoppings) | set(g):
        tn = block.hoppings.get(n, z)
        gn = g.get(n, z)
        gm = g.get((-n[0], -n[1]), z)
        hop[n] = np.block([[tn, gn], [gm.conj().T, tn.conj()]])
    pot = None
    if block.potential is not None:
        V = np.asarray(block.potential, complex)
        if V.ndim == 1:
            V = V[:, None, None] * np.eye(N)
        pot = np.zeros((V.shape[0], 2 * N, 2 * N), complex)
        pot[:, :N, :N] = block.coupling * V
        pot[:, N:, N:] = block.coupling * V.conj()
    return HoppingSpec(hop, pot, 1.0, block.ordering)


DEFAULT_PARAMS = {
    "harper": {"B": 2 * np.pi / 3, "t": 1.0, "w": 0.0},
    "p_ip": {"mu": 2.0, "delta": 1.0, "w": 0.0},
    "d_id": {"mu": 1.0, "delta": 1.0, "w": 0.0},
    "wilson_dirac": {"mu": 2.0, "lam": 1.0, "mass_convention": "shifted", "w": 0.0},
    "km_double": {"block": "wilson_dirac", "gamma": 0.0, "w": 0.0,
                  "block_params": {}},
}

ORBITALS = {"harper": 1, "p_ip": 2, "d_id": 2, "wilson_dirac": 2}


def model_orbitals(name: str, params=None) -> int:
    if name == "km_double":
        p = {**DEFAULT_PARAMS["km_double"], **(params or {})}
        return 2 * ORBITALS[p["block"]]
    if name not in ORBITALS:
        raise ModelError(f"unknown model {name!r}")
    return ORBITALS[name]


def model_spec(name: str, params=None, space: LatticeSpace | None = None, seed=None):
    """``(HoppingSpec, descriptor)`` for a named model; disorder ``w`` needs ``space``."""
    if name not in MODEL_NAMES:
        raise ModelError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
    p = {**DEFAULT_PARAMS[name], **(params or {})}
    unknown = set(p) - set(DEFAULT_PARAMS[name])
    if unknown:
        raise ModelError(f"unknown parameters for {name}: {sorted(unknown)}")
    w = float(p.get("w", 0.0))
    V = None
    if w:
        if space is None:
            raise ModelError("disorder requires a lattice space")
        V = random_potential(space, w, seed)
    desc = {"name": name, "params": p, "B": 0.0, "eta_ph": None}
    if name == "harper":
        spec = harper_spec(p["t"])
        if V is not None:
            spec = spec.with_potential(V)
        desc["B"] = float(p["B"])
    elif name in ("p_ip", "d_id"):
        h, d = (p_ip_specs if name == "p_ip" else d_id_specs)(p["mu"], p["delta"])
        if V is not None:
            h = h.with_potential(V)
        eta = 1 if name == "p_ip" else -1
        spec = bdg_spec(h, d, eta)
        desc["eta_ph"] = eta
    elif name == "wilson_dirac":
        spec = wilson_dirac_spec(p["mu"], p["lam"], p["mass_convention"])
        if V is not None:
            spec = spec.with_potential(V[:, None, None] * np.eye(2))
    else:
        block_name = p["block"]
        if block_name == "km_double":
            raise ModelError("km_double cannot be nested")
        bp = dict(p.get("block_params") or {})
        block, bdesc = model_spec(block_name, bp, space, seed)
        if bdesc["B"] != 0.0:
            raise ModelError("time-reversal doubling requires B = 0")
        spec = km_double_spec(block, p["gamma"])
        if V is not None:
            # spin-independent scalar disorder; BdG blocks get it as V (x) tau_z
            N = block.orbitals
            local = np.eye(N) if bdesc["eta_ph"] is None else np.diag(np.repeat([1.0, -1.0], N // 2))
            extra = V[:, None, None] * np.kron(np.eye(2), local)
            pot = extra if spec.potential is None else spec.potential + extra
            spec = replace(spec, potential=pot, coupling=1.0)
        desc["eta_ph"] = bdesc["eta_ph"]
        desc["block"] = block_name
        desc["tr_odd"] = True
    return spec, desc


def named_model(name: str, params=None, space: LatticeSpace | None = None, cells=((-1, -1),),
                gauge: str = "ab", field_gauge: str = "symmetric", seed=None) -> FluxFamily:
    """Flux family for one of ``harper, p_ip, d_id, wilson_dirac, km_double``.

    ``params`` override :data:`DEFAULT_PARAMS`; ``w`` adds uniform disorder
    (``V (x) tau_z`` on BdG models) drawn from ``seed``.  On periodic patches
    pass ``cells=()``.
    """
    if space is None:
        space = centered_lattice(24, 24, model_orbitals(name, params))
    if space.orbitals != model_orbitals(name, params):
        raise ModelError(f"{name} needs {model_orbitals(name, params)} orbitals per site")
    spec, desc = model_spec(name, params, space, seed)
    return spec_family(space, spec, cells, desc["B"], gauge, field_gauge, desc, seed)


def multi_flux_family(name_or_spec, cells, gauge: str = "ab", space: LatticeSpace | None = None,
                      params=None, seed=None, min_separation: float = 8.0) -> FluxFamily:
    """Flux ``alpha`` through every listed cell simultaneously.

    Raises
    ------
    GeometryError
        If two cells are closer than ``min_separation`` or a cell is closer
        than ``min_separation`` to an open edge.
    """
    cells = _cells(cells)
    if len(set(cells)) != len(cells):
        raise GeometryError("flux cells must be distinct")
    if isinstance(name_or_spec, str):
        if space is None:
            space = centered_lattice(32, 32, model_orbitals(name_or_spec, params))
    elif space is None:
        raise GeometryError("a space is required with an explicit HoppingSpec")
    ctr = np.array([(m[0] + 0.5, m[1] + 0.5) for m in cells]).reshape(-1, 2)
    for i in range(len(cells)):
        if space.distance_to_boundary(*ctr[i]) < min_separation:
            raise GeometryError(f"cell {cells[i]} is within {min_separation} of the boundary")
        for j in range(i):
            if np.hypot(*(ctr[i] - ctr[j])) < min_separation:
                raise GeometryError(f"cells {cells[j]} and {cells[i]} are too close")
    if isinstance(name_or_spec, str):
        return named_model(name_or_spec, params, space, cells, gauge, seed=seed)
    return spec_family(space, name_or_spec, cells, 0.0, gauge)


def cutout(family: FluxFamily, region: Region) -> FluxFamily:
    """Compress ``H_alpha`` to the complement of ``region``.

    Raises
    ------
    GeometryError
        If ``region`` covers a corner of a flux cell.
    """
    mask = region.mask(family.space)
    for m in family.cells:
        corners = [(m[0] + a, m[1] + b) for a in (0, 1) for b in (0, 1)]
        for c in corners:
            if family.space.contains(*c) and mask[family.space.site_index(*c)]:
                raise GeometryError(f"cutout covers flux cell {m}")
    keep = ~np.repeat(mask, family.space.orbitals)
    if family.keep is not None:
        keep &= family.keep
    return replace(family, keep=keep)


def bulk_family(name: str, params=None, n: int = 24) -> tuple[FluxFamily, LatticeSpace]:
    """The model on an ``n x n`` torus without flux (Landau gauge for ``B``)."""
    space = centered_lattice(n, n, model_orbitals(name, params), "periodic_xy")
    p = {**DEFAULT_PARAMS[name], **(params or {})}
    if name == "harper" and abs(p["B"] * n / (2 * np.pi) - round(p["B"] * n / (2 * np.pi))) > 1e-9:
        raise GeometryError("torus size must make B * n a multiple of 2 pi")
    fam = named_model(name, p, space, cells=(), field_gauge="landau")
    return fam, space
