"""Half-plane restrictions, edge current traces and disorder-averaged edge
conductance."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sl

from .lattice import GeometryError, LatticeSpace, build_lattice
from .models import (HoppingSpec, build_hamiltonian, model_orbitals,
                     model_spec)
from .spectral import SpectralError, SwitchFunction, gap_report


@dataclass(frozen=True)
class EdgeGeometry:
    """Strip of ``width x height`` sites, open in ``y``.

    Parameters
    ----------
    width, height : int
    periodic_x : bool
        Periodic along the edge (for column averages) or open.
    cut : int, optional
        Column ``c`` of ``Pi_< = {n1 < c}``; defaults to the middle column.
    """

    width: int = 48
    height: int = 24
    periodic_x: bool = False
    cut: int | None = None

    def space(self, orbitals: int) -> LatticeSpace:
        x0 = -(self.width // 2)
        return build_lattice((x0, x0 + self.width - 1), (0, self.height - 1), orbitals,
                             "periodic_x" if self.periodic_x else "open")

    @property
    def cut_column(self) -> int:
        return 0 if self.cut is None else int(self.cut)

    def bottom_mask(self, space: LatticeSpace) -> np.ndarray:
        """Flat-index mask of the bottom half ``n2 < height/2``."""
        s = space.sites()
        return np.repeat(s[:, 1] < self.height / 2, space.orbitals)

    def top_mask(self, space: LatticeSpace) -> np.ndarray:
        return ~self.bottom_mask(space)

    def left_mask(self, space: LatticeSpace) -> np.ndarray:
        s = space.sites()
        return np.repeat(s[:, 0] < self.cut_column, space.orbitals)


def half_plane_restrict(spec: HoppingSpec, geometry: EdgeGeometry, B: float = 0.0) -> np.ndarray:
    """``spec`` on the strip with Dirichlet conditions at the open edges.

    Raises
    ------
    GeometryError
        If the hopping range is not below a quarter of the strip width.
    """
    if spec.range >= geometry.width / 4:
        raise GeometryError(f"hopping range {spec.range} too large for width {geometry.width}")
    space = geometry.space(spec.orbitals)
    return build_hamiltonian(space, spec, B, 0.0, (), "ab", "landau")


def switch_derivative(H, switch: SwitchFunction) -> np.ndarray:
    """``g'(H)`` by functional calculus on the eigenvalues inside the switch window."""
    try:
        w, v = sl.eigh(H, subset_by_value=(switch.a, switch.b), driver="evr")
    except ValueError:
        return np.zeros_like(H)
    return (v * switch.dg(w)) @ v.conj().T


def _current_density(H, switch: SwitchFunction, left: np.ndarray) -> np.ndarray:
    """Diagonal of ``g'(H) i[Pi_<, H]`` per flat index."""
    G = switch_derivative(H, switch)
    chi = left.astype(float)
    C = 1j * (chi[:, None] * H - H * chi[None, :])
    return np.real(np.einsum("ij,ji->i", G, C))


def edge_current(H, switch: SwitchFunction, geometry: EdgeGeometry, space: LatticeSpace,
                 edge: str = "bottom") -> float:
    """``Tr(Pi_edge g'(H) i[Pi_<, H] Pi_edge)`` on a strip.

    Parameters
    ----------
    H : ndarray
        Strip Hamiltonian from :func:`half_plane_restrict`.
    switch : SwitchFunction
        ``g'`` must be supported in the bulk gap.
    edge : {"bottom", "top"}
        Half of the strip kept in the trace.

    Raises
    ------
    GeometryError
        If the strip is shorter than 8 sites or periodic along the edge
        (``Pi_<`` would then have two cuts; use :func:`column_current`).
    """
    if space.periodic_x:
        raise GeometryError("edge_current needs an open strip; use column_current")
    if geometry.height < 8:
        raise GeometryError("strip too short to separate its two edges")
    dens = _current_density(H, switch, geometry.left_mask(space))
    mask = geometry.bottom_mask(space) if edge == "bottom" else geometry.top_mask(space)
    return float(np.sum(dens[mask]))


def current_map(H, switch: SwitchFunction, geometry: EdgeGeometry, space: LatticeSpace):
    """Rows ``(n1, n2, value)`` of the site-resolved current density."""
    dens = _current_density(H, switch, geometry.left_mask(space))
    per_site = dens.reshape(space.n_sites, space.orbitals).sum(axis=1)
    s = space.sites()
    return [(int(a), int(b), float(v)) for (a, b), v in zip(s, per_site)]


def corner_decay(H, switch: SwitchFunction, geometry: EdgeGeometry, space: LatticeSpace,
                 radii=(4, 8, 12, 16)) -> list[tuple[float, float]]:
    """Largest ``|<n| g'(H) i[Pi_<, H] |n>|`` over bottom-half sites beyond
    each radius from the bottom-edge end of the cut."""
    dens = _current_density(H, switch, geometry.left_mask(space))
    per_site = np.abs(dens.reshape(space.n_sites, space.orbitals)).sum(axis=1)
    per_site[~geometry.bottom_mask(space)[::space.orbitals]] = 0.0
    s = space.sites()
    d = np.hypot(s[:, 0] - (geometry.cut_column - 0.5), s[:, 1] - space.y_range[0])
    return [(float(r), float(per_site[d > r].max(initial=0.0))) for r in radii]


def _min_image_dx(space: LatticeSpace) -> np.ndarray:
    x = np.repeat(space.sites()[:, 0], space.orbitals).astype(float)
    dx = x[:, None] - x[None, :]
    if space.periodic_x:
        dx = (dx + space.nx / 2) % space.nx - space.nx / 2
    return dx


def column_current(H, switch: SwitchFunction, geometry: EdgeGeometry, space: LatticeSpace) -> float:
    """Bottom-half current per column: ``-(1/nx) Tr(Pi_bottom g'(H) i[X1, H])``
    with minimum-image displacements.

    The sign matches :func:`edge_current` (``Pi_<`` decreases with ``X1``).
    """
    G = switch_derivative(H, switch)
    C = 1j * _min_image_dx(space) * H
    dens = np.real(np.einsum("ij,ji->i", G, C))
    return -float(np.sum(dens[geometry.bottom_mask(space)])) / space.nx


def averaged_edge_current(name: str, params: dict, seeds, geometry: EdgeGeometry,
                          switch: SwitchFunction, workers: int = 1, min_gap: float | None = None):
    """Seed average of the column current on a disordered periodic strip.

    Parameters
    ----------
    name, params
        Model descriptor; ``params["w"]`` is the disorder strength.
    seeds : iterable of int
    min_gap : float, optional
        Seeds whose periodic-strip bulk gap (measured on the torus of the
        same width) falls below this are excluded.

    Returns
    -------
    dict
        ``mean``, ``stderr``, ``values`` per seed, and ``excluded`` seeds.
    """
    if not geometry.periodic_x:
        geometry = EdgeGeometry(geometry.width, geometry.height, True, geometry.cut)
    space = geometry.space(model_orbitals(name, params))

    def one(seed):
        spec, _ = model_spec(name, params, space, seed)
        H = half_plane_restrict(spec, geometry)
        if min_gap is not None:
            torus = build_lattice(space.x_range, space.y_range, space.orbitals, "periodic_xy")
            Ht = build_hamiltonian(torus, spec, 0.0, 0.0, (), "ab", "landau")
            g = gap_report(sl.eigh(Ht, eigvals_only=True), 0.5 * (switch.a + switch.b))
            if g.width < min_gap:
                return seed, None
        return seed, column_current(H, switch, geometry, space)

    seeds = list(seeds)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            out = list(ex.map(one, seeds))
    else:
        out = [one(s) for s in seeds]
    vals = np.array([v for _, v in out if v is not None])
    excluded = [s for s, v in out if v is None]
    if vals.size == 0:
        raise SpectralError("gap closed for every seed")
    stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return {"mean": float(vals.mean()), "stderr": stderr, "values": vals.tolist(),
            "seeds": [s for s, v in out if v is not None], "excluded": excluded}



def finite_size_sweep(name: str, params: dict | None, switch: SwitchFunction,
                      heights=(24,), widths=(48,), target: float | None = None) -> list[dict]:
    """Finite-size bias of the clean column current over strip heights and widths.

    Returns rows ``{height, width, value, bias}`` with ``bias = value - target``
    (``target`` defaults to ``-1/2pi``; pass ``-Ind/2pi``).
    """
    p = dict(params or {})
    p["w"] = 0.0
    spec, _ = model_spec(name, p)
    target = -1.0 / (2 * np.pi) if target is None else target
    rows = []
    for wd in widths:
        for h in heights:
            geo = EdgeGeometry(int(wd), int(h), True)
            space = geo.space(spec.orbitals)
            v = column_current(half_plane_restrict(spec, geo), switch, geo, space)
            rows.append({"height": int(h), "width": int(wd), "value": v, "bias": v - target})
    return rows
