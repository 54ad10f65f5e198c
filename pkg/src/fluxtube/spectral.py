"""Diagonalization, Fermi projections, switch functions, spectral flow
(integer and Z2) and kernel-dimension indices."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sl
from scipy.optimize import brentq
from scipy.special import betainc, comb

from .models import FluxFamily

PROJECTION_TOL = 1e-8


class SpectralError(RuntimeError):
    """Estimator could not reach a definite answer (maps to CLI exit code 3)."""


class ResolutionError(SpectralError):
    """Crossing could not be resolved at maximum refinement depth."""


class IndeterminateKernelError(SpectralError):
    """No clear separation between near-zero and gapped eigenvalues."""


class QuadratureError(SpectralError):
    """Successive quadrature refinements disagree."""


def _check_hermitian(H, tol: float = 1e-10):
    if H.shape[0] != H.shape[1]:
        raise ValueError("operator must be square")
    if H.size and np.max(np.abs(H - H.conj().T)) > tol * max(1.0, np.max(np.abs(H))):
        raise ValueError("operator is not Hermitian")


def eigvalsh(H) -> np.ndarray:
    return sl.eigh(H, eigvals_only=True, driver="evr", check_finite=False)


def eigh_window(H, lo: float, hi: float):
    """Eigenpairs with eigenvalues in ``(lo, hi]``."""
    try:
        return sl.eigh(H, subset_by_value=(lo, hi), driver="evr", check_finite=False)
    except ValueError:
        return np.zeros(0), np.zeros((H.shape[0], 0), complex)


@dataclass
class GapReport:
    mu: float
    below: float
    above: float

    @property
    def width(self) -> float:
        return self.above - self.below

    @property
    def distance(self) -> float:
        """Distance from ``mu`` to the nearest eigenvalue."""
        return min(self.mu - self.below, self.above - self.mu)


def gap_report(evals: np.ndarray, mu: float) -> GapReport:
    """Spectral gap of a sorted spectrum that contains ``mu``."""
    i = int(np.searchsorted(evals, mu))
    below = evals[i - 1] if i > 0 else -np.inf
    above = evals[i] if i < len(evals) else np.inf
    return GapReport(float(mu), float(below), float(above))


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    gap: GapReport | None = None

    def residual(self, H) -> float:
        """``max_k ||H v_k - E_k v_k|| / ||H||``."""
        r = H @ self.eigenvectors - self.eigenvectors * self.eigenvalues
        return float(np.max(np.linalg.norm(r, axis=0)) / max(np.linalg.norm(H, 2), 1e-300))


def diagonalize(H, mu: float | None = None) -> SpectrumResult:
    """Full Hermitian eigendecomposition with ascending eigenvalues."""
    H = np.asarray(H)
    _check_hermitian(H)
    e, v = sl.eigh(H, driver="evr", check_finite=False)
    return SpectrumResult(e, v, gap_report(e, mu) if mu is not None else None)


def fermi_projection(H, mu: float, spectrum: SpectrumResult | None = None) -> np.ndarray:
    """``chi(H <= mu)``; raises if ``mu`` is within 1e-8 of an eigenvalue."""
    s = spectrum if spectrum is not None else diagonalize(H)
    if s.eigenvalues.size and np.min(np.abs(s.eigenvalues - mu)) < PROJECTION_TOL:
        raise SpectralError(f"mu = {mu} lies on an eigenvalue; projection is ambiguous")
    V = s.eigenvectors[:, s.eigenvalues <= mu]
    return V @ V.conj().T


def occupied_vectors(H, mu: float) -> np.ndarray:
    e, v = sl.eigh(H, driver="evr", check_finite=False)
    if e.size and np.min(np.abs(e - mu)) < PROJECTION_TOL:
        raise SpectralError(f"mu = {mu} lies on an eigenvalue; projection is ambiguous")
    return v[:, e <= mu]


# ------------------------------------------------------------ switch function

@dataclass(frozen=True)
class SwitchFunction:
    """Non-increasing ``g`` equal to 1 left of ``[a, b]`` and 0 right of it.

    ``g(E) = 1 - S_N((E - a)/(b - a))`` with the order-``N`` smoothstep
    ``S_N(x) = I_x(N+1, N+1)``, so ``g`` has ``N`` continuous derivatives.
    """

    a: float
    b: float
    order: int = 5

    def _x(self, E):
        return np.clip((np.asarray(E, float) - self.a) / (self.b - self.a), 0.0, 1.0)

    def g(self, E):
        return 1.0 - betainc(self.order + 1, self.order + 1, self._x(E))

    def dg(self, E):
        """``g'(E)``, supported in ``[a, b]``."""
        n = self.order
        x = self._x(E)
        c = comb(2 * n + 1, n, exact=False) * (n + 1)
        return -c * x ** n * (1 - x) ** n / (self.b - self.a)

    __call__ = g


def make_switch(interval, order: int = 5) -> SwitchFunction:
    a, b = interval
    if not a < b:
        raise ValueError("switch interval needs a < b")
    return SwitchFunction(float(a), float(b), int(order))


def gap_window(gap: GapReport, fraction: float = 0.6) -> tuple[float, float]:
    """Middle ``fraction`` of a spectral gap."""
    c = 0.5 * (gap.below + gap.above)
    h = 0.5 * fraction * gap.width
    return c - h, c + h


# -------------------------------------------------------------- spectral flow

@dataclass
class Crossing:
    alpha: float
    direction: int
    multiplicity: int
    weight: float
    energy: float
    localized: bool


@dataclass
class SpectralFlowResult:
    mu: float
    window: tuple[float, float]
    alphas: np.ndarray
    curves: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    radius: float = 6.0

    @property
    def raw_flow(self) -> int:
        return int(sum(c.direction * c.multiplicity for c in self.crossings))

    @property
    def localized_flow(self) -> int:
        return int(sum(c.direction * c.multiplicity for c in self.crossings if c.localized))

    @property
    def z2_flow(self) -> int:
        return int(sum(c.multiplicity for c in self.crossings if c.localized) % 2)

    def curve_rows(self):
        """Rows ``(alpha, index, energy, localization_weight)`` for CSV export."""
        return list(self.curves)


def localization_weights(vecs: np.ndarray, coords: np.ndarray, centers: np.ndarray, r: float) -> np.ndarray:
    """Probability of each column of ``vecs`` within ``r`` of the nearest center."""
    if vecs.shape[1] == 0:
        return np.zeros(0)
    if len(centers) == 0:
        return np.zeros(vecs.shape[1])
    d = np.min(np.hypot(coords[:, None, 0] - centers[None, :, 0],
                        coords[:, None, 1] - centers[None, :, 1]), axis=1)
    inside = d <= r
    return np.sum(np.abs(vecs[inside]) ** 2, axis=0)


class _Evaluator:
    """Caches spectra of ``H_alpha``; uses the BdG mirror when available."""

    def __init__(self, family: FluxFamily, mirror: bool):
        self.family = family
        self.mirror = mirror
        self.cache = {}
        self.count = 0

    def matrix(self, alpha):
        return self.family(alpha)

    def evals(self, alpha: float) -> np.ndarray:
        key = round(alpha, 14)
        if key not in self.cache:
            if self.mirror and alpha > 0.5 + 1e-15:
                self.cache[key] = -self.evals(1.0 - alpha)[::-1]
            else:
                self.count += 1
                self.cache[key] = eigvalsh(self.family(alpha))
        return self.cache[key]


def spectral_flow(family: FluxFamily, alphas=None, mu: float = 0.0, window=None,
                  radius: float = 6.0, max_depth: int = 20, curve_weights: bool = False,
                  mirror: bool | None = None, alpha_range=(0.0, 1.0),
                  safety: float = 2.0, nbr: int = 4, xtol: float = 1e-10) -> SpectralFlowResult:
    """Signed crossings of ``mu`` by the spectrum of ``alpha -> H_alpha``.

    Parameters
    ----------
    family : FluxFamily
    alphas : array_like, optional
        Grid covering ``alpha_range``; default 41 points.
    mu : float
        Reference energy, must lie in a gap of ``H_0``.
    window : (float, float), optional
        Energy window for exported curves; default ``mu +- 1``.
    radius : float
        Localization radius around the nearest flux center.
    max_depth : int
        Maximum bisection depth per grid interval.
    curve_weights : bool
        Also compute eigenvectors in the window at grid points so exported
        curves carry localization weights (one extra partial diagonalization
        per point).
    mirror : bool, optional
        Use ``sigma(H_alpha) = -sigma(H_{1-alpha})`` for BdG families with
        ``B = 0``; defaults to ``family.is_bdg``.

    Notes
    -----
    A crossing with direction ``+1`` is an eigenvalue increasing through
    ``mu``.  Sorted eigenvalues are compared across each interval; the
    interval is bisected while some sorted eigenvalue that does not change
    side comes within ``safety`` times its own motion of ``mu`` (a possible
    touch or hidden crossing pair).
    """
    a0, a1 = alpha_range
    alphas = np.linspace(a0, a1, 41) if alphas is None else np.asarray(alphas, float)
    if abs(alphas[0] - a0) > 1e-12 or abs(alphas[-1] - a1) > 1e-12:
        raise ValueError("alpha grid must cover the requested range")
    mirror = family.is_bdg if mirror is None else mirror
    window = (mu - 1.0, mu + 1.0) if window is None else tuple(window)
    ev = _Evaluator(family, mirror)
    e0 = ev.evals(alphas[0])
    if e0.size and np.min(np.abs(e0 - mu)) < PROJECTION_TOL:
        raise SpectralError("mu lies on an eigenvalue of H at the start of the family")
    coords, centers = family.coords(), family.centers()
    res = SpectralFlowResult(mu, window, alphas, radius=radius)

    def count(a):
        return int(np.searchsorted(ev.evals(a), mu))

    def near(a, d):
        e = ev.evals(a)
        return e[np.abs(e - mu) <= d]

    def resolve(lo, hi, depth):
        el, eh = ev.evals(lo), ev.evals(hi)
        nl_, nh_ = count(lo), count(hi)
        dn = nh_ - nl_
        # sorted indices that could touch mu inside the interval
        i0, i1 = max(min(nl_, nh_) - nbr, 0), min(max(nl_, nh_) + nbr, len(el))
        idx = np.arange(i0, i1)
        motion = safety * np.abs(eh[idx] - el[idx]) + 1e-14
        dist = np.minimum(np.abs(el[idx] - mu), np.abs(eh[idx] - mu))
        reach = set(idx[dist <= motion].tolist())
        switched = set(range(min(nl_, nh_), max(nl_, nh_)))
        if not reach - switched:
            if dn != 0:
                _record(lo, hi, dn)
            return
        if depth >= max_depth:
            if dn == 0:
                return
            raise ResolutionError(
                f"unresolved crossing in [{lo:.6g}, {hi:.6g}]: net {dn}, "
                f"{len(reach)} eigenvalues within reach of mu")
        mid = 0.5 * (lo + hi)
        resolve(lo, mid, depth + 1)
        resolve(mid, hi, depth + 1)

    def _record(lo, hi, dn):
        k = abs(dn)
        j = min(count(lo), count(hi))
        # sorted eigenvalue that switches side, refined to E(alpha*) = mu
        f = lambda a: ev.evals(a)[j] - mu
        astar = brentq(f, lo, hi, xtol=xtol) if f(lo) * f(hi) <= 0 else 0.5 * (lo + hi)
        flip = mirror and astar > 0.5
        H = family(1.0 - astar if flip else astar)
        mu_src = -mu if flip else mu
        e = ev.evals(astar)
        spread = float(np.max(np.abs(e[j:j + k] - mu))) + 1e-9
        w, v = eigh_window(H, mu_src - 2 * spread, mu_src + 2 * spread)
        if w.size < k:
            w, v = sl.eigh(H, driver="evr", check_finite=False)
        order = np.argsort(np.abs(w - mu_src))[:k]
        wt = float(np.mean(localization_weights(v[:, order], coords, centers, radius)))
        energy = float(np.mean(w[order]))
        res.crossings.append(Crossing(float(astar), -int(np.sign(dn)), k, wt,
                                      -energy if flip else energy, wt > 0.5))

    for lo, hi in zip(alphas[:-1], alphas[1:]):
        resolve(lo, hi, 0)

    for a in alphas:
        e = ev.evals(a)
        sel = np.nonzero((e >= window[0]) & (e <= window[1]))[0]
        if curve_weights:
            src = 1.0 - a if (mirror and a > 0.5) else a
            lo_w, hi_w = (-window[1], -window[0]) if (mirror and a > 0.5) else window
            w, v = eigh_window(family(src), lo_w, hi_w)
            wts = localization_weights(v, coords, centers, radius)
            if mirror and a > 0.5:
                w, wts = -w[::-1], wts[::-1]
            for i, (E, x) in enumerate(zip(w, wts)):
                res.curves.append((float(a), i, float(E), float(x)))
        else:
            for i, j in enumerate(sel):
                res.curves.append((float(a), i, float(e[j]), float("nan")))
    res.crossings.sort(key=lambda c: c.alpha)
    res.n_diagonalizations = ev.count
    return res


def z2_spectral_flow(family: FluxFamily, mu: float, alphas=None, radius: float = 6.0,
                     check_alphas=(0.2, 0.35), tol: float = 1e-8, **kw) -> tuple[int, SpectralFlowResult]:
    """Flux-localized crossings of ``mu`` over ``alpha in [0, 1/2]``, mod 2.

    Raises
    ------
    ValueError
        If ``sigma(H_alpha) != sigma(H_{1-alpha})`` at the check points.
    """
    for a in check_alphas:
        d = np.max(np.abs(eigvalsh(family(a)) - eigvalsh(family(1.0 - a))))
        if d > tol:
            raise ValueError(f"reflection symmetry violated at alpha={a}: {d:.2e}")
    alphas = np.linspace(0.0, 0.5, 21) if alphas is None else alphas
    r = spectral_flow(family, alphas, mu, radius=radius, mirror=False, alpha_range=(0.0, 0.5), **kw)
    return r.z2_flow, r


# ------------------------------------------------------------ trace formula

def _gauss_panels(n_panels: int, nodes: int = 4, a: float = 0.0, b: float = 1.0):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, n_panels + 1)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w)
    return np.concatenate(xs), np.concatenate(ws)


def trace_integrand(family: FluxFamily, switch: SwitchFunction, alpha: float, mask: np.ndarray,
                    h: float = 1e-4) -> float:
    """``Tr(Pi_w g'(H_alpha) dH/dalpha Pi_w)`` with a central difference."""
    H = family(alpha)
    dH = (family(alpha + h) - family(alpha - h)) / (2 * h)
    w, v = eigh_window(H, switch.a, switch.b)
    if w.size == 0:
        return 0.0
    gp = switch.dg(w)
    # Tr(Pi g' dH Pi) = sum_k g'(E_k) <v_k| dH Pi |v_k>
    t = np.einsum("ik,ik->k", v.conj(), dH @ (v * mask[:, None]))
    return float(np.real(np.sum(gp * t)))


def spectral_flow_trace(family: FluxFamily, switch: SwitchFunction, window_mask=None,
                        half_width: int | None = None, panels: int = 4, nodes: int = 4, h: float = 1e-4,
                        tol: float = 0.02, max_panels: int = 64, return_info: bool = False):
    """``-int_0^1 Tr(Pi_w g'(H_alpha) dH_alpha Pi_w) dalpha``.

    ``Pi_w`` defaults to the box of half-width ``half_width`` around the flux
    cells; ``half_width`` defaults to 8, reduced to stay 3 sites clear of
    any open edge.  Composite Gauss-Legendre quadrature is refined by doubling the
    number of panels until two successive values agree within ``tol``.

    Raises
    ------
    QuadratureError
        If no agreement is reached with ``max_panels`` panels.
    """
    if window_mask is None:
        c = family.coords()
        ctr = family.centers()
        if len(ctr) == 0:
            return (0.0, {}) if return_info else 0.0
        if half_width is None:
            d = min(float(family.space.distance_to_boundary(x, y)) for x, y in ctr)
            half_width = int(min(8, np.floor(d) - 3))
        window_mask = np.zeros(len(c), bool)
        for x, y in ctr:
            window_mask |= (np.abs(c[:, 0] - x) <= half_width) & (np.abs(c[:, 1] - y) <= half_width)
    mask = np.asarray(window_mask, float)
    cache = {}

    def f(a):
        k = round(float(a), 14)
        if k not in cache:
            cache[k] = trace_integrand(family, switch, a, mask, h)
        return cache[k]

    prev = None
    n = panels
    history = []
    while n <= max_panels:
        x, w = _gauss_panels(n, nodes)
        val = -float(np.sum(w * np.array([f(a) for a in x])))
        history.append((n, val))
        if prev is not None and abs(val - prev) < tol:
            info = {"panels": n, "history": history, "evaluations": len(cache)}
            return (val, info) if return_info else val
        prev = val
        n *= 2
    raise QuadratureError(f"trace quadrature did not converge: {history}")


# -------------------------------------------------------------- kernel index

@dataclass
class KernelReport:
    dim: int
    ind2: int
    energies: np.ndarray
    localized_dim: int | None = None
    split_ratio: float = np.inf
    smallest: float = np.inf


def kernel_index(H, E0: float = 0.0, gap: float | None = None, jump: float = 10.0,
                 coords=None, centers=None, radius: float | None = None) -> KernelReport:
    """Number of eigenvalues clustered at ``E0`` and its parity.

    Eigenvalues are sorted by ``|E - E0|``; the cluster ends at the largest
    multiplicative gap (at least ``jump``) between consecutive magnitudes
    below ``gap / 5``.  If ``coords``, ``centers`` and ``radius`` are given,
    ``localized_dim`` counts the cluster states concentrated near a center
    (eigenvalues above 1/2 of the compressed disk projector) and ``ind2`` is
    its parity; otherwise ``ind2 = dim mod 2``.

    Raises
    ------
    IndeterminateKernelError
        If eigenvalues below the cap show no jump of at least ``jump``.
    """
    H = np.asarray(H)
    if gap is None:
        raise ValueError("kernel_index needs the reference gap scale")
    cap = gap / 5.0
    lo, hi = E0 - cap, E0 + cap
    w, v = eigh_window(H, lo, hi)
    d = np.sort(np.abs(w - E0))
    order = np.argsort(np.abs(w - E0))
    if d.size == 0:
        return KernelReport(0, 0, w, 0 if coords is not None else None)
    mags = np.r_[np.maximum(d, 1e-300), cap]
    ratios = mags[1:] / mags[:-1]
    i = int(np.argmax(ratios))
    if ratios[i] < jump:
        raise IndeterminateKernelError(
            f"no cluster separation near E0={E0}: |E-E0| = {np.array2string(d[:8], precision=3)}")
    dim = i + 1
    if d[0] >= cap:
        dim = 0
    loc = None
    if coords is not None and radius is not None and dim > 0:
        V = v[:, order[:dim]]
        dist = np.min(np.hypot(coords[:, None, 0] - centers[None, :, 0],
                               coords[:, None, 1] - centers[None, :, 1]), axis=1)
        Pi = dist <= radius
        C = V[Pi].conj().T @ V[Pi]
        loc = int(np.sum(np.linalg.eigvalsh(C) > 0.5))
    elif coords is not None:
        loc = 0
    ind2 = (loc if loc is not None else dim) % 2
    return KernelReport(dim, ind2, w[order[:dim]], loc, float(ratios[i]), float(d[0]))
