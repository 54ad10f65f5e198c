"""Magnetic potentials on the edges of Z^2, holonomies and gauge functions.

A potential is stored as a vectorized rule ``(n1, n2, j) -> A(n, n + e_j)``
for ``j in {1, 2}``; the reversed edge carries the negative value.  Rules are
patch independent, so the same potential can be evaluated on any space.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import GeometryError, LatticeSpace

HOLONOMY_TOL = 1e-9


class GaugeError(ValueError):
    """Potentials that are not gauge equivalent, or invalid flux placement."""


def _as_cell(m) -> tuple[int, int]:
    return int(m[0]), int(m[1])


class MagneticPotential:
    """Real antisymmetric edge function given by a rule for forward edges.

    Parameters
    ----------
    rule : callable
        ``rule(n1, n2, j)`` returns ``A(n, n + e_j)`` for integer arrays.
    description : str
        Human readable field description.
    """

    def __init__(self, rule: Callable, description: str = ""):
        self._rule = rule
        self.description = description

    def __call__(self, n1, n2, j: int) -> np.ndarray:
        n1 = np.asarray(n1)
        n2 = np.asarray(n2)
        out = np.asarray(self._rule(n1, n2, j), dtype=float)
        return np.broadcast_to(out, np.broadcast(n1, n2).shape).astype(float)

    def edge(self, n, m) -> float:
        """``A(n, m)`` for nearest neighbours, 0 otherwise."""
        d = (m[0] - n[0], m[1] - n[1])
        if d == (1, 0):
            return float(self(n[0], n[1], 1))
        if d == (0, 1):
            return float(self(n[0], n[1], 2))
        if d == (-1, 0):
            return -float(self(m[0], m[1], 1))
        if d == (0, -1):
            return -float(self(m[0], m[1], 2))
        return 0.0

    def __add__(self, other: "MagneticPotential") -> "MagneticPotential":
        return MagneticPotential(lambda a, b, j: self(a, b, j) + other(a, b, j),
                                 f"{self.description} + {other.description}")

    def __sub__(self, other: "MagneticPotential") -> "MagneticPotential":
        return MagneticPotential(lambda a, b, j: self(a, b, j) - other(a, b, j),
                                 f"{self.description} - {other.description}")

    def __mul__(self, c: float) -> "MagneticPotential":
        return MagneticPotential(lambda a, b, j: c * self(a, b, j), f"{c}*({self.description})")

    __rmul__ = __mul__

    def __neg__(self) -> "MagneticPotential":
        return self * -1.0

    def __repr__(self):
        return f"MagneticPotential({self.description!r})"


def zero_potential() -> MagneticPotential:
    return MagneticPotential(lambda a, b, j: np.zeros(np.broadcast(a, b).shape), "0")


def _cell_sum(A: MagneticPotential, n1, n2) -> np.ndarray:
    # n -> n+e1 -> n+e1+e2 -> n+e2 -> n
    return A(n1, n2, 1) + A(n1 + 1, n2, 2) - A(n1, n2 + 1, 1) - A(n1, n2, 2)


def holonomy(A: MagneticPotential, m, space: LatticeSpace | None = None) -> float:
    """Sum of ``A`` around the oriented cell with lower-left corner ``m``.

    If ``space`` is given the cell must lie inside it.
    """
    m1, m2 = _as_cell(m)
    if space is not None and not np.all(space.contains([m1, m1 + 1], [m2, m2 + 1])):
        raise GeometryError(f"cell {m} touches outside the patch")
    return float(_cell_sum(A, np.array(m1), np.array(m2)))


def holonomy_map(A: MagneticPotential, space: LatticeSpace) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Holonomy of every interior cell; returns ``(m1_grid, m2_grid, values)``."""
    a = np.arange(space.x_range[0], space.x_range[1])
    b = np.arange(space.y_range[0], space.y_range[1])
    m1, m2 = np.meshgrid(a, b, indexing="ij")
    return m1, m2, _cell_sum(A, m1, m2)


def standard_gauge(field) -> MagneticPotential:
    """Spanning-tree gauge for a field ``B(n1, n2)`` (callable or constant).

    Only horizontal edges carry potential: ``A(n, n+e1) = -sum_{k=0}^{n2-1} B(n1, k)``
    for ``n2 > 0`` and ``+sum_{k=1}^{|n2|} B(n1, -k)`` for ``n2 < 0``.
    """
    if callable(field):
        B = field
    else:
        b0 = float(field)
        B = lambda a, b: np.full(np.broadcast(a, b).shape, b0)

    def rule(n1, n2, j):
        n1, n2 = np.broadcast_arrays(np.asarray(n1), np.asarray(n2))
        out = np.zeros(n1.shape)
        if j == 2 or n1.size == 0:
            return out
        kmax = int(np.max(np.abs(n2)))
        for k in range(kmax):
            up = n2 > k
            if np.any(up):
                out[up] -= np.asarray(B(n1[up], np.full(up.sum(), k)), float)
            dn = n2 < -k
            if np.any(dn):
                out[dn] += np.asarray(B(n1[dn], np.full(dn.sum(), -(k + 1))), float)
        return out

    return MagneticPotential(rule, "standard")


def uniform_field_gauge(B: float, kind: str = "symmetric") -> MagneticPotential:
    """Constant field ``B`` in the symmetric or Landau gauge."""
    B = float(B)
    if kind == "symmetric":
        def rule(n1, n2, j):
            return -0.5 * B * n2 if j == 1 else 0.5 * B * n1
    elif kind == "landau":
        def rule(n1, n2, j):
            return -B * n2 if j == 1 else 0.0 * n1
    else:
        raise ValueError(f"unknown uniform gauge {kind!r}")
    return MagneticPotential(lambda a, b, j: np.asarray(rule(np.asarray(a, float), np.asarray(b, float), j), float),
                             f"{kind}(B={B})")


def ab_gauge(alpha: float, m=(-1, -1)) -> MagneticPotential:
    """Aharonov-Bohm potential of flux ``alpha`` through the cell at ``m``.

    Centered at ``m' = m + (1/2, 1/2)``; linear in ``alpha``.
    """
    alpha = float(alpha)
    c1, c2 = m[0] + 0.5, m[1] + 0.5

    def rule(n1, n2, j):
        x = np.asarray(n1, float) - c1
        y = np.asarray(n2, float) - c2
        if j == 1:
            return -alpha * (np.arctan((x + 1) / y) - np.arctan(x / y))
        return alpha * (np.arctan((y + 1) / x) - np.arctan(y / x))

    return MagneticPotential(rule, f"ab(alpha={alpha}, m={tuple(m)})")


def half_line_gauge(alpha: float, m=(-1, -1)) -> MagneticPotential:
    """Flux ``alpha`` through cell ``m`` carried by the horizontal edges
    ``(n, n+e1)`` with ``n1 = m1`` and ``n2 > m2``."""
    alpha = float(alpha)
    m1, m2 = _as_cell(m)

    def rule(n1, n2, j):
        n1, n2 = np.broadcast_arrays(np.asarray(n1), np.asarray(n2))
        if j == 2:
            return np.zeros(n1.shape)
        return np.where((n1 == m1) & (n2 > m2), -2 * np.pi * alpha, 0.0)

    return MagneticPotential(rule, f"half_line(alpha={alpha}, m={tuple(m)})")


def flux_tube_gauge(alpha: float, m, gauge: str = "ab") -> MagneticPotential:
    if gauge == "ab":
        return ab_gauge(alpha, m)
    if gauge == "half_line":
        return half_line_gauge(alpha, m)
    raise ValueError(f"unknown flux gauge {gauge!r}")


@dataclass(frozen=True)
class GaugeFunction:
    """Site function ``G`` on a patch, stored as an ``(nx, ny)`` array."""

    space: LatticeSpace
    values: np.ndarray

    def __call__(self, n1, n2):
        ix = np.asarray(n1) - self.space.x_range[0]
        iy = np.asarray(n2) - self.space.y_range[0]
        return self.values[ix, iy]

    def diagonal(self) -> np.ndarray:
        """Values repeated over the fiber, in flat index order."""
        return np.repeat(self.values.ravel(), self.space.orbitals)

    def unitary(self, sign: float = 1.0) -> np.ndarray:
        """Diagonal matrix ``exp(i * sign * G(X))``."""
        return np.diag(np.exp(1j * sign * self.diagonal()))


def _edge_arrays(A: MagneticPotential, space: LatticeSpace):
    s = space.sites()
    n1 = s[:, 0].reshape(space.nx, space.ny)
    n2 = s[:, 1].reshape(space.nx, space.ny)
    return A(n1, n2, 1), A(n1, n2, 2)


def gauge_transform_solve(A: MagneticPotential, A_prime: MagneticPotential,
                          space: LatticeSpace, tol: float = HOLONOMY_TOL) -> GaugeFunction:
    """Gauge function ``G`` with ``A(n,m) - A'(n,m) = G(n) - G(m)`` on the patch.

    With this ``G`` one has ``S^{A'} = e^{iG(X)} S^A e^{-iG(X)}``, i.e.
    ``conjugate(S^A, G.unitary(-1))``.  ``G`` vanishes
    at the origin (or at the lower-left corner if the origin is outside).
    Edges across a periodic seam are ignored.

    Raises
    ------
    GaugeError
        If the holonomies differ by more than ``tol`` on some interior cell,
        or if the row-first and column-first path sums disagree.
    """
    D = A - A_prime
    _, _, h = holonomy_map(D, space)
    if h.size and np.max(np.abs(h)) > tol:
        raise GaugeError(f"holonomy mismatch {np.max(np.abs(h)):.3e} > {tol}")
    d1, d2 = _edge_arrays(D, space)
    d1, d2 = d1[:-1, :], d2[:, :-1]
    # stepping n -> n + e_j changes G by -D(n, n+e_j)
    nx, ny = space.nx, space.ny
    # row-first: along the bottom row, then up every column
    g_row = np.zeros((nx, ny))
    g_row[1:, 0] = -np.cumsum(d1[:, 0])
    g_row[:, 1:] = g_row[:, :1] - np.cumsum(d2, axis=1)
    # column-first: up the left column, then along every row
    g_col = np.zeros((nx, ny))
    g_col[0, 1:] = -np.cumsum(d2[0, :])
    g_col[1:, :] = g_col[:1, :] - np.cumsum(d1, axis=0)
    if np.max(np.abs(g_row - g_col)) > tol:
        raise GaugeError("gauge function depends on the path")
    if space.contains(0, 0):
        ref = g_row[-space.x_range[0], -space.y_range[0]]
    else:
        ref = g_row[0, 0]
    return GaugeFunction(space, g_row - ref)


def flux_gauge_function(space: LatticeSpace, m=(-1, -1)) -> GaugeFunction:
    """Closed-form ``G`` with ``A_AB - A_HL = alpha (G(n) - G(m))`` for unit flux.

    ``G(n) = -[pi * 1{n1 > m1'} + arctan((n2 - m2') / (n1 - m1'))]``.
    """
    s = space.sites()
    x = s[:, 0] - (m[0] + 0.5)
    y = s[:, 1] - (m[1] + 0.5)
    assert np.all(x != 0) and np.all(y != 0)
    g = -(np.pi * (x > 0) + np.arctan(y / x))
    return GaugeFunction(space, g.reshape(space.nx, space.ny))


def flux_phase_diagonal(space: LatticeSpace, m=(-1, -1), alpha: float = 1.0) -> np.ndarray:
    """Diagonal of ``F^alpha = exp(-i alpha G(X))``; at ``alpha = 1`` this is
    ``-z/|z|`` with ``z = (n1 - m1') + i (n2 - m2')``."""
    return np.exp(-1j * alpha * flux_gauge_function(space, m).diagonal())


def flux_phase(space: LatticeSpace, m=(-1, -1), alpha: float = 1.0) -> np.ndarray:
    """Diagonal unitary ``F^alpha`` as a dense matrix."""
    return np.diag(flux_phase_diagonal(space, m, alpha))


def multi_flux_phase_diagonal(space: LatticeSpace, cells, charges=None) -> np.ndarray:
    """Product ``F' = F_(1) ... F_(L)`` of per-cell flux phases (diagonal)."""
    charges = [1] * len(cells) if charges is None else charges
    out = np.ones(space.dim, complex)
    for m, q in zip(cells, charges):
        out *= flux_phase_diagonal(space, m, 1.0) ** q
    return out


def combined_potential(B: float, alpha: float, cells, gauge: str = "ab",
                       field_gauge: str = "symmetric", charges=None) -> MagneticPotential:
    """Uniform field plus flux tubes of strength ``q * alpha`` through each cell."""
    A = uniform_field_gauge(B, field_gauge)
    charges = [1] * len(cells) if charges is None else charges
    for m, q in zip(cells, charges):
        A = A + flux_tube_gauge(q * alpha, m, gauge)
    return A


def check_flux_placement(space: LatticeSpace, cells, gauge: str, charges=None, alpha: float = 1.0):
    """Reject flux tubes that a periodic patch cannot carry consistently."""
    if not cells or alpha == 0:
        return
    charges = [1] * len(cells) if charges is None else list(charges)
    for m in cells:
        if not np.all(space.contains([m[0], m[0] + 1], [m[1], m[1] + 1])):
            raise GeometryError(f"flux cell {tuple(m)} outside the patch")
    if space.boundary == "open":
        return
    if space.boundary == "periodic_x":
        raise GaugeError("flux tubes on periodic_x strips are not supported")
    if sum(charges) != 0:
        raise GaugeError("periodic_xy requires flux-antiflux pairs (total charge 0)")
    if gauge != "half_line" or len({m[0] for m in cells}) != 1:
        raise GaugeError("on periodic_xy use half_line gauge with all cells in one column")
