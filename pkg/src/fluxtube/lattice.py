"""Finite rectangular patches of Z^2 with an orbital fiber.

Flat indices are site-major: ``index = site * L + orbital`` with
``site = (n1 - x_min) * ny + (n2 - y_min)``.  Operators on a patch are
plain dense ``numpy`` arrays of shape ``(dim, dim)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

BOUNDARIES = ("open", "periodic_x", "periodic_xy")


class GeometryError(ValueError):
    """Invalid lattice geometry or region placement."""


@dataclass(frozen=True)
class LatticeSpace:
    """Rectangular patch ``[x_min, x_max] x [y_min, y_max]`` with fiber C^L."""

    x_range: tuple[int, int]
    y_range: tuple[int, int]
    orbitals: int = 1
    boundary: str = "open"

    def __post_init__(self):
        (x0, x1), (y0, y1) = self.x_range, self.y_range
        if x1 < x0 or y1 < y0:
            raise GeometryError(f"empty range {self.x_range} x {self.y_range}")
        if self.orbitals < 1:
            raise GeometryError("orbitals must be >= 1")
        if self.boundary not in BOUNDARIES:
            raise GeometryError(f"unknown boundary {self.boundary!r}")
        object.__setattr__(self, "x_range", (int(x0), int(x1)))
        object.__setattr__(self, "y_range", (int(y0), int(y1)))

    @property
    def nx(self) -> int:
        return self.x_range[1] - self.x_range[0] + 1

    @property
    def ny(self) -> int:
        return self.y_range[1] - self.y_range[0] + 1

    @property
    def n_sites(self) -> int:
        return self.nx * self.ny

    @property
    def dim(self) -> int:
        return self.n_sites * self.orbitals

    @property
    def periodic_x(self) -> bool:
        return self.boundary in ("periodic_x", "periodic_xy")

    @property
    def periodic_y(self) -> bool:
        return self.boundary == "periodic_xy"

    def sites(self) -> np.ndarray:
        """Integer coordinates of all sites, shape ``(n_sites, 2)``, site order."""
        n1, n2 = np.meshgrid(
            np.arange(self.x_range[0], self.x_range[1] + 1),
            np.arange(self.y_range[0], self.y_range[1] + 1),
            indexing="ij",
        )
        return np.column_stack([n1.ravel(), n2.ravel()])

    def contains(self, n1, n2) -> np.ndarray:
        n1, n2 = np.asarray(n1), np.asarray(n2)
        return (
            (n1 >= self.x_range[0]) & (n1 <= self.x_range[1])
            & (n2 >= self.y_range[0]) & (n2 <= self.y_range[1])
        )

    def site_index(self, n1, n2):
        """Site number of ``(n1, n2)``; raises if outside the patch."""
        if not np.all(self.contains(n1, n2)):
            raise GeometryError("site outside the patch")
        return (np.asarray(n1) - self.x_range[0]) * self.ny + (np.asarray(n2) - self.y_range[0])

    def flatten(self, n1, n2, orbital=0):
        return self.site_index(n1, n2) * self.orbitals + np.asarray(orbital)

    def unflatten(self, index):
        index = np.asarray(index)
        site, orb = np.divmod(index, self.orbitals)
        ix, iy = np.divmod(site, self.ny)
        return ix + self.x_range[0], iy + self.y_range[0], orb

    def wrap(self, n1, n2):
        """Map coordinates back into the patch along periodic directions."""
        n1, n2 = np.asarray(n1), np.asarray(n2)
        if self.periodic_x:
            n1 = (n1 - self.x_range[0]) % self.nx + self.x_range[0]
        if self.periodic_y:
            n2 = (n2 - self.y_range[0]) % self.ny + self.y_range[0]
        return n1, n2

    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_range[0] + self.x_range[1]),
                0.5 * (self.y_range[0] + self.y_range[1]))

    def distance_to_boundary(self, n1, n2) -> np.ndarray:
        """Lattice distance to the nearest open edge (inf along periodic axes)."""
        n1, n2 = np.asarray(n1, float), np.asarray(n2, float)
        d = np.full(np.broadcast(n1, n2).shape, np.inf)
        if not self.periodic_x:
            d = np.minimum(d, np.minimum(n1 - self.x_range[0], self.x_range[1] - n1))
        if not self.periodic_y:
            d = np.minimum(d, np.minimum(n2 - self.y_range[0], self.y_range[1] - n2))
        return d

    def with_orbitals(self, orbitals: int) -> "LatticeSpace":
        return LatticeSpace(self.x_range, self.y_range, orbitals, self.boundary)


def build_lattice(x_range, y_range, orbitals: int = 1, boundary: str = "open") -> LatticeSpace:
    """Construct a patch; raises :class:`GeometryError` on empty ranges."""
    return LatticeSpace(tuple(x_range), tuple(y_range), int(orbitals), boundary)


def centered_lattice(nx: int, ny: int, orbitals: int = 1, boundary: str = "open") -> LatticeSpace:
    """``nx x ny`` patch placed so that the cell at (-1, -1) sits at its center."""
    x0 = -(nx // 2)
    y0 = -(ny // 2)
    return build_lattice((x0, x0 + nx - 1), (y0, y0 + ny - 1), orbitals, boundary)


@dataclass
class Region:
    """Set of lattice sites described by a vectorized predicate ``(n1, n2) -> bool``."""

    predicate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str = "region"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def mask(self, space: LatticeSpace) -> np.ndarray:
        key = (space.x_range, space.y_range)
        if key not in self._cache:
            s = space.sites()
            self._cache[key] = np.asarray(self.predicate(s[:, 0], s[:, 1]), bool)
        return self._cache[key]

    def sites(self, space: LatticeSpace) -> np.ndarray:
        return space.sites()[self.mask(space)]

    def orbital_mask(self, space: LatticeSpace) -> np.ndarray:
        return np.repeat(self.mask(space), space.orbitals)

    def __and__(self, other: "Region") -> "Region":
        return Region(lambda a, b: self.predicate(a, b) & other.predicate(a, b),
                      f"({self.name} & {other.name})")

    def __or__(self, other: "Region") -> "Region":
        return Region(lambda a, b: self.predicate(a, b) | other.predicate(a, b),
                      f"({self.name} | {other.name})")

    def __invert__(self) -> "Region":
        return Region(lambda a, b: ~np.asarray(self.predicate(a, b), bool), f"~{self.name}")

    # common shapes
    @classmethod
    def full(cls):
        return cls(lambda a, b: np.ones(np.shape(a), bool), "full")

    @classmethod
    def empty(cls):
        return cls(lambda a, b: np.zeros(np.shape(a), bool), "empty")

    @classmethod
    def box(cls, x_range, y_range):
        (x0, x1), (y0, y1) = x_range, y_range
        return cls(lambda a, b: (a >= x0) & (a <= x1) & (b >= y0) & (b <= y1),
                   f"box[{x0},{x1}]x[{y0},{y1}]")

    @classmethod
    def quarter_plane(cls, cut1: int = 0, cut2: int = 0):
        """Sites with ``n1 < cut1`` and ``n2 > cut2``."""
        return cls(lambda a, b: (a < cut1) & (b > cut2), f"quarter[{cut1},{cut2}]")

    @classmethod
    def left_of(cls, cut1: int):
        return cls(lambda a, b: a < cut1, f"n1<{cut1}")

    @classmethod
    def below(cls, cut2: float):
        return cls(lambda a, b: b < cut2, f"n2<{cut2}")

    @classmethod
    def column(cls, r: int):
        return cls(lambda a, b: a == r, f"column{r}")

    @classmethod
    def strip(cls, radius: int):
        """Vertical strip ``|n1| <= radius``."""
        return cls(lambda a, b: np.abs(a) <= radius, f"strip{radius}")

    @classmethod
    def disk(cls, center, radius: float):
        c1, c2 = center
        return cls(lambda a, b: (a - c1) ** 2 + (b - c2) ** 2 <= radius ** 2,
                   f"disk({c1},{c2};{radius})")

    @classmethod
    def from_sites(cls, sites):
        pts = {(int(a), int(b)) for a, b in sites}
        return cls(lambda a, b: np.array([(int(x), int(y)) in pts
                                          for x, y in zip(np.ravel(a), np.ravel(b))],
                                         bool).reshape(np.shape(a)), "sites")


def region_projector(space: LatticeSpace, region: Region) -> np.ndarray:
    """Diagonal 0/1 projector onto ``region`` (times the identity on the fiber)."""
    return np.diag(region.orbital_mask(space).astype(float))


def position_operators(space: LatticeSpace) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal position operators ``X1, X2`` (raw coordinates, no wrapping)."""
    s = np.repeat(space.sites(), space.orbitals, axis=0).astype(float)
    return np.diag(s[:, 0]), np.diag(s[:, 1])


def position_diagonals(space: LatticeSpace) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals of ``X1, X2`` as vectors of length ``dim``."""
    s = np.repeat(space.sites(), space.orbitals, axis=0).astype(float)
    return s[:, 0], s[:, 1]


def fiber_blocks_to_matrix(blocks, n_sites: int, inner: int) -> np.ndarray:
    """Assemble a ``k x k`` grid of blocks, each ``(n_sites*inner)^2``, into one
    operator whose fiber index is ``grading * inner + orbital``."""
    k = len(blocks)
    d = n_sites * inner
    out = np.zeros((n_sites, k, inner, n_sites, k, inner), dtype=complex)
    for a in range(k):
        for b in range(k):
            blk = blocks[a][b]
            if blk is None:
                continue
            out[:, a, :, :, b, :] = np.asarray(blk).reshape(n_sites, inner, n_sites, inner)
    return out.reshape(k * d, k * d)


def matrix_to_fiber_blocks(m: np.ndarray, n_sites: int, inner: int, k: int = 2):
    """Inverse of :func:`fiber_blocks_to_matrix`."""
    d = n_sites * inner
    t = np.asarray(m).reshape(n_sites, k, inner, n_sites, k, inner)
    return [[t[:, a, :, :, b, :].reshape(d, d) for b in range(k)] for a in range(k)]


def fiber_operator(space: LatticeSpace, local: np.ndarray) -> np.ndarray:
    """``1_sites (x) local`` for an ``L x L`` fiber matrix."""
    return np.kron(np.eye(space.n_sites), np.asarray(local))
