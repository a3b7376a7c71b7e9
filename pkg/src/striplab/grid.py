"""Discretized strip and cuboid geometry.

A grid covers ``L`` unit cells per surface (x1) axis with ``a`` sites per
cell per axis (spacing ``h = 1/a``) and ``M`` sites per transverse (x2)
axis.  Transverse coordinates are centered so the surface hyperplane
``x2 = 0`` falls between the two middle layers (``M`` even)::

    x1[i] = i * h,                 i in [0, a*L)
    x2[k] = (k - M/2 + 1/2) * h,   k in [0, M)

Sites are addressed by a flat, site-major index with transverse axes
fastest; the index <-> coordinate maps are exact bijections.  GridSpec is
immutable and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import CapExceeded, InvalidParam

HARD_SITE_CAP = 2_000_000


class Arm(NamedTuple):
    """One stencil arm of a site.

    ``neighbor`` is the flat index of the adjacent site, or ``None`` when
    the arm leaves the domain; then ``(axis, direction)`` names the
    boundary face it crosses.
    """

    neighbor: Optional[int]
    axis: int
    direction: int


@dataclass(frozen=True)
class GridSpec:
    d1: int
    d2: int
    L: int
    a: int
    M: int

    def __post_init__(self):
        if self.d1 not in (1, 2) or self.d2 not in (1, 2):
            raise InvalidParam(f"d1, d2 must be 1 or 2, got d1={self.d1}, d2={self.d2}")
        if self.L < 1 or self.a < 1:
            raise InvalidParam(f"L >= 1 and a >= 1 required, got L={self.L}, a={self.a}")
        if self.M < 2 or self.M % 2 != 0:
            raise InvalidParam(f"M must be even and >= 2, got M={self.M}")

    @property
    def h(self) -> float:
        return 1.0 / self.a

    @property
    def n_axes(self) -> int:
        return self.d1 + self.d2

    @property
    def shape(self) -> tuple:
        """Per-axis site counts, x1 axes first."""
        return (self.a * self.L,) * self.d1 + (self.M,) * self.d2

    @property
    def n_sites(self) -> int:
        return math.prod(self.shape)

    @property
    def n_cells(self) -> int:
        return self.L ** self.d1

    # -- index & coordinate maps ------------------------------------------

    def index_of(self, coords) -> np.ndarray:
        """Flat site index for integer coordinates (vectorized)."""
        coords = np.asarray(coords)
        return np.ravel_multi_index(tuple(coords.T) if coords.ndim == 2 else tuple(coords), self.shape)

    def coords_of(self, index) -> np.ndarray:
        """Integer coordinates for flat indices; shape (..., n_axes)."""
        return np.stack(np.unravel_index(np.asarray(index), self.shape), axis=-1)

    def coord_arrays(self) -> tuple:
        """Per-axis integer coordinate of every site, each shape (n_sites,)."""
        grids = np.unravel_index(np.arange(self.n_sites), self.shape)
        return tuple(g for g in grids)

    def x1_positions(self) -> np.ndarray:
        """Physical x1 positions of all sites, shape (n_sites, d1)."""
        coords = self.coord_arrays()
        return np.stack([coords[j] * self.h for j in range(self.d1)], axis=-1)

    def x2_positions(self) -> np.ndarray:
        """Physical x2 positions of all sites, shape (n_sites, d2).

        Spans [-M*h/2, M*h/2) symmetrically about the surface.
        """
        coords = self.coord_arrays()
        return np.stack(
            [(coords[self.d1 + j] - self.M / 2 + 0.5) * self.h for j in range((self.d2))],
            axis=-1,
        )

    def x1_frac_positions(self) -> np.ndarray:
        """x1 positions folded to the unit cell [0,1)^d1, shape (n_sites, d1)."""
        coords = self.coord_arrays()
        return np.stack([(coords[j] % self.a) * self.h for j in range(self.d1)], axis=-1)

    def cell_of_sites(self) -> np.ndarray:
        """Unit-cell index per x1 axis of every site, shape (n_sites, d1)."""
        coords = self.coord_arrays()
        return np.stack([coords[j] // self.a for j in range(self.d1)], axis=-1)

    def x2_layer_coordinate(self, k) -> np.ndarray:
        """Physical x2 coordinate of transverse layer index k."""
        return (np.asarray(k) - self.M / 2 + 0.5) * self.h

    # -- bond and face enumeration (used by operator assembly) ------------

    def interior_bonds(self, axis: int):
        """(from, to) flat-index arrays of all interior bonds along one axis."""
        n_ax = self.shape[axis]
        idx = np.arange(self.n_sites).reshape(self.shape)
        src = np.moveaxis(idx, axis, 0)[: n_ax - 1].ravel()
        dst = np.moveaxis(idx, axis, 0)[1:].ravel()
        return src, dst

    def face_sites(self, axis: int, direction: int) -> np.ndarray:
        """Flat indices of the sites on one boundary face."""
        idx = np.arange(self.n_sites).reshape(self.shape)
        sl = -1 if direction > 0 else 0
        return np.moveaxis(idx, axis, 0)[sl].ravel()

    def is_x1_axis(self, axis: int) -> bool:
        return axis < self.d1


def build_grid(d1: int, d2: int, L: int, a: int, M: int, cap: int = HARD_SITE_CAP) -> GridSpec:
    """Validated grid constructor.

    Raises CapExceeded if the site count exceeds ``cap`` and InvalidParam
    for out-of-range dimensions or odd M.
    """
    grid = GridSpec(d1=d1, d2=d2, L=L, a=a, M=M)
    if grid.n_sites > cap:
        raise CapExceeded(f"{grid.n_sites} sites exceeds cap {cap}")
    return grid


def neighbors(grid: GridSpec, site: int) -> list:
    """All 2*(d1+d2) stencil arms of a site.

    Arms that stay inside the domain carry the neighbor's flat index; arms
    that leave it carry ``None`` plus the face (axis, direction) they cross.
    """
    if not 0 <= site < grid.n_sites:
        raise InvalidParam(f"site {site} out of range for grid with {grid.n_sites} sites")
    coords = np.array(np.unravel_index(site, grid.shape))
    arms = []
    for axis in range(grid.n_axes):
        for direction in (-1, +1):
            c = coords.copy()
            c[axis] += direction
            if 0 <= c[axis] < grid.shape[axis]:
                arms.append(Arm(int(np.ravel_multi_index(tuple(c), grid.shape)), axis, direction))
            else:
                arms.append(Arm(None, axis, direction))
    return arms


# -- boundary condition specs ---------------------------------------------


@dataclass(frozen=True)
class Dirichlet:
    pass


@dataclass(frozen=True)
class Neumann:
    pass


@dataclass(frozen=True)
class Bloch:
    """Phase-twisted wrap across the x1 extent; theta_j in [-pi, pi] per axis."""

    theta: tuple

    def __post_init__(self):
        th = tuple(float(t) for t in np.atleast_1d(self.theta))
        object.__setattr__(self, "theta", th)
        if any(abs(t) > np.pi + 1e-12 for t in th):
            raise InvalidParam(f"Bloch angles must lie in [-pi, pi], got {th}")

    @property
    def is_real(self) -> bool:
        """True when every phase is +-1 and the operator stays real symmetric."""
        return all(t == 0.0 or abs(t) == np.pi for t in self.theta)


@dataclass(frozen=True)
class Mezincescu:
    """Ground-state boundary condition; ghost values read from a reference.

    ``ref`` is a GroundStateRef whose cell grid shares the spacing of the
    domain and is at least two layers deeper when used on x2 faces.
    """

    ref: object  # GroundStateRef; kept untyped to avoid a circular import


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary conditions per axis group: x1 faces and x2 faces."""

    x1: object
    x2: object

    def __post_init__(self):
        if isinstance(self.x2, Bloch):
            raise InvalidParam("Bloch boundary conditions are only admissible on x1 axes")
        for bc, name in ((self.x1, "x1"), (self.x2, "x2")):
            if not isinstance(bc, (Dirichlet, Neumann, Bloch, Mezincescu)):
                raise InvalidParam(f"unknown boundary condition for {name}: {bc!r}")


DIRICHLET = Dirichlet()
NEUMANN = Neumann()


def bc_all_dirichlet() -> BoundarySpec:
    return BoundarySpec(x1=DIRICHLET, x2=DIRICHLET)


def bc_all_neumann() -> BoundarySpec:
    return BoundarySpec(x1=NEUMANN, x2=NEUMANN)
