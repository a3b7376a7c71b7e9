"""Potential ingredients on a grid.

The total potential decomposes as ``V = U_b + V_b + V_s``:

* ``U_b``  -- deterministic bulk part, periodic per unit cell in x1,
* ``V_b``  -- nonnegative i.i.d. random bulk part (may vanish),
* ``V_s``  -- alloy-type random surface part, one coupling per unit cell,

plus the deterministic floor ``U_s`` obtained by pinning every coupling to
``q_min``.  Continuum single-site profiles are evaluated pointwise at grid
nodes.  All sampling is a pure function of (parameters, seed): identical
seeds give bit-identical fields no matter how samples are partitioned
across workers.

Alloy sums use a per-site symmetric truncation window: a site in unit cell
``c`` sums contributions from cells within sup-distance ``R`` of ``c``
(``R`` is the profile's support or truncation radius).  This keeps the
pinned floor exactly periodic on the grid and preserves the pointwise
ordering ``U_s <= V_s <= 0`` term by term.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidParam, ShapeMismatch, TailTooLarge
from .grid import GridSpec, build_grid, bc_all_dirichlet, bc_all_neumann
from .rng import ROLE_BULK, ROLE_SURFACE, stream

DEFAULT_TAIL_TOL = 1e-8


# -- single-site profiles ----------------------------------------------------


@dataclass(frozen=True)
class CompactProfile:
    """Box-supported single-site potential.

    f(x1, x2) = amplitude on {|x1|_inf <= x1_halfwidth} x {x2 in [lo, hi)^d2},
    zero elsewhere.  Nonnegative, positive on a nonempty open set.
    """

    x1_halfwidth: float = 0.25
    x2_box: tuple = (-1.0, 1.0)
    amplitude: float = 1.0

    def __post_init__(self):
        if self.amplitude <= 0:
            raise InvalidParam("profile amplitude must be positive")
        if self.x1_halfwidth <= 0 or self.x2_box[0] >= self.x2_box[1]:
            raise InvalidParam("profile support box must be nonempty")

    def window_radius(self, grid: GridSpec) -> int:
        # farthest cell whose box can reach a site of another cell
        return int(math.floor(self.x1_halfwidth + (grid.a - 1) * grid.h + 1e-12))

    def evaluate(self, x1_offset: np.ndarray, x2: np.ndarray) -> np.ndarray:
        inside_x1 = np.all(np.abs(x1_offset) <= self.x1_halfwidth + 1e-12, axis=-1)
        lo, hi = self.x2_box
        inside_x2 = np.all((x2 >= lo) & (x2 < hi), axis=-1)
        return self.amplitude * (inside_x1 & inside_x2)

    def tail_bound(self, d1: int) -> float:
        return 0.0  # compact support: no neglected tail


@dataclass(frozen=True)
class PowerLawProfile:
    """Slowly decaying single-site potential.

    f(x1, x2) = f0 * max(|x1|_inf, 1)^(-alpha) * 1[x2 in box], so that
    f_lower * |x1|^(-alpha) * 1_box <= f <= f0 * |x1|^(-alpha) for |x1| >= 1
    holds with f_lower = f0 (and any smaller declared f_lower).  Lattice
    sums are truncated at ``truncation_radius`` cells; the neglected tail is
    bounded and recorded in the field provenance.
    """

    alpha: float
    f0: float = 1.0
    f_lower: float = 1.0
    x2_box: tuple = (-1.0, 1.0)
    truncation_radius: int = 64

    def __post_init__(self):
        if self.f0 <= 0 or not (0 < self.f_lower <= self.f0):
            raise InvalidParam("need 0 < f_lower <= f0")
        if self.truncation_radius < 2:
            raise InvalidParam("truncation_radius must be >= 2 cells")
        if self.x2_box[0] >= self.x2_box[1]:
            raise InvalidParam("x2 support box must be nonempty")

    def validate_for_dimension(self, d1: int):
        if not (d1 < self.alpha <= d1 + 2):
            raise InvalidParam(
                f"power-law exponent must satisfy d1 < alpha <= d1+2, got alpha={self.alpha}, d1={d1}"
            )

    def window_radius(self, grid: GridSpec) -> int:
        return int(self.truncation_radius)

    def evaluate(self, x1_offset: np.ndarray, x2: np.ndarray) -> np.ndarray:
        r = np.max(np.abs(x1_offset), axis=-1)
        lo, hi = self.x2_box
        inside_x2 = np.all((x2 >= lo) & (x2 < hi), axis=-1)
        return self.f0 * np.maximum(r, 1.0) ** (-self.alpha) * inside_x2

    def tail_bound(self, d1: int) -> float:
        """Upper bound on the neglected sum over cells beyond the radius."""
        self.validate_for_dimension(d1)
        c_d1 = 2.0 if d1 == 1 else 8.0
        R = float(self.truncation_radius)
        return self.f0 * c_d1 * R ** (d1 - self.alpha) / (self.alpha - d1)


# -- coupling distributions --------------------------------------------------


@dataclass(frozen=True)
class UniformCouplings:
    """Couplings uniform on [q_min, q_max] with q_min < q_max < 0.

    Mass near the floor scales linearly in the window width, and the
    distribution is Lipschitz, i.e. Hoelder with exponent one.
    """

    q_min: float
    q_max: float

    def __post_init__(self):
        if not (self.q_min < self.q_max < 0):
            raise InvalidParam(f"need q_min < q_max < 0, got [{self.q_min}, {self.q_max}]")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.q_min, self.q_max, size)

    @property
    def mean(self) -> float:
        return 0.5 * (self.q_min + self.q_max)


@dataclass(frozen=True)
class TwoPointCouplings:
    """Couplings equal to q_min with probability p, else q_max.

    ``p = 1`` is the pinned (degenerate) limit used to check floor
    identities; it is allowed here but does not qualify as a disorder
    distribution for statistical runs.
    """

    q_min: float
    q_max: float
    p: float = 0.5

    def __post_init__(self):
        if not (self.q_min < self.q_max < 0):
            raise InvalidParam(f"need q_min < q_max < 0, got [{self.q_min}, {self.q_max}]")
        if not (0 < self.p <= 1):
            raise InvalidParam(f"need 0 < p <= 1, got p={self.p}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        picks = rng.random(size) < self.p
        return np.where(picks, self.q_min, self.q_max)

    @property
    def mean(self) -> float:
        return self.p * self.q_min + (1 - self.p) * self.q_max

    @property
    def is_degenerate(self) -> bool:
        return self.p == 1.0


# -- random bulk specs -------------------------------------------------------


@dataclass(frozen=True)
class NoBulk:
    def sample(self, rng, n: int) -> np.ndarray:
        return np.zeros(n)

    v_max: float = 0.0


@dataclass(frozen=True)
class IidUniformBulk:
    """Per-site i.i.d. values uniform on [0, v_max]."""

    v_max: float

    def __post_init__(self):
        if self.v_max < 0:
            raise InvalidParam("v_max must be nonnegative")

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(0.0, self.v_max, n)


# -- deterministic bulk (U_b) cell potentials --------------------------------


@dataclass(frozen=True)
class ZeroBulk:
    def as_callable(self) -> Callable:
        return lambda x1f, x2: np.zeros(x1f.shape[0])


@dataclass(frozen=True)
class ConstantBulk:
    value: float

    def as_callable(self) -> Callable:
        return lambda x1f, x2: np.full(x1f.shape[0], float(self.value))


@dataclass(frozen=True)
class CosineBulk:
    """amplitude * (1 + cos(2*pi*x2/wavelength)) -- a smooth x2-periodic bulk."""

    amplitude: float
    wavelength: float = 4.0

    def as_callable(self) -> Callable:
        def fn(x1f, x2):
            return self.amplitude * (1.0 + np.cos(2 * np.pi * x2[..., 0] / self.wavelength))

        return fn


# -- fields -------------------------------------------------------------------


def _sha(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]


@dataclass(frozen=True)
class PotentialField:
    """Realized potential with its component decomposition.

    ``values`` is always ``(u_b + v_b) + v_s`` evaluated in that order, so
    the decomposition re-sums bit-exactly.
    """

    grid: GridSpec
    u_b: np.ndarray
    v_b: np.ndarray
    v_s: np.ndarray
    values: np.ndarray
    provenance: dict

    def to_csv(self, path):
        """Dump site index, coordinates and components at full precision."""
        x1 = self.grid.x1_positions()
        x2 = self.grid.x2_positions()
        cols = ["site"]
        cols += [f"x1_{j}" for j in range(self.grid.d1)]
        cols += [f"x2_{j}" for j in range(self.grid.d2)]
        cols += ["U_b", "V_b", "V_s"]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(cols) + "\n")
            for s in range(self.grid.n_sites):
                row = [str(s)]
                row += [f"{v:.17g}" for v in x1[s]]
                row += [f"{v:.17g}" for v in x2[s]]
                row += [f"{self.u_b[s]:.17g}", f"{self.v_b[s]:.17g}", f"{self.v_s[s]:.17g}"]
                fh.write(",".join(row) + "\n")


def make_field(grid, u_b=None, v_b=None, v_s=None, provenance=None) -> PotentialField:
    n = grid.n_sites
    u_b = np.zeros(n) if u_b is None else np.asarray(u_b, dtype=float)
    v_b = np.zeros(n) if v_b is None else np.asarray(v_b, dtype=float)
    v_s = np.zeros(n) if v_s is None else np.asarray(v_s, dtype=float)
    for part in (u_b, v_b, v_s):
        if part.shape != (n,):
            raise ShapeMismatch(f"component shape {part.shape} != ({n},)")
        if not np.all(np.isfinite(part)):
            raise ShapeMismatch("potential component contains non-finite values")
    values = (u_b + v_b) + v_s
    prov = dict(provenance or {})
    prov.setdefault("hash_u_b", _sha(u_b))
    prov.setdefault("hash_v_b", _sha(v_b))
    prov.setdefault("hash_v_s", _sha(v_s))
    return PotentialField(grid=grid, u_b=u_b, v_b=v_b, v_s=v_s, values=values, provenance=prov)


# -- alloy machinery ----------------------------------------------------------

_WEIGHT_CACHE: dict = {}


def window_cells(grid: GridSpec, radius: int) -> list:
    """Cell multi-indices of the coupling window, ascending cell-major."""
    rng = range(-radius, grid.L + radius)
    return list(itertools.product(rng, repeat=grid.d1))


def f_weight_matrix(grid: GridSpec, profile) -> np.ndarray:
    """Profile weights, shape (n_window_cells, n_sites).

    Row ``c`` holds f(x1 - c, x2) masked to sites whose own cell is within
    the truncation radius of ``c``.  Cached per (grid, profile).
    """
    key = (grid, profile)
    cached = _WEIGHT_CACHE.get(key)
    if cached is not None:
        return cached
    if isinstance(profile, PowerLawProfile):
        profile.validate_for_dimension(grid.d1)
    radius = profile.window_radius(grid)
    cells = window_cells(grid, radius)
    x1 = grid.x1_positions()
    x2 = grid.x2_positions()
    site_cells = grid.cell_of_sites()
    F = np.zeros((len(cells), grid.n_sites))
    for row, c in enumerate(cells):
        cvec = np.asarray(c, dtype=float)
        dist = np.max(np.abs(site_cells - np.asarray(c)), axis=-1)
        vals = profile.evaluate(x1 - cvec, x2)
        F[row] = np.where(dist <= radius, vals, 0.0)
    _WEIGHT_CACHE[key] = F
    return F


def contract_couplings(couplings: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Sum_c q_c * F[c] accumulated in ascending cell order.

    A plain loop rather than a BLAS product: the fixed accumulation order
    makes fields bit-identical across batch sizes and worker counts.
    """
    out = np.zeros(couplings.shape[:-1] + (F.shape[1],))
    for c in range(F.shape[0]):
        out += couplings[..., c, None] * F[c]
    return out


def _check_tail(profile, q_ref: float, tol: float, d1: int) -> float:
    tail = profile.tail_bound(d1)
    if tail > tol * max(abs(q_ref), 1e-300):
        raise TailTooLarge(
            f"truncation tail bound {tail:.3e} exceeds tol*|q| = {tol * abs(q_ref):.3e}; "
            f"increase truncation_radius"
        )
    return tail


def surface_floor(grid: GridSpec, profile, q_min: float, tol: float = DEFAULT_TAIL_TOL) -> PotentialField:
    """Deterministic floor: every coupling pinned to q_min (<= 0)."""
    if q_min > 0:
        raise InvalidParam(f"floor coupling must be <= 0, got {q_min}")
    tail = _check_tail(profile, q_min, tol, grid.d1)
    F = f_weight_matrix(grid, profile)
    pinned = np.full(F.shape[0], float(q_min))
    v_s = contract_couplings(pinned, F)
    prov = {"kind": "surface_floor", "q_min": q_min, "tail_bound": tail * abs(q_min)}
    return make_field(grid, v_s=v_s, provenance=prov)


def sample_surface(grid: GridSpec, profile, dist, seed: int, tol: float = DEFAULT_TAIL_TOL):
    """Draw i.i.d. couplings (one per window cell) and build the alloy field.

    Returns (couplings, field).  Pinning the distribution to q_min
    reproduces surface_floor bit-exactly.
    """
    _check_tail(profile, dist.q_min, tol, grid.d1)
    F = f_weight_matrix(grid, profile)
    rng = stream(seed, ROLE_SURFACE)
    couplings = dist.sample(rng, F.shape[0])
    v_s = contract_couplings(couplings, F)
    prov = {"kind": "surface_sample", "seed": seed, "q_window": [dist.q_min, dist.q_max]}
    return couplings, make_field(grid, v_s=v_s, provenance=prov)


def sample_bulk(grid: GridSpec, spec, seed: int) -> PotentialField:
    """Per-site nonnegative random bulk field (zero for NoBulk)."""
    rng = stream(seed, ROLE_BULK)
    v_b = spec.sample(rng, grid.n_sites)
    return make_field(grid, v_b=v_b, provenance={"kind": "bulk_sample", "seed": seed})


def periodic_bulk(grid: GridSpec, cell_function: Callable) -> PotentialField:
    """Extend a unit-cell function Z^d1-periodically across the grid.

    ``cell_function(x1_frac, x2)`` receives positions folded to [0,1)^d1 and
    physical transverse coordinates; periodicity on the grid is exact
    because folded positions are computed from integer coordinates.
    """
    x1f = grid.x1_frac_positions()
    x2 = grid.x2_positions()
    vals = np.asarray(cell_function(x1f, x2), dtype=float)
    if vals.shape != (grid.n_sites,):
        raise ShapeMismatch(f"cell function returned shape {vals.shape}, expected ({grid.n_sites},)")
    return make_field(grid, u_b=vals, provenance={"kind": "periodic_bulk"})


def surface_cell_potential(profile, q_min: float, tol: float = DEFAULT_TAIL_TOL) -> Callable:
    """Exactly periodic floor as a cell function (for reduced operators).

    Sums relative cells in the same ascending order as the strip window, so
    tiling this function reproduces surface_floor on any strip.
    """

    def fn(x1f: np.ndarray, x2: np.ndarray) -> np.ndarray:
        d1 = x1f.shape[-1]
        _check_tail(profile, q_min, tol, d1)
        # radius matching window_radius for a grid with this spacing
        if isinstance(profile, PowerLawProfile):
            radius = int(profile.truncation_radius)
        else:
            spacing = 1.0
            if x1f.shape[0] > 1:
                pos = np.unique(x1f[:, 0])
                if len(pos) > 1:
                    spacing = pos[1] - pos[0]
            radius = int(math.floor(profile.x1_halfwidth + (1.0 - spacing) + 1e-12))
        out = np.zeros(x1f.shape[0])
        for c in itertools.product(range(-radius, radius + 1), repeat=d1):
            out += q_min * profile.evaluate(x1f - np.asarray(c, dtype=float), x2)
        return out

    return fn


def combine_cell_potentials(*fns: Callable) -> Callable:
    def fn(x1f, x2):
        out = np.zeros(x1f.shape[0])
        for g in fns:
            out = out + g(x1f, x2)
        return out

    return fn


# -- bulk bottom estimate ------------------------------------------------------


def estimate_bulk_bottom(
    cell_function: Callable,
    d1: int,
    d2: int,
    a: int,
    M_probe: int,
    L_probe: Optional[int] = None,
    tol: float = 1e-9,
):
    """Bracket inf spec of the bulk operator with the periodic potential U_b.

    Returns (lower, upper): the ground energies of the probe-domain operator
    with all-Neumann and all-Dirichlet boundary conditions.  The bracket
    tightens as the probe domain grows; use it to re-center U_b so the bulk
    bottom sits at zero.
    """
    from .operator import assemble
    from .spectral import lowest_k

    if L_probe is None:
        L_probe = M_probe if d1 == 1 else max(4, int(round(math.sqrt(M_probe))))
    probe = build_grid(d1, d2, L=L_probe, a=a, M=M_probe)
    u_b = periodic_bulk(probe, cell_function)
    lo = lowest_k(assemble(probe, u_b, bc_all_neumann()), 1, tol=tol).eigenvalues[0]
    hi = lowest_k(assemble(probe, u_b, bc_all_dirichlet()), 1, tol=tol).eigenvalues[0]
    return float(lo), float(hi)
