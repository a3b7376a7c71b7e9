"""Concrete model instances used by experiments, tests and the CLI.

A SurfaceModel bundles the four potential ingredients with the surface
geometry parameters they are sampled on.  The default instance is the
tight-binding workhorse: one-dimensional surface and transverse axes,
single-column compact impurity on the two layers straddling the surface,
couplings uniform on [-2, -1], no deterministic or random bulk.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import GridSpec, build_grid
from .potential import (
    CompactProfile,
    NoBulk,
    PowerLawProfile,
    TwoPointCouplings,
    UniformCouplings,
    ZeroBulk,
    combine_cell_potentials,
    surface_cell_potential,
)


@dataclass(frozen=True)
class SurfaceModel:
    """Potential ingredients plus the surface geometry they live on.

    ``tail_tol`` is the relative truncation tolerance for power-law alloy
    sums; slowly decaying profiles (alpha close to d1) cannot meet the
    tight default and must declare a looser value.
    """

    d1: int
    d2: int
    a: int
    profile: object
    dist: object
    bulk_random: object = field(default_factory=NoBulk)
    bulk_periodic: object = field(default_factory=ZeroBulk)
    tail_tol: float = 1e-8

    def u_per(self) -> Callable:
        """Cell potential of the periodic background: U_b + U_s (floor)."""
        return combine_cell_potentials(
            self.bulk_periodic.as_callable(),
            surface_cell_potential(self.profile, self.dist.q_min, tol=self.tail_tol),
        )

    def cell_grid(self, M: int) -> GridSpec:
        return build_grid(self.d1, self.d2, L=1, a=self.a, M=M)

    def strip_grid(self, L: int, M: int) -> GridSpec:
        return build_grid(self.d1, self.d2, L=L, a=self.a, M=M)


def default_model() -> SurfaceModel:
    """d1 = d2 = 1, a = 1, compact single-column impurity, q ~ U[-2, -1]."""
    return SurfaceModel(
        d1=1,
        d2=1,
        a=1,
        profile=CompactProfile(x1_halfwidth=0.25, x2_box=(-1.0, 1.0), amplitude=1.0),
        dist=UniformCouplings(-2.0, -1.0),
    )


def classical_model(alpha: float = 1.5, truncation_radius: int = 256,
                    q_min: float = -2.0, q_max: float = -1.0,
                    tail_tol: float = 0.2) -> SurfaceModel:
    """Power-law impurity profile selecting the classical tail regime.

    The truncation tail of a sum with alpha - d1 = 1/2 falls off only like
    the square root of the radius, so the tolerance is necessarily loose;
    the truncated model is studied self-consistently (its own ground
    energy, its own tail fit).
    """
    return SurfaceModel(
        d1=1,
        d2=1,
        a=1,
        profile=PowerLawProfile(
            alpha=alpha,
            f0=1.0,
            f_lower=1.0,
            x2_box=(-1.0, 1.0),
            truncation_radius=truncation_radius,
        ),
        dist=UniformCouplings(q_min, q_max),
        tail_tol=tail_tol,
    )


def pinned_model(model: SurfaceModel) -> SurfaceModel:
    """Same geometry with every coupling pinned to the floor (degenerate)."""
    return SurfaceModel(
        d1=model.d1,
        d2=model.d2,
        a=model.a,
        profile=model.profile,
        dist=TwoPointCouplings(model.dist.q_min, model.dist.q_min / 2, p=1.0),
        bulk_random=model.bulk_random,
        bulk_periodic=model.bulk_periodic,
    )


def random_periodic_cell(seed: int, d1: int = 1, n_harmonics: int = 3,
                         amplitude: float = 2.5, x2_width: float = 1.8,
                         depth: float = -2.0) -> Callable:
    """Random smooth cell potential, periodic in x1 and localized in x2.

    A surface well of random depth plus a few random x1 harmonics with
    Gaussian transverse envelopes; decays toward zero for large |x2| so the
    instance stays in the surface-state regime.
    """
    rng = np.random.default_rng(seed)
    amps = rng.uniform(-amplitude, amplitude, size=n_harmonics)
    modes = rng.integers(1, 4, size=(n_harmonics, d1))
    phases = rng.uniform(0, 2 * np.pi, size=n_harmonics)
    widths = rng.uniform(0.6, x2_width, size=n_harmonics)
    well = rng.uniform(0.5, 1.0) * depth
    well_width = rng.uniform(0.8, x2_width)

    def fn(x1f: np.ndarray, x2: np.ndarray) -> np.ndarray:
        r2 = np.sum(x2**2, axis=-1)
        out = well * np.exp(-r2 / well_width**2)
        for j in range(n_harmonics):
            phase = 2 * np.pi * (x1f @ modes[j]) + phases[j]
            out = out + amps[j] * np.cos(phase) * np.exp(-r2 / widths[j] ** 2)
        return out

    return fn
