"""Monte Carlo estimation of the integrated density of surface states.

The per-surface-volume eigenvalue count N(E) = count(H, E) / L^d1 is
averaged over disorder realizations on truncated strips.  Ensembles share
their off-diagonal structure, so counting runs through the batched banded
inertia kernel; every sample's field is a pure function of
(parameters, master_seed, sample_index) and results are independent of
chunking and worker count.

Boundary tags:

* ``"D"``      Dirichlet x1 faces, Dirichlet x2 faces
* ``"N"``      Neumann x1, Dirichlet x2
* ``"chi"``    Mezincescu on all faces (ground-state invariant variant)
* ``"chi_x1"`` Mezincescu x1, Dirichlet x2 (truncation error decays in M)
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    GapTooSmall,
    InequalityViolated,
    InvalidParam,
    S4Violated,
    TooFewPoints,
)
from .floquet import gap_certificate, ground_state_cell
from .grid import (
    BoundarySpec,
    Dirichlet,
    GridSpec,
    Mezincescu,
    Neumann,
    bc_all_dirichlet,
)
from .instances import SurfaceModel
from .operator import GroundStateRef, assemble, quadratic_form
from .potential import (
    ZeroBulk,
    contract_couplings,
    estimate_bulk_bottom,
    f_weight_matrix,
    make_field,
    periodic_bulk,
)
from .rng import ROLE_BULK, ROLE_SURFACE, mix64, sample_seed, stream
from .spectral import count_below, count_below_ensemble, lower_band, lowest_k

CHUNK = 256


def bc_for_tag(tag: str, ref: Optional[GroundStateRef]) -> BoundarySpec:
    if tag == "D":
        return BoundarySpec(x1=Dirichlet(), x2=Dirichlet())
    if tag == "N":
        return BoundarySpec(x1=Neumann(), x2=Dirichlet())
    if tag == "chi":
        return BoundarySpec(x1=Mezincescu(ref), x2=Mezincescu(ref))
    if tag == "chi_x1":
        return BoundarySpec(x1=Mezincescu(ref), x2=Dirichlet())
    raise InvalidParam(f"unknown boundary tag {tag!r}")


class StripEnsemble:
    """Shared-structure disorder ensemble on one strip geometry."""

    def __init__(
        self,
        model: SurfaceModel,
        L: int,
        M: int,
        bc: str = "chi",
        M_ref: Optional[int] = None,
        master_seed: int = 0,
    ):
        self.model = model
        self.L = int(L)
        self.M = int(M)
        self.bc_tag = bc
        self.master_seed = int(master_seed)
        if M_ref is None:
            M_ref = M + 4
        self.M_ref = int(M_ref)
        self.grid = model.strip_grid(self.L, self.M)
        self.u_per_fn = model.u_per()
        self.ref = ground_state_cell(model.cell_grid(self.M), self.u_per_fn, self.M_ref)
        self.e0 = self.ref.e0
        bcs = bc_for_tag(bc, self.ref)
        base_field = periodic_bulk(self.grid, model.bulk_periodic.as_callable())
        self.base_band = lower_band(assemble(self.grid, base_field, bcs).matrix)
        self.F = f_weight_matrix(self.grid, model.profile)
        self.n_window_cells = self.F.shape[0]

    def sample_diag(self, index: int) -> np.ndarray:
        """Per-sample diagonal addition V_b + V_s (U_b lives in the base band)."""
        seed_i = sample_seed(self.master_seed, index)
        q = self.model.dist.sample(stream(seed_i, ROLE_SURFACE), self.n_window_cells)
        v_s = contract_couplings(q, self.F)
        v_b = self.model.bulk_random.sample(stream(seed_i, ROLE_BULK), self.grid.n_sites)
        return v_b + v_s

    def counts(self, indices: Sequence[int], energies, chunk: int = CHUNK) -> np.ndarray:
        """Eigenvalue counts, shape (len(indices), len(energies))."""
        indices = list(indices)
        energies = np.atleast_1d(np.asarray(energies, dtype=float))
        out = np.empty((len(indices), len(energies)), dtype=np.int64)
        for lo in range(0, len(indices), chunk):
            block = indices[lo : lo + chunk]
            diags = np.stack([self.sample_diag(i) for i in block])
            out[lo : lo + len(block)] = count_below_ensemble(self.base_band, diags, energies)
        return out


def _counts_block(args):
    model, L, M, bc, M_ref, master_seed, indices, energies = args
    eng = StripEnsemble(model, L, M, bc=bc, M_ref=M_ref, master_seed=master_seed)
    return eng.counts(indices, energies)


def ensemble_counts(engine: StripEnsemble, n_samples: int, energies, workers: int = 1) -> np.ndarray:
    """Counts for samples 0..n_samples-1, optionally fanned out to processes.

    The partition into worker blocks never affects the result: each sample's
    seed is derived from its index alone.
    """
    if workers <= 1:
        return engine.counts(range(n_samples), energies)
    blocks = np.array_split(np.arange(n_samples), workers)
    args = [
        (
            engine.model,
            engine.L,
            engine.M,
            engine.bc_tag,
            engine.M_ref,
            engine.master_seed,
            list(b),
            np.asarray(energies, dtype=float),
        )
        for b in blocks
        if len(b)
    ]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        parts = list(ex.map(_counts_block, args))
    return np.concatenate(parts, axis=0)


# -- IDSS curves ----------------------------------------------------------------


@dataclass(frozen=True)
class IdssCurve:
    energies: np.ndarray
    means: np.ndarray  # count / L^d1, averaged over samples
    ses: np.ndarray
    p0_upper: np.ndarray  # one-sided 95% upper bound where the mean is 0
    n_samples: int
    L: int
    M: int
    a: int
    bc: str
    master_seed: int
    e0: float


def idss_estimate(
    model: SurfaceModel,
    L: int,
    M: int,
    energies,
    n_samples: int,
    master_seed: int,
    bc: str = "chi",
    M_ref: Optional[int] = None,
    workers: int = 1,
) -> IdssCurve:
    """Monte Carlo reduced-volume IDSS over an energy grid.

    Requires the periodic background to be in the surface regime (ground
    energy below zero) and all grid energies below the recentered bulk
    bottom.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    if np.any(np.diff(energies) <= 0):
        raise InvalidParam("energy grid must be strictly ascending")
    engine = StripEnsemble(model, L, M, bc=bc, M_ref=M_ref, master_seed=master_seed)
    if engine.e0 >= 0:
        raise S4Violated(f"periodic ground energy {engine.e0:.6g} is not negative")
    if isinstance(model.bulk_periodic, ZeroBulk):
        bottom = 0.0
    else:
        bottom, _ = estimate_bulk_bottom(
            model.bulk_periodic.as_callable(), model.d1, model.d2, model.a, M_probe=2 * M
        )
    if energies.max() >= bottom:
        raise InvalidParam(
            f"energies must stay below the bulk bottom estimate {bottom:.6g}"
        )

    counts = ensemble_counts(engine, n_samples, energies, workers=workers)
    vol = float(L**model.d1)
    means = counts.mean(axis=0) / vol
    ses = counts.std(axis=0, ddof=1) / math.sqrt(n_samples) / vol if n_samples > 1 else np.zeros_like(means)
    p0 = np.where(means == 0, 1.0 - 0.05 ** (1.0 / n_samples), np.nan)

    if np.any(np.diff(means) < 0):
        raise InequalityViolated("IDSS means decreased along the energy grid")
    guard = energies < engine.e0 - 1e-9
    if (bc in ("chi", "chi_x1") or model.a == 1) and np.any(means[guard] != 0):
        raise InequalityViolated("nonzero counts below the periodic ground energy")

    return IdssCurve(
        energies=energies,
        means=means,
        ses=ses,
        p0_upper=p0,
        n_samples=n_samples,
        L=L,
        M=M,
        a=model.a,
        bc=bc,
        master_seed=master_seed,
        e0=engine.e0,
    )


# -- per-realization bracketing and truncation ------------------------------------


@dataclass(frozen=True)
class BracketingReport:
    M_values: tuple
    energies: np.ndarray
    counts_dd: dict  # M -> counts array over energies
    counts_nd: dict
    M_stab: Optional[int]  # smallest tested M with counts identical to 2M


def bracketing_check(
    model: SurfaceModel,
    L: int,
    M_values: Sequence[int],
    energies,
    seed: int,
) -> BracketingReport:
    """Dirichlet/Neumann count ordering and transverse stabilization.

    One disorder realization is shared across all depths: couplings are
    depth-independent and any random bulk is drawn on the deepest grid and
    restricted to the central layers of the shallower ones.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    M_values = tuple(sorted(int(m) for m in M_values))
    M_max = M_values[-1]
    grid_max = model.strip_grid(L, M_max)
    F_max = f_weight_matrix(grid_max, model.profile)
    q = model.dist.sample(stream(seed, ROLE_SURFACE), F_max.shape[0])
    v_b_max = model.bulk_random.sample(stream(seed, ROLE_BULK), grid_max.n_sites)

    counts_dd, counts_nd = {}, {}
    for M in M_values:
        grid = model.strip_grid(L, M)
        F = f_weight_matrix(grid, model.profile)
        v_s = contract_couplings(q, F)
        v_b = _restrict_layers(v_b_max, grid_max, grid)
        u_b = periodic_bulk(grid, model.bulk_periodic.as_callable()).values
        fld = make_field(grid, u_b=u_b, v_b=v_b, v_s=v_s)
        for tag, store in (("D", counts_dd), ("N", counts_nd)):
            H = assemble(grid, fld, bc_for_tag(tag, None))
            store[M] = np.array([count_below(H, E) for E in energies])
        bad = counts_dd[M] > counts_nd[M]
        if np.any(bad):
            raise InequalityViolated(
                f"count(D,D) > count(N,D) at E={energies[bad.argmax()]:.6g} (M={M})"
            )

    for store, tag in ((counts_dd, "D"), (counts_nd, "N")):
        for prev, cur in zip(M_values, M_values[1:]):
            drop = store[cur] < store[prev]
            if np.any(drop):
                raise InequalityViolated(
                    f"{tag}-counts decreased from M={prev} to M={cur} at "
                    f"E={energies[drop.argmax()]:.6g}"
                )

    M_stab = None
    for M in M_values:
        if 2 * M in counts_dd:
            if np.array_equal(counts_dd[M], counts_dd[2 * M]) and np.array_equal(
                counts_nd[M], counts_nd[2 * M]
            ):
                M_stab = M
                break
    return BracketingReport(
        M_values=M_values,
        energies=energies,
        counts_dd=counts_dd,
        counts_nd=counts_nd,
        M_stab=M_stab,
    )


def _restrict_layers(values: np.ndarray, big: GridSpec, small: GridSpec) -> np.ndarray:
    """Central-layer restriction of a site field from a deeper grid."""
    arr = values.reshape(big.shape)
    off = (big.M - small.M) // 2
    sl = (slice(None),) * big.d1 + (slice(off, off + small.M),) * big.d2
    return arr[sl].ravel()


# -- the three-term sandwich -------------------------------------------------------


@dataclass(frozen=True)
class SandwichReport:
    energies: np.ndarray
    lhs: np.ndarray  # P{E0(H^D(V)) < E} / L^d1
    mid: np.ndarray  # mean count(H^chi(V)) / L^d1
    rhs: np.ndarray  # count(H^chi_per) / L^d1 * P{E0(H^chi(V)) < E}
    lhs_se: np.ndarray
    mid_se: np.ndarray
    rhs_se: np.ndarray
    n_samples: int
    ok: bool


def sandwich_check(
    model: SurfaceModel,
    L: int,
    M: int,
    energies,
    n_samples: int,
    master_seed: int,
    M_ref: Optional[int] = None,
    workers: int = 1,
    tol_se: float = 3.0,
) -> SandwichReport:
    """Empirical two-sided bound chain for the IDSS at every grid energy.

    Couplings are shared between the Dirichlet and the chi ensembles, so
    the comparison is paired.  Violations beyond ``tol_se`` combined
    standard errors raise InequalityViolated.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    eng_chi = StripEnsemble(model, L, M, bc="chi", M_ref=M_ref, master_seed=master_seed)
    eng_d = StripEnsemble(model, L, M, bc="D", M_ref=M_ref, master_seed=master_seed)
    counts_chi = ensemble_counts(eng_chi, n_samples, energies, workers=workers)
    counts_d = ensemble_counts(eng_d, n_samples, energies, workers=workers)

    u_per = periodic_bulk(eng_chi.grid, eng_chi.u_per_fn)
    H_per = assemble(eng_chi.grid, u_per, bc_for_tag("chi", eng_chi.ref))
    n_per = np.array([count_below(H_per, E) for E in energies], dtype=float)

    vol = float(L**model.d1)
    rt_n = math.sqrt(n_samples)
    p_d = (counts_d >= 1).mean(axis=0)
    p_chi = (counts_chi >= 1).mean(axis=0)
    se_pd = np.sqrt(p_d * (1 - p_d) / n_samples)
    se_pchi = np.sqrt(p_chi * (1 - p_chi) / n_samples)

    lhs = p_d / vol
    lhs_se = se_pd / vol
    mid = counts_chi.mean(axis=0) / vol
    mid_se = counts_chi.std(axis=0, ddof=1) / rt_n / vol
    rhs = n_per / vol * p_chi
    rhs_se = n_per / vol * se_pchi

    ok = True
    for i, E in enumerate(energies):
        slack_lo = tol_se * math.hypot(lhs_se[i], mid_se[i])
        slack_hi = tol_se * math.hypot(mid_se[i], rhs_se[i])
        if lhs[i] > mid[i] + slack_lo or mid[i] > rhs[i] + slack_hi:
            ok = False
            raise InequalityViolated(
                f"sandwich violated at E={E:.6g}: "
                f"lhs={lhs[i]:.4g} mid={mid[i]:.4g} rhs={rhs[i]:.4g}"
            )
    return SandwichReport(
        energies=energies,
        lhs=lhs,
        mid=mid,
        rhs=rhs,
        lhs_se=lhs_se,
        mid_se=mid_se,
        rhs_se=rhs_se,
        n_samples=n_samples,
        ok=ok,
    )


# -- certified tail bounds -----------------------------------------------------------


@dataclass(frozen=True)
class TempleTailReport:
    bound: float  # certified lower bound E0 + shift
    shift: float
    direct_e0: float  # eigensolve of the perturbed operator
    margin: float  # direct_e0 - bound, certified nonnegative
    gap: float
    sup_w: float


def temple_tail_bound(
    model: SurfaceModel,
    ref: GroundStateRef,
    L: int,
    w_x1: np.ndarray,
    f2_box: Optional[tuple] = None,
    M: Optional[int] = None,
    gap: Optional[float] = None,
) -> TempleTailReport:
    """Certified lower bound on the floor-pinned perturbed ground energy.

    ``w_x1`` is a nonnegative reducing profile over the strip's x1 sites
    with sup at most a third of the strip gap; the certified bound is the
    periodic ground energy plus half the profile's ground-state weight.
    """
    if M is None:
        M = ref.grid.M - 2
    if f2_box is None:
        f2_box = model.profile.x2_box
    grid = model.strip_grid(L, M)
    n_x1 = (grid.a * L) ** grid.d1
    w_x1 = np.asarray(w_x1, dtype=float).ravel()
    if w_x1.shape != (n_x1,):
        raise InvalidParam(f"reducing profile must have shape ({n_x1},)")
    if np.any(w_x1 < 0):
        raise InvalidParam("reducing profile must be nonnegative")

    u_fn = model.u_per()
    if gap is None:
        gap = gap_certificate(u_fn, [L], ref, M=M)[0].gap
    sup_w = float(w_x1.max(initial=0.0))
    if sup_w > gap / 3.0:
        raise GapTooSmall(f"sup W = {sup_w:.4g} exceeds gap/3 = {gap / 3.0:.4g}")

    coords = grid.coords_of(np.arange(grid.n_sites))
    psi = ref.values_at(coords, grid)
    x1_flat = np.ravel_multi_index(
        tuple(coords[:, j] for j in range(grid.d1)), (grid.a * L,) * grid.d1
    )
    x2 = grid.x2_positions()
    in_f2 = np.all((x2 >= f2_box[0]) & (x2 < f2_box[1]), axis=-1)
    w_site = w_x1[x1_flat] * in_f2

    psi_sq = psi * psi
    wbar = float(np.sum(w_site * psi_sq) / np.sum(psi_sq))
    bound = ref.e0 + 0.5 * wbar

    u_vals = periodic_bulk(grid, u_fn).values
    H = assemble(grid, u_vals + w_site, bc_for_tag("chi", ref))
    direct = float(lowest_k(H, 1, tol=1e-9).eigenvalues[0])
    return TempleTailReport(
        bound=bound,
        shift=0.5 * wbar,
        direct_e0=direct,
        margin=direct - bound,
        gap=gap,
        sup_w=sup_w,
    )


def quantum_reducing_profile(
    rho: np.ndarray, cap: float, L: int, a: int = 1, f1_halfwidth: float = 0.25, f_u: float = 1.0
) -> np.ndarray:
    """Capped-coupling profile over x1 sites (one rho per strip cell)."""
    rho = np.asarray(rho, dtype=float)
    x1 = np.arange(a * L) / a
    w = np.zeros(a * L)
    for j in range(L):
        w += f_u * min(rho[j], cap) * (np.abs(x1 - j) <= f1_halfwidth + 1e-12)
    return w


def classical_reducing_profile(
    rho: np.ndarray, cells: np.ndarray, R: float, alpha: float, L: int, a: int = 1, f_u: float = 1.0
) -> np.ndarray:
    """Far-cell capped profile: distant couplings only, power-law weights."""
    rho = np.asarray(rho, dtype=float)
    cells = np.asarray(cells, dtype=float)
    x1 = np.arange(a * L) / a
    w = np.zeros(a * L)
    for rj, j in zip(rho, cells):
        if abs(j) > R:
            w += f_u * min(rj, 1.0) * np.maximum(np.abs(x1 - j), 1.0) ** (-alpha)
    return w


@dataclass(frozen=True)
class RayleighTailReport:
    bound: float  # trial Rayleigh quotient
    e0: float
    coupling_term: float
    bulk_term: float
    cutoff_penalty: float
    direct_e0: float
    margin: float  # bound - direct_e0, nonnegative


def rayleigh_tail_bound(
    model: SurfaceModel,
    L: int,
    M: int,
    seed: int,
    M_ref: Optional[int] = None,
) -> RayleighTailReport:
    """Rayleigh-Ritz upper bound for one realization on the Dirichlet strip.

    The trial vector is the periodic ground state times a discrete sine
    cutoff vanishing on the boundary; the quotient decomposes into the
    periodic ground energy, the excess-coupling term, the random-bulk term
    and the cutoff penalty (which absorbs both the x1 localization cost and
    the transverse truncation).
    """
    if M_ref is None:
        M_ref = M + 4
    grid = model.strip_grid(L, M)
    u_fn = model.u_per()
    ref = ground_state_cell(model.cell_grid(M), u_fn, M_ref)

    F = f_weight_matrix(grid, model.profile)
    q = model.dist.sample(stream(seed, ROLE_SURFACE), F.shape[0])
    rho = q - model.dist.q_min
    w_vals = contract_couplings(rho, F)
    v_b = model.bulk_random.sample(stream(seed, ROLE_BULK), grid.n_sites)
    u_per_vals = periodic_bulk(grid, u_fn).values

    coords = grid.coords_of(np.arange(grid.n_sites))
    psi = ref.values_at(coords, grid)
    cut = np.ones(grid.n_sites)
    n_ax = grid.a * L
    for j in range(grid.d1):
        cut *= np.sin(np.pi * (coords[:, j] + 1) / (n_ax + 1))
    trial = psi * cut
    nrm2 = float(trial @ trial)

    H_per = assemble(grid, u_per_vals, bc_all_dirichlet())
    penalty = quadratic_form(H_per, trial) / nrm2 - ref.e0
    coupling = float(np.sum(w_vals * trial * trial)) / nrm2
    bulk = float(np.sum(v_b * trial * trial)) / nrm2
    bound = ref.e0 + coupling + bulk + penalty

    H_full = assemble(grid, u_per_vals + (w_vals + v_b), bc_all_dirichlet())
    quotient = quadratic_form(H_full, trial) / nrm2
    if abs(quotient - bound) > 1e-9 * (1 + abs(quotient)):
        raise InequalityViolated(
            f"decomposition mismatch: quotient {quotient!r} vs terms {bound!r}"
        )
    direct = float(lowest_k(H_full, 1, tol=1e-9).eigenvalues[0])
    if bound < direct - 1e-9 * (1 + abs(direct)):
        raise InequalityViolated(f"Rayleigh quotient {bound} below ground energy {direct}")
    return RayleighTailReport(
        bound=bound,
        e0=ref.e0,
        coupling_term=coupling,
        bulk_term=bulk,
        cutoff_penalty=penalty,
        direct_e0=direct,
        margin=bound - direct,
    )


# -- Lifshits-tail campaigns and fits --------------------------------------------------


@dataclass(frozen=True)
class LifshitsFit:
    window: tuple  # (E_lo, E_hi]
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def lifshits_fit(curve, e0: float, window: tuple) -> LifshitsFit:
    """Least squares through (ln(E - e0), ln|ln N(E)|) inside the window.

    Only strictly positive means below one enter (the double log exists
    exactly there); fewer than five usable points raise TooFewPoints.
    """
    if hasattr(curve, "energies"):
        energies = np.asarray(curve.energies, dtype=float)
        means = np.asarray(curve.means, dtype=float)
    else:
        energies, means = (np.asarray(c, dtype=float) for c in curve)
    lo, hi = window
    usable = (energies > lo) & (energies <= hi) & (means > 0) & (means < 1) & (energies > e0)
    if usable.sum() < 5:
        raise TooFewPoints(f"only {int(usable.sum())} usable points in window {window}")
    x = np.log(energies[usable] - e0)
    y = np.log(-np.log(means[usable]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return LifshitsFit(
        window=(float(lo), float(hi)),
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        n_points=int(usable.sum()),
    )


@dataclass(frozen=True)
class TailCampaign:
    deltas: np.ndarray  # E - E0 per point
    energies: np.ndarray
    L_values: np.ndarray
    M: int
    means: np.ndarray
    ses: np.ndarray
    p0_upper: np.ndarray
    n_samples: int
    e0: float
    master_seed: int
    bc: str


def quantum_campaign(
    model: SurfaceModel,
    deltas,
    c_factor: float,
    M: int,
    n_samples: int,
    master_seed: int,
    L_bounds: tuple = (8, 48),
    bc: str = "chi",
    M_ref: Optional[int] = None,
    workers: int = 1,
) -> TailCampaign:
    """Tail campaign with the strip length tied to the energy offset.

    L = round(c_factor / sqrt(delta)) clipped to ``L_bounds``; each point
    is an independent ensemble at the single energy E0 + delta.
    """
    deltas = np.sort(np.atleast_1d(np.asarray(deltas, dtype=float)))
    if np.any(deltas <= 0):
        raise InvalidParam("energy offsets must be positive")
    probe = StripEnsemble(model, L_bounds[0], M, bc=bc, M_ref=M_ref, master_seed=master_seed)
    e0 = probe.e0
    if e0 >= 0:
        raise S4Violated(f"periodic ground energy {e0:.6g} is not negative")

    L_values = np.clip(np.round(c_factor / np.sqrt(deltas)).astype(int), *L_bounds)
    means = np.empty(len(deltas))
    ses = np.empty(len(deltas))
    for i, (d, L) in enumerate(zip(deltas, L_values)):
        eng = StripEnsemble(
            model, int(L), M, bc=bc, M_ref=M_ref, master_seed=mix64(master_seed, 7000 + i)
        )
        counts = ensemble_counts(eng, n_samples, [e0 + d], workers=workers)
        vol = float(int(L) ** model.d1)
        means[i] = counts.mean() / vol
        ses[i] = counts.std(ddof=1) / math.sqrt(n_samples) / vol
    p0 = np.where(means == 0, 1.0 - 0.05 ** (1.0 / n_samples), np.nan)
    return TailCampaign(
        deltas=deltas,
        energies=e0 + deltas,
        L_values=L_values,
        M=M,
        means=means,
        ses=ses,
        p0_upper=p0,
        n_samples=n_samples,
        e0=e0,
        master_seed=master_seed,
        bc=bc,
    )


def classical_campaign(
    model: SurfaceModel,
    deltas,
    L: int,
    M: int,
    n_samples: int,
    master_seed: int,
    bc: str = "chi",
    M_ref: Optional[int] = None,
    workers: int = 1,
) -> TailCampaign:
    """Tail campaign at fixed strip length for slowly decaying profiles."""
    deltas = np.sort(np.atleast_1d(np.asarray(deltas, dtype=float)))
    if np.any(deltas <= 0):
        raise InvalidParam("energy offsets must be positive")
    eng = StripEnsemble(model, L, M, bc=bc, M_ref=M_ref, master_seed=master_seed)
    if eng.e0 >= 0:
        raise S4Violated(f"periodic ground energy {eng.e0:.6g} is not negative")
    energies = eng.e0 + deltas
    counts = ensemble_counts(eng, n_samples, energies, workers=workers)
    vol = float(L**model.d1)
    means = counts.mean(axis=0) / vol
    ses = counts.std(axis=0, ddof=1) / math.sqrt(n_samples) / vol
    p0 = np.where(means == 0, 1.0 - 0.05 ** (1.0 / n_samples), np.nan)
    return TailCampaign(
        deltas=deltas,
        energies=energies,
        L_values=np.full(len(deltas), L, dtype=int),
        M=M,
        means=means,
        ses=ses,
        p0_upper=p0,
        n_samples=n_samples,
        e0=eng.e0,
        master_seed=master_seed,
        bc=bc,
    )
