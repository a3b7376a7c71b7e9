"""Quick exact-identity and oracle battery behind ``striplab selftest``.

Runs in well under a minute; each entry returns (name, passed, detail).
The full statistical acceptance checks live in the test suite.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .floquet import (
    averaged_reduction,
    band_curve,
    gap_certificate,
    ground_state_cell,
    harnack_constants,
)
from .grid import BoundarySpec, Dirichlet, Mezincescu, bc_all_dirichlet, bc_all_neumann, build_grid
from .idss import bracketing_check, rayleigh_tail_bound, temple_tail_bound
from .instances import default_model
from .operator import assemble
from .spectral import count_below, lowest_k


def _free_eigs_1d(n: int, bc: str) -> np.ndarray:
    k = np.arange(n)
    if bc == "D":
        return 2.0 - 2.0 * np.cos((k + 1) * np.pi / (n + 1))
    return 2.0 - 2.0 * np.cos(k * np.pi / n)


def _closed_forms():
    g = build_grid(1, 1, L=2, a=1, M=2)
    z = np.zeros(g.n_sites)
    for bcs, tag in ((bc_all_dirichlet(), "D"), (bc_all_neumann(), "N")):
        got = np.linalg.eigvalsh(assemble(g, z, bcs).dense())
        want = np.sort(np.add.outer(_free_eigs_1d(2, tag), _free_eigs_1d(2, tag)).ravel())
        if np.max(np.abs(got - want)) > 1e-12:
            return False, f"{tag} spectrum off by {np.max(np.abs(got - want)):.2e}"
    return True, ""


def _mezincescu_invariance():
    m = default_model()
    ref = ground_state_cell(m.cell_grid(14), m.u_per(), 18)
    worst = 0.0
    for L in (4, 8):
        grid = m.strip_grid(L, 14)
        from .potential import periodic_bulk

        fld = periodic_bulk(grid, m.u_per())
        H = assemble(grid, fld, BoundarySpec(x1=Mezincescu(ref), x2=Mezincescu(ref)))
        e0 = lowest_k(H, 1, tol=1e-9).eigenvalues[0]
        worst = max(worst, abs(e0 - ref.e0))
    ok = worst <= 10 * ref.residual
    return ok, f"worst |E0 - E0_ref| = {worst:.2e}"


def _averaged_identity():
    m = default_model()
    ref = ground_state_cell(m.cell_grid(14), m.u_per(), 18)
    avg = averaged_reduction(ref, m.u_per())
    ok = avg.identity_residual <= 1e-10 * (1 + abs(ref.e0))
    return ok, f"residual = {avg.identity_residual:.2e}"


def _parabolicity():
    m = default_model()
    curve = band_curve(m.cell_grid(14), m.u_per())
    tol = 1e-9 * (1 + abs(curve.e0))
    ok = bool(np.all(curve.upper_margin_kdisc >= -tol) and np.all(curve.lower_margin >= -tol))
    return ok, f"margins >= {min(curve.upper_margin_kdisc.min(), curve.lower_margin.min()):.2e}"


def _gap():
    m = default_model()
    ref = ground_state_cell(m.cell_grid(14), m.u_per(), 18)
    rep = gap_certificate(m.u_per(), [8], ref, M=14)[0]
    want = 2.0 * (1.0 - np.cos(np.pi / 8))
    ok = abs(rep.gap - want) <= 1e-12 and rep.margin >= -1e-9
    return ok, f"gap = {rep.gap:.12f}"


def _count_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        n = int(rng.integers(10, 120))
        bw = int(rng.integers(1, 8))
        A = rng.standard_normal((n, n))
        A = np.triu(np.tril(A + A.T, bw), -bw)
        E = float(rng.standard_normal() * 2)
        want = int(np.sum(np.linalg.eigvalsh(A) <= E + 1e-12 * (np.abs(A).sum(axis=1).max() + abs(E) + 1)))
        got = count_below(sp.csr_matrix(A), E)
        if got != want:
            return False, f"count {got} != dense {want} (n={n})"
    return True, "20 random instances"


def _ordering():
    # the form ordering compares like faces: all-Neumann <= full-Mezincescu
    # <= all-Dirichlet (ghost ratios in [0, 1] for a decaying reference)
    from .potential import sample_surface

    m = default_model()
    ref = ground_state_cell(m.cell_grid(10), m.u_per(), 14)
    rng = np.random.default_rng(7)
    for trial in range(5):
        grid = m.strip_grid(6, 10)
        _, fld = sample_surface(grid, m.profile, m.dist, seed=int(rng.integers(1 << 31)))
        levels = {}
        for tag, bcs in (
            ("N", bc_all_neumann()),
            ("chi", BoundarySpec(x1=Mezincescu(ref), x2=Mezincescu(ref))),
            ("D", bc_all_dirichlet()),
        ):
            levels[tag] = np.sort(np.linalg.eigvalsh(assemble(grid, fld, bcs).dense()))[:3]
        if not (np.all(levels["N"] <= levels["chi"] + 1e-11)
                and np.all(levels["chi"] <= levels["D"] + 1e-11)):
            return False, f"ordering broken on trial {trial}"
    return True, "5 realizations, k = 0..2"


def _bounds():
    m = default_model()
    ref = ground_state_cell(m.cell_grid(14), m.u_per(), 18)
    gap = gap_certificate(m.u_per(), [8], ref, M=14)[0].gap
    w = np.zeros(8)
    w[4] = gap / 4
    tb = temple_tail_bound(m, ref, 8, w, M=14, gap=gap)
    rb = rayleigh_tail_bound(m, 8, 14, seed=3)
    ok = tb.margin >= -1e-10 and rb.margin >= -1e-10
    return ok, f"temple margin {tb.margin:.2e}, rayleigh margin {rb.margin:.2e}"


def _bracketing():
    m = default_model()
    energies = np.linspace(-1.25, -0.1, 8)
    bracketing_check(m, 8, [8, 16], energies, seed=11)
    return True, "ordering + M-monotonicity"


def run_all():
    checks = [
        ("closed-form free spectra (2x2 grid)", _closed_forms),
        ("Mezincescu ground-energy invariance", _mezincescu_invariance),
        ("averaged transverse identity", _averaged_identity),
        ("parabolicity sandwich on the default cell", _parabolicity),
        ("separable gap closed form", _gap),
        ("inertia count vs dense oracle", _count_oracle),
        ("boundary-condition eigenvalue ordering", _ordering),
        ("Temple and Rayleigh tail bounds", _bounds),
        ("per-realization bracketing", _bracketing),
    ]
    results = []
    for name, fn in checks:
        try:
            passed, detail = fn()
        except Exception as exc:  # a failed identity is a failed selftest, not a crash
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, passed, detail))
    return results
