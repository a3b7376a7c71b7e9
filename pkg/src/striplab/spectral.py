"""Eigenvalue machinery: lowest eigenpairs, counting, certified bounds.

Counting below an energy uses the inertia of the shifted operator: an
unpivoted LDL^T pass over the lower band storage counts negative pivots,
which equals the number of eigenvalues below the shift in exact
arithmetic.  Near-zero pivots are nudged by a tie-regularization of
1e-12 * ||H|| and flagged; flagged instances are recounted densely (or
reported via FactorizationBreakdown above the dense cap, in which case the
caller retries with a perturbed energy).  The same factorization kernel
runs batched across ensemble members that share their off-diagonal
structure, one lane per sample, so batching never changes a result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    DenominatorNonpositive,
    FactorizationBreakdown,
    GramDegenerate,
    HypothesisViolated,
    InvalidParam,
    NoConvergence,
    ZeroVector,
)

DENSE_CAP = 2000
TIE_REL = 1e-12
_EIGSH_SEED = 0x5EED_C0DE


@dataclass(frozen=True)
class SpectralResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal
    residuals: np.ndarray
    method: str


def _as_matrix(H):
    mat = getattr(H, "matrix", H)
    if isinstance(mat, np.ndarray):
        return sp.csr_matrix(mat)
    return mat.tocsr()


def lowest_k(H, k: int, tol: float = 1e-9, dense_cap: int = DENSE_CAP) -> SpectralResult:
    """k lowest eigenpairs with certified residuals.

    Dense path below ``dense_cap``; seeded Lanczos (full reorthogonalization
    via ARPACK) above it.  Deterministic for a given operator.
    """
    mat = _as_matrix(H)
    n = mat.shape[0]
    if not 1 <= k <= n:
        raise InvalidParam(f"need 1 <= k <= {n}, got k={k}")

    if n <= dense_cap:
        dense = mat.toarray()
        evals, evecs = np.linalg.eigh(dense)
        evals, evecs = evals[:k].copy(), evecs[:, :k].copy()
        method = "dense"
    else:
        rng = np.random.Generator(np.random.PCG64(_EIGSH_SEED ^ (n * 1000003 + k)))
        v0 = rng.standard_normal(n)
        try:
            evals, evecs = spla.eigsh(
                mat, k=k, which="SA", v0=v0, tol=tol * 1e-2, maxiter=max(5000, 50 * n)
            )
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence(f"eigsh failed: {exc}") from exc
        order = np.argsort(evals)
        evals, evecs = evals[order], evecs[:, order]
        method = "iterative"

    residuals = np.array(
        [np.linalg.norm(mat @ evecs[:, i] - evals[i] * evecs[:, i]) for i in range(k)]
    )
    if np.any(residuals > tol):
        raise NoConvergence(
            f"residuals {residuals.max():.3e} exceed tol {tol:.3e}", achieved=float(residuals.max())
        )
    return SpectralResult(
        eigenvalues=np.real(evals), eigenvectors=evecs, residuals=residuals, method=method
    )


# -- banded inertia counting --------------------------------------------------


def lower_band(mat) -> np.ndarray:
    """Lower band storage band[r, j] = A[j+r, j] of a sparse Hermitian matrix."""
    coo = mat.tocoo()
    mask = coo.row >= coo.col
    r, c, v = coo.row[mask], coo.col[mask], coo.data[mask]
    bw = int((r - c).max()) if len(r) else 0
    band = np.zeros((bw + 1, mat.shape[0]), dtype=coo.data.dtype)
    np.add.at(band, (r - c, c), v)
    return band


def band_inf_norm(band: np.ndarray) -> float:
    """Infinity norm of the symmetric matrix held in lower band storage."""
    absb = np.abs(band)
    s = absb.sum(axis=0)
    n = band.shape[1]
    for r in range(1, band.shape[0]):
        s[r:] += absb[r, : n - r]
    return float(s.max()) if n else 0.0


def banded_inertia(band: np.ndarray, reg: float):
    """Negative-pivot counts of batched banded LDL^T (in place).

    ``band`` has shape (S, bw+1, n).  Returns (neg_counts, hit_reg) where
    ``hit_reg`` marks lanes whose factorization met a pivot below ``reg``
    in magnitude (nudged to +-reg to continue).  Lanes are independent:
    results do not depend on the batch size.
    """
    S, bwp1, n = band.shape
    bw = bwp1 - 1
    is_complex = np.iscomplexobj(band)
    neg = np.zeros(S, dtype=np.int64)
    hit = np.zeros(S, dtype=bool)
    for j in range(n):
        d = band[:, 0, j].real.copy()
        small = np.abs(d) < reg
        if small.any():
            hit |= small
            d[small] = np.where(d[small] < 0, -reg, reg)
        neg += d < 0
        m = min(bw, n - 1 - j)
        if m == 0:
            continue
        l = band[:, 1 : m + 1, j] / d[:, None]
        lc = np.conj(l) if is_complex else l
        for q in range(1, m + 1):
            band[:, 0 : m - q + 1, j + q] -= (d * lc[:, q - 1])[:, None] * l[:, q - 1 : m]
    return neg, hit


def _dense_count(mat, E: float, tie: float) -> int:
    evals = np.linalg.eigvalsh(mat.toarray())
    return int(np.sum(evals <= E + tie))


def count_below(H, E: float, dense_cap: int = DENSE_CAP) -> int:
    """Number of eigenvalues <= E, multiplicity counted.

    Eigenvalues within 1e-12 * ||H|| of E count as below.  Raises
    FactorizationBreakdown when the shift hits an eigenvalue beyond
    regularization and the operator is too large for the dense fallback.
    """
    mat = _as_matrix(H)
    n = mat.shape[0]
    band = lower_band(mat)
    scale = band_inf_norm(band) + abs(E) + 1.0
    tie = TIE_REL * scale
    if band.shape[0] - 1 > max(64, n // 3) and n <= dense_cap:
        return _dense_count(mat, E, tie)
    band[0] -= E + tie
    neg, hit = banded_inertia(band[None], reg=TIE_REL * scale)
    if hit[0]:
        if n <= dense_cap:
            return _dense_count(mat, E, tie)
        raise FactorizationBreakdown(
            f"pivot below regularization at E={E}; retry with perturbed energy"
        )
    return int(neg[0])


def count_below_ensemble(
    base_band: np.ndarray,
    diag_samples: np.ndarray,
    energies,
    dense_cap: int = DENSE_CAP,
) -> np.ndarray:
    """Counts for an ensemble sharing off-diagonal structure.

    ``base_band`` is the lower band of the sample-independent part
    (boundary terms and floor included as assembled), ``diag_samples``
    holds per-sample diagonal additions, shape (S, n).  Returns an
    integer array of shape (S, n_energies).  Lanes flagged by the
    regularization are recounted densely, so results match per-sample
    count_below calls.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    S, n = diag_samples.shape
    counts = np.empty((S, len(energies)), dtype=np.int64)
    base_scale = band_inf_norm(base_band)
    scale = base_scale + float(np.abs(diag_samples).max(initial=0.0))
    for ei, E in enumerate(energies):
        reg = TIE_REL * (scale + abs(E) + 1.0)
        tie = reg
        band = np.broadcast_to(base_band, (S,) + base_band.shape).copy()
        band[:, 0, :] += diag_samples - (E + tie)
        neg, hit = banded_inertia(band, reg=reg)
        counts[:, ei] = neg
        if hit.any():
            if n > dense_cap:
                raise FactorizationBreakdown(
                    f"pivot below regularization at E={E} for {hit.sum()} samples"
                )
            for s in np.nonzero(hit)[0]:
                full = _band_to_dense(base_band, diag_samples[s])
                counts[s, ei] = int(np.sum(np.linalg.eigvalsh(full) <= E + tie))
    return counts


def _band_to_dense(base_band: np.ndarray, diag_add: np.ndarray) -> np.ndarray:
    bwp1, n = base_band.shape
    full = np.zeros((n, n), dtype=base_band.dtype)
    for r in range(bwp1):
        idx = np.arange(n - r)
        full[idx + r, idx] = base_band[r, idx]
        if r > 0:
            full[idx, idx + r] = np.conj(base_band[r, idx])
    full[np.arange(n), np.arange(n)] += diag_add
    return full


# -- certified variational bounds ---------------------------------------------


def temple_lower_bound(H, u: np.ndarray, lam1_low: float) -> float:
    """Temple's inequality: a lower bound on the ground energy.

    Valid whenever ``lam1_low`` does not exceed the first excited level and
    exceeds the trial mean <u, H u>.
    """
    mat = _as_matrix(H)
    u = np.asarray(u, dtype=mat.dtype)
    nrm = np.linalg.norm(u)
    if nrm == 0:
        raise ZeroVector("Temple bound needs a nonzero trial vector")
    u = u / nrm
    Hu = mat @ u
    mean = float(np.vdot(u, Hu).real)
    second = float(np.vdot(Hu, Hu).real)
    var = max(second - mean * mean, 0.0)
    denom = lam1_low - mean
    if denom <= 0:
        raise DenominatorNonpositive(
            f"gap floor {lam1_low} does not exceed the trial mean {mean}"
        )
    return mean - var / denom


def rayleigh_ritz_upper(H, u: np.ndarray) -> float:
    """Rayleigh quotient <u, H u>/<u, u>: an upper bound on the ground energy."""
    mat = _as_matrix(H)
    u = np.asarray(u, dtype=mat.dtype)
    nrm2 = float(np.vdot(u, u).real)
    if nrm2 == 0:
        raise ZeroVector("Rayleigh-Ritz bound needs a nonzero trial vector")
    return float(np.vdot(u, mat @ u).real) / nrm2


@dataclass(frozen=True)
class CountCertificate:
    """Certified lower bound on the eigenvalue count below ``threshold``.

    Guarantees N(A, threshold) >= n from verified near-orthonormality and
    near-diagonality of the trial family.  ``rayleigh_max`` is the exact
    supremum of the Rayleigh quotient over the trial span (always <=
    threshold); ``threshold`` reduces to the familiar
    (alpha + eps2) / (1 - eps1) for small deviations and nonnegative
    numerator, with the Gram extremal eigenvalues replacing the first-order
    1 -+ eps1 factors so the certificate stays valid for negative spectra.
    """

    threshold: float
    n: int
    alpha: float
    eps1: float
    eps2: float
    eps1_spectral: float
    eps2_spectral: float
    gram_min_eig: float
    rayleigh_max: float


def variational_count_bound(apply_A, phis, alpha: float, eps1: float, eps2: float) -> CountCertificate:
    """Certify N(A, alpha') >= n from n approximate eigenvectors.

    Verifies internally that the Gram matrix deviates from the identity by
    at most ``eps1`` entrywise, that the A-matrix of the family deviates
    from diag(<phi_j, A phi_j>) by at most ``eps2`` entrywise with all
    diagonal values <= alpha, and that the Gram matrix is positive.
    """
    Phi = np.column_stack([np.asarray(p) for p in phis])
    n_vec = Phi.shape[1]
    if not 0 <= eps1 < 1:
        raise HypothesisViolated(f"need 0 <= eps1 < 1, got {eps1}")
    APhi = np.column_stack([apply_A(Phi[:, j]) for j in range(n_vec)])
    G = Phi.conj().T @ Phi
    B = Phi.conj().T @ APhi
    B = 0.5 * (B + B.conj().T)

    # verification slacks absorb evaluation noise of the Gram/A matrices
    slack = 1e-12 * (1.0 + float(np.abs(B).max()))
    dev_g = float(np.abs(G - np.eye(n_vec)).max())
    if dev_g > eps1 * (1 + 1e-12) + slack:
        raise HypothesisViolated(f"Gram deviation {dev_g:.3e} exceeds eps1={eps1:.3e}")
    alphas = np.real(np.diag(B))
    if alphas.max() > alpha + slack:
        raise HypothesisViolated(
            f"diagonal value {alphas.max():.6e} exceeds alpha={alpha:.6e}"
        )
    off = B - np.diag(np.diag(B))
    dev_b = float(np.abs(off).max())
    if dev_b > eps2 * (1 + 1e-12) + slack:
        raise HypothesisViolated(f"A-matrix off-diagonal {dev_b:.3e} exceeds eps2={eps2:.3e}")

    g_eigs = np.linalg.eigvalsh(G)
    if g_eigs[0] <= 0:
        raise GramDegenerate(f"Gram matrix minimum eigenvalue {g_eigs[0]:.3e} <= 0")

    e1s = float(np.abs(np.linalg.eigvalsh(G - np.eye(n_vec))).max())
    e2s = float(np.abs(np.linalg.eigvalsh(B - np.diag(alphas))).max())
    num = alpha + e2s
    denom = g_eigs[0] if num >= 0 else g_eigs[-1]
    threshold = num / denom

    import scipy.linalg as sla

    rayleigh_max = float(sla.eigh(B, G, eigvals_only=True)[-1])
    return CountCertificate(
        threshold=threshold,
        n=n_vec,
        alpha=float(alpha),
        eps1=float(eps1),
        eps2=float(eps2),
        eps1_spectral=e1s,
        eps2_spectral=e2s,
        gram_min_eig=float(g_eigs[0]),
        rayleigh_max=rayleigh_max,
    )
