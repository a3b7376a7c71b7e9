import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_banded_symmetric, random_grid_hamiltonian
from striplab.errors import (
    DenominatorNonpositive,
    GramDegenerate,
    HypothesisViolated,
    InvalidParam,
    ZeroVector,
)
from striplab.grid import Bloch, BoundarySpec, Dirichlet, bc_all_neumann, build_grid
from striplab.operator import assemble
from striplab.spectral import (
    count_below,
    lowest_k,
    rayleigh_ritz_upper,
    temple_lower_bound,
    variational_count_bound,
)


def dense_count(A, E):
    scale = np.abs(A).sum(axis=1).max() + abs(E) + 1.0
    return int(np.sum(np.linalg.eigvalsh(A) <= E + 1e-12 * scale))


def test_lowest_k_free_neumann():
    g = build_grid(1, 1, L=2, a=1, M=2)
    H = assemble(g, np.zeros(4), bc_all_neumann())
    res = lowest_k(H, 2, tol=1e-9)
    assert np.max(np.abs(res.eigenvalues - [0.0, 2.0])) <= 1e-12
    assert res.method == "dense"
    assert np.all(res.residuals <= 1e-9)


def test_lowest_k_diagonal():
    A = sp.csr_matrix(np.diag([-1.0, 0.0, 2.0]))
    res = lowest_k(A, 2, tol=1e-12)
    assert np.array_equal(res.eigenvalues, [-1.0, 0.0])


def test_lowest_k_validates_k():
    A = sp.csr_matrix(np.eye(3))
    with pytest.raises(InvalidParam):
        lowest_k(A, 0)
    with pytest.raises(InvalidParam):
        lowest_k(A, 4)


def test_lowest_k_orthonormal_and_certified():
    rng = np.random.default_rng(5)
    H, _ = random_grid_hamiltonian(rng, L=6, M=10)
    res = lowest_k(H, 4, tol=1e-9)
    gram = res.eigenvectors.T @ res.eigenvectors
    assert np.max(np.abs(gram - np.eye(4))) <= 1e-8
    assert np.all(res.residuals <= 1e-9)


def test_lowest_k_iterative_matches_dense():
    rng = np.random.default_rng(6)
    for _ in range(5):
        H, _ = random_grid_hamiltonian(rng, L=7, M=10)
        dense = np.linalg.eigvalsh(H.dense())[:3]
        res = lowest_k(H, 3, tol=1e-8, dense_cap=1)  # force the Lanczos path
        assert res.method == "iterative"
        assert np.max(np.abs(res.eigenvalues - dense)) <= 1e-9


def test_count_below_examples():
    A = sp.csr_matrix(np.diag([-1.0, 0.0, 2.0]))
    assert count_below(A, 0.0) == 2
    g = build_grid(1, 1, L=2, a=1, M=2)
    H = assemble(g, np.zeros(4), bc_all_neumann())
    assert count_below(H, 1.0) == 1


def test_count_below_dense_oracle_batch():
    rng = np.random.default_rng(7)
    for _ in range(60):
        Hs, A = random_banded_symmetric(rng)
        E = float(rng.standard_normal() * 2)
        assert count_below(Hs, E) == dense_count(A, E)


def test_count_below_grid_instances():
    rng = np.random.default_rng(8)
    for _ in range(20):
        H, _ = random_grid_hamiltonian(rng)
        E = float(rng.uniform(-1.5, 6.0))
        assert count_below(H, E) == dense_count(H.dense(), E)


def test_count_below_complex_hermitian():
    g = build_grid(1, 1, L=1, a=5, M=8)
    rng = np.random.default_rng(9)
    v = rng.uniform(-2, 0, g.n_sites)
    H = assemble(g, v, BoundarySpec(x1=Bloch((1.1,)), x2=Dirichlet()))
    assert H.is_complex
    for E in (-1.5, 0.0, 2.0, 5.0):
        assert count_below(H, E) == dense_count(H.dense(), E)


@given(st.floats(-3, 3), st.floats(-5, 5), st.integers(0, 2**31))
def test_count_shift_identity(c, E, seed):
    rng = np.random.default_rng(seed)
    Hs, A = random_banded_symmetric(rng, n=30, bw=3)
    evals = np.linalg.eigvalsh(A)
    if np.min(np.abs(evals - E)) < 1e-6:  # stay off ties
        return
    n = A.shape[0]
    shifted = Hs + c * sp.eye(n, format="csr")
    assert count_below(shifted, E + c) == count_below(Hs, E)


def test_count_monotone_in_energy():
    rng = np.random.default_rng(10)
    Hs, A = random_banded_symmetric(rng, n=50, bw=4)
    energies = np.linspace(-4, 4, 17)
    counts = [count_below(Hs, E) for E in energies]
    assert all(b >= a for a, b in zip(counts, counts[1:]))


def test_count_below_breakdown_signalling():
    from striplab.errors import FactorizationBreakdown

    # an eigenvalue strictly inside the regularization band around E + tie:
    # dense fallback under the cap, explicit breakdown above it so the
    # caller can perturb and retry
    A = sp.csr_matrix(np.diag([1.0 + 2.5e-12, 1.0, 3.0]))
    assert count_below(A, 1.0) == 2
    with pytest.raises(FactorizationBreakdown):
        count_below(A, 1.0, dense_cap=0)


def test_temple_exact_eigenvector():
    A = np.diag([1.0, 3.0, 5.0])
    u = np.array([1.0, 0.0, 0.0])
    bound = temple_lower_bound(sp.csr_matrix(A), u, 2.0)
    assert abs(bound - 1.0) <= 1e-12


def test_temple_two_by_two_frozen():
    eps = 0.1
    A = sp.csr_matrix(np.array([[0.0, eps], [eps, 1.0]]))
    bound = temple_lower_bound(A, np.array([1.0, 0.0]), 0.5)
    assert abs(bound - (-0.02)) <= 1e-15
    e0 = (1 - np.sqrt(1 + 4 * eps * eps)) / 2
    assert bound <= e0


def test_temple_denominator_guard():
    A = sp.csr_matrix(np.diag([0.0, 1.0]))
    with pytest.raises(DenominatorNonpositive):
        temple_lower_bound(A, np.array([1.0, 0.0]), -0.5)


def test_temple_random_instances_below_ground():
    rng = np.random.default_rng(12)
    for _ in range(40):
        Hs, A = random_banded_symmetric(rng, n=30, bw=4)
        evals, evecs = np.linalg.eigh(A)
        u = evecs[:, 0] + 0.05 * rng.standard_normal(30)
        u /= np.linalg.norm(u)
        mean = u @ A @ u
        if evals[1] <= mean:
            continue
        bound = temple_lower_bound(Hs, u, evals[1])
        assert bound <= evals[0] + 1e-10


def test_rayleigh_ritz():
    g = build_grid(1, 1, L=2, a=1, M=2)
    H = assemble(g, np.zeros(4), bc_all_neumann())
    const = np.ones(4)
    assert abs(rayleigh_ritz_upper(H, const)) <= 1e-12
    with pytest.raises(ZeroVector):
        rayleigh_ritz_upper(H, np.zeros(4))
    rng = np.random.default_rng(13)
    for _ in range(30):
        Hs, A = random_banded_symmetric(rng, n=25, bw=3)
        u = rng.standard_normal(25)
        assert rayleigh_ritz_upper(Hs, u) >= np.linalg.eigvalsh(A)[0] - 1e-12


def certificate_never_contradicted(rng, n_trials):
    for _ in range(n_trials):
        n = int(rng.integers(8, 40))
        A = rng.standard_normal((n, n))
        A = (A + A.T) / 2
        evals, evecs = np.linalg.eigh(A)
        k = int(rng.integers(1, 5))
        noise = rng.uniform(0.0, 0.25)
        phis = [
            evecs[:, j] + noise * rng.standard_normal(n) / np.sqrt(n) for j in range(k)
        ]
        Phi = np.column_stack(phis)
        G = Phi.T @ Phi
        B = Phi.T @ A @ Phi
        eps1 = float(np.abs(G - np.eye(k)).max())
        eps2 = float(np.abs(B - np.diag(np.diag(B))).max())
        alpha = float(np.max(np.diag(B)))
        if eps1 >= 0.9:
            continue
        try:
            cert = variational_count_bound(lambda v: A @ v, phis, alpha, eps1, eps2)
        except GramDegenerate:
            continue
        have = int(np.sum(evals <= cert.threshold + 1e-10 * (1 + abs(cert.threshold))))
        assert have >= cert.n, (have, cert)
        assert cert.rayleigh_max <= cert.threshold + 1e-10 * (1 + abs(cert.threshold))


def test_variational_count_bound_exact_vectors():
    rng = np.random.default_rng(14)
    A = rng.standard_normal((20, 20))
    A = (A + A.T) / 2
    evals, evecs = np.linalg.eigh(A)
    phis = [evecs[:, j] for j in range(3)]
    cert = variational_count_bound(lambda v: A @ v, phis, float(evals[2]), 1e-12, 1e-10)
    assert abs(cert.threshold - evals[2]) <= 1e-9
    assert int(np.sum(evals <= cert.threshold + 1e-9)) >= 3


def test_variational_count_bound_perturbed_50x50():
    rng = np.random.default_rng(15)
    A = rng.standard_normal((50, 50))
    A = (A + A.T) / 2
    evals, evecs = np.linalg.eigh(A)
    phis = [evecs[:, j] + 1e-3 * rng.standard_normal(50) for j in range(2)]
    Phi = np.column_stack(phis)
    G, B = Phi.T @ Phi, Phi.T @ A @ Phi
    cert = variational_count_bound(
        lambda v: A @ v,
        phis,
        float(np.max(np.diag(B))),
        float(np.abs(G - np.eye(2)).max()),
        float(np.abs(B - np.diag(np.diag(B))).max()),
    )
    assert int(np.sum(evals <= cert.threshold + 1e-12)) >= 2


def test_variational_count_bound_randomized():
    certificate_never_contradicted(np.random.default_rng(16), 150)


def test_variational_count_bound_hypothesis_violated():
    A = np.diag([0.0, 1.0])
    phis = [np.array([1.0, 0.0]), np.array([0.8, 0.6])]
    with pytest.raises(HypothesisViolated):
        variational_count_bound(lambda v: A @ v, phis, 1.0, 1e-6, 10.0)
