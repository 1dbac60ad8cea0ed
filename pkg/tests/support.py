"""Shared builders for tests: random valid states and a dense Fock-space oracle."""
import itertools

import numpy as np

from mqdx.fock import ConfigurationBasis
from mqdx.grid import build_grid
from mqdx.mctdh import ManyBodyState


def random_orbitals(grid, M, rng, width=2.0):
    """M orthonormal smooth orbitals: Gaussian-damped random polynomials, then QR."""
    x = grid.points
    raw = np.array([(rng.standard_normal(4) @ np.vstack([x ** p for p in range(4)])
                     + 1j * (rng.standard_normal(4) @ np.vstack([x ** p for p in range(4)])))
                    * np.exp(-x ** 2 / (2 * width ** 2)) for _ in range(M)])
    q, _ = np.linalg.qr(raw.T)
    return q.T / np.sqrt(grid.spacing)


def random_state(kind, N, M, rng, n_points=32, x_min=-8.0, x_max=8.0):
    grid = build_grid(n_points, x_min, x_max)
    basis = ConfigurationBasis(kind, N, M)
    C = rng.standard_normal(basis.size) + 1j * rng.standard_normal(basis.size)
    return ManyBodyState(grid, basis, random_orbitals(grid, M, rng), C / np.linalg.norm(C))


def random_hermitian(n, rng):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A + A.conj().T


def random_two_body(M, rng):
    """Random W[k,s,q,l] with the symmetries of a real symmetric kernel."""
    X = rng.standard_normal((M,) * 4) + 1j * rng.standard_normal((M,) * 4)
    X = X + X.transpose(1, 0, 3, 2)
    return X + X.transpose(2, 3, 0, 1).conj()


def hopping_matrices(basis):
    """Dense b+_k b_q matrices built config by config, independent of the package tables."""
    M, dim = basis.n_orbitals, basis.size
    E = {}
    for k, q in itertools.product(range(M), repeat=2):
        A = np.zeros((dim, dim))
        for b, occ in enumerate(basis.configs):
            if occ[q] == 0:
                continue
            new = list(occ)
            sign, amp = 1.0, np.sqrt(occ[q])
            if basis.fermionic:
                sign *= (-1) ** sum(new[:q])
            new[q] -= 1
            if basis.fermionic and new[k] == 1:
                continue
            if basis.fermionic:
                sign *= (-1) ** sum(new[:k])
            amp *= np.sqrt(new[k] + 1)
            new[k] += 1
            A[basis.index[tuple(new)], b] += sign * amp
        E[k, q] = A
    return E


def dense_hamiltonian(basis, h, W):
    M = basis.n_orbitals
    E = hopping_matrices(basis)
    H = sum(h[k, q] * E[k, q] for k, q in itertools.product(range(M), repeat=2))
    for k, s, q, l in itertools.product(range(M), repeat=4):
        op = E[k, q] @ E[s, l] - (E[k, l] if s == q else 0)
        H = H + 0.5 * W[k, s, q, l] * op
    return H


def dense_densities(basis, C):
    M = basis.n_orbitals
    E = hopping_matrices(basis)
    rho1 = np.array([[C.conj() @ E[k, q] @ C for q in range(M)] for k in range(M)])
    rho2 = np.zeros((M,) * 4, complex)
    for k, s, l, q in itertools.product(range(M), repeat=4):
        rho2[k, s, l, q] = C.conj() @ (E[k, q] @ E[s, l] - (E[k, l] if s == q else 0)) @ C
    return rho1, rho2
