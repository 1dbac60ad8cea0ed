"""Occupation-number configurations and second-quantized operators over M orbitals.

Index conventions
-----------------
``h[k, q]``        one-body integral <phi_k| h |phi_q>
``W[k, s, q, l]``  two-body integral W_ksql = <phi_k phi_s| W |phi_q phi_l>
                   (k, q share coordinate x; s, l share x')
``rho1[k, q]``     <b+_k b_q>
``rho2[k, s, l, q]`` <b+_k b+_s b_l b_q>

With these, E = sum rho1[k,q] h[k,q] + 1/2 sum rho2[k,s,l,q] W[k,s,q,l].
"""
import enum
from functools import cached_property, lru_cache
from math import comb

import numpy as np
import scipy.sparse as sp

from .errors import ContractError, InfeasibleBasisError

DENSE_LIMIT = 5000


class Statistics(enum.Enum):
    BOSON = "BOS"
    FERMION = "FER"


def _descending_occupations(n, m, cap):
    """Occupation vectors of n particles over m modes, lexicographically descending."""
    if m == 1:
        if n <= cap:
            yield (n,)
        return
    for first in range(min(n, cap), -1, -1):
        for rest in _descending_occupations(n - first, m - 1, cap):
            yield (first,) + rest


class ConfigurationBasis:
    """Enumerated configurations with a bijective occupation -> index map.

    Instances are immutable after construction; operator tables are built
    lazily on first use and cached.
    """

    def __init__(self, kind, n_particles, n_orbitals):
        kind = Statistics(kind)
        if n_particles < 1 or n_orbitals < 1:
            raise InfeasibleBasisError(
                f"need N >= 1 and M >= 1, got N={n_particles}, M={n_orbitals}")
        if kind is Statistics.FERMION and n_orbitals < n_particles:
            raise InfeasibleBasisError(
                f"{n_particles} fermions do not fit in {n_orbitals} orbitals")
        self.kind = kind
        self.n_particles = int(n_particles)
        self.n_orbitals = int(n_orbitals)
        cap = 1 if kind is Statistics.FERMION else self.n_particles
        configs = list(_descending_occupations(self.n_particles, self.n_orbitals, cap))
        self.configs = configs
        self.index = {c: i for i, c in enumerate(configs)}
        self.occupations = np.array(configs, dtype=np.int64).reshape(len(configs), self.n_orbitals)
        self.occupations.flags.writeable = False

    def __len__(self):
        return len(self.configs)

    @property
    def size(self):
        return len(self.configs)

    @property
    def fermionic(self):
        return self.kind is Statistics.FERMION

    def __repr__(self):
        return (f"ConfigurationBasis({self.kind.name}, N={self.n_particles}, "
                f"M={self.n_orbitals}, size={self.size})")

    def expected_size(self):
        if self.fermionic:
            return comb(self.n_orbitals, self.n_particles)
        return comb(self.n_particles + self.n_orbitals - 1, self.n_particles)

    def _lookup(self, occ):
        """Vectorized occupation -> index via base-(N+1) keys."""
        base = self.n_particles + 1
        weights = base ** np.arange(self.n_orbitals, dtype=np.int64)
        keys = self.occupations @ weights
        order = np.argsort(keys)
        pos = np.searchsorted(keys[order], occ @ weights)
        return order[np.clip(pos, 0, len(keys) - 1)]

    @cached_property
    def hopping_tables(self):
        """For every pair (k, q): target[k*M+q, b] and amp[k*M+q, b] of b+_k b_q |b>."""
        M = self.n_orbitals
        occ = self.occupations
        dim = self.size
        target = np.zeros((M * M, dim), dtype=np.int64)
        amp = np.zeros((M * M, dim))
        for k in range(M):
            for q in range(M):
                removed = occ.copy()
                removed[:, q] -= 1
                valid = occ[:, q] > 0
                if self.fermionic:
                    valid &= removed[:, k] == 0
                created = removed.copy()
                created[:, k] += 1
                if self.fermionic:
                    s1 = occ[:, :q].sum(axis=1)
                    s2 = removed[:, :k].sum(axis=1)
                    a = np.where((s1 + s2) % 2 == 0, 1.0, -1.0)
                else:
                    a = np.sqrt(occ[:, q] * created[:, k].astype(float))
                a = np.where(valid, a, 0.0)
                safe = np.where(valid[:, None], created, occ)
                target[k * M + q] = self._lookup(safe)
                amp[k * M + q] = a
        return target, amp

    @cached_property
    def coupling(self):
        """Sparse coupling tables over the upper triangle of the nonzero pattern of H.

        Returns (rows, cols, one_body, two_body). rows/cols list the nonzero
        positions (a, b) of H with a <= b; one_body has shape (n_pairs, M^2)
        with <a|b+_k b_q|b>, two_body has shape (n_pairs, M^4) with
        <a|b+_k b+_s b_l b_q|b> at column ((k*M+s)*M+l)*M+q. The two-body
        operator is invariant under (k,s,l,q) -> (s,k,q,l), so each such pair
        of columns is merged into the smaller index.
        """
        M = self.n_orbitals
        dim = self.size
        target, amp = self.hopping_tables
        b_all = np.arange(dim)

        ob_a, ob_b, ob_op, ob_val = [], [], [], []
        for kq in range(M * M):
            nz = (amp[kq] != 0) & (target[kq] <= b_all)
            ob_a.append(target[kq, nz])
            ob_b.append(b_all[nz])
            ob_op.append(np.full(nz.sum(), kq))
            ob_val.append(amp[kq, nz])
        ob_a, ob_b = np.concatenate(ob_a), np.concatenate(ob_b)
        ob_op, ob_val = np.concatenate(ob_op), np.concatenate(ob_val)

        canon = _exchange_canonical(M)
        tb_a, tb_b, tb_op, tb_val = [], [], [], []
        kk, qq = np.divmod(np.arange(M * M), M)
        for s in range(M):
            for l in range(M):
                first = amp[s * M + l]
                nz = first != 0
                if not nz.any():
                    continue
                mid = target[s * M + l, nz]
                val = amp[:, mid] * first[nz][None, :]
                a = target[:, mid]
                b = np.broadcast_to(b_all[nz][None, :], val.shape)
                keep = (val != 0) & (a <= b)
                ops = canon[(((kk * M + s) * M + l) * M + qq)][:, None]
                tb_a.append(a[keep])
                tb_b.append(b[keep])
                tb_op.append(np.broadcast_to(ops, val.shape)[keep])
                tb_val.append(val[keep])
        # - delta_sq b+_k b_l
        for s in range(M):
            ops = canon[((kk * M + s) * M + qq) * M + s]
            for kl in range(M * M):
                nz = (amp[kl] != 0) & (target[kl] <= b_all)
                tb_a.append(target[kl, nz])
                tb_b.append(b_all[nz])
                tb_op.append(np.full(nz.sum(), ops[kl]))
                tb_val.append(-amp[kl, nz])
        tb_a, tb_b = np.concatenate(tb_a), np.concatenate(tb_b)
        tb_op, tb_val = np.concatenate(tb_op), np.concatenate(tb_val)

        keys = np.concatenate([ob_a * dim + ob_b, tb_a * dim + tb_b, b_all * dim + b_all])
        pattern, inverse = np.unique(keys, return_inverse=True)
        n_ob, n_tb = len(ob_a), len(tb_a)
        n_pairs = len(pattern)
        one_body = sp.csr_matrix((ob_val, (inverse[:n_ob], ob_op)), shape=(n_pairs, M * M))
        two_body = sp.csr_matrix((tb_val, (inverse[n_ob:n_ob + n_tb], tb_op)),
                                 shape=(n_pairs, M ** 4))
        two_body.eliminate_zeros()
        rows, cols = np.divmod(pattern, dim)
        return rows, cols, one_body, two_body

    @cached_property
    def _density_tables(self):
        _, _, one_body, two_body = self.coupling
        return one_body.T.tocsr(), two_body.T.tocsr()

    @cached_property
    def _full_structure(self):
        """CSR indices/indptr of the full H and a gather map from [upper, conj(strict upper)]."""
        rows, cols, _, _ = self.coupling
        strict = np.flatnonzero(rows < cols)
        all_rows = np.concatenate([rows, cols[strict]])
        all_cols = np.concatenate([cols, rows[strict]])
        order = np.lexsort((all_cols, all_rows))
        indptr = np.zeros(self.size + 1, dtype=np.int64)
        np.cumsum(np.bincount(all_rows, minlength=self.size), out=indptr[1:])
        return all_cols[order].astype(np.int64), indptr, strict, order

    @cached_property
    def _diagonal_pairs(self):
        rows, cols, _, _ = self.coupling
        return np.flatnonzero(rows == cols)


@lru_cache(maxsize=16)
def _exchange_canonical(M):
    """Index map (k,s,l,q) -> min of itself and (s,k,q,l)."""
    idx = np.arange(M ** 4).reshape(M, M, M, M)
    return np.minimum(idx, idx.transpose(1, 0, 3, 2)).ravel()


@lru_cache(maxsize=16)
def _exchange_multiplicity(M):
    idx = np.arange(M ** 4).reshape(M, M, M, M)
    return np.where(idx == idx.transpose(1, 0, 3, 2), 1.0, 2.0).ravel()


@lru_cache(maxsize=16)
def _adjoint_index(M):
    """Column of (b+_k b+_s b_l b_q)^dagger = b+_q b+_l b_s b_k."""
    return np.arange(M ** 4).reshape(M, M, M, M).transpose(3, 2, 1, 0).ravel()


def enumerate_configs(kind, n_particles, n_orbitals):
    return ConfigurationBasis(kind, n_particles, n_orbitals)


def _check_integrals(basis, h, W):
    M = basis.n_orbitals
    h = np.asarray(h)
    W = np.asarray(W)
    if h.shape != (M, M):
        raise ContractError(f"one-body integrals have shape {h.shape}, expected {(M, M)}")
    if W.shape != (M, M, M, M):
        raise ContractError(f"two-body integrals have shape {W.shape}, expected {(M,) * 4}")
    return h, W


def _real_matvec(A, v):
    # A is real; keep scipy from upcasting the whole table to complex
    return A @ v.real + 1j * (A @ v.imag)


def hamiltonian_sparse(basis, h, W):
    """Configuration-space Hamiltonian as a CSR matrix (fixed sparsity pattern)."""
    h, W = _check_integrals(basis, h, W)
    _, _, one_body, two_body = basis.coupling
    w_op = np.ascontiguousarray(W.transpose(0, 1, 3, 2)).ravel()
    upper = (_real_matvec(one_body, h.ravel().astype(complex))
             + 0.5 * _real_matvec(two_body, w_op.astype(complex)))
    indices, indptr, strict, order = basis._full_structure
    data = np.concatenate([upper, upper[strict].conj()])[order]
    return sp.csr_matrix((data, indices, indptr), shape=(basis.size, basis.size))


def build_hamiltonian_matrix(basis, h, W):
    """H[a, b] = <n_a| H |n_b>; dense up to DENSE_LIMIT configurations, CSR beyond."""
    H = hamiltonian_sparse(basis, h, W)
    if basis.size <= DENSE_LIMIT:
        return H.toarray()
    return H


def transition_density_elements(basis, C, check_norm=True):
    """One- and two-body reduced density matrices in the orbital basis."""
    C = np.asarray(C, dtype=complex)
    if C.shape != (basis.size,):
        raise ContractError(f"coefficient vector has shape {C.shape}, expected ({basis.size},)")
    norm = np.vdot(C, C).real
    if check_norm and abs(norm - 1.0) > 1e-10:
        raise ContractError(f"coefficients not normalized: |C|^2 = {norm!r}")
    M = basis.n_orbitals
    rows, cols, _, _ = basis.coupling
    one_body_t, two_body_t = basis._density_tables
    weights = C[rows].conj() * C[cols]
    # the lower triangle is the adjoint of the upper one; halve the diagonal
    weights[basis._diagonal_pairs] *= 0.5
    x1 = _real_matvec(one_body_t, weights).reshape(M, M)
    rho1 = x1 + x1.conj().T
    y = _real_matvec(two_body_t, weights)
    y = y[_exchange_canonical(M)] / _exchange_multiplicity(M)
    rho2 = (y + y[_adjoint_index(M)].conj()).reshape(M, M, M, M)
    return rho1, rho2
