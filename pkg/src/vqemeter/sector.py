"""Exact reference states in a fixed (n_up, n_down) particle sector.

Determinants are pairs of occupation bit masks, one per spin, under the block
qubit layout (up-spin modes 0..M-1, down-spin modes M..2M-1).  The Hamiltonian
acts through precomputed single-excitation tables, contracting the
two-electron tensor with generalized one-body transition amplitudes, so full
configuration interaction runs comfortably up to ~10^5 determinants.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fermionic import FermionOperator, chemist_one_body
from .integrals import IntegralSet

MAX_SECTOR_DIM_ENV = "VQEMETER_MAX_SECTOR_DIM"
DEFAULT_MAX_SECTOR_DIM = 500_000
DENSE_CUTOFF = 2000


class SectorDimensionError(RuntimeError):
    """Requested sector exceeds the configured determinant limit."""


def max_sector_dim() -> int:
    return int(os.environ.get(MAX_SECTOR_DIM_ENV, DEFAULT_MAX_SECTOR_DIM))


def spin_determinants(n_orb: int, n_elec: int) -> np.ndarray:
    """All n_elec-bit masks over n_orb orbitals, ascending."""
    if not 0 <= n_elec <= n_orb:
        raise ValueError(f"cannot place {n_elec} electrons in {n_orb} orbitals")
    masks = [
        sum(1 << p for p in occ) for occ in combinations(range(n_orb), n_elec)
    ]
    return np.array(sorted(masks), dtype=np.uint64)


def _parity_below(masks: np.ndarray, orbital: int) -> np.ndarray:
    below = np.uint64((1 << orbital) - 1)
    return (np.bitwise_count(masks & below) & 1).astype(np.int8)


def _excitation_table(masks: np.ndarray, n_orb: int):
    """Per (p, q): arrays (src, dst, sign) realizing a+_p a_q within one spin."""
    order = {int(m): i for i, m in enumerate(masks)}
    table = {}
    for p in range(n_orb):
        bit_p = np.uint64(1 << p)
        for q in range(n_orb):
            bit_q = np.uint64(1 << q)
            if p == q:
                src = np.nonzero((masks & bit_q) != 0)[0]
                table[(p, q)] = (src, src, np.ones(len(src)))
                continue
            sel = np.nonzero(((masks & bit_q) != 0) & ((masks & bit_p) == 0))[0]
            if len(sel) == 0:
                table[(p, q)] = (sel, sel, np.zeros(0))
                continue
            chosen = masks[sel]
            sign = 1 - 2 * _parity_below(chosen, q).astype(np.int64)
            removed = chosen ^ bit_q
            sign = sign * (1 - 2 * _parity_below(removed, p).astype(np.int64))
            result = removed | bit_p
            dst = np.array([order[int(m)] for m in result], dtype=np.int64)
            table[(p, q)] = (sel, dst, sign.astype(np.float64))
    return table


class SectorBasis:
    """Cached determinant lists and excitation tables for one sector."""

    def __init__(self, n_spatial: int, n_up: int, n_down: int):
        self.n_spatial = n_spatial
        self.n_up = n_up
        self.n_down = n_down
        self.ups = spin_determinants(n_spatial, n_up)
        self.downs = spin_determinants(n_spatial, n_down)
        self.exc_up = _excitation_table(self.ups, n_spatial)
        self.exc_down = _excitation_table(self.downs, n_spatial)

    @property
    def dim(self) -> int:
        return len(self.ups) * len(self.downs)

    def determinants(self) -> list[tuple[int, int]]:
        return [(int(u), int(d)) for u in self.ups for d in self.downs]

    def full_masks(self) -> np.ndarray:
        m = self.n_spatial
        return (
            self.ups[:, None].astype(np.uint64)
            | (self.downs[None, :].astype(np.uint64) << np.uint64(m))
        ).ravel()

    def index_of(self, up_mask: int, dn_mask: int) -> int:
        iu = int(np.searchsorted(self.ups, np.uint64(up_mask)))
        idn = int(np.searchsorted(self.downs, np.uint64(dn_mask)))
        if iu >= len(self.ups) or int(self.ups[iu]) != up_mask:
            raise KeyError(f"up mask {up_mask:#x} not in sector")
        if idn >= len(self.downs) or int(self.downs[idn]) != dn_mask:
            raise KeyError(f"down mask {dn_mask:#x} not in sector")
        return iu * len(self.downs) + idn


_BASIS_CACHE: dict[tuple[int, int, int], SectorBasis] = {}


def sector_basis(n_spatial: int, n_up: int, n_down: int) -> SectorBasis:
    key = (n_spatial, n_up, n_down)
    if key not in _BASIS_CACHE:
        _BASIS_CACHE[key] = SectorBasis(*key)
    return _BASIS_CACHE[key]


@dataclass
class SectorState:
    """Unit-norm real wavefunction over a sector's determinant basis."""

    n_spatial: int
    n_up: int
    n_down: int
    amplitudes: np.ndarray     # flat, up-major

    def __post_init__(self):
        norm = float(np.linalg.norm(self.amplitudes))
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"amplitudes must be unit norm (got {norm!r})")

    @property
    def basis(self) -> SectorBasis:
        return sector_basis(self.n_spatial, self.n_up, self.n_down)

    @property
    def determinants(self) -> list[tuple[int, int]]:
        return self.basis.determinants()

    def as_matrix(self) -> np.ndarray:
        basis = self.basis
        return self.amplitudes.reshape(len(basis.ups), len(basis.downs))

    def to_statevector(self) -> np.ndarray:
        """Dense 2^(2M) amplitude vector under the block layout."""
        n_qubits = 2 * self.n_spatial
        state = np.zeros(1 << n_qubits)
        state[self.basis.full_masks().astype(np.int64)] = self.amplitudes
        return state


def determinant_state(
    n_spatial: int, up_mask: int, dn_mask: int
) -> SectorState:
    n_up = bin(up_mask).count("1")
    n_down = bin(dn_mask).count("1")
    basis = sector_basis(n_spatial, n_up, n_down)
    amps = np.zeros(basis.dim)
    amps[basis.index_of(up_mask, dn_mask)] = 1.0
    return SectorState(n_spatial, n_up, n_down, amps)


def hartree_fock_state(n_spatial: int, n_up: int, n_down: int) -> SectorState:
    """Aufbau determinant in the current orbital ordering."""
    return determinant_state(n_spatial, (1 << n_up) - 1, (1 << n_down) - 1)


class SectorHamiltonian:
    """Matrix-free H|C> in a sector, driven by an IntegralSet."""

    def __init__(self, integrals: IntegralSet, n_up: int, n_down: int):
        self.integrals = integrals
        self.basis = sector_basis(integrals.n_spatial, n_up, n_down)
        self.t_eff = chemist_one_body(integrals)
        m = integrals.n_spatial
        self._v_matrix = integrals.v.reshape(m * m, m * m)

    def _transition_amplitudes(self, c: np.ndarray) -> np.ndarray:
        """D[p, q] = E_pq C for all spatial pairs, summed over spins."""
        basis, m = self.basis, self.integrals.n_spatial
        du, dd = len(basis.ups), len(basis.downs)
        d = np.zeros((m, m, du, dd))
        for (p, q), (src, dst, sign) in basis.exc_up.items():
            if len(src):
                d[p, q][dst, :] += sign[:, None] * c[src, :]
        for (p, q), (src, dst, sign) in basis.exc_down.items():
            if len(src):
                d[p, q][:, dst] += c[:, src] * sign[None, :]
        return d

    def _apply_transitions(self, f: np.ndarray, out: np.ndarray):
        basis = self.basis
        for (p, q), (src, dst, sign) in basis.exc_up.items():
            if len(src):
                out[dst, :] += sign[:, None] * f[p, q][src, :]
        for (p, q), (src, dst, sign) in basis.exc_down.items():
            if len(src):
                out[:, dst] += f[p, q][:, src] * sign[None, :]

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        basis, m = self.basis, self.integrals.n_spatial
        du, dd = len(basis.ups), len(basis.downs)
        c = vec.reshape(du, dd)
        d = self._transition_amplitudes(c)
        sigma = self.integrals.e_core * c.copy()
        sigma += np.einsum("pq,pqxy->xy", self.t_eff, d)
        f = (self._v_matrix @ d.reshape(m * m, du * dd)).reshape(m, m, du, dd)
        half = np.zeros_like(c)
        self._apply_transitions(f, half)
        sigma += 0.5 * half
        return sigma.reshape(-1)

    def to_linear_operator(self) -> spla.LinearOperator:
        dim = self.basis.dim
        return spla.LinearOperator((dim, dim), matvec=self.matvec, dtype=float)

    def dense(self) -> np.ndarray:
        dim = self.basis.dim
        out = np.empty((dim, dim))
        eye = np.eye(dim)
        for col in range(dim):
            out[:, col] = self.matvec(eye[:, col])
        return 0.5 * (out + out.T)


def _operator_sector_matrix(op: FermionOperator, basis: SectorBasis) -> sp.csr_matrix:
    """Sparse sector matrix of an arbitrary particle-conserving FermionOperator."""
    m = basis.n_spatial
    full = basis.full_masks()
    dim = len(full)
    nd = len(basis.downs)
    up_of = full & np.uint64((1 << m) - 1)
    rows, cols, vals = [], [], []
    for key, coeff in op.terms.items():
        cur = full.copy()
        sign = np.ones(dim)
        alive = np.ones(dim, dtype=bool)
        for index, dagger in reversed(key):
            bit = np.uint64(1 << index)
            occupied = (cur & bit) != 0
            alive &= occupied != dagger
            parity = (np.bitwise_count(cur & np.uint64(bit - np.uint64(1))) & 1).astype(bool)
            sign = np.where(parity, -sign, sign)
            cur = cur ^ np.where(alive, bit, np.uint64(0))
        if not np.any(alive):
            continue
        src = np.nonzero(alive)[0]
        res = cur[src]
        up = res & np.uint64((1 << m) - 1)
        dn = res >> np.uint64(m)
        iu = np.searchsorted(basis.ups, up)
        idn = np.searchsorted(basis.downs, dn)
        ok = (
            (iu < len(basis.ups))
            & (idn < len(basis.downs))
        )
        iu = np.minimum(iu, len(basis.ups) - 1)
        idn = np.minimum(idn, len(basis.downs) - 1)
        ok &= (basis.ups[iu] == up) & (basis.downs[idn] == dn)
        if not np.all(ok):
            raise ValueError("operator leaves the particle-number sector")
        rows.append(iu * nd + idn)
        cols.append(src)
        vals.append(coeff * sign[src])
    if rows:
        mat = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        ).tocsr()
    else:
        mat = sp.csr_matrix((dim, dim))
    return mat + sp.identity(dim, format="csr") * op.constant


def _lowest_eigenpair(
    matvec_op, dim: int, dense_cutoff: int, seed: int
) -> tuple[float, np.ndarray]:
    if dim == 1:
        e = float(matvec_op(np.ones(1))[0])
        return e, np.ones(1)
    if dim <= dense_cutoff:
        dense = np.empty((dim, dim))
        eye = np.eye(dim)
        for col in range(dim):
            dense[:, col] = matvec_op(eye[:, col])
        dense = 0.5 * (dense + dense.T)
        evals, evecs = np.linalg.eigh(dense)
        return float(evals[0]), evecs[:, 0]
    rng = np.random.default_rng(seed)
    v0 = rng.normal(size=dim)
    linop = spla.LinearOperator((dim, dim), matvec=matvec_op, dtype=float)
    evals, evecs = spla.eigsh(linop, k=1, which="SA", v0=v0, maxiter=5000)
    return float(evals[0]), evecs[:, 0]


def _finalize(
    vec: np.ndarray,
    energy: float,
    matvec_op,
    n_spatial: int,
    n_up: int,
    n_down: int,
) -> tuple[float, SectorState]:
    vec = vec / np.linalg.norm(vec)
    pivot = int(np.argmax(np.abs(vec)))
    if vec[pivot] < 0:
        vec = -vec
    residual = float(np.linalg.norm(matvec_op(vec) - energy * vec))
    if residual > 1e-8:
        raise RuntimeError(f"eigensolver residual {residual:.2e} above 1e-8")
    return energy, SectorState(n_spatial, n_up, n_down, vec)


def fci_ground_state(
    hamiltonian: Union[IntegralSet, FermionOperator],
    n_up: int,
    n_down: int,
    dense_cutoff: int = DENSE_CUTOFF,
    seed: int = 0,
) -> tuple[float, SectorState]:
    """Lowest eigenpair of H restricted to the (n_up, n_down) sector.

    Accepts either molecular integrals (fast contraction engine) or an
    explicit FermionOperator on 2M modes in the block layout.

    Raises:
        SectorDimensionError: sector dimension above the configured cap.
        ValueError: non-Hermitian FermionOperator input.
    """
    if isinstance(hamiltonian, FermionOperator):
        if not hamiltonian.is_hermitian(tol=1e-10):
            raise ValueError("sector diagonalization needs a Hermitian operator")
        n_modes = hamiltonian.n_modes()
        m = (n_modes + 1) // 2
        basis = sector_basis(m, n_up, n_down)
        if basis.dim > max_sector_dim():
            raise SectorDimensionError(
                f"sector dimension {basis.dim} exceeds cap {max_sector_dim()}"
            )
        mat = _operator_sector_matrix(hamiltonian, basis)
        energy, vec = _lowest_eigenpair(lambda x: mat @ x, basis.dim, dense_cutoff, seed)
        return _finalize(vec, energy, lambda x: mat @ x, m, n_up, n_down)

    ham = SectorHamiltonian(hamiltonian, n_up, n_down)
    if ham.basis.dim > max_sector_dim():
        raise SectorDimensionError(
            f"sector dimension {ham.basis.dim} exceeds cap {max_sector_dim()}"
        )
    energy, vec = _lowest_eigenpair(ham.matvec, ham.basis.dim, dense_cutoff, seed)
    return _finalize(vec, energy, ham.matvec, hamiltonian.n_spatial, n_up, n_down)


def _excitation_counts(masks: np.ndarray, reference: int) -> np.ndarray:
    ref = np.uint64(reference)
    return (np.bitwise_count(masks ^ ref) // 2).astype(np.int64)


def cisd_state(
    integrals: IntegralSet,
    n_up: int,
    n_down: int,
    dense_cutoff: int = 600,
    seed: int = 0,
) -> tuple[float, SectorState]:
    """Lowest eigenpair in {reference} + singles + doubles off the aufbau determinant.

    Returns the state embedded in the full sector basis (zeros outside the
    CISD space), so downstream evaluation code is shared with FCI states.
    """
    ham = SectorHamiltonian(integrals, n_up, n_down)
    basis = ham.basis
    if basis.dim > max_sector_dim():
        raise SectorDimensionError(
            f"sector dimension {basis.dim} exceeds cap {max_sector_dim()}"
        )
    ref_up = (1 << n_up) - 1
    ref_dn = (1 << n_down) - 1
    exc_up = _excitation_counts(basis.ups, ref_up)
    exc_dn = _excitation_counts(basis.downs, ref_dn)
    keep = (exc_up[:, None] + exc_dn[None, :]).ravel() <= 2
    subspace = np.nonzero(keep)[0]
    sub_dim = len(subspace)

    def sub_matvec(x):
        full = np.zeros(basis.dim)
        full[subspace] = x
        return ham.matvec(full)[subspace]

    energy, vec = _lowest_eigenpair(sub_matvec, sub_dim, dense_cutoff, seed)
    amplitudes = np.zeros(basis.dim)
    amplitudes[subspace] = vec / np.linalg.norm(vec)
    pivot = int(np.argmax(np.abs(amplitudes)))
    if amplitudes[pivot] < 0:
        amplitudes = -amplitudes
    residual = float(np.linalg.norm(sub_matvec(vec) - energy * vec))
    if residual > 1e-8:
        raise RuntimeError(f"eigensolver residual {residual:.2e} above 1e-8")
    return energy, SectorState(integrals.n_spatial, n_up, n_down, amplitudes)
