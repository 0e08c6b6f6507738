"""Double factorization of the two-electron tensor.

First step: eigendecompose the M^2 x M^2 supermatrix V_(pq),(rs) into rank-one
fragments w_l * v^(l) (x) v^(l).  Second step: diagonalize every one-body
fragment matrix, absorbing the eigenvalue products into a diagonal
number-number coefficient matrix measured after an orbital rotation.

The assembled form is

    H = E0 + sum_s U0 (sum_p g_p n_ps) U0+
           + sum_l U_l ( sum_{(ps) != (qt)} G^l_pq n_ps n_qt ) U_l+

where the same-mode diagonal of each fragment has been folded back into the
effective one-body matrix (number operators are idempotent), keeping fragment
observables purely two-body.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .integrals import IntegralSet

NONZERO_EIGENVALUE_CUTOFF = 1e-12


@dataclass(frozen=True)
class RankOneFragment:
    """One eigenpair of the ERI supermatrix: weight w and symmetric matrix v."""

    w: float
    v: np.ndarray

    def __post_init__(self):
        if np.max(np.abs(self.v - self.v.T)) > 1e-10:
            raise ValueError("fragment matrix must be symmetric")


@dataclass(frozen=True)
class FactorizedHamiltonian:
    """Constant + rotated one-body part + L rotated number-number fragments."""

    constant: float
    one_body_energies: np.ndarray        # g, length M
    one_body_rotation: np.ndarray        # U0, M x M orthogonal, det +1
    fragments: tuple[tuple[np.ndarray, np.ndarray], ...]   # (G, U) pairs

    @property
    def n_spatial(self) -> int:
        return len(self.one_body_energies)

    @property
    def rank(self) -> int:
        return len(self.fragments)

    def __post_init__(self):
        m = self.n_spatial
        for u in (self.one_body_rotation, *(u for _, u in self.fragments)):
            if u.shape != (m, m) or np.max(np.abs(u.T @ u - np.eye(m))) > 1e-10:
                raise ValueError("rotation matrices must be orthogonal")


def eigen_factorize(integrals: IntegralSet, threshold: float = 0.0) -> list[RankOneFragment]:
    """Rank-one fragments of the two-electron tensor, sorted by |w| descending.

    Keeps eigenvalues with |w| above max(threshold, 1e-12); threshold 0 keeps
    every numerically nonzero eigenvalue, reconstructing V to ~1e-12.

    Raises:
        ValueError: tensor without the eight-fold symmetry.
    """
    m = integrals.n_spatial
    v = integrals.v
    if np.max(np.abs(v - v.transpose(1, 0, 2, 3))) > 1e-10 or (
        np.max(np.abs(v - v.transpose(2, 3, 0, 1))) > 1e-10
    ):
        raise ValueError("two-electron tensor lacks the required symmetry")
    supermatrix = v.reshape(m * m, m * m)
    eigvals, eigvecs = np.linalg.eigh(supermatrix)
    cutoff = max(threshold, NONZERO_EIGENVALUE_CUTOFF)
    fragments = []
    for w, vec in zip(eigvals, eigvecs.T):
        if abs(w) <= cutoff:
            continue
        mat = vec.reshape(m, m)
        mat = 0.5 * (mat + mat.T)   # exact up to roundoff: nonzero modes are symmetric
        fragments.append(RankOneFragment(w=float(w), v=mat))
    fragments.sort(key=lambda f: -abs(f.w))
    return fragments


def reconstruct_tensor(fragments: Sequence[RankOneFragment], m: int) -> np.ndarray:
    out = np.zeros((m, m, m, m))
    for frag in fragments:
        out += frag.w * np.einsum("pq,rs->pqrs", frag.v, frag.v)
    return out


def _fix_determinant(u: np.ndarray) -> np.ndarray:
    """Flip one column sign if needed so det(u) = +1 (a gauge freedom)."""
    if np.linalg.det(u) < 0:
        u = u.copy()
        u[:, 0] = -u[:, 0]
    return u


def assemble(integrals: IntegralSet, fragments: Sequence[RankOneFragment]) -> FactorizedHamiltonian:
    """Diagonalize every one-body piece, producing the measurable form.

    The effective one-body matrix is the chemist T plus the same-mode diagonal
    contribution (1/2) w v^2 of each retained fragment; each fragment carries
    G = (1/2) w diag-eigs outer product in its own eigenbasis.
    """
    from .fermionic import chemist_one_body

    m = integrals.n_spatial
    assembled = []
    t_eff = chemist_one_body(integrals)
    for frag in fragments:
        lam, rot = np.linalg.eigh(frag.v)
        rot = _fix_determinant(rot)
        if np.max(np.abs(rot @ np.diag(lam) @ rot.T - frag.v)) > 1e-8:
            raise ValueError("fragment eigendecomposition failed to reproduce v")
        g = 0.5 * frag.w * np.outer(lam, lam)
        assembled.append((g, rot))
        t_eff = t_eff + 0.5 * frag.w * (frag.v @ frag.v)

    g0, u0 = np.linalg.eigh(0.5 * (t_eff + t_eff.T))
    u0 = _fix_determinant(u0)
    return FactorizedHamiltonian(
        constant=integrals.e_core,
        one_body_energies=g0,
        one_body_rotation=u0,
        fragments=tuple(assembled),
    )


def factorize(integrals: IntegralSet, threshold: float = 0.0) -> FactorizedHamiltonian:
    return assemble(integrals, eigen_factorize(integrals, threshold))


def truncation_error(
    integrals: IntegralSet,
    threshold: float,
    ground_energy: Optional[Callable[[IntegralSet], float]] = None,
) -> tuple[int, float, Optional[float]]:
    """(retained rank, Frobenius reconstruction error, ground-energy shift).

    The energy shift is computed only when a sector diagonalizer callback is
    supplied; it receives the truncated IntegralSet.
    """
    fragments = eigen_factorize(integrals, threshold)
    m = integrals.n_spatial
    approx = reconstruct_tensor(fragments, m)
    frobenius = float(np.linalg.norm(integrals.v - approx))
    shift = None
    if ground_energy is not None:
        truncated = IntegralSet(
            n_spatial=m,
            e_core=integrals.e_core,
            h=integrals.h,
            v=approx,
            orbital_energies=integrals.orbital_energies,
        )
        shift = ground_energy(integrals) - ground_energy(truncated)
    return len(fragments), frobenius, shift


def to_fermion_operator(
    integrals: IntegralSet, fragments: Sequence[RankOneFragment], layout: str = "block"
):
    """Fermionic form of the (possibly truncated) factorization: T + sum w/2 rho^2."""
    from .fermionic import FermionOperator, chemist_one_body, spin_index

    m = integrals.n_spatial
    idx = [[spin_index(p, s, m, layout) for p in range(m)] for s in (0, 1)]
    op = FermionOperator(constant=integrals.e_core)
    t = chemist_one_body(integrals)
    for s in (0, 1):
        for p in range(m):
            for q in range(m):
                if abs(t[p, q]) > 1e-14:
                    op.add_term(((idx[s][p], True), (idx[s][q], False)), t[p, q])
    for frag in fragments:
        for sa in (0, 1):
            for sb in (0, 1):
                for p in range(m):
                    for q in range(m):
                        for r in range(m):
                            for s_ in range(m):
                                c = 0.5 * frag.w * frag.v[p, q] * frag.v[r, s_]
                                if abs(c) > 1e-14:
                                    op.add_term(
                                        (
                                            (idx[sa][p], True),
                                            (idx[sa][q], False),
                                            (idx[sb][r], True),
                                            (idx[sb][s_], False),
                                        ),
                                        c,
                                    )
    return op


def serialize(factorized: FactorizedHamiltonian) -> str:
    """JSON text artifact: constant, g/U0 and per-fragment (G, U) matrices."""
    payload = {
        "format": "vqemeter-factorization-1",
        "constant": factorized.constant,
        "one_body_energies": factorized.one_body_energies.tolist(),
        "one_body_rotation": factorized.one_body_rotation.tolist(),
        "fragments": [
            {"coefficients": g.tolist(), "rotation": u.tolist()}
            for g, u in factorized.fragments
        ],
    }
    return json.dumps(payload, indent=1)


def deserialize(text: str) -> FactorizedHamiltonian:
    payload = json.loads(text)
    if payload.get("format") != "vqemeter-factorization-1":
        raise ValueError("unrecognized factorization artifact format")
    return FactorizedHamiltonian(
        constant=float(payload["constant"]),
        one_body_energies=np.array(payload["one_body_energies"]),
        one_body_rotation=np.array(payload["one_body_rotation"]),
        fragments=tuple(
            (np.array(f["coefficients"]), np.array(f["rotation"]))
            for f in payload["fragments"]
        ),
    )
