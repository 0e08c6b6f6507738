"""Second-quantized operator algebra on spin orbitals.

Ladder terms are stored as tuples of ``(mode index, dagger flag)`` mapped to
real coefficients.  The canonical (normal-ordered) form puts all creation
operators first with strictly increasing indices, followed by annihilation
operators with strictly decreasing indices; repeated indices within a block
vanish by nilpotency.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .integrals import IntegralSet

LadderTerm = tuple[tuple[int, bool], ...]

PRUNE_THRESHOLD = 1e-12

SPIN_LAYOUTS = ("block", "interleaved")


class FermionOperator:
    """Weighted sum of ladder-operator products plus a constant."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[LadderTerm, float] | None = None, constant: float = 0.0):
        self.terms: dict[LadderTerm, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    def add_term(self, ladder: LadderTerm, coefficient: float):
        if not ladder:
            self.constant += coefficient
            return
        new = self.terms.get(ladder, 0.0) + coefficient
        if abs(new) > PRUNE_THRESHOLD:
            self.terms[ladder] = new
        else:
            self.terms.pop(ladder, None)

    def n_modes(self) -> int:
        return 1 + max((i for key in self.terms for i, _ in key), default=-1)

    def hermitian_conjugate(self) -> "FermionOperator":
        out = FermionOperator(constant=self.constant)
        for key, coeff in self.terms.items():
            out.add_term(tuple((i, not d) for i, d in reversed(key)), coeff)
        return out

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for key, coeff in self.terms.items():
            conj = tuple((i, not d) for i, d in reversed(key))
            if abs(self.terms.get(conj, 0.0) - coeff) > tol:
                return False
        return True

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        out = FermionOperator(self.terms, self.constant)
        out.constant += other.constant
        for key, coeff in other.terms.items():
            out.add_term(key, coeff)
        return out

    def scaled(self, factor: float) -> "FermionOperator":
        return FermionOperator(
            {k: factor * c for k, c in self.terms.items()}, factor * self.constant
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"FermionOperator({len(self.terms)} terms, constant={self.constant:.6g})"


def spin_index(spatial: int, spin: int, n_spatial: int, layout: str = "block") -> int:
    """Map (spatial orbital, spin) to a mode index; spin 0 is up, 1 is down."""
    if layout == "block":
        return spatial + spin * n_spatial
    if layout == "interleaved":
        return 2 * spatial + spin
    raise ValueError(f"unknown spin layout {layout!r}; expected one of {SPIN_LAYOUTS}")


def chemist_one_body(integrals: IntegralSet) -> np.ndarray:
    """Effective one-body matrix of the a+a a+a two-electron ordering.

    Writing the two-electron part as (1/2) V_pqrs a+_pa a_qa a+_rb a_sb double
    counts a contraction, so the bare one-electron integrals must be shifted:
    T_pq = h_pq - (1/2) sum_s (ps|sq).
    """
    return integrals.h - 0.5 * np.einsum("pssq->pq", integrals.v)


def build_hamiltonian(integrals: IntegralSet, layout: str = "block") -> FermionOperator:
    """Spin-orbital Hamiltonian in the chemist two-electron ordering.

    H = sum_s T_pq a+_{ps} a_{qs}
        + 1/2 sum_{ab} V_pqrs a+_{pa} a_{qa} a+_{rb} a_{sb} + e_core

    with T the shifted one-body matrix of :func:`chemist_one_body`, so the
    operator equals the standard physicist-ordered Hamiltonian.
    """
    m = integrals.n_spatial
    idx = [[spin_index(p, s, m, layout) for p in range(m)] for s in (0, 1)]
    op = FermionOperator(constant=integrals.e_core)
    h, v = chemist_one_body(integrals), integrals.v
    for s in (0, 1):
        for p in range(m):
            for q in range(m):
                c = h[p, q]
                if abs(c) > PRUNE_THRESHOLD:
                    op.add_term(((idx[s][p], True), (idx[s][q], False)), c)
    for sa in (0, 1):
        for sb in (0, 1):
            for p in range(m):
                for q in range(m):
                    for r in range(m):
                        for s_ in range(m):
                            c = 0.5 * v[p, q, r, s_]
                            if abs(c) > PRUNE_THRESHOLD:
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


def normal_order(op: FermionOperator) -> FermionOperator:
    """Canonical form with {a_p, a+_q} = delta_pq bookkeeping.

    Creation operators first, strictly increasing; annihilation operators
    after, strictly decreasing.  Operator content is unchanged.
    """
    out = FermionOperator(constant=op.constant)
    for key, coeff in op.terms.items():
        _normal_order_term(list(key), coeff, out)
    return out


def _normal_order_term(ops: list[tuple[int, bool]], coeff: float, out: FermionOperator):
    stack = [(ops, coeff)]
    while stack:
        seq, c = stack.pop()
        clean = True
        for i in range(len(seq) - 1):
            (pi, di), (pj, dj) = seq[i], seq[i + 1]
            if (not di) and dj:
                # a_p a+_q = delta_pq - a+_q a_p
                stack.append((seq[:i] + [seq[i + 1], seq[i]] + seq[i + 2 :], -c))
                if pi == pj:
                    stack.append((seq[:i] + seq[i + 2 :], c))
                clean = False
                break
            if di == dj and pi == pj:
                clean = False  # nilpotent, term vanishes
                break
            if di == dj and ((pi > pj) if di else (pi < pj)):
                stack.append((seq[:i] + [seq[i + 1], seq[i]] + seq[i + 2 :], -c))
                clean = False
                break
        if clean:
            out.add_term(tuple(seq), c)


def _term_signature(key: LadderTerm) -> tuple[int, int]:
    """(number of ladder factors, number of distinct mode indices)."""
    return len(key), len({i for i, _ in key})


def partition_terms(op: FermionOperator) -> dict[int, FermionOperator]:
    """Split a normal-ordered two-body operator into the five index classes.

    Class 1: diagonal number terms a+_p a_p.
    Class 2: one-body transfers a+_p a_q, p != q.
    Classes 3-5: two-body terms with 2, 3 and 4 distinct indices.

    Raises:
        ValueError: terms of more than two-body rank (or odd rank).
    """
    parts = {k: FermionOperator() for k in (1, 2, 3, 4, 5)}
    for key, coeff in op.terms.items():
        n_ops, n_unique = _term_signature(key)
        n_raise = sum(1 for _, d in key if d)
        if n_ops == 2 and n_raise == 1:
            cls = 1 if n_unique == 1 else 2
        elif n_ops == 4 and n_raise == 2:
            cls = {2: 3, 3: 4, 4: 5}[n_unique]
        else:
            raise ValueError(f"term {key} is not a normal-ordered one- or two-body term")
        parts[cls].add_term(key, coeff)
    return parts


def _conjugate_key(key: LadderTerm) -> LadderTerm:
    return tuple((i, not d) for i, d in reversed(key))


def magnitude_sum(op: FermionOperator) -> float:
    """Sum of |coefficient| counting each Hermitian-conjugate pair once."""
    total = 0.0
    for key, coeff in op.terms.items():
        conj = _conjugate_key(key)
        if conj == key or key <= conj:
            total += abs(coeff)
    return total


def classify_partitions(op: FermionOperator) -> tuple[float, float, float, float, float]:
    """Coefficient-magnitude sums of the five classes of a normal-ordered operator."""
    parts = partition_terms(op)
    return tuple(magnitude_sum(parts[k]) for k in (1, 2, 3, 4, 5))
