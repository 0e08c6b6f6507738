"""Jordan-Wigner transform and Pauli-string algebra.

Occupation convention: qubit state 1 means occupied, so n_p maps to
(1 - Z_p)/2 with |0...0> the vacuum.  All observable quantities are
independent of this labeling; it matches the dominant simulator convention.

Strings are manipulated internally in symplectic form, P = i^{|Y|} X^x Z^z
with integer bit masks x and z, which makes products and the transform cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .fermionic import FermionOperator

PRUNE_THRESHOLD = 1e-12

_AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class PauliString:
    """Sparse tensor product of single-qubit Paulis; empty tuple is identity."""

    axes: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        qubits = [q for q, _ in self.axes]
        if qubits != sorted(set(qubits)):
            raise ValueError("axes must be sorted by qubit with no duplicates")
        if any(a not in _AXES for _, a in self.axes):
            raise ValueError("axis labels must be X, Y or Z")

    @staticmethod
    def from_dict(axes: Mapping[int, str]) -> "PauliString":
        return PauliString(tuple(sorted(axes.items())))

    @property
    def weight(self) -> int:
        return len(self.axes)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.axes)

    def is_diagonal(self) -> bool:
        return all(a == "Z" for _, a in self.axes)

    def masks(self) -> tuple[int, int, int]:
        """(x_mask, z_mask, n_y) of the symplectic word form."""
        x = z = ny = 0
        for q, a in self.axes:
            if a != "Z":
                x |= 1 << q
            if a != "X":
                z |= 1 << q
            if a == "Y":
                ny += 1
        return x, z, ny

    def __str__(self) -> str:
        return " ".join(f"{a}{q}" for q, a in self.axes) if self.axes else "I"


def _string_from_masks(x: int, z: int) -> tuple[PauliString, complex]:
    """Convert word W(x, z) = X^x Z^z to an axis string and its phase i^{-|Y|}."""
    axes = []
    ny = 0
    both = x & z
    only_x = x & ~z
    only_z = z & ~x
    q = 0
    rest = x | z
    while rest >> q:
        bit = 1 << q
        if both & bit:
            axes.append((q, "Y"))
            ny += 1
        elif only_x & bit:
            axes.append((q, "X"))
        elif only_z & bit:
            axes.append((q, "Z"))
        q += 1
    return PauliString(tuple(axes)), (-1j) ** ny


def pauli_product(a: PauliString, b: PauliString) -> tuple[PauliString, complex]:
    """Qubit-wise product a * b; phase is one of {1, -1, i, -i}."""
    xa, za, nya = a.masks()
    xb, zb, nyb = b.masks()
    # W(xa,za) W(xb,zb) = (-1)^{|za & xb|} W(xa^xb, za^zb)
    sign = -1.0 if (za & xb).bit_count() % 2 else 1.0
    # P_a P_b = i^{|Ya|+|Yb|} sign W_c, and W_c = (-i)^{|Yc|} P_c
    string, word_phase = _string_from_masks(xa ^ xb, za ^ zb)
    return string, complex((1j) ** (nya + nyb) * sign * word_phase)


class QubitOperator:
    """Real-weighted sum of Pauli strings plus a constant."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[PauliString, float] | None = None, constant: float = 0.0):
        self.terms: dict[PauliString, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    def add_term(self, string: PauliString, coefficient: float):
        if not string.axes:
            self.constant += coefficient
            return
        new = self.terms.get(string, 0.0) + coefficient
        if abs(new) > PRUNE_THRESHOLD:
            self.terms[string] = new
        else:
            self.terms.pop(string, None)

    def n_qubits(self) -> int:
        return 1 + max((q for s in self.terms for q, _ in s.axes), default=-1)

    def without_diagonal_terms(self) -> "QubitOperator":
        """Copy with every pure-Z string (and the constant) removed."""
        return QubitOperator(
            {s: c for s, c in self.terms.items() if not s.is_diagonal()}
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"QubitOperator({len(self.terms)} strings, constant={self.constant:.6g})"


def l1_norm(op: QubitOperator) -> float:
    """Sum of |coefficient| over non-identity strings; the constant is excluded."""
    return float(sum(abs(c) for c in op.terms.values()))


def jw_transform(op: FermionOperator) -> QubitOperator:
    """Exact isomorphism of the Fock-space operator onto qubits.

    Real coefficients in, real coefficients out; a residual imaginary part
    above 1e-10 indicates a non-Hermitian input and raises.
    """
    accum: dict[tuple[int, int], complex] = {}

    for key, coeff in op.terms.items():
        # product over ladder factors, each a two-word superposition:
        # a_p   = (W(b, m) - i * i * W(b, m|b)) / 2 -> (W(b,m) - W(b,m|b)) / 2 with sign
        # a+_p  = (W(b, m) + W(b, m|b)) / 2
        words = [(0, 0, complex(coeff))]
        for index, dagger in reversed(key):
            bit = 1 << index
            parity_mask = bit - 1
            sign = 1.0 if dagger else -1.0
            new_words = []
            for x, z, c in words:
                for z_extra, s in ((parity_mask, 1.0), (parity_mask | bit, sign)):
                    # W(b, zf) * W(x, z) = (-1)^{|zf & x|} W(b^x, zf^z)
                    ph = -1.0 if (z_extra & x).bit_count() % 2 else 1.0
                    new_words.append((bit ^ x, z_extra ^ z, 0.5 * s * ph * c))
            words = new_words
        for x, z, c in words:
            k = (x, z)
            accum[k] = accum.get(k, 0.0) + c

    out = QubitOperator(constant=op.constant)
    for (x, z), c in accum.items():
        if abs(c) < PRUNE_THRESHOLD:
            continue
        string, word_phase = _string_from_masks(x, z)
        value = c / word_phase
        if abs(value.imag) > 1e-10:
            raise ValueError("Jordan-Wigner image has a complex coefficient; "
                             "input operator is not Hermitian with real weights")
        out.add_term(string, value.real)
    return out


def serialize(op: QubitOperator) -> str:
    """One `coeff [X3 Y5 Z7]` line per term in lexicographic string order."""
    lines = [f"{op.constant!r} []"]
    keyed = sorted(op.terms.items(), key=lambda kv: kv[0].axes)
    for string, coeff in keyed:
        body = " ".join(f"{a}{q}" for q, a in string.axes)
        lines.append(f"{coeff!r} [{body}]")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> QubitOperator:
    op = QubitOperator()
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        coeff_part, _, body = line.partition("[")
        coeff = float(coeff_part)
        body = body.rstrip("]").strip()
        if not body:
            op.constant += coeff
            continue
        axes = {}
        for tok in body.split():
            axes[int(tok[1:])] = tok[0]
        op.add_term(PauliString.from_dict(axes), coeff)
    return op
