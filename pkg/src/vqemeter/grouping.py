"""Measurement plans: separate strings, greedy compatible grouping, basis rotation.

A group is a basis change plus a list of Z-monomials that are simultaneously
diagonal after it.  Pauli-type groups change basis with one layer of
single-qubit rotations recorded as an axis map (which original axis each
measured qubit carries); rotation-type groups apply the inverse of a Givens
network before readout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .factorization import FactorizedHamiltonian
from .givens import GivensNetwork, decompose
from .jw import PauliString, QubitOperator

Monomial = tuple[tuple[int, ...], float]


@dataclass(frozen=True)
class MeasurementGroup:
    """One simultaneously measurable set of diagonal observables."""

    label: str
    observable: tuple[Monomial, ...]
    axes: Optional[tuple[tuple[int, str], ...]] = None   # pauli-type basis change
    network: Optional[GivensNetwork] = None              # rotation-type basis change
    constant: float = 0.0

    def __post_init__(self):
        if self.axes is not None and self.network is not None:
            raise ValueError("a group has either an axis map or a rotation network")
        if self.axes is not None:
            covered = dict(self.axes)
            for support, _ in self.observable:
                if any(q not in covered for q in support):
                    raise ValueError("axis map must cover every measured qubit")

    @property
    def axis_map(self) -> dict[int, str]:
        return dict(self.axes or ())

    def pauli_strings(self) -> list[tuple[PauliString, float]]:
        """Original (pre-rotation) strings of a pauli-type group."""
        if self.axes is None:
            raise ValueError("not a pauli-type group")
        amap = self.axis_map
        return [
            (PauliString.from_dict({q: amap[q] for q in support}), coeff)
            for support, coeff in self.observable
        ]


@dataclass(frozen=True)
class MeasurementPlan:
    """Groups plus shot fractions; observables + constants rebuild the Hamiltonian."""

    groups: tuple[MeasurementGroup, ...]
    fractions: tuple[float, ...]
    total_constant: float
    n_qubits: int

    def __post_init__(self):
        if len(self.fractions) != len(self.groups):
            raise ValueError("one fraction per group required")
        if any(f < 0 for f in self.fractions):
            raise ValueError("fractions must be nonnegative")
        if self.groups and abs(sum(self.fractions) - 1.0) > 1e-12:
            raise ValueError("fractions must sum to one")

    def with_fractions(self, fractions: Sequence[float]) -> "MeasurementPlan":
        return MeasurementPlan(
            groups=self.groups,
            fractions=tuple(float(f) for f in fractions),
            total_constant=self.total_constant,
            n_qubits=self.n_qubits,
        )


def _uniform(n: int) -> tuple[float, ...]:
    if n == 0:
        return ()
    return tuple([1.0 / n] * n)


def plan_separate(h: QubitOperator, n_qubits: Optional[int] = None) -> MeasurementPlan:
    """One group per non-identity Pauli string."""
    groups = []
    for string, coeff in sorted(h.terms.items(), key=lambda kv: kv[0].axes):
        groups.append(
            MeasurementGroup(
                label=f"string-{len(groups)}",
                observable=((string.support, coeff),),
                axes=string.axes,
            )
        )
    return MeasurementPlan(
        groups=tuple(groups),
        fractions=_uniform(len(groups)),
        total_constant=h.constant,
        n_qubits=n_qubits if n_qubits is not None else h.n_qubits(),
    )


def is_compatible(a: PauliString, b: PauliString) -> bool:
    """Qubit-wise compatibility: equal axes wherever both act non-trivially."""
    bd = dict(b.axes)
    return all(bd.get(q, axis) == axis for q, axis in a.axes)


def _axes_fit(axis_map: dict[int, str], string: PauliString) -> bool:
    return all(axis_map.get(q, a) == a for q, a in string.axes)


def plan_pauli_word_greedy(
    h: QubitOperator, seed: int = 0, n_qubits: Optional[int] = None
) -> MeasurementPlan:
    """Greedy qubit-wise-compatible grouping.

    All pure-Z strings form the first group.  The remaining strings are
    shuffled with the given seed and consumed one open group at a time: the
    pool is scanned in order for any string compatible with the open group
    until none fits, then the next group opens.  Closed groups are never
    revisited.
    """
    diagonal = [(s, c) for s, c in h.terms.items() if s.is_diagonal()]
    rest = [(s, c) for s, c in h.terms.items() if not s.is_diagonal()]
    diagonal.sort(key=lambda kv: kv[0].axes)
    rest.sort(key=lambda kv: kv[0].axes)
    rng = np.random.default_rng(seed)
    rng.shuffle(rest)

    groups: list[MeasurementGroup] = []
    if diagonal:
        groups.append(
            MeasurementGroup(
                label="group-0-diagonal",
                observable=tuple((s.support, c) for s, c in diagonal),
                axes=tuple(sorted({q: "Z" for s, _ in diagonal for q in s.support}.items())),
            )
        )

    pool = list(rest)
    while pool:
        first, coeff = pool.pop(0)
        members = [(first, coeff)]
        axis_map = dict(first.axes)
        progress = True
        while progress:
            progress = False
            for k, (string, c) in enumerate(pool):
                if _axes_fit(axis_map, string):
                    axis_map.update(string.axes)
                    members.append((string, c))
                    pool.pop(k)
                    progress = True
                    break
        groups.append(
            MeasurementGroup(
                label=f"group-{len(groups)}",
                observable=tuple((s.support, c) for s, c in members),
                axes=tuple(sorted(axis_map.items())),
            )
        )

    return MeasurementPlan(
        groups=tuple(groups),
        fractions=_uniform(len(groups)),
        total_constant=h.constant,
        n_qubits=n_qubits if n_qubits is not None else h.n_qubits(),
    )


def plan_basis_rotation(factorized: FactorizedHamiltonian) -> MeasurementPlan:
    """One group per factorization fragment plus the rotated one-body group.

    Observables are expanded into Z-monomials with the occupation convention
    n = (1 - Z)/2; every constant lands in the plan's total constant, and each
    monomial touches at most two qubits.
    """
    m = factorized.n_spatial
    total_constant = factorized.constant
    groups = []

    # one-body group: sum_p g_p (n_p-up + n_p-down) in the U0 basis
    monomials: dict[tuple[int, ...], float] = {}
    for p, g in enumerate(factorized.one_body_energies):
        for qubit in (p, m + p):
            monomials[(qubit,)] = monomials.get((qubit,), 0.0) - 0.5 * g
            total_constant += 0.5 * g
    groups.append(
        MeasurementGroup(
            label="one-body",
            observable=tuple(sorted(monomials.items())),
            network=decompose(factorized.one_body_rotation),
        )
    )

    for index, (g, u) in enumerate(factorized.fragments):
        acc: dict[tuple[int, ...], float] = {}
        constant = 0.0
        for p in range(m):
            for sp in (0, 1):
                a = p + sp * m
                for q in range(m):
                    for sq in (0, 1):
                        b = q + sq * m
                        if a >= b:
                            continue
                        # n_a n_b + n_b n_a = 2 n_a n_b for distinct modes
                        c = 2.0 * g[p, q]
                        if abs(c) < 1e-15:
                            continue
                        constant += 0.25 * c
                        acc[(a,)] = acc.get((a,), 0.0) - 0.25 * c
                        acc[(b,)] = acc.get((b,), 0.0) - 0.25 * c
                        acc[(a, b)] = acc.get((a, b), 0.0) + 0.25 * c
        total_constant += constant
        groups.append(
            MeasurementGroup(
                label=f"fragment-{index}",
                observable=tuple(sorted(kv for kv in acc.items() if abs(kv[1]) > 1e-15)),
                network=decompose(u),
            )
        )

    return MeasurementPlan(
        groups=tuple(groups),
        fractions=_uniform(len(groups)),
        total_constant=total_constant,
        n_qubits=2 * m,
    )


def plan_to_json(plan: MeasurementPlan) -> str:
    def group_payload(g: MeasurementGroup):
        payload = {
            "label": g.label,
            "constant": g.constant,
            "observable": [[list(support), coeff] for support, coeff in g.observable],
        }
        if g.axes is not None:
            payload["axes"] = [[q, a] for q, a in g.axes]
        if g.network is not None:
            payload["network"] = {
                "target": g.network.target,
                "rotations": [[w, t] for w, t in g.network.rotations],
                "layers": [list(layer) for layer in g.network.layers],
            }
        return payload

    return json.dumps(
        {
            "format": "vqemeter-plan-1",
            "n_qubits": plan.n_qubits,
            "total_constant": plan.total_constant,
            "fractions": list(plan.fractions),
            "groups": [group_payload(g) for g in plan.groups],
        },
        indent=1,
    )


def plan_from_json(text: str) -> MeasurementPlan:
    payload = json.loads(text)
    if payload.get("format") != "vqemeter-plan-1":
        raise ValueError("unrecognized plan artifact format")
    groups = []
    for g in payload["groups"]:
        network = None
        if "network" in g:
            network = GivensNetwork(
                target=g["network"]["target"],
                rotations=tuple((int(w), float(t)) for w, t in g["network"]["rotations"]),
                layers=tuple(tuple(layer) for layer in g["network"]["layers"]),
            )
        groups.append(
            MeasurementGroup(
                label=g["label"],
                observable=tuple(
                    (tuple(support), float(coeff)) for support, coeff in g["observable"]
                ),
                axes=tuple((int(q), a) for q, a in g["axes"]) if "axes" in g else None,
                network=network,
                constant=float(g.get("constant", 0.0)),
            )
        )
    return MeasurementPlan(
        groups=tuple(groups),
        fractions=tuple(float(f) for f in payload["fractions"]),
        total_constant=float(payload["total_constant"]),
        n_qubits=int(payload["n_qubits"]),
    )
