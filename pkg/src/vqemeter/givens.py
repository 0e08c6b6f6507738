"""Compilation of orbital rotations into adjacent-pair Givens networks.

The decomposition eliminates the lower triangle of an SO(M) matrix along
anti-diagonals, alternating column rotations (applied from the right) with row
rotations (from the left), the scheme that packs the M(M-1)/2 rotations into M
alternating-parity layers on a linear array.  Pivots are kept positive at
every step, which leaves the identity (no residual sign diagonal) for real
rotations with det +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

ANGLE_PRUNE = 1e-14


@dataclass(frozen=True)
class GivensNetwork:
    """Ordered adjacent-pair rotations; ``rotations[k]`` is applied k-th.

    ``layers`` is a minimal-depth schedule: tuples of indices into
    ``rotations`` whose wire pairs are disjoint, preserving the relative order
    of overlapping rotations.
    """

    target: int
    rotations: tuple[tuple[int, float], ...]
    layers: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for wire, theta in self.rotations:
            if not 0 <= wire < self.target - 1:
                raise ValueError(f"rotation wire {wire} outside 0..{self.target - 2}")
            if not -math.pi < theta <= math.pi:
                raise ValueError("angles must be canonicalized to (-pi, pi]")
        seen = set()
        for layer in self.layers:
            wires = set()
            for k in layer:
                seen.add(k)
                w = self.rotations[k][0]
                if w in wires or (w + 1) in wires:
                    raise ValueError("layer members must act on disjoint wires")
                wires.update((w, w + 1))
        if seen != set(range(len(self.rotations))):
            raise ValueError("layers must schedule every rotation exactly once")

    @property
    def depth(self) -> int:
        return len(self.layers)


def _schedule(rotations: Sequence[tuple[int, float]], target: int) -> tuple[tuple[int, ...], ...]:
    """Earliest-fit layering; overlapping rotations keep their order."""
    time = [0] * target
    layers: list[list[int]] = []
    for k, (wire, _) in enumerate(rotations):
        layer = max(time[wire], time[wire + 1]) + 1
        time[wire] = time[wire + 1] = layer
        while len(layers) < layer:
            layers.append([])
        layers[layer - 1].append(k)
    return tuple(tuple(layer) for layer in layers)


def rotation_matrix(m: int, wire: int, theta: float) -> np.ndarray:
    out = np.eye(m)
    c, s = math.cos(theta), math.sin(theta)
    out[wire, wire] = c
    out[wire, wire + 1] = -s
    out[wire + 1, wire] = s
    out[wire + 1, wire + 1] = c
    return out


def network_matrix(network: GivensNetwork) -> np.ndarray:
    """Product of the rotations in application order (first applied rightmost)."""
    out = np.eye(network.target)
    for wire, theta in network.rotations:
        c, s = math.cos(theta), math.sin(theta)
        upper = c * out[wire, :] - s * out[wire + 1, :]
        lower = s * out[wire, :] + c * out[wire + 1, :]
        out[wire, :] = upper
        out[wire + 1, :] = lower
    return out


def decompose(u: np.ndarray) -> GivensNetwork:
    """Compile an SO(M) matrix into at most M(M-1)/2 adjacent rotations.

    Raises:
        ValueError: input not orthogonal within 1e-8, or det(u) < 0.
    """
    u = np.asarray(u, dtype=float)
    m = u.shape[0]
    if u.shape != (m, m) or np.max(np.abs(u.T @ u - np.eye(m))) > 1e-8:
        raise ValueError("input must be orthogonal")
    if np.linalg.det(u) < 0:
        raise ValueError("det(u) = -1; flip the sign of one column first")
    work = u.copy()
    right: list[tuple[int, float]] = []   # applied as work @ G
    left: list[tuple[int, float]] = []    # applied as G @ work

    for k in range(m - 1):
        if k % 2 == 0:
            for j in range(k + 1):
                r, c = m - 1 - j, k - j
                a, b = work[r, c], work[r, c + 1]
                h = math.hypot(a, b)
                if h < 1e-14:
                    continue
                theta = math.atan2(-a, b)
                ct, st = math.cos(theta), math.sin(theta)
                col_c = work[:, c].copy()
                work[:, c] = ct * col_c + st * work[:, c + 1]
                work[:, c + 1] = -st * col_c + ct * work[:, c + 1]
                work[r, c] = 0.0
                right.append((c, theta))
        else:
            for j in range(k + 1):
                r, c = m - 1 - k + j, j
                a, b = work[r - 1, c], work[r, c]
                h = math.hypot(a, b)
                if h < 1e-14:
                    continue
                theta = math.atan2(-b, a)
                ct, st = math.cos(theta), math.sin(theta)
                row_u = work[r - 1, :].copy()
                work[r - 1, :] = ct * row_u - st * work[r, :]
                work[r, :] = st * row_u + ct * work[r, :]
                work[r, c] = 0.0
                left.append((r - 1, theta))

    residual = np.diag(work)
    if np.max(np.abs(work - np.diag(residual))) > 1e-9 or np.min(residual) < 0.9:
        raise ValueError("elimination failed to reduce the rotation to identity")

    # U = Gl_1^T ... Gl_q^T  Gr_p^T ... Gr_1^T, applied right to left
    ordered = [(w, _canonical(-t)) for w, t in right] + [
        (w, _canonical(-t)) for w, t in reversed(left)
    ]
    rotations = tuple((w, t) for w, t in ordered if abs(t) > ANGLE_PRUNE)
    return GivensNetwork(
        target=m, rotations=rotations, layers=_schedule(rotations, m)
    )


def _canonical(theta: float) -> float:
    while theta <= -math.pi:
        theta += 2 * math.pi
    while theta > math.pi:
        theta -= 2 * math.pi
    return theta


def spin_duplicate(network: GivensNetwork) -> tuple[int, int]:
    """(two-qubit gate count, depth) of the spin-doubled circuit on N = 2M qubits.

    Block spin layout runs the same network on both chains in parallel, so the
    count doubles while the depth is the brickwork template depth M (the
    schedule length for a generic rotation; 0 for an empty network).
    """
    if not network.rotations:
        return 0, 0
    return 2 * len(network.rotations), network.target


def gate_sequence(network: GivensNetwork, n_spatial: int, dagger: bool = False):
    """Two-qubit gate list [(qubit, qubit+1, angle), ...] for the block layout."""
    rotations = network.rotations if not dagger else tuple(
        (w, -t) for w, t in reversed(network.rotations)
    )
    gates = []
    for wire, theta in rotations:
        gates.append((wire, wire + 1, theta))
        gates.append((n_spatial + wire, n_spatial + wire + 1, theta))
    return gates


def apply_gate_to_statevector(state: np.ndarray, qubit: int, theta: float) -> np.ndarray:
    """Number-conserving Givens gate on adjacent qubits (qubit, qubit+1), in place.

    On the {|01>, |10>} block it is the planar rotation sending mode `qubit`
    to cos(t)|qubit> + sin(t)|qubit+1>; |00> and |11> are fixed.
    """
    c, s = math.cos(theta), math.sin(theta)
    view = state.reshape(-1, 2, 2, 1 << qubit)
    occupied_low = view[:, 0, 1, :].copy()     # n_qubit = 1, n_qubit+1 = 0
    occupied_high = view[:, 1, 0, :]
    view[:, 0, 1, :] = c * occupied_low - s * occupied_high
    view[:, 1, 0, :] = s * occupied_low + c * occupied_high
    return state


def apply_to_statevector(
    network: GivensNetwork, state: np.ndarray, dagger: bool = False
) -> np.ndarray:
    """Run the spin-doubled network over a 2^(2M) amplitude buffer, in place.

    ``dagger`` reverses the order and negates every angle, implementing the
    inverse rotation (used to move into a fragment's measurement basis).

    Raises:
        ValueError: buffer length is not 2^(2 * target).
    """
    m = network.target
    if state.shape != (1 << (2 * m),):
        raise ValueError(f"statevector must have length {1 << (2 * m)} for target {m}")
    for qa, _, theta in gate_sequence(network, m, dagger=dagger):
        apply_gate_to_statevector(state, qa, theta)
    return state


def export_text(network: GivensNetwork) -> str:
    """Gate list `givens <i> <i+1> <theta>`, one line per rotation, blank line between layers."""
    blocks = []
    for layer in network.layers:
        blocks.append(
            "\n".join(
                f"givens {network.rotations[k][0]} {network.rotations[k][0] + 1} "
                f"{network.rotations[k][1]!r}"
                for k in layer
            )
        )
    return "\n\n".join(blocks) + "\n"


def random_special_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random SO(M): QR of a Gaussian matrix with positive R diagonal."""
    q, r = np.linalg.qr(rng.normal(size=(m, m)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
