"""Statistics, shot allocation, measurement costs and coefficient-norm bounds.

Group observables carry their coefficients, so every group is costed as a
unit-weight observable: with fractions f_g of M total shots the estimator
variance is sum_g var_g / (f_g M), minimized by f_g proportional to the
standard deviation sigma_g.  At the optimum M = (sum_g w_g sigma_g)^2 / eps^2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .fermionic import FermionOperator, classify_partitions
from .givens import apply_to_statevector
from .grouping import MeasurementGroup, MeasurementPlan
from .jw import PauliString, QubitOperator, l1_norm
from .sector import SectorState


class AllocationError(ValueError):
    """Every group has zero variance; measurement is unnecessary."""


@dataclass
class GroupStatistics:
    """Mean and variance of one grouped observable on a reference state."""

    mean: float
    variance: float
    fraction: Optional[float] = None


def _as_statevector(state: Union[SectorState, np.ndarray]) -> np.ndarray:
    if isinstance(state, SectorState):
        return state.to_statevector()
    return np.asarray(state, dtype=float)


def pauli_expectation(psi: np.ndarray, string: PauliString) -> float:
    """<psi|P|psi> for a real amplitude vector, vectorized over basis states."""
    if not string.axes:
        return float(psi @ psi)
    x, zm, ny = string.masks()
    dim = len(psi)
    idx = np.arange(dim, dtype=np.int64)
    signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.int64(zm)) & 1)
    permuted = psi[idx ^ np.int64(x)] if x else psi
    value = complex(1j ** ny) * np.dot(psi * signs, permuted)
    if abs(value.imag) > 1e-9:
        raise ValueError("non-real expectation; state or string inconsistent")
    return float(value.real)


def monomial_values(
    observable: Sequence[tuple[tuple[int, ...], float]], n_qubits: int
) -> np.ndarray:
    """Diagonal values of a Z-monomial sum over all 2^n bitstrings."""
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.int64)
    out = np.zeros(dim)
    for support, coeff in observable:
        mask = 0
        for q in support:
            mask |= 1 << q
        if mask:
            out += coeff * (1.0 - 2.0 * (np.bitwise_count(idx & np.int64(mask)) & 1))
        else:
            out += coeff
    return out


def _rotation_group_statistics(group: MeasurementGroup, psi: np.ndarray) -> GroupStatistics:
    rotated = psi.copy()
    apply_to_statevector(group.network, rotated, dagger=True)
    probs = rotated * rotated
    n_qubits = 2 * group.network.target
    values = monomial_values(group.observable, n_qubits)
    mean = float(probs @ values)
    second = float(probs @ (values * values))
    return GroupStatistics(mean=mean + group.constant, variance=max(second - mean * mean, 0.0))


def _pauli_group_statistics(group: MeasurementGroup, psi: np.ndarray) -> GroupStatistics:
    strings = group.pauli_strings()
    expectations = [pauli_expectation(psi, s) for s, _ in strings]
    mean = sum(c * e for (_, c), e in zip(strings, expectations))
    # <O^2> with O = sum c_j P_j; products of qubit-wise compatible strings are
    # plain strings (phase +1) supported on the symmetric difference
    second = sum(c * c for _, c in strings)
    amap = group.axis_map
    for j in range(len(strings)):
        sj, cj = strings[j]
        support_j = set(sj.support)
        for k in range(j + 1, len(strings)):
            sk, ck = strings[k]
            diff = support_j.symmetric_difference(sk.support)
            if diff:
                product = PauliString.from_dict({q: amap[q] for q in diff})
                second += 2.0 * cj * ck * pauli_expectation(psi, product)
            else:
                second += 2.0 * cj * ck
    return GroupStatistics(
        mean=float(mean) + group.constant,
        variance=max(float(second - mean * mean), 0.0),
    )


def group_statistics(
    plan: MeasurementPlan, state: Union[SectorState, np.ndarray]
) -> list[GroupStatistics]:
    """Per-group mean and variance of the whole grouped observable.

    Covariances between co-measured monomials are included by construction:
    rotation groups are evaluated as diagonal quadratic forms over rotated
    bitstring probabilities, Pauli groups through explicit string products.

    Raises:
        ValueError: state register does not match the plan.
    """
    psi = _as_statevector(state)
    if len(psi) != 1 << plan.n_qubits:
        raise ValueError(
            f"state has {len(psi)} amplitudes; plan needs {1 << plan.n_qubits}"
        )
    out = []
    for group in plan.groups:
        if group.network is not None:
            out.append(_rotation_group_statistics(group, psi))
        else:
            out.append(_pauli_group_statistics(group, psi))
    return out


def plan_expectation(stats: Sequence[GroupStatistics], plan: MeasurementPlan) -> float:
    return plan.total_constant + sum(s.mean for s in stats)


def allocate(
    stats: Sequence[GroupStatistics], weights: Optional[Sequence[float]] = None
) -> np.ndarray:
    """Optimal shot fractions f_g proportional to w_g sigma_g.

    Zero-variance groups receive no shots.  For single Pauli strings with unit
    norm this reduces to |omega| sqrt(1 - <P>^2) weighting.

    Raises:
        AllocationError: all variances vanish.
    """
    w = np.ones(len(stats)) if weights is None else np.asarray(weights, dtype=float)
    sigma = np.sqrt(np.array([max(s.variance, 0.0) for s in stats]))
    raw = w * sigma
    total = raw.sum()
    if total <= 0.0:
        raise AllocationError("every group has zero variance; nothing to measure")
    return raw / total


def total_measurements(
    stats: Sequence[GroupStatistics],
    fractions: Sequence[float],
    epsilon: float,
    weights: Optional[Sequence[float]] = None,
) -> float:
    """Shots needed for estimator standard error epsilon under given fractions.

    M = sum_g w_g^2 var_g / (f_g eps^2); at the optimal fractions this equals
    (sum_g w_g sigma_g)^2 / eps^2.

    Raises:
        ValueError: epsilon <= 0, or a group with positive variance gets f = 0.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    w = np.ones(len(stats)) if weights is None else np.asarray(weights, dtype=float)
    f = np.asarray(fractions, dtype=float)
    total = 0.0
    for wg, s, fg in zip(w, stats, f):
        contribution = wg * wg * max(s.variance, 0.0)
        if contribution == 0.0:
            continue
        if fg <= 0.0:
            raise ValueError("group with positive variance allocated zero shots")
        total += contribution / fg
    return total / (epsilon * epsilon)


@dataclass(frozen=True)
class VarianceBounds:
    """Squared coefficient-norm variance bounds, in hartree^2."""

    qubit: float
    fermi_naive: float
    fermi_tight: float


def l1_bounds(h_fermionic: FermionOperator, h_qubit: QubitOperator) -> VarianceBounds:
    """Worst-case estimator variances from coefficient one-norms.

    qubit:       (sum |omega|)^2 over Pauli strings, constant excluded.
    fermi_naive: (sum of all five class magnitudes)^2.
    fermi_tight: same with classes 1 and 3 halved (number-type terms have
                 variance at most 1/4).

    The fermionic input must be normal-ordered.
    """
    s1, s2, s3, s4, s5 = classify_partitions(h_fermionic)
    naive = (s1 + s2 + s3 + s4 + s5) ** 2
    tight = (0.5 * s1 + s2 + 0.5 * s3 + s4 + s5) ** 2
    return VarianceBounds(qubit=l1_norm(h_qubit) ** 2, fermi_naive=naive, fermi_tight=tight)


def wecker_approximations(
    h_fermionic: FermionOperator, h_qubit: QubitOperator
) -> tuple[float, float]:
    """(FVA, QVA): squared one-norms after dropping number-type terms.

    FVA drops partition classes 1 and 3 from the fermionic sums; QVA drops
    every diagonal (pure-Z) string from the qubit operator.  Both assume
    near-integer occupations make the dropped terms variance-free.
    """
    s1, s2, s3, s4, s5 = classify_partitions(h_fermionic)
    fva = (s2 + s4 + s5) ** 2
    qva = l1_norm(h_qubit.without_diagonal_terms()) ** 2
    return fva, qva


def powerlaw_fit(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Ordinary least squares of log M = log_a + b log N.

    Raises:
        ValueError: fewer than 3 points or non-positive data.
    """
    if len(points) < 3:
        raise ValueError("power-law fit needs at least 3 points")
    if any(n <= 0 or m <= 0 for n, m in points):
        raise ValueError("power-law fit needs positive data")
    log_n = np.log(np.array([n for n, _ in points], dtype=float))
    log_m = np.log(np.array([m for _, m in points], dtype=float))
    design = np.vstack([np.ones_like(log_n), log_n]).T
    (log_a, b), *_ = np.linalg.lstsq(design, log_m, rcond=None)
    return float(log_a), float(b)


@dataclass
class CostReport:
    """Everything the cost pipeline knows about one (system, strategy) pair."""

    system: str
    strategy: str
    n_qubits: int
    epsilon: float
    energy: float
    group_count: int
    variance: float              # (sum_g sigma_g)^2 at optimal fractions, E_h^2
    m_total: float
    allocation_source: str
    allocation_penalty: Optional[float] = None
    bounds: Optional[VarianceBounds] = None
    fva: Optional[float] = None
    qva: Optional[float] = None
    per_group: Optional[list[GroupStatistics]] = None


def cost_plan(
    plan: MeasurementPlan,
    eval_state: Union[SectorState, np.ndarray],
    epsilon: float,
    allocation_state: Optional[Union[SectorState, np.ndarray]] = None,
) -> tuple[float, list[GroupStatistics], np.ndarray, float]:
    """(m_total, stats, fractions, penalty) for a plan on a reference state.

    Fractions come from the allocation state (defaults to the evaluation
    state); the penalty is m_total divided by the optimum under fractions
    derived from the evaluation state itself.
    """
    stats = group_statistics(plan, eval_state)
    if allocation_state is None or allocation_state is eval_state:
        alloc_stats = stats
    else:
        alloc_stats = group_statistics(plan, allocation_state)
    fractions = allocate(alloc_stats)
    m_total = total_measurements(stats, fractions, epsilon)
    m_best = total_measurements(stats, allocate(stats), epsilon)
    for s, f in zip(stats, fractions):
        s.fraction = float(f)
    return m_total, stats, fractions, m_total / m_best


def variance_table_csv(reports: Sequence[CostReport]) -> str:
    """Release-shaped table: one row per system, one column per estimator/bound.

    Energies in hartree, variances in hartree^2.
    """
    by_system: dict[str, dict[str, CostReport]] = {}
    for report in reports:
        by_system.setdefault(report.system, {})[report.strategy] = report
    strategies = sorted({r.strategy for r in reports})
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = ["system", "n_qubits", "energy_hartree"]
    header += [f"variance_{s}_hartree2" for s in strategies]
    header += [
        "bound_qubit_hartree2",
        "bound_fermi_tight_hartree2",
        "bound_fermi_naive_hartree2",
        "fva_hartree2",
        "qva_hartree2",
    ]
    writer.writerow(header)
    for system, rows in by_system.items():
        any_report = next(iter(rows.values()))
        record = [system, any_report.n_qubits, f"{any_report.energy:.10f}"]
        for s in strategies:
            record.append(f"{rows[s].variance:.10e}" if s in rows else "")
        bounds = any_report.bounds
        if bounds is not None:
            record += [
                f"{bounds.qubit:.10e}",
                f"{bounds.fermi_tight:.10e}",
                f"{bounds.fermi_naive:.10e}",
            ]
        else:
            record += ["", "", ""]
        record.append(f"{any_report.fva:.10e}" if any_report.fva is not None else "")
        record.append(f"{any_report.qva:.10e}" if any_report.qva is not None else "")
        writer.writerow(record)
    return buf.getvalue()
