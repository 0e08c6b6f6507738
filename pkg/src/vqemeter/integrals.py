"""s-type Gaussian integrals, restricted Hartree-Fock and active-space reduction.

Everything internal is in atomic units (bohr / hartree); geometries are read in
angstrom and converted on construction.  The engine is deliberately minimal: it
supports hydrogen-only systems in the bundled STO-3G and 6-31G bases.  Anything
else enters the pipeline through an FCIDUMP file (see :mod:`vqemeter.fcidump`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np
from scipy.special import erf

BOHR_PER_ANGSTROM = 1.8897259886

_SUPPORTED_BASES = ("sto-3g", "6-31g")


class IntegralError(ValueError):
    """Unsupported element/basis or numerically pathological AO basis."""


class ScfConvergenceError(RuntimeError):
    """Roothaan iteration failed to reach the density threshold."""


@dataclass(frozen=True)
class Geometry:
    """Nuclear frame: (symbol, xyz in angstrom) per atom plus charge/multiplicity."""

    atoms: tuple[tuple[str, tuple[float, float, float]], ...]
    charge: int = 0
    multiplicity: int = 1

    def __post_init__(self):
        for symbol, pos in self.atoms:
            if len(pos) != 3 or not all(math.isfinite(x) for x in pos):
                raise ValueError(f"non-finite position for atom {symbol}: {pos}")

    @property
    def n_electrons(self) -> int:
        return sum(_NUCLEAR_CHARGE[s] for s, _ in self.atoms) - self.charge

    def positions_bohr(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms], dtype=float) * BOHR_PER_ANGSTROM


_NUCLEAR_CHARGE = {"H": 1}


def hydrogen_chain(n_atoms: int, spacing_angstrom: float) -> Geometry:
    """Linear chain of hydrogens along z with equal interatomic spacing."""
    if n_atoms < 1:
        raise ValueError("chain needs at least one atom")
    atoms = tuple(("H", (0.0, 0.0, k * spacing_angstrom)) for k in range(n_atoms))
    return Geometry(atoms=atoms)


def read_geometry(text: str) -> Geometry:
    """Parse the XYZ-style geometry format.

    First non-comment line is ``charge <c> multiplicity <m>``; each following
    line is ``<element> <x> <y> <z>`` with coordinates in angstrom.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty geometry input")
    header = lines[0].split()
    if len(header) != 4 or header[0].lower() != "charge" or header[2].lower() != "multiplicity":
        raise ValueError(f"bad geometry header (want 'charge C multiplicity M'): {lines[0]!r}")
    charge, multiplicity = int(header[1]), int(header[3])
    atoms = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError(f"bad atom line: {ln!r}")
        atoms.append((parts[0].capitalize(), (float(parts[1]), float(parts[2]), float(parts[3]))))
    return Geometry(atoms=tuple(atoms), charge=charge, multiplicity=multiplicity)


@dataclass(frozen=True)
class ContractedShell:
    """Contracted s shell: coefficients include primitive norms, unit self-overlap."""

    center: np.ndarray           # bohr
    exponents: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        if np.any(self.exponents <= 0):
            raise IntegralError("shell exponents must be strictly positive")
        s = _contracted_overlap(self, self)
        if abs(s - 1.0) > 1e-12:
            raise IntegralError(f"shell not normalized: self-overlap {s!r}")


def load_basis(name: str) -> dict[str, list[tuple[np.ndarray, np.ndarray]]]:
    """Load the bundled basis table; returns element -> [(exponents, coeffs), ...]."""
    key = name.lower()
    if key not in _SUPPORTED_BASES:
        raise IntegralError(f"unsupported basis {name!r}; have {_SUPPORTED_BASES}")
    text = resources.files("vqemeter.data").joinpath("basis_hydrogen.txt").read_text()
    table: dict[str, dict[str, list]] = {}
    current_basis = None
    element = None
    shells_left = 0
    prim_left = 0
    prims: list[tuple[float, float]] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "basis":
            current_basis = parts[1].lower()
            table.setdefault(current_basis, {})
        elif parts[0] == "element":
            element = parts[1]
            shells_left = int(parts[2])
            table[current_basis].setdefault(element, [])
        elif parts[0] == "shell":
            prim_left = int(parts[1])
            prims = []
        else:
            prims.append((float(parts[0]), float(parts[1])))
            prim_left -= 1
            if prim_left == 0:
                table[current_basis][element].append(
                    (np.array([p[0] for p in prims]), np.array([p[1] for p in prims]))
                )
                shells_left -= 1
    if key not in table:
        raise IntegralError(f"basis {name!r} missing from data file")
    return {
        el: [(e.copy(), c.copy()) for e, c in shells]
        for el, shells in table[key].items()
    }


def build_shells(geometry: Geometry, basis_name: str) -> list[ContractedShell]:
    basis = load_basis(basis_name)
    shells = []
    for symbol, pos in geometry.atoms:
        if symbol not in basis:
            raise IntegralError(f"element {symbol!r} not available in basis {basis_name!r}")
        center = np.array(pos, dtype=float) * BOHR_PER_ANGSTROM
        for exps, coeffs in basis[symbol]:
            # fold primitive norms in, then rescale to unit self-overlap
            c = coeffs * (2.0 * exps / math.pi) ** 0.75
            p = exps[:, None] + exps[None, :]
            self_overlap = float(np.sum(np.outer(c, c) * (math.pi / p) ** 1.5))
            shells.append(ContractedShell(center, exps, c / math.sqrt(self_overlap)))
    return shells


def boys_f0(t: float) -> float:
    """Zeroth Boys function F0(t) = int_0^1 exp(-t u^2) du.

    Series branch near t = 0, closed form (erf) otherwise; accurate to 1e-13.

    Raises:
        ValueError: if t is negative.
    """
    if t < 0:
        raise ValueError(f"boys_f0 requires t >= 0, got {t}")
    if t < 1e-13:
        return 1.0 - t / 3.0
    if t < 0.5:
        # alternating series sum_k (-t)^k / (k! (2k+1)); converges fast for small t
        total = 0.0
        term = 1.0
        k = 0
        while abs(term) > 1e-17:
            total += term / (2 * k + 1)
            k += 1
            term *= -t / k
        return total
    return 0.5 * math.sqrt(math.pi / t) * float(erf(math.sqrt(t)))


def _boys_f0_array(t: np.ndarray) -> np.ndarray:
    """Vectorized F0 over a nonnegative array; same branches as :func:`boys_f0`."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 1e-13, t, 1.0)
    closed = 0.5 * np.sqrt(math.pi / safe) * erf(np.sqrt(safe))
    return np.where(t > 1e-13, closed, 1.0 - t / 3.0)


@dataclass(frozen=True)
class AOIntegrals:
    """Raw AO matrices over contracted shells plus the nuclear repulsion constant."""

    overlap: np.ndarray
    kinetic: np.ndarray
    nuclear: np.ndarray
    eri: np.ndarray              # chemist convention (pq|rs)
    e_nuc: float

    @property
    def n_basis(self) -> int:
        return self.overlap.shape[0]

    def core_hamiltonian(self) -> np.ndarray:
        return self.kinetic + self.nuclear


def _pair_params(a: ContractedShell, b: ContractedShell):
    """Broadcast primitive-pair quantities: total exponent, prefactor, center."""
    alpha = a.exponents[:, None]
    beta = b.exponents[None, :]
    p = alpha + beta
    mu = alpha * beta / p
    diff = a.center - b.center
    r2 = float(diff @ diff)
    k = np.exp(-mu * r2)
    coeff = a.coefficients[:, None] * b.coefficients[None, :]
    # composite center P for every primitive pair, shape (na, nb, 3)
    center = (alpha[..., None] * a.center + beta[..., None] * b.center) / p[..., None]
    return p, mu, r2, k, coeff, center


def _contracted_overlap(a: ContractedShell, b: ContractedShell) -> float:
    p, mu, r2, k, coeff, _ = _pair_params(a, b)
    return float(np.sum(coeff * (math.pi / p) ** 1.5 * k))


def _contracted_kinetic(a: ContractedShell, b: ContractedShell) -> float:
    p, mu, r2, k, coeff, _ = _pair_params(a, b)
    return float(np.sum(coeff * mu * (3.0 - 2.0 * mu * r2) * (math.pi / p) ** 1.5 * k))


def _contracted_nuclear(a: ContractedShell, b: ContractedShell, centers, charges) -> float:
    p, mu, r2, k, coeff, pc = _pair_params(a, b)
    total = 0.0
    base = coeff * (2.0 * math.pi / p) * k
    for center, z in zip(centers, charges):
        d = pc - center
        t = p * np.einsum("ijx,ijx->ij", d, d)
        total -= z * float(np.sum(base * _boys_f0_array(t)))
    return total


def _contracted_eri(a, b, c, d) -> float:
    p, _, _, kab, cab, pab = _pair_params(a, b)
    q, _, _, kcd, ccd, pcd = _pair_params(c, d)
    pq = p[:, :, None, None] + q[None, None, :, :]
    rho = p[:, :, None, None] * q[None, None, :, :] / pq
    diff = pab[:, :, None, None, :] - pcd[None, None, :, :, :]
    t = rho * np.einsum("ijklx,ijklx->ijkl", diff, diff)
    pref = 2.0 * math.pi ** 2.5 / (
        p[:, :, None, None] * q[None, None, :, :] * np.sqrt(pq)
    )
    vals = pref * kab[:, :, None, None] * kcd[None, None, :, :] * _boys_f0_array(t)
    return float(np.einsum("ij,kl,ijkl->", cab, ccd, vals))


def ao_integrals(geometry: Geometry, basis_name: str) -> AOIntegrals:
    """All AO matrices for a hydrogen system in the requested bundled basis.

    Raises:
        IntegralError: unsupported element or basis, or a linearly dependent
            basis (smallest overlap eigenvalue below 1e-8).
    """
    shells = build_shells(geometry, basis_name)
    n = len(shells)
    positions = geometry.positions_bohr()
    charges = [float(_NUCLEAR_CHARGE[s]) for s, _ in geometry.atoms]

    s = np.zeros((n, n))
    t = np.zeros((n, n))
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            s[i, j] = s[j, i] = _contracted_overlap(shells[i], shells[j])
            t[i, j] = t[j, i] = _contracted_kinetic(shells[i], shells[j])
            v[i, j] = v[j, i] = _contracted_nuclear(shells[i], shells[j], positions, charges)

    eri = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if (i * (i + 1) // 2 + j) < (k * (k + 1) // 2 + l):
                        continue
                    val = _contracted_eri(shells[i], shells[j], shells[k], shells[l])
                    for (a, b) in ((i, j), (j, i)):
                        for (c, d) in ((k, l), (l, k)):
                            eri[a, b, c, d] = val
                            eri[c, d, a, b] = val

    smallest = float(np.linalg.eigvalsh(s)[0])
    if smallest < 1e-8:
        raise IntegralError(f"linearly dependent AO basis (min overlap eigenvalue {smallest:.3e})")
    if not (np.all(np.isfinite(eri)) and np.all(np.isfinite(v))):
        raise IntegralError("non-finite AO integrals")

    e_nuc = 0.0
    for i in range(len(positions)):
        for j in range(i):
            e_nuc += charges[i] * charges[j] / float(np.linalg.norm(positions[i] - positions[j]))
    return AOIntegrals(overlap=s, kinetic=t, nuclear=v, eri=eri, e_nuc=e_nuc)


@dataclass(frozen=True)
class RhfResult:
    mo_coefficients: np.ndarray
    scf_energy: float
    orbital_energies: np.ndarray
    energy_history: tuple[float, ...]
    n_iterations: int


def run_rhf(
    ao: AOIntegrals,
    n_electrons: int,
    max_iter: int = 200,
    conv: float = 1e-10,
    damping: float = 0.0,
) -> RhfResult:
    """Closed-shell Roothaan SCF with symmetric orthogonalization.

    Plain fixed-point iteration on the density (optionally damped); no DIIS.
    Convergence criterion is the RMS change of the AO density matrix.

    Raises:
        ValueError: odd electron count.
        ScfConvergenceError: density not converged after ``max_iter`` cycles.
    """
    if n_electrons % 2 != 0:
        raise ValueError("restricted mean field requires an even electron count")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    n_occ = n_electrons // 2
    hcore = ao.core_hamiltonian()

    sval, svec = np.linalg.eigh(ao.overlap)
    x = svec @ np.diag(sval ** -0.5) @ svec.T

    def fock(density):
        coulomb = np.einsum("pqrs,rs->pq", ao.eri, density)
        exchange = np.einsum("prqs,rs->pq", ao.eri, density)
        return hcore + coulomb - 0.5 * exchange

    def solve(f):
        fp = x.T @ f @ x
        eps, cp = np.linalg.eigh(fp)
        c = x @ cp
        return c, eps

    c, eps = solve(hcore)
    density = 2.0 * c[:, :n_occ] @ c[:, :n_occ].T
    history = []
    for iteration in range(1, max_iter + 1):
        f = fock(density)
        energy = 0.5 * float(np.sum(density * (hcore + f))) + ao.e_nuc
        history.append(energy)
        c, eps = solve(f)
        new_density = 2.0 * c[:, :n_occ] @ c[:, :n_occ].T
        delta = new_density - density
        rms = math.sqrt(float(np.mean(delta * delta)))
        density = (1.0 - damping) * new_density + damping * density
        if rms < conv:
            f = fock(density)
            energy = 0.5 * float(np.sum(density * (hcore + f))) + ao.e_nuc
            history.append(energy)
            c, eps = solve(f)
            return RhfResult(
                mo_coefficients=c,
                scf_energy=energy,
                orbital_energies=eps,
                energy_history=tuple(history),
                n_iterations=iteration,
            )
    raise ScfConvergenceError(f"SCF not converged in {max_iter} iterations (rms {rms:.3e})")


@dataclass(frozen=True)
class IntegralSet:
    """Molecular-orbital integrals in chemist convention plus the core constant."""

    n_spatial: int
    e_core: float
    h: np.ndarray                # (M, M), symmetric
    v: np.ndarray                # (M, M, M, M), (pq|rs)
    orbital_energies: Optional[np.ndarray] = None

    def __post_init__(self):
        m = self.n_spatial
        if self.h.shape != (m, m) or self.v.shape != (m, m, m, m):
            raise ValueError("integral array shapes inconsistent with n_spatial")
        if np.max(np.abs(self.h - self.h.T)) > 1e-10:
            raise ValueError("one-electron matrix not symmetric")
        _check_eightfold(self.v)


def _check_eightfold(v: np.ndarray, tol: float = 1e-10):
    for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
        if np.max(np.abs(v - v.transpose(perm))) > tol:
            raise ValueError("two-electron tensor violates eight-fold symmetry")


def to_mo_integrals(
    ao: AOIntegrals,
    mo_coefficients: np.ndarray,
    e_nuc: float,
    orbital_energies: Optional[np.ndarray] = None,
) -> IntegralSet:
    """Four-index transform of the AO integrals into the MO basis."""
    c = np.asarray(mo_coefficients, dtype=float)
    if c.shape[0] != ao.n_basis:
        raise ValueError("MO coefficient rows must match the AO dimension")
    h = c.T @ ao.core_hamiltonian() @ c
    v = np.einsum("pi,qj,pqrs,rk,sl->ijkl", c, c, ao.eri, c, c, optimize=True)
    h = 0.5 * (h + h.T)
    return IntegralSet(
        n_spatial=c.shape[1],
        e_core=e_nuc,
        h=h,
        v=v,
        orbital_energies=None if orbital_energies is None else np.asarray(orbital_energies),
    )


def freeze_core(integrals: IntegralSet, frozen: Sequence[int]) -> IntegralSet:
    """Fold doubly occupied orbitals into an effective one-body operator and constant.

    Assumes the frozen indices are the lowest-energy occupied orbitals; the
    active space keeps the remaining orbitals in their original order.

    Raises:
        ValueError: out-of-range or duplicate index, or empty active space.
    """
    frozen = sorted(frozen)
    m = integrals.n_spatial
    if len(set(frozen)) != len(frozen):
        raise ValueError("duplicate frozen orbital index")
    if frozen and (frozen[0] < 0 or frozen[-1] >= m):
        raise ValueError("frozen orbital index out of range")
    if not frozen:
        return integrals
    active = [p for p in range(m) if p not in set(frozen)]
    if not active:
        raise ValueError("freezing all orbitals leaves an empty active space")

    h, v = integrals.h, integrals.v
    e_core = integrals.e_core
    for i in frozen:
        e_core += 2.0 * h[i, i]
    for i in frozen:
        for j in frozen:
            e_core += 2.0 * v[i, i, j, j] - v[i, j, j, i]

    h_eff = h.copy()
    for i in frozen:
        h_eff += 2.0 * v[:, :, i, i] - v[:, i, i, :]
    idx = np.ix_(active, active)
    h_active = h_eff[idx]
    v_active = v[np.ix_(active, active, active, active)]
    energies = integrals.orbital_energies
    return IntegralSet(
        n_spatial=len(active),
        e_core=e_core,
        h=0.5 * (h_active + h_active.T),
        v=v_active,
        orbital_energies=None if energies is None else energies[active],
    )


def prepare_system(
    geometry: Geometry,
    basis_name: str,
    frozen: Sequence[int] = (),
    damping: float = 0.0,
) -> tuple[IntegralSet, RhfResult]:
    """Convenience pipeline: AO integrals, RHF, MO transform, optional freezing."""
    ao = ao_integrals(geometry, basis_name)
    rhf = run_rhf(ao, geometry.n_electrons, damping=damping)
    mo = to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc, rhf.orbital_energies)
    if frozen:
        mo = freeze_core(mo, frozen)
    return mo, rhf
