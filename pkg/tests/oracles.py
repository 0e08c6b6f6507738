"""Independent reference implementations used only by the test suite.

Everything here is deliberately brute force: dense Fock-space matrices built
from explicit ladder operators, numeric quadrature for Gaussian integrals, and
scan-based variational baselines.  None of it shares code with the package
paths it checks.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

# ---------------------------------------------------------------------------
# dense Fock-space ladder operators (little-endian qubit <-> mode convention)

_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])   # |0><1|
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _kron_chain(factors):
    out = np.eye(1, dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def annihilation_matrix(p: int, n_modes: int) -> np.ndarray:
    """a_p with parity string on modes < p; index bit p of the basis label is n_p."""
    factors = []
    for q in reversed(range(n_modes)):
        if q > p:
            factors.append(np.eye(2))
        elif q == p:
            factors.append(_LOWER)
        else:
            factors.append(_SZ)
    return _kron_chain(factors)


def fermion_matrix(op, n_modes: int) -> np.ndarray:
    """Dense matrix of a FermionOperator (duck-typed: .terms dict, .constant)."""
    dim = 2 ** n_modes
    out = np.eye(dim, dtype=complex) * op.constant
    ladders = {p: annihilation_matrix(p, n_modes) for p in range(n_modes)}
    for key, coeff in op.terms.items():
        mat = np.eye(dim, dtype=complex)
        for index, dagger in key:
            factor = ladders[index].conj().T if dagger else ladders[index]
            mat = mat @ factor
        out += coeff * mat
    return out


def pauli_matrix(string, n_qubits: int) -> np.ndarray:
    """Dense matrix of a PauliString (duck-typed: .axes mapping qubit->axis)."""
    axes = dict(string.axes)
    return _kron_chain([_PAULI[axes.get(q, "I")] for q in reversed(range(n_qubits))])


def qubit_matrix(qop, n_qubits: int) -> np.ndarray:
    dim = 2 ** n_qubits
    out = np.eye(dim, dtype=complex) * qop.constant
    for string, coeff in qop.terms.items():
        out += coeff * pauli_matrix(string, n_qubits)
    return out


# ---------------------------------------------------------------------------
# quadrature oracles for s-Gaussian integrals

def _shell_value(shell, r):
    d = r - shell.center
    return float(np.sum(shell.coefficients * np.exp(-shell.exponents * (d @ d))))


def _shell_laplacian(shell, r):
    d = r - shell.center
    r2 = d @ d
    vals = shell.coefficients * np.exp(-shell.exponents * r2)
    return float(np.sum(vals * (4.0 * shell.exponents ** 2 * r2 - 6.0 * shell.exponents)))


def _hermite_grid(center, scale, n_points):
    x, w = hermgauss(n_points)
    pts = np.array(np.meshgrid(x, x, x, indexing="ij")).reshape(3, -1).T
    weights = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    total_weight = weights * np.exp(np.sum(pts ** 2, axis=1))
    return center + pts / scale, total_weight / scale ** 3


def _primitive_pair_quadrature(a, b, integrand, n_points=48) -> float:
    """Sum tensor Gauss-Hermite quadratures over primitive pairs.

    Each pair gets a grid matched to its combined width but centered at the
    midpoint of the two shell centers (not the Gaussian-product center), so the
    value does not reuse the closed-form algebra under test.
    """
    mid = (a.center + b.center) / 2.0
    total = 0.0
    for ea, ca in zip(a.exponents, a.coefficients):
        for eb, cb in zip(b.exponents, b.coefficients):
            grid, w = _hermite_grid(mid, math.sqrt(ea + eb), n_points)
            total += ca * cb * float(integrand(ea, eb, grid) @ w)
    return total


def quadrature_overlap(a, b, n_points=48) -> float:
    def product(ea, eb, grid):
        ra2 = np.sum((grid - a.center) ** 2, axis=1)
        rb2 = np.sum((grid - b.center) ** 2, axis=1)
        return np.exp(-ea * ra2 - eb * rb2)

    return _primitive_pair_quadrature(a, b, product, n_points)


def quadrature_kinetic(a, b, n_points=48) -> float:
    def product(ea, eb, grid):
        ra2 = np.sum((grid - a.center) ** 2, axis=1)
        rb2 = np.sum((grid - b.center) ** 2, axis=1)
        lap = (4.0 * eb * eb * rb2 - 6.0 * eb) * np.exp(-eb * rb2)
        return -0.5 * np.exp(-ea * ra2) * lap

    return _primitive_pair_quadrature(a, b, product, n_points)


def _fourier_coulomb(p: float, q: float, separation: float) -> float:
    """int exp(-p|r1-P|^2) exp(-q|r2-Q|^2) / r12 via the radial Fourier kernel."""
    a = 0.25 * (1.0 / p + 1.0 / q)
    prefactor = (2.0 / math.pi) * (math.pi / p) ** 1.5 * (math.pi / q) ** 1.5

    def integrand(k):
        damp = math.exp(-a * k * k)
        if separation < 1e-14:
            return damp
        return damp * math.sin(k * separation) / (k * separation)

    upper = 14.0 / math.sqrt(a)
    val, _ = quad(integrand, 0.0, upper, limit=400)
    return prefactor * val


def quadrature_nuclear(a, b, centers, charges) -> float:
    total = 0.0
    for ea, ca in zip(a.exponents, a.coefficients):
        for eb, cb in zip(b.exponents, b.coefficients):
            p = ea + eb
            mu = ea * eb / p
            diff = a.center - b.center
            k_ab = math.exp(-mu * float(diff @ diff))
            pcent = (ea * a.center + eb * b.center) / p
            for nuc, z in zip(centers, charges):
                # point charge as the q -> inf limit of a Gaussian charge
                sep = float(np.linalg.norm(pcent - nuc))
                kern = (2.0 / math.pi) * (math.pi / p) ** 1.5

                def integrand(k):
                    damp = math.exp(-0.25 * k * k / p)
                    if sep < 1e-14:
                        return damp
                    return damp * math.sin(k * sep) / (k * sep)

                val, _ = quad(integrand, 0.0, 14.0 * math.sqrt(4.0 * p), limit=400)
                total -= z * ca * cb * k_ab * kern * val
    return total


def quadrature_eri(a, b, c, d) -> float:
    total = 0.0
    for ea, ca in zip(a.exponents, a.coefficients):
        for eb, cb in zip(b.exponents, b.coefficients):
            p = ea + eb
            kab = math.exp(-(ea * eb / p) * float((a.center - b.center) @ (a.center - b.center)))
            pc = (ea * a.center + eb * b.center) / p
            for ec, cc in zip(c.exponents, c.coefficients):
                for ed, cd in zip(d.exponents, d.coefficients):
                    q = ec + ed
                    kcd = math.exp(
                        -(ec * ed / q) * float((c.center - d.center) @ (c.center - d.center))
                    )
                    qc = (ec * c.center + ed * d.center) / q
                    sep = float(np.linalg.norm(pc - qc))
                    total += (
                        ca * cb * cc * cd * kab * kcd * _fourier_coulomb(p, q, sep)
                    )
    return total


# ---------------------------------------------------------------------------
# variational RHF baseline for two-orbital systems

def h2_variational_energy(ao) -> float:
    """Minimize the closed-shell energy over the one-parameter orbital mixing.

    Works in the Lowdin-orthogonalized basis of a two-function AO set, scanning
    the occupied orbital phi = cos(t) chi0 + sin(t) chi1.
    """
    sval, svec = np.linalg.eigh(ao.overlap)
    x = svec @ np.diag(sval ** -0.5) @ svec.T
    hcore = x.T @ ao.core_hamiltonian() @ x
    eri = np.einsum("pi,qj,pqrs,rk,sl->ijkl", x, x, ao.eri, x, x, optimize=True)

    def energy(theta):
        c = np.array([math.cos(theta), math.sin(theta)])
        h_occ = float(c @ hcore @ c)
        coul = float(np.einsum("p,q,r,s,pqrs->", c, c, c, c, eri))
        return 2.0 * h_occ + coul + ao.e_nuc

    candidates = [
        minimize_scalar(energy, bounds=(lo, lo + math.pi / 2), method="bounded",
                        options={"xatol": 1e-12})
        for lo in np.linspace(0.0, math.pi, 7)
    ]
    return float(min(r.fun for r in candidates))
