import math

import numpy as np
import pytest
from scipy.integrate import quad

from vqemeter.integrals import (
    Geometry,
    IntegralError,
    IntegralSet,
    ScfConvergenceError,
    ao_integrals,
    boys_f0,
    build_shells,
    freeze_core,
    hydrogen_chain,
    load_basis,
    read_geometry,
    run_rhf,
    to_mo_integrals,
)

import oracles


def boys_quad(t):
    val, _ = quad(lambda u: math.exp(-t * u * u), 0.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    return val


class TestBoys:
    def test_zero(self):
        assert boys_f0(0.0) == 1.0

    def test_large_t_asymptote(self):
        t = 50.0
        assert abs(boys_f0(t) - 0.5 * math.sqrt(math.pi / t)) < 1e-10

    def test_unit_argument(self):
        assert abs(boys_f0(1.0) - boys_quad(1.0)) < 1e-13

    @pytest.mark.parametrize("t", [1e-14, 1e-9, 0.01, 0.3, 0.5, 2.0, 7.7, 30.0])
    def test_matches_adaptive_quadrature(self, t):
        assert abs(boys_f0(t) - boys_quad(t)) < 1e-13

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            boys_f0(-0.1)


class TestShells:
    def test_unit_self_overlap(self):
        for basis in ("sto-3g", "6-31g"):
            for shell in build_shells(hydrogen_chain(1, 1.0), basis):
                p = shell.exponents[:, None] + shell.exponents[None, :]
                s = float(np.sum(np.outer(shell.coefficients, shell.coefficients)
                                 * (math.pi / p) ** 1.5))
                assert abs(s - 1.0) < 1e-12

    def test_unknown_basis(self):
        with pytest.raises(IntegralError):
            load_basis("cc-pvdz")

    def test_unknown_element(self):
        geo = Geometry(atoms=(("He", (0.0, 0.0, 0.0)),), charge=0, multiplicity=1)
        with pytest.raises(IntegralError):
            build_shells(geo, "sto-3g")


class TestAoIntegrals:
    def test_single_atom_overlap_is_identity(self):
        ao = ao_integrals(hydrogen_chain(1, 1.0), "sto-3g")
        assert np.allclose(ao.overlap, [[1.0]], atol=1e-12)

    def test_overlap_symmetric(self):
        ao = ao_integrals(hydrogen_chain(2, 0.9), "sto-3g")
        assert ao.overlap[0, 1] == ao.overlap[1, 0]

    def test_eri_eightfold_symmetry(self):
        v = ao_integrals(hydrogen_chain(3, 0.8), "sto-3g").eri
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)):
            assert np.max(np.abs(v - v.transpose(perm))) < 1e-12

    def test_h2_sto3g_against_quadrature(self):
        geo = hydrogen_chain(2, 0.7414)
        shells = build_shells(geo, "sto-3g")
        ao = ao_integrals(geo, "sto-3g")
        centers = geo.positions_bohr()
        charges = [1.0, 1.0]
        for i in range(2):
            for j in range(2):
                assert abs(ao.overlap[i, j] - oracles.quadrature_overlap(shells[i], shells[j])) < 1e-10
                assert abs(ao.kinetic[i, j] - oracles.quadrature_kinetic(shells[i], shells[j])) < 1e-10
                ref = oracles.quadrature_nuclear(shells[i], shells[j], centers, charges)
                assert abs(ao.nuclear[i, j] - ref) < 1e-8
        for idx in ((0, 0, 0, 0), (0, 0, 1, 1), (1, 0, 1, 0), (1, 1, 1, 0)):
            ref = oracles.quadrature_eri(*[shells[k] for k in idx])
            assert abs(ao.eri[idx] - ref) < 1e-8

    def test_h2_631g_overlap_against_quadrature(self):
        geo = hydrogen_chain(2, 1.1)
        shells = build_shells(geo, "6-31g")
        ao = ao_integrals(geo, "6-31g")
        for i in range(4):
            for j in range(4):
                assert abs(ao.overlap[i, j] - oracles.quadrature_overlap(shells[i], shells[j])) < 1e-9

    def test_linear_dependence_detected(self):
        with pytest.raises(IntegralError):
            ao_integrals(hydrogen_chain(2, 1e-4), "sto-3g")


class TestRhf:
    def test_h2_matches_variational_oracle(self):
        ao = ao_integrals(hydrogen_chain(2, 0.7414), "sto-3g")
        rhf = run_rhf(ao, 2)
        assert abs(rhf.scf_energy - oracles.h2_variational_energy(ao)) < 1e-8
        assert abs(rhf.scf_energy - (-1.1167)) < 5e-4

    @pytest.mark.parametrize("n,basis", [(2, "sto-3g"), (4, "sto-3g"), (2, "6-31g")])
    def test_orbitals_overlap_orthonormal(self, n, basis):
        ao = ao_integrals(hydrogen_chain(n, 1.0), basis)
        rhf = run_rhf(ao, n)
        c = rhf.mo_coefficients
        assert c.shape == ao.overlap.shape
        assert np.max(np.abs(c.T @ ao.overlap @ c - np.eye(c.shape[1]))) < 1e-8

    def test_energy_history_monotone_without_damping(self):
        for spacing in (0.6, 1.0, 1.3):
            rhf = run_rhf(ao_integrals(hydrogen_chain(8, spacing), "sto-3g"), 8)
            diffs = np.diff(rhf.energy_history)
            assert np.all(diffs <= 1e-10)

    def test_fock_density_commute_at_convergence(self):
        ao = ao_integrals(hydrogen_chain(4, 0.9), "sto-3g")
        rhf = run_rhf(ao, 4, conv=1e-11)
        c = rhf.mo_coefficients
        d = 2.0 * c[:, :2] @ c[:, :2].T
        f = ao.core_hamiltonian()
        f = f + np.einsum("pqrs,rs->pq", ao.eri, d) - 0.5 * np.einsum("prqs,rs->pq", ao.eri, d)
        sval, svec = np.linalg.eigh(ao.overlap)
        x = svec @ np.diag(sval ** -0.5) @ svec.T
        fp = x.T @ f @ x
        dp = np.linalg.inv(x) @ d @ np.linalg.inv(x).T
        assert np.max(np.abs(fp @ dp - dp @ fp)) < 1e-8

    def test_nonconvergence_raises(self):
        ao = ao_integrals(hydrogen_chain(8, 1.0), "sto-3g")
        with pytest.raises(ScfConvergenceError):
            run_rhf(ao, 8, max_iter=3)

    def test_odd_electrons_rejected(self):
        ao = ao_integrals(hydrogen_chain(2, 1.0), "sto-3g")
        with pytest.raises(ValueError):
            run_rhf(ao, 3)

    def test_h8_at_table_geometry_converges(self):
        rhf = run_rhf(ao_integrals(hydrogen_chain(8, 1.0), "sto-3g"), 8)
        assert rhf.n_iterations < 200


class TestMoTransform:
    def test_identity_coefficients_relabel(self):
        ao = ao_integrals(hydrogen_chain(2, 0.9), "sto-3g")
        mo = to_mo_integrals(ao, np.eye(2), ao.e_nuc)
        assert np.allclose(mo.h, ao.core_hamiltonian(), atol=1e-12)
        assert np.allclose(mo.v, ao.eri, atol=1e-12)
        assert mo.e_core == ao.e_nuc

    def test_trace_invariant_under_orbital_rotation(self):
        ao = ao_integrals(hydrogen_chain(2, 0.9), "sto-3g")
        rhf = run_rhf(ao, 2)
        theta = 0.37
        rot = np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
        mo = to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc)
        mo_rot = to_mo_integrals(ao, rhf.mo_coefficients @ rot, ao.e_nuc)
        assert abs(np.trace(mo.h) - np.trace(mo_rot.h)) < 1e-10

    def test_h2_distinct_eri_magnitudes(self):
        ao = ao_integrals(hydrogen_chain(2, 0.7414), "sto-3g")
        rhf = run_rhf(ao, 2)
        mo = to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc)
        distinct = {round(abs(x), 9) for x in mo.v.ravel()}
        distinct.discard(0.0)
        assert len(distinct) <= 4

    def test_dimension_mismatch(self):
        ao = ao_integrals(hydrogen_chain(2, 0.9), "sto-3g")
        with pytest.raises(ValueError):
            to_mo_integrals(ao, np.eye(3), ao.e_nuc)

    def test_eightfold_symmetry_preserved(self):
        ao = ao_integrals(hydrogen_chain(4, 1.0), "sto-3g")
        rhf = run_rhf(ao, 4)
        mo = to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc)
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            assert np.max(np.abs(mo.v - mo.v.transpose(perm))) < 1e-10


class TestFreezeCore:
    @staticmethod
    def _h4_integrals():
        ao = ao_integrals(hydrogen_chain(4, 1.0), "sto-3g")
        rhf = run_rhf(ao, 4)
        return to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc, rhf.orbital_energies), rhf

    def test_empty_freeze_is_identity(self):
        mo, _ = self._h4_integrals()
        assert freeze_core(mo, []) is mo

    def test_freeze_all_occupied_of_two_electron_system(self):
        ao = ao_integrals(hydrogen_chain(2, 0.7414), "sto-3g")
        rhf = run_rhf(ao, 2)
        mo = to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc)
        frozen = freeze_core(mo, [0])
        # folding the doubly occupied orbital into the constant recovers the
        # mean-field energy
        assert abs(frozen.e_core - rhf.scf_energy) < 1e-10
        assert frozen.n_spatial == 1

    def test_freeze_everything_rejected(self):
        ao = ao_integrals(hydrogen_chain(2, 0.7414), "sto-3g")
        rhf = run_rhf(ao, 2)
        mo = to_mo_integrals(ao, rhf.mo_coefficients, ao.e_nuc)
        with pytest.raises(ValueError):
            freeze_core(mo, [0, 1])

    def test_bad_indices(self):
        mo, _ = self._h4_integrals()
        with pytest.raises(ValueError):
            freeze_core(mo, [0, 0])
        with pytest.raises(ValueError):
            freeze_core(mo, [7])

    def test_dimensions_and_symmetry(self):
        mo, _ = self._h4_integrals()
        reduced = freeze_core(mo, [0])
        assert reduced.n_spatial == 3
        assert np.max(np.abs(reduced.h - reduced.h.T)) < 1e-12
        IntegralSet(reduced.n_spatial, reduced.e_core, reduced.h, reduced.v)


class TestGeometry:
    def test_chain_positions(self):
        geo = hydrogen_chain(3, 1.2)
        assert geo.atoms[2][1][2] == pytest.approx(2.4)
        assert geo.n_electrons == 3

    def test_read_geometry_roundtrip(self):
        text = """
        # comment
        charge 0 multiplicity 1
        H 0.0 0.0 0.0
        H 0.0 0.0 0.7414
        """
        geo = read_geometry(text)
        assert geo.charge == 0
        assert len(geo.atoms) == 2
        assert geo.atoms[1][1][2] == pytest.approx(0.7414)

    def test_bad_header(self):
        with pytest.raises(ValueError):
            read_geometry("spin 1\nH 0 0 0")

    def test_bad_atom_line(self):
        with pytest.raises(ValueError):
            read_geometry("charge 0 multiplicity 1\nH 0 0")
