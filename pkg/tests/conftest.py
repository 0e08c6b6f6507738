import pytest

from vqemeter.fermionic import build_hamiltonian, normal_order
from vqemeter.integrals import hydrogen_chain, prepare_system

_CACHE = {}


def chain(n_atoms, spacing, basis="sto-3g"):
    """Cached pipeline: geometry -> MO integrals -> Hamiltonian -> normal order."""
    key = (n_atoms, spacing, basis)
    if key not in _CACHE:
        mo, rhf = prepare_system(hydrogen_chain(n_atoms, spacing), basis)
        ham = build_hamiltonian(mo)
        _CACHE[key] = (mo, ham, normal_order(ham), rhf)
    return _CACHE[key]


@pytest.fixture(scope="session")
def chain_system():
    return chain


@pytest.fixture(scope="session")
def h2_system():
    return chain(2, 0.7414)


@pytest.fixture(scope="session")
def h4_system():
    return chain(4, 1.0)


@pytest.fixture(scope="session")
def h8_system():
    return chain(8, 1.0)
