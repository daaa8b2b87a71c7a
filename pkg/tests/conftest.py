import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ptinterlace.potentials import Monomial  # noqa: E402
from ptinterlace.qes import qes_spectrum, qes_zeros  # noqa: E402
from ptinterlace.shooting import find_eigenvalues, wkb_energy_of  # noqa: E402
from ptinterlace.zeros import find_zeros  # noqa: E402


@pytest.fixture(scope="session")
def ix3_pairs():
    """First seven ix^3 eigenpairs (k = 0..6)."""
    spec = Monomial(3)
    E_max = 0.5 * (wkb_energy_of(spec, 6) + wkb_energy_of(spec, 7))
    return find_eigenvalues(spec, E_max)


@pytest.fixture(scope="session")
def ix3_zero_sets(ix3_pairs):
    spec = Monomial(3)
    return [find_zeros(spec, ep) for ep in ix3_pairs]


@pytest.fixture(scope="session")
def qes_states():
    return qes_spectrum(10.0, 2.0, 21)


@pytest.fixture(scope="session")
def qes_zero_lists(qes_states):
    return [qes_zeros(s) for s in qes_states]
