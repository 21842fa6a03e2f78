import pytest

from qerest.geometry import BilliardDomain
from qerest.spectral_solver import find_spectrum


@pytest.fixture(scope="session")
def stadium_window_40_60():
    """Bunimovich stadium (half-length 1, radius 1), k in [40, 60].

    Roughly 1100 levels; the expensive shared fixture behind the chaotic
    completeness checks. Computed once per session.
    """
    return find_spectrum(BilliardDomain.stadium(1.0, 1.0), (40.0, 60.0))
