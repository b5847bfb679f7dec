import warnings

import pytest
from hypothesis import HealthCheck, settings

from cirmort.model import CirParams, ContractParams, FellerWarning

settings.register_profile(
    "default",
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _quiet_feller():
    # several fixtures deliberately violate the Feller condition; the warning
    # is part of the contract but noise in the test log
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FellerWarning)
        yield


@pytest.fixture(scope="session")
def primary_cir():
    return CirParams(k=0.25, theta=0.06, sigma=0.1)


@pytest.fixture(scope="session")
def primary_contract():
    return ContractParams(c=0.05, m=0.05)


@pytest.fixture(scope="session")
def primary_solution(primary_cir, primary_contract):
    from cirmort.closed_form import solve_boundary

    return solve_boundary(primary_cir, primary_contract)
