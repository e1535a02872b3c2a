import pytest

import statmenus as sm

FIVE_TYPES = [0.3, 0.4, 0.5, 0.6, 0.7]


@pytest.fixture(scope="session")
def gm1():
    return sm.gaussian_model(1.0)


@pytest.fixture(scope="session")
def fdr25():
    return sm.fdr_objective(0.25)


@pytest.fixture(scope="session")
def five_types():
    return list(FIVE_TYPES)


@pytest.fixture(scope="session")
def five_type_menu(gm1, fdr25, five_types):
    """Finite menu for the five-type benchmark: terminal (R, c) = (100, 5),
    slack 50, midpoint costs."""
    taus = [sm.fdr_threshold(q, fdr25, gm1) for q in five_types]
    return sm.build_finite_menu(five_types, taus, (100.0, 5.0), 50.0, lam=0.5, model=gm1)


@pytest.fixture(scope="session")
def fixed_menu(gm1, fdr25):
    """Constant-reward menu on the full elicitable range for theta1 = 1."""
    return sm.build_fixed_reward(100.0, 0.43, 0.86, fdr25, gm1, n=129)


@pytest.fixture(scope="session")
def fine_fixed_menu(gm1, fdr25):
    """High-resolution variant for misreport grid-argmax cross-checks."""
    return sm.build_fixed_reward(100.0, 0.43, 0.86, fdr25, gm1, n=1025)
