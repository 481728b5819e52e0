import numpy as np
import pytest

from micromorph.fields import Grid
from micromorph.materials import MaterialParams, Variant

# Fixed seed for the recorded witness fields (non-symmetry and sign
# witnesses referenced by the acceptance criteria).
WITNESS_SEED = 20240214


def reference_params(mu_c=0.0, **overrides):
    """The documented reference set: mu_e = mu_h = 1, lambda_e = lambda_h = 0,
    alpha = (1, 1, 1); mu_c selects Relaxed vs EringenClaus."""
    variant = overrides.pop("variant", Variant.ERINGEN_CLAUS if mu_c > 0 else Variant.RELAXED)
    base = dict(mu_e=1.0, lambda_e=0.0, mu_c=mu_c, mu_h=1.0, lambda_h=0.0,
                alpha1=1.0, alpha2=1.0, alpha3=1.0, variant=variant)
    base.update(overrides)
    return MaterialParams(**base)


def random_admissible(rng, variant=Variant.RELAXED, mu_c=None):
    """Strictly admissible random parameter set (lambdas kept above -2mu/3)."""
    mu_e, mu_h = rng.uniform(0.2, 2.0, 2)
    lam_e = rng.uniform(-0.5, 1.0) * mu_e
    lam_h = rng.uniform(-0.5, 1.0) * mu_h
    a1, a2, a3 = rng.uniform(0.1, 2.0, 3)
    if mu_c is None:
        mu_c = rng.uniform(0.1, 1.0) if variant is Variant.ERINGEN_CLAUS else 0.0
    return MaterialParams(mu_e, lam_e, mu_c, mu_h, lam_h, a1, a2, a3, variant)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return Grid(16, "spectral")


@pytest.fixture
def small_grid():
    return Grid(8, "spectral")
