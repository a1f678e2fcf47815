import numpy as np
import pytest

import drivendimer as dd

# Drive frequency from `drivendimer calibrate-omega` at the reference
# parameters (mu0=J, mu1=3.4J, gammaN=0.1J, UN=0.2J): the default grid's
# period-2 window sits at omega/J = 1.0.
OMEGA_STAR = 1.0


def reference_params(n_particles: int, un: float = 0.2) -> dd.ModelParams:
    return dd.ModelParams.from_scaled(
        n_particles, un=un, gamma_n=0.1, mu0=1.0, mu1=3.4, omega=OMEGA_STAR
    )


@pytest.fixture(scope="session")
def params10() -> dd.ModelParams:
    return reference_params(10)


@pytest.fixture(scope="session")
def ops10(params10):
    return dd.build_operators(params10)


@pytest.fixture(scope="session")
def fmap10(ops10):
    return dd.build_floquet_map(ops10, dd.StepControl())


@pytest.fixture(scope="session")
def spec10(fmap10):
    return dd.eig_floquet(fmap10)


@pytest.fixture(scope="session")
def rho10(spec10, ops10):
    return dd.steady_state(spec10, ops10.basis)


@pytest.fixture(scope="session")
def n25_pipeline():
    """(params, ops, map, spectrum) at N=25; the build takes about a minute."""
    params = reference_params(25)
    ops = dd.build_operators(params)
    fmap = dd.build_floquet_map(ops, dd.StepControl())
    spec = dd.eig_floquet(fmap)
    return params, ops, fmap, spec


def random_hermitian(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (a + a.conj().T)


def bec_plus(n_particles: int) -> np.ndarray:
    """Symmetric condensate amplitudes sqrt(C(N,n))/2^(N/2)."""
    from scipy.special import gammaln

    n = np.arange(n_particles + 1)
    ln_binom = (
        gammaln(n_particles + 1) - gammaln(n + 1) - gammaln(n_particles - n + 1)
    )
    v = np.exp(0.5 * ln_binom - 0.5 * n_particles * np.log(2.0))
    return v / np.linalg.norm(v)
