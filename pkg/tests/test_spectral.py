import numpy as np
import pytest

import drivendimer as dd
from drivendimer.propagation import floquet_fingerprint

from conftest import bec_plus, reference_params


def synthetic_map(entries, params):
    basis = dd.build_basis(params.n_particles)
    control = dd.StepControl()
    return dd.FloquetMap(
        basis=basis,
        entries=np.asarray(entries, dtype=complex),
        params=params,
        control=control,
        params_fingerprint=floquet_fingerprint(params, control),
    )


@pytest.fixture(scope="module")
def fmap4():
    params = reference_params(4)
    return dd.build_floquet_map(dd.build_operators(params), dd.StepControl())


class TestEig:
    def test_invariants_n4(self, fmap4):
        spec = dd.eig_floquet(fmap4)
        spec.validate()

    def test_invariants_n10(self, spec10):
        spec10.validate()

    def test_sorted_by_modulus(self, spec10):
        mags = np.abs(spec10.rapidities)
        assert np.all(np.diff(mags) <= 1e-12)

    def test_identity_map(self):
        params = reference_params(2)
        fmap = synthetic_map(np.eye(9), params)
        spec = dd.eig_floquet(fmap)
        assert np.allclose(spec.rapidities, 1.0)
        lam2, gap = dd.subdominant_mode(spec)
        assert lam2 == pytest.approx(1.0)
        assert gap == pytest.approx(2.0)

    def test_residuals_small(self, spec10):
        assert np.max(spec10.residuals) < 1e-7 * spec10.map_norm

    def test_conjugation_symmetry(self, spec10):
        lam = spec10.rapidities
        for value in lam:
            assert np.min(np.abs(lam - np.conj(value))) < 1e-7


class TestSteadyState:
    def test_fixed_point_residual(self, fmap10, rho10):
        defect = np.max(np.abs(dd.apply_floquet(fmap10, rho10.entries) - rho10.entries))
        assert defect < 1e-7

    def test_trace_exactly_one(self, rho10):
        assert np.real(np.trace(rho10.entries)) == pytest.approx(1.0, abs=1e-14)

    def test_density_matrix_invariants(self, rho10):
        rho10.validate()

    @pytest.mark.parametrize("n", [2, 6])
    def test_dark_state_oracle(self, n):
        params = dd.ModelParams.from_scaled(n, un=0.0, gamma_n=0.1, mu0=0.0, mu1=0.0)
        ops = dd.build_operators(params)
        fmap = dd.build_floquet_map(ops, dd.StepControl())
        rho = dd.steady_state(dd.eig_floquet(fmap), ops.basis)
        v = bec_plus(n)
        fidelity = float(np.real(v @ rho.entries @ v))
        assert fidelity > 1 - 1e-6

    def test_power_iteration_equivalence(self, fmap10, rho10):
        d = fmap10.dim
        x = np.eye(d, dtype=complex) / d
        for _ in range(500):
            x = dd.apply_floquet(fmap10, x)
        diff = 0.5 * (x + x.conj().T) - rho10.entries
        trace_distance = 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)))
        assert trace_distance < 1e-6

    def test_rejects_bad_leading_rapidity(self):
        params = reference_params(2)
        fmap = synthetic_map(0.5 * np.eye(9), params)
        spec = dd.eig_floquet(fmap)
        with pytest.raises(ValueError):
            dd.steady_state(spec, fmap.basis)


class TestSubdominant:
    def test_oracle_match_n4(self, fmap4):
        spec = dd.eig_floquet(fmap4)
        lam2, gap = dd.subdominant_mode(spec)
        brute = np.linalg.eigvals(fmap4.entries)
        brute = brute[np.argsort(-np.abs(brute))]
        assert abs(abs(lam2) - abs(brute[1])) < 1e-10
        assert gap == pytest.approx(abs(lam2 + 1.0))

    def test_needs_two(self):
        params = reference_params(2)
        fake = dd.eig_floquet(synthetic_map(np.eye(9), params))
        import dataclasses

        tiny = dataclasses.replace(
            fake,
            rapidities=fake.rapidities[:1],
            right_eigenvectors=fake.right_eigenvectors[:, :1],
            residuals=fake.residuals[:1],
        )
        with pytest.raises(ValueError):
            dd.subdominant_mode(tiny)


class TestBifurcationSlice:
    def test_populations_sum(self, params10, fmap10):
        sl = dd.quantum_bifurcation_slice(params10, dd.StepControl(), fmap10)
        sl.validate()
        assert abs(np.sum(sl.populations) - 1.0) < 1e-8
        assert sl.un == pytest.approx(0.2)

    def test_dark_state_binomial(self):
        n = 6
        params = dd.ModelParams.from_scaled(n, un=0.0, gamma_n=0.1, mu0=0.0, mu1=0.0)
        sl = dd.quantum_bifurcation_slice(params, dd.StepControl())
        expected = np.abs(bec_plus(n)) ** 2
        assert np.max(np.abs(sl.populations - expected)) < 1e-6

    def test_sz_values(self, params10, fmap10):
        sl = dd.quantum_bifurcation_slice(params10, dd.StepControl(), fmap10)
        assert np.allclose(sl.sz_values, np.arange(11) / 10 - 0.5)

    def test_params_mismatch(self, fmap10):
        other = reference_params(10, un=0.3)
        with pytest.raises(ValueError):
            dd.quantum_bifurcation_slice(other, dd.StepControl(), fmap10)


class TestBranchConcentration:
    def test_populations_near_classical_branches(self, n25_pipeline):
        # steady-state weight collects around the two period-2 branch
        # values of cos(theta)/2 (sharper at larger N)
        params, ops, fmap, spec = n25_pipeline
        sl = dd.quantum_bifurcation_slice(params, dd.StepControl(), fmap)
        record = dd.stroboscopic_map(
            dd.ClassicalState(2.0, -3.0), params, 800, 64, 1000
        )
        branches = dd.classify_attractor(record).centers
        near = np.zeros_like(sl.populations, dtype=bool)
        for b in branches:
            near |= np.abs(sl.sz_values - b) < 0.12
        assert np.sum(sl.populations[near]) > 0.5
