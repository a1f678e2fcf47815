import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import drivendimer as dd
from drivendimer.model import BAND_ROWS

from conftest import bec_plus, reference_params


def two_site_operators(n_particles):
    """Independent oracle: full two-site Fock space, projected on the
    fixed-N sector in canonical order (site-1 occupation ascending)."""
    cut = n_particles + 1
    dim = cut * cut  # |n1, n2>, index n1*cut + n2
    b = np.zeros((cut, cut))
    b[np.arange(cut - 1), np.arange(1, cut)] = np.sqrt(np.arange(1, cut))
    eye = np.eye(cut)
    b1 = np.kron(b, eye)
    b2 = np.kron(eye, b)
    sector = [n1 * cut + (n_particles - n1) for n1 in range(cut)]
    proj = np.zeros((cut, dim))
    proj[np.arange(cut), sector] = 1.0
    return b1, b2, proj


class TestBasis:
    def test_smallest(self):
        basis = dd.build_basis(1)
        assert basis.states == ((0, 1), (1, 0))

    def test_enumeration(self):
        basis = dd.build_basis(2)
        assert basis.states == ((0, 2), (1, 1), (2, 0))

    def test_counting(self):
        basis = dd.build_basis(100)
        assert len(basis.states) == 101
        assert basis.states[-1] == (100, 0)
        assert basis.label(0) == "|0,100>"

    @pytest.mark.parametrize("bad", [0, -3])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            dd.build_basis(bad)

    def test_rejects_non_integer(self):
        with pytest.raises(TypeError):
            dd.build_basis(2.5)


class TestParams:
    def test_from_scaled_divides(self):
        p = dd.ModelParams.from_scaled(25, un=0.2, gamma_n=0.1)
        assert p.u == pytest.approx(0.2 / 25)
        assert p.gamma == pytest.approx(0.1 / 25)
        assert p.un == pytest.approx(0.2)
        assert p.gamma_n == pytest.approx(0.1)

    def test_period(self):
        p = dd.ModelParams(n_particles=4, omega=2.0)
        assert p.period == pytest.approx(math.pi)
        assert p.dim == 5

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"n_particles": 0},
            {"n_particles": 4, "j": -0.5},
            {"n_particles": 4, "omega": 0.0},
            {"n_particles": 4, "gamma": -0.1},
            {"n_particles": 4, "mu1": -0.5},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises((ValueError, TypeError)):
            dd.ModelParams(**kwargs)


class TestOperators:
    def test_hop_two_level(self):
        ops = dd.build_operators(dd.ModelParams(n_particles=1, j=1.0))
        assert np.allclose(ops.hop.entries, [[0, -1], [-1, 0]])

    def test_jump_two_level(self):
        # columns: G|0,1> = -(|0,1>+|1,0>), G|1,0> = |0,1>+|1,0>
        ops = dd.build_operators(dd.ModelParams(n_particles=1))
        assert np.allclose(ops.jump.entries, [[-1, 1], [-1, 1]])

    def test_sz_diagonal(self):
        ops = dd.build_operators(dd.ModelParams(n_particles=2))
        assert np.allclose(ops.sz.entries, np.diag([-0.5, 0.0, 0.5]))
        assert np.allclose(ops.sz_weights, [-0.5, 0.0, 0.5])

    def test_interaction_n2(self):
        ops = dd.build_operators(dd.ModelParams(n_particles=2, u=1.0))
        assert np.allclose(ops.interaction.entries, np.diag([1.0, 0.0, 1.0]))

    def test_tilt_two_level(self):
        ops = dd.build_operators(dd.ModelParams(n_particles=1))
        assert np.allclose(ops.tilt.entries, np.diag([1.0, -1.0]))

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_ladder_oracle(self, n):
        """Every operator matches the independent two-site construction."""
        p = dd.ModelParams(n_particles=n, j=1.3, u=0.7)
        ops = dd.build_operators(p)
        b1, b2, proj = two_site_operators(n)
        n1, n2 = b1.T @ b1, b2.T @ b2
        sect = lambda a: proj @ a @ proj.T
        assert np.allclose(
            ops.hop.entries, sect(-p.j * (b1.T @ b2 + b2.T @ b1)), atol=1e-12
        )
        assert np.allclose(
            ops.interaction.entries,
            sect(0.5 * p.u * (n1 @ (n1 - np.eye(n1.shape[0])) + n2 @ (n2 - np.eye(n1.shape[0])))),
            atol=1e-12,
        )
        assert np.allclose(ops.tilt.entries, sect(n2 - n1), atol=1e-12)
        assert np.allclose(ops.jump.entries, sect((b1.T + b2.T) @ (b1 - b2)), atol=1e-12)
        assert np.allclose(
            ops.sx.entries, sect((b1.T @ b2 + b2.T @ b1) / (2 * n)), atol=1e-12
        )
        assert np.allclose(
            ops.sy.entries, sect(-1j * (b1.T @ b2 - b2.T @ b1) / (2 * n)), atol=1e-12
        )
        assert np.allclose(ops.sz.entries, sect((n1 - n2) / (2 * n)), atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5, 12, 30])
    def test_hermiticity_and_commutators(self, n):
        ops = dd.build_operators(reference_params(n))
        for op in (ops.hop, ops.interaction, ops.tilt, ops.sx, ops.sy, ops.sz):
            assert np.max(np.abs(op.entries - op.entries.conj().T)) < 1e-12
        sx, sy, sz = ops.sx.entries, ops.sy.entries, ops.sz.entries
        assert np.max(np.abs(sx @ sy - sy @ sx - 1j * sz / n)) < 1e-12
        assert np.max(np.abs(sy @ sz - sz @ sy - 1j * sx / n)) < 1e-12
        assert np.max(np.abs(sz @ sx - sx @ sz - 1j * sy / n)) < 1e-12

    @pytest.mark.parametrize("n", [1, 4, 10, 30])
    def test_jump_annihilates_symmetric_condensate(self, n):
        ops = dd.build_operators(dd.ModelParams(n_particles=n))
        v = bec_plus(n)
        assert np.linalg.norm(ops.jump.entries @ v) < 1e-10

    def test_sz_eigenvalues_exact(self):
        n = 17
        ops = dd.build_operators(dd.ModelParams(n_particles=n))
        expected = np.arange(n + 1) / n - 0.5
        assert np.array_equal(np.sort(np.diag(ops.sz.entries).real), expected)

    def test_entries_read_only(self):
        ops = dd.build_operators(dd.ModelParams(n_particles=3))
        with pytest.raises(ValueError):
            ops.hop.entries[0, 0] = 5.0

    def test_hermitian_flag_validated(self):
        basis = dd.build_basis(1)
        with pytest.raises(ValueError):
            dd.Operator(basis, np.array([[0.0, 1.0], [0.0, 0.0]]), hermitian=True)

    def test_band_table_matches_dense(self):
        ops = dd.build_operators(reference_params(7))
        d = ops.dim
        h0 = (ops.hop.entries + ops.interaction.entries).real
        jump = ops.jump.entries.real
        kmat = ops.jump_dag_jump.entries.real
        t = ops.band_table
        for k in (-1, 0, 1):
            row_h = t[BAND_ROWS[f"h_{'m' if k < 0 else 'p'}1" if k else "h_0"]]
            row_g = t[BAND_ROWS[f"g_{'m' if k < 0 else 'p'}1" if k else "g_0"]]
            for i in range(d):
                if 0 <= i + k < d:
                    assert row_h[i] == h0[i, i + k]
                    assert row_g[i] == jump[i, i + k]
        for k in (-2, -1, 0, 1, 2):
            name = "k_0" if k == 0 else f"k_{'m' if k < 0 else 'p'}{abs(k)}"
            row = t[BAND_ROWS[name]]
            for i in range(d):
                if 0 <= i + k < d:
                    assert row[i] == kmat[i, i + k]
        assert np.allclose(t[BAND_ROWS["tilt"]], np.diag(ops.tilt.entries).real)


class TestDrive:
    def test_static_value(self):
        p = dd.ModelParams(n_particles=1, mu0=0.7, mu1=2.0)
        assert dd.drive_eps(0.0, p) == pytest.approx(0.7)

    def test_quarter_period(self):
        p = dd.ModelParams(n_particles=1, mu0=1.0, mu1=3.4, omega=1.0)
        assert dd.drive_eps(p.period / 4, p) == pytest.approx(4.4)

    @given(st.floats(min_value=-50.0, max_value=50.0))
    @settings(max_examples=50, deadline=None)
    def test_periodicity(self, t):
        p = dd.ModelParams(n_particles=1, mu0=1.0, mu1=3.4, omega=1.0)
        assert abs(dd.drive_eps(t + p.period, p) - dd.drive_eps(t, p)) < 1e-12 * p.mu1


class TestHamiltonian:
    def test_two_level_static(self):
        p = dd.ModelParams(n_particles=1, j=1.0, u=0.3, mu0=1.0, mu1=0.0)
        ops = dd.build_operators(p)
        h = dd.hamiltonian_at(0.0, ops, p)
        assert np.allclose(h.entries, [[1.0, -1.0], [-1.0, -1.0]])

    def test_periodic(self):
        p = reference_params(3)
        ops = dd.build_operators(p)
        for t in (0.0, 0.37, 2.5):
            a = dd.hamiltonian_at(t, ops, p).entries
            b = dd.hamiltonian_at(t + p.period, ops, p).entries
            assert np.max(np.abs(a - b)) < 1e-12

    def test_interaction_only(self):
        # U=1, J=0, no drive: diag(1, 0, 1)
        p = dd.ModelParams(n_particles=2, j=0.0, u=1.0)
        ops = dd.build_operators(p)
        h = dd.hamiltonian_at(0.3, ops, p).entries
        assert np.array_equal(h, np.diag([1.0, 0.0, 1.0]))

    def test_params_mismatch(self):
        p = reference_params(3)
        ops = dd.build_operators(p)
        other = reference_params(3, un=0.3)
        with pytest.raises(ValueError):
            dd.hamiltonian_at(0.0, ops, other)
