import os
import subprocess
import sys

import numpy as np
import pytest

import drivendimer as dd
from drivendimer import _core_py
from drivendimer.backend import BACKEND

from conftest import reference_params

_core = pytest.importorskip("drivendimer._core")


@pytest.fixture(scope="module")
def setup6():
    params = reference_params(6)
    ops = dd.build_operators(params)
    rng = np.random.default_rng(12)
    d = ops.dim
    x = rng.standard_normal((4, d, d)) + 1j * rng.standard_normal((4, d, d))
    return params, ops, np.ascontiguousarray(x)


class TestParity:
    def test_rhs(self, setup6):
        params, ops, x = setup6
        out_c = np.empty_like(x)
        out_p = np.empty_like(x)
        _core.lindblad_rhs(out_c, x, ops.band_table, 1.37, params.gamma)
        _core_py.lindblad_rhs(out_p, x, ops.band_table, 1.37, params.gamma)
        assert np.max(np.abs(out_c - out_p)) < 1e-13 * np.max(np.abs(out_c))

    def test_rhs_gamma_zero(self, setup6):
        _, ops, x = setup6
        out_c = np.empty_like(x)
        out_p = np.empty_like(x)
        _core.lindblad_rhs(out_c, x, ops.band_table, 0.4, 0.0)
        _core_py.lindblad_rhs(out_p, x, ops.band_table, 0.4, 0.0)
        assert np.max(np.abs(out_c - out_p)) < 1e-13 * np.max(np.abs(out_c))

    def test_rk4(self, setup6):
        params, ops, x = setup6
        xc, xp = x.copy(), x.copy()
        tc = _core.rk4_lindblad(
            xc, ops.band_table, 0.2, 0.003, 300,
            params.mu0, params.mu1, params.omega, params.gamma,
        )
        tp = _core_py.rk4_lindblad(
            xp, ops.band_table, 0.2, 0.003, 300,
            params.mu0, params.mu1, params.omega, params.gamma,
        )
        assert tc == tp
        assert np.max(np.abs(xc - xp)) < 1e-12

    def test_mf_propagate_parity(self):
        rec_c = np.empty(10)
        rec_p = np.empty(10)
        phi_c = np.empty(10)
        phi_p = np.empty(10)
        args = (2.0, -3.0, 0.0, 0.005, 2000, 1.0, 0.2, 0.1, 1.0, 3.4, 1.0, 200)
        out_c = _core.mf_propagate(*args, rec_c, phi_c)
        out_p = _core_py.mf_propagate(*args, rec_p, phi_p)
        # FMA contraction in the compiled code shifts the last ulp; the
        # backends stay deterministic individually
        assert out_c[2] == out_p[2]
        assert abs(out_c[0] - out_p[0]) < 1e-12
        assert abs(out_c[1] - out_p[1]) < 1e-12
        assert np.max(np.abs(rec_c - rec_p)) < 1e-12
        assert np.max(np.abs(phi_c - phi_p)) < 1e-12

    def test_mf_pole_path_parity(self):
        # start on the pole: both backends must take the Cartesian branch
        rec_c = np.empty(4)
        rec_p = np.empty(4)
        phi_c = np.empty(4)
        phi_p = np.empty(4)
        args = (1e-9, 0.3, 0.0, 0.01, 400, 1.0, 0.0, 0.1, 0.0, 0.0, 1.0, 100)
        out_c = _core.mf_propagate(*args, rec_c, phi_c)
        out_p = _core_py.mf_propagate(*args, rec_p, phi_p)
        assert out_c[2] == out_p[2]
        assert abs(out_c[0] - out_p[0]) < 1e-12
        assert abs(out_c[1] - out_p[1]) < 1e-12
        assert np.max(np.abs(rec_c - rec_p)) < 1e-12


class TestSelection:
    def test_compiled_backend_active_here(self):
        assert BACKEND == "c"

    def test_env_var_forces_python(self):
        env = dict(os.environ, DRIVENDIMER_BACKEND="python")
        out = subprocess.run(
            [sys.executable, "-c", "from drivendimer.backend import BACKEND; print(BACKEND)"],
            env=env, capture_output=True, text=True, check=True,
        )
        assert out.stdout.strip() == "python"

    def test_env_var_rejects_garbage(self):
        env = dict(os.environ, DRIVENDIMER_BACKEND="fortran")
        out = subprocess.run(
            [sys.executable, "-c", "import drivendimer.backend"],
            env=env, capture_output=True, text=True,
        )
        assert out.returncode != 0

    def test_python_backend_runs_pipeline(self):
        # a tiny end-to-end map build on the fallback, checked against the
        # compiled result
        code = (
            "import numpy as np, drivendimer as dd;"
            "p = dd.ModelParams.from_scaled(3, un=0.2, gamma_n=0.1, mu0=1.0,"
            " mu1=3.4, omega=1.0);"
            "f = dd.build_floquet_map(dd.build_operators(p),"
            " dd.StepControl(steps_per_period=200));"
            "np.save('/tmp/_ddimer_py_map.npy', f.entries)"
        )
        env = dict(os.environ, DRIVENDIMER_BACKEND="python")
        subprocess.run([sys.executable, "-c", code], env=env, check=True)
        params = reference_params(3)
        fmap = dd.build_floquet_map(
            dd.build_operators(params), dd.StepControl(steps_per_period=200)
        )
        other = np.load("/tmp/_ddimer_py_map.npy")
        assert np.max(np.abs(other - fmap.entries)) < 1e-12
