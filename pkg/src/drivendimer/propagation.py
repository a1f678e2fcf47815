"""Time evolution under the driven Lindblad generator and the one-period map.

The generator is L_t(x) = -i[H(t), x] + gamma (2 G x G^dag - {G^dag G, x}).
Propagation uses a fixed-step classical RK4 scheme with absolute stage
times, which makes results deterministic for a given step control and lets
composed intervals reproduce a single longer one.  Non-Hermitian and
non-normalized inputs are first-class: steady-state correlation functions
evolve operators like Sz*rho through the same code path.

The one-period Floquet map is built by integrating the d^2-column
fundamental matrix, applying the generator columnwise through its banded
structure (cost O(d^4) per application); the dense d^2 x d^2 generator is
never materialized.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, replace

import numpy as np

from .backend import get_kernels
from .model import FockBasis, ModelParams, OperatorSet, drive_eps

__all__ = [
    "StepControl",
    "DensityMatrix",
    "FloquetMap",
    "ConvergenceError",
    "CacheMismatchError",
    "apply_liouvillian",
    "propagate_matrix",
    "propagate_state",
    "build_floquet_map",
    "apply_floquet",
    "floquet_fingerprint",
    "save_floquet_map",
    "load_floquet_map",
]

_CACHE_MAGIC = b"FLQM"
_CACHE_VERSION = 1


class ConvergenceError(RuntimeError):
    """Step-halving verification failed; carries the measured defect."""

    def __init__(self, defect: float, tol: float):
        self.defect = defect
        self.tol = tol
        super().__init__(
            f"halved-step propagation differs by {defect:.3e} (tolerance {tol:.3e})"
        )


class CacheMismatchError(RuntimeError):
    """Cached Floquet map does not match the requested parameters."""


@dataclass(frozen=True)
class StepControl:
    """Fixed-step integrator settings (fourth order, steps per period)."""

    steps_per_period: int = 2000
    convergence_check: bool = False
    convergence_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.steps_per_period < 100:
            raise ValueError(
                f"steps_per_period must be >= 100, got {self.steps_per_period}"
            )
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")


@dataclass(frozen=True)
class DensityMatrix:
    """Dense state tagged with its basis; trace-one when ``normalized``."""

    basis: FockBasis
    entries: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        e = np.ascontiguousarray(self.entries, dtype=complex)
        if e.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(
                f"entries shape {e.shape} does not match basis dim {self.basis.dim}"
            )
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def validate(self) -> None:
        """Assert the numerical state invariants; raises on violation."""
        if self.normalized and abs(self.trace() - 1.0) > 1e-9:
            raise ValueError(f"trace {self.trace()} is not 1 within 1e-9")
        defect = self.hermiticity_defect()
        if defect > 1e-10:
            raise ValueError(f"hermiticity defect {defect:.3e} exceeds 1e-10")
        lo = self.min_eigenvalue()
        if lo < -1e-8 * self.dim:
            raise ValueError(f"minimum eigenvalue {lo:.3e} below -1e-8*d")


@dataclass(frozen=True)
class FloquetMap:
    """One-period propagator on vec(rho), column-stacking convention.

    vec index k = i + d*j addresses the matrix element rho[i, j]; the map
    is fingerprinted by the model parameters and step control that built it.
    """

    basis: FockBasis
    entries: np.ndarray
    params: ModelParams
    control: StepControl
    params_fingerprint: str

    def __post_init__(self) -> None:
        d2 = self.basis.dim ** 2
        e = np.ascontiguousarray(self.entries, dtype=complex)
        if e.shape != (d2, d2):
            raise ValueError(f"map shape {e.shape} does not match d^2 = {d2}")
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def dim(self) -> int:
        return self.basis.dim


def _as_stack(x: np.ndarray, d: int) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (d, d):
        raise ValueError(f"matrix shape {x.shape} does not match dimension {d}")
    return np.ascontiguousarray(x, dtype=complex).reshape(1, d, d)


def apply_liouvillian(
    rho: np.ndarray, t: float, ops: OperatorSet, params: ModelParams | None = None
) -> np.ndarray:
    """Evaluate L_t(rho); linear, defined for arbitrary complex matrices."""
    params = ops.params if params is None else params
    if params != ops.params:
        raise ValueError("operator set was built from different parameters")
    d = ops.dim
    stack = _as_stack(rho, d)
    out = np.empty_like(stack)
    get_kernels().lindblad_rhs(
        out, stack, ops.band_table, drive_eps(t, params), params.gamma
    )
    return out[0]


def propagate_matrix(
    x: np.ndarray,
    t0: float,
    t1: float,
    ops: OperatorSet,
    control: StepControl = StepControl(),
) -> np.ndarray:
    """Evolve an arbitrary matrix from t0 to t1 on the fixed RK4 grid.

    Steps of size T/steps_per_period from t0; a shorter final step covers
    any remainder.  t1 must not precede t0.
    """
    if t1 < t0:
        raise ValueError(f"t1={t1} precedes t0={t0}")
    params = ops.params
    d = ops.dim
    stack = _as_stack(x, d).copy()
    span = t1 - t0
    if span == 0.0:
        return stack[0]
    h = params.period / control.steps_per_period
    nfull = int(math.floor(span / h + 1e-9))
    kern = get_kernels()
    t = t0
    if nfull > 0:
        t = kern.rk4_lindblad(
            stack, ops.band_table, t0, h, nfull,
            params.mu0, params.mu1, params.omega, params.gamma,
        )
    rem = span - nfull * h
    if rem > 1e-9 * h:
        kern.rk4_lindblad(
            stack, ops.band_table, t, rem, 1,
            params.mu0, params.mu1, params.omega, params.gamma,
        )
    return stack[0]


def propagate_state(
    rho0: DensityMatrix,
    t0: float,
    t1: float,
    ops: OperatorSet,
    control: StepControl = StepControl(),
) -> DensityMatrix:
    """Evolve a density matrix; optionally verify by step halving.

    With ``control.convergence_check`` the interval is re-integrated at half
    the step and the two results compared entrywise; a defect above
    ``control.convergence_tol`` raises :class:`ConvergenceError`.
    """
    if rho0.basis.dim != ops.dim:
        raise ValueError("state and operator set dimensions differ")
    out = propagate_matrix(rho0.entries, t0, t1, ops, control)
    if control.convergence_check:
        fine_control = replace(
            control,
            steps_per_period=2 * control.steps_per_period,
            convergence_check=False,
        )
        fine = propagate_matrix(rho0.entries, t0, t1, ops, fine_control)
        defect = float(np.max(np.abs(fine - out)))
        if defect > control.convergence_tol:
            raise ConvergenceError(defect, control.convergence_tol)
    return DensityMatrix(rho0.basis, out, normalized=rho0.normalized)


def floquet_fingerprint(params: ModelParams, control: StepControl) -> str:
    """Hex digest of the cache header identifying (params, step control)."""
    return hashlib.sha256(_cache_header(params, control)).hexdigest()


def build_floquet_map(
    ops: OperatorSet, control: StepControl = StepControl()
) -> FloquetMap:
    """Integrate the fundamental matrix over one period.

    The d^2 columns (matrix units in the vec convention) are propagated as
    one stack, applying the generator columnwise in banded form.  With
    ``control.convergence_check`` the build is repeated at half the step
    and compared entrywise.
    """
    params = ops.params
    d = ops.dim
    m = d * d
    stack = np.zeros((m, d, d), dtype=complex)
    cols = np.arange(m)
    stack[cols, cols % d, cols // d] = 1.0
    h = params.period / control.steps_per_period
    get_kernels().rk4_lindblad(
        stack, ops.band_table, 0.0, h, control.steps_per_period,
        params.mu0, params.mu1, params.omega, params.gamma,
    )
    entries = stack.transpose(1, 2, 0).reshape(m, m, order="F")
    if control.convergence_check:
        fine = build_floquet_map(
            ops,
            replace(
                control,
                steps_per_period=2 * control.steps_per_period,
                convergence_check=False,
            ),
        )
        defect = float(np.max(np.abs(fine.entries - entries)))
        if defect > control.convergence_tol:
            raise ConvergenceError(defect, control.convergence_tol)
    return FloquetMap(
        basis=ops.basis,
        entries=entries,
        params=params,
        control=control,
        params_fingerprint=floquet_fingerprint(params, control),
    )


def apply_floquet(fmap: FloquetMap, x: np.ndarray) -> np.ndarray:
    """One stroboscopic step: vec-multiply by the map and reshape back."""
    d = fmap.dim
    x = np.asarray(x, dtype=complex)
    if x.shape != (d, d):
        raise ValueError(f"matrix shape {x.shape} does not match dimension {d}")
    vec = x.reshape(d * d, order="F")
    return (fmap.entries @ vec).reshape(d, d, order="F")


def _cache_header(params: ModelParams, control: StepControl) -> bytes:
    return struct.pack(
        "<4sIII8d",
        _CACHE_MAGIC,
        _CACHE_VERSION,
        params.n_particles,
        params.dim,
        params.j,
        params.u,
        params.mu0,
        params.mu1,
        params.omega,
        params.gamma,
        float(control.steps_per_period),
        0.0,
    )


def save_floquet_map(path, fmap: FloquetMap) -> None:
    """Write the map bit-exactly: header then d^4 (re, im) double pairs."""
    header = _cache_header(fmap.params, fmap.control)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(fmap.entries, dtype=np.complex128).tobytes())


def load_floquet_map(
    path, params: ModelParams, control: StepControl
) -> FloquetMap:
    """Read a cached map, rejecting any header/fingerprint mismatch."""
    expected = _cache_header(params, control)
    with open(path, "rb") as fh:
        header = fh.read(len(expected))
        if len(header) != len(expected):
            raise CacheMismatchError(f"truncated cache file {path}")
        if header[:8] != expected[:8]:
            raise CacheMismatchError(f"bad magic/version in cache file {path}")
        if header != expected:
            raise CacheMismatchError(
                f"cache fingerprint mismatch in {path}: stored parameters differ"
            )
        d = params.dim
        payload = fh.read()
    entries = np.frombuffer(payload, dtype=np.complex128)
    if entries.size != d ** 4:
        raise CacheMismatchError(
            f"cache payload has {entries.size} entries, expected {d ** 4}"
        )
    entries = entries.reshape(d * d, d * d).copy()
    return FloquetMap(
        basis=FockBasis(params.n_particles),
        entries=entries,
        params=params,
        control=control,
        params_fingerprint=floquet_fingerprint(params, control),
    )
