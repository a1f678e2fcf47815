"""Floquet-map eigendecomposition, steady state and bifurcation projections.

The map eigenvalues ("rapidities") live on or inside the unit circle; the
unique eigenvalue at 1 carries the periodic steady state, and the rapidity
of second-largest modulus controls the slowest-decaying dynamics.  For the
quantum bifurcation diagram the steady state is projected on the Sz
eigenbasis, giving per-state populations against s_n = n/N - 1/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FockBasis, ModelParams, build_operators
from .propagation import DensityMatrix, FloquetMap, StepControl, build_floquet_map

__all__ = [
    "SpectrumResult",
    "QuantumBifurcationSlice",
    "EigenDecompositionError",
    "eig_floquet",
    "steady_state",
    "subdominant_mode",
    "quantum_bifurcation_slice",
]


class EigenDecompositionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectrumResult:
    """Rapidities sorted by modulus (descending) with right eigenvectors.

    ``right_eigenvectors[:, k]`` belongs to ``rapidities[k]``; ``residuals``
    holds the 2-norms ||P v - lambda v|| per pair.
    """

    rapidities: np.ndarray
    right_eigenvectors: np.ndarray
    residuals: np.ndarray
    map_norm: float

    def validate(self) -> None:
        """Assert the structural spectrum invariants; raises on violation."""
        lam = self.rapidities
        if abs(lam[0] - 1.0) > 1e-8:
            raise ValueError(f"leading rapidity {lam[0]} is not 1 within 1e-8")
        near_one = np.abs(lam - 1.0) < 1e-6
        if int(np.sum(near_one)) != 1:
            raise ValueError("steady-state rapidity is not unique within 1e-6")
        if np.max(np.abs(lam)) > 1.0 + 1e-8:
            raise ValueError(f"spectral radius {np.max(np.abs(lam))} exceeds 1+1e-8")
        for value in lam:
            if np.min(np.abs(lam - np.conj(value))) > 1e-7:
                raise ValueError(
                    f"spectrum is not conjugation-symmetric near {value}"
                )
        bound = 1e-7 * self.map_norm
        if np.max(self.residuals) > bound:
            k = int(np.argmax(self.residuals))
            raise EigenDecompositionError(
                f"eigenpair {k} residual {self.residuals[k]:.3e} exceeds {bound:.3e}"
            )


def eig_floquet(fmap: FloquetMap) -> SpectrumResult:
    """Full dense non-Hermitian eigendecomposition of the one-period map."""
    lam, vecs = np.linalg.eig(fmap.entries)
    order = np.lexsort((-lam.imag, -lam.real, -np.abs(lam)))
    lam = lam[order]
    vecs = vecs[:, order]
    residuals = np.linalg.norm(
        fmap.entries @ vecs - vecs * lam[None, :], axis=0
    )
    bad = ~np.isfinite(lam)
    if np.any(bad):
        raise EigenDecompositionError(
            f"eigensolver returned non-finite rapidity at index {int(np.argmax(bad))}"
        )
    return SpectrumResult(
        rapidities=lam,
        right_eigenvectors=vecs,
        residuals=residuals,
        map_norm=float(np.linalg.norm(fmap.entries)),
    )


def steady_state(spec: SpectrumResult, basis: FockBasis) -> DensityMatrix:
    """Periodic steady state from the leading eigenvector.

    The raw eigenvector carries an arbitrary global phase, so the trace
    phase is removed first, then the matrix is Hermitized (X + X^dag)/2 and
    trace-normalized.  A substantially negative eigenvalue after
    Hermitization flags a propagation defect and raises.
    """
    lam = spec.rapidities[0]
    if abs(lam - 1.0) > 1e-6:
        raise ValueError(f"leading rapidity {lam} is not within 1e-6 of 1")
    d = basis.dim
    vec = spec.right_eigenvectors[:, 0]
    x = vec.reshape(d, d, order="F")
    tr = np.trace(x)
    if abs(tr) < 1e-12:
        raise ValueError("leading eigenvector is traceless; not a state")
    x = x * (np.conj(tr) / abs(tr))
    x = 0.5 * (x + x.conj().T)
    lo = float(np.linalg.eigvalsh(x)[0]) / float(np.real(np.trace(x)))
    if lo < -1e-6:
        raise ValueError(
            f"steady state has negative eigenvalue {lo:.3e}; propagation defect"
        )
    x = x / np.real(np.trace(x))
    return DensityMatrix(basis, x, normalized=True)


def subdominant_mode(spec: SpectrumResult) -> tuple[complex, float]:
    """Second-largest-modulus rapidity and its distance to -1."""
    if spec.rapidities.size < 2:
        raise ValueError("spectrum has fewer than two rapidities")
    lam2 = complex(spec.rapidities[1])
    return lam2, abs(lam2 - (-1.0))


@dataclass(frozen=True)
class QuantumBifurcationSlice:
    """Steady-state Sz-basis populations at one interaction value.

    ``un`` is the composite interaction U*N in units of J; ``populations[n]``
    is <n,N-n|rho_s(0)|n,N-n> against the coordinate s_n = n/N - 1/2.  The
    weighted projection <Sz_n>_s equals s_n * populations[n] exactly.
    """

    un: float
    sz_values: np.ndarray
    populations: np.ndarray

    def validate(self) -> None:
        total = float(np.sum(self.populations))
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"populations sum to {total}, not 1 within 1e-8")
        if np.min(self.populations) < -1e-9:
            raise ValueError("population below -1e-9")


def quantum_bifurcation_slice(
    params: ModelParams,
    control: StepControl = StepControl(),
    fmap: FloquetMap | None = None,
) -> QuantumBifurcationSlice:
    """Populations of the periodic steady state at the given interaction.

    Builds the Floquet map (unless one is supplied), extracts the steady
    state and projects it on the Sz eigenbasis.
    """
    ops = build_operators(params)
    if fmap is None:
        fmap = build_floquet_map(ops, control)
    elif fmap.params != params:
        raise ValueError("supplied map was built from different parameters")
    spec = eig_floquet(fmap)
    rho = steady_state(spec, ops.basis)
    populations = np.real(np.diag(rho.entries)).copy()
    return QuantumBifurcationSlice(
        un=params.un,
        sz_values=ops.sz_weights.copy(),
        populations=populations,
    )
