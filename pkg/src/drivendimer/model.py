"""Fixed-N two-mode Fock basis, Hamiltonian/jump operators and the periodic drive.

All operators live in the (N+1)-dimensional sector with exactly N bosons on
two sites.  The canonical basis ordering is |n, N-n> with n (the site-1
occupation) ascending; every matrix in the package uses this ordering.
Units: hbar = 1, energies in multiples of the tunneling amplitude J.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "FockBasis",
    "Operator",
    "OperatorSet",
    "build_basis",
    "build_operators",
    "drive_eps",
    "hamiltonian_at",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the driven dissipative dimer.

    ``u`` and ``gamma`` are the *bare* (per-particle-pair) interaction and
    dissipation rates.  Figure-style composite inputs U*N and gamma*N are
    accepted through :meth:`from_scaled`, which divides by N internally so
    that sweeps at fixed U*N / gamma*N stay comparable across N.
    """

    n_particles: int
    j: float = 1.0
    u: float = 0.0
    mu0: float = 0.0
    mu1: float = 0.0
    omega: float = 1.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not isinstance(self.n_particles, (int, np.integer)) or isinstance(
            self.n_particles, bool
        ):
            raise TypeError(f"n_particles must be an integer, got {self.n_particles!r}")
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be >= 1, got {self.n_particles}")
        # j = 0 is allowed: several degenerate limits (pure tilt precession,
        # interaction-only Hamiltonian) are exercised by tests.
        if self.j < 0:
            raise ValueError(f"j must be >= 0, got {self.j}")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.mu1 < 0:
            raise ValueError(f"mu1 must be >= 0, got {self.mu1}")

    @classmethod
    def from_scaled(
        cls,
        n_particles: int,
        *,
        j: float = 1.0,
        un: float = 0.0,
        gamma_n: float = 0.0,
        mu0: float = 0.0,
        mu1: float = 0.0,
        omega: float = 1.0,
    ) -> "ModelParams":
        """Build params from the composite inputs U*N and gamma*N."""
        return cls(
            n_particles=n_particles,
            j=j,
            u=un / n_particles,
            mu0=mu0,
            mu1=mu1,
            omega=omega,
            gamma=gamma_n / n_particles,
        )

    @property
    def period(self) -> float:
        """Driving period T = 2*pi/omega."""
        return 2.0 * math.pi / self.omega

    @property
    def dim(self) -> int:
        """Hilbert-space dimension d = N + 1."""
        return self.n_particles + 1

    @property
    def un(self) -> float:
        return self.u * self.n_particles

    @property
    def gamma_n(self) -> float:
        return self.gamma * self.n_particles


@dataclass(frozen=True)
class FockBasis:
    """Canonically ordered states |n, N-n>, n = 0..N in site-1 occupation."""

    n_particles: int
    states: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self) -> None:
        if not isinstance(self.n_particles, (int, np.integer)) or isinstance(
            self.n_particles, bool
        ):
            raise TypeError(f"N must be an integer, got {self.n_particles!r}")
        if self.n_particles < 1:
            raise ValueError(f"N must be >= 1, got {self.n_particles}")
        object.__setattr__(
            self,
            "states",
            tuple((n, self.n_particles - n) for n in range(self.n_particles + 1)),
        )

    @property
    def dim(self) -> int:
        return self.n_particles + 1

    def label(self, index: int) -> str:
        n1, n2 = self.states[index]
        return f"|{n1},{n2}>"


def build_basis(n_particles: int) -> FockBasis:
    """Enumerate the fixed-N sector in the canonical ordering."""
    return FockBasis(n_particles)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Operator:
    """Dense matrix tagged with its basis; immutable after construction."""

    basis: FockBasis
    entries: np.ndarray
    hermitian: bool = False

    def __post_init__(self) -> None:
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError(f"operator must be square, got shape {e.shape}")
        if e.shape[0] != self.basis.dim:
            raise ValueError(
                f"dimension {e.shape[0]} does not match basis dim {self.basis.dim}"
            )
        e = np.ascontiguousarray(e, dtype=complex)
        if self.hermitian:
            defect = np.max(np.abs(e - e.conj().T))
            if defect >= 1e-12:
                raise ValueError(f"operator flagged hermitian has defect {defect:.3e}")
        object.__setattr__(self, "entries", _readonly(e))

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)


# Row layout of the band table consumed by the propagation kernels.  Row k
# holds A[i, i+off] at index i (zero outside the matrix).
BAND_ROWS = {
    "h_m1": 0,  # static Hamiltonian H0 = hop + interaction, subdiagonal
    "h_0": 1,
    "h_p1": 2,
    "tilt": 3,  # diagonal of (n2 - n1); drive multiplies this at runtime
    "g_m1": 4,  # jump operator G
    "g_0": 5,
    "g_p1": 6,
    "k_m2": 7,  # K = G^dag G, pentadiagonal
    "k_m1": 8,
    "k_0": 9,
    "k_p1": 10,
    "k_p2": 11,
}
N_BAND_ROWS = 12


@dataclass(frozen=True)
class OperatorSet:
    """All model operators in the canonical basis, plus the kernel band table.

    The matrices are read-only views; the set is safe to share across
    parallel workers.  ``band_table`` packs the banded structure (H0 is
    tridiagonal, G tridiagonal, G^dag G pentadiagonal, the tilt diagonal)
    used by the compiled propagation core.
    """

    basis: FockBasis
    params: ModelParams
    hop: Operator
    interaction: Operator
    tilt: Operator
    jump: Operator
    jump_dag_jump: Operator
    sx: Operator
    sy: Operator
    sz: Operator
    sz_weights: np.ndarray
    band_table: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.dim


def _band(a: np.ndarray, off: int) -> np.ndarray:
    """Diagonal at offset ``off`` aligned to the row index, zero-padded."""
    d = a.shape[0]
    out = np.zeros(d)
    if off >= 0:
        out[: d - off] = np.real(np.diagonal(a, off))
    else:
        out[-off:] = np.real(np.diagonal(a, off))
    return out


def build_operators(params: ModelParams) -> OperatorSet:
    """Construct every operator of the model for one parameter set.

    Bosonic ladder action: b1 |n, N-n> = sqrt(n) |n-1, N-n> and analogously
    for site 2; all composite operators below conserve total particle
    number and therefore stay inside the fixed-N sector.
    """
    basis = build_basis(params.n_particles)
    big_n = params.n_particles
    d = basis.dim
    n1 = np.arange(d, dtype=float)  # site-1 occupation per basis state
    n2 = big_n - n1

    # <n+1| b1^dag b2 |n> = sqrt((n+1)(N-n))
    up = np.sqrt((n1[:-1] + 1.0) * n2[:-1])

    hop = np.zeros((d, d), dtype=complex)
    hop[np.arange(1, d), np.arange(d - 1)] = -params.j * up
    hop[np.arange(d - 1), np.arange(1, d)] = -params.j * up

    interaction = np.diag(
        0.5 * params.u * (n1 * (n1 - 1.0) + n2 * (n2 - 1.0))
    ).astype(complex)

    tilt = np.diag(n2 - n1).astype(complex)

    # G = (b1^dag + b2^dag)(b1 - b2) = n1 - n2 - b1^dag b2 + b2^dag b1
    jump = np.zeros((d, d), dtype=complex)
    jump[np.arange(d), np.arange(d)] = n1 - n2
    jump[np.arange(1, d), np.arange(d - 1)] = -up
    jump[np.arange(d - 1), np.arange(1, d)] = up
    kmat = jump.conj().T @ jump

    sx = np.zeros((d, d), dtype=complex)  # (b1^dag b2 + h.c.)/2N
    sx[np.arange(1, d), np.arange(d - 1)] = up / (2.0 * big_n)
    sx[np.arange(d - 1), np.arange(1, d)] = up / (2.0 * big_n)
    sy = np.zeros((d, d), dtype=complex)
    sy[np.arange(1, d), np.arange(d - 1)] = -1j * up / (2.0 * big_n)
    sy[np.arange(d - 1), np.arange(1, d)] = 1j * up / (2.0 * big_n)
    sz_weights = n1 / big_n - 0.5
    sz = np.diag(sz_weights).astype(complex)

    h0 = hop + interaction
    table = np.zeros((N_BAND_ROWS, d))
    table[BAND_ROWS["h_m1"]] = _band(h0, -1)
    table[BAND_ROWS["h_0"]] = _band(h0, 0)
    table[BAND_ROWS["h_p1"]] = _band(h0, 1)
    table[BAND_ROWS["tilt"]] = _band(tilt, 0)
    table[BAND_ROWS["g_m1"]] = _band(jump, -1)
    table[BAND_ROWS["g_0"]] = _band(jump, 0)
    table[BAND_ROWS["g_p1"]] = _band(jump, 1)
    for off, row in ((-2, "k_m2"), (-1, "k_m1"), (0, "k_0"), (1, "k_p1"), (2, "k_p2")):
        table[BAND_ROWS[row]] = _band(kmat, off)

    return OperatorSet(
        basis=basis,
        params=params,
        hop=Operator(basis, hop, hermitian=True),
        interaction=Operator(basis, interaction, hermitian=True),
        tilt=Operator(basis, tilt, hermitian=True),
        jump=Operator(basis, jump),
        jump_dag_jump=Operator(basis, kmat, hermitian=True),
        sx=Operator(basis, sx, hermitian=True),
        sy=Operator(basis, sy, hermitian=True),
        sz=Operator(basis, sz, hermitian=True),
        sz_weights=_readonly(sz_weights),
        band_table=_readonly(np.ascontiguousarray(table)),
    )


def drive_eps(t: float, params: ModelParams) -> float:
    """Site offset eps(t) = mu0 + mu1*sin(omega*t); periodic with period T."""
    return params.mu0 + params.mu1 * math.sin(params.omega * t)


def hamiltonian_at(t: float, ops: OperatorSet, params: ModelParams) -> Operator:
    """Instantaneous Hamiltonian H(t) = hop + interaction + eps(t)*tilt."""
    if ops.params != params:
        raise ValueError("operator set was built from different parameters")
    h = (
        ops.hop.entries
        + ops.interaction.entries
        + drive_eps(t, params) * ops.tilt.entries
    )
    return Operator(ops.basis, h, hermitian=True)
