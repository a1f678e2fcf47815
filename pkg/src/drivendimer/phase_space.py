"""Spin coherent states, Husimi sections and stroboscopic phase-space runs.

A coherent state localized at (theta, phi) has amplitudes
f_n = sqrt(C(N, n)) cos(theta/2)^n (sin(theta/2) e^{i phi})^{N-n}
in the canonical basis, so that <Sx, Sy, Sz> = (cos(phi) sin(theta),
sin(phi) sin(theta), cos(theta))/2 match the mean-field parametrization.
The Husimi function Q(theta, phi) = <phi|rho|phi> is normalized with the
spin-coherent resolution of identity, measure (N+1)/(4 pi) sin(theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from .meanfield import ClassicalState
from .model import ModelParams, build_operators
from .propagation import DensityMatrix, StepControl, propagate_matrix

__all__ = [
    "CoherentState",
    "HusimiGrid",
    "ChecklistRun",
    "ChecklistReport",
    "coherent_state",
    "husimi",
    "stroboscopic_coherent_evolution",
    "time_crystal_checklist",
]


@dataclass(frozen=True)
class CoherentState:
    theta: float
    phi: float
    amplitudes: np.ndarray

    @property
    def n_particles(self) -> int:
        return self.amplitudes.size - 1

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())


def _amplitude_table(thetas: np.ndarray, phis: np.ndarray, n_particles: int) -> np.ndarray:
    """Coherent amplitudes for many (theta, phi) points, rows = points.

    Magnitudes are assembled in log space (stable up to large N); the
    exact pole states theta = 0 -> |N,0> and theta = pi -> e^{iN phi}|0,N>
    are handled separately because of the 0*log(0) limits.
    """
    n = np.arange(n_particles + 1, dtype=float)
    ln_binom = (
        gammaln(n_particles + 1.0) - gammaln(n + 1.0) - gammaln(n_particles - n + 1.0)
    )
    c = np.cos(0.5 * thetas)[:, None]
    s = np.sin(0.5 * thetas)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ln_mag = 0.5 * ln_binom[None, :]
        ln_mag = ln_mag + np.where(n[None, :] > 0, n[None, :] * np.log(c), 0.0)
        ln_mag = ln_mag + np.where(
            (n_particles - n)[None, :] > 0, (n_particles - n)[None, :] * np.log(s), 0.0
        )
    amps = np.exp(ln_mag) * np.exp(1j * phis[:, None] * (n_particles - n)[None, :])
    amps = np.where(np.isnan(amps), 0.0, amps)
    at_north = np.abs(s[:, 0]) == 0.0  # theta = 0: only n = N survives
    if np.any(at_north):
        amps[at_north] = 0.0
        amps[at_north, n_particles] = 1.0
    at_south = np.abs(c[:, 0]) == 0.0  # theta = pi: only n = 0 survives
    if np.any(at_south):
        amps[at_south] = 0.0
        amps[at_south, 0] = np.exp(1j * phis[at_south] * n_particles)
    norms = np.linalg.norm(amps, axis=1)
    return amps / norms[:, None]


def coherent_state(theta: float, phi: float, n_particles: int) -> CoherentState:
    """Normalized spin coherent state centered at (theta, phi)."""
    if n_particles < 1:
        raise ValueError(f"n_particles must be >= 1, got {n_particles}")
    amps = _amplitude_table(np.array([theta], float), np.array([phi], float), n_particles)[0]
    amps.flags.writeable = False
    return CoherentState(theta=theta, phi=phi, amplitudes=amps)


@dataclass(frozen=True)
class HusimiGrid:
    """Q(theta, phi) on a rectangular grid, theta in [0, pi], phi in [0, 2pi)."""

    theta_axis: np.ndarray
    phi_axis: np.ndarray
    q: np.ndarray
    n_particles: int

    def normalization_integral(self) -> float:
        """(N+1)/(4 pi) * surface integral of Q; equals tr(rho) up to quadrature."""
        w_phi = 2.0 * math.pi / self.phi_axis.size  # periodic rectangle rule
        inner = self.q.sum(axis=1) * w_phi * np.sin(self.theta_axis)
        return float(
            (self.n_particles + 1) / (4.0 * math.pi) * np.trapezoid(inner, self.theta_axis)
        )

    def mass_fraction_in_caps(self, centers, radius: float) -> float:
        """Fraction of total Q-mass inside spherical caps around ``centers``."""
        th = self.theta_axis[:, None]
        ph = self.phi_axis[None, :]
        weight = np.sin(th) * np.ones_like(ph)
        inside = np.zeros(self.q.shape, dtype=bool)
        for c in centers:
            cosdist = np.cos(c.theta) * np.cos(th) + np.sin(c.theta) * np.sin(th) * np.cos(
                ph - c.phi
            )
            inside |= cosdist >= math.cos(radius)
        total = float(np.sum(self.q * weight))
        if total <= 0.0:
            return 0.0
        return float(np.sum(self.q * weight * inside) / total)


def husimi(rho, grid_spec: tuple[int, int] = (181, 181), n_particles: int | None = None) -> HusimiGrid:
    """Husimi function of a state on the default 181 x 181 grid.

    ``rho`` may be a DensityMatrix or a dense array (then ``n_particles``
    is inferred from its size).
    """
    if isinstance(rho, DensityMatrix):
        entries = rho.entries
        n_particles = rho.basis.n_particles
    else:
        entries = np.asarray(rho, dtype=complex)
        if n_particles is None:
            n_particles = entries.shape[0] - 1
    d = n_particles + 1
    if entries.shape != (d, d):
        raise ValueError(f"state shape {entries.shape} does not match dim {d}")
    n_theta, n_phi = grid_spec
    theta_axis = np.linspace(0.0, math.pi, n_theta)
    phi_axis = np.arange(n_phi) * (2.0 * math.pi / n_phi)
    tt, pp = np.meshgrid(theta_axis, phi_axis, indexing="ij")
    amps = _amplitude_table(tt.ravel(), pp.ravel(), n_particles)
    q = np.real(np.einsum("ki,ij,kj->k", amps.conj(), entries, amps, optimize=True))
    return HusimiGrid(
        theta_axis=theta_axis,
        phi_axis=phi_axis,
        q=q.reshape(n_theta, n_phi),
        n_particles=n_particles,
    )


def stroboscopic_coherent_evolution(
    state0: CoherentState,
    params: ModelParams,
    m_max: int,
    snapshot_times: list[int] | None = None,
    control: StepControl = StepControl(),
    grid_spec: tuple[int, int] = (181, 181),
) -> tuple[np.ndarray, dict[int, HusimiGrid]]:
    """Evolve |state0><state0| period by period, sampling <Sz> at boundaries.

    Uses state propagation only (cost d^3 per step, no d^2 x d^2 map), so
    it scales to N = 100.  Returns the <Sz>(mT) series for m = 0..m_max and
    Husimi snapshots at the requested periods.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if state0.n_particles != params.n_particles:
        raise ValueError("coherent state and parameters disagree on N")
    snapshots_at = sorted(set(snapshot_times or []))
    if snapshots_at and (snapshots_at[0] < 0 or snapshots_at[-1] > m_max):
        raise ValueError("snapshot times must lie in [0, m_max]")
    ops = build_operators(params)
    weights = ops.sz_weights
    rho = state0.density_matrix()
    series = np.empty(m_max + 1)
    snapshots: dict[int, HusimiGrid] = {}
    series[0] = float(np.real(np.sum(weights * np.diag(rho))))
    if 0 in snapshots_at:
        snapshots[0] = husimi(rho, grid_spec, params.n_particles)
    t_period = params.period
    for m in range(1, m_max + 1):
        rho = propagate_matrix(rho, (m - 1) * t_period, m * t_period, ops, control)
        series[m] = float(np.real(np.sum(weights * np.diag(rho))))
        if m in snapshots_at:
            snapshots[m] = husimi(rho, grid_spec, params.n_particles)
    return series, snapshots


@dataclass(frozen=True)
class ChecklistRun:
    run_id: int
    seed: ClassicalState
    un: float
    alternation_length: int
    locked: bool
    sz_series: np.ndarray


@dataclass(frozen=True)
class ChecklistReport:
    runs: list[ChecklistRun]
    all_locked: bool


def _difference_alternation(series: np.ndarray) -> int:
    """Largest M such that sz(mT) zigzags for all m <= M."""
    diffs = np.diff(series)
    length = 1 if diffs.size >= 1 and diffs[0] != 0.0 else 0
    for m in range(1, diffs.size):
        if diffs[m] == 0.0 or (diffs[m] > 0) == (diffs[m - 1] > 0):
            break
        length = m + 1
    return length


def time_crystal_checklist(
    seed: ClassicalState,
    ic_offsets,
    param_perturbations,
    params: ModelParams,
    m_max: int,
    control: StepControl = StepControl(),
    lock_tol: float = 0.1,
) -> ChecklistReport:
    """Robustness battery for the subharmonic response.

    One run per initial-condition offset (theta, phi) added to ``seed`` at
    the base parameters, then one run per perturbed U*N value from the
    unshifted seed.  Each run records the <Sz>(mT) alternation length; runs
    are "locked" when they zigzag in phase with the first run and their
    even/odd branch means agree within ``lock_tol``.
    """
    run_specs: list[tuple[ClassicalState, float]] = []
    for off in ic_offsets:
        s = ClassicalState(seed.theta + off[0], seed.phi + off[1])
        run_specs.append((s, params.un))
    for un in param_perturbations:
        run_specs.append((seed, float(un)))
    if not run_specs:
        run_specs.append((seed, params.un))
    runs: list[ChecklistRun] = []
    window = max(2, min(20, m_max))
    ref_phase = 0.0
    ref_even = ref_odd = 0.0
    for rid, (s, un) in enumerate(run_specs):
        p = replace(params, u=un / params.n_particles)
        cs = coherent_state(s.theta, s.phi, p.n_particles)
        series, _ = stroboscopic_coherent_evolution(cs, p, m_max, None, control)
        alt = _difference_alternation(series)
        even = float(np.mean(series[0 : window + 1 : 2]))
        odd = float(np.mean(series[1 : window + 1 : 2]))
        phase = math.copysign(1.0, series[1] - series[0])
        if rid == 0:
            ref_phase, ref_even, ref_odd = phase, even, odd
            locked = True
        else:
            locked = (
                phase == ref_phase
                and abs(even - ref_even) < lock_tol
                and abs(odd - ref_odd) < lock_tol
            )
        runs.append(
            ChecklistRun(
                run_id=rid,
                seed=s,
                un=float(un),
                alternation_length=alt,
                locked=locked,
                sz_series=series,
            )
        )
    return ChecklistReport(runs=runs, all_locked=all(r.locked for r in runs))
