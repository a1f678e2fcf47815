"""Classical mean-field flow on the Bloch sphere and bifurcation analysis.

The large-N limit reduces the dimer to two angles (theta, phi) with
d(theta)/dt = 2J sin(phi) + 4 gamma*N cos(phi) cos(theta) and
d(phi)/dt = 2J cot(theta) cos(phi) - 2 eps(t) + U*N cos(theta)
            - 4 gamma*N sin(phi)/sin(theta).
The flow is integrated with fixed-step RK4 in the angle chart; steps that
start (or whose stages land) too close to a coordinate pole are taken in
the exactly equivalent Cartesian chart for (sx, sy, sz) = (cos(phi)
sin(theta), sin(phi) sin(theta), cos(theta))/2 and re-canonicalized, so the
dynamics is never clamped.  Stroboscopic records of sz = cos(theta)/2 at
period boundaries feed the bifurcation diagram and attractor classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .backend import get_kernels
from .model import ModelParams, drive_eps

__all__ = [
    "ClassicalState",
    "StroboscopicRecord",
    "ClusterReport",
    "PoleError",
    "mf_rhs",
    "integrate_mf",
    "stroboscopic_map",
    "classical_bifurcation_scan",
    "classify_attractor",
]

POLE_GUARD = 1e-9


class PoleError(ValueError):
    """Angle-form right-hand side evaluated within 1e-9 of a coordinate pole."""


@dataclass(frozen=True)
class ClassicalState:
    """Bloch-sphere point; canonical range theta in (0, pi), phi in [0, 2pi)."""

    theta: float
    phi: float

    def canonical(self) -> "ClassicalState":
        th = math.fmod(self.theta, 2.0 * math.pi)
        ph = self.phi
        if th < 0.0:
            th += 2.0 * math.pi
        if th > math.pi:
            th = 2.0 * math.pi - th
            ph += math.pi
        ph = math.fmod(ph, 2.0 * math.pi)
        if ph < 0.0:
            ph += 2.0 * math.pi
        return ClassicalState(th, ph)

    @property
    def sz(self) -> float:
        """Stroboscopic observable <Sz> = cos(theta)/2."""
        return 0.5 * math.cos(self.theta)


def mf_rhs(state: ClassicalState, t: float, params: ModelParams) -> tuple[float, float]:
    """Angle-form equations of motion (theta_dot, phi_dot).

    Raises :class:`PoleError` within 1e-9 of a pole; the integrator handles
    that region through the Cartesian chart instead of clamping.
    """
    st = math.sin(state.theta)
    if abs(st) < POLE_GUARD:
        raise PoleError(f"sin(theta) = {st:.2e}; angle form is singular here")
    ct = math.cos(state.theta)
    sp, cp = math.sin(state.phi), math.cos(state.phi)
    eps = drive_eps(t, params)
    j, un, gn = params.j, params.un, params.gamma_n
    theta_dot = 2.0 * j * sp + 4.0 * gn * cp * ct
    phi_dot = 2.0 * j * (ct / st) * cp - 2.0 * eps + un * ct - 4.0 * gn * sp / st
    return theta_dot, phi_dot


def integrate_mf(
    state0: ClassicalState,
    t0: float,
    t1: float,
    params: ModelParams,
    step: float,
) -> list[tuple[float, ClassicalState]]:
    """Fixed-step RK4 trajectory from t0 to t1; returns every grid point.

    The final point lands exactly on t1 (a shorter last step covers any
    remainder).  States are canonicalized.
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    if t1 < t0:
        raise ValueError(f"t1={t1} precedes t0={t0}")
    kern = get_kernels()
    s0 = state0.canonical()
    span = t1 - t0
    nfull = int(math.floor(span / step + 1e-9))
    rem = span - nfull * step
    if rem <= 1e-9 * step:
        rem = 0.0
    rec_theta = np.empty(nfull)
    rec_phi = np.empty(nfull)
    theta, phi, nrec = kern.mf_propagate(
        s0.theta, s0.phi, t0, step, nfull,
        params.j, params.un, params.gamma_n,
        params.mu0, params.mu1, params.omega,
        1, rec_theta, rec_phi,
    )
    out = [(t0, s0)]
    out.extend(
        (t0 + (k + 1) * step, ClassicalState(rec_theta[k], rec_phi[k]))
        for k in range(nrec)
    )
    if rem > 0.0:
        theta, phi, _ = kern.mf_propagate(
            theta, phi, t0 + nfull * step, rem, 1,
            params.j, params.un, params.gamma_n,
            params.mu0, params.mu1, params.omega,
            0, rec_theta[:0], rec_phi[:0],
        )
        out.append((t1, ClassicalState(theta, phi)))
    return out


@dataclass(frozen=True)
class StroboscopicRecord:
    """Period-boundary samples of cos(theta)/2 after a transient."""

    un: float
    samples: np.ndarray
    initial_condition: ClassicalState


def stroboscopic_map(
    state0: ClassicalState,
    params: ModelParams,
    m_transient: int = 800,
    m_record: int = 200,
    steps_per_period: int = 2000,
) -> StroboscopicRecord:
    """Drop ``m_transient`` periods, then record ``m_record`` boundary values."""
    if m_transient < 1 or m_record < 1:
        raise ValueError("m_transient and m_record must be >= 1")
    kern = get_kernels()
    s0 = state0.canonical()
    h = params.period / steps_per_period
    empty = np.empty(0)
    theta, phi, _ = kern.mf_propagate(
        s0.theta, s0.phi, 0.0, h, m_transient * steps_per_period,
        params.j, params.un, params.gamma_n,
        params.mu0, params.mu1, params.omega,
        0, empty, empty,
    )
    rec_theta = np.empty(m_record)
    rec_phi = np.empty(m_record)
    t_start = m_transient * params.period
    _, _, nrec = kern.mf_propagate(
        theta, phi, t_start, h, m_record * steps_per_period,
        params.j, params.un, params.gamma_n,
        params.mu0, params.mu1, params.omega,
        steps_per_period, rec_theta, rec_phi,
    )
    samples = 0.5 * np.cos(rec_theta[:nrec])
    return StroboscopicRecord(un=params.un, samples=samples, initial_condition=s0)


def classical_bifurcation_scan(
    un_grid,
    ic_grid,
    params: ModelParams,
    m_transient: int = 800,
    m_record: int = 200,
    steps_per_period: int = 2000,
) -> list[StroboscopicRecord]:
    """Stroboscopic records over the Cartesian product of U*N values and seeds.

    Output order is deterministic: U*N values outer, initial conditions
    inner, exactly as supplied.
    """
    un_grid = list(un_grid)
    ic_grid = list(ic_grid)
    if not un_grid or not ic_grid:
        raise ValueError("scan grids must be non-empty")
    records = []
    for un in un_grid:
        p = replace(params, u=un / params.n_particles)
        for ic in ic_grid:
            records.append(
                stroboscopic_map(ic, p, m_transient, m_record, steps_per_period)
            )
    return records


@dataclass(frozen=True)
class ClusterReport:
    """Attractor classification of one stroboscopic record.

    ``unclassified`` marks records whose clusters stay wider than the
    diameter tolerance (non-converged transient or chaotic band);
    ``alternating`` is meaningful for two clusters only.
    """

    n_clusters: int
    centers: tuple[float, ...]
    max_diameter: float
    alternating: bool
    unclassified: bool

    @property
    def period2(self) -> bool:
        return self.n_clusters == 2 and self.alternating and not self.unclassified


def classify_attractor(
    record: StroboscopicRecord,
    tol_diameter: float = 1e-3,
    tol_separation: float = 1e-1,
) -> ClusterReport:
    """Sorted-gap clustering of the record samples.

    Clusters split where the gap between consecutive sorted samples exceeds
    ``tol_separation``.  A record is classified when at most four clusters
    emerge and each is narrower than ``tol_diameter``; a two-cluster record
    additionally checks strict alternation of cluster membership in time.
    """
    samples = np.asarray(record.samples, dtype=float)
    if samples.size == 0:
        raise ValueError("record has no samples")
    srt = np.sort(samples)
    cut = np.where(np.diff(srt) > tol_separation)[0]
    edges = np.concatenate(([0], cut + 1, [srt.size]))
    centers = []
    diameters = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        chunk = srt[lo:hi]
        centers.append(float(np.mean(chunk)))
        diameters.append(float(chunk[-1] - chunk[0]))
    n = len(centers)
    max_diameter = float(max(diameters))
    unclassified = n > 4 or max_diameter >= tol_diameter
    alternating = False
    if n == 2 and not unclassified:
        split = 0.5 * (centers[0] + centers[1])
        labels = samples > split
        alternating = bool(np.all(labels[1:] != labels[:-1]))
    return ClusterReport(
        n_clusters=n,
        centers=tuple(centers),
        max_diameter=max_diameter,
        alternating=alternating,
        unclassified=unclassified,
    )
