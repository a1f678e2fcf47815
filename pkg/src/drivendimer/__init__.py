"""Driven dissipative two-mode bosonic dimer simulator.

Lindblad propagation of the periodically driven double well, Floquet-map
spectral analysis, steady-state two-time correlations (period-doubling
diagnostics), classical mean-field bifurcation maps, and coherent-state /
Husimi phase-space tools.  Hot kernels run in a compiled extension with a
NumPy fallback selected at import (see :mod:`drivendimer.backend`).
"""

from .backend import BACKEND
from .correlations import CorrelationSeries, DoublingReport, doubling_diagnostics, two_time_sz
from .meanfield import (
    ClassicalState,
    ClusterReport,
    PoleError,
    StroboscopicRecord,
    classical_bifurcation_scan,
    classify_attractor,
    integrate_mf,
    mf_rhs,
    stroboscopic_map,
)
from .model import (
    FockBasis,
    ModelParams,
    Operator,
    OperatorSet,
    build_basis,
    build_operators,
    drive_eps,
    hamiltonian_at,
)
from .phase_space import (
    ChecklistReport,
    CoherentState,
    HusimiGrid,
    coherent_state,
    husimi,
    stroboscopic_coherent_evolution,
    time_crystal_checklist,
)
from .propagation import (
    CacheMismatchError,
    ConvergenceError,
    DensityMatrix,
    FloquetMap,
    StepControl,
    apply_floquet,
    apply_liouvillian,
    build_floquet_map,
    load_floquet_map,
    propagate_matrix,
    propagate_state,
    save_floquet_map,
)
from .runner import (
    CalibrationError,
    CalibrationResult,
    RunConfig,
    calibrate_omega,
    get_or_build_floquet_map,
    scan_executor,
)
from .spectral import (
    QuantumBifurcationSlice,
    SpectrumResult,
    eig_floquet,
    quantum_bifurcation_slice,
    steady_state,
    subdominant_mode,
)

__version__ = "0.1.0"
