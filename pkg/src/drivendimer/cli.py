"""Command-line interface: one subcommand per pipeline stage.

Every run reads a JSON config (defaults merged under any ``--config`` file,
then ``--set`` dotted overrides), writes its CSV artifacts into the output
directory and drops a ``<command>_manifest.json`` with the config echo,
wall time, artifact checksums and cache statistics.  Reruns with an
identical config produce byte-identical CSVs at any parallelism degree.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .correlations import two_time_sz
from .meanfield import ClassicalState, classify_attractor, StroboscopicRecord
from .phase_space import (
    coherent_state,
    husimi,
    stroboscopic_coherent_evolution,
    time_crystal_checklist,
)
from .runner import (
    CalibrationError,
    RunConfig,
    calibrate_omega,
    get_or_build_floquet_map,
    quantum_slice_worker,
    scan_executor,
    strobo_scan_worker,
    write_csv,
    write_manifest,
)
from .spectral import eig_floquet, steady_state

COMMANDS = (
    "spectrum",
    "steady-state",
    "correlate",
    "bifurcation-classical",
    "bifurcation-quantum",
    "husimi",
    "evolve-coherent",
    "timecrystal",
    "calibrate-omega",
)


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"--set needs key.path=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig.from_dict()
    for key, value in args.set or []:
        cfg = cfg.set_path(key, value)
    if args.output_dir is not None:
        cfg = cfg.set_path("output_dir", args.output_dir)
    if args.cache_dir is not None:
        cfg = cfg.set_path("cache_dir", args.cache_dir)
    if args.parallelism is not None:
        cfg = cfg.set_path("parallelism", args.parallelism)
    return cfg


def _spectrum_rows(spec):
    return [(lam.real, lam.imag, abs(lam)) for lam in spec.rapidities]


def _cmd_spectrum(cfg: RunConfig, out: Path):
    fmap, hit = get_or_build_floquet_map(
        cfg.model_params(), cfg.step_control(), cfg.cache_dir
    )
    spec = eig_floquet(fmap)
    path = write_csv(out / "spectrum.csv", ["re", "im", "abs"], _spectrum_rows(spec))
    return [path], int(hit), int(not hit), []


def _cmd_steady_state(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    fmap, hit = get_or_build_floquet_map(params, cfg.step_control(), cfg.cache_dir)
    spec = eig_floquet(fmap)
    rho = steady_state(spec, fmap.basis)
    from .model import build_operators

    weights = build_operators(params).sz_weights
    pops = np.real(np.diag(rho.entries))
    rows = [(params.un, s, p) for s, p in zip(weights, pops)]
    path = write_csv(out / "steady_state.csv", ["U", "s_n", "population"], rows)
    return [path], int(hit), int(not hit), []


def _cmd_correlate(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    fmap, hit = get_or_build_floquet_map(params, cfg.step_control(), cfg.cache_dir)
    spec = eig_floquet(fmap)
    rho = steady_state(spec, fmap.basis)
    from .model import build_operators

    ops = build_operators(params)
    m_max = int(cfg.data["scan"]["m_max"])
    series = two_time_sz(fmap, rho, ops, m_max)
    rows = [
        (int(m), v.real, v.imag, series.asymptote)
        for m, v in zip(series.lags, series.values)
    ]
    path = write_csv(out / "correlation.csv", ["m", "re", "im", "asymptote"], rows)
    return [path], int(hit), int(not hit), []


def _cmd_bifurcation_classical(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    scan = cfg.data["scan"]
    ics = cfg.ic_grid()
    items = [
        (un, ic.theta, ic.phi, params, int(scan["m_transient"]),
         int(scan["m_record"]), int(scan["mf_steps_per_period"]))
        for un in cfg.un_grid()
        for ic in ics
    ]
    results, failures = scan_executor(strobo_scan_worker, items, cfg.parallelism)
    sample_rows = []
    cluster_rows = []
    for item, samples in zip(items, results):
        if samples is None:
            continue
        un = item[0]
        sample_rows.extend((un, s) for s in samples)
        record = StroboscopicRecord(
            un=un, samples=samples, initial_condition=ClassicalState(item[1], item[2])
        )
        report = classify_attractor(
            record, float(scan["tol_diameter"]), float(scan["tol_separation"])
        )
        centers = list(report.centers[:2]) + [""] * (2 - min(2, len(report.centers)))
        cluster_rows.append(
            (un, report.n_clusters, centers[0], centers[1], report.max_diameter)
        )
    paths = [
        write_csv(out / "bifurcation_classical.csv", ["U", "sample"], sample_rows),
        write_csv(
            out / "clusters_classical.csv",
            ["U", "n_clusters", "center_1", "center_2", "max_diameter"],
            cluster_rows,
        ),
    ]
    return paths, 0, 0, failures


def _cmd_bifurcation_quantum(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    items = [
        (un, params, cfg.step_control(), cfg.cache_dir) for un in cfg.un_grid()
    ]
    results, failures = scan_executor(quantum_slice_worker, items, cfg.parallelism)
    rows = []
    hits = misses = 0
    for res in results:
        if res is None:
            continue
        un, sz_values, populations, hit = res
        hits += int(hit)
        misses += int(not hit)
        rows.extend((un, s, p) for s, p in zip(sz_values, populations))
    path = write_csv(out / "bifurcation_quantum.csv", ["U", "s_n", "population"], rows)
    return [path], hits, misses, failures


def _cmd_husimi(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    fmap, hit = get_or_build_floquet_map(params, cfg.step_control(), cfg.cache_dir)
    rho = steady_state(eig_floquet(fmap), fmap.basis)
    spec = cfg.data["husimi"]
    grid = husimi(rho, (int(spec["n_theta"]), int(spec["n_phi"])))
    rows = [
        (grid.theta_axis[i], grid.phi_axis[j], grid.q[i, j])
        for i in range(grid.theta_axis.size)
        for j in range(grid.phi_axis.size)
    ]
    path = write_csv(out / "husimi.csv", ["theta", "phi", "Q"], rows)
    return [path], int(hit), int(not hit), []


def _cmd_evolve_coherent(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    c = cfg.data["coherent"]
    state = coherent_state(float(c["seed_theta"]), float(c["seed_phi"]), params.n_particles)
    hspec = cfg.data["husimi"]
    series, snapshots = stroboscopic_coherent_evolution(
        state,
        params,
        int(c["m_max"]),
        [int(m) for m in c["snapshots"]],
        cfg.step_control(),
        (int(hspec["n_theta"]), int(hspec["n_phi"])),
    )
    paths = [
        write_csv(
            out / "sz_series.csv", ["m", "sz"], list(enumerate(series))
        )
    ]
    for m in sorted(snapshots):
        grid = snapshots[m]
        rows = [
            (grid.theta_axis[i], grid.phi_axis[j], grid.q[i, j])
            for i in range(grid.theta_axis.size)
            for j in range(grid.phi_axis.size)
        ]
        paths.append(write_csv(out / f"husimi_m{m}.csv", ["theta", "phi", "Q"], rows))
    return paths, 0, 0, []


def _cmd_timecrystal(cfg: RunConfig, out: Path):
    params = cfg.model_params()
    t = cfg.data["timecrystal"]
    c = cfg.data["coherent"]
    seed = ClassicalState(float(c["seed_theta"]), float(c["seed_phi"]))
    report = time_crystal_checklist(
        seed,
        [tuple(map(float, off)) for off in t["ic_offsets"]],
        [float(u) for u in t["un_values"]],
        params,
        int(t["m_max"]),
        cfg.step_control(),
        float(t["lock_tol"]),
    )
    rows = [
        (r.run_id, r.seed.theta, r.seed.phi, r.un, r.alternation_length, r.locked)
        for r in report.runs
    ]
    paths = [
        write_csv(
            out / "timecrystal.csv",
            ["run_id", "seed_theta", "seed_phi", "UN", "alternation_length", "locked"],
            rows,
        )
    ]
    for r in report.runs:
        paths.append(
            write_csv(
                out / f"timecrystal_sz_run{r.run_id}.csv",
                ["m", "sz"],
                list(enumerate(r.sz_series)),
            )
        )
    return paths, 0, 0, []


def _cmd_calibrate_omega(cfg: RunConfig, out: Path):
    try:
        result = calibrate_omega(cfg)
    except CalibrationError as exc:
        write_csv(
            out / "calibration.csv",
            ["omega", "n_clusters", "max_diameter", "period2"],
            exc.rows,
        )
        raise
    paths = [
        write_csv(
            out / "calibration.csv",
            ["omega", "n_clusters", "max_diameter", "period2"],
            result.rows,
        ),
        write_csv(
            out / "calibration_windows.csv",
            ["window_low", "window_high", "omega_chosen"],
            [(lo, hi, result.omega_chosen) for lo, hi in result.windows],
        ),
    ]
    return paths, 0, 0, []


_HANDLERS = {
    "spectrum": _cmd_spectrum,
    "steady-state": _cmd_steady_state,
    "correlate": _cmd_correlate,
    "bifurcation-classical": _cmd_bifurcation_classical,
    "bifurcation-quantum": _cmd_bifurcation_quantum,
    "husimi": _cmd_husimi,
    "evolve-coherent": _cmd_evolve_coherent,
    "timecrystal": _cmd_timecrystal,
    "calibrate-omega": _cmd_calibrate_omega,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivendimer",
        description="Driven dissipative dimer simulator: Floquet spectra, "
        "correlations, bifurcation maps and phase-space diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file (defaults merged in)")
        p.add_argument(
            "--set",
            action="append",
            type=_parse_override,
            metavar="KEY.PATH=VALUE",
            help="override one config key (value parsed as JSON when possible)",
        )
        p.add_argument("--output-dir")
        p.add_argument("--cache-dir")
        p.add_argument("--parallelism", type=int)
    return parser


def run_command(argv=None) -> int:
    """Execute one subcommand; returns the process exit status."""
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except (OSError, ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    try:
        artifacts, hits, misses, failures = _HANDLERS[args.command](cfg, out)
    except CalibrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    wall = time.monotonic() - started
    manifest = write_manifest(
        out / f"{args.command.replace('-', '_')}_manifest.json",
        cfg,
        wall,
        artifacts,
        hits,
        misses,
        failures=failures,
    )
    for path in artifacts + [manifest]:
        print(path)
    return 0 if not failures else 1


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
