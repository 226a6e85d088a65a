"""Command-line front end.

Subcommands: simulate | photons | bound | sweep | validate.  Exit status is
0 on success, 1 when a validation fails, 2 for configuration errors and 3
for numeric failures (non-convergence).
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import bound as bnd
from . import reporting as rep
from .dynamics import (
    DynamicsParams,
    dynamics_params,
    exact_acceleration_covariance,
    exact_velocity_covariance,
    integrate_plate,
)
from .ensemble import REFERENCES, noise_suite, oracle_suite, printed_formula
from .errors import ConfigError, DCEError, NumericFailure, ScenarioError
from .noise import NoiseParams, NoisePath, sample_noise_path
from .photons import mode_creation_rate, photon_spectrum, positivity_grid, total_creation_rate
from .scenario import ScenarioConfig, load_config

log = logging.getLogger("dcebound")

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def bundled_config(name: str) -> Path | None:
    stem = name if name.endswith(".conf") else name + ".conf"
    ref = resources.files("dcebound") / "configs" / stem
    return Path(str(ref)) if ref.is_file() else None


def resolve_config_path(name: str) -> Path:
    path = Path(name)
    if path.is_file():
        return path
    bundled = bundled_config(name)
    if bundled is None:
        raise ConfigError([ScenarioError(f"config {name!r} not found (and not a bundled config)")])
    return bundled


class Run:
    """Shared state of one CLI invocation."""

    def __init__(self, args, subcommand: str):
        self.args = args
        self.scenario: ScenarioConfig = load_config(resolve_config_path(args.config))
        if args.seed is not None:
            self.scenario = self.scenario.replace(seed=args.seed)
        self.out_dir = Path(args.out_dir)
        self.manifest = rep.RunManifest(
            subcommand, dict(self.scenario.source), self.scenario.seed, list(args.argv)
        )

    def write(self, name: str, text: str) -> Path:
        path = rep.write_text(self.out_dir / name, text)
        self.manifest.outputs.append(name)
        return path

    def write_table(self, stem: str, header, rows) -> Path:
        rows = list(rows)
        if self.args.format == "json":
            cols = {h: [row[i] for row in rows] for i, h in enumerate(header)}
            return self.write(stem + ".json", rep.json_text({"columns": cols, "manifest": self.manifest.filename}))
        return self.write(stem + ".csv", rep.csv_text(header, rows))

    def finish(self):
        self.manifest.finish(self.out_dir)


def needs_solve(sc: ScenarioConfig) -> bool:
    return sc.self_consistent and sc.wall_reflectivity is None


def resolved_rate(sc: ScenarioConfig) -> float:
    """Numeric lambda; an unpinned SELF_CONSISTENT rate is taken at the general-regime fixed point."""
    if needs_solve(sc):
        result = bnd.self_consistent_bound(sc, "general")
        lam = result.fixed_point_trace["lambda_at_fixed_point"]
        log.info("lambda resolved self-consistently: %g", lam)
        return lam
    return bnd.noise_rate_for(sc)


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    run = Run(args, "simulate")
    sc = run.scenario
    params = dynamics_params(sc, resolved_rate(sc))
    path = sample_noise_path(params.noise, sc.dt, sc.n_steps, sc.seed, args.path_index)
    traj = integrate_plate(path, params, x0=sc.motion.rest_position)
    run.write_table("noise", ("t", "delta_p"), zip(path.times, path.samples))
    run.write("noise.json", rep.json_text(rep.noise_sidecar(path, run.manifest.filename)))
    run.write_table("trajectory", ("t", "x", "v", "a"), zip(traj.t, traj.x, traj.v, traj.a))
    run.finish()
    return EXIT_OK


def cmd_photons(args) -> int:
    run = Run(args, "photons")
    sc = run.scenario
    lam = resolved_rate(sc)
    spectra = [photon_spectrum(k, sc, rate=lam) for k in range(1, args.k_max + 1)]
    modes = [mode_creation_rate(k, sc, rate=lam).to_json() for k in range(1, args.k_max + 1)]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        total = total_creation_rate(sc, rate=lam)
    rows = [(sp.k, n, v) for sp in spectra for n, v in sorted(sp.expected.items())]
    run.write_table("spectrum", ("k", "n", "expected_number"), rows)
    report = {
        "modes": modes,
        "total": {
            "rate": total.total,
            "log10_rate": total.log10_total,
            "t1": total.t1,
            "log_domain": total.diagnostics["log_domain"],
            "degenerate": total.diagnostics["degenerate"],
            "proviso_satisfied": total.diagnostics["proviso_satisfied"],
        },
        "occupancies": {str(sp.k): sp.occupancy for sp in spectra},
        "lambda": lam,
        "warnings": [str(w.message) for w in caught],
        "manifest": run.manifest.filename,
    }
    run.write("rates.json", rep.json_text(report))
    status = EXIT_OK
    if args.positivity_grid:
        grid = positivity_grid(sc)
        run.write_table("positivity", ("lambda_over_gamma", "gamma_t1", "log10_total_rate", "positive"), grid)
        if not all(row[3] for row in grid):
            print("total creation rate is not positive on the whole grid", file=sys.stderr)
            status = EXIT_VALIDATION
    run.finish()
    return status


def _bound_result(sc: ScenarioConfig, regime: str, self_consistent: bool):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if self_consistent or needs_solve(sc):
            result = bnd.self_consistent_bound(sc, regime)
        else:
            result = bnd.conductivity_bound(sc, regime)
    for w in caught:
        msg = str(w.message)
        if msg not in result.warnings:
            result.warnings.append(msg)
    return result


def cmd_bound(args) -> int:
    run = Run(args, "bound")
    result = _bound_result(run.scenario, args.regime, args.self_consistent)
    for msg in result.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    payload = result.to_json()
    payload["manifest"] = run.manifest.filename
    run.write("bound.json", rep.json_text(payload))
    print(f"log10 sigma_c limit = {result.log10_sigma_limit:.12g}  [{result.regime}]")
    run.finish()
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = Run(args, "sweep")
    if args.param not in bnd.SWEEP_KEYS:
        raise bnd.UnknownParameter(f"cannot sweep {args.param!r}; choose from {sorted(bnd.SWEEP_KEYS)}")
    if args.log:
        values = np.logspace(math.log10(args.start), math.log10(args.stop), args.points)
    else:
        values = np.linspace(args.start, args.stop, args.points)
    values[0], values[-1] = args.start, args.stop
    rows = []
    for value in values:
        point = bnd.scenario_with(run.scenario, args.param, float(value))
        res = _bound_result(point, args.regime, args.self_consistent)
        rows.append((float(value), res.log10_sigma_limit, res.regime))
    run.write_table("sweep", ("param", "log10_sigma_limit", "regime"), rows)
    run.finish()
    return EXIT_OK


def _check_files(directory: Path, sc: ScenarioConfig) -> dict:
    """Re-derive a simulate run's trajectory from its noise file."""
    _, noise = rep.read_csv(directory / "noise.csv")
    _, traj = rep.read_csv(directory / "trajectory.csv")
    params = dynamics_params(sc, resolved_rate(sc))
    dt = float(noise[1, 0] - noise[0, 0]) if len(noise) > 1 else sc.dt
    again = integrate_plate(NoisePath(sc.dt, noise[:, 1]), params, x0=sc.motion.rest_position)
    accel_residual = float(np.max(np.abs(traj[:, 3] + params.gamma * traj[:, 2] - params.s * noise[:, 1])))
    vel_residual = float(np.max(np.abs(again.v - traj[:, 2])))
    scale = max(1.0, float(np.max(np.abs(traj[:, 3]))))
    ok = accel_residual <= 1e-12 * scale and vel_residual <= 1e-12 * max(1.0, float(np.max(np.abs(traj[:, 2]))))
    return {
        "directory": str(directory),
        "grid_dt": dt,
        "acceleration_identity_residual": accel_residual,
        "velocity_recompute_residual": vel_residual,
        "verdict": "pass" if ok else "fail",
    }


def _covariance_rows(params: DynamicsParams, estimate):
    printed = printed_formula(estimate.quantity, params)
    oracle = exact_velocity_covariance if estimate.quantity == "velocity" else exact_acceleration_covariance
    return [(t, tp, printed(t, tp), oracle(t, tp, params), mc, se)
            for (t, tp), mc, se in zip(estimate.lags, estimate.mean, estimate.stderr)]


def cmd_validate(args) -> int:
    run = Run(args, "validate")
    sc = run.scenario
    lam = resolved_rate(sc)
    params = dynamics_params(sc, lam)
    threads = args.threads
    report = {"suite": args.suite, "threshold": args.threshold, "results": [], "manifest": run.manifest.filename}
    passed = True

    if args.suite in ("noise", "all"):
        noise = params.noise
        n_paths = args.paths or 4096
        if noise.variance == 0.0:
            report["degenerate_variance"] = True
        horizon = 2.0 / lam if lam > 0 else 1.0
        dt = min(sc.dt, horizon / 400.0)
        n_steps = max(int(math.ceil(10.0 * horizon / dt)), 1)
        res = noise_suite(noise, dt=dt, n_steps=n_steps, n_paths=n_paths, seed=sc.seed,
                          threads=threads, threshold=args.threshold)
        report["results"].append({"suite": "noise", **res.to_json()})
        passed &= res.passed

    if args.suite in ("dynamics", "all"):
        g = params.gamma
        if g <= 0:
            raise ConfigError([ScenarioError("dynamics suite needs plate gamma > 0")])
        rates = [r * lam for r in (0.5, 1.0, 4.0, 8.0)] if lam > 0 else [0.0]
        times = [1.0 / g, 5.0 / g, 10.0 / g]
        reports = oracle_suite(
            gamma=g, rates=rates, times=times, n_paths=args.paths or 16384, dt=0.002 / g,
            seed=sc.seed, s=params.s, variance=params.noise.variance, v0=params.v0,
            threads=threads, threshold=args.threshold, reference=args.reference,
        )
        per_rate = len(reports) // len(rates)
        for j, r in enumerate(reports):
            report["results"].append({"suite": "dynamics", **r.to_json()})
            if r.kind == "oracle":
                passed &= r.passed
            if r.kind != "oracle" and args.reference == "both":
                continue
            k = j // per_rate
            p_k = DynamicsParams(g, params.s, params.v0, NoiseParams(params.noise.variance, rates[k]))
            name = f"covariance_{r.estimate.quantity}_{k}"
            run.write_table(name, ("t", "t_prime", "printed_value", "oracle_value", "mc_value", "mc_stderr"),
                            _covariance_rows(p_k, r.estimate))

    if args.check_dir:
        check = _check_files(Path(args.check_dir), sc)
        report["file_check"] = check
        passed &= check["verdict"] == "pass"

    report["verdict"] = "pass" if passed else "fail"
    run.write("validation.json", rep.json_text(report))
    run.finish()
    print(f"validation {report['verdict']}")
    return EXIT_OK if passed else EXIT_VALIDATION


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True,
                        help="scenario file, or the name of a bundled config (nondimensional, paper_sec4)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out-dir", default=".", help="directory for outputs (default: cwd)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="format of tabular outputs")
    common.add_argument("--threads", type=int, default=1, help="worker threads for ensembles")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dcebound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="sample one noise path and plate trajectory")
    p.add_argument("--path-index", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("photons", parents=[common], help="photon spectrum and creation rates")
    p.add_argument("--k-max", type=int, default=1)
    p.add_argument("--positivity-grid", action="store_true",
                   help="also tabulate the total rate on a 25x10 (lambda/gamma, gamma*t1) grid")
    p.set_defaults(func=cmd_photons)

    regimes = ("general", "fast", "slow", "auto")
    p = sub.add_parser("bound", parents=[common], help="conductivity upper limit")
    p.add_argument("--regime", choices=regimes, default="general")
    p.add_argument("--self-consistent", action="store_true",
                   help="solve sigma = bound(lambda(sigma)) instead of using a fixed rate")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", parents=[common], help="bound as a function of one parameter")
    p.add_argument("--param", required=True, help=f"one of {', '.join(bnd.SWEEP_KEYS)}")
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--log", action="store_true", help="logarithmic spacing")
    p.add_argument("--regime", choices=regimes, default="general")
    p.add_argument("--self-consistent", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="Monte Carlo oracle suite")
    p.add_argument("--suite", choices=("noise", "dynamics", "all"), default="all")
    p.add_argument("--paths", type=int, default=None, help="override ensemble size")
    p.add_argument("--threshold", type=float, default=3.0, help="|z| threshold")
    p.add_argument("--check-dir", default=None, help="also verify the outputs of a simulate run")
    p.add_argument("--reference", choices=REFERENCES, default="both",
                   help="compare the dynamics ensembles against the quadrature oracles, the printed "
                        "closed forms, or both; printed-form mismatches never fail the run")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DCEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
