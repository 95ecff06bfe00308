"""Command-line harness: runs, sweeps, config validation, oracles.

Verbs:
    run <config>        one experiment; writes trajectory.csv, report.txt,
                        config.ini into the output directory
    sweep <config>      cross product of the [sweep] axes, one subdirectory
                        per run plus an aggregate sweep.csv
    validate <config>   parse the config and check the initial data without
                        time stepping
    oracle ode          integrate the boundary-modulus system and verify
                        its exponent bounds
    oracle jump         measure the single-layer normal-derivative jump

Exit codes are CI-oriented: 0 when every enabled check passed (or the
run was inconclusive, e.g. stopped on a time limit before blow-up),
2 when a check ran and failed, 1 on operational errors such as an
unreadable config. Reports are flat `key = value` text with namespaced
keys so acceptance scripts can grep single lines; trajectories are CSV
with a fixed header and shortest round-trip floats. Nothing in the
artifacts depends on wall-clock time, so rerunning a config reproduces
files byte for byte.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .analysis import (
    boundary_set_check,
    estimate_blowup_time,
    fit_rate,
    rate_bound_check,
)
from .comparison import ComparisonParams, c2_min, dominance_check
from .config import ExperimentConfig, load_config, render_config, with_axes_point
from .errors import (
    BlowupLabError,
    ConfigError,
    DominanceViolated,
    FitFailed,
)
from .model import FluxFamily, make_grid, rate_exponents, validate_initial_data
from .ode import OdeParams, integrate_system, verify_lemma_bounds
from .potentials import jump_check, sphere_quadrature
from .solver import COLUMNS, StopReason, Trajectory, run

SWEEP_COLUMNS = ("p", "q", "N", "flux", "T_hat", "alpha_hat", "beta_hat", "status")


@dataclass(frozen=True)
class RunArtifacts:
    """The three files every run emits, plus the aggregate verdict."""

    trajectory: Path
    report: Path
    config_echo: Path
    status: str
    exit_code: int


def write_trajectory(traj: Trajectory, path: Path) -> None:
    """Fixed-header CSV; floats as their shortest round-trip decimals."""
    int_columns = {"argmax_u", "argmax_v"}
    series = {name: getattr(traj, name) for name in COLUMNS}
    with open(path, "w") as f:
        f.write(",".join(COLUMNS) + "\n")
        for i in range(len(traj)):
            cells = [
                str(int(series[name][i]))
                if name in int_columns
                else repr(float(series[name][i]))
                for name in COLUMNS
            ]
            f.write(",".join(cells) + "\n")


def write_report(entries: dict[str, object], path: Path) -> None:
    with open(path, "w") as f:
        for key, value in entries.items():
            if isinstance(value, float):
                value = repr(value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            f.write(f"{key} = {value}\n")


def read_report(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        if " = " in line:
            key, _, value = line.partition(" = ")
            entries[key] = value
    return entries


def _rate_targets(params) -> tuple[float, float]:
    # exp_linear flattens e^{q M} sqrt(T - t), a 1/2-rate for both fields
    if params.flux is FluxFamily.EXP_LINEAR:
        return 1.0, 1.0
    return rate_exponents(params.p, params.q)


def _nan_block(prefix: str, keys: tuple[str, ...]) -> dict[str, object]:
    return {f"{prefix}.{key}": float("nan") for key in keys}


def run_experiment(config: ExperimentConfig, out_dir: Path) -> RunArtifacts:
    """Execute the full pipeline for one config and write the artifacts.

    The analysis stages run only when the solver actually reached the
    blow-up threshold; otherwise every check reports inconclusive and
    the exit code stays 0 (nothing failed, nothing was shown). A fit or
    dominance failure marks the run failed with exit code 2.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    params, solver = config.params, config.solver

    traj = run(params, solver)

    report: dict[str, object] = {
        "run.stop_reason": traj.stop.reason.value,
        "run.stop_detail": traj.stop.detail or "-",
        "run.t_stop": float(traj.stop.t_stop),
        "run.steps": traj.steps,
        "run.samples": len(traj),
    }
    statuses: dict[str, str] = {}

    if traj.stop.reason is StopReason.BLOWUP_THRESHOLD:
        try:
            fit = estimate_blowup_time(
                traj, params, residual_max=config.residual_max
            )
            rates = fit_rate(traj, fit.t_hat, params)
        except FitFailed as exc:
            fit = None
            report.update(_nan_block(
                "blowup", ("T_hat", "c1_hat", "c2_hat", "residual",
                           "window_lo", "window_hi")))
            report.update(_nan_block(
                "rate", ("alpha_hat", "beta_hat", "sup_u", "sup_v",
                         "trend_u", "trend_v")))
            statuses["rate"] = f"fail: {exc}"
        if fit is not None:
            alpha_hat, beta_hat = rates
            target_u, target_v = _rate_targets(params)
            bound = rate_bound_check(
                traj, fit.t_hat, target_u, target_v,
                params=params, tol=config.rate_tol,
            )
            report.update({
                "blowup.T_hat": fit.t_hat,
                "blowup.c1_hat": fit.c1_hat,
                "blowup.c2_hat": fit.c2_hat,
                "blowup.residual": fit.residual,
                "blowup.window_lo": fit.t_lo,
                "blowup.window_hi": fit.t_hi,
                "rate.alpha_hat": alpha_hat,
                "rate.beta_hat": beta_hat,
                "rate.sup_u": bound.rate_sup_u,
                "rate.sup_v": bound.rate_sup_v,
                "rate.trend_u": bound.trend_u,
                "rate.trend_v": bound.trend_v,
            })
            statuses["rate"] = "pass" if bound.passed else "fail"

            interior = boundary_set_check(
                traj, params, config.interior_radius,
                t_hat=fit.t_hat,
                c1_hat=bound.rate_sup_u, c2_hat=bound.rate_sup_v,
            )
            report.update({
                "boundary.interior_sup_u": interior.interior_sup_u,
                "boundary.interior_sup_v": interior.interior_sup_v,
                "boundary.growth_u": interior.growth_u,
                "boundary.growth_v": interior.growth_v,
                "boundary.argmax_at_boundary": interior.argmax_at_boundary,
                "boundary.envelope_u": interior.envelope_u,
                "boundary.envelope_v": interior.envelope_v,
            })
            statuses["boundary"] = interior.status

            if traj.states:
                grid = make_grid(params.R, solver.N)
                m_u, m_v = target_u / 2.0, target_v / 2.0
                for field, m, sup in (
                    ("u", m_u, bound.rate_sup_u),
                    ("v", m_v, bound.rate_sup_v),
                ):
                    comp = ComparisonParams(
                        C1=1.0, C2=c2_min(params.n, params.R, m),
                        m=m, T=fit.t_hat, R=params.R, n=params.n,
                    )
                    try:
                        rep = dominance_check(
                            traj.states, grid.r, comp, sup,
                            c1_scale=config.dominance_scale, field=field,
                        )
                        report[f"dominance.margin_{field}"] = rep.margin
                        report[f"dominance.c1_{field}"] = rep.c1
                        statuses.setdefault("dominance", "pass")
                    except DominanceViolated as exc:
                        report[f"dominance.margin_{field}"] = float("nan")
                        report[f"dominance.c1_{field}"] = float("nan")
                        statuses["dominance"] = f"fail: {exc}"
            else:
                statuses["dominance"] = "skipped: no field snapshots"
    else:
        report.update(_nan_block(
            "blowup", ("T_hat", "c1_hat", "c2_hat", "residual",
                       "window_lo", "window_hi")))
        report.update(_nan_block(
            "rate", ("alpha_hat", "beta_hat", "sup_u", "sup_v",
                     "trend_u", "trend_v")))
        for name in ("rate", "boundary", "dominance"):
            statuses[name] = "inconclusive: run stopped before blow-up"

    failed = any(s.startswith("fail") for s in statuses.values())
    all_pass = all(s == "pass" for s in statuses.values())
    overall = "fail" if failed else ("pass" if all_pass else "inconclusive")
    for name in ("rate", "boundary", "dominance"):
        report[f"{name}.status"] = statuses.get(name, "inconclusive")
    report["overall.status"] = overall
    report["overall.exit_code"] = 2 if failed else 0

    trajectory_path = out_dir / "trajectory.csv"
    report_path = out_dir / "report.txt"
    config_path = out_dir / "config.ini"
    write_trajectory(traj, trajectory_path)
    write_report(report, report_path)
    config_path.write_text(render_config(config))
    return RunArtifacts(
        trajectory=trajectory_path,
        report=report_path,
        config_echo=config_path,
        status=overall,
        exit_code=2 if failed else 0,
    )


def _sweep_point(task: tuple[int, ExperimentConfig, str]) -> tuple[int, dict]:
    index, config, run_dir = task
    row = {
        "p": repr(config.params.p),
        "q": repr(config.params.q),
        "N": str(config.solver.N),
        "flux": config.params.flux.value,
        "T_hat": "nan",
        "alpha_hat": "nan",
        "beta_hat": "nan",
    }
    try:
        artifacts = run_experiment(config, Path(run_dir))
        report = read_report(artifacts.report)
        row["T_hat"] = report["blowup.T_hat"]
        row["alpha_hat"] = report["rate.alpha_hat"]
        row["beta_hat"] = report["rate.beta_hat"]
        row["status"] = artifacts.status
    except BlowupLabError as exc:
        row["status"] = f"error: {type(exc).__name__}"
        Path(run_dir).mkdir(parents=True, exist_ok=True)
        (Path(run_dir) / "report.txt").write_text(
            f"overall.status = error\noverall.detail = {exc}\n"
        )
    return index, row


def sweep(config: ExperimentConfig, out_dir: Path, max_parallel: int = 1) -> Path:
    """Run the axis cross product and aggregate one row per run.

    Rows appear in axis order (flux, p, q, N nested last), whatever the
    parallelism; failed runs keep their row with an error status.
    """
    axes = config.sweep
    total = len(axes)
    if total > axes.max_runs:
        raise ConfigError(
            f"sweep would launch {total} runs, the cap is {axes.max_runs}"
        )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = []
    invalid: dict[int, dict] = {}
    for index, (flux, p, q, N) in enumerate(
        product(axes.flux, axes.p, axes.q, axes.N)
    ):
        run_dir = out_dir / f"run_{index:03d}"
        try:
            point = with_axes_point(config, p=p, q=q, N=N, flux=flux)
        except ValueError as exc:
            invalid[index] = {
                "p": repr(p), "q": repr(q), "N": str(N), "flux": flux.value,
                "T_hat": "nan", "alpha_hat": "nan", "beta_hat": "nan",
                # the status cell must stay a single CSV field
                "status": f"invalid: {exc}".replace(",", ";"),
            }
            continue
        tasks.append((index, point, str(run_dir)))

    if max_parallel > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=max_parallel) as pool:
            results = dict(pool.map(_sweep_point, tasks))
    else:
        results = dict(map(_sweep_point, tasks))
    results.update(invalid)

    summary = out_dir / "sweep.csv"
    with open(summary, "w") as f:
        f.write(",".join(SWEEP_COLUMNS) + "\n")
        for index in sorted(results):
            row = results[index]
            f.write(",".join(row[c] for c in SWEEP_COLUMNS) + "\n")
    return summary


def _cmd_run(args) -> int:
    config = load_config(args.config)
    out_dir = Path(args.output_dir or config.output_dir)
    artifacts = run_experiment(config, out_dir)
    if not args.quiet:
        report = read_report(artifacts.report)
        print(f"stop: {report['run.stop_reason']} at t = {report['run.t_stop']}")
        if not report["rate.status"].startswith("inconclusive"):
            print(f"T_hat = {report.get('blowup.T_hat')}")
            print(f"alpha_hat = {report.get('rate.alpha_hat')}")
            print(f"beta_hat = {report.get('rate.beta_hat')}")
        for name in ("rate", "boundary", "dominance"):
            print(f"{name}: {report[f'{name}.status']}")
        print(f"wrote {artifacts.trajectory}")
        print(f"wrote {artifacts.report}")
        print(f"overall: {artifacts.status}")
    return artifacts.exit_code


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    out_dir = Path(args.output_dir or config.output_dir)
    summary = sweep(config, out_dir, max_parallel=args.max_parallel)
    lines = summary.read_text().splitlines()
    if not args.quiet:
        for line in lines:
            print(line)
        print(f"wrote {summary}")
    worst = 0
    for line in lines[1:]:
        status = line.rsplit(",", 1)[-1]
        if status.startswith(("fail", "error", "invalid")):
            worst = 2
    return worst


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    grid = make_grid(config.params.R, config.solver.N)
    report = validate_initial_data(
        config.params.initial, grid, config.params.n, params=config.params
    )
    if not args.quiet:
        print(render_config(config), end="")
        for check in report.checks:
            print(f"check {check.name}: {'pass' if check.passed else 'fail'} "
                  f"(worst node {check.worst_node}, value {check.worst_value!r})")
        print(f"initial data: {'pass' if report.passed else 'fail'}")
    return 0 if report.passed else 2


def _cmd_oracle_ode(args) -> int:
    params = OdeParams(
        p=args.p, q=args.q, c=args.c, T=args.T,
        A0=args.A0, B0=args.B0, t0=args.t0,
    )
    series = integrate_system(params, args.stop_frac, n_samples=args.samples)
    result = verify_lemma_bounds(series, params)
    if not args.quiet:
        alpha, beta = params.exponents
        print(f"samples = {len(series)} capped = {'yes' if series.capped else 'no'}")
        print(f"alpha = {alpha!r} beta = {beta!r}")
        print(f"alpha_fit = {result.alpha_fit!r}")
        print(f"beta_fit = {result.beta_fit!r}")
        print(f"c_a = {result.c_a!r}")
        print(f"c_b = {result.c_b!r}")
        print(f"trend_a = {result.trend_a!r} trend_b = {result.trend_b!r}")
        print(f"verdict: {'pass' if result.passed else 'fail'}")
    return 0 if result.passed else 2


def _cmd_oracle_jump(args) -> int:
    quad = sphere_quadrature(args.R, args.m)
    if args.distances:
        distances = [float(v) for v in args.distances.split(",")]
    else:
        distances = [f * args.R for f in (0.16, 0.12, 0.09, 0.06, 0.04)]
    x0 = np.array([0.0, 0.0, args.R])
    density = args.density

    report = jump_check(
        x0, lambda pts, tau: density, args.window, quad,
        distances, steps=args.steps, tol_jump=args.tol,
    )
    if not args.quiet:
        print(f"jump = {report.jump!r}")
        print(f"target = {report.target!r}")
        print(f"boundary_term = {report.boundary_term!r}")
        print(f"interior_limit = {report.interior_limit!r}")
        print(f"resolution = {report.resolution!r}")
        print(f"verdict: {'pass' if report.passed else 'fail'}")
    return 0 if report.passed else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blowuplab",
        description="Boundary-flux blow-up laboratory for coupled heat systems",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p):
        p.add_argument("--quiet", action="store_true", help="suppress chatter")

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", default=None)
    add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the [sweep] cross product")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--output-dir", default=None)
    p_sweep.add_argument("--max-parallel", type=int, default=1)
    add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    add_common(p_val)
    p_val.set_defaults(func=_cmd_validate)

    p_oracle = sub.add_parser("oracle", help="standalone numerical checks")
    o_sub = p_oracle.add_subparsers(dest="oracle", required=True)

    p_ode = o_sub.add_parser("ode", help="boundary-modulus ODE system")
    p_ode.add_argument("--p", type=float, required=True)
    p_ode.add_argument("--q", type=float, required=True)
    p_ode.add_argument("--c", type=float, default=1.0)
    p_ode.add_argument("--T", type=float, default=1.0)
    p_ode.add_argument("--A0", type=float, default=1.0)
    p_ode.add_argument("--B0", type=float, default=1.0)
    p_ode.add_argument("--t0", type=float, default=0.0)
    p_ode.add_argument("--stop-frac", type=float, default=0.99999)
    p_ode.add_argument("--samples", type=int, default=200)
    add_common(p_ode)
    p_ode.set_defaults(func=_cmd_oracle_ode)

    p_jump = o_sub.add_parser("jump", help="single-layer jump relation")
    p_jump.add_argument("--R", type=float, default=1.0)
    p_jump.add_argument("--m", type=int, default=24, help="polar quadrature nodes")
    p_jump.add_argument("--window", type=float, default=0.05)
    p_jump.add_argument("--density", type=float, default=1.0)
    p_jump.add_argument("--distances", default=None,
                        help="comma-separated approach distances")
    p_jump.add_argument("--steps", type=int, default=48)
    p_jump.add_argument("--tol", type=float, default=0.05)
    add_common(p_jump)
    p_jump.set_defaults(func=_cmd_oracle_jump)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BlowupLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
