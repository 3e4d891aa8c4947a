"""Command-line front end for the flow and the discrete algorithm.

Subcommands
-----------
run
    Integrate the flow from a JSON experiment config, monitor the energy,
    classify the decay rate, and write trajectory.csv / energy.csv /
    rates.json / summary.json into the output directory.
check-params
    Derive every constant for (gamma, lambda, beta) and report the two
    feasibility verdicts.
discrete
    Run the inertial proximal-gradient iteration at unit step on a problem
    file and write the iterate history CSV.
rates
    Classify the decay rate of a trajectory CSV written by ``run``.
sweep
    Evaluate the feasibility conditions on a (gamma, lambda) grid, write
    sweep.csv, and optionally launch one run per feasible point from a
    config template.

Global flags: ``--config FILE`` (JSON, supplies defaults for any missing
argument of the subcommand; for ``run`` it is the experiment config itself),
``--out-dir DIR``, ``--json``.  Exit codes: 0 success (infeasible
parameters only warn), 1 invalid input, 2 numerical abort.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import discrete as discrete_mod
from . import dynamics, lyapunov
from . import params as params_mod
from . import rates as rates_mod
from .problems import problem_from_json, prox_grad_residual

__all__ = ["main"]

_OUTPUT_KINDS = ("trajectory", "energy", "rates", "summary")


def _json_safe(value):
    """Recursively convert a payload to strict-JSON types.

    numpy scalars and arrays become Python numbers and lists; non-finite
    floats become null.  Returns (converted, number_of_nonfinite_floats).
    """
    if isinstance(value, dict):
        count = 0
        out = {}
        for key, item in value.items():
            out[key], sub = _json_safe(item)
            count += sub
        return out, count
    if isinstance(value, (list, tuple)):
        count = 0
        out = []
        for item in value:
            safe, sub = _json_safe(item)
            out.append(safe)
            count += sub
        return out, count
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value), 0
    if isinstance(value, (int, np.integer)):
        return int(value), 0
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return None, 1
        return value, 0
    return value, 0


def _dump_json(payload, path=None):
    safe, dropped = _json_safe(payload)
    text = json.dumps(safe, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return dropped


def _load_json_object(path, what):
    with open(path) as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError("%s must be a JSON object: %s" % (what, path))
    return payload


def _config_dict(args):
    if getattr(args, "config", None) is None:
        return {}
    return _load_json_object(args.config, "config")


def _merged(args, cfg, attr, key=None, required=False):
    """CLI flag wins; the --config file supplies the value when the flag is absent."""
    value = getattr(args, attr)
    if value is None:
        value = cfg.get(key or attr)
    if value is None and required:
        raise ValueError("missing required argument --%s" % (key or attr).replace("_", "-"))
    return value


def _resolve_problem(spec, base_dir):
    if isinstance(spec, dict):
        return problem_from_json(spec)
    if isinstance(spec, str):
        if spec.lstrip().startswith("{"):
            return problem_from_json(spec)
        path = spec if os.path.isabs(spec) else os.path.join(base_dir, spec)
        if not os.path.exists(path):
            raise ValueError("problem file not found: %s" % path)
        return problem_from_json(path)
    raise ValueError("problem must be an inline JSON object or a file path")


def _out_path(args, name):
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    if os.path.isabs(name):
        return name
    return os.path.join(out_dir, name)


# ---------------------------------------------------------------------------
# run


def _execute_run(cfg, base_dir, args):
    obj = _resolve_problem(cfg["problem"], base_dir)
    gamma = float(cfg["gamma"])
    lam = float(cfg["lambda"])
    params = params_mod.derive_params(gamma, lam, obj.g.beta)
    warning_list = []
    if not params.rho_feasible:
        message = (
            "parameters gamma=%g, lambda=%g with beta=%g fail the feasibility "
            "conditions; integrating anyway" % (gamma, lam, obj.g.beta)
        )
        print("warning: " + message, file=sys.stderr)
        warning_list.append(message)

    seed = int(cfg.get("seed", 0))
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    if "u0" in cfg:
        u0 = np.asarray(cfg["u0"], dtype=float)
    else:
        u0 = np.random.default_rng(seed).standard_normal(obj.dim)
    if "v0" in cfg:
        v0 = np.asarray(cfg["v0"], dtype=float)
    else:
        v0 = np.zeros(obj.dim)

    sample_every = cfg.get("sample_every")
    if sample_every is not None:
        sample_every = int(sample_every)
    outputs = cfg.get("outputs")
    outputs = set(_OUTPUT_KINDS) if outputs is None else set(outputs)
    unknown = outputs - set(_OUTPUT_KINDS)
    if unknown:
        raise ValueError("unknown outputs %s; choose from %s" % (sorted(unknown), list(_OUTPUT_KINDS)))

    traj = dynamics.integrate(
        obj, params, u0, v0, float(cfg["t_end"]), float(cfg["h"]), sample_every=sample_every
    )
    trace = lyapunov.monitor(obj, params, traj)
    energy_tol = 1e-6 * (1.0 + abs(float(trace.energy[0])))
    violations = lyapunov.check_monotone(trace, energy_tol)
    if violations:
        warning_list.append(
            "energy increased beyond tolerance %g at %d sample pairs" % (energy_tol, len(violations))
        )

    rate_kwargs = {}
    if "x_limit" in cfg:
        rate_kwargs["x_limit"] = np.asarray(cfg["x_limit"], dtype=float)
    if "t0" in cfg:
        rate_kwargs["t0"] = float(cfg["t0"])
    if "converged_tol" in cfg:
        rate_kwargs["converged_tol"] = float(cfg["converged_tol"])
    try:
        rate_dict = rates_mod.classify_rate(traj, **rate_kwargs).to_dict()
    except ValueError as exc:
        rate_dict = {"regime": "undetermined", "error": str(exc)}
        warning_list.append("rate classification failed: %s" % exc)

    written = []
    if "trajectory" in outputs:
        path = _out_path(args, "trajectory.csv")
        dynamics.write_trajectory_csv(traj, path)
        written.append(path)
    if "energy" in outputs:
        path = _out_path(args, "energy.csv")
        lyapunov.write_energy_csv(trace, path)
        written.append(path)
    if "rates" in outputs:
        path = _out_path(args, "rates.json")
        _dump_json(rate_dict, path)
        written.append(path)

    summary = {
        "params": params_mod.params_report(params),
        "final_residual": float(prox_grad_residual(obj, lam, traj.xs[-1])),
        "final_velocity_norm": float(np.linalg.norm(traj.vs[-1])),
        "energy_monotone": not violations,
        "rate_report": rate_dict,
        "warnings": warning_list,
    }
    safe_summary, dropped = _json_safe(summary)
    if dropped:
        safe_summary["warnings"] = list(safe_summary["warnings"]) + [
            "%d non-finite values serialized as null" % dropped
        ]
    path = _out_path(args, "summary.json")
    with open(path, "w") as fh:
        fh.write(json.dumps(safe_summary, indent=2) + "\n")
    written.append(path)
    return safe_summary, written


def cmd_run(args):
    if args.config is None:
        raise ValueError("run requires --config FILE with the experiment description")
    cfg = _load_json_object(args.config, "config")
    base_dir = os.path.dirname(os.path.abspath(args.config))
    summary, written = _execute_run(cfg, base_dir, args)
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        for path in written:
            print("wrote %s" % path)
        print(
            "final residual %.6g; final velocity %.6g; energy monotone: %s; regime: %s"
            % (
                summary["final_residual"],
                summary["final_velocity_norm"],
                summary["energy_monotone"],
                summary["rate_report"]["regime"],
            )
        )
    return 0


# ---------------------------------------------------------------------------
# check-params


def cmd_check_params(args):
    cfg = _config_dict(args)
    gamma = float(_merged(args, cfg, "gamma", required=True))
    lam = float(_merged(args, cfg, "lam", key="lambda", required=True))
    beta = float(_merged(args, cfg, "beta", required=True))
    params = params_mod.derive_params(gamma, lam, beta)
    if not params.rho_feasible:
        print(
            "warning: gamma=%g, lambda=%g, beta=%g fail the feasibility conditions"
            % (gamma, lam, beta),
            file=sys.stderr,
        )
    report = params_mod.params_report(params)
    if args.json:
        _dump_json(report)
    else:
        for key, value in report.items():
            print("%s = %r" % (key, value))
    return 0


# ---------------------------------------------------------------------------
# discrete


def cmd_discrete(args):
    cfg = _config_dict(args)
    spec = _merged(args, cfg, "problem", required=True)
    base_dir = os.path.dirname(os.path.abspath(args.config)) if args.config else os.getcwd()
    obj = _resolve_problem(spec, base_dir)
    lam = float(_merged(args, cfg, "lam", key="lambda", required=True))
    gamma = float(_merged(args, cfg, "gamma", required=True))
    x0 = np.asarray(_merged(args, cfg, "x0", required=True), dtype=float)
    x1_raw = _merged(args, cfg, "x1")
    x1 = x0 if x1_raw is None else np.asarray(x1_raw, dtype=float)
    max_iter = int(_merged(args, cfg, "max_iter") or 10_000)
    tol = float(_merged(args, cfg, "tol") or 1e-8)
    out_name = _merged(args, cfg, "out") or "history.csv"

    history = discrete_mod.run_inertial(obj, lam, gamma, x0, x1, max_iter, tol)
    path = _out_path(args, out_name)
    discrete_mod.write_history_csv(history, path)
    if args.json:
        _dump_json(
            {
                "converged": history.converged,
                "iterations": history.iterations,
                "final_residual": float(history.residuals[-1]),
                "final_objective": float(history.objective_values[-1]),
                "history": path,
            }
        )
    else:
        print("wrote %s" % path)
        status = "converged" if history.converged else "stopped"
        print(
            "%s after %d iterations; final residual %.6g"
            % (status, history.iterations, history.residuals[-1])
        )
    return 0


# ---------------------------------------------------------------------------
# rates


def _parse_x_limit(tokens):
    if tokens is None or tokens == ["auto"]:
        return None
    return np.asarray([float(tok) for tok in tokens], dtype=float)


def cmd_rates(args):
    cfg = _config_dict(args)
    traj_path = _merged(args, cfg, "traj", required=True)
    traj = dynamics.read_trajectory_csv(traj_path)
    x_limit = _parse_x_limit(_merged(args, cfg, "x_limit"))
    t0_raw = _merged(args, cfg, "t0")
    t0 = None if t0_raw in (None, "auto") else float(t0_raw)
    tol_raw = _merged(args, cfg, "converged_tol")
    converged_tol = None if tol_raw is None else float(tol_raw)
    report = rates_mod.classify_rate(traj, x_limit=x_limit, t0=t0, converged_tol=converged_tol)
    if args.json:
        _dump_json(report.to_dict())
    else:
        for key, value in report.to_dict().items():
            print("%s = %r" % (key, value))
    return 0


# ---------------------------------------------------------------------------
# sweep


def cmd_sweep(args):
    cfg = _config_dict(args)
    beta = float(_merged(args, cfg, "beta", required=True))
    gammas = np.linspace(
        float(_merged(args, cfg, "gamma_min") or 0.1),
        float(_merged(args, cfg, "gamma_max") or 1.7),
        int(_merged(args, cfg, "gamma_count") or 25),
    )
    lam_lo = float(_merged(args, cfg, "lambda_min") or 1e-3)
    lam_hi = float(_merged(args, cfg, "lambda_max") or 1.0)
    lam_count = int(_merged(args, cfg, "lambda_count") or 25)
    if args.log_lambda:
        lambdas = np.geomspace(lam_lo, lam_hi, lam_count)
    else:
        lambdas = np.linspace(lam_lo, lam_hi, lam_count)

    reports = []
    for gamma in gammas:
        for lam in lambdas:
            reports.append(params_mod.params_report(params_mod.derive_params(gamma, lam, beta)))

    csv_path = _out_path(args, "sweep.csv")
    float_cols = ["gamma", "lambda", "beta", "L1", "L2", "L", "A", "B", "C", "c", "a", "b", "s", "p", "m", "r0"]
    flag_cols = ["rho_feasible", "corollary_feasible"]
    with open(csv_path, "w") as fh:
        fh.write(",".join(float_cols + flag_cols) + "\n")
        for report in reports:
            cells = ["%.17g" % (math.nan if report[col] is None else report[col]) for col in float_cols]
            cells += ["%d" % int(report[col]) for col in flag_cols]
            fh.write(",".join(cells) + "\n")

    feasible = [report for report in reports if report["rho_feasible"]]
    aborted = []
    run_config = _merged(args, cfg, "run_config")
    if run_config is not None:
        template = _load_json_object(run_config, "run config template")
        base_dir = os.path.dirname(os.path.abspath(run_config))
        parent_out = args.out_dir or "."
        for report in feasible:
            point_cfg = dict(template)
            point_cfg["gamma"] = report["gamma"]
            point_cfg["lambda"] = report["lambda"]
            sub_args = argparse.Namespace(
                out_dir=os.path.join(parent_out, "run_g%.6g_l%.6g" % (report["gamma"], report["lambda"])),
                json=False,
            )
            try:
                _execute_run(point_cfg, base_dir, sub_args)
            except (dynamics.IntegrationAborted, discrete_mod.DivergenceError) as exc:
                aborted.append({"gamma": report["gamma"], "lambda": report["lambda"], "error": str(exc)})
                print(
                    "warning: run at gamma=%.6g, lambda=%.6g aborted: %s"
                    % (report["gamma"], report["lambda"], exc),
                    file=sys.stderr,
                )

    if args.json:
        _dump_json(
            {
                "points": len(reports),
                "feasible": len(feasible),
                "sweep": csv_path,
                "runs": len(feasible) if run_config is not None else 0,
                "aborted": aborted,
            }
        )
    else:
        print("wrote %s" % csv_path)
        print("%d of %d grid points feasible" % (len(feasible), len(reports)))
        if run_config is not None:
            print("ran %d feasible points, %d aborted" % (len(feasible), len(aborted)))
    return 2 if aborted else 0


# ---------------------------------------------------------------------------
# parser


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON file supplying defaults for missing arguments")
    common.add_argument("--out-dir", metavar="DIR", help="directory for output files (default: current)")
    common.add_argument("--json", action="store_true", help="machine-readable stdout")

    parser = argparse.ArgumentParser(
        prog="proxdyn",
        description="Simulate the second-order proximal-gradient flow and its discrete algorithm.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[common], help="integrate a flow experiment from a JSON config")
    p_run.set_defaults(func=cmd_run)

    p_check = sub.add_parser("check-params", parents=[common], help="derive constants and feasibility verdicts")
    p_check.add_argument("--gamma", type=float)
    p_check.add_argument("--lambda", dest="lam", type=float)
    p_check.add_argument("--beta", type=float)
    p_check.set_defaults(func=cmd_check_params)

    p_disc = sub.add_parser("discrete", parents=[common], help="run the inertial iteration at unit step")
    p_disc.add_argument("--problem", help="problem JSON file (or inline JSON object text)")
    p_disc.add_argument("--lambda", dest="lam", type=float)
    p_disc.add_argument("--gamma", type=float, help="constant damping value")
    p_disc.add_argument("--x0", type=float, nargs="+")
    p_disc.add_argument("--x1", type=float, nargs="+", help="second iterate (default: x0)")
    p_disc.add_argument("--max-iter", dest="max_iter", type=int)
    p_disc.add_argument("--tol", type=float)
    p_disc.add_argument("--out", help="history CSV name (default history.csv)")
    p_disc.set_defaults(func=cmd_discrete)

    p_rates = sub.add_parser("rates", parents=[common], help="classify the decay rate of a trajectory CSV")
    p_rates.add_argument("--traj", help="trajectory CSV written by run")
    p_rates.add_argument("--x-limit", dest="x_limit", nargs="+", help="'auto' or the limit coordinates")
    p_rates.add_argument("--t0", help="'auto' or the fit-window start time")
    p_rates.add_argument("--converged-tol", dest="converged_tol", type=float,
                         help="reject trajectories whose final speed exceeds this")
    p_rates.set_defaults(func=cmd_rates)

    p_sweep = sub.add_parser("sweep", parents=[common], help="feasibility grid, optionally a run per feasible point")
    p_sweep.add_argument("--beta", type=float)
    p_sweep.add_argument("--gamma-min", dest="gamma_min", type=float)
    p_sweep.add_argument("--gamma-max", dest="gamma_max", type=float)
    p_sweep.add_argument("--gamma-count", dest="gamma_count", type=int)
    p_sweep.add_argument("--lambda-min", dest="lambda_min", type=float)
    p_sweep.add_argument("--lambda-max", dest="lambda_max", type=float)
    p_sweep.add_argument("--lambda-count", dest="lambda_count", type=int)
    p_sweep.add_argument("--log-lambda", dest="log_lambda", action="store_true",
                         help="space the lambda grid geometrically")
    p_sweep.add_argument("--run-config", dest="run_config", metavar="FILE",
                         help="experiment template to run at every feasible point")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (dynamics.IntegrationAborted, discrete_mod.DivergenceError) as exc:
        print("numerical abort: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, KeyError, TypeError, OSError) as exc:
        if isinstance(exc, KeyError):
            print("error: missing config key %s" % exc, file=sys.stderr)
        else:
            print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
