"""Command-line front end.

Every command writes a provenance header (``# key=value`` lines in CSV, a
``provenance`` object in JSON) holding the fully resolved configuration.
Passing that file back through ``--config`` reproduces the run; explicit
flags override values from the file.

Exit codes: 0 success, 2 invalid input, 3 above threshold / no steady
state, 4 unconverged oracle.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from pathlib import Path

from . import __version__
from .analytic import squeezing_percent, steady_moments, transient_moments
from .dynamics import MomentSeries, integrate_moments, sample_trajectories
from .errors import ConvergenceError, DomainError, ThresholdError, UnsupportedPhaseError
from .fock import snapshot_rows, steady_state
from .model import LaserParams, check_threshold, compute_coefficients
from .scan import (
    FIGURES, MASK_TOKEN, OBSERVABLES, Axis, SweepSpec, exact, find_optimum, fmt, run_sweep,
)

SCHEMA_VERSION = "1"
OUTPUT_DIR_ENV = "CASCADE_LASER_OUTPUT_DIR"

EXIT_OK, EXIT_INPUT, EXIT_THRESHOLD, EXIT_UNCONVERGED = 0, 2, 3, 4

PARAM_KEYS = ("gain_a", "kappa", "omega", "eta", "theta")
_KEY_ALIASES = {"A": "gain_a", "a": "gain_a"}
_KEY_RE = re.compile(r"^[A-Za-z_][\w\-]*$")

# (type, default) for every config key a command understands
NUMERICS = {
    "at_time": (float, None),
    "t_final": (float, None),
    "step": (float, None),
    "stride": (int, 1),
    "n_traj": (int, 10000),
    "seed": (int, 0),
    "workers": (int, 1),
    "n_max": (int, None),
    "tol": (float, 1e-8),
    "tail_tol": (float, 1e-10),
    "observable": (str, "var_minus"),
    "axis": (str, None),
    "figure": (str, None),
    "objective": (str, "min_var_minus"),
    "search": (str, None),
    "grid_points": (int, 201),
    "opt_tol": (float, 1e-4),
}

COMMAND_KEYS = {
    "coefficients": (),
    "variance": ("at_time",),
    "photon": ("at_time",),
    "simulate": ("t_final", "step", "stride", "n_traj", "seed", "workers"),
    "oracle": ("n_max", "tol", "tail_tol"),
    "sweep": ("observable", "axis", "figure"),
    "optimize": ("objective", "search", "grid_points", "opt_tol"),
}

SCHEMAS = {
    "coefficients": ["b", "c", "d", "c_e", "c_f", "mu", "beta", "lambda_minus", "lambda_plus",
                     "chi_plus", "chi_minus", "below_threshold", "margin"],
    "variance": ["alpha_sq_plus", "alpha_sq_minus", "var_plus", "var_minus", "mean_photon",
                 "squeezing_percent", "converges"],
    "photon": ["mean_photon", "alpha_sq_plus", "alpha_sq_minus", "var_plus", "var_minus",
               "converges"],
    "simulate": ["t_final", "step", "n_traj", "seed", "ode_alpha_sq_plus", "ode_alpha_sq_minus",
                 "analytic_alpha_sq_plus", "analytic_alpha_sq_minus", "ode_rel_err_plus",
                 "ode_rel_err_minus", "mc_alpha_sq_plus", "mc_alpha_sq_plus_se",
                 "mc_alpha_sq_minus", "mc_alpha_sq_minus_se", "z_plus", "z_minus",
                 "noise_sq_plus", "noise_sq_minus", "ode_mean_alpha_abs"],
    "simulate_series": list(MomentSeries.COLUMNS),
    "oracle": ["n_max", "t", "mean_photon", "var_plus", "var_minus", "heisenberg_product",
               "tail_population", "converged", "trace_error", "hermiticity_error",
               "min_eigenvalue", "delta_mean_photon", "delta_var_plus", "delta_var_minus"],
    "oracle_snapshot": ["n", "population"],
    "sweep": ["<axis names...>", "<observable>"],
    "optimize": ["objective", "gain_a", "kappa", "omega", "eta", "theta", "value",
                 "squeezing_percent", "evaluations"],
}


class InputError(Exception):
    pass


def read_config(path):
    """Flat key=value config; also accepts a previously emitted CSV or JSON file."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return {_KEY_ALIASES.get(k, k).replace("-", "_"): str(v)
                for k, v in data.get("provenance", data).items()}
    config = {}
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            line = line.lstrip("#").strip()
        if "=" not in line:
            continue
        key, value = line.split("=", 1)
        key = key.strip()
        if not _KEY_RE.match(key):
            continue
        key = _KEY_ALIASES.get(key, key).replace("-", "_")
        config[key] = value.strip()
    return config


def _add_params(p):
    g = p.add_argument_group("laser parameters (rates in units of gamma)")
    g.add_argument("--A", "--gain-a", dest="gain_a", type=float, help="linear gain coefficient A")
    g.add_argument("--kappa", type=float, help="cavity damping constant")
    g.add_argument("--omega", type=float, help="drive ratio Omega/gamma")
    g.add_argument("--eta", type=float, help="population parameter in [-1, 1]")
    g.add_argument("--theta", type=float, help="coherence phase (default 0)")


def _add_io(p):
    p.add_argument("--config", help="key=value file (or an earlier output) supplying defaults")
    p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")
    p.add_argument("--output", "-o", help=f"output path; relative paths go under ${OUTPUT_DIR_ENV}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cascade-laser",
        description="Squeezing and mean photon number of a driven degenerate cascade laser.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coefficients", help="coefficient set and threshold report")
    _add_params(p)
    _add_io(p)

    for name, helptext in (("variance", "quadrature variances"), ("photon", "mean photon number")):
        p = sub.add_parser(name, help=f"closed-form {helptext}")
        _add_params(p)
        _add_io(p)
        p.add_argument("--at-time", dest="at_time", type=float,
                       help="transient value at this time (vacuum start) instead of steady state")

    p = sub.add_parser("simulate", help="moment ODE and Langevin ensemble vs closed forms")
    _add_params(p)
    _add_io(p)
    p.add_argument("--t-final", dest="t_final", type=float, help="default 30/lambda_minus")
    p.add_argument("--step", type=float, help="default 0.01/max(lambda_plus, mu, 1)")
    p.add_argument("--stride", type=int, help="series output every N steps")
    p.add_argument("--n-traj", dest="n_traj", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--series", help="also write the moment time series to this CSV path")

    p = sub.add_parser("oracle", help="truncated Fock-basis master equation steady state")
    _add_params(p)
    _add_io(p)
    p.add_argument("--n-max", dest="n_max", type=int, help="truncation (default: automatic)")
    p.add_argument("--tol", type=float, help="stationarity tolerance per unit time")
    p.add_argument("--tail-tol", dest="tail_tol", type=float, help="allowed tail population")
    p.add_argument("--snapshot", help="also write diagonal populations to this CSV path")

    p = sub.add_parser("sweep", help="grid sweep of a steady-state observable")
    _add_params(p)
    _add_io(p)
    p.add_argument("--axis", action="append",
                   help="name:start:stop:num, repeatable (comma-separated list also accepted)")
    p.add_argument("--observable", choices=OBSERVABLES)
    p.add_argument("--figure", choices=sorted(FIGURES),
                   help="use a figure grid; axes and fixed parameters come from it")

    p = sub.add_parser("optimize", help="grid scan plus golden-section refinement")
    _add_params(p)
    _add_io(p)
    p.add_argument("--objective", choices=("min_var_minus", "max_mean_photon"))
    p.add_argument("--search", action="append", help="name:low:high, repeatable")
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--opt-tol", dest="opt_tol", type=float)

    p = sub.add_parser("schema", help="print the CSV/JSON output schemas")
    p.add_argument("--format", choices=("json",), default="json")
    return parser


def resolve(args):
    """Merge flags over config file over defaults; returns the provenance dict."""
    file_cfg = read_config(args.config) if getattr(args, "config", None) else {}
    cfg = {}

    def pick(key, cast, default):
        value = getattr(args, key, None)
        if isinstance(value, list):
            value = ",".join(value)
        if value is None and key in file_cfg:
            try:
                value = cast(file_cfg[key])
            except ValueError as exc:
                raise InputError(f"bad config value {key}={file_cfg[key]!r}") from exc
        return default if value is None else value

    for key in PARAM_KEYS:
        cfg[key] = pick(key, float, 0.0 if key == "theta" else None)
    for key in COMMAND_KEYS[args.command]:
        cast, default = NUMERICS[key]
        cfg[key] = pick(key, cast, default)
    cfg["format"] = pick("format", str, "csv")
    if cfg["format"] not in ("csv", "json"):
        raise InputError(f"format must be csv or json, got {cfg['format']!r}")
    return cfg


def _params(cfg, required=PARAM_KEYS):
    missing = [k for k in required if cfg.get(k) is None]
    if missing:
        raise InputError("missing parameters: " + ", ".join("--" + ("A" if k == "gain_a" else k)
                                                           for k in missing))
    return LaserParams(**{k: cfg[k] for k in PARAM_KEYS})


def _header(command, cfg):
    head = {"schema": f"{command}/{SCHEMA_VERSION}", "version": __version__, "command": command}
    for key, value in cfg.items():
        if value is None:
            continue
        if isinstance(value, bool):
            head[key] = str(value).lower()
        elif isinstance(value, float):
            head[key] = exact(value)
        else:
            head[key] = str(value)
    return head


def _cell(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return fmt(value)
    return str(value)


def _json_value(value):
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            return str(value)
        return float(fmt(value))
    return str(value)


def render_record(command, cfg, record):
    head = _header(command, cfg)
    if cfg["format"] == "json":
        body = {"provenance": head, "data": {k: _json_value(v) for k, v in record.items()}}
        return json.dumps(body, indent=2) + "\n"
    lines = [f"# {k}={v}" for k, v in head.items()]
    lines.append(",".join(record))
    lines.append(",".join(_cell(v) for v in record.values()))
    return "\n".join(lines) + "\n"


def render_table(command, cfg, columns, rows):
    head = _header(command, cfg)
    if cfg["format"] == "json":
        body = {
            "provenance": head,
            "columns": list(columns),
            "rows": [[_json_value(v) for v in row] for row in rows],
        }
        return json.dumps(body, indent=2) + "\n"
    lines = [f"# {k}={v}" for k, v in head.items()]
    lines.append(",".join(columns))
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _resolve_path(path):
    base = os.environ.get(OUTPUT_DIR_ENV)
    p = Path(path)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text, output):
    if output:
        _resolve_path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_coefficients(cfg):
    params = _params(cfg)
    coeffs = compute_coefficients(params)
    report = check_threshold(coeffs)
    record = {k: getattr(coeffs, k) for k in SCHEMAS["coefficients"][:11]}
    record["below_threshold"] = report.below_threshold
    record["margin"] = report.margin
    return render_record("coefficients", cfg, record)


def _moments_record(cfg):
    params = _params(cfg)
    if cfg.get("at_time") is not None:
        return transient_moments(params, cfg["at_time"])
    return steady_moments(params)


def cmd_variance(cfg):
    m = _moments_record(cfg)
    record = m.as_dict()
    record["squeezing_percent"] = squeezing_percent(m.var_minus)
    record["converges"] = m.converges
    return render_record("variance", cfg, record)


def cmd_photon(cfg):
    m = _moments_record(cfg)
    d = m.as_dict()
    record = {"mean_photon": d.pop("mean_photon"), **d, "converges": m.converges}
    return render_record("photon", cfg, record)


def cmd_simulate(cfg, series_path=None):
    params = _params(cfg)
    coeffs = compute_coefficients(params)
    report = check_threshold(coeffs)
    if not report.below_threshold:
        raise ThresholdError("simulation needs a steady state",
                             report.lambda_minus, report.lambda_plus)
    if cfg["t_final"] is None:
        cfg["t_final"] = 30.0 / coeffs.lambda_minus
    if cfg["step"] is None:
        cfg["step"] = 0.01 / max(coeffs.lambda_plus, coeffs.mu, 1.0)
    series = integrate_moments(params, cfg["t_final"], cfg["step"], stride=cfg["stride"])
    final = series.final
    exact_t = transient_moments(params, cfg["t_final"])
    ens = sample_trajectories(params, cfg["n_traj"], cfg["t_final"], cfg["step"],
                              seed=cfg["seed"], workers=cfg["workers"])
    z_plus, z_minus = ens.z_scores(exact_t.alpha_sq_plus, exact_t.alpha_sq_minus)

    def rel(a, b):
        return abs(a - b) / abs(b) if b else abs(a - b)

    record = {
        "t_final": cfg["t_final"],
        "step": cfg["step"],
        "n_traj": cfg["n_traj"],
        "seed": cfg["seed"],
        "ode_alpha_sq_plus": final.alpha_sq_plus,
        "ode_alpha_sq_minus": final.alpha_sq_minus,
        "analytic_alpha_sq_plus": exact_t.alpha_sq_plus,
        "analytic_alpha_sq_minus": exact_t.alpha_sq_minus,
        "ode_rel_err_plus": rel(final.alpha_sq_plus, exact_t.alpha_sq_plus),
        "ode_rel_err_minus": rel(final.alpha_sq_minus, exact_t.alpha_sq_minus),
        "mc_alpha_sq_plus": ens.alpha_sq_plus,
        "mc_alpha_sq_plus_se": ens.alpha_sq_plus_se,
        "mc_alpha_sq_minus": ens.alpha_sq_minus,
        "mc_alpha_sq_minus_se": ens.alpha_sq_minus_se,
        "z_plus": z_plus,
        "z_minus": z_minus,
        "noise_sq_plus": ens.noise_sq_plus,
        "noise_sq_minus": ens.noise_sq_minus,
        "ode_mean_alpha_abs": abs(final.mean_alpha),
    }
    if series_path:
        series_cfg = dict(cfg, format="csv")
        _emit(render_table("simulate_series", series_cfg, MomentSeries.COLUMNS,
                           list(series.rows())), series_path)
    return render_record("simulate", cfg, record)


def cmd_oracle(cfg, snapshot_path=None, output=None):
    params = _params(cfg)
    try:
        result = steady_state(params, n_max=cfg["n_max"], tol=cfg["tol"], tail_tol=cfg["tail_tol"])
    except ConvergenceError as exc:
        # the diagnostics are still worth having
        _emit(render_record("oracle", cfg, _oracle_record(params, exc.result)), output)
        raise
    if snapshot_path:
        _emit(render_table("oracle_snapshot", dict(cfg, format="csv"), ("n", "population"),
                           list(snapshot_rows(result.rho))), snapshot_path)
    return render_record("oracle", cfg, _oracle_record(params, result))


def _oracle_record(params, result):
    m = result.moments
    record = {
        "n_max": result.n_max,
        "t": result.rho.t,
        "mean_photon": m.mean_photon,
        "var_plus": m.var_plus,
        "var_minus": m.var_minus,
        "heisenberg_product": result.heisenberg_product,
        "tail_population": result.tail_population,
        "converged": result.converged,
        "trace_error": result.trace_error,
        "hermiticity_error": result.hermiticity_error,
        "min_eigenvalue": result.min_eigenvalue,
    }
    delta = {"delta_mean_photon": "nan", "delta_var_plus": "nan", "delta_var_minus": "nan"}
    if params.theta == 0.0:
        try:
            ref = steady_moments(params)
        except ThresholdError:
            ref = None
        if ref is not None:
            delta = {
                "delta_mean_photon": m.mean_photon - ref.mean_photon,
                "delta_var_plus": m.var_plus - ref.var_plus,
                "delta_var_minus": m.var_minus - ref.var_minus,
            }
    record.update(delta)
    return record


def _sweep_spec(cfg):
    if cfg.get("figure"):
        fig = FIGURES[cfg["figure"]]
        fixed = dict(fig["fixed"])
        if "family" in fig:
            if cfg["gain_a"] is None:
                raise InputError(f"{cfg['figure']} is a family of curves; pass --A")
            fixed["gain_a"] = cfg["gain_a"]
        axes = [Axis.parse(f"{t}:201") for t in fig["axes"]]
        if cfg.get("axis"):
            # explicit axes override the figure's resolution/ranges
            axes = [Axis.parse(t) for t in cfg["axis"].split(",")]
        observable = fig["observable"]
        for key in PARAM_KEYS:
            if key not in fixed and key not in {a.name for a in axes}:
                fixed[key] = 0.0 if key == "theta" else cfg.get(key)
        cfg.update({k: fixed.get(k) for k in PARAM_KEYS})
        cfg["axis"] = ",".join(str(a) for a in axes)
        cfg["observable"] = observable
    else:
        if not cfg.get("axis"):
            raise InputError("sweep needs --axis or --figure")
        axes = [Axis.parse(t) for t in cfg["axis"].split(",")]
        swept = {a.name for a in axes}
        fixed = {k: cfg[k] for k in PARAM_KEYS if k not in swept and cfg.get(k) is not None}
        observable = cfg["observable"]
        for k in swept:
            cfg[k] = None
    try:
        return SweepSpec(tuple(axes), fixed, observable)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_sweep(cfg):
    spec = _sweep_spec(cfg)
    result = run_sweep(spec, workers=1)
    columns = [a.name for a in spec.axes] + [spec.observable]
    rows = [list(coord) + [MASK_TOKEN if v is None else v] for coord, v in result.points()]
    return render_table("sweep", cfg, columns, rows)


def cmd_optimize(cfg):
    if not cfg.get("search"):
        raise InputError("optimize needs at least one --search name:low:high")
    bounds = {}
    for item in cfg["search"].split(","):
        try:
            name, lo, hi = item.split(":")
            bounds[_KEY_ALIASES.get(name, name)] = (float(lo), float(hi))
        except ValueError as exc:
            raise InputError(f"bad search range {item!r}") from exc
    fixed = {k: cfg[k] for k in PARAM_KEYS if k not in bounds}
    missing = [k for k, v in fixed.items() if v is None]
    if missing:
        raise InputError("missing fixed parameters: " + ", ".join(missing))
    for k in bounds:
        cfg[k] = None
    res = find_optimum(cfg["objective"], fixed, bounds,
                       grid_points=cfg["grid_points"], tol=cfg["opt_tol"])
    m = steady_moments(res.params)
    record = {"objective": res.objective}
    record.update({k: getattr(res.params, k) for k in PARAM_KEYS})
    record["value"] = res.value
    record["squeezing_percent"] = squeezing_percent(m.var_minus)
    record["evaluations"] = res.evaluations
    return render_record("optimize", cfg, record)


def cmd_schema():
    body = {"schema_version": SCHEMA_VERSION, "version": __version__,
            "mask_token": MASK_TOKEN, "outputs": SCHEMAS}
    return json.dumps(body, indent=2) + "\n"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "schema":
            sys.stdout.write(cmd_schema())
            return EXIT_OK
        cfg = resolve(args)
        if args.command == "coefficients":
            text = cmd_coefficients(cfg)
        elif args.command == "variance":
            text = cmd_variance(cfg)
        elif args.command == "photon":
            text = cmd_photon(cfg)
        elif args.command == "simulate":
            text = cmd_simulate(cfg, args.series)
        elif args.command == "oracle":
            text = cmd_oracle(cfg, args.snapshot, args.output)
        elif args.command == "sweep":
            text = cmd_sweep(cfg)
        else:
            text = cmd_optimize(cfg)
        _emit(text, args.output)
    except ThresholdError as exc:
        print(f"error: above threshold: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    except (InputError, DomainError, UnsupportedPhaseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
