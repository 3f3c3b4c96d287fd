"""Command-line experiment runner.

Usage: ``crossflow {validate,stationary,evolve,rates,nonconvexity} --config FILE``.
Exit codes: 0 ok, 1 configuration error, 2 hypothesis violation, 3 solver error.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from ._validation import CrossflowError, ParameterError, ValidationError
from .evolution import COLUMNS, JkoConfig, evolve
from .experiments import nonconvexity_table, perturbation_suite, rate_sweep, shifted_pair
from .grid import Grid1D
from .hypotheses import validate
from .model import power_model
from .stationary import solve_stationary, stationary_residual

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESIS, EXIT_SOLVER = 0, 1, 2, 3

# block -> key -> (type, default); None default means required
SCHEMA = {
    "model": {
        "m": (float, 2.0),
        "n": (float, 2.0),
        "p": (float, 4.0),
        "q": (float, 4.0),
        "lambda": (float, 1.0),
        "eps": (float, 0.0),
        "lambda_conv": (float, 1.0),
        "center_u": (float, 0.0),
        "center_v": (float, 0.0),
        "zero_coupling": (bool, False),
    },
    "grid": {"x_min": (float, -3.0), "x_max": (float, 3.0), "n": (int, 512)},
    "jko": {
        "tau": (float, 1e-2),
        "t_end": (float, 3.0),
        "nq": (int, 1024),
        "inner_tol": (float, None),
        "inner_max_iter": (int, 200),
    },
    "experiment": {
        "name": (str, "run"),
        "k": (int, 2),
        "eps_sweep": (list, None),
        "omegas": (list, [10.0, 20.0, 40.0]),
        "init": (str, "shifted"),
        "shift_u": (float, 0.3),
        "shift_v": (float, -0.2),
        "amplitude": (float, 0.3),
        "seed": (int, 0),
    },
    "output": {"directory": (str, "out"), "format": (str, "csv")},
}
NULLABLE = {("jko", "inner_tol"), ("experiment", "eps_sweep")}
INIT_KINDS = {"stationary", "shifted", "random"}


class ConfigError(CrossflowError):
    pass


def _coerce(block, key, typ, value):
    if value is None and (block, key) in NULLABLE:
        return None
    if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if typ in (bool, str, list) and isinstance(value, typ):
        return value
    raise ConfigError(f"{block}.{key}: expected {typ.__name__}, got {value!r}")


def load_config(text):
    """Parse, reject unknown keys, fill defaults and return a plain dict."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config blocks: {sorted(unknown)}")
    cfg = {}
    for block, keys in SCHEMA.items():
        given = raw.get(block, {})
        if not isinstance(given, dict):
            raise ConfigError(f"block {block!r} must be an object")
        bad = set(given) - set(keys)
        if bad:
            raise ConfigError(f"unknown keys in {block!r}: {sorted(bad)}")
        cfg[block] = {k: _coerce(block, k, t, given[k]) if k in given else d for k, (t, d) in keys.items()}
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    if cfg["experiment"]["init"] not in INIT_KINDS:
        raise ConfigError(f"experiment.init must be one of {sorted(INIT_KINDS)}")
    for key in ("eps_sweep", "omegas"):
        vals = cfg["experiment"][key]
        if vals is not None and not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            raise ConfigError(f"experiment.{key} must be a list of numbers")
    return cfg


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_params(cfg, eps=None):
    m = cfg["model"]
    if m["m"] < 2 or m["n"] < 2:
        raise ConfigError("model.m and model.n must be >= 2")
    try:
        return power_model(
            m=m["m"],
            n=m["n"],
            p=m["p"],
            q=m["q"],
            lam=m["lambda"],
            eps=m["eps"] if eps is None else eps,
            lambda_conv=m["lambda_conv"],
            center_u=m["center_u"],
            center_v=m["center_v"],
            zero=m["zero_coupling"],
        )
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"invalid model block: {exc}") from exc


def build_grid(cfg):
    g = cfg["grid"]
    try:
        return Grid1D(g["x_min"], g["x_max"], g["n"])
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"invalid grid block: {exc}") from exc


def build_jko(cfg):
    j = cfg["jko"]
    try:
        return JkoConfig(j["tau"], j["t_end"], j["nq"], j["inner_tol"], j["inner_max_iter"])
    except (ParameterError, ValueError) as exc:
        raise ConfigError(f"invalid jko block: {exc}") from exc


def _fmt(v):
    return f"{v:.17g}" if isinstance(v, float) else str(v)


def _write_table(path, header, columns, rows, fmt):
    if fmt == "json":
        doc = dict(header)
        doc["columns"] = list(columns)
        doc["rows"] = [list(r) for r in rows]
        path = path.parent / (path.name + ".json")
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        path = path.parent / (path.name + ".csv")
        lines = ["# " + json.dumps(header, sort_keys=True), ",".join(columns)]
        lines += [",".join(_fmt(v) for v in r) for r in rows]
        path.write_text("\n".join(lines) + "\n")
    return path


def _eps_list(cfg, default):
    sweep = cfg["experiment"]["eps_sweep"]
    return sorted(float(e) for e in sweep) if sweep else default


def cmd_validate(cfg, out, fmt, threads):
    params = build_params(cfg)
    state = solve_stationary(params, build_grid(cfg))
    report = validate(params, k=cfg["experiment"]["k"], state=state)
    path = out / "hypotheses.json"
    path.write_text(report.to_json(config_hash=config_hash(cfg)) + "\n")
    for name, detail in report.violations:
        print(f"violation: {name} {json.dumps(detail, sort_keys=True, default=str)}")
    print(f"eps_star={report.eps_star:.6g} eps_bar={report.eps_bar:.6g} -> {path}")
    return EXIT_HYPOTHESIS if report.violations else EXIT_OK


def cmd_stationary(cfg, out, fmt, threads):
    grid = build_grid(cfg)
    for eps in _eps_list(cfg, [cfg["model"]["eps"]]):
        params = build_params(cfg, eps)
        state = solve_stationary(params, grid)
        res = stationary_residual(params, state)
        head = state.header()
        head.update(config_hash=config_hash(cfg), residual=res)
        stem = out / f"stationary_eps{eps:g}"
        if fmt == "json":
            cols = ("x", "ubar", "vbar", "theta_bar_u", "theta_bar_v")
            rows = zip(grid.centers, state.ubar.values, state.vbar.values, state.theta_bar_u, state.theta_bar_v)
            path = _write_table(stem, head, cols, [tuple(float(c) for c in r) for r in rows], "json")
        else:
            path = out / (stem.name + ".csv")
            path.write_text(state.to_csv({"config_hash": config_hash(cfg), "residual": res}))
        print(
            f"eps={eps:g} U={state.u_eps:.8f} V={state.v_eps:.8f} "
            f"supp_u=[{state.support_u[0]:.6f}, {state.support_u[1]:.6f}] "
            f"supp_v=[{state.support_v[0]:.6f}, {state.support_v[1]:.6f}] residual={res:.3e} -> {path}"
        )
    return EXIT_OK


def _initial_pair(cfg, state, seed):
    e = cfg["experiment"]
    if e["init"] == "stationary":
        return state.ubar, state.vbar
    if e["init"] == "random":
        return perturbation_suite(state, 1, seed, max_amplitude=e["amplitude"])[0]
    return shifted_pair(state, (e["shift_u"], e["shift_v"]), e["amplitude"])


def cmd_evolve(cfg, out, fmt, threads):
    params = build_params(cfg)
    grid = build_grid(cfg)
    jko = build_jko(cfg)
    state = solve_stationary(params, grid)
    init = _initial_pair(cfg, state, cfg["experiment"]["seed"])
    traj = evolve(params, init, jko, state=state, keep_snapshots=False)
    head = dict(traj.meta)
    head["config_hash"] = config_hash(cfg)
    path = _write_table(out / "trajectory", head, COLUMNS, traj.rows, fmt)
    print(f"{len(traj.rows) - 1} steps, L: {traj.rows[0][2]:.4e} -> {traj.rows[-1][2]:.4e} -> {path}")
    return EXIT_OK


def cmd_rates(cfg, out, fmt, threads):
    params = build_params(cfg)
    e = cfg["experiment"]
    rows, k_hat, _ = rate_sweep(
        params,
        build_grid(cfg),
        build_jko(cfg),
        _eps_list(cfg, [0.0, 0.02, 0.05]),
        shift=(e["shift_u"], e["shift_v"]),
        amplitude=e["amplitude"],
        workers=threads,
    )
    head = {"config_hash": config_hash(cfg), "k_hat": k_hat, "lambda_conv": params.lambda_conv}
    path = _write_table(out / "rates", head, ("eps", "fitted_rate", "gap_to_2lambda"), rows, fmt)
    for eps, rate, gap in rows:
        print(f"eps={eps:g} rate={rate:.6f} 2*Lambda-rate={gap:.6f}")
    print(f"K_hat={k_hat:.6g} -> {path}")
    return EXIT_OK


def cmd_nonconvexity(cfg, out, fmt, threads):
    params = build_params(cfg)
    rows = nonconvexity_table(params, cfg["experiment"]["omegas"])
    head = {"config_hash": config_hash(cfg), "eps": params.eps}
    path = _write_table(out / "nonconvexity", head, ("omega", "second_difference"), rows, fmt)
    for w, d in rows:
        print(f"omega={w:g} second_difference={d:.6e}")
    print(f"-> {path}")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "stationary": cmd_stationary,
    "evolve": cmd_evolve,
    "rates": cmd_rates,
    "nonconvexity": cmd_nonconvexity,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="crossflow", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON config file")
    ap.add_argument("--out", default=None, help="output directory (default: output.directory or ./out)")
    ap.add_argument("--format", choices=("csv", "json"), default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(Path(args.config).read_text())
        if args.seed is not None:
            cfg["experiment"]["seed"] = args.seed
        if args.format is not None:
            cfg["output"]["format"] = args.format
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out if args.out is not None else cfg["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg["experiment"]["seed"])
    try:
        return COMMANDS[args.command](cfg, out, cfg["output"]["format"], args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except CrossflowError as exc:
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
