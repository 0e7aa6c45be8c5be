"""Command-line entry point.

Subcommands: simulate | converge | filter-rates | periodic | diagnose.
Configs are JSON (key-value with nesting); every key is validated before any
computation starts, unknown and duplicate keys are rejected.  Exit codes:
0 success, 1 configuration error, 2 blow-up.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import reports
from .dynamics import ModalPeriodicForcing, ModelParams, NoForcing, SteadyForcing
from .experiments import (
    ConvergenceStudySpec,
    DatumSpec,
    run_alpha_beta_convergence,
    run_alpha_convergence,
    run_filter_rates,
    run_nsv_convergence,
)
from .integrate import (
    BlowUpError,
    SimulationState,
    StepperConfig,
    integrate,
    voigt_energy,
)
from .periodic_orbit import (
    PoincareConfig,
    absorbing_radius,
    find_periodic_solution,
    linear_periodic_response,
)
from .snapshot import load_snapshot, save_snapshot
from .field import sobolev_norm, zero_field
from .grid import TorusGrid

__all__ = ["ConfigError", "RunConfig", "parse_config", "run", "main", "entry"]

SUBCOMMANDS = ("simulate", "converge", "filter-rates", "periodic", "diagnose")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    payload: dict
    outdir: str
    seed: int


# ---------------------------------------------------------------------------
# validation helpers

_REQUIRED = object()


def _path(prefix, key):
    return f"{prefix}.{key}" if prefix else key


def _reject_unknown(d, allowed, prefix):
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {_path(prefix, key)!r}")


def _duplicate_guard(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise ConfigError(f"duplicate key {key!r}")
        out[key] = value
    return out


def _get(d, key, kind, prefix="", default=_REQUIRED, minimum=None,
         exclusive=False, choices=None):
    name = _path(prefix, key)
    if key not in d:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {name!r}")
        return default
    value = d[key]
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: must be a number, got {value!r}")
        value = float(value)
        if not np.isfinite(value):
            raise ConfigError(f"{name}: must be finite, got {value!r}")
    elif kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: must be an integer, got {value!r}")
    elif kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: must be a boolean, got {value!r}")
    elif kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{name}: must be a string, got {value!r}")
    elif kind == "dict":
        if not isinstance(value, dict):
            raise ConfigError(f"{name}: must be an object, got {value!r}")
    elif kind == "list":
        if not isinstance(value, list):
            raise ConfigError(f"{name}: must be a list, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(f"{name}: must be one of {sorted(choices)}, got {value!r}")
    if minimum is not None:
        if exclusive and not value > minimum:
            raise ConfigError(f"{name}: must be > {minimum}, got {value}")
        if not exclusive and not value >= minimum:
            raise ConfigError(f"{name}: must be >= {minimum}, got {value}")
    return value


def _number_list(d, key, prefix, default=_REQUIRED, positive=True):
    raw = _get(d, key, "list", prefix, default=default)
    if raw is default and default is not _REQUIRED:
        return default
    name = _path(prefix, key)
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{name}[{i}]: must be a number, got {v!r}")
        if positive and not v > 0:
            raise ConfigError(f"{name}[{i}]: must be > 0, got {v}")
        out.append(float(v))
    return tuple(out)


def _parse_grid(d, prefix):
    grid = _get(d, "grid", "dict", prefix, default={})
    _reject_unknown(grid, {"n"}, _path(prefix, "grid"))
    n = _get(grid, "n", "int", _path(prefix, "grid"), default=32, minimum=8)
    if n % 2:
        raise ConfigError(f"{_path(prefix, 'grid')}.n: must be even, got {n}")
    return n


def _parse_model(d, prefix, default_alpha=0.0, default_nu=0.0):
    model = _get(d, "model", "dict", prefix, default={})
    _reject_unknown(model, {"alpha", "nu"}, _path(prefix, "model"))
    alpha = _get(model, "alpha", "float", _path(prefix, "model"), default=default_alpha, minimum=0.0)
    nu = _get(model, "nu", "float", _path(prefix, "model"), default=default_nu, minimum=0.0)
    return ModelParams(alpha, nu)


def _parse_stepper(d, prefix, default_dt=1e-3, default_interval=10):
    st = _get(d, "stepper", "dict", prefix, default={})
    _reject_unknown(st, {"dt", "record_interval"}, _path(prefix, "stepper"))
    dt = _get(st, "dt", "float", _path(prefix, "stepper"), default=default_dt, minimum=0.0, exclusive=True)
    interval = _get(st, "record_interval", "int", _path(prefix, "stepper"),
                    default=default_interval, minimum=1)
    return StepperConfig(dt, interval)


def _parse_datum(d, prefix, default_seed):
    datum = _get(d, "initial", "dict", prefix, default={"kind": "taylor_green"})
    name = _path(prefix, "initial")
    kind = _get(datum, "kind", "str", name, default="taylor_green",
                choices={"taylor_green", "random"})
    if kind == "taylor_green":
        _reject_unknown(datum, {"kind", "amplitude"}, name)
        amp = _get(datum, "amplitude", "float", name, default=1.0)
        return DatumSpec(kind="taylor_green", amplitude=amp)
    _reject_unknown(datum, {"kind", "decay", "h3_norm", "seed"}, name)
    decay = _get(datum, "decay", "float", name, default=5.0, minimum=1.5, exclusive=True)
    h3 = _get(datum, "h3_norm", "float", name, default=1.0, minimum=0.0, exclusive=True)
    seed = _get(datum, "seed", "int", name, default=default_seed)
    return DatumSpec(kind="random", decay=decay, h3_norm=h3, seed=seed)


def _complex_triple(raw, name):
    if not isinstance(raw, list) or len(raw) != 3:
        raise ConfigError(f"{name}: must be a list of 3 entries, got {raw!r}")
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            out.append(complex(v))
        elif (
            isinstance(v, list)
            and len(v) == 2
            and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)
        ):
            out.append(complex(v[0], v[1]))
        else:
            raise ConfigError(f"{name}[{i}]: must be a number or [re, im] pair, got {v!r}")
    return tuple(out)


def _parse_forcing(d, prefix, default_kind="none"):
    forcing = _get(d, "forcing", "dict", prefix, default={"kind": default_kind})
    name = _path(prefix, "forcing")
    kind = _get(forcing, "kind", "str", name,
                choices={"none", "modal_periodic", "steady"})
    if kind == "none":
        _reject_unknown(forcing, {"kind"}, name)
        return {"kind": "none"}
    if kind == "steady":
        _reject_unknown(forcing, {"kind", "snapshot"}, name)
        return {"kind": "steady", "snapshot": _get(forcing, "snapshot", "str", name)}
    _reject_unknown(forcing, {"kind", "mode", "amplitude", "omega"}, name)
    mode_raw = _get(forcing, "mode", "list", name)
    if len(mode_raw) != 3 or any(isinstance(v, bool) or not isinstance(v, int) for v in mode_raw):
        raise ConfigError(f"{name}.mode: must be a list of 3 integers, got {mode_raw!r}")
    if not any(mode_raw):
        raise ConfigError(f"{name}.mode: must be nonzero")
    amplitude = _complex_triple(_get(forcing, "amplitude", "list", name),
                                f"{name}.amplitude")
    omega = _get(forcing, "omega", "float", name)
    try:
        ModalPeriodicForcing(tuple(mode_raw), amplitude, omega)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    return {
        "kind": "modal_periodic",
        "mode": tuple(mode_raw),
        "amplitude": amplitude,
        "omega": omega,
    }


def _build_forcing(parsed):
    if parsed["kind"] == "none":
        return NoForcing()
    if parsed["kind"] == "modal_periodic":
        return ModalPeriodicForcing(parsed["mode"], parsed["amplitude"], parsed["omega"])
    field = load_snapshot(parsed["snapshot"])
    return SteadyForcing(field)


# ---------------------------------------------------------------------------
# per-subcommand payload validation

_COMMON_KEYS = {"seed", "out"}


def _validate_simulate(d):
    _reject_unknown(
        d,
        _COMMON_KEYS | {"grid", "model", "stepper", "horizon", "initial", "forcing", "save_snapshot"},
        "",
    )
    seed = _get(d, "seed", "int", default=0)
    return {
        "grid_n": _parse_grid(d, ""),
        "params": _parse_model(d, ""),
        "stepper": _parse_stepper(d, ""),
        "horizon": _get(d, "horizon", "float", default=0.5, minimum=0.0, exclusive=True),
        "datum": _parse_datum(d, "", seed),
        "forcing": _parse_forcing(d, ""),
        "save_snapshot": _get(d, "save_snapshot", "bool", default=False),
    }


def _validate_converge(d):
    _reject_unknown(
        d,
        _COMMON_KEYS
        | {"kind", "alphas", "betas", "nus", "m", "horizon", "grid", "dt",
           "record_interval", "initial"},
        "",
    )
    kind = _get(d, "kind", "str",
                choices={"alpha_only", "alpha_beta", "alpha_beta_nu"})
    seed = _get(d, "seed", "int", default=0)
    default_m = 2.0 if kind == "alpha_only" else 3.0
    try:
        spec = ConvergenceStudySpec(
            kind=kind,
            alphas=_number_list(d, "alphas", "", default=None),
            betas=_number_list(d, "betas", "", default=None),
            nus=_number_list(d, "nus", "", default=None),
            m=_get(d, "m", "float", default=default_m),
            horizon=_get(d, "horizon", "float", default=0.5, minimum=0.0, exclusive=True),
            n_modes=_parse_grid(d, ""),
            dt=_get(d, "dt", "float", default=1e-3, minimum=0.0, exclusive=True),
            record_interval=_get(d, "record_interval", "int", default=25, minimum=1),
            datum=_parse_datum(d, "", seed),
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return {"spec": spec}


def _validate_filter_rates(d):
    _reject_unknown(d, _COMMON_KEYS | {"deltas", "grid", "initial"}, "")
    seed = _get(d, "seed", "int", default=0)
    datum = d.get("initial")
    if datum is None:
        datum_spec = DatumSpec(kind="random", decay=5.0, h3_norm=1.0, seed=seed)
    else:
        datum_spec = _parse_datum(d, "", seed)
        if datum_spec.kind != "random":
            raise ConfigError("initial.kind: filter rates require a random datum")
    try:
        spec = ConvergenceStudySpec(
            kind="filter_rates",
            deltas=_number_list(d, "deltas", ""),
            n_modes=_parse_grid(d, ""),
            datum=datum_spec,
            seed=seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return {"spec": spec}


def _validate_periodic(d):
    _reject_unknown(
        d,
        _COMMON_KEYS
        | {"grid", "model", "forcing", "period", "dt", "tol", "max_iters", "guess",
           "save_snapshot"},
        "",
    )
    params = _parse_model(d, "", default_nu=0.05)
    if params.nu <= 0:
        raise ConfigError("model.nu: must be > 0 for periodic-orbit search")
    forcing = _parse_forcing(d, "", default_kind="modal_periodic")
    if forcing["kind"] != "modal_periodic":
        raise ConfigError("forcing.kind: must be 'modal_periodic' for periodic-orbit search")
    omega = forcing["omega"]
    if omega <= 0:
        raise ConfigError("forcing.omega: must be > 0, got " + repr(omega))
    period = _get(d, "period", "float", default=2.0 * np.pi / omega, minimum=0.0, exclusive=True)
    if abs(omega * period - 2.0 * np.pi) > 1e-9 * 2.0 * np.pi:
        raise ConfigError(
            f"period: must equal 2*pi/forcing.omega = {2.0 * np.pi / omega!r}, got {period!r}"
        )
    guess = _get(d, "guess", "dict", default={"kind": "zero"})
    _reject_unknown(guess, {"kind", "snapshot"}, "guess")
    guess_kind = _get(guess, "kind", "str", "guess", default="zero",
                      choices={"zero", "linear_response", "snapshot"})
    guess_snapshot = None
    if guess_kind == "snapshot":
        guess_snapshot = _get(guess, "snapshot", "str", "guess")
    return {
        "grid_n": _parse_grid(d, ""),
        "params": params,
        "forcing": forcing,
        "period": period,
        "dt": _get(d, "dt", "float", default=5e-3, minimum=0.0, exclusive=True),
        "tol": _get(d, "tol", "float", default=1e-9, minimum=0.0, exclusive=True),
        "max_iters": _get(d, "max_iters", "int", default=200, minimum=1),
        "guess_kind": guess_kind,
        "guess_snapshot": guess_snapshot,
        "save_snapshot": _get(d, "save_snapshot", "bool", default=True),
    }


def _validate_diagnose(d):
    _reject_unknown(d, _COMMON_KEYS | {"snapshot", "model"}, "")
    return {
        "snapshot": _get(d, "snapshot", "str"),
        "params": _parse_model(d, ""),
    }


_VALIDATORS = {
    "simulate": _validate_simulate,
    "converge": _validate_converge,
    "filter-rates": _validate_filter_rates,
    "periodic": _validate_periodic,
    "diagnose": _validate_diagnose,
}


def parse_config(subcommand, text, out_override=None, seed_override=None):
    """Validate a JSON config for the given subcommand into a RunConfig.

    Raises ConfigError naming the offending key and constraint; no
    computation happens until validation is complete."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    try:
        raw = json.loads(text, object_pairs_hook=_duplicate_guard)
    except ConfigError:
        raise
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    payload = _VALIDATORS[subcommand](raw)
    seed = _get(raw, "seed", "int", default=0)
    outdir = _get(raw, "out", "str", default="out")
    if seed_override is not None:
        seed = seed_override
    if out_override is not None:
        outdir = out_override
    return RunConfig(subcommand, payload, outdir, seed)


# ---------------------------------------------------------------------------
# runners


def _run_simulate(cfg, threads):
    p = cfg.payload
    grid = TorusGrid(p["grid_n"])
    u0 = p["datum"].build(grid, default_seed=cfg.seed)
    forcing = _build_forcing(p["forcing"])
    written = []
    code = 0
    try:
        traj = integrate(
            SimulationState(0.0, u0), p["horizon"], p["stepper"], p["params"], forcing
        )
        diagnostics = traj.diagnostics
        final = traj.final_state.u
    except BlowUpError as exc:
        diagnostics = exc.partial
        final = None
        code = 2
    reports.write_diagnostics_csv(os.path.join(cfg.outdir, "diagnostics.csv"), diagnostics)
    written.append("diagnostics.csv")
    reports.render_diagnostics_figure(
        diagnostics, os.path.join(cfg.outdir, "diagnostics.png")
    )
    written.append("diagnostics.png")
    if p["save_snapshot"] and final is not None:
        save_snapshot(os.path.join(cfg.outdir, "final.voig"), final)
        written.append("final.voig")
    reports.write_manifest(cfg.outdir, "simulate", cfg.seed, written)
    return code


def _run_converge(cfg, threads):
    spec = cfg.payload["spec"]
    runner = {
        "alpha_only": run_alpha_convergence,
        "alpha_beta": run_alpha_beta_convergence,
        "alpha_beta_nu": run_nsv_convergence,
    }[spec.kind]
    report = runner(spec, n_jobs=threads)
    written = []
    reports.write_report_csv(os.path.join(cfg.outdir, "report.csv"), report)
    written.append("report.csv")
    reports.write_json(os.path.join(cfg.outdir, "report.json"), report.to_json_dict())
    written.append("report.json")
    xlabel = "alpha" if spec.kind == "alpha_only" else "beta"
    reports.render_convergence_figure(
        report, os.path.join(cfg.outdir, "report.png"), xlabel=xlabel
    )
    written.append("report.png")
    reports.write_manifest(cfg.outdir, "converge", cfg.seed, written)
    return 0


def _run_filter_rates(cfg, threads):
    spec = cfg.payload["spec"]
    series = run_filter_rates(spec)
    written = []
    sidecar = {}
    for name, report in series.items():
        csv_name = f"rates_{name}.csv"
        reports.write_report_csv(os.path.join(cfg.outdir, csv_name), report)
        written.append(csv_name)
        sidecar[name] = report.to_json_dict()
    reports.write_json(os.path.join(cfg.outdir, "rates.json"), sidecar)
    written.append("rates.json")
    reports.render_filter_rates_figure(series, os.path.join(cfg.outdir, "rates.png"))
    written.append("rates.png")
    reports.write_manifest(cfg.outdir, "filter-rates", cfg.seed, written)
    return 0


def _run_periodic(cfg, threads):
    p = cfg.payload
    grid = TorusGrid(p["grid_n"])
    forcing = _build_forcing(p["forcing"])
    config = PoincareConfig(
        period=p["period"],
        params=p["params"],
        forcing=forcing,
        stepper=StepperConfig(p["dt"], record_interval=10**9),
        tol=p["tol"],
        max_iters=p["max_iters"],
    )
    if p["guess_kind"] == "zero":
        guess = zero_field(grid)
    elif p["guess_kind"] == "linear_response":
        guess = linear_periodic_response(grid, forcing, p["params"])
    else:
        guess = load_snapshot(p["guess_snapshot"])
    written = []
    try:
        result = find_periodic_solution(guess, config)
    except BlowUpError:
        reports.write_manifest(cfg.outdir, "periodic", cfg.seed, written)
        return 2
    reports.write_json(os.path.join(cfg.outdir, "orbit.json"), result.to_json_dict())
    written.append("orbit.json")
    reports.write_csv(
        os.path.join(cfg.outdir, "residuals.csv"),
        ("iteration", "h1_residual"),
        list(enumerate(result.residual_history, start=1)),
    )
    written.append("residuals.csv")
    reports.render_residuals_figure(
        result.residual_history, os.path.join(cfg.outdir, "residuals.png")
    )
    written.append("residuals.png")
    if p["save_snapshot"]:
        save_snapshot(os.path.join(cfg.outdir, "fixed_point.voig"), result.u_star)
        written.append("fixed_point.voig")
    reports.write_manifest(cfg.outdir, "periodic", cfg.seed, written)
    return 0


def _run_diagnose(cfg, threads):
    p = cfg.payload
    u = load_snapshot(p["snapshot"])
    params = p["params"]
    l2_sq = sobolev_norm(u, 0) ** 2
    grad_sq = sobolev_norm(u, 1) ** 2
    from .integrate import DiagnosticsRecord

    rec = DiagnosticsRecord(
        t=0.0,
        l2_sq=l2_sq,
        grad_sq=grad_sq,
        e_alpha=voigt_energy(u, params.alpha),
        h3=sobolev_norm(u, 3),
        bkm_voigt=params.alpha**2 * grad_sq,
        visc_dissip_integral=0.0,
        work_integral=0.0,
    )
    reports.write_diagnostics_csv(os.path.join(cfg.outdir, "diagnostics.csv"), [rec])
    reports.write_manifest(cfg.outdir, "diagnose", cfg.seed, ["diagnostics.csv"])
    return 0


_RUNNERS = {
    "simulate": _run_simulate,
    "converge": _run_converge,
    "filter-rates": _run_filter_rates,
    "periodic": _run_periodic,
    "diagnose": _run_diagnose,
}


def run(config, threads=1):
    """Execute a validated RunConfig; returns the process exit code."""
    try:
        os.makedirs(config.outdir, exist_ok=True)
        probe = os.path.join(config.outdir, ".write-probe")
        with open(probe, "w") as fh:
            fh.write("")
        os.unlink(probe)
    except OSError as exc:
        raise ConfigError(f"output directory {config.outdir!r} is not writable: {exc}")
    return _RUNNERS[config.subcommand](config, threads)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voigtflow",
        description="Pseudo-spectral Euler/Voigt solver suite on the periodic torus",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "simulate": "advance one model run and record diagnostics",
        "converge": "run a vanishing-parameter convergence study",
        "filter-rates": "measure truncation-filter approximation rates",
        "periodic": "find a time-periodic solution by period-map iteration",
        "diagnose": "re-derive diagnostics from a field snapshot",
    }
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", help="path to a JSON config file")
        sp.add_argument("--out", help="output directory (default from config or 'out')")
        sp.add_argument("--seed", type=int, help="seed override")
        sp.add_argument("--threads", type=int, default=1, help="parallel parameter points")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
    else:
        text = "{}"
    try:
        config = parse_config(
            args.subcommand, text, out_override=args.out, seed_override=args.seed
        )
        return run(config, threads=args.threads)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    raise SystemExit(main())
