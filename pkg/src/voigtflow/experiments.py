"""Convergence studies: vanishing regularization, data perturbation and
viscosity limits, truncation-filter approximation rates, and time-order
verification with manufactured solutions.  Results are fitted-slope reports.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .dynamics import ModelParams, NoForcing, manufactured_forcing
from .field import (
    random_field,
    sobolev_norm,
    taylor_green,
    truncate_filter,
)
from .grid import TorusGrid
from .integrate import BlowUpError, SimulationState, StepperConfig, integrate

__all__ = [
    "DatumSpec",
    "ConvergenceStudySpec",
    "ConvergenceRow",
    "ConvergenceReport",
    "fit_loglog_slope",
    "make_perturbed_datum",
    "couple_alpha_to_beta",
    "run_alpha_convergence",
    "run_alpha_beta_convergence",
    "run_nsv_convergence",
    "run_filter_rates",
    "run_manufactured_order_check",
]

STATUS_OK = "ok"
STATUS_BLOWUP = "blowup"
STATUS_EXCLUDED = "excluded"

# rows at or below the double-precision error floor are excluded from fits
ERROR_FLOOR = 1e-12


@dataclass(frozen=True)
class DatumSpec:
    """Initial-datum factory: Taylor-Green vortex or seeded random field."""

    kind: str = "taylor_green"
    amplitude: float = 1.0
    decay: float = 5.0
    h3_norm: float | None = None
    seed: int | None = None

    def build(self, grid, default_seed=0):
        if self.kind == "taylor_green":
            return taylor_green(grid, self.amplitude)
        if self.kind == "random":
            seed = self.seed if self.seed is not None else default_seed
            return random_field(grid, self.decay, seed, h3_norm=self.h3_norm)
        raise ValueError(f"unknown datum kind {self.kind!r}")

    def describe(self):
        if self.kind == "taylor_green":
            return {"kind": self.kind, "amplitude": self.amplitude}
        return {
            "kind": self.kind,
            "decay": self.decay,
            "h3_norm": self.h3_norm,
            "seed": self.seed,
        }


def _check_sequence(name, seq, require=True, positive=True):
    if seq is None:
        if require:
            raise ValueError(f"{name} sequence is required for this study kind")
        return None
    seq = tuple(float(v) for v in seq)
    if len(seq) < 2:
        raise ValueError(f"{name} must have at least 2 entries, got {len(seq)}")
    if positive and any(v <= 0 for v in seq):
        raise ValueError(f"{name} entries must be positive")
    if not positive and any(v < 0 for v in seq):
        raise ValueError(f"{name} entries must be non-negative")
    if any(b > a for a, b in zip(seq, seq[1:])):
        raise ValueError(f"{name} must be non-increasing")
    return seq


@dataclass(frozen=True)
class ConvergenceStudySpec:
    """Parameters of one study; kind selects which sequences drive it."""

    kind: str
    alphas: tuple | None = None
    betas: tuple | None = None
    nus: tuple | None = None
    deltas: tuple | None = None
    m: float = 2.0
    horizon: float = 0.5
    n_modes: int = 32
    dt: float = 1e-3
    record_interval: int = 25
    datum: DatumSpec = dc_field(default_factory=DatumSpec)
    seed: int = 0

    def __post_init__(self):
        kinds = ("alpha_only", "alpha_beta", "alpha_beta_nu", "filter_rates")
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}, got {self.kind!r}")
        if self.horizon <= 0 or self.dt <= 0:
            raise ValueError("horizon and dt must be positive")
        object.__setattr__(
            self, "alphas", _check_sequence("alphas", self.alphas, require=self.kind == "alpha_only")
        )
        object.__setattr__(
            self,
            "betas",
            _check_sequence(
                "betas",
                self.betas,
                require=self.kind in ("alpha_beta", "alpha_beta_nu"),
                positive=False,
            ),
        )
        object.__setattr__(
            self, "nus", _check_sequence("nus", self.nus, require=False, positive=False)
        )
        object.__setattr__(
            self, "deltas", _check_sequence("deltas", self.deltas, require=self.kind == "filter_rates")
        )
        if self.kind in ("alpha_beta", "alpha_beta_nu") and self.alphas is not None:
            if len(self.alphas) != len(self.betas):
                raise ValueError("alphas and betas must have the same length")
        if self.nus is not None and self.betas is not None and len(self.nus) != len(self.betas):
            raise ValueError("nus and betas must have the same length")


@dataclass
class ConvergenceRow:
    param: float
    sup_error: float
    status: str = STATUS_OK


@dataclass
class ConvergenceReport:
    rows: list
    slope: float | None
    intercept: float | None
    r2: float | None
    metadata: dict

    def ok_rows(self):
        return [r for r in self.rows if r.status == STATUS_OK]

    def to_json_dict(self):
        meta = self.metadata
        return {
            "kind": meta.get("kind"),
            "m": meta.get("m"),
            "T": meta.get("T"),
            "N": meta.get("N"),
            "dt": meta.get("dt"),
            "seed": meta.get("seed"),
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "reference": meta.get("reference"),
            "extra": {k: v for k, v in meta.items()
                      if k not in ("kind", "m", "T", "N", "dt", "seed", "reference")},
            "rows": [[r.param, r.sup_error, r.status] for r in self.rows],
        }


def fit_loglog_slope(rows):
    """Least squares of log(error) on log(parameter); returns (slope,
    intercept, r2).  Rows with non-positive entries are unusable."""
    pts = [
        (p, e)
        for p, e in rows
        if p > 0 and e > 0 and math.isfinite(p) and math.isfinite(e)
    ]
    if len(pts) < 2:
        raise ValueError(f"need at least 2 usable rows to fit, got {len(pts)}")
    x = np.log([p for p, _ in pts])
    y = np.log([e for _, e in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


def _fit_or_none(rows):
    usable = [(r.param, r.sup_error) for r in rows if r.status == STATUS_OK and r.sup_error > 0]
    try:
        return fit_loglog_slope(usable)
    except ValueError:
        return None, None, None


def make_perturbed_datum(u0, beta, seed):
    """u0 + beta * w with w random, H4-regular and ||w||_{H_3} = 1, so the
    H_3 distance to u0 is exactly beta."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return u0.copy()
    w = random_field(u0.grid, 6.0, seed, h3_norm=1.0)
    return u0 + beta * w


def couple_alpha_to_beta(beta, u0_beta):
    """alpha = min(beta, 1/||u0_beta||_{H_4}), keeping alpha*||u0_beta||_{H_4}
    bounded by one."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return 0.0
    return min(beta, 1.0 / sobolev_norm(u0_beta, 4))


def _sup_error(traj_a, traj_b, m):
    """sup over shared sample times of the H_m distance."""
    if len(traj_a.samples) != len(traj_b.samples):
        raise ValueError("trajectories have different sample counts")
    worst = 0.0
    for sa, sb in zip(traj_a.samples, traj_b.samples):
        if abs(sa.t - sb.t) > 1e-9 * max(1.0, abs(sa.t)):
            raise ValueError(f"sample times differ: {sa.t} vs {sb.t}")
        worst = max(worst, sobolev_norm(sa.u - sb.u, m))
    return worst


def _run_points(jobs, n_jobs):
    if n_jobs <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        futures = [pool.submit(job) for job in jobs]
        return [f.result() for f in futures]


def _base_metadata(spec, extra=None):
    meta = {
        "kind": spec.kind,
        "m": spec.m,
        "T": spec.horizon,
        "N": spec.n_modes,
        "dt": spec.dt,
        "seed": spec.seed,
        "record_interval": spec.record_interval,
        "datum": spec.datum.describe(),
        "reference": "euler run (alpha=0, nu=0) at identical grid and dt",
        "sup_convention": "max over diagnostic samples",
    }
    if extra:
        meta.update(extra)
    return meta


def run_alpha_convergence(spec, n_jobs=1):
    """Errors of vanishing-alpha runs against the Euler reference with the
    same initial datum; fitted log-log slope over alpha."""
    if spec.kind != "alpha_only":
        raise ValueError(f"expected kind 'alpha_only', got {spec.kind!r}")
    grid = TorusGrid(spec.n_modes)
    u0 = spec.datum.build(grid, default_seed=spec.seed)
    stepper = StepperConfig(spec.dt, spec.record_interval)
    reference = integrate(
        SimulationState(0.0, u0), spec.horizon, stepper, ModelParams(0.0, 0.0)
    )

    def point(alpha):
        def job():
            try:
                traj = integrate(
                    SimulationState(0.0, u0.copy()),
                    spec.horizon,
                    stepper,
                    ModelParams(alpha, 0.0),
                )
            except BlowUpError:
                return ConvergenceRow(alpha, float("nan"), STATUS_BLOWUP), None
            row = ConvergenceRow(alpha, _sup_error(traj, reference, spec.m))
            _, bkm_sup = _monitor_sup(traj, alpha)
            return row, bkm_sup

        return job

    results = _run_points([point(a) for a in spec.alphas], n_jobs)
    rows = [r for r, _ in results]
    slope, intercept, r2 = _fit_or_none(rows)
    meta = _base_metadata(
        spec,
        {"bkm_sup_by_param": {str(r.param): b for (r, b) in results if b is not None}},
    )
    return ConvergenceReport(rows, slope, intercept, r2, meta)


def _monitor_sup(traj, alpha):
    from .integrate import blowup_monitor

    return blowup_monitor(traj.diagnostics, alpha)


def _beta_family(spec, grid, u0):
    """Per-n data, alphas (running-min coupled unless given) for beta kinds."""
    data = []
    alphas = []
    prev = math.inf
    for i, beta in enumerate(spec.betas):
        u0_beta = make_perturbed_datum(u0, beta, spec.seed)
        if spec.alphas is not None:
            alpha = spec.alphas[i]
        else:
            alpha = min(couple_alpha_to_beta(beta, u0_beta), prev)
        prev = alpha
        data.append(u0_beta)
        alphas.append(alpha)
    return data, alphas


def run_alpha_beta_convergence(spec, n_jobs=1):
    """Perturbed-data Euler-Voigt runs against the unperturbed Euler
    reference, with alpha coupled to beta; errors in H_m over beta."""
    if spec.kind != "alpha_beta":
        raise ValueError(f"expected kind 'alpha_beta', got {spec.kind!r}")
    return _run_beta_study(spec, viscous=False, n_jobs=n_jobs)


def run_nsv_convergence(spec, n_jobs=1):
    """As the alpha-beta study but with viscosity nu_n > 0 on the perturbed
    runs (nu_n = alpha_n^2 unless given; never above alpha_n^2)."""
    if spec.kind != "alpha_beta_nu":
        raise ValueError(f"expected kind 'alpha_beta_nu', got {spec.kind!r}")
    return _run_beta_study(spec, viscous=True, n_jobs=n_jobs)


def _run_beta_study(spec, viscous, n_jobs):
    grid = TorusGrid(spec.n_modes)
    u0 = spec.datum.build(grid, default_seed=spec.seed)
    stepper = StepperConfig(spec.dt, spec.record_interval)
    reference = integrate(
        SimulationState(0.0, u0), spec.horizon, stepper, ModelParams(0.0, 0.0)
    )
    data, alphas = _beta_family(spec, grid, u0)
    if viscous:
        requested = spec.nus if spec.nus is not None else [a**2 for a in alphas]
        nus = [min(nu, a**2) for nu, a in zip(requested, alphas)]
    else:
        nus = [0.0] * len(alphas)

    def point(i):
        def job():
            beta = spec.betas[i]
            try:
                traj = integrate(
                    SimulationState(0.0, data[i].copy()),
                    spec.horizon,
                    stepper,
                    ModelParams(alphas[i], nus[i]),
                )
            except BlowUpError:
                return ConvergenceRow(beta, float("nan"), STATUS_BLOWUP)
            return ConvergenceRow(beta, _sup_error(traj, reference, spec.m))

        return job

    rows = _run_points([point(i) for i in range(len(spec.betas))], n_jobs)
    slope, intercept, r2 = _fit_or_none(rows)
    meta = _base_metadata(spec, {"alphas_effective": alphas, "nus_effective": nus})
    return ConvergenceReport(rows, slope, intercept, r2, meta)


FILTER_SERIES = ("s0", "s1", "s2", "h4_bound")


def run_filter_rates(spec):
    """Truncation-filter approximation rates on a random H_3-normalized
    datum: rows (delta, ||u_delta - u||_{H_s}) for s in {0,1,2} and
    (delta, delta*||u_delta||_{H_4}); every row obeys the C=1 bounds."""
    if spec.kind != "filter_rates":
        raise ValueError(f"expected kind 'filter_rates', got {spec.kind!r}")
    grid = TorusGrid(spec.n_modes)
    u = spec.datum.build(grid, default_seed=spec.seed)
    h3 = sobolev_norm(u, 3)
    reports = {}
    series_rows = {name: [] for name in FILTER_SERIES}
    for delta in spec.deltas:
        u_d = truncate_filter(u, delta)
        diff = u_d - u
        for s in (0, 1, 2):
            err = sobolev_norm(diff, s)
            status = STATUS_OK if err > ERROR_FLOOR else STATUS_EXCLUDED
            series_rows[f"s{s}"].append(ConvergenceRow(delta, err, status))
        series_rows["h4_bound"].append(
            ConvergenceRow(delta, delta * sobolev_norm(u_d, 4))
        )
    for name, rows in series_rows.items():
        slope, intercept, r2 = _fit_or_none(rows)
        meta = _base_metadata(
            spec,
            {
                "series": name,
                "datum_h3_norm": h3,
                "reference": "unfiltered datum on the same grid",
            },
        )
        reports[name] = ConvergenceReport(rows, slope, intercept, r2, meta)
    return reports


def run_manufactured_order_check(dts, exact, params, horizon):
    """Endpoint L2 error of the manufactured problem for each dt; the fitted
    slope verifies the integrator's 4th temporal order.  Rows at the
    round-off floor are excluded from the fit."""
    dts = _check_sequence("dts", dts)
    forcing = manufactured_forcing(exact, params)
    u0 = exact.at(0.0)
    u_end = exact.at(horizon)
    rows = []
    for dt in dts:
        n_steps = max(1, round(horizon / dt))
        stepper = StepperConfig(dt, record_interval=n_steps)
        traj = integrate(
            SimulationState(0.0, u0.copy()),
            horizon,
            stepper,
            params,
            forcing,
            store_fields=False,
        )
        err = sobolev_norm(traj.final_state.u - u_end, 0)
        status = STATUS_OK if err > ERROR_FLOOR else STATUS_EXCLUDED
        rows.append(ConvergenceRow(dt, err, status))
    slope, intercept, r2 = _fit_or_none(rows)
    meta = {
        "kind": "manufactured_order",
        "m": 0,
        "T": horizon,
        "N": exact.profile.grid.n_modes,
        "dt": None,
        "seed": None,
        "reference": "closed-form manufactured solution",
        "params": {"alpha": params.alpha, "nu": params.nu},
    }
    return ConvergenceReport(rows, slope, intercept, r2, meta)
