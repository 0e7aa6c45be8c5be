"""Artifact writers: full-precision CSV, JSON sidecars, rendered figures and
the output manifest.  All file writes are whole-file atomic (temp + rename).
"""

import hashlib
import json
import os
import tempfile

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .integrate import DIAGNOSTICS_COLUMNS  # noqa: E402

__all__ = [
    "atomic_write_bytes",
    "write_csv",
    "write_json",
    "write_diagnostics_csv",
    "write_report_csv",
    "write_manifest",
    "render_convergence_figure",
    "render_filter_rates_figure",
    "render_diagnostics_figure",
    "render_residuals_figure",
]


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))  # shortest round-trip decimal
    return str(value)


def _json_default(value):
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    raise TypeError(f"not JSON serializable: {type(value)}")


def atomic_write_bytes(path, payload):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode())


def write_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    atomic_write_bytes(path, (text + "\n").encode())


def write_diagnostics_csv(path, diagnostics):
    write_csv(path, DIAGNOSTICS_COLUMNS, [d.row() for d in diagnostics])


def write_report_csv(path, report):
    write_csv(
        path,
        ("param", "sup_error", "status"),
        [(r.param, r.sup_error, r.status) for r in report.rows],
    )


def write_manifest(outdir, subcommand, seed, paths):
    """manifest.json listing every artifact with its content hash."""
    artifacts = []
    for path in sorted(paths):
        full = os.path.join(outdir, path)
        digest = hashlib.sha256(open(full, "rb").read()).hexdigest()
        artifacts.append(
            {"path": path, "sha256": digest, "bytes": os.path.getsize(full)}
        )
    write_json(
        os.path.join(outdir, "manifest.json"),
        {"subcommand": subcommand, "seed": seed, "artifacts": artifacts},
    )


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_convergence_figure(report, path, xlabel="parameter"):
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ok = report.ok_rows()
    if ok:
        xs = [r.param for r in ok]
        ys = [r.sup_error for r in ok]
        ax.loglog(xs, ys, "ko", ms=6, label="measured")
        if report.slope is not None:
            import numpy as np

            fit = [float(np.exp(report.intercept + report.slope * np.log(x))) for x in xs]
            ax.loglog(xs, fit, "k--", label=f"slope {report.slope:.2f}")
    bad = [r for r in report.rows if r.status != "ok"]
    if bad:
        ax.set_title(f"{len(bad)} row(s) excluded/failed")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("sup-in-time error")
    ax.grid(True, which="both", alpha=0.4)
    if ok:
        ax.legend(loc="best")
    _finish(fig, path)


def render_filter_rates_figure(reports, path):
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    styles = {"s0": "o-", "s1": "s-", "s2": "^-", "h4_bound": "d--"}
    plotted = False
    for name, report in reports.items():
        ok = report.ok_rows()
        if not ok:
            continue
        label = name if report.slope is None else f"{name} (slope {report.slope:.2f})"
        ax.loglog([r.param for r in ok], [r.sup_error for r in ok],
                  styles.get(name, "o-"), label=label)
        plotted = True
    ax.set_xlabel("delta")
    ax.set_ylabel("error / bound value")
    ax.grid(True, which="both", alpha=0.4)
    if plotted:
        ax.legend(loc="best", fontsize=8)
    _finish(fig, path)


def render_diagnostics_figure(diagnostics, path):
    ts = [d.t for d in diagnostics]
    fig, axes = plt.subplots(2, 1, figsize=(5.5, 6.0), sharex=True)
    axes[0].plot(ts, [d.e_alpha for d in diagnostics], label="E_alpha")
    axes[0].plot(ts, [d.l2_sq for d in diagnostics], "--", label="||u||^2")
    axes[0].set_ylabel("energy")
    axes[0].legend(loc="best")
    axes[0].grid(alpha=0.4)
    axes[1].plot(ts, [d.bkm_voigt for d in diagnostics], color="firebrick")
    axes[1].set_ylabel("alpha^2 ||grad u||^2")
    axes[1].set_xlabel("t")
    axes[1].grid(alpha=0.4)
    _finish(fig, path)


def render_residuals_figure(residuals, path):
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.semilogy(range(1, len(residuals) + 1), residuals, "o-")
    ax.set_xlabel("iteration")
    ax.set_ylabel("H_1 residual")
    ax.grid(True, which="both", alpha=0.4)
    _finish(fig, path)
