"""Command-line runner: evolve a configured model, stream indicator records,
analyse a column of the resulting CSV as a time series, and draw figures.

Exit status: 0 success, 1 failed validation, 2 configuration or input error,
3 numerical non-convergence, 4 degenerate time series.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from . import plotting
from .config import ExperimentConfig, TimeseriesSettings, config_from_dict, load_config
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateSeriesError,
    NormalizationError,
)
from .indicators import IndicatorCSVWriter, format_value, indicator_record, read_indicator_csv
from .models import Propagator, bec_analytic_state
from .tseries import (
    TimeSeries,
    default_window_lengths,
    embed,
    estimate_delay,
    fnn_embedding_dim,
    lyapunov_curve,
    power_spectrum,
)

log = logging.getLogger("tomoent")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_DEGENERATE = 4


# ---------------------------------------------------------------------------
# runners


def _state_at(cfg: ExperimentConfig):
    """Return a callable t -> BipartiteState for the configured evolution."""
    if cfg.method == "analytic":
        alpha_a, alpha_b, m1, m2 = cfg.product_labels()
        return lambda t: bec_analytic_state(
            cfg.params, alpha_a, alpha_b, m1, m2, t, cfg.cutoff_a, cfg.cutoff_b
        )
    prop = Propagator(cfg.build_state(), cfg.hamiltonian())
    return prop.state


def run_indicators(cfg: ExperimentConfig, out_dir: Path | None = None) -> Path:
    """Evolve and write one indicator record per time step.

    Rows are for steps 0..n_steps-1; the ``t`` column is in units of pi/g
    (atom-field) or pi/U (BEC).
    """
    out_dir = Path(out_dir or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.name}_indicators.csv"
    (out_dir / f"{cfg.name}_run.yaml").write_text(
        yaml.safe_dump(cfg.resolved(), sort_keys=True, default_flow_style=False)
    )
    state_at = _state_at(cfg)
    with open(csv_path, "w", newline="") as fh:
        writer = IndicatorCSVWriter(fh)
        for step in range(cfg.n_steps):
            state = state_at(cfg.physical_time(step))
            try:
                state.check_truncation()
                rec = indicator_record(state, cfg.scaled_time(step), cfg.angles, cfg.grid)
            except (ConvergenceError, NormalizationError) as exc:
                raise type(exc)(f"time step {step}: {exc}") from exc
            writer.write(rec)
            if step % max(cfg.n_steps // 10, 1) == 0:
                log.info("%s: step %d/%d", cfg.name, step, cfg.n_steps)
    return csv_path


def sidecar_config(csv_path) -> ExperimentConfig | None:
    """The resolved config written next to an indicator CSV, if present."""
    p = Path(csv_path)
    stem = p.stem[: -len("_indicators")] if p.stem.endswith("_indicators") else p.stem
    side = p.with_name(f"{stem}_run.yaml")
    if not side.exists():
        return None
    return config_from_dict(yaml.safe_load(side.read_text()))


def load_series(csv_path, column: str, dt: float) -> TimeSeries:
    try:
        cols = read_indicator_csv(csv_path)
    except OSError as exc:
        raise ConfigError(f"cannot read {csv_path}: {exc.strerror}") from None
    if column not in cols:
        raise ConfigError(f"column {column!r} not in {csv_path} (have {', '.join(cols)})")
    return TimeSeries(cols[column], dt=dt, label=column)


def write_two_columns(path, header, a, b) -> Path:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for x, y in zip(a, b):
            fh.write(f"{format_value(float(x))},{format_value(float(y))}\n")
    return Path(path)


def run_spectrum(ts: TimeSeries, out_path, freq_unit: float = 1.0) -> Path:
    ps = power_spectrum(ts, freq_unit)
    return write_two_columns(out_path, plotting.SPECTRUM_COLUMNS, ps.freqs, ps.s)


def run_timeseries(ts: TimeSeries, out_dir, stem: str, settings, freq_unit: float = 1.0) -> dict:
    """Delay, embedding dimension, Lambda_L curve with fit, and spectrum.

    Writes ``<stem>_lyapunov.csv``, ``<stem>_fit.txt`` and
    ``<stem>_spectrum.csv``; returns a summary mapping.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ts.require_length()
    tau = estimate_delay(ts)
    dim = fnn_embedding_dim(ts, tau, max_dim=settings.max_dim, threshold=settings.fnn_threshold)
    emb = embed(ts, dim, tau)
    Ls = default_window_lengths(emb.n_points, tau, count=settings.window_count)
    est = lyapunov_curve(emb, Ls, n_init=settings.n_init, seed=settings.seed)
    lyap = write_two_columns(out_dir / f"{stem}_lyapunov.csv", plotting.LYAPUNOV_COLUMNS,
                             est.window_lengths, est.lambda_L)
    summary = {
        "lambda_inf": est.lambda_inf,
        "m": est.m,
        "q": est.q,
        "residual": est.residual,
        "tau": tau,
        "d_emb": dim,
        "dt": ts.dt,
    }
    line = " ".join(f"{k}={format_value(float(v))}" for k, v in summary.items())
    (out_dir / f"{stem}_fit.txt").write_text(line + "\n")
    spec = run_spectrum(ts, out_dir / f"{stem}_spectrum.csv", freq_unit)
    summary.update(lyapunov_csv=lyap, spectrum_csv=spec, line=line, estimate=est)
    return summary


def emit_figures(csv_paths, rate_label="g", columns=("d2", "d3"), render=True) -> list[Path]:
    """Plot script (and, if ``render``, a PNG) next to each CSV."""
    made = []
    for p in csv_paths:
        made.append(plotting.emit_plot_script(p, rate_label=rate_label, columns=columns))
        if render:
            made.append(plotting.render(p, rate_label=rate_label, columns=columns))
    return made


# ---------------------------------------------------------------------------
# argument handling


def _series_context(args):
    """(dt, freq_unit, rate_label, settings) from flags, --config or the sidecar."""
    if args.config:
        cfg = load_config(args.config, scale=args.scale)
    else:
        cfg = sidecar_config(args.csv)
    settings = cfg.timeseries if cfg else TimeseriesSettings()
    dt = args.dt if args.dt is not None else (cfg.dt_physical if cfg else 1.0)
    freq_unit = args.freq_unit if args.freq_unit is not None else (cfg.rate if cfg else 1.0)
    rate_label = args.rate_label or (cfg.rate_label if cfg else "g")
    if dt <= 0 or freq_unit <= 0:
        raise ConfigError("--dt and --freq-unit must be positive")
    return dt, freq_unit, rate_label, settings


def cmd_evolve(args) -> int:
    overrides = list(args.set or [])
    if args.n_steps is not None:
        overrides.append(f"time.n_steps={args.n_steps}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    cfg = load_config(args.config, scale=args.scale, overrides=overrides)
    out_dir = Path(args.output) if args.output else cfg.output_dir
    csv_path = run_indicators(cfg, out_dir)
    print(csv_path)
    if cfg.figures and not args.no_figures:
        for p in emit_figures([csv_path], cfg.rate_label, columns=tuple(args.columns.split(","))):
            print(p)
    return EXIT_OK


def cmd_timeseries(args) -> int:
    dt, freq_unit, rate_label, settings = _series_context(args)
    changes = {k: getattr(args, k) for k in ("column", "n_init", "seed") if getattr(args, k) is not None}
    settings = replace(settings, **changes)
    ts = load_series(args.csv, settings.column, dt)
    csv_path = Path(args.csv)
    out_dir = Path(args.output) if args.output else csv_path.parent
    stem = csv_path.stem.replace("_indicators", "") + f"_{settings.column}"
    summary = run_timeseries(ts, out_dir, stem, settings, freq_unit)
    print(summary["line"])
    print(summary["lyapunov_csv"])
    print(summary["spectrum_csv"])
    if not args.no_figures:
        for p in emit_figures([summary["lyapunov_csv"], summary["spectrum_csv"]], rate_label):
            print(p)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    dt, freq_unit, rate_label, settings = _series_context(args)
    column = args.column or settings.column
    ts = load_series(args.csv, column, dt)
    csv_path = Path(args.csv)
    out_dir = Path(args.output) if args.output else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    out = run_spectrum(ts, out_dir / f"{csv_path.stem.replace('_indicators', '')}_{column}_spectrum.csv",
                       freq_unit)
    print(out)
    if not args.no_figures:
        for p in emit_figures([out], rate_label):
            print(p)
    return EXIT_OK


def cmd_plots(args) -> int:
    missing = [p for p in args.csv if not Path(p).exists()]
    if missing:
        raise ConfigError(f"missing file(s): {', '.join(missing)}")
    try:
        made = emit_figures(args.csv, args.rate_label or "g", tuple(args.columns.split(",")),
                            render=not args.scripts_only)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for p in made:
        print(p)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_checks

    results = run_checks(quick=args.quick)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}")
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VALIDATION


def _add_series_flags(p):
    p.add_argument("csv", help="indicator CSV")
    p.add_argument("--column", help="column to analyse (default d1)")
    p.add_argument("--config", help="config giving dt and the frequency unit")
    p.add_argument("--scale", help="scale entry of --config")
    p.add_argument("--dt", type=float, help="physical sampling step of the series")
    p.add_argument("--freq-unit", type=float, help="divide frequencies by this (g or U)")
    p.add_argument("--rate-label", help="axis label for the frequency unit")
    p.add_argument("-o", "--output", help="output directory (default: next to the CSV)")
    p.add_argument("--no-figures", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tomoent", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve-indicators", help="evolve a config and write indicator records")
    p.add_argument("config")
    p.add_argument("--scale", help="scale entry to merge (e.g. desk, full)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key, e.g. time.n_steps=50 (repeatable)")
    p.add_argument("--n-steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--columns", default="d2,d3", help="curves for the figure")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("timeseries", help="delay, FNN, local Lyapunov exponents, fit, spectrum")
    _add_series_flags(p)
    p.add_argument("--n-init", type=int, help="base points per window length")
    p.add_argument("--seed", type=int, help="seed for the base points")
    p.set_defaults(func=cmd_timeseries)

    p = sub.add_parser("spectrum", help="power spectrum of one CSV column")
    _add_series_flags(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("plots", help="plot scripts and figures for CSV files")
    p.add_argument("csv", nargs="+")
    p.add_argument("--rate-label", help="g or U")
    p.add_argument("--columns", default="d2,d3")
    p.add_argument("--scripts-only", action="store_true", help="emit scripts without rendering")
    p.set_defaults(func=cmd_plots)

    p = sub.add_parser("validate", help="run the built-in oracle checks")
    p.add_argument("--quick", action="store_true", help="skip the slower checks")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, NormalizationError) as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DegenerateSeriesError as exc:
        print(f"degenerate time series: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
