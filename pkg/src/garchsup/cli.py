"""Command-line front end.

Subcommands:

    scan      ingest a CSV, run the change-period test, emit a JSON report
              (optionally rolling over consecutive windows)
    simulate  generate a (possibly shocked) GARCH series as CSV
    study     run a size or power simulation study from a JSON config

Exit codes: 0 success, 1 configuration error, 2 ingest error, 3 fitting
error, 4 inference error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (ConfigError, FitError, GarchsupError, IngestError,
                         InferenceError, SimulationOverflowError)
from .harness import StudyConfig, power_study, scenario_params, size_study
from .likelihood import Window, frac_index
from .model import GarchParams, InnovationDist, ParameterSpace, ShockSpec, simulate
from .qmle import fit_complement
from .suptest import SearchGrid, TestReport, critical_value, decide_and_date, scan

__all__ = ["IngestSpec", "IngestResult", "ingest", "run_scan", "run_rolling",
           "main"]

log = logging.getLogger("garchsup")


# ---------------------------------------------------------------------------
# Ingestion


@dataclass(frozen=True)
class IngestSpec:
    """How to turn a CSV file into a return series.

    column is a header name or a 0-based index (as int or digit string).
    transform "log_return" maps prices to r_i = log(p_i / p_{i-1}) and
    requires strictly positive prices.  prewhiten_ar_order > 0 fits an AR(p)
    by ordinary least squares (with intercept) and passes on the residuals.
    """

    path: str
    column: object = 0
    date_column: Optional[object] = None
    transform: str = "none"
    prewhiten_ar_order: int = 0

    def __post_init__(self):
        if self.transform not in ("none", "log_return"):
            raise ConfigError(
                f"transform must be 'none' or 'log_return', "
                f"got {self.transform!r}")
        if self.prewhiten_ar_order < 0:
            raise ConfigError(
                f"prewhiten_ar_order must be >= 0, "
                f"got {self.prewhiten_ar_order}")


@dataclass(frozen=True)
class IngestResult:
    series: np.ndarray
    rows_read: int
    rows_skipped: int
    ar_coefficients: Optional[tuple]  # (intercept, phi_1..phi_p) when used


def _sniff_dialect(sample: str):
    try:
        return csv.Sniffer().sniff(sample, delimiters=",;")
    except csv.Error:
        return csv.excel  # comma-separated default


def _parse_cell(text: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if math.isnan(value):
        return None
    return value


def _resolve_column(column, header: Optional[List[str]], width: int) -> int:
    if isinstance(column, int):
        idx = column
    else:
        name = str(column)
        if name.lstrip("-").isdigit():
            idx = int(name)
        else:
            if header is None:
                raise IngestError(
                    f"column {name!r} requested by name but the file has "
                    "no header row")
            try:
                idx = header.index(name)
            except ValueError:
                raise IngestError(
                    f"column {name!r} not found in header {header}")
    if not 0 <= idx < width:
        raise IngestError(
            f"column index {idx} out of range for {width} columns")
    return idx


def _ar_prewhiten(y: np.ndarray, p: int) -> Tuple[np.ndarray, tuple]:
    """OLS AR(p) with intercept; returns (residuals, coefficients)."""
    n = len(y)
    if n <= p + 1:
        raise IngestError(
            f"series of length {n} is too short for AR({p}) prewhitening")
    design = np.ones((n - p, p + 1))
    for j in range(1, p + 1):
        design[:, j] = y[p - j:n - j]
    target = y[p:]
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = target - design @ coef
    return resid, tuple(float(c) for c in coef)


def ingest(spec: IngestSpec) -> IngestResult:
    """Read, transform, and prewhiten one series from a CSV file."""
    try:
        with open(spec.path, "r", encoding="utf-8-sig", newline="") as fh:
            sample = fh.read(8192)
            fh.seek(0)
            reader = csv.reader(fh, _sniff_dialect(sample))
            rows = [row for row in reader if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise IngestError(f"cannot read {spec.path}: {exc}") from exc
    if not rows:
        raise IngestError(f"{spec.path} contains no data rows")

    # Header detection: a first row whose requested column does not parse
    # as a number is taken as a header.
    width = max(len(r) for r in rows)
    header: Optional[List[str]] = None
    probe_idx = None
    if isinstance(spec.column, int) or str(spec.column).lstrip("-").isdigit():
        probe_idx = int(spec.column)
    first = rows[0]
    if probe_idx is None:
        header = [c.strip() for c in first]
        data_rows = rows[1:]
        first_data_row = 2
    elif (0 <= probe_idx < len(first)
          and _parse_cell(first[probe_idx]) is None):
        header = [c.strip() for c in first]
        data_rows = rows[1:]
        first_data_row = 2
    else:
        data_rows = rows
        first_data_row = 1

    col = _resolve_column(spec.column, header, width)
    date_col = (None if spec.date_column is None
                else _resolve_column(spec.date_column, header, width))

    values: List[float] = []
    value_rows: List[int] = []  # 1-based file row numbers, for messages
    skipped = 0
    for offset, row in enumerate(data_rows):
        rownum = first_data_row + offset
        cell = row[col] if col < len(row) else ""
        value = _parse_cell(cell)
        date_missing = (date_col is not None
                        and (date_col >= len(row)
                             or not row[date_col].strip()))
        if value is None or date_missing:
            skipped += 1
            continue
        values.append(value)
        value_rows.append(rownum)
    if skipped:
        log.warning("skipped %d rows with missing or unparseable values",
                    skipped)

    if len(values) < 50:
        raise IngestError(
            f"only {len(values)} usable rows in {spec.path}; need at least 50")

    series = np.asarray(values, dtype=np.float64)
    if spec.transform == "log_return":
        bad = np.nonzero(series <= 0.0)[0]
        if bad.size:
            raise IngestError(
                f"log_return requires strictly positive prices; "
                f"row {value_rows[bad[0]]} has value {series[bad[0]]}")
        series = np.diff(np.log(series))

    ar_coefficients = None
    if spec.prewhiten_ar_order > 0:
        series, ar_coefficients = _ar_prewhiten(series,
                                                spec.prewhiten_ar_order)

    return IngestResult(series=series, rows_read=len(data_rows),
                        rows_skipped=skipped, ar_coefficients=ar_coefficients)


# ---------------------------------------------------------------------------
# Scan orchestration


def _space_for(h: Sequence[float], order: Tuple[int, int]) -> ParameterSpace:
    r, s = order
    space = ParameterSpace(r=r, s=s)
    if len(h) != space.d:
        raise ConfigError(
            f"--h-direction has {len(h)} entries but GARCH({r},{s}) "
            f"has {space.d} parameters")
    return space


def run_scan(series: np.ndarray, h: Sequence[float], grid: SearchGrid,
             space: ParameterSpace, delta: float, reps: int, seed: int,
             c_bar: Optional[float], q_hat: Optional[float] = None
             ) -> TestReport:
    """critical_value + scan + decide_and_date on one series."""
    if q_hat is None:
        q_hat = critical_value(len(series), grid, N=reps, delta=delta,
                               seed=seed)
    null_ref = "complement" if c_bar is None else float(c_bar)
    per_window = scan(series, h, grid, space, null_ref=null_ref)
    mode = "complement" if c_bar is None else "fixed"
    return decide_and_date(per_window, q_hat, series, space, delta=delta,
                           null_reference_mode=mode)


def run_rolling(series: np.ndarray, window_size: int, step: int,
                h: Sequence[float], grid: SearchGrid, space: ParameterSpace,
                delta: float, reps: int, seed: int,
                c_bar: Optional[float]) -> List[Tuple[int, TestReport]]:
    """run_scan on consecutive windows; returns (start_index, report) pairs.

    The critical value is computed once (every window has the same length).
    Windows whose scan fails are skipped with a logged error; the run
    continues.
    """
    n = len(series)
    if window_size < 1:
        raise ConfigError(f"window size must be positive, got {window_size}")
    if step < 1:
        raise ConfigError(f"step must be positive, got {step}")
    if n < window_size:
        raise ConfigError(
            f"series length {n} is shorter than the window size {window_size}")
    q_hat = critical_value(window_size, grid, N=reps, delta=delta, seed=seed)
    out: List[Tuple[int, TestReport]] = []
    start = 0
    while start + window_size <= n:
        chunk = series[start:start + window_size]
        try:
            report = run_scan(chunk, h, grid, space, delta, reps, seed,
                              c_bar, q_hat=q_hat)
            out.append((start, report))
        except (FitError, InferenceError) as exc:
            log.error("window starting at %d failed: %s", start, exc)
        start += step
    if not out:
        raise InferenceError("every rolling window failed")
    return out


def _persistence(theta: Sequence[float], space: ParameterSpace) -> float:
    return float(np.sum(np.asarray(theta)[1:]))


def _rolling_table(series: np.ndarray, results: List[Tuple[int, TestReport]],
                   space: ParameterSpace) -> List[dict]:
    """One row per rolling window: decision, dated rows, persistence in/out."""
    rows = []
    for start, report in results:
        w = report.n
        row = {
            "window_start": start,
            "window_end": start + w,
            "reject": report.reject,
            "tau1_hat": None, "tau2_hat": None,
            "break_start": None, "break_end": None,
            "persistence_in": None, "persistence_out": None,
        }
        if report.reject and report.dated_window is not None:
            t1, t2 = report.dated_window
            row["tau1_hat"] = t1
            row["tau2_hat"] = t2
            row["break_start"] = start + frac_index(w, t1)
            row["break_end"] = start + frac_index(w, t2)
            if report.theta_refit is not None:
                row["persistence_in"] = _persistence(report.theta_refit,
                                                     space)
                try:
                    chunk = series[start:start + w]
                    comp = fit_complement(chunk, Window(t1, t2, w), space)
                    row["persistence_out"] = _persistence(
                        comp.theta_hat.as_array(), space)
                except (FitError, ConfigError) as exc:
                    log.error("complement refit failed for window at %d: %s",
                              start, exc)
        rows.append(row)
    return rows


def _format_rolling_text(rows: List[dict]) -> str:
    lines = [f"{'rows':>15} {'reject':>6} {'break rows':>15} "
             f"{'pers(in)':>9} {'pers(out)':>9}"]
    for r in rows:
        span = f"{r['window_start']}..{r['window_end']}"
        brk = (f"{r['break_start']}..{r['break_end']}"
               if r["break_start"] is not None else "-")
        pin = (f"{r['persistence_in']:.4f}"
               if r["persistence_in"] is not None else "-")
        pout = (f"{r['persistence_out']:.4f}"
                if r["persistence_out"] is not None else "-")
        lines.append(f"{span:>15} {str(r['reject']):>6} {brk:>15} "
                     f"{pin:>9} {pout:>9}")
    return "\n".join(lines) + "\n"


def _rolling_csv(rows: List[dict]) -> str:
    buf = io.StringIO()
    cols = ["window_start", "window_end", "reject", "tau1_hat", "tau2_hat",
            "break_start", "break_end", "persistence_in", "persistence_out"]
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow(r)
    return buf.getvalue()


def _per_window_csv(report: TestReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau1", "tau2", "stat"])
    for w in report.per_window:
        writer.writerow([f"{w.tau1:.10g}", f"{w.tau2:.10g}",
                         "" if w.statistic is None else f"{w.statistic:.10g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    """argparse that raises ConfigError instead of exiting with code 2."""

    def error(self, message):
        raise ConfigError(message)


def _add_scan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="CSV file to analyze")
    p.add_argument("--column", default="0",
                   help="column name or 0-based index (default 0)")
    p.add_argument("--date-column", default=None,
                   help="optional date column (rows with empty dates are "
                        "skipped)")
    p.add_argument("--log-returns", action="store_true",
                   help="treat the column as prices; analyze log returns")
    p.add_argument("--ar-order", type=int, default=1,
                   help="AR(p) OLS prewhitening order, 0 disables "
                        "(default 1)")
    p.add_argument("--grid", type=int, default=30, metavar="L",
                   help="number of grid intervals L (default 30)")
    p.add_argument("--kappa", type=float, default=0.1,
                   help="minimum window span (default 0.1)")
    p.add_argument("--kappa-prime", type=float, default=0.1,
                   help="1 - maximum window span (default 0.1)")
    p.add_argument("--chi", type=float, default=0.5,
                   help="span scaling exponent in [0,1] (default 0.5)")
    p.add_argument("--delta", type=float, default=0.95,
                   help="test level (default 0.95)")
    p.add_argument("--reps", type=int, default=10000, metavar="N",
                   help="critical-value replications (default 10000)")
    p.add_argument("--seed", type=int, default=0,
                   help="critical-value RNG seed (default 0)")
    p.add_argument("--h-direction", default="0,1,1", metavar="H",
                   help="comma-separated direction vector "
                        "(default 0,1,1 for GARCH(1,1))")
    p.add_argument("--order", default="1,1", metavar="R,S",
                   help="GARCH orders r,s (default 1,1)")
    p.add_argument("--c-bar", type=float, default=None,
                   help="fixed null reference; omit to estimate it from "
                        "the complement per window")
    p.add_argument("--rolling", type=int, default=None, metavar="W",
                   help="rolling mode with windows of W observations")
    p.add_argument("--step", type=int, default=None,
                   help="rolling step (default: the window size)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker processes for studies; scans are "
                        "single-threaded (default 1)")
    p.add_argument("--out", default=None,
                   help="write the JSON report here instead of stdout")
    p.add_argument("--per-window-out", default=None, metavar="PATH",
                   help="also write per-window statistics as CSV "
                        "(columns tau1,tau2,stat)")
    p.add_argument("--table-out", default=None, metavar="PATH",
                   help="rolling mode: write the detection table as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="garchsup",
        description="Detect and date a period of changed GARCH parameters "
                    "with a double-supremum test.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser(
        "scan", help="run the test on a CSV series",
        description="Ingest a CSV, run the change-period test, and emit a "
                    "JSON report with stable keys (sup_statistic, "
                    "critical_value, reject, tau1_hat, tau2_hat, theta_hat, "
                    "ci).")
    _add_scan_flags(p_scan)
    p_scan.set_defaults(func=cmd_scan)

    p_sim = sub.add_parser(
        "simulate", help="simulate a (possibly shocked) GARCH series",
        description="Simulate a strictly stationary GARCH(r,s) series, "
                    "optionally with a shocked parameter period, and write "
                    "it as CSV (columns x,sigma2).")
    p_sim.add_argument("--scenario", choices=["case_i", "case_ii"],
                       default=None,
                       help="built-in design (theta* and H)")
    p_sim.add_argument("--theta", default=None,
                       help="comma-separated alpha0,alphas...,betas... "
                            "(overrides --scenario)")
    p_sim.add_argument("--order", default="1,1", metavar="R,S",
                       help="GARCH orders r,s for --theta (default 1,1)")
    p_sim.add_argument("--h-direction", default=None, metavar="H",
                       help="shock direction (defaults to the scenario's H)")
    p_sim.add_argument("--magnitude", type=float, default=0.0,
                       help="shock magnitude Delta (default 0 = no shock)")
    p_sim.add_argument("--tau1-star", type=float, default=0.5)
    p_sim.add_argument("--tau2-star", type=float, default=0.7)
    p_sim.add_argument("--n", type=int, required=True,
                       help="number of observations")
    p_sim.add_argument("--burn-in", type=int, default=1000)
    p_sim.add_argument("--innovation", choices=["normal", "student_t"],
                       default="normal")
    p_sim.add_argument("--df", type=float, default=None,
                       help="degrees of freedom for student_t")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default=None,
                       help="output CSV path (default stdout)")
    p_sim.set_defaults(func=cmd_simulate)

    p_study = sub.add_parser(
        "study", help="run a size or power simulation study",
        description="Run a simulation study from a JSON config "
                    "(StudyConfig fields) and write CSV + text tables.")
    p_study.add_argument("--config", required=True,
                         help="path to a JSON StudyConfig")
    p_study.add_argument("--kind", choices=["size", "power"],
                         required=True)
    p_study.add_argument("--out-prefix", default=None,
                         help="write <prefix>.csv and <prefix>.txt")
    p_study.add_argument("--threads", type=int, default=None,
                         help="override the config's worker process count")
    p_study.set_defaults(func=cmd_study)

    return parser


def _parse_floats(text: str, flag: str) -> List[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip() != ""]
    except ValueError:
        raise ConfigError(f"{flag} must be a comma-separated number list, "
                          f"got {text!r}")


def _parse_order(text: str) -> Tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ConfigError(f"--order must look like 'r,s', got {text!r}")
    try:
        r, s = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"--order must be two integers, got {text!r}")
    return r, s


# ---------------------------------------------------------------------------
# Subcommand implementations


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def cmd_scan(args) -> int:
    spec = IngestSpec(
        path=args.input, column=args.column, date_column=args.date_column,
        transform="log_return" if args.log_returns else "none",
        prewhiten_ar_order=args.ar_order)
    result = ingest(spec)
    series = result.series

    grid = SearchGrid(L=args.grid, kappa=args.kappa,
                      kappa_prime=args.kappa_prime, chi=args.chi)
    h = _parse_floats(args.h_direction, "--h-direction")
    space = _space_for(h, _parse_order(args.order))

    if args.rolling is not None:
        step = args.step if args.step is not None else args.rolling
        results = run_rolling(series, args.rolling, step, h, grid, space,
                              args.delta, args.reps, args.seed, args.c_bar)
        table = _rolling_table(series, results, space)
        payload = {
            "window_size": args.rolling,
            "step": step,
            "detections": table,
            "reports": [rep.to_dict() for _, rep in results],
        }
        _emit(json.dumps(payload, indent=2), args.out)
        if args.out is not None:
            sys.stdout.write(_format_rolling_text(table))
        if args.table_out is not None:
            with open(args.table_out, "w", encoding="utf-8") as fh:
                fh.write(_rolling_csv(table))
        return 0

    report = run_scan(series, h, grid, space, args.delta, args.reps,
                      args.seed, args.c_bar)
    _emit(report.to_json(), args.out)
    if args.out is not None:
        verdict = "reject" if report.reject else "accept"
        sys.stdout.write(
            f"{verdict}: sup={report.sup_statistic:.4f} vs "
            f"q={report.critical_value:.4f} (delta={report.delta}); "
            f"report written to {args.out}\n")
    if args.per_window_out is not None:
        with open(args.per_window_out, "w", encoding="utf-8") as fh:
            fh.write(_per_window_csv(report))
    return 0


def cmd_simulate(args) -> int:
    if args.theta is not None:
        r, s = _parse_order(args.order)
        theta = _parse_floats(args.theta, "--theta")
        if len(theta) != 1 + r + s:
            raise ConfigError(
                f"--theta has {len(theta)} entries but GARCH({r},{s}) "
                f"needs {1 + r + s}")
        base = GarchParams(theta[0], tuple(theta[1:1 + r]),
                           tuple(theta[1 + r:]))
        h = (_parse_floats(args.h_direction, "--h-direction")
             if args.h_direction else [0.0] * (1 + r + s))
    elif args.scenario is not None:
        base, h_default = scenario_params(args.scenario)
        h = (_parse_floats(args.h_direction, "--h-direction")
             if args.h_direction else list(h_default))
    else:
        raise ConfigError("simulate needs --scenario or --theta")

    if args.magnitude > 0.0:
        spec = ShockSpec(base, tuple(h), args.magnitude, args.tau1_star,
                         args.tau2_star)
    else:
        spec = ShockSpec(base)
    dist = InnovationDist(args.innovation, args.df)
    sample = simulate(spec, args.n, dist, seed=args.seed,
                      burn_in=args.burn_in)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "sigma2"])
    for xi, s2 in zip(sample.x, sample.sigma2):
        writer.writerow([f"{xi:.12g}", f"{s2:.12g}"])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_study(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = StudyConfig.from_json(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {args.config} is not valid JSON: {exc}")
    if args.threads is not None:
        from dataclasses import replace
        config = replace(config, threads=args.threads)

    result = size_study(config) if args.kind == "size" else power_study(config)
    sys.stdout.write(result.to_text())
    if args.out_prefix is not None:
        csv_path, txt_path = result.save(args.out_prefix)
        sys.stdout.write(f"tables written to {csv_path} and {txt_path}\n")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 1
    except IngestError as exc:
        log.error("ingest error: %s", exc)
        return 2
    except FitError as exc:
        log.error("fitting error: %s", exc)
        return 3
    except InferenceError as exc:
        log.error("inference error: %s", exc)
        return 4
    except SimulationOverflowError as exc:
        log.error("simulation overflow at observation %d: the requested "
                  "parameters are too far outside strict stationarity",
                  exc.index)
        return 1
    except GarchsupError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
