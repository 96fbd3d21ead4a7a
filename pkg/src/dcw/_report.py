"""Report emission: CSV tables, JSON summary and run manifest.

Table families (pv, to, to_exact, ceq, nceq, betc) have one row per strategy and
exposure bound and one column per period (years, then "All"). Envelope,
sector-share and R-squared data are written in long format for external
plotting. All JSON is written with sorted keys and no timestamps, so a rerun
with the same inputs reproduces every file byte for byte.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Iterable
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import ValidationError

from dcw._base import format_bound
from dcw._config import BacktestConfig
from dcw._evaluation import (
    PerformanceReport,
    PeriodMetrics,
    SwitchMetrics,
    envelope_difference,
    pv_improvement,
    r2_histogram,
)
from dcw._exceptions import OutputError, ParseError
from dcw._forecast import summarize_cross_section
from dcw._labeled_enum import Strategy

logger = logging.getLogger(__name__)

REPORT_FILE = "report.json"
SUMMARY_FILE = "summary.json"
MANIFEST_FILE = "manifest.json"


def _dump_json(data: Any, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _json_float(value: float | None) -> float | str | None:
    if value is None:
        return None
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return None
    return value


def _table(
    rows: Iterable[tuple[str, str, str, Any]], periods: tuple[str, ...], first: str
) -> pd.DataFrame:
    """Wide table from (row label, ec, period, value) tuples in row-appearance order."""
    ordered: dict[tuple[str, str], dict[str, Any]] = {}
    for label, ec, period, value in rows:
        ordered.setdefault((label, ec), {})[period] = value
    records = [
        {first: label, "ec": ec, **{p: values.get(p) for p in periods}}
        for (label, ec), values in ordered.items()
    ]
    return pd.DataFrame.from_records(records, columns=[first, "ec", *periods])


def _metric_table(
    report: PerformanceReport, value: Callable[[PeriodMetrics], float | None]
) -> pd.DataFrame:
    rows = [(m.strategy.label, format_bound(m.ec), m.period, value(m)) for m in report.metrics]
    return _table(rows, report.periods, "strategy")


def _switch_label(s: SwitchMetrics) -> str:
    return f"{s.source.label}->{s.target.label}"


def _switch_table(report: PerformanceReport, value: Callable[[SwitchMetrics], Any]) -> pd.DataFrame:
    rows = [(_switch_label(s), format_bound(s.ec), s.period, value(s)) for s in report.switches]
    return _table(rows, report.periods, "switch")


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")


def _envelope_frames(report: PerformanceReport) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    curves, breaks, diffs = [], [], []
    baseline = next((e for e in report.envelopes if e.strategy is Strategy.VT), None)
    for env in report.envelopes:
        curves.append(
            pd.DataFrame(
                {
                    "strategy": env.strategy.label,
                    "tau_bp": env.grid,
                    "utility_bp": env.values,
                    "best_ec": [format_bound(ec) for ec in env.argmax_ec],
                }
            )
        )
        breaks.extend(
            {"strategy": env.strategy.label, "tau_bp": b.tau_bp,
             "from_ec": format_bound(b.from_ec), "to_ec": format_bound(b.to_ec)}
            for b in env.breakpoints
        )
        if baseline is not None and env.strategy is not Strategy.VT:
            diffs.append(
                pd.DataFrame(
                    {
                        "strategy": env.strategy.label,
                        "tau_bp": env.grid,
                        "difference_bp": envelope_difference(env, baseline),
                    }
                )
            )
    empty = pd.DataFrame()
    return (
        pd.concat(curves, ignore_index=True) if curves else empty,
        pd.DataFrame.from_records(breaks, columns=["strategy", "tau_bp", "from_ec", "to_ec"]),
        pd.concat(diffs, ignore_index=True) if diffs else pd.DataFrame(columns=["strategy", "tau_bp", "difference_bp"]),
    )


def _sector_frame(report: PerformanceReport) -> pd.DataFrame:
    frames = []
    for shares in report.sector_shares:
        t, s = shares.shares.shape
        frames.append(
            pd.DataFrame(
                {
                    "strategy": shares.strategy.label,
                    "ec": format_bound(shares.ec),
                    "date": np.repeat([d.isoformat() for d in shares.dates], s),
                    "sector": np.tile(shares.sectors, t),
                    "share": shares.shares.ravel(),
                    "cumulative": shares.cumulative().ravel(),
                }
            )
        )
    columns = ["strategy", "ec", "date", "sector", "share", "cumulative"]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)


def _r2_frames(report: PerformanceReport, bins: int) -> tuple[pd.DataFrame, pd.DataFrame, pd.DataFrame]:
    columns = ["strategy", "ec", "window", "ticker", "kind", "value"]
    long = pd.DataFrame.from_records(
        [
            {"strategy": r.strategy.label, "ec": format_bound(r.ec), "window": r.window,
             "ticker": r.ticker, "kind": r.kind, "value": r.value}
            for r in report.r2
        ],
        columns=columns,
    )
    hist, summary = [], []
    groups: dict[tuple[str, str, str], list[float]] = {}
    windows: dict[tuple[str, str, str, str], list[float]] = {}
    for r in report.r2:
        key = (r.strategy.label, format_bound(r.ec), r.kind)
        groups.setdefault(key, []).append(r.value)
        windows.setdefault((*key, r.window), []).append(r.value)
    for (strategy, ec, kind), values in groups.items():
        edges, densities = r2_histogram(values, bins)
        hist.append(
            pd.DataFrame(
                {"strategy": strategy, "ec": ec, "kind": kind,
                 "bin_left": edges[:-1], "bin_right": edges[1:], "density": densities}
            )
        )
    for (strategy, ec, kind, window), values in windows.items():
        if not np.isfinite(values).any():
            continue
        s = summarize_cross_section(values)
        summary.append({"strategy": strategy, "ec": ec, "kind": kind, "window": window, **s.model_dump()})
    return (
        long,
        pd.concat(hist, ignore_index=True) if hist else pd.DataFrame(),
        pd.DataFrame.from_records(summary),
    )


def _summary(report: PerformanceReport) -> dict[str, Any]:
    metrics = [
        {
            "strategy": m.strategy.label, "ec": format_bound(m.ec), "period": m.period, "days": m.days,
            "pv": m.pv, "to": m.to, "to_exact": m.to_exact, "avg_return": m.avg_return,
        }
        for m in report.metrics
    ]
    naive = {m.period: m.pv for m in report.metrics if m.strategy is Strategy.NAIVE}
    improvements = [
        {"strategy": m.strategy.label, "ec": format_bound(m.ec), "period": m.period,
         "pv_improvement_pct": pv_improvement(naive[m.period], m.pv)}
        for m in report.metrics
        if m.strategy is not Strategy.NAIVE and naive.get(m.period)
    ]
    switches = [
        {
            "switch": _switch_label(s), "ec": format_bound(s.ec), "period": s.period,
            "ceq_bp": s.ceq_bp, "nceq_bp": s.nceq_bp, "betc": s.betc.label,
        }
        for s in report.switches
    ]
    return {
        "tickers": list(report.tickers),
        "periods": list(report.periods),
        "metrics": metrics,
        "pv_improvement_vs_naive": improvements,
        "switches": switches,
        "best_ec": {k: format_bound(v) for k, v in sorted(report.best_ec.items())},
        "repaired_days": report.repaired_days,
        "floored_forecasts": report.floored_forecasts,
    }


def _sanitize(value: Any) -> Any:
    if isinstance(value, float):
        return _json_float(value)
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_sanitize(v) for v in value]
    return value


def emit_reports(
    report: PerformanceReport,
    out_dir: Path | str,
    cfg: BacktestConfig | None = None,
    config_hash: str | None = None,
    config: dict[str, Any] | None = None,
) -> list[Path]:
    """Write every table, the JSON summary and the run manifest.

    Args:
        report: Report to emit
        out_dir: Output directory (created if missing)
        cfg: Config the report was produced with; its hash goes into the manifest
        config_hash: Hash to record when cfg is not available (re-emission)
        config: Config dump to record when cfg is not available

    Returns:
        Paths of the files written, in order

    Raises:
        OutputError: If the directory or a file cannot be written
    """
    from dcw import __version__

    out = Path(out_dir)
    if cfg is not None:
        bins = cfg.eval.r2_bins
    else:
        bins = int(((config or {}).get("eval") or {}).get("r2_bins", 20))
    try:
        out.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []

        def save(frame: pd.DataFrame, name: str) -> None:
            _write_csv(frame, out / name)
            written.append(out / name)

        save(_metric_table(report, lambda m: m.pv), "pv.csv")
        save(_metric_table(report, lambda m: m.to), "to.csv")
        if any(m.to_exact is not None for m in report.metrics):
            save(_metric_table(report, lambda m: m.to_exact), "to_exact.csv")
        if report.switches:
            save(_switch_table(report, lambda s: s.ceq_bp), "ceq.csv")
            save(_switch_table(report, lambda s: s.nceq_bp), "nceq.csv")
            save(_switch_table(report, lambda s: s.betc.label), "betc.csv")
        curves, breaks, diffs = _envelope_frames(report)
        save(curves, "envelopes.csv")
        save(breaks, "envelope_breakpoints.csv")
        save(diffs, "envelope_differences.csv")
        if report.sector_shares:
            save(_sector_frame(report), "sector_shares.csv")
        long, hist, r2_summary = _r2_frames(report, bins)
        save(long, "r2.csv")
        save(hist, "r2_histogram.csv")
        save(r2_summary, "r2_summary.csv")
        if report.dcw_summaries:
            save(pd.DataFrame.from_records([s.model_dump() for s in report.dcw_summaries]), "dcw_params.csv")

        (out / REPORT_FILE).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        written.append(out / REPORT_FILE)
        _dump_json(_sanitize(_summary(report)), out / SUMMARY_FILE)
        written.append(out / SUMMARY_FILE)

        manifest = {
            "version": __version__,
            "config_hash": cfg.config_hash() if cfg is not None else config_hash,
            "config": cfg.model_dump(mode="json") if cfg is not None else config,
            "files": [p.name for p in written],
        }
        _dump_json(_sanitize(manifest), out / MANIFEST_FILE)
        written.append(out / MANIFEST_FILE)
    except OSError as e:
        raise OutputError(str(out), str(e)) from e
    logger.info("Wrote %d report file(s) to %s", len(written), out)
    return written


def load_report(in_dir: Path | str) -> tuple[PerformanceReport, dict[str, Any]]:
    """Read a persisted report and its manifest.

    Raises:
        ParseError: If report.json is missing or invalid
    """
    directory = Path(in_dir)
    path = directory / REPORT_FILE
    try:
        report = PerformanceReport.model_validate_json(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(str(path), None, str(e)) from e
    except ValidationError as e:
        raise ParseError(str(path), None, f"invalid report ({e.error_count()} error(s))") from e
    manifest: dict[str, Any] = {}
    manifest_path = directory / MANIFEST_FILE
    if manifest_path.exists():
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ParseError(str(manifest_path), e.lineno, e.msg) from e
    return report, manifest


def reemit_reports(in_dir: Path | str, out_dir: Path | str | None = None) -> list[Path]:
    """Re-emit every table from a persisted report.json, keeping the manifest's config."""
    report, manifest = load_report(in_dir)
    return emit_reports(
        report,
        out_dir if out_dir is not None else in_dir,
        config_hash=manifest.get("config_hash"),
        config=manifest.get("config"),
    )
