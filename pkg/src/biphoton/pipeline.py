"""End-to-end run: simulate all settings, correlate, reconstruct, test.

Stages run sequentially and stream per setting: each of the twelve analysis
settings is simulated, optionally written to disk, and correlated before the
next starts, so peak memory stays at a single stream. Every output written
here embeds the resolved config hash; readers reject mixed-hash inputs.

Per-setting seeds are derived from the run seed by a fixed stride so that
the thirteen streams (twelve settings plus the trigger autocorrelation) are
statistically independent yet fully reproducible; the manifest records them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cascade import background_sensitivity, expected_autocorr_dip, simulate_events, xx_autocorrelation_sim
from .coincidence import (
    NormalizedPeak,
    SettingCorrelation,
    autocorrelation_peak,
    correlate_stream,
    series_csv_lines,
)
from .config import RunConfig, config_hash
from .errors import DataError
from .events import detect_format, parse_events, stream_path, write_events
from .metrics import TestTable, bootstrap_metric_sigmas, table_from_tomography
from .tomography import TomographyEntry, TomographyInput, TomographyResult, measurement_set, reconstruct

AUTO_LABEL = "auto"
MANIFEST_NAME = "manifest.json"
_SEED_STRIDE = 1_000_003


def setting_labels() -> list[str]:
    return [s.label for s in measurement_set()]


def stream_seed(base_seed: int, index: int) -> int:
    """Seed for stream #index (0..11 the settings, 12 the autocorrelation)."""
    return base_seed + _SEED_STRIDE * (index + 1)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from exc


def simulate_run(cfg: RunConfig, out_dir, labels: list[str] | None = None,
                 include_auto: bool = True) -> dict:
    """Simulate the requested settings into out_dir; returns the manifest dict.

    labels=None means all twelve. The manifest records the config hash, the
    stream format, and per-file seeds and channel counts.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p = cfg.dot_params()
    fmt = cfg.event_format
    all_settings = {s.label: s for s in measurement_set()}
    if labels is None:
        labels = list(all_settings)
    files = []
    for label in labels:
        if label not in all_settings:
            raise DataError(f"unknown setting {label!r}; expected one of {sorted(all_settings)}")
        index = list(all_settings).index(label)
        seed = stream_seed(cfg.seed, index)
        stream = simulate_events(p, cfg.detection(all_settings[label], seed=seed))
        path = stream_path(out, label, fmt)
        write_events(stream, path, fmt)
        files.append({
            "label": label,
            "path": path.name,
            "seed": seed,
            "records": len(stream),
            "channel_counts": stream.counts_by_channel(),
        })
    if include_auto:
        seed = stream_seed(cfg.seed, len(all_settings))
        stream = xx_autocorrelation_sim(p, cfg.detection(None, seed=seed))
        path = stream_path(out, AUTO_LABEL, fmt)
        write_events(stream, path, fmt)
        files.append({
            "label": AUTO_LABEL,
            "path": path.name,
            "seed": seed,
            "records": len(stream),
            "channel_counts": stream.counts_by_channel(),
        })
    manifest = {
        "config_hash": config_hash(cfg),
        "config": {k: v for k, v in cfg.to_dict().items() if v is not None},
        "event_format": fmt,
        "files": files,
    }
    _write_json(out / MANIFEST_NAME, manifest)
    return manifest


@dataclass
class CorrelationReport:
    """Zero-delay C per setting plus full delay series; the tomography feedstock."""

    correlations: dict[str, SettingCorrelation]
    auto_peak: NormalizedPeak | None = None
    config_hash: str | None = None

    def to_json_dict(self) -> dict:
        settings = {}
        for label, res in sorted(self.correlations.items()):
            settings[label] = {
                "C": res.c0,
                "sigma": res.c0_sigma,
                "n_co": res.n_co,
                "n_cross": res.n_cross,
                "g_co": res.peak_co.g0,
                "g_co_sigma": res.peak_co.sigma,
                "g_cross": res.peak_cross.g0,
                "g_cross_sigma": res.peak_cross.sigma,
                "delays": list(res.delays),
                "C_series": list(res.c_series),
                "sigma_series": list(res.sigma_series),
            }
        out: dict = {"settings": settings}
        if self.auto_peak is not None:
            out["autocorrelation"] = {
                "g2_zero": self.auto_peak.g0,
                "sigma": self.auto_peak.sigma,
                "zero_count": self.auto_peak.zero_count,
                "side_mean": self.auto_peak.side_mean,
            }
        if self.config_hash is not None:
            out["config_hash"] = self.config_hash
        return out


def _correlate_file(path: Path, max_delay: int, fmt: str | None = None) -> SettingCorrelation:
    fmt = fmt or detect_format(path)
    stream = parse_events(path, fmt)
    if len(stream) == 0:
        raise DataError(f"empty event file: {path}")
    return correlate_stream(stream, max_delay)


def correlate_events(source, max_delay: int = 10, expected_hash: str | None = None) -> CorrelationReport:
    """Correlate one event file or a simulate_run directory.

    With a directory, the manifest (when present) names the files and carries
    the config hash; expected_hash must match it. Loose directories are
    scanned for events_*.{csv,bin}.
    """
    src = Path(source)
    if src.is_file():
        label = src.stem.removeprefix("events_")
        res = _correlate_file(src, max_delay)
        return CorrelationReport(correlations={label: res})
    if not src.is_dir():
        raise DataError(f"no such file or directory: {src}")

    manifest = None
    manifest_path = src / MANIFEST_NAME
    if manifest_path.exists():
        manifest = _read_json(manifest_path)
        found_hash = manifest.get("config_hash")
        if expected_hash is not None and found_hash != expected_hash:
            raise DataError(
                f"config hash mismatch: {src} was simulated with {found_hash}, expected {expected_hash}"
            )
    correlations: dict[str, SettingCorrelation] = {}
    auto_peak = None
    if manifest is not None:
        entries = [(f["label"], src / f["path"]) for f in manifest["files"]]
    else:
        entries = [(p.stem.removeprefix("events_"), p)
                   for p in sorted(src.glob("events_*")) if p.suffix in (".csv", ".bin")]
    if not entries:
        raise DataError(f"no event files found in {src}")
    for label, path in entries:
        if label == AUTO_LABEL:
            fmt = detect_format(path)
            stream = parse_events(path, fmt)
            if len(stream) == 0:
                raise DataError(f"empty event file: {path}")
            auto_peak = autocorrelation_peak(stream, max_delay)
        else:
            correlations[label] = _correlate_file(path, max_delay)
    return CorrelationReport(
        correlations=correlations,
        auto_peak=auto_peak,
        config_hash=None if manifest is None else manifest.get("config_hash"),
    )


def tomography_input_from_report(report: CorrelationReport) -> TomographyInput:
    """Twelve-entry tomography input; zero-delay counts feed the bootstrap."""
    entries = []
    for setting in measurement_set():
        if setting.label not in report.correlations:
            missing = [s.label for s in measurement_set() if s.label not in report.correlations]
            raise DataError(f"missing settings: {', '.join(missing)}")
        res = report.correlations[setting.label]
        entries.append(
            TomographyEntry(setting.xx, setting.basis, res.c0, n_co=res.n_co, n_cross=res.n_cross)
        )
    return TomographyInput(entries)


def tomography_input_from_json(data: dict) -> TomographyInput:
    """Accept either the raw twelve-entry form or a correlation report dict."""
    if "entries" in data:
        return TomographyInput.from_json_dict(data)
    if "settings" in data:
        entries = []
        for label, rec in data["settings"].items():
            xx, _, basis = label.partition("_")
            try:
                entries.append(
                    TomographyEntry(
                        xx, basis, float(rec["C"]),
                        n_co=None if rec.get("n_co") is None else int(rec["n_co"]),
                        n_cross=None if rec.get("n_cross") is None else int(rec["n_cross"]),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"bad correlation entry {label!r}: {exc}") from exc
        try:
            return TomographyInput(entries)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
    raise DataError("tomography input needs an 'entries' list or a 'settings' report")


def _background_grid(b: float) -> np.ndarray:
    lo = max(0.0, b - 0.03)
    hi = min(0.95, b + 0.03)
    return np.round(np.linspace(lo, hi, 7), 6)


@dataclass
class PipelineResult:
    config: RunConfig
    config_hash: str
    report: CorrelationReport
    tomography: TomographyResult
    table: TestTable
    expected_dip: float
    sensitivity: list[dict]

    def headline(self) -> dict[str, float]:
        return {
            "rect": self.report.correlations["H_rect"].c0,
            "diag": self.report.correlations["D_diag"].c0,
            "circ": self.report.correlations["L_circ"].c0,
        }

    def summary_dict(self) -> dict:
        auto = self.report.auto_peak
        return {
            "config": {k: v for k, v in self.config.to_dict().items() if v is not None},
            "config_hash": self.config_hash,
            "zero_delay_C": {label: res.c0 for label, res in sorted(self.report.correlations.items())},
            "zero_delay_C_sigma": {
                label: res.c0_sigma for label, res in sorted(self.report.correlations.items())
            },
            "headline": self.headline(),
            "autocorrelation": {
                "g2_zero": auto.g0,
                "sigma": auto.sigma,
                "expected_dip": self.expected_dip,
            },
            "consistency_residual": self.tomography.consistency_residual,
            "fidelity": self.table.row("fidelity").value,
            "tests": self.table.to_json_dict(),
            "background_sensitivity": self.sensitivity,
        }


def run_pipeline(cfg: RunConfig, out_dir=None) -> PipelineResult:
    """All stages in order; out_dir (optional) receives the full run directory.

    On disk: event streams + manifest, the correlation report, per-setting
    delay-series CSVs, the tomography result, the test table, summary.json.
    """
    p = cfg.dot_params()
    run_hash = config_hash(cfg)
    out = None if out_dir is None else Path(out_dir)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    fmt = cfg.event_format

    correlations: dict[str, SettingCorrelation] = {}
    manifest_files = []
    for index, setting in enumerate(measurement_set()):
        seed = stream_seed(cfg.seed, index)
        stream = simulate_events(p, cfg.detection(setting, seed=seed))
        if out is not None:
            path = stream_path(out, setting.label, fmt)
            write_events(stream, path, fmt)
            manifest_files.append({
                "label": setting.label,
                "path": path.name,
                "seed": seed,
                "records": len(stream),
                "channel_counts": stream.counts_by_channel(),
            })
        correlations[setting.label] = correlate_stream(stream, cfg.max_delay)
        del stream

    auto_seed = stream_seed(cfg.seed, len(correlations))
    auto_stream = xx_autocorrelation_sim(p, cfg.detection(None, seed=auto_seed))
    if out is not None:
        path = stream_path(out, AUTO_LABEL, fmt)
        write_events(auto_stream, path, fmt)
        manifest_files.append({
            "label": AUTO_LABEL,
            "path": path.name,
            "seed": auto_seed,
            "records": len(auto_stream),
            "channel_counts": auto_stream.counts_by_channel(),
        })
    auto_peak = autocorrelation_peak(auto_stream, cfg.max_delay)
    del auto_stream

    report = CorrelationReport(correlations=correlations, auto_peak=auto_peak, config_hash=run_hash)
    tomo_input = tomography_input_from_report(report)
    n_res = cfg.bootstrap_resamples or None
    boot_seed = cfg.resolved_bootstrap_seed()
    tomo = reconstruct(tomo_input, n_resamples=n_res, seed=boot_seed)
    if n_res:
        tomo.metric_sigmas = bootstrap_metric_sigmas(tomo_input, n_res, boot_seed)
    table = table_from_tomography(tomo)

    result = PipelineResult(
        config=cfg,
        config_hash=run_hash,
        report=report,
        tomography=tomo,
        table=table,
        expected_dip=expected_autocorr_dip(p),
        sensitivity=background_sensitivity(p, _background_grid(p.background_fraction)),
    )

    if out is not None:
        _write_json(out / MANIFEST_NAME, {
            "config_hash": run_hash,
            "config": {k: v for k, v in cfg.to_dict().items() if v is not None},
            "event_format": fmt,
            "files": manifest_files,
        })
        _write_json(out / "report.json", report.to_json_dict())
        for label, res in sorted(correlations.items()):
            series_path = out / f"c_vs_delay_{label}.csv"
            series_path.write_text("\n".join(series_csv_lines(res)) + "\n")
        tomo_payload = tomo.to_json_dict()
        tomo_payload["config_hash"] = run_hash
        _write_json(out / "tomography.json", tomo_payload)
        (out / "tests.txt").write_text("\n".join(table.text_lines()) + "\n")
        _write_json(out / "summary.json", result.summary_dict())
    return result
