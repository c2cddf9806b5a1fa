"""End-to-end run orchestration: manifests, reports, output files."""

import json

import numpy as np
import pytest

from biphoton.config import RunConfig, config_hash
from biphoton.errors import DataError
from biphoton.events import parse_events
from biphoton.pipeline import (
    AUTO_LABEL,
    MANIFEST_NAME,
    CorrelationReport,
    _background_grid,
    correlate_events,
    run_pipeline,
    setting_labels,
    simulate_run,
    stream_seed,
    tomography_input_from_json,
    tomography_input_from_report,
)
from biphoton.tomography import measurement_set

FAST = dict(cycles=4000, bootstrap_resamples=0, partitions=2)


def test_stream_seeds_distinct_and_stable():
    seeds = [stream_seed(11, i) for i in range(13)]
    assert len(set(seeds)) == 13
    assert seeds[0] == 11 + 1_000_003
    assert stream_seed(11, 0) == seeds[0]
    # different base seeds never collide within the run
    other = {stream_seed(12, i) for i in range(13)}
    assert not other & set(seeds)


def test_setting_labels_order():
    labels = setting_labels()
    assert labels == [s.label for s in measurement_set()]
    assert labels[0] == "H_rect"
    assert len(labels) == 12


def test_simulate_run_manifest(tmp_path):
    cfg = RunConfig(seed=5, **FAST)
    manifest = simulate_run(cfg, tmp_path)
    assert manifest["config_hash"] == config_hash(cfg)
    assert manifest["event_format"] == "binary"
    assert [f["label"] for f in manifest["files"]] == setting_labels() + [AUTO_LABEL]
    on_disk = json.loads((tmp_path / MANIFEST_NAME).read_text())
    assert on_disk == manifest
    for entry in manifest["files"]:
        path = tmp_path / entry["path"]
        assert path.exists()
        stream = parse_events(path, "binary")
        assert len(stream) == entry["records"]
        assert stream.counts_by_channel() == entry["channel_counts"]


def test_simulate_run_label_subset(tmp_path):
    cfg = RunConfig(seed=5, **FAST)
    manifest = simulate_run(cfg, tmp_path, labels=["H_rect", "L_circ"], include_auto=False)
    assert [f["label"] for f in manifest["files"]] == ["H_rect", "L_circ"]
    assert len(list(tmp_path.glob("events_*"))) == 2
    with pytest.raises(DataError, match="unknown setting"):
        simulate_run(cfg, tmp_path, labels=["H_bogus"])


def test_correlate_directory_with_manifest(tmp_path):
    cfg = RunConfig(seed=6, **FAST)
    simulate_run(cfg, tmp_path)
    report = correlate_events(tmp_path, max_delay=8, expected_hash=config_hash(cfg))
    assert set(report.correlations) == set(setting_labels())
    assert report.config_hash == config_hash(cfg)
    assert report.auto_peak is not None
    assert len(report.correlations["H_rect"].delays) == 17
    data = report.to_json_dict()
    assert set(data["settings"]) == set(setting_labels())
    assert "autocorrelation" in data and "config_hash" in data


def test_correlate_hash_mismatch(tmp_path):
    cfg = RunConfig(seed=6, **FAST)
    simulate_run(cfg, tmp_path, labels=["H_rect"], include_auto=False)
    with pytest.raises(DataError, match="config hash mismatch"):
        correlate_events(tmp_path, expected_hash="0" * 64)


def test_correlate_single_file_and_loose_directory(tmp_path):
    cfg = RunConfig(seed=7, **FAST)
    simulate_run(cfg, tmp_path, labels=["D_diag"], include_auto=False)
    (tmp_path / MANIFEST_NAME).unlink()
    single = correlate_events(tmp_path / "events_D_diag.bin")
    assert list(single.correlations) == ["D_diag"]
    assert single.config_hash is None
    loose = correlate_events(tmp_path)
    assert list(loose.correlations) == ["D_diag"]
    assert loose.correlations["D_diag"].n_co == single.correlations["D_diag"].n_co


def test_correlate_missing_and_empty_inputs(tmp_path):
    with pytest.raises(DataError, match="no such file or directory"):
        correlate_events(tmp_path / "nowhere")
    empty_dir = tmp_path / "empty"
    empty_dir.mkdir()
    with pytest.raises(DataError, match="no event files found"):
        correlate_events(empty_dir)
    hollow = tmp_path / "events_H_rect.csv"
    hollow.write_text("cycle,channel\n")
    with pytest.raises(DataError, match=r"empty event file: .*events_H_rect\.csv"):
        correlate_events(hollow)


def test_tomography_input_from_report(tmp_path):
    cfg = RunConfig(seed=8, **FAST)
    simulate_run(cfg, tmp_path)
    report = correlate_events(tmp_path)
    tomo_input = tomography_input_from_report(report)
    assert len(tomo_input.entries) == 12
    entry = tomo_input.entry("H", "rect")
    res = report.correlations["H_rect"]
    assert entry.c == res.c0
    assert entry.n_co == res.n_co and entry.n_cross == res.n_cross
    partial = CorrelationReport(correlations={"H_rect": res})
    with pytest.raises(DataError, match="missing settings: .*V_rect"):
        tomography_input_from_report(partial)


def test_tomography_input_from_json_both_shapes(tmp_path):
    cfg = RunConfig(seed=9, **FAST)
    simulate_run(cfg, tmp_path)
    report = correlate_events(tmp_path)
    via_report = tomography_input_from_json(report.to_json_dict())
    via_entries = tomography_input_from_json(tomography_input_from_report(report).to_json_dict())
    for setting in measurement_set():
        assert via_report.c(setting.xx, setting.basis) == via_entries.c(setting.xx, setting.basis)
    with pytest.raises(DataError, match="entries.*settings|settings.*entries"):
        tomography_input_from_json({"foo": 1})
    broken = report.to_json_dict()
    del broken["settings"]["H_rect"]["C"]
    with pytest.raises(DataError, match="bad correlation entry 'H_rect'"):
        tomography_input_from_json(broken)


def test_background_grid():
    grid = _background_grid(0.14)
    np.testing.assert_allclose(grid, [0.11, 0.12, 0.13, 0.14, 0.15, 0.16, 0.17], atol=1e-9)
    assert _background_grid(0.01)[0] == 0.0
    assert _background_grid(0.94)[-1] == 0.95
    assert len(_background_grid(0.0)) == 7


def test_run_pipeline_in_memory():
    # a touch of scramble keeps the bootstrap variance nonzero (C = 1 exactly
    # has no counting noise to resample)
    cfg = RunConfig(seed=10, cycles=6000, scramble_prob=0.06,
                    bootstrap_resamples=40, partitions=2)
    result = run_pipeline(cfg)
    assert result.config_hash == config_hash(cfg)
    assert set(result.headline()) == {"rect", "diag", "circ"}
    assert result.expected_dip == 0.0
    assert len(result.sensitivity) == 7
    assert result.table.row("fidelity").sigma > 0
    summary = result.summary_dict()
    assert summary["config_hash"] == result.config_hash
    assert set(summary["zero_delay_C"]) == set(setting_labels())
    assert summary["tests"]["all_pass"] is True  # clean source, plenty of counts
    assert summary["autocorrelation"]["expected_dip"] == 0.0
    assert result.headline()["rect"] > 0.85
    assert result.headline()["circ"] < -0.85


def test_run_pipeline_writes_run_directory(tmp_path):
    cfg = RunConfig(seed=11, **FAST)
    result = run_pipeline(cfg, out_dir=tmp_path)
    expected = {MANIFEST_NAME, "report.json", "tomography.json", "tests.txt", "summary.json"}
    names = {p.name for p in tmp_path.iterdir()}
    assert expected <= names
    assert {f"events_{label}.bin" for label in setting_labels() + [AUTO_LABEL]} <= names
    assert {f"c_vs_delay_{label}.csv" for label in setting_labels()} <= names
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary == json.loads(json.dumps(result.summary_dict()))
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config_hash"] == result.config_hash
    tomo = json.loads((tmp_path / "tomography.json").read_text())
    assert tomo["config_hash"] == result.config_hash
    csv_lines = (tmp_path / "c_vs_delay_H_rect.csv").read_text().splitlines()
    assert csv_lines[0] == "delay,C,sigma"
    assert len(csv_lines) == 2 * cfg.max_delay + 2
    # the recorded streams correlate back to the in-memory report
    replay = correlate_events(tmp_path, max_delay=cfg.max_delay)
    for label, res in result.report.correlations.items():
        assert replay.correlations[label].c0 == res.c0


def test_run_pipeline_deterministic(tmp_path):
    cfg = RunConfig(seed=12, **FAST, bootstrap_seed=1)
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    run_pipeline(cfg, out_dir=a_dir)
    run_pipeline(cfg, out_dir=b_dir)
    for name in ["summary.json", "report.json", "tomography.json", MANIFEST_NAME]:
        assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes()
    other = run_pipeline(RunConfig(seed=13, **FAST))
    base = json.loads((a_dir / "summary.json").read_text())
    assert other.summary_dict()["zero_delay_C"] != base["zero_delay_C"]
