"""Command-line interface: the full chain, formats, and exit codes."""

import json

import numpy as np
import pytest

from biphoton.cli import main
from biphoton.polarization import bell_phi
from biphoton.tomography import input_from_state

CFG = """
seed = 21
cycles = 3000
partitions = 1
bootstrap_resamples = 0
max_delay = 6
"""


@pytest.fixture()
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(CFG)
    return str(path)


def test_full_chain(tmp_path, cfg_file, capsys):
    sim_dir = tmp_path / "sim"
    assert main(["simulate", "--config", cfg_file, "--out", str(sim_dir)]) == 0
    out = capsys.readouterr().out
    assert "config hash" in out
    assert out.count("records") == 13
    assert (sim_dir / "manifest.json").exists()
    assert len(list(sim_dir.glob("events_*.bin"))) == 13

    ana_dir = tmp_path / "ana"
    assert main(["correlate", str(sim_dir), "--config", cfg_file, "--out", str(ana_dir)]) == 0
    out = capsys.readouterr().out
    assert "autocorrelation g2(0)" in out
    assert "H_rect" in out
    assert (ana_dir / "report.json").exists()
    assert (ana_dir / "c_vs_delay_H_rect.csv").exists()
    assert (ana_dir / "histogram_H_rect_co.csv").exists()
    assert (ana_dir / "histogram_L_circ_cross.csv").exists()

    tomo_file = tmp_path / "tomo.json"
    rc = main(["tomo", str(ana_dir / "report.json"), "--format", "json", "--out", str(tomo_file)])
    assert rc == 0
    tomo = json.loads(tomo_file.read_text())
    assert "config_hash" in tomo  # carried through from the report
    assert abs(tomo["consistency_residual"]) < 0.1
    assert np.array(tomo["t_matrix"]).shape == (3, 3)

    assert main(["metrics", str(tomo_file)]) == 0
    out = capsys.readouterr().out
    assert "fidelity" in out and "peres_min_eigenvalue" in out
    assert "NO" not in out  # clean source passes everything

    assert main(["metrics", str(tomo_file), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "name,value,sigma,limit,passes,sigmas_clear"


def test_pipeline_json_and_determinism(cfg_file, capsys):
    argv = ["pipeline", "--config", cfg_file, "--format", "json"]
    assert main(argv) == 0
    first = capsys.readouterr().out
    summary = json.loads(first)
    assert summary["tests"]["all_pass"] is True
    assert set(summary["headline"]) == {"rect", "diag", "circ"}
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_pipeline_text_output(cfg_file, capsys):
    assert main(["pipeline", "--config", cfg_file]) == 0
    out = capsys.readouterr().out
    assert "zero-delay C" in out
    assert "consistency residual" in out


def test_seed_override_changes_hash(tmp_path, capsys):
    argv = ["simulate", "--config", "ideal", "--set", "cycles=500", "--set", "partitions=1"]
    hashes = []
    for seed in ("1", "2"):
        rc = main(argv + ["--seed", seed, "--out", str(tmp_path / f"seed_{seed}")])
        assert rc == 0
        line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("config hash")][0]
        hashes.append(line.split()[-1])
    assert hashes[0] != hashes[1]


def test_simulate_single_setting(tmp_path, cfg_file, capsys):
    sim_dir = tmp_path / "one"
    assert main(["simulate", "--config", cfg_file, "--setting", "D_diag", "--out", str(sim_dir)]) == 0
    capsys.readouterr()
    assert [p.name for p in sim_dir.glob("events_*")] == ["events_D_diag.bin"]


def test_tomo_accepts_entries_file(tmp_path, capsys):
    entries = input_from_state(bell_phi(0.0)).to_json_dict()
    path = tmp_path / "entries.json"
    path.write_text(json.dumps(entries))
    assert main(["tomo", str(path), "--format", "json"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert abs(body["consistency_residual"]) < 1e-12
    assert body.get("metric_sigmas") is None
    np.testing.assert_allclose(body["t_matrix"], np.diag([1.0, -1.0, 1.0]), atol=1e-12)


def test_tomo_resamples_need_counts(tmp_path, capsys):
    entries = input_from_state(bell_phi(0.0)).to_json_dict()
    path = tmp_path / "entries.json"
    path.write_text(json.dumps(entries))
    assert main(["tomo", str(path), "--resamples", "10"]) == 2
    assert "n_co" in capsys.readouterr().err


# ------------------------------------------------------------- failure modes


def test_usage_errors_exit_1(tmp_path, cfg_file, capsys):
    assert main(["pipeline", "--set", "cycles=100"]) == 1
    assert "seed is required" in capsys.readouterr().err

    assert main(["simulate", "--config", cfg_file]) == 1
    assert "--out" in capsys.readouterr().err

    assert main(["frobnicate"]) == 1
    assert "usage error" in capsys.readouterr().err

    path = tmp_path / "entries.json"
    path.write_text(json.dumps(input_from_state(bell_phi(0.0)).to_json_dict()))
    assert main(["tomo", str(path), "--format", "csv"]) == 1
    assert "no CSV rendering" in capsys.readouterr().err


def test_data_errors_exit_2(tmp_path, cfg_file, capsys):
    assert main(["correlate", str(tmp_path / "nothing")]) == 2
    assert "no such file" in capsys.readouterr().err

    empty = tmp_path / "events_H_rect.csv"
    empty.write_text("cycle,channel\n")
    assert main(["correlate", str(empty)]) == 2
    assert "empty event file" in capsys.readouterr().err

    assert main(["pipeline", "--config", str(tmp_path / "ghost.cfg")]) == 2
    assert "not a preset name" in capsys.readouterr().err

    assert main(["pipeline", "--config", cfg_file, "--set", "wavelength=885"]) == 2
    assert "unknown key" in capsys.readouterr().err

    assert main(["metrics", str(tmp_path / "ghost.json")]) == 2
    assert "not found" in capsys.readouterr().err

    broken = tmp_path / "broken.json"
    broken.write_text("{nope")
    assert main(["tomo", str(broken)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_hash_mismatch_exits_2(tmp_path, cfg_file, capsys):
    sim_dir = tmp_path / "sim"
    assert main(["simulate", "--config", cfg_file, "--setting", "H_rect", "--out", str(sim_dir)]) == 0
    capsys.readouterr()
    rc = main(["correlate", str(sim_dir), "--config", cfg_file, "--seed", "999"])
    assert rc == 2
    assert "config hash mismatch" in capsys.readouterr().err


def test_numeric_error_exits_3(tmp_path, capsys):
    # a lone zero-delay pair with no side-peak statistics cannot be normalized
    stream = tmp_path / "events_H_rect.csv"
    stream.write_text("cycle,channel\n0,XX\n0,XCO\n")
    assert main(["correlate", str(stream)]) == 3
    err = capsys.readouterr().err
    assert "numeric error" in err and "side peaks" in err
