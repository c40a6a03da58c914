import json

import pytest

from rggloc.cli import main


def _write_config(tmp_path, **overrides):
    cfg = {
        "schema": "runconfig.v1",
        "model": {"n": 150, "r": 0.1, "d": 2, "norm": "l2", "delta_star": 0.1},
        "grid": {"s": 5},
        "conditioning": {"delta": 1.0, "delta_tilde": 1.0, "eps": 0.25, "eps_tilde": 0.2},
        "sampler": {"method": "planted", "replicas": 10, "budget": 500, "t": 1.0},
        "seed": 7,
        "output_dir": str(tmp_path / "out"),
    }
    for key, val in overrides.items():
        if isinstance(val, dict):
            cfg.setdefault(key, {}).update(val)
        else:
            cfg[key] = val
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def test_grid_info_writes_derived(tmp_path, capsys):
    cfg = _write_config(tmp_path)
    assert main(["grid-info", "--config", str(cfg)]) == 0
    derived = json.loads((tmp_path / "out" / "derived.json").read_text())
    assert derived["m"] == 50
    assert derived["tau_s"] == 32
    assert derived["mu_s"] == pytest.approx(490.5)
    out = capsys.readouterr().out
    assert "tau_s" in out
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["schema"] == "manifest.v1"
    assert "derived.json" in manifest["files"]


def test_simulate_csv_and_svg(tmp_path):
    cfg = _write_config(tmp_path, sampler={"replicas": 5})
    assert main(["simulate", "--config", str(cfg)]) == 0
    lines = (tmp_path / "out" / "simulate.csv").read_text().strip().splitlines()
    assert lines[0] == "replica,vertices,edges"
    assert len(lines) == 6
    svg = (tmp_path / "out" / "edge_histogram.svg").read_text()
    assert svg.startswith("<svg")
    assert "</svg>" in svg


def test_condition_planted_profiles(tmp_path):
    cfg = _write_config(tmp_path, sampler={"replicas": 4})
    assert main(["condition", "--config", str(cfg)]) == 0
    doc = json.loads((tmp_path / "out" / "profiles.json").read_text())
    assert doc["summary"]["method"] == "planted"
    assert len(doc["profiles"]) == 4


def test_extract_from_stored_samples(tmp_path):
    cfg = _write_config(tmp_path, sampler={"replicas": 3})
    assert main(["condition", "--config", str(cfg)]) == 0
    out2 = tmp_path / "out2"
    assert (
        main(
            [
                "extract",
                "--config",
                str(cfg),
                "--input",
                str(tmp_path / "out"),
                "--out",
                str(out2),
            ]
        )
        == 0
    )
    reports = json.loads((out2 / "thm2_reports.json").read_text())
    assert len(reports) == 3
    assert all(r["schema"] == "thm2_report.v1" for r in reports)
    assert (out2 / "localization_heatmap.svg").exists()


def test_seed_flag_overrides_config(tmp_path):
    cfg = _write_config(tmp_path, sampler={"replicas": 3})
    outa, outb = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", str(cfg), "--out", str(outa), "--seed", "99"])
    main(["simulate", "--config", str(cfg), "--out", str(outb)])
    assert (outa / "simulate.csv").read_text() != (outb / "simulate.csv").read_text()


def test_config_error_exit_codes(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["grid-info", "--config", str(missing)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": {"n": 100, "d": 2, "norm": "l2"}}')  # no r / p_target
    assert main(["grid-info", "--config", str(bad)]) == 2
    both = tmp_path / "both.json"
    both.write_text(
        '{"model": {"n": 100, "d": 2, "norm": "l2", "r": 0.1, "p_target": 1.0}}'
    )
    assert main(["grid-info", "--config", str(both)]) == 2
    capsys.readouterr()


def test_budget_exhaustion_exit_code(tmp_path, capsys):
    cfg = _write_config(
        tmp_path,
        sampler={"method": "rejection", "budget": 50},
        conditioning={"delta_tilde": 8.0},
    )
    assert main(["condition", "--config", str(cfg)]) == 3
    capsys.readouterr()


def test_verify_reproducible_and_green(tmp_path):
    cfg = _write_config(tmp_path)
    outa, outb = tmp_path / "va", tmp_path / "vb"
    assert main(["verify", "--config", str(cfg), "--out", str(outa)]) == 0
    assert main(["verify", "--config", str(cfg), "--out", str(outb)]) == 0
    assert (outa / "verify_report.json").read_bytes() == (
        outb / "verify_report.json"
    ).read_bytes()
    ma = json.loads((outa / "manifest.json").read_text())
    mb = json.loads((outb / "manifest.json").read_text())
    ma.pop("timestamp")
    mb.pop("timestamp")
    assert ma == mb
