import json
import os

import pytest

from meanlab.cli import (ConfigError, list_fixtures, load_config, main, run)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SPECTRUM_CFG = """
kind = "spectrum"
system = "rotation_golden"
seed = 3
schedule = [512, 1024, 2048, 4096]

[freq_grid]
start = 0.0
stop = 1.0
step = 1e-3
"""


def test_list_fixtures_sorted_and_complete():
    rows = list_fixtures()
    tags = [r["tag"] for r in rows]
    for expected in ("rotation_golden", "bernoulli_shift",
                     "fibonacci_substitution", "cut_project"):
        assert expected in tags
    assert rows == sorted(rows, key=lambda r: (r["kind"], r["tag"]))
    assert list_fixtures("") == rows  # empty filter is the full catalog


def test_list_fixtures_filter():
    rows = list_fixtures("bernoulli")
    assert rows and all("bernoulli" in r["tag"] for r in rows)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="parse"):
        load_config(_write(tmp_path, "bad.toml", "kind = ["))
    with pytest.raises(ConfigError, match="kind"):
        load_config(_write(tmp_path, "nokind.toml", "seed = 1"))
    with pytest.raises(ConfigError, match="valid"):
        load_config(_write(tmp_path, "unk.toml", 'kind = "nope"'))


def test_run_spectrum_writes_report(tmp_path):
    cfg = _write(tmp_path, "spec.toml", SPECTRUM_CFG)
    out = tmp_path / "out"
    report = run(cfg, out_dir=str(out))
    assert report["format_version"] == 1
    on_disk = json.loads((out / "report.json").read_text())
    assert on_disk["results"]["peaks"]
    assert (out / "spectrum.csv").exists()


def test_run_unknown_system_is_config_error(tmp_path):
    cfg = _write(tmp_path, "bad.toml", 'kind = "spectrum"\nsystem = "nope"\n')
    with pytest.raises(ConfigError, match="valid tags"):
        run(cfg, out_dir=str(tmp_path / "out"))


def test_main_exit_codes(tmp_path, capsys):
    bad = _write(tmp_path, "bad.toml", 'kind = "nope"')
    assert main(["run", bad]) == 2
    out_dir = tmp_path / "out2"
    assert not out_dir.exists() or not any(out_dir.iterdir())
    cfg = _write(tmp_path, "ok.toml", SPECTRUM_CFG)
    assert main(["run", cfg, "--out", str(tmp_path / "ok_out")]) == 0
    assert main(["list"]) == 0


def test_no_partial_outputs_on_config_error(tmp_path):
    bad = _write(tmp_path, "bad.toml", 'kind = "spectrum"\nsystem = "nope"\n')
    out = tmp_path / "out"
    assert main(["run", bad, "--out", str(out)]) == 2
    assert not out.exists()


def test_seed_override_and_determinism(tmp_path):
    cfg = _write(tmp_path, "spec.toml", SPECTRUM_CFG)
    r1 = run(cfg, out_dir=str(tmp_path / "a"), seed=11)
    r2 = run(cfg, out_dir=str(tmp_path / "b"), seed=11)
    r1.pop("timing"), r2.pop("timing")
    assert json.dumps(r1, sort_keys=True, default=str) == \
        json.dumps(r2, sort_keys=True, default=str)


def test_env_output_dir(tmp_path, monkeypatch):
    cfg = _write(tmp_path, "spec.toml", SPECTRUM_CFG)
    env_out = tmp_path / "envout"
    monkeypatch.setenv("MEANLAB_OUT", str(env_out))
    run(cfg)
    assert (env_out / "report.json").exists()


def test_pseudometric_experiment(tmp_path):
    cfg = _write(tmp_path, "pm.toml", """
kind = "pseudometric"
system = "bernoulli_half"
seed = 1
n_pairs = 2
schedule = [256, 512, 1024]
burn_in = 1
kinds = ["db", "df_L1"]
""")
    report = run(cfg, out_dir=str(tmp_path / "out"))
    pairs = report["results"]["pairs"]
    assert len(pairs) == 2 and "db" in pairs[0]
    assert (tmp_path / "out" / "pseudometrics.csv").exists()


def test_dichotomy_experiment(tmp_path):
    cfg = _write(tmp_path, "di.toml", """
kind = "dichotomy"
system = "rotation_golden"
seed = 0
n_centers = 6
n_per_ball = 6
schedule = [64, 128, 256, 512, 1024]
""")
    report = run(cfg, out_dir=str(tmp_path / "out"))
    assert report["results"]["violations"] == []
