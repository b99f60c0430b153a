import json
from pathlib import Path

import pytest

from extito import cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
GOLDEN = Path(__file__).parent / "golden"


def write(tmp_path, text, name="c.ini"):
    f = tmp_path / name
    f.write_text(text)
    return f


BM = """
[process]
kind = brownian
[experiment]
dt = 1e-2, 1e-3
n_paths = 40
seed = 3
[functions]
f = square
"""


def test_unknown_key_is_a_config_error(tmp_path, caplog):
    f = write(tmp_path, BM + "colour = red\n")
    assert cli.main(["verify-ito", "--config", str(f), "--out", str(tmp_path / "o")]) == 2
    assert "unknown key 'colour' in [functions]" in caplog.text


def test_unknown_section(tmp_path):
    f = write(tmp_path, BM + "[plots]\nx = 1\n")
    assert cli.main(["verify-ito", "--config", str(f), "--out", str(tmp_path / "o")]) == 2


def test_bad_values(tmp_path):
    f = write(tmp_path, BM.replace("n_paths = 40", "n_paths = many"))
    assert cli.main(["verify-ito", "--config", str(f), "--out", str(tmp_path / "o")]) == 2
    f = write(tmp_path, BM.replace("kind = brownian", "kind = brownian\nsigma2 = -1"))
    assert cli.main(["verify-ito", "--config", str(f), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["verify-ito", "--config", str(tmp_path / "missing.ini")]) == 2


def test_table_with_one_dt(tmp_path, caplog):
    f = write(tmp_path, BM)
    code = cli.main(["table", "--config", str(f), "--dt", "1e-3", "--out", str(tmp_path / "o")])
    assert code == 2
    assert "≥ 2 dt values required" in caplog.text


def test_pure_jump_verify_ito(tmp_path):
    out = tmp_path / "o"
    code = cli.main(["verify-ito", "--config", str(CONFIGS / "pure_jump.ini"), "--out", str(out),
                     "--paths", "30", "--dt", "1e-3", "--quiet"])
    assert code == 0
    lines = (out / "ito_report.csv").read_text().splitlines()
    assert lines[0] == "# schema: identity-report/1"
    rows = [l.split(",") for l in lines[2:]]
    assert len(rows) == 3
    assert all(float(r[6]) <= 1e-12 and r[7] == "pass" for r in rows)
    m = json.loads((out / "manifest.json").read_text())
    assert m["pass"] is True and m["outputs"] == ["ito_report.csv"]
    assert len(m["config_hash"]) == 64


def test_golden_header(tmp_path):
    f = write(tmp_path, BM)
    out = tmp_path / "o"
    cli.main(["verify-tanaka", "--config", str(f), "--out", str(out), "--quiet"])
    head = (out / "tanaka_report.csv").read_text().splitlines()[:2]
    assert head == (GOLDEN / "report_header.csv").read_text().splitlines()


def test_reports_are_byte_identical(tmp_path):
    f = write(tmp_path, BM)
    for d in ("a", "b"):
        cli.main(["table", "--config", str(f), "--out", str(tmp_path / d), "--quiet"])
    a = (tmp_path / "a" / "ito_table.csv").read_bytes()
    assert a == (tmp_path / "b" / "ito_table.csv").read_bytes()


def test_simulate_is_byte_identical(tmp_path):
    f = write(tmp_path, BM + "[output]\ncsv_export = yes\n")
    for d in ("a", "b"):
        assert cli.main(["simulate", "--config", str(f), "--out", str(tmp_path / d), "--paths", "5",
                         "--quiet"]) == 0
    for rel in ("paths_dt0.01/paths.bin", "paths_dt0.001/paths.bin", "paths_dt0.01/paths.csv"):
        assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()


def test_seed_precedence(tmp_path, monkeypatch):
    f = write(tmp_path, BM)
    cfg = cli.read_config(f)
    assert cli.build_experiment(cfg).seed_base == 3
    monkeypatch.setenv(cli.SEED_ENV, "77")
    assert cli.build_experiment(cfg).seed_base == 77
    assert cli.build_experiment(cfg, seed=5).seed_base == 5
    monkeypatch.setenv(cli.SEED_ENV, "x")
    with pytest.raises(cli.ConfigurationError):
        cli.build_experiment(cfg)


def test_env_seed_changes_output(tmp_path, monkeypatch):
    f = write(tmp_path, BM)
    cli.main(["verify-tanaka", "--config", str(f), "--out", str(tmp_path / "a"), "--quiet"])
    monkeypatch.setenv(cli.SEED_ENV, "1234")
    cli.main(["verify-tanaka", "--config", str(f), "--out", str(tmp_path / "b"), "--quiet"])
    a = (tmp_path / "a" / "tanaka_report.csv").read_text()
    assert a != (tmp_path / "b" / "tanaka_report.csv").read_text()
    m = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert m["seed_base"] == 1234


def test_dt_overrides_are_sorted(tmp_path):
    cfg = cli.read_config(write(tmp_path, BM))
    exp = cli.build_experiment(cfg, dts=[1e-3, 1e-2, 1e-3])
    assert exp.dts == (1e-2, 1e-3)


def test_multidim_routing(tmp_path):
    f = write(tmp_path, BM)
    assert cli.main(["verify-multidim", "--config", str(f), "--out", str(tmp_path / "o")]) == 2
    out = tmp_path / "m"
    code = cli.main(["verify-ito", "--config", str(CONFIGS / "diffusion2d.ini"), "--out", str(out),
                     "--paths", "30", "--dt", "1e-2", "--quiet"])
    assert code == 0
    assert (out / "multidim_report.csv").exists()


def test_failing_check_exits_one(tmp_path):
    f = write(tmp_path, BM + "[tolerances]\ntanaka = 1e-9\n")
    assert cli.main(["verify-tanaka", "--config", str(f), "--out", str(tmp_path / "o"), "--quiet"]) == 1
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["pass"] is False


@pytest.mark.parametrize("name", ["bm.ini", "pure_jump.ini", "diffusion2d.ini", "brownian_jumps.ini"])
def test_shipped_configs_parse(name):
    cfg = cli.read_config(CONFIGS / name)
    cli.build_experiment(cfg)
