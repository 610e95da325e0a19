"""Command surface: artifacts, determinism, exit codes."""

import filecmp
import json
from pathlib import Path

import numpy as np
import pytest

from viscid.cli import main
from viscid.reports import canonical_json, config_hash, read_snapshot_csv

TINY = ["--flux", "zero", "--init", "dirac:1@0", "--eps", "0.5",
        "--grid", "256", "--domain=-6:6", "--tend", "0.05",
        "--snap", "0.02,0.04,0.05", "--mollify-h", "0.1"]


def _one_run_dir(root: Path) -> Path:
    runs = [d for d in root.iterdir() if d.is_dir()]
    assert len(runs) == 1
    return runs[0]


def test_solve_happy_path(tmp_path):
    out = tmp_path / "out"
    code = main(["solve", *TINY, "--out", str(out)])
    assert code == 0
    run_dir = _one_run_dir(out)
    csvs = sorted(run_dir.glob("snapshot_*.csv"))
    assert len(csvs) == 3
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert manifest["tool_version"]
    assert (run_dir / "snapshots.png").exists()
    x, u = read_snapshot_csv(csvs[0])
    assert x.size == 256
    assert np.all(u >= 0)


def test_csv_round_trip_is_exact(tmp_path):
    out = tmp_path / "out"
    main(["solve", *TINY, "--out", str(out)])
    run_dir = _one_run_dir(out)
    x, u = read_snapshot_csv(run_dir / "snapshot_002.csv")
    from viscid.initial_data import GridFunction
    from viscid.reports import write_snapshot_csv
    g = GridFunction(-6.0, 6.0, 256, u)
    write_snapshot_csv(tmp_path / "again.csv", g)
    x2, u2 = read_snapshot_csv(tmp_path / "again.csv")
    assert np.array_equal(u, u2)
    assert np.array_equal(x, x2)


def test_determinism_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["solve", *TINY, "--out", str(a)]) == 0
    assert main(["solve", *TINY, "--out", str(b)]) == 0
    da, db = _one_run_dir(a), _one_run_dir(b)
    assert da.name == db.name          # identical config hash
    files = sorted(p.name for p in da.iterdir()
                   if p.suffix in (".csv", ".json"))
    assert files
    for name in files:
        assert filecmp.cmp(da / name, db / name, shallow=False), name


def test_usage_error_exit_code():
    # unknown flags exit through the parser with the usage code
    with pytest.raises(SystemExit) as err:
        main(["solve", "--definitely-not-a-flag", "--out", "x"])
    assert err.value.code == 1


def test_missing_flux_is_usage_error(tmp_path):
    code = main(["solve", "--init", "dirac:1@0", "--out", str(tmp_path / "o")])
    assert code == 1


def test_pcond_cli(tmp_path):
    code = main(["pcond", "--flux", "power:1.5", "--a", "0.25", "--gamma", "1",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _one_run_dir(tmp_path / "o")
    assert (run_dir / "pcond.json").exists()
    assert (run_dir / "pcond.md").exists()


def test_pcond_cli_failure_exit_code(tmp_path):
    code = main(["pcond", "--flux", "power:2", "--a", "2.0",
                 "--out", str(tmp_path / "o")])
    assert code == 2


def test_oracle_cli(tmp_path):
    code = main(["oracle", "--which", "burgers", "--M", "1", "--eps", "0.1",
                 "--t", "1", "--domain=-4:5", "--n", "501",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _one_run_dir(tmp_path / "o")
    x, u = read_snapshot_csv(run_dir / "oracle_burgers.csv")
    assert u.max() == pytest.approx(0.72897, abs=1e-3)


def test_strict_leak_gives_invariant_exit(tmp_path):
    code = main(["solve", "--flux", "zero", "--init", "dirac:1@0",
                 "--eps", "0.5", "--grid", "128", "--domain=-0.6:0.6",
                 "--tend", "0.3", "--mollify-h", "0.05", "--strict",
                 "--out", str(tmp_path / "o")])
    assert code == 3
    assert (tmp_path / "o" / "diagnostic_dump.json").exists()


def test_config_file_with_flag_override(tmp_path):
    cfgfile = tmp_path / "run.toml"
    cfgfile.write_text(
        "[flux]\nkind = 'power'\np = 2.0\n"
        "[init]\natoms = [[0.0, 1.0]]\nmollify_h = 0.1\n"
        "[solver]\neps = 0.2\nn = 128\nt_end = 0.05\ndomain = '-4:4'\n")
    out = tmp_path / "o"
    code = main(["solve", "--config", str(cfgfile), "--tend", "0.02",
                 "--out", str(out)])
    assert code == 0
    run_dir = _one_run_dir(out)
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["inputs"]["solver"]["t_end"] == 0.02  # flag wins


def test_hj_cli(tmp_path):
    code = main(["hj", "--flux", "power:2", "--init", "dirac:1@0",
                 "--eps", "0.1", "--grid", "512", "--domain=-3:4",
                 "--tend", "0.5", "--snap", "0.2,0.5", "--mollify-h", "0.05",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _one_run_dir(tmp_path / "o")
    assert len(list(run_dir.glob("hj_v_*.csv"))) == 2


def test_decay_cli(tmp_path):
    code = main(["decay", "--flux", "zero", "--init", "dirac:1@0",
                 "--eps", "1.0", "--grid", "512", "--domain=-14:14",
                 "--tend", "1.0", "--mollify-h", "0.05", "--norm", "inf",
                 "--t-first", "0.05", "--n-snapshots", "24",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _one_run_dir(tmp_path / "o")
    fit = json.loads((run_dir / "decay_fit.json").read_text())
    assert fit["exponent"] == pytest.approx(-0.5, abs=0.02)
    assert (run_dir / "decay.png").exists()


def test_canonical_json_properties():
    s = canonical_json({"b": 1.5, "a": [1, 2.0, None, True], "c": "x\"y"})
    assert s == '{"a":[1,2,null,true],"b":1.5,"c":"x\\"y"}'
    assert canonical_json(float("nan")) == '"nan"'
    h1 = config_hash({"x": 1.0, "y": "z"})
    h2 = config_hash({"y": "z", "x": 1.0})
    assert h1 == h2 and len(h1) == 16


def test_cli_claims_smoke(tmp_path):
    # small-budget claims matrix; the acceptance suite runs the full battery
    code = main(["claims", "--flux", "power:2", "--eps", "0.05",
                 "--out", str(tmp_path / "o")])
    assert code == 0
    run_dir = _one_run_dir(tmp_path / "o")
    verdicts = json.loads((run_dir / "claims.json").read_text())
    assert len(verdicts) >= 10
    names = {v["name"] for v in verdicts}
    assert {"mass_conservation", "l1_contraction", "order_preservation",
            "spacetime_gradient", "carlen_loss", "pcond_linf",
            "l2_powerlaw", "nash_lp", "hj_gradient_bound"} <= names
    assert all(v["verdict"] in ("pass", "inapplicable") for v in verdicts)
