import json

import numpy as np
import pandas as pd
import pytest

from cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_NUMERIC,
    RunConfig,
    exit_code,
    load_config_file,
    load_csv_triplet,
    load_pvalues,
    main,
    resolve_config,
)
from utils import ConfigurationError, DataError, DegenerateError, DimensionError


def _write(path, rows):
    np.savetxt(path, rows, delimiter=",")
    return str(path)


@pytest.fixture
def csv_triplet(tmp_path, rng):
    n = 40
    z = rng.standard_normal((n, 1))
    x = z + rng.standard_normal((n, 1))
    y = -z + rng.standard_normal((n, 1))
    return (
        _write(tmp_path / "X.csv", x),
        _write(tmp_path / "Y.csv", y),
        _write(tmp_path / "Z.csv", z),
    )


def test_load_csv_triplet_dims(tmp_path, rng):
    paths = [_write(tmp_path / f"{k}.csv", rng.standard_normal((500, 3))) for k in "xyz"]
    data = load_csv_triplet(*paths, header_flag=False)
    assert data.dims == (3, 3, 3)
    assert data.n == 500


def test_load_csv_triplet_row_mismatch_names_both(tmp_path, rng):
    px = _write(tmp_path / "x.csv", rng.standard_normal((500, 1)))
    py = _write(tmp_path / "y.csv", rng.standard_normal((499, 1)))
    pz = _write(tmp_path / "z.csv", rng.standard_normal((500, 1)))
    with pytest.raises(DataError) as info:
        load_csv_triplet(px, py, pz)
    assert "x.csv has 500" in str(info.value)
    assert "y.csv has 499" in str(info.value)


def test_load_csv_triplet_non_numeric_cell_location(tmp_path, rng):
    rows = [[f"{v:.3f}" for v in r] for r in rng.standard_normal((10, 3))]
    rows[6][1] = "abc"
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(",".join(r) for r in rows) + "\n")
    good = _write(tmp_path / "good.csv", rng.standard_normal((10, 3)))
    with pytest.raises(DataError, match="'abc' at row 7, column 2"):
        load_csv_triplet(str(bad), good, good)


def test_load_csv_triplet_header_and_empty(tmp_path):
    with_header = tmp_path / "h.csv"
    with_header.write_text("a,b\n1,2\n3,4\n")
    data = load_csv_triplet(str(with_header), str(with_header), str(with_header), header_flag=True)
    assert data.n == 2
    np.testing.assert_array_equal(data.x, [[1.0, 2.0], [3.0, 4.0]])
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError, match="empty"):
        load_csv_triplet(str(empty), str(with_header), str(with_header))


def test_load_pvalues_variants(tmp_path):
    single = tmp_path / "one.csv"
    single.write_text("0.5\n")
    assert load_pvalues(str(single)) == [0.5]
    table = tmp_path / "sim.csv"
    table.write_text("replication,seed,p_value,reject\n0,11,0.2,0\n1,12,0.04,1\nsummary,,,0.5\n")
    assert load_pvalues(str(table)) == [0.2, 0.04]
    bad = tmp_path / "bad.csv"
    bad.write_text("1.7\n")
    with pytest.raises(DataError):
        load_pvalues(str(bad))


def test_config_file_yaml_and_report(tmp_path):
    yml = tmp_path / "run.yml"
    yml.write_text("B: 200\nm: 5\nmeasure: ipc\n")
    assert load_config_file(str(yml)) == {"B": 200, "m": 5, "measure": "ipc"}
    report = tmp_path / "report.json"
    report.write_text(json.dumps({"pvalues": [0.1], "config": {"B": 30, "seed": 4}}))
    assert load_config_file(str(report)) == {"B": 30, "seed": 4}
    with pytest.raises(ConfigurationError):
        load_config_file(str(tmp_path / "missing.yml"))


def test_flags_override_file_which_overrides_defaults(tmp_path):
    yml = tmp_path / "run.yml"
    yml.write_text("B: 200\nm: 5\n")
    cfg = resolve_config(["test", "--config", str(yml), "--B", "300"])
    assert cfg.B == 300
    assert cfg.m == 5
    assert cfg.epochs == RunConfig().epochs


def test_unknown_config_key(tmp_path):
    yml = tmp_path / "run.yml"
    yml.write_text("permutations: 10\n")
    with pytest.raises(ConfigurationError, match="permutations"):
        resolve_config(["test", "--config", str(yml)])


def test_exit_code_mapping():
    assert exit_code(ConfigurationError("x")) == EXIT_CONFIG
    assert exit_code(DataError("x")) == EXIT_DATA
    assert exit_code(DimensionError("x")) == EXIT_DATA
    assert exit_code(DegenerateError("x")) == EXIT_NUMERIC


def _fast_flags():
    return ["--B", "10", "--epochs", "2", "--min-steps", "0", "--hidden-width", "4", "--ode-steps", "5", "--seed", "3"]


def test_cmd_test_writes_reports_and_replays(tmp_path, csv_triplet, capsys):
    x, y, z = csv_triplet
    out = tmp_path / "out" / "report.json"
    argv = ["test", "--x", x, "--y", y, "--z", z, "--m", "2", "--n2", "10", "--output", str(out)]
    assert main(argv + _fast_flags()) == 0
    assert "p_c =" in capsys.readouterr().out

    report = json.loads(out.read_text())
    for key in ("statistics", "pvalues", "combined_pvalue", "decision", "config", "seed", "wall_clock_seconds"):
        assert key in report
    assert len(report["pvalues"]) == 2
    assert report["config"]["measure"] == "dc"
    assert report["decision"] in ("reject", "fail to reject")
    markdown = out.with_suffix(".md").read_text()
    assert "# FlowCIT Report" in markdown
    assert "| 1 |" in markdown
    assert "- `min_steps`: 0" in markdown
    assert "X = `X.csv`; Y = `Y.csv`; Z = `Z.csv`" in markdown

    replay = tmp_path / "replay.json"
    assert main(["test", "--config", str(out), "--output", str(replay)]) == 0
    again = json.loads(replay.read_text())
    for key in ("statistics", "pvalues", "combined_pvalue", "config", "test_folds"):
        assert again[key] == report[key]


def test_cmd_test_exit_codes(tmp_path, csv_triplet):
    x, y, z = csv_triplet
    assert main(["test", "--x", x, "--y", y, "--z", str(tmp_path / "none.csv")]) == EXIT_DATA
    assert main(["test", "--x", x, "--y", y, "--z", z, "--n2", "30", "--m", "2"]) == EXIT_CONFIG
    assert main(["test", "--x", x, "--y", y, "--z", z, "--measure", "hsic"]) == EXIT_CONFIG
    assert main(["test", "--x", x, "--y", y]) == EXIT_CONFIG
    with pytest.raises(SystemExit) as info:
        main(["test", "--B", "many"])
    assert info.value.code == 2


def test_simulate_then_qq(tmp_path, capsys):
    sim = tmp_path / "sim.csv"
    argv = ["simulate", "--model", "convergence", "--n", "60", "--reps", "3", "--B", "10", "--oracle"]
    assert main(argv + ["--output", str(sim)]) == 0
    assert "rejection rate" in capsys.readouterr().out
    frame = pd.read_csv(sim)
    assert len(frame) == 4
    assert frame["replication"].iloc[-1] == "summary"

    qq = tmp_path / "qq.csv"
    assert main(["qq", "--pvalues", str(sim), "--output", str(qq)]) == 0
    assert "KS statistic" in capsys.readouterr().out
    pairs = pd.read_csv(qq)
    assert list(pairs.columns) == ["theoretical", "empirical"]
    assert len(pairs) == 3


def test_simulate_zero_reps_is_configuration_error(tmp_path):
    argv = ["simulate", "--model", "low-low", "--reps", "0", "--output", str(tmp_path / "s.csv")]
    assert main(argv) == EXIT_CONFIG


def test_qq_single_value(tmp_path):
    src = tmp_path / "p.csv"
    src.write_text("0.5\n")
    out = tmp_path / "qq.csv"
    assert main(["qq", "--pvalues", str(src), "--output", str(out)]) == 0
    pairs = pd.read_csv(out)
    assert pairs.iloc[0].tolist() == [0.5, 0.5]


def test_power_table(tmp_path):
    out = tmp_path / "power.csv"
    argv = ["power", "--model", "convergence", "--n", "60", "--reps", "2", "--B", "10", "--oracle",
            "--psis", "0", "0.1", "--output", str(out)]
    assert main(argv) == 0
    table = pd.read_csv(out)
    assert list(table["psi"]) == [0.0, 0.1]
    assert table["rejection_rate"].between(0, 1).all()
