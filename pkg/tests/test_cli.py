import json

import pytest

from carclust.cli import run


@pytest.fixture(scope="module")
def panel_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "panel.csv"
    assert run(["simulate", "--output", str(path), "--units", "60", "--times", "6", "--seed", "7"]) == 0
    return path


def test_simulate_is_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        path = tmp_path / f"p{k}.csv"
        assert run(["simulate", "--output", str(path), "--seed", "7", "--units", "20"]) == 0
        outs.append((path.read_bytes(), (tmp_path / f"p{k}.csv.truth.json").read_bytes()))
    assert outs[0] == outs[1]


def test_select_picks_three(panel_csv, tmp_path):
    out = tmp_path / "sel.json"
    code = run(["select", "--input", str(panel_csv), "--clusters", "2..6", "--lags", "1",
                "--restarts", "4", "--output", str(out)])
    assert code == 0
    tree = json.loads(out.read_text())
    assert tree["ch_table"]["selected_g"] == 3
    assert [r["G"] for r in tree["ch_table"]["candidates"]] == [2, 3, 4, 5, 6]
    assert tree["config"]["n_clusters"] == 3


def test_fit_single_cluster_needs_flag(panel_csv, tmp_path, capsys):
    assert run(["fit", "--input", str(panel_csv), "--clusters", "1"]) == 2
    assert "--allow-trivial" in capsys.readouterr().err
    out = tmp_path / "g1.txt"
    assert run(["fit", "--input", str(panel_csv), "--clusters", "1", "--allow-trivial", "--restarts", "1",
                "--format", "text", "--output", str(out)]) == 0
    assert "[fit]" in out.read_text()


def test_fit_to_stdout(panel_csv, capsys):
    assert run(["fit", "--input", str(panel_csv), "--clusters", "3", "--restarts", "2", "--normalize"]) == 0
    tree = json.loads(capsys.readouterr().out)
    assert tree["config"]["n_clusters"] == 3


def test_validate(panel_csv, capsys):
    assert run(["validate", "--input", str(panel_csv)]) == 0
    assert "60 units x 2 variables x 6 times" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        ["fit", "--bogus"],
        ["fit", "--input", "x.csv", "--clusters", "6..2"],
        ["fit", "--input", "x.csv", "--lags", "0"],
        ["fit", "--input", "x.csv", "--init", "smart"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert run(argv) == 2
    assert capsys.readouterr().err


def test_too_many_lags_is_usage_error(panel_csv, capsys):
    assert run(["fit", "--input", str(panel_csv), "--lags", "5"]) == 2
    assert "lag order 5" in capsys.readouterr().err


def test_missing_file_is_runtime_error(tmp_path, capsys):
    missing = tmp_path / "absent.csv"
    assert run(["validate", "--input", str(missing)]) == 1
    assert "absent.csv" in capsys.readouterr().err


def test_bad_cell_names_line(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("unit,time,v\nA,1,0\nA,2,x\n")
    assert run(["validate", "--input", str(path)]) == 1
    assert "bad.csv:3:" in capsys.readouterr().err


def test_identical_argv_gives_identical_report(panel_csv, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert run(["select", "--input", str(panel_csv), "--clusters", "2..4", "--restarts", "3",
                    "--seed", "5", "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
