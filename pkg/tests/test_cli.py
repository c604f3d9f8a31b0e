import pytest

from rlslab.harness.cli import main
from rlslab.harness.experiment import CSV_HEADER, load_records


def test_run_writes_records(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["run", "--n", "8", "--m", "n^2", "--runs", "20", "--seed", "1", "--out", str(out)]) == 0
    assert "all_in_one n=8 m=64" in capsys.readouterr().out
    assert len(load_records(out)) == 20
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_run_from_spec_file(tmp_path, capsys):
    spec = tmp_path / "exp.txt"
    spec.write_text("scenario = uniform_random\nn = 6\nm = 30\nruns = 5\nformat = jsonl\n")
    out = tmp_path / "r.jsonl"
    assert main(["run", "--spec", str(spec), "--runs", "3", "--out", str(out)]) == 0
    assert len(load_records(out)) == 3


def test_sweep_fit(capsys):
    args = ["sweep", "--n", "4,8,16", "--m", "n^2", "--runs", "40", "--fit"]
    assert main(args) == 0
    assert "R^2" in capsys.readouterr().out
    assert main(args + ["--min-r2", "1.01"]) == 1


def test_oracle(tmp_path, capsys):
    out = tmp_path / "o.csv"
    assert main(["oracle", "--n", "2", "--m", "4", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "[4, 0]" in text and "E[T]=1.16666666667" in text
    assert main(["oracle", "--n", "30", "--m", "60", "--limit", "100"]) == 2


def test_couple(capsys):
    assert main(["couple", "--n", "4", "--m", "12", "--schedule", "pileup:3", "--steps", "500",
                 "--runs", "5"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_bounds(capsys):
    assert main(["bounds", "--sets", "2", "--samples", "2e4", "--schedule-sets", "50"]) == 0
    out = capsys.readouterr().out
    assert "geom_sum: 2 parameter sets, 0 failures" in out and out.strip().endswith("PASS")


def test_validate(capsys):
    assert main(["validate", "--n", "2", "--m", "4", "--runs", "5000"]) == 0
    assert main(["validate", "--n", "2,3", "--m", "4"]) == 2


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "nowhere"],
    ["run", "--n", "4", "--m", "n**2"],
    ["run", "--scenario", "from_file", "--file", "/nonexistent/file", "--n", "2", "--m", "2"],
    ["bounds", "--check", "nope"],
])
def test_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "error" in capsys.readouterr().err


def test_argparse_rejects_bad_choice():
    with pytest.raises(SystemExit):
        main(["run", "--stop", "never"])
