"""CLI contract: exit codes, output files, JSON mode, determinism and the
resolved-configuration banner."""

import json
import os

import numpy as np
import pytest

from palign.cli import main
from palign.matio import load_matrix_csv, save_matrix_csv
from palign.synthetic import make_gmm_world


@pytest.fixture()
def world_files(tmp_path):
    world = make_gmm_world(n=200, d=(2, 2), k=2, seed=0)
    x1 = tmp_path / "x1.csv"
    x2 = tmp_path / "x2.csv"
    save_matrix_csv(str(x1), world.x_list[0])
    save_matrix_csv(str(x2), world.x_list[1])
    return world, str(x1), str(x2)


def test_solve_end_to_end(world_files, tmp_path, capsys):
    _, x1, x2 = world_files
    out = str(tmp_path / "out")
    code = main(["solve", "--x1", x1, "--x2", x2, "--k", "2", "--out", out])
    assert code == 0
    report = (tmp_path / "out" / "report.csv").read_text().splitlines()
    header = report[0].split(",")
    row = report[1].split(",")
    assert float(row[header.index("cmae")]) < 1e-10
    for name in ("A1.csv", "A2.csv", "Z1hat.csv", "Z2hat.csv"):
        assert (tmp_path / "out" / name).exists()
    err = capsys.readouterr().err
    assert "config solve:" in err
    assert "k = 2" in err


def test_solve_json_output(world_files, tmp_path, capsys):
    _, x1, x2 = world_files
    code = main(["solve", "--x1", x1, "--x2", x2, "--k", "2",
                 "--out", str(tmp_path / "o"), "--json"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["cmae"] < 1e-10
    assert payload["n"] == 200


def test_solve_invalid_k_is_usage_error(world_files, capsys):
    _, x1, x2 = world_files
    assert main(["solve", "--x1", x1, "--x2", x2, "--k", "0"]) == 1
    assert "error" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["solve", "--bogus", "1"]) == 1


def test_missing_command_is_usage_error():
    assert main([]) == 1


def test_missing_file_is_data_error(tmp_path, capsys):
    assert main(["solve", "--x1", str(tmp_path / "a.csv"),
                 "--x2", str(tmp_path / "b.csv"), "--k", "1"]) == 2
    assert "data error" in capsys.readouterr().err


def test_non_finite_input_is_data_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("# rows=1 cols=2\n1.0,inf\n")
    ok = tmp_path / "ok.csv"
    save_matrix_csv(str(ok), np.ones((1, 2)))
    assert main(["solve", "--x1", str(bad), "--x2", str(ok), "--k", "1"]) == 2


def test_divergent_baseline_is_numerical_error(world_files, tmp_path, capsys):
    _, x1, x2 = world_files
    code = main(["baseline", "--x1", x1, "--x2", x2, "--k", "2",
                 "--learning-rate", "1e308", "--epochs", "5",
                 "--batch-size", "0", "--lr-schedule", "constant",
                 "--out", str(tmp_path / "b")])
    assert code == 3
    assert "numerical error" in capsys.readouterr().err


def test_synth_writes_world(tmp_path):
    out = str(tmp_path / "w")
    assert main(["synth", "--n", "50", "--seed", "3", "--out", out]) == 0
    for name in ("x1.csv", "x2.csv", "s1.csv", "s2.csv", "z_true.csv",
                 "labels.txt", "manifest.json"):
        assert os.path.exists(os.path.join(out, name))


def test_synth_boundary_family(tmp_path):
    out = str(tmp_path / "bw")
    assert main(["synth", "--family", "boundary", "--n", "40", "--seed", "1",
                 "--out", out]) == 0
    labels = (tmp_path / "bw" / "labels.txt").read_text().split()
    assert labels.count("0") == labels.count("1") == 20


def test_synth_suite_reports_metrics(tmp_path, capsys):
    out = str(tmp_path / "suite")
    assert main(["synth", "--suite", "--seed", "0", "--out", out, "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["cmae"] <= 1e-10
    assert payload["mlre_avg"] > 1.0
    assert os.path.exists(os.path.join(out, "Z1hat.csv"))
    assert os.path.exists(os.path.join(out, "world", "x1.csv"))


def test_boundary_json(capsys):
    assert main(["boundary", "--seed", "0", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["cmae"] <= 1e-10


def test_sweep_deterministic_outputs(tmp_path):
    args = ["sweep", "--axis", "k", "--values", "1,2,3", "--seed", "0",
            "--n", "100", "--d1", "3", "--d2", "3"]
    assert main(args + ["--out", str(tmp_path / "r1")]) == 0
    assert main(args + ["--out", str(tmp_path / "r2")]) == 0
    for name in ("sweep.csv", "sweep_cmae.svg", "sweep_mlre_avg.svg"):
        a = (tmp_path / "r1" / name).read_bytes()
        b = (tmp_path / "r2" / name).read_bytes()
        assert a == b, f"{name} differs between identical runs"


def test_sweep_conflicting_seed_flags(tmp_path):
    assert main(["sweep", "--axis", "k", "--values", "1", "--seed", "0",
                 "--seeds", "0,1", "--out", str(tmp_path)]) == 1


def test_baseline_and_align_embeddings_pipeline(tmp_path, capsys):
    world = make_gmm_world(n=200, d=(2, 2), k=2, seed=2)
    x1 = tmp_path / "x1.csv"
    x2 = tmp_path / "x2.csv"
    save_matrix_csv(str(x1), world.x_list[0])
    save_matrix_csv(str(x2), world.x_list[1])
    bout = str(tmp_path / "baseline")
    code = main(["baseline", "--x1", str(x1), "--x2", str(x2), "--k", "2",
                 "--epochs", "20", "--batch-size", "100", "--seed", "1",
                 "--out", bout, "--json"])
    assert code == 0
    baseline_report = json.loads(capsys.readouterr().out)
    assert (tmp_path / "baseline" / "loss_history.csv").exists()
    assert (tmp_path / "baseline" / "manifest.json").exists()

    aout = str(tmp_path / "aligned")
    code = main(["align-embeddings",
                 "--z1", os.path.join(bout, "Z1hat.csv"),
                 "--z2", os.path.join(bout, "Z2hat.csv"),
                 "--k", "2", "--holdout", "0.2", "--out", aout, "--json"])
    assert code == 0
    aligned_report = json.loads(capsys.readouterr().out)
    assert aligned_report["cmae"] <= baseline_report["cmae"] / 10.0
    assert (tmp_path / "aligned" / "holdout_report.csv").exists()


def test_solve_outputs_are_deterministic(world_files, tmp_path):
    _, x1, x2 = world_files
    main(["solve", "--x1", x1, "--x2", x2, "--k", "2", "--out", str(tmp_path / "s1")])
    main(["solve", "--x1", x1, "--x2", x2, "--k", "2", "--out", str(tmp_path / "s2")])
    for name in ("A1.csv", "A2.csv", "Z1hat.csv", "Z2hat.csv", "report.csv"):
        assert ((tmp_path / "s1" / name).read_bytes()
                == (tmp_path / "s2" / name).read_bytes())


def test_loaded_solution_reproduces_alignment(world_files, tmp_path):
    world, x1, x2 = world_files
    out = str(tmp_path / "out")
    main(["solve", "--x1", x1, "--x2", x2, "--k", "2", "--out", out])
    a1 = load_matrix_csv(os.path.join(out, "A1.csv"))
    a2 = load_matrix_csv(os.path.join(out, "A2.csv"))
    gap = a1 @ world.x_list[0] - a2 @ world.x_list[1]
    assert np.max(np.abs(gap)) < 1e-10
