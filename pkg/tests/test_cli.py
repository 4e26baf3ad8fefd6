import json

import numpy as np
import pytest

from selbias import harness
from selbias.cli import main


@pytest.fixture
def dataset(tmp_path):
    path = tmp_path / "pool.csv"
    assert main(["make-surrogate", "--out", str(path), "--rows", "90", "--features", "3", "--seed", "1"]) == 0
    return path


def run_json(capsys, argv):
    assert main(argv) == 0
    return json.loads(capsys.readouterr().out)


def test_make_surrogate_shape(dataset):
    pool = harness.load_dataset(dataset)
    assert pool.X.shape == (90, 3) and pool.header[-1] == "y"


def test_run_writes_identical_reports(dataset, tmp_path, capsys):
    argv = ["run", "--dataset", str(dataset), "--seed", "3", "--folds", "3", "--projections", "2",
            "--projection-trials", "2"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    out = capsys.readouterr().out
    assert "NMSE" in out and "kmm" in out
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    for suffix in (".txt", ".json"):
        assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()
    assert (tmp_path / "a.timings.json").exists()


def test_run_requires_seed(dataset):
    with pytest.raises(SystemExit):
        main(["run", "--dataset", str(dataset)])


def test_run_missing_file(tmp_path, capsys):
    assert main(["run", "--dataset", str(tmp_path / "none.csv"), "--seed", "0"]) == 2
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv, key, expected",
    [
        (["beta", "--sigma", "1", "--lambda", "0.5"], "beta_l1", 1.0),
        (["frequency", "--m-distinct", "10", "--n", "10000", "--p0", "0.01", "--delta", "0.05"], "value", 0.24478),
        (["kmm-deviation", "--m", "100", "--n", "100", "--lambda-min", "0.25", "--delta", "2"], "value", 0.56569),
    ],
)
def test_bounds_subcommand(capsys, argv, key, expected):
    assert run_json(capsys, ["bounds", *argv])[key] == pytest.approx(expected, abs=1e-5)


def test_bounds_kmm_gap_eps0(capsys):
    out = run_json(capsys, ["bounds", "kmm-gap", "--lambda-max", "4", "--lambda-min", "1", "--m", "100",
                            "--n", "100", "--delta", "2"])
    assert [r["method"] for r in out] == ["kmm", "kmm_eps0"]
    assert out[1]["value"] == pytest.approx(0.28284, abs=1e-5)


def test_bounds_crossover_and_cluster(capsys):
    assert run_json(capsys, ["bounds", "crossover", "--lambda-min", "0.1", "--B", "2", "--m-distinct", "5",
                             "--n", "1000"])["regime"] == "cluster-favorable"
    out = run_json(capsys, ["bounds", "cluster-distance", "--B", "2", "--c-max", "5", "--k", "4", "--q0", "0.1",
                            "--n", "1000", "--m", "20", "--delta", "0.1"])
    assert out["l2"] == pytest.approx(out["l1"] / np.sqrt(20))
    assert len(run_json(capsys, ["bounds", "cluster-gap", "--p0", "0.1", "--n", "100"])) == 2


def test_bounds_invalid_input(capsys):
    assert main(["bounds", "beta", "--lambda", "0"]) == 2
    assert "lambda" in capsys.readouterr().err


def test_probe_stability(capsys):
    out = run_json(capsys, ["probe-stability", "--rows", "80", "--sample", "15", "--pairs", "9"])
    assert out["pairs"] == 9 and out["max_ratio_l1"] <= 1 + 1e-6


def test_verify_unbiasedness(capsys, dataset):
    out = run_json(capsys, ["verify-unbiasedness", "--dataset", str(dataset), "--trials", "300"])
    assert out["trials"] == 300 and abs(out["z"]) < 5


def test_solve_kmm(tmp_path, capsys, rng):
    train, pool = tmp_path / "s.csv", tmp_path / "u.csv"
    np.savetxt(train, rng.normal(size=(6, 2)) + 0.5, delimiter=",")
    np.savetxt(pool, rng.normal(size=(20, 2)), delimiter=",")
    out = run_json(capsys, ["solve-kmm", "--train", str(train), "--pool", str(pool), "--b-prime", "10"])
    assert len(out["gamma_hat"]) == 6
    assert sum(out["weights"]) == pytest.approx(1.0)
    assert np.mean(out["gamma_hat"]) == pytest.approx(1.0, abs=1e-10)
