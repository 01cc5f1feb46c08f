import json
import subprocess
import sys

import numpy as np
import pytest

from prefspace.cli import build_parser, main
from prefspace.datagen import load_csv, structures_path
from prefspace.evaluation import read_scores_csv


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "d.csv"
    assert main(["generate", "--per-structure", "30", "--seed", "4", "-o", str(path)]) == 0
    return path


def test_generate_example(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert main(["generate", "--per-structure", "125", "--ratio", "0.5", "--seed", "1", "-o", str(out)]) == 0
    assert "n=500 anomalies=250 seed=1" in capsys.readouterr().out
    data = load_csv(out)
    assert data.n == 500 and int(data.labels.sum()) == 250
    assert structures_path(out).exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["generate"],
        ["generate", "--ratio", "1.5", "-o", "x.csv"],
        ["score", "d.csv", "--method", "nope", "-o", "s.csv"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == 2


def test_missing_input(tmp_path):
    assert main(["score", str(tmp_path / "missing.csv"), "-o", str(tmp_path / "s.csv")]) == 3


def test_malformed_input(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,label\n1,2\n")
    assert main(["score", str(bad), "--sigma", "0.1", "-o", str(tmp_path / "s.csv")]) == 3


def test_score_defaults():
    args = build_parser().parse_args(["score", "d.csv", "-o", "s.csv"])
    assert (args.trees, args.psi, args.pool_mult, args.k) == (100, 256, 10.0, 3.0)


def test_score_pool_size_and_output(dataset, tmp_path, capsys):
    out = tmp_path / "s.csv"
    rc = main(["score", str(dataset), "--trees", "5", "--psi", "32", "--pool-mult", "10", "--seed", "2", "-o", str(out)])
    assert rc == 0
    assert "m=1200" in capsys.readouterr().out  # n = 120
    scores, labels = read_scores_csv(out)
    assert scores.shape == (120,) and ((scores > 0) & (scores <= 1)).all()


def test_score_byte_identical(dataset, tmp_path):
    argv = ["score", str(dataset), "--trees", "4", "--psi", "32", "--method", "pif-r", "--seed", "9"]
    main(argv + ["-o", str(tmp_path / "a.csv")])
    main(argv + ["-o", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_env_seed_fallback(dataset, tmp_path, monkeypatch):
    argv = ["score", str(dataset), "--trees", "4", "--psi", "32"]
    main(argv + ["--seed", "17", "-o", str(tmp_path / "a.csv")])
    monkeypatch.setenv("PREFSPACE_SEED", "17")
    main(argv + ["-o", str(tmp_path / "b.csv")])
    monkeypatch.setenv("PREFSPACE_SEED", "18")
    main(argv + ["-o", str(tmp_path / "c.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_estimate(dataset, capsys):
    assert main(["estimate", str(dataset)]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.05, rel=0.3)


def write_config(path, **kw):
    cfg = {"dataset": {"points_per_structure": 30, "seed": 2}, "methods": ["rhf"], "b_values": [4], "t": 3, "psi": 32}
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return path


def test_bench_empty_methods(tmp_path):
    cfg = write_config(tmp_path / "c.json", methods=[])
    assert main(["bench", str(cfg), "-o", str(tmp_path / "r.json")]) == 2


def test_bench_bad_json(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    assert main(["bench", str(cfg), "-o", str(tmp_path / "r.json")]) == 3


def test_bench_defaults(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"dataset": {"points_per_structure": 128}, "methods": ["rhf-b"], "t": 2}))
    assert main(["bench", str(cfg), "-o", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["config"]["b_values"] == [2, 4, 8, 16, 32, 64, 128, 256]
    assert report["config"]["runs"] == 5
    agg = report["aggregates"]
    assert [a["b"] for a in agg] == [2, 4, 8, 16, 32, 64, 128, 256]
    assert all(len(a["auc_runs"]) == 5 for a in agg)


def test_bench_subprocess(tmp_path):
    cfg = write_config(tmp_path / "c.json", runs=2)
    proc = subprocess.run(
        [sys.executable, "-m", "prefspace.cli", "bench", str(cfg), "-o", str(tmp_path / "r.json"),
         "--scores-dir", str(tmp_path / "scores")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "rhf b=4 run=1" in proc.stderr
    assert sorted(p.name for p in (tmp_path / "scores").iterdir()) == ["rhf_b4_run0.csv", "rhf_b4_run1.csv"]
    scores, _ = read_scores_csv(tmp_path / "scores" / "rhf_b4_run0.csv")
    assert np.isfinite(scores).all()


def test_generate_missing_output_prints_usage(capsys):
    assert main(["generate", "--ratio", "0.5"]) == 2
    assert "usage:" in capsys.readouterr().err


def test_pool_mult_on_default_scene(tmp_path, capsys):
    data = tmp_path / "d.csv"
    main(["generate", "--kind", "lines", "--structures", "2", "--sigma", "0.05", "--ratio", "0.5", "--seed", "7",
          "-o", str(data)])
    assert "n=500 anomalies=250 seed=7" in capsys.readouterr().out
    assert main(["score", str(data), "--pool-mult", "10", "--trees", "2", "--psi", "32", "-o", str(tmp_path / "s.csv")]) == 0
    assert " m=5000 " in capsys.readouterr().out
